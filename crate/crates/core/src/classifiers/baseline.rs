//! Deterministic sentence-window baseline: a context type is associated with
//! an event iff one of its mentions lies within `k` sentences of the event.

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::instances::TypeLevelCandidate;

pub const MAX_K: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineModel {
    k: u8,
}

impl BaselineModel {
    pub fn new(k: u8) -> Result<Self> {
        if k > MAX_K {
            return Err(Error::Config(format!(
                "baseline window {k} outside [0, {MAX_K}]"
            )));
        }
        Ok(BaselineModel { k })
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    /// Window rule applied to the smallest event–mention sentence distance.
    pub fn predict_distance(&self, min_sentence_distance: f64) -> bool {
        min_sentence_distance <= self.k as f64
    }
}

/// True iff some mention of the candidate's type sits in a sentence inside
/// `[event_sentence - k, event_sentence + k]`.
pub fn baseline_predict(model: BaselineModel, candidate: &TypeLevelCandidate, doc: &Document) -> bool {
    candidate.pairs.iter().any(|p| {
        let evt = p.event(doc).sentence as i64;
        let ctx = p.context(doc).sentence as i64;
        let k = model.k as i64;
        (evt - k..=evt + k).contains(&ctx)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::small_doc;
    use crate::corpus::{ContextCategory, ContextMention};
    use crate::instances::build_candidates;

    fn doc_with_mentions(sentences: &[usize]) -> Document {
        let mut doc = small_doc();
        let template = doc.sentences[0].clone();
        while doc.sentences.len() < 8 {
            doc.sentences.push(template.clone());
        }
        doc.events[0].sentence = 0;
        doc.contexts = sentences
            .iter()
            .enumerate()
            .map(|(i, &s)| ContextMention {
                id: format!("C{i}"),
                sentence: s,
                start: 0,
                end: 1,
                grounding_id: "g".into(),
                category: ContextCategory::Species,
            })
            .collect();
        doc.gold.clear();
        doc
    }

    fn predict(k: u8, sentences: &[usize]) -> bool {
        let doc = doc_with_mentions(sentences);
        let cand = &build_candidates(&doc)[0];
        baseline_predict(BaselineModel::new(k).unwrap(), cand, &doc)
    }

    #[test]
    fn same_sentence_with_zero_window() {
        assert!(predict(0, &[0]));
    }

    #[test]
    fn too_far_for_window() {
        assert!(!predict(2, &[3]));
    }

    #[test]
    fn nearest_mention_decides() {
        assert!(predict(2, &[5, 1]));
    }

    #[test]
    fn window_bounds() {
        assert!(BaselineModel::new(6).is_ok());
        assert!(BaselineModel::new(7).is_err());
    }
}
