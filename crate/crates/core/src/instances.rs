//! Type-level candidate generation.
//!
//! Every event is paired with every distinct context type (grounding ID) in
//! its document. A candidate is positive iff some gold association links the
//! event to a mention of that type; all mentions of the type then count as
//! evidence.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::corpus::{ContextMention, Document, EventMention};

/// An (event mention, context mention) pair, by index into the document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MentionPair {
    pub event: usize,
    pub context: usize,
}

impl MentionPair {
    pub fn event<'d>(&self, doc: &'d Document) -> &'d EventMention {
        &doc.events[self.event]
    }

    pub fn context<'d>(&self, doc: &'d Document) -> &'d ContextMention {
        &doc.contexts[self.context]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeLevelCandidate {
    pub paper_id: String,
    pub event_id: String,
    pub grounding_id: String,
    pub pairs: Vec<MentionPair>,
    pub label: bool,
}

impl TypeLevelCandidate {
    pub fn key(&self) -> (&str, &str, &str) {
        (&self.paper_id, &self.event_id, &self.grounding_id)
    }
}

/// Maps each event id to the grounding IDs of the context mentions it is
/// gold-linked to. Events without links map to the empty set.
pub fn project_gold(doc: &Document) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = doc
        .events
        .iter()
        .map(|e| (e.id.clone(), BTreeSet::new()))
        .collect();
    for link in &doc.gold {
        if let (Some(set), Some(ctx)) = (
            out.get_mut(&link.event_id),
            doc.context(&link.context_mention_id),
        ) {
            set.insert(ctx.grounding_id.clone());
        }
    }
    out
}

/// One candidate per (event, distinct grounding ID). Output order: events in
/// document order, grounding IDs lexicographic.
pub fn build_candidates(doc: &Document) -> Vec<TypeLevelCandidate> {
    let gold = project_gold(doc);
    let mut by_type: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (ci, ctx) in doc.contexts.iter().enumerate() {
        by_type.entry(ctx.grounding_id.as_str()).or_default().push(ci);
    }
    let mut out = Vec::with_capacity(doc.events.len() * by_type.len());
    for (ei, event) in doc.events.iter().enumerate() {
        let linked = &gold[&event.id];
        for (grounding, mentions) in &by_type {
            out.push(TypeLevelCandidate {
                paper_id: doc.paper_id.clone(),
                event_id: event.id.clone(),
                grounding_id: (*grounding).to_string(),
                pairs: mentions
                    .iter()
                    .map(|&ci| MentionPair {
                        event: ei,
                        context: ci,
                    })
                    .collect(),
                label: linked.contains(*grounding),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CandidateCounts {
    pub positive: usize,
    pub negative: usize,
}

impl CandidateCounts {
    pub fn of(candidates: &[TypeLevelCandidate]) -> Self {
        let positive = candidates.iter().filter(|c| c.label).count();
        CandidateCounts {
            positive,
            negative: candidates.len() - positive,
        }
    }

    pub fn total(&self) -> usize {
        self.positive + self.negative
    }
}

impl std::ops::AddAssign for CandidateCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.positive += rhs.positive;
        self.negative += rhs.negative;
    }
}

#[derive(Serialize)]
struct CandidateLine<'a> {
    paper_id: &'a str,
    event_id: &'a str,
    grounding_id: &'a str,
    label: bool,
    event_sentence: usize,
    context_sentences: Vec<usize>,
    context_mentions: Vec<&'a str>,
}

/// Renders a candidate as one JSON-lines record.
pub fn candidate_json_line(doc: &Document, candidate: &TypeLevelCandidate) -> String {
    let event_sentence = candidate
        .pairs
        .first()
        .map(|p| p.event(doc).sentence)
        .unwrap_or_default();
    let line = CandidateLine {
        paper_id: &candidate.paper_id,
        event_id: &candidate.event_id,
        grounding_id: &candidate.grounding_id,
        label: candidate.label,
        event_sentence,
        context_sentences: candidate
            .pairs
            .iter()
            .map(|p| p.context(doc).sentence)
            .collect(),
        context_mentions: candidate
            .pairs
            .iter()
            .map(|p| p.context(doc).id.as_str())
            .collect(),
    };
    serde_json::to_string(&line).expect("candidate line serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::small_doc;
    use crate::corpus::{ContextCategory, GoldAssociation};

    fn ctx(id: &str, sentence: usize, grounding: &str) -> ContextMention {
        ContextMention {
            id: id.into(),
            sentence,
            start: 0,
            end: 1,
            grounding_id: grounding.into(),
            category: ContextCategory::Species,
        }
    }

    fn doc_with_types() -> Document {
        let mut doc = small_doc();
        doc.events.push(EventMention {
            id: "E2".into(),
            sentence: 1,
            start: 2,
            end: 3,
        });
        doc.contexts = vec![
            ctx("C1", 1, "taxonomy:9606"),
            ctx("C2", 0, "taxonomy:10090"),
            ctx("C3", 1, "cellosaurus:CVCL_0030"),
            ctx("C4", 0, "taxonomy:9606"),
        ];
        doc
    }

    #[test]
    fn single_annotation_projects_to_its_grounding() {
        let gold = project_gold(&small_doc());
        assert_eq!(gold["E1"], BTreeSet::from(["taxonomy:9606".to_string()]));
    }

    #[test]
    fn unlinked_event_maps_to_empty_set() {
        let gold = project_gold(&doc_with_types());
        assert!(gold["E2"].is_empty());
    }

    #[test]
    fn two_links_same_grounding_collapse() {
        let mut doc = doc_with_types();
        doc.gold.push(GoldAssociation {
            event_id: "E1".into(),
            context_mention_id: "C4".into(),
        });
        assert_eq!(project_gold(&doc)["E1"].len(), 1);
    }

    #[test]
    fn cross_product_of_events_and_types() {
        let cands = build_candidates(&doc_with_types());
        assert_eq!(cands.len(), 6);
        let counts = CandidateCounts::of(&cands);
        assert_eq!(counts.positive, 1);
        assert_eq!(counts.negative, 5);
    }

    #[test]
    fn positive_candidate_carries_every_mention_of_its_type() {
        let mut doc = doc_with_types();
        doc.contexts.push(ctx("C5", 0, "taxonomy:9606"));
        doc.contexts.push(ctx("C6", 1, "taxonomy:9606"));
        let cands = build_candidates(&doc);
        let pos: Vec<_> = cands.iter().filter(|c| c.label).collect();
        assert_eq!(pos.len(), 1);
        assert_eq!(pos[0].pairs.len(), 4);
        assert_eq!(pos[0].grounding_id, "taxonomy:9606");
    }

    #[test]
    fn document_without_contexts_yields_nothing() {
        let mut doc = small_doc();
        doc.contexts.clear();
        doc.gold.clear();
        assert!(build_candidates(&doc).is_empty());
    }

    #[test]
    fn json_line_lists_pair_sentences() {
        let doc = doc_with_types();
        let cands = build_candidates(&doc);
        let line = candidate_json_line(&doc, &cands[0]);
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["event_id"], "E1");
        assert!(v["context_sentences"].is_array());
    }
}
