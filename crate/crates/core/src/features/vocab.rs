use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Bigram, BigramBag, FeatureExtractor, PairFeatureVector};
use crate::corpus::Document;
use crate::instances::MentionPair;

/// How a bigram column is valued for a pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BigramValue {
    /// Number of depth-two paths producing the bigram.
    #[default]
    Count,
    /// 1 if the bigram occurs at all.
    Indicator,
}

/// Column indices for the event- and context-bigram namespaces. Indices are
/// contiguous from 0 and follow lexicographic bigram order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureVocabulary {
    pub evt: BTreeMap<Bigram, usize>,
    pub ctx: BTreeMap<Bigram, usize>,
    pub value: BigramValue,
}

fn index(keys: BTreeSet<Bigram>) -> BTreeMap<Bigram, usize> {
    keys.into_iter().enumerate().map(|(i, k)| (k, i)).collect()
}

impl FeatureVocabulary {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = &'a PairFeatureVector>) -> Self {
        let mut evt = BTreeSet::new();
        let mut ctx = BTreeSet::new();
        for p in pairs {
            evt.extend(p.evt_bigrams.keys().cloned());
            ctx.extend(p.ctx_bigrams.keys().cloned());
        }
        FeatureVocabulary {
            evt: index(evt),
            ctx: index(ctx),
            value: BigramValue::Count,
        }
    }

    pub fn with_value(mut self, value: BigramValue) -> Self {
        self.value = value;
        self
    }

    /// Densified length: 12 dense columns plus both bigram namespaces.
    pub fn dense_dim(&self) -> usize {
        PairFeatureVector::DENSE_LEN + self.evt.len() + self.ctx.len()
    }

    fn cell(&self, count: u32) -> f64 {
        match self.value {
            BigramValue::Count => count as f64,
            BigramValue::Indicator => (count > 0) as u8 as f64,
        }
    }

    /// Writes the bigram counts of `bag` into `out` at the namespace's
    /// columns, dropping bigrams outside the vocabulary.
    pub(crate) fn fill(&self, bag: &BigramBag, evt: bool, out: &mut [f64]) {
        let (map, base) = if evt {
            (&self.evt, PairFeatureVector::DENSE_LEN)
        } else {
            (&self.ctx, PairFeatureVector::DENSE_LEN + self.evt.len())
        };
        for (bigram, &n) in bag {
            if let Some(&i) = map.get(bigram) {
                out[base + i] = self.cell(n);
            }
        }
    }
}

/// Vocabulary of every bigram observed in the mention pairs of the given
/// training documents.
pub fn build_vocabulary(training: &[&Document]) -> FeatureVocabulary {
    let mut vectors = Vec::new();
    for doc in training {
        let extractor = FeatureExtractor::new(doc);
        for event in 0..doc.events.len() {
            for context in 0..doc.contexts.len() {
                vectors.push(extractor.extract(MentionPair { event, context }));
            }
        }
    }
    FeatureVocabulary::from_pairs(&vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::small_doc;

    fn pair_with(evt: &[(&str, &str)], ctx: &[(&str, &str)]) -> PairFeatureVector {
        let bag = |xs: &[(&str, &str)]| -> BigramBag {
            xs.iter()
                .map(|(a, b)| ((a.to_string(), b.to_string()), 1))
                .collect()
        };
        let mut p = crate::features::extract_pair_features(
            MentionPair {
                event: 0,
                context: 0,
            },
            &small_doc(),
        );
        p.evt_bigrams = bag(evt);
        p.ctx_bigrams = bag(ctx);
        p
    }

    #[test]
    fn empty_when_no_bigrams() {
        let v = FeatureVocabulary::from_pairs(&[pair_with(&[], &[])]);
        assert!(v.evt.is_empty() && v.ctx.is_empty());
        assert_eq!(v.dense_dim(), 12);
    }

    #[test]
    fn lexicographic_indices() {
        let v = FeatureVocabulary::from_pairs(&[
            pair_with(&[("a", "c")], &[]),
            pair_with(&[("a", "b")], &[]),
        ]);
        assert_eq!(v.evt[&("a".to_string(), "b".to_string())], 0);
        assert_eq!(v.evt[&("a".to_string(), "c".to_string())], 1);
    }

    #[test]
    fn unseen_bigram_contributes_nothing() {
        let v = FeatureVocabulary::from_pairs(&[pair_with(&[("a", "b")], &[])]);
        let test = pair_with(&[("x", "y")], &[("x", "y")]);
        let mut out = vec![0.0; v.dense_dim()];
        v.fill(&test.evt_bigrams, true, &mut out);
        v.fill(&test.ctx_bigrams, false, &mut out);
        assert!(out.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn vocabulary_from_documents() {
        let doc = small_doc();
        let v = build_vocabulary(&[&doc]);
        assert_eq!(v.ctx.len(), 1);
        assert!(v.evt.is_empty());
    }
}
