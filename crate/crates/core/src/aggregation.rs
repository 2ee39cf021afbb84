//! Collapses the mention-pair vectors of one (event, context type) candidate
//! into a fixed-length vector: per-coordinate mean, then min, then max.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureGroup, FeatureSet, FeatureVocabulary, PairFeatureVector};
use crate::instances::TypeLevelCandidate;

/// Number of summary statistics per coordinate.
pub const STATS: usize = 3;

/// Shape of a densified pair vector: 12 dense columns, then event bigrams,
/// then context bigrams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnLayout {
    pub evt_bigrams: usize,
    pub ctx_bigrams: usize,
}

impl ColumnLayout {
    pub fn of(vocab: &FeatureVocabulary) -> Self {
        ColumnLayout {
            evt_bigrams: vocab.evt.len(),
            ctx_bigrams: vocab.ctx.len(),
        }
    }

    pub fn dense_dim(&self) -> usize {
        PairFeatureVector::DENSE_LEN + self.evt_bigrams + self.ctx_bigrams
    }

    pub fn aggregated_dim(&self) -> usize {
        STATS * self.dense_dim()
    }

    /// Feature group owning column `col` of a densified pair vector.
    pub fn group_of(&self, col: usize) -> FeatureGroup {
        let dense = PairFeatureVector::DENSE_LEN;
        if col < dense {
            FeatureGroup::DENSE[col]
        } else if col < dense + self.evt_bigrams {
            FeatureGroup::EvtSpanningBigrams
        } else {
            FeatureGroup::CtxSpanningBigrams
        }
    }

    /// Indices into the aggregated vector kept by `subset`, in order.
    pub fn columns(&self, subset: FeatureSet) -> Vec<usize> {
        let d = self.dense_dim();
        let keep: Vec<usize> = (0..d)
            .filter(|&c| subset.contains(self.group_of(c)))
            .collect();
        (0..STATS)
            .flat_map(|s| keep.iter().map(move |&c| s * d + c))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedInstance {
    pub paper_id: String,
    pub event_id: String,
    pub grounding_id: String,
    pub vector: Vec<f64>,
    pub label: bool,
    pub layout: ColumnLayout,
}

impl AggregatedInstance {
    pub fn key(&self) -> (&str, &str, &str) {
        (&self.paper_id, &self.event_id, &self.grounding_id)
    }

    pub fn dense_dim(&self) -> usize {
        self.layout.dense_dim()
    }

    pub fn mean(&self) -> &[f64] {
        &self.vector[..self.dense_dim()]
    }

    pub fn min(&self) -> &[f64] {
        let d = self.dense_dim();
        &self.vector[d..2 * d]
    }

    pub fn max(&self) -> &[f64] {
        let d = self.dense_dim();
        &self.vector[2 * d..]
    }

    /// Smallest sentence distance among the candidate's mention pairs.
    pub fn min_sentence_distance(&self) -> f64 {
        self.min()[0]
    }
}

/// Fixed-order dense array: 12 dense features, event-bigram values by
/// vocabulary index, context-bigram values. Unseen bigrams are dropped.
pub fn densify(pair: &PairFeatureVector, vocab: &FeatureVocabulary) -> Vec<f64> {
    let mut out = vec![0.0; vocab.dense_dim()];
    out[..PairFeatureVector::DENSE_LEN].copy_from_slice(&pair.dense());
    vocab.fill(&pair.evt_bigrams, true, &mut out);
    vocab.fill(&pair.ctx_bigrams, false, &mut out);
    out
}

/// mean ⊕ min ⊕ max over equally long rows.
pub fn summarize(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let first = rows
        .first()
        .ok_or_else(|| Error::Domain("cannot aggregate an empty pair list".into()))?;
    let d = first.len();
    let mut out = vec![0.0; STATS * d];
    let (mean, rest) = out.split_at_mut(d);
    let (min, max) = rest.split_at_mut(d);
    min.copy_from_slice(first);
    max.copy_from_slice(first);
    for row in rows {
        if row.len() != d {
            return Err(Error::Dimension {
                expected: d,
                actual: row.len(),
            });
        }
        for j in 0..d {
            mean[j] += row[j];
            min[j] = min[j].min(row[j]);
            max[j] = max[j].max(row[j]);
        }
    }
    let n = rows.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(out)
}

/// Aggregates a candidate given the features of its pairs (aligned with
/// `candidate.pairs`).
pub fn aggregate(
    candidate: &TypeLevelCandidate,
    pair_features: &[PairFeatureVector],
    vocab: &FeatureVocabulary,
) -> Result<AggregatedInstance> {
    if candidate.pairs.is_empty() || pair_features.is_empty() {
        return Err(Error::Domain(format!(
            "candidate ({}, {}, {}) has no mention pairs",
            candidate.paper_id, candidate.event_id, candidate.grounding_id
        )));
    }
    let rows: Vec<Vec<f64>> = pair_features.iter().map(|p| densify(p, vocab)).collect();
    Ok(AggregatedInstance {
        paper_id: candidate.paper_id.clone(),
        event_id: candidate.event_id.clone(),
        grounding_id: candidate.grounding_id.clone(),
        vector: summarize(&rows)?,
        label: candidate.label,
        layout: ColumnLayout::of(vocab),
    })
}

/// Keeps the coordinates of the groups in `subset` (all three statistics of
/// each kept column), preserving order.
pub fn mask_features(instance: &AggregatedInstance, subset: FeatureSet) -> Vec<f64> {
    instance
        .layout
        .columns(subset)
        .into_iter()
        .map(|i| instance.vector[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests::small_doc;
    use crate::features::{extract_pair_features, BigramBag};
    use crate::instances::{build_candidates, MentionPair};

    fn pair() -> PairFeatureVector {
        extract_pair_features(
            MentionPair {
                event: 0,
                context: 0,
            },
            &small_doc(),
        )
    }

    fn vocab(evt: usize, ctx: usize) -> FeatureVocabulary {
        let mut v = FeatureVocabulary::default();
        for i in 0..evt {
            v.evt.insert((format!("e{i}"), "x".into()), i);
        }
        for i in 0..ctx {
            v.ctx.insert((format!("c{i}"), "x".into()), i);
        }
        v
    }

    #[test]
    fn densify_lengths() {
        assert_eq!(densify(&pair(), &vocab(0, 0)).len(), 12);
        assert_eq!(densify(&pair(), &vocab(5, 3)).len(), 20);
    }

    #[test]
    fn densify_places_counts() {
        let mut p = pair();
        p.evt_bigrams = BigramBag::from([(("e0".to_string(), "x".to_string()), 2)]);
        let v = densify(&p, &vocab(5, 3));
        assert_eq!(v[12], 2.0);
        let v = densify(&p, &vocab(5, 3).with_value(crate::features::BigramValue::Indicator));
        assert_eq!(v[12], 1.0);
    }

    #[test]
    fn single_pair_repeats_three_times() {
        let doc = small_doc();
        let cand = &build_candidates(&doc)[0];
        let v = vocab(0, 0);
        let inst = aggregate(cand, &[pair()], &v).unwrap();
        let base = densify(&pair(), &v);
        assert_eq!(inst.vector, [base.clone(), base.clone(), base].concat());
        assert!(inst.label);
    }

    #[test]
    fn two_values_mean_min_max() {
        let out = summarize(&[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(out, vec![2.0, 1.0, 3.0]);
    }

    #[test]
    fn empty_pairs_rejected() {
        let doc = small_doc();
        let mut cand = build_candidates(&doc)[0].clone();
        cand.pairs.clear();
        assert!(aggregate(&cand, &[], &vocab(0, 0)).is_err());
    }

    #[test]
    fn masking() {
        let doc = small_doc();
        let cand = &build_candidates(&doc)[0];
        let inst = aggregate(cand, &[pair()], &vocab(2, 3)).unwrap();
        assert_eq!(mask_features(&inst, FeatureSet::FULL), inst.vector);
        let only_sd = FeatureSet::empty().with(FeatureGroup::SentenceDistance);
        assert_eq!(mask_features(&inst, only_sd).len(), 3);
        let no_ctx = FeatureSet::FULL.without(FeatureGroup::CtxSpanningBigrams);
        assert_eq!(mask_features(&inst, no_ctx).len(), 3 * (12 + 2));
        let layout = inst.layout;
        assert!(layout
            .columns(no_ctx)
            .iter()
            .all(|&c| layout.group_of(c % layout.dense_dim()) != FeatureGroup::CtxSpanningBigrams));
    }
}
