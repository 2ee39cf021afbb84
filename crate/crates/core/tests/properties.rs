mod common;

use ctxlink::corpus::{read_corpus, write_corpus};
use ctxlink::instances::build_candidates;

#[test]
fn dependency_distance_matches_floyd_warshall() {
    common::dependency_distance_oracle().unwrap();
}

#[test]
fn spanning_bigrams_match_path_enumeration() {
    common::spanning_bigram_oracle().unwrap();
}

#[test]
fn aggregation_is_order_free_and_bounded() {
    common::aggregation_invariants().unwrap();
}

#[test]
fn baseline_is_monotone_in_k() {
    common::baseline_monotone().unwrap();
}

#[test]
fn gradients_match_finite_differences() {
    common::gradients().unwrap();
}

#[test]
fn pooled_metrics_equal_hand_counts() {
    common::pooled_metrics_oracle().unwrap();
}

#[test]
fn fleiss_kappa_matches_pairwise_definition() {
    common::fleiss_kappa_oracle().unwrap();
}

#[test]
fn held_out_papers_do_not_leak_into_training() {
    common::no_leak().unwrap();
}

#[test]
fn corpus_round_trips_through_disk() {
    let corpus = common::synth(3, 6);
    let dir = tempfile::tempdir().unwrap();
    write_corpus(dir.path(), &corpus).unwrap();
    assert_eq!(read_corpus(dir.path()).unwrap(), corpus);
}

#[test]
fn removing_one_gold_link_flips_at_most_one_label() {
    let corpus = common::synth(4, 6);
    let doc = &corpus.documents[0];
    let before = build_candidates(doc);
    for i in 0..doc.gold.len() {
        let mut changed = doc.clone();
        let removed = changed.gold.remove(i);
        let grounding = &doc.context(&removed.context_mention_id).unwrap().grounding_id;
        let still_linked = changed.gold.iter().any(|g| {
            g.event_id == removed.event_id
                && &doc.context(&g.context_mention_id).unwrap().grounding_id == grounding
        });
        let diffs: Vec<(String, String)> = before
            .iter()
            .zip(build_candidates(&changed))
            .filter(|(a, b)| a.label != b.label)
            .map(|(a, _)| (a.event_id.clone(), a.grounding_id.clone()))
            .collect();
        if still_linked {
            assert!(diffs.is_empty());
        } else {
            assert_eq!(diffs, vec![(removed.event_id.clone(), grounding.clone())]);
        }
    }
}
