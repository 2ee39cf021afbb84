//! Property checks shared by the `properties` and `acceptance` targets.
//! Each check runs a fixed number of deterministic random cases and returns
//! the first counterexample as an error.

#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::seq::SliceRandom;

use ctxlink::aggregation::summarize;
use ctxlink::agreement::{fleiss_kappa, RatingTable};
use ctxlink::classifiers::{baseline_predict, gradient_check, BaselineModel, ModelKind, TrainConfig};
use ctxlink::corpus::{Corpus, DependencyEdge, Sentence, Token};
use ctxlink::eval::{
    generate_synthetic_corpus, make_folds, micro_metrics, prepare_documents, FoldData, Metrics,
    SynthParams,
};
use ctxlink::features::graph::dependency_distance_between;
use ctxlink::features::{spanning_bigrams, BigramValue, FeatureSet, SentenceGraph};
use ctxlink::instances::build_candidates;

pub type Check = Result<(), String>;

pub const CASES: u32 = 1000;
pub const GRADIENT_TOLERANCE: f64 = 1e-4;
pub const KAPPA_TOLERANCE: f64 = 1e-12;

const LABELS: [&str; 4] = ["nsubj", "dobj", "amod", "neg"];

fn run<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Check {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    TestRunner::new_with_rng(config, rng)
        .run(&strategy, test)
        .map_err(|e| e.to_string())
}

/// Random multigraph on up to `max_nodes` nodes: no self loops, possibly
/// disconnected.
fn sentence_strategy(max_nodes: usize) -> impl Strategy<Value = Sentence> {
    (1..=max_nodes).prop_flat_map(|n| {
        let edge = (0..n, 0..n, 0..LABELS.len());
        (Just(n), prop::collection::vec(edge, 0..=2 * n), 0..n).prop_map(|(n, raw, root)| {
            Sentence {
                tokens: (0..n)
                    .map(|i| Token {
                        word: format!("w{i}"),
                        pos: "NN".into(),
                    })
                    .collect(),
                edges: raw
                    .into_iter()
                    .filter(|(h, d, _)| h != d)
                    .map(|(head, dependent, l)| DependencyEdge {
                        head,
                        dependent,
                        label: LABELS[l].into(),
                    })
                    .collect(),
                root,
            }
        })
    })
}

/// All-pairs shortest paths by Floyd-Warshall over an undirected edge list.
fn floyd(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<Option<usize>>> {
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for &(a, b) in edges {
        d[a][b] = Some(1);
        d[b][a] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(x), Some(y)) = (d[i][k], d[k][j]) {
                    if d[i][j].map_or(true, |c| x + y < c) {
                        d[i][j] = Some(x + y);
                    }
                }
            }
        }
    }
    d
}

fn edge_list(s: &Sentence, offset: usize) -> Vec<(usize, usize)> {
    s.edges
        .iter()
        .map(|e| (e.head + offset, e.dependent + offset))
        .collect()
}

pub fn dependency_distance_oracle() -> Check {
    let strategy = (
        sentence_strategy(12),
        sentence_strategy(12),
        any::<prop::sample::Index>(),
        any::<prop::sample::Index>(),
    );
    run(strategy, |(a, b, ia, ib)| {
        let (na, nb) = (a.len(), b.len());
        let ga = SentenceGraph::new(&a);
        let gb = SentenceGraph::new(&b);

        let (x, y) = (ia.index(na), ib.index(na));
        let got = dependency_distance_between(&ga, x, &ga, y, true);
        match floyd(na, &edge_list(&a, 0))[x][y] {
            Some(d) => prop_assert_eq!((got.edges, got.connected), (d, true)),
            None => prop_assert_eq!((got.edges, got.connected), (na, false)),
        }

        // different sentences are joined by one root-root edge
        let y = ib.index(nb);
        let mut joined = edge_list(&a, 0);
        joined.extend(edge_list(&b, na));
        joined.push((a.root, na + b.root));
        let got = dependency_distance_between(&ga, x, &gb, y, false);
        match floyd(na + nb, &joined)[x][na + y] {
            Some(d) => prop_assert_eq!((got.edges, got.connected), (d, true)),
            None => prop_assert_eq!((got.edges, got.connected), (na + nb, false)),
        }
        Ok(())
    })
}

pub fn spanning_bigram_oracle() -> Check {
    run((sentence_strategy(12), any::<prop::sample::Index>()), |(s, h)| {
        let head = h.index(s.len());
        let joins = |e: &DependencyEdge, u: usize, v: usize| {
            (e.head == u && e.dependent == v) || (e.head == v && e.dependent == u)
        };
        let mut expected: BTreeMap<(String, String), u32> = BTreeMap::new();
        for x in 0..s.len() {
            for y in 0..s.len() {
                if x == head || y == head {
                    continue;
                }
                for (i, e1) in s.edges.iter().enumerate() {
                    for (j, e2) in s.edges.iter().enumerate() {
                        if i != j && joins(e1, head, x) && joins(e2, x, y) {
                            *expected
                                .entry((e1.label.clone(), e2.label.clone()))
                                .or_default() += 1;
                        }
                    }
                }
            }
        }
        prop_assert_eq!(spanning_bigrams(head, &s), expected);
        Ok(())
    })
}

/// Feature values are small integers, so the mean is exact in any order.
pub fn aggregation_invariants() -> Check {
    let rows = (1usize..8)
        .prop_flat_map(|d| prop::collection::vec(prop::collection::vec(0u8..20, d), 1..10));
    run((rows, any::<u64>()), |(rows, seed)| {
        let rows: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| f64::from(v)).collect())
            .collect();
        let d = rows[0].len();
        let out = summarize(&rows).unwrap();
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut ctxlink::seed::rng(seed));
        prop_assert_eq!(&summarize(&shuffled).unwrap(), &out);
        for j in 0..d {
            let (mean, min, max) = (out[j], out[d + j], out[2 * d + j]);
            prop_assert!(min <= mean && mean <= max, "column {}: {} {} {}", j, min, mean, max);
        }
        Ok(())
    })
}

pub fn fleiss_kappa_oracle() -> Check {
    let tables = (2usize..7)
        .prop_flat_map(|r| prop::collection::vec(prop::collection::vec(any::<bool>(), r), 1..30));
    run(tables, |table| {
        let r = table[0].len();
        let n = table.len();
        // agreement of an item = agreeing ordered rater pairs / all ordered pairs
        let mut p_bar = 0.0;
        let mut yes = 0usize;
        for row in &table {
            let mut agree = 0usize;
            for a in 0..r {
                for b in 0..r {
                    if a != b && row[a] == row[b] {
                        agree += 1;
                    }
                }
            }
            p_bar += agree as f64 / (r * (r - 1)) as f64;
            yes += row.iter().filter(|&&v| v).count();
        }
        p_bar /= n as f64;
        let p = yes as f64 / (n * r) as f64;
        let p_e = p * p + (1.0 - p) * (1.0 - p);
        let got = fleiss_kappa(&RatingTable::new(table).unwrap()).value();
        if yes == 0 || yes == n * r {
            prop_assert_eq!(got, None);
        } else {
            let expected = (p_bar - p_e) / (1.0 - p_e);
            let got = got.unwrap();
            prop_assert!((got - expected).abs() <= KAPPA_TOLERANCE, "{} vs {}", got, expected);
        }
        Ok(())
    })
}

pub fn pooled_metrics_oracle() -> Check {
    let folds = prop::collection::vec(
        prop::collection::vec((any::<bool>(), any::<bool>()), 0..40),
        1..10,
    );
    run(folds, |folds| {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        let mut parts = Vec::new();
        let (mut all_p, mut all_g) = (Vec::new(), Vec::new());
        for fold in &folds {
            let (p, g): (Vec<bool>, Vec<bool>) = fold.iter().copied().unzip();
            for (&a, &b) in p.iter().zip(&g) {
                tp += usize::from(a && b);
                fp += usize::from(a && !b);
                fn_ += usize::from(!a && b);
            }
            parts.push(micro_metrics(&p, &g).unwrap());
            all_p.extend(p);
            all_g.extend(g);
        }
        let pooled = Metrics::pool(&parts);
        prop_assert_eq!(pooled, micro_metrics(&all_p, &all_g).unwrap());
        prop_assert_eq!((pooled.tp, pooled.fp, pooled.fn_), (tp, fp, fn_));
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        prop_assert_eq!(pooled.precision, precision);
        prop_assert_eq!(pooled.recall, recall);
        let f1 = if tp == 0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        prop_assert_eq!(pooled.f1, f1);
        Ok(())
    })
}

pub fn synth(seed: u64, papers: usize) -> Corpus {
    generate_synthetic_corpus(&SynthParams {
        seed,
        n_papers: papers,
        ..Default::default()
    })
    .unwrap()
}

pub fn baseline_monotone() -> Check {
    for seed in 0..5 {
        let corpus = synth(seed, 6);
        for doc in &corpus.documents {
            for cand in build_candidates(doc) {
                let mut previous = false;
                for k in 0..=6 {
                    let now = baseline_predict(BaselineModel::new(k).unwrap(), &cand, doc);
                    if previous && !now {
                        return Err(format!("{:?} dropped at k = {k}", cand.key()));
                    }
                    previous = now;
                }
            }
        }
    }
    for d in 0..10 {
        for k in 0..6u8 {
            let m = |k| BaselineModel::new(k).unwrap().predict_distance(f64::from(d));
            if m(k) && !m(k + 1) {
                return Err(format!("distance {d} dropped at k = {}", k + 1));
            }
        }
    }
    Ok(())
}

pub fn gradients() -> Check {
    for kind in [
        ModelKind::LogisticRegression,
        ModelKind::LinearSvm,
        ModelKind::FeedForwardNn,
    ] {
        for seed in 0..20 {
            let err = gradient_check(kind, seed).map_err(|e| e.to_string())?;
            if err >= GRADIENT_TOLERANCE {
                return Err(format!("{kind} seed {seed}: relative error {err:e}"));
            }
        }
    }
    Ok(())
}

/// Replaces every validation and test paper with unrelated text under the
/// same id, then checks that everything learned from training papers is
/// bit-identical.
pub fn no_leak() -> Check {
    let corpus = synth(11, 8);
    let other = synth(99, 8);
    let spec = make_folds(&corpus, 5).map_err(|e| e.to_string())?.remove(0);
    let mut perturbed = corpus.clone();
    for (k, doc) in perturbed.documents.iter_mut().enumerate() {
        if doc.paper_id == spec.test || spec.validation.contains(&doc.paper_id) {
            let id = doc.paper_id.clone();
            *doc = other.documents[(k + 1) % other.documents.len()].clone();
            doc.paper_id = id;
        }
    }
    if perturbed == corpus {
        return Err("perturbation changed nothing".into());
    }

    let prepare = |c: &Corpus| {
        FoldData::prepare(&prepare_documents(c), spec.clone(), BigramValue::Count)
            .map_err(|e| e.to_string())
    };
    let (a, b) = (prepare(&corpus)?, prepare(&perturbed)?);
    if a.vocab != b.vocab {
        return Err("vocabulary depends on held-out papers".into());
    }
    if a.standardizer != b.standardizer {
        return Err("standardizer depends on held-out papers".into());
    }
    if a.train != b.train {
        return Err("training instances depend on held-out papers".into());
    }
    if a.test == b.test {
        return Err("test instances did not change".into());
    }
    for kind in [
        ModelKind::LogisticRegression,
        ModelKind::LinearSvm,
        ModelKind::RandomForest,
        ModelKind::FeedForwardNn,
    ] {
        let mut config = TrainConfig::new(kind, 17);
        config.hyper.forest.trees = 10;
        config.hyper.mlp.epochs = 10;
        config.hyper.svm.epochs = 20;
        let ma = a.fit(&config, FeatureSet::FULL).map_err(|e| e.to_string())?;
        let mb = b.fit(&config, FeatureSet::FULL).map_err(|e| e.to_string())?;
        let bits = |m: &ctxlink::classifiers::TrainedModel| serde_json::to_string(m).unwrap();
        if ma != mb || bits(&ma) != bits(&mb) {
            return Err(format!("{kind} parameters depend on held-out papers"));
        }
    }
    Ok(())
}

/// Every criterion-6 suite, in a fixed order.
pub const SUITES: [(&str, fn() -> Check); 8] = [
    ("dependency distance = Floyd-Warshall oracle", dependency_distance_oracle),
    ("spanning bigrams = 2-path enumeration", spanning_bigram_oracle),
    ("aggregation permutation invariance, min <= mean <= max", aggregation_invariants),
    ("baseline monotone in k", baseline_monotone),
    ("gradient checks LR/SVM/NN", gradients),
    ("micro metrics = hand-pooled counts", pooled_metrics_oracle),
    ("Fleiss kappa = pairwise-agreement oracle", fleiss_kappa_oracle),
    ("no leak from validation/test papers", no_leak),
];
