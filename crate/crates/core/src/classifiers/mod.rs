//! Binary classifiers over aggregated instances, all behind [`train`] and
//! [`predict`]: the window baseline, L2 logistic regression, linear SVM,
//! random forest and a one-hidden-layer feed-forward network.

pub mod baseline;
pub mod forest;
pub mod logistic;
pub mod mlp;
pub mod standardize;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::aggregation::AggregatedInstance;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::matrix::{dot, sigmoid, Matrix};
use crate::seed;

pub use baseline::{baseline_predict, BaselineModel};
pub use forest::{Forest, ForestParams};
pub use logistic::LogisticParams;
pub use mlp::{Mlp, MlpParams};
pub use standardize::Standardizer;
pub use svm::SvmParams;

/// Decision threshold on scores.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Baseline,
    LogisticRegression,
    LinearSvm,
    RandomForest,
    FeedForwardNn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Baseline,
        ModelKind::LogisticRegression,
        ModelKind::LinearSvm,
        ModelKind::RandomForest,
        ModelKind::FeedForwardNn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Baseline => "baseline",
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::LinearSvm => "linear_svm",
            ModelKind::RandomForest => "random_forest",
            ModelKind::FeedForwardNn => "feed_forward_nn",
        }
    }

    pub fn is_trainable(self) -> bool {
        self != ModelKind::Baseline
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s.to_ascii_lowercase().as_str() {
            "baseline" => ModelKind::Baseline,
            "logistic_regression" | "lr" => ModelKind::LogisticRegression,
            "linear_svm" | "svm" => ModelKind::LinearSvm,
            "random_forest" | "rf" => ModelKind::RandomForest,
            "feed_forward_nn" | "nn" | "mlp" => ModelKind::FeedForwardNn,
            _ => return Err(Error::Config(format!("unknown model kind {s:?}"))),
        };
        Ok(kind)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub logistic: LogisticParams,
    pub svm: SvmParams,
    pub forest: ForestParams,
    pub mlp: MlpParams,
    /// Fixed baseline window; `None` selects it on the training data.
    pub baseline_k: Option<u8>,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("logistic.l2", self.logistic.l2 >= 0.0),
            ("logistic.max_iter", self.logistic.max_iter > 0),
            ("logistic.tolerance", self.logistic.tolerance > 0.0),
            ("svm.l2", self.svm.l2 >= 0.0),
            ("svm.epochs", self.svm.epochs > 0),
            ("svm.step", self.svm.step > 0.0),
            ("forest.trees", self.forest.trees > 0),
            ("forest.max_depth", self.forest.max_depth > 0),
            ("forest.min_samples_split", self.forest.min_samples_split > 0),
            ("mlp.hidden", self.mlp.hidden > 0),
            ("mlp.batch_size", self.mlp.batch_size > 0),
            ("mlp.learning_rate", self.mlp.learning_rate > 0.0),
            ("mlp.epochs", self.mlp.epochs > 0),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, ok)| !ok) {
            return Err(Error::Config(format!("hyperparameter {name} must be positive")));
        }
        if let Some(k) = self.baseline_k {
            BaselineModel::new(k)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub hyper: Hyperparams,
    pub rng_seed: u64,
    pub class_weighting: bool,
}

impl TrainConfig {
    pub fn new(kind: ModelKind, rng_seed: u64) -> Self {
        TrainConfig {
            kind,
            hyper: Hyperparams::default(),
            rng_seed,
            class_weighting: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    Baseline { k: u8 },
    Linear { weights: Vec<f64>, bias: f64 },
    Forest(Forest),
    Network(Mlp),
}

impl ModelParams {
    /// Score in `[0, 1]` for an already standardized input row.
    pub fn score(&self, x: &[f64]) -> f64 {
        match self {
            ModelParams::Baseline { k } => {
                if x[0] <= *k as f64 {
                    1.0
                } else {
                    0.0
                }
            }
            ModelParams::Linear { weights, bias } => sigmoid(dot(weights, x) + bias),
            ModelParams::Forest(f) => f.score(x),
            ModelParams::Network(n) => n.forward(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub label: bool,
    pub score: f64,
}

impl Prediction {
    pub fn from_score(score: f64) -> Self {
        Prediction {
            label: score >= THRESHOLD,
            score,
        }
    }
}

/// A fitted classifier with everything needed to score a raw aggregated
/// vector: the selected columns, the standardizer and the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub config: TrainConfig,
    pub feature_subset: FeatureSet,
    /// Indices into the full aggregated vector, in model input order.
    pub columns: Vec<usize>,
    pub standardizer: Standardizer,
    pub params: ModelParams,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl TrainedModel {
    pub fn input_dim(&self) -> usize {
        self.columns.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Per-class loss weights `[negative, positive]`, inversely proportional to
/// class frequency when enabled.
pub fn class_weights(y: &[bool], enabled: bool) -> [f64; 2] {
    if !enabled {
        return [1.0, 1.0];
    }
    let n = y.len() as f64;
    let pos = y.iter().filter(|&&t| t).count() as f64;
    let neg = n - pos;
    let w = |c: f64| if c > 0.0 { n / (2.0 * c) } else { 1.0 };
    [w(neg), w(pos)]
}

#[derive(Debug, Clone)]
pub struct Fitted {
    pub params: ModelParams,
    pub warnings: Vec<String>,
}

/// Fits a trainable model on standardized rows.
pub fn fit_standardized(config: &TrainConfig, x: &Matrix, y: &[bool]) -> Result<Fitted> {
    if x.rows() == 0 {
        return Err(Error::Training("empty training set".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            actual: y.len(),
        });
    }
    let positives = y.iter().filter(|&&t| t).count();
    let single_class = positives == 0 || positives == y.len();
    let mut warnings = Vec::new();
    if single_class {
        if config.kind == ModelKind::RandomForest {
            warnings.push("single-class training set; forest is a constant predictor".into());
        } else {
            return Err(Error::Training(format!(
                "{} needs both classes in the training set",
                config.kind
            )));
        }
    }
    let cw = class_weights(y, config.class_weighting);
    let sw: Vec<f64> = y.iter().map(|&t| cw[t as usize]).collect();
    let mut rng = seed::rng(config.rng_seed);
    let params = match config.kind {
        ModelKind::Baseline => {
            return Err(Error::Training(
                "the baseline is selected, not fitted; use train()".into(),
            ))
        }
        ModelKind::LogisticRegression => {
            let (weights, bias, _) = logistic::fit(x, y, &sw, &config.hyper.logistic);
            ModelParams::Linear { weights, bias }
        }
        ModelKind::LinearSvm => {
            let (weights, bias) = svm::fit(x, y, &sw, &config.hyper.svm, &mut rng);
            ModelParams::Linear { weights, bias }
        }
        ModelKind::RandomForest => ModelParams::Forest(forest::fit(
            x,
            y,
            cw,
            &config.hyper.forest,
            rng.gen(),
        )),
        ModelKind::FeedForwardNn => {
            ModelParams::Network(mlp::fit(x, y, &sw, &config.hyper.mlp, &mut rng))
        }
    };
    Ok(Fitted { params, warnings })
}

fn f1_of(pred: impl Iterator<Item = bool>, gold: &[bool]) -> f64 {
    let (mut tp, mut fp, mut fnn) = (0usize, 0usize, 0usize);
    for (p, &g) in pred.zip(gold) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fnn += 1,
            _ => {}
        }
    }
    let denom = 2 * tp + fp + fnn;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Window in `[0, 6]` maximizing F1 on the given (distance, label) data;
/// smaller window on ties.
pub fn select_baseline_k(min_distances: &[f64], gold: &[bool]) -> u8 {
    let mut best = (0u8, f64::NEG_INFINITY);
    for k in 0..=baseline::MAX_K {
        let f1 = f1_of(min_distances.iter().map(|&d| d <= k as f64), gold);
        if f1 > best.1 {
            best = (k, f1);
        }
    }
    best.0
}

/// Trains on all feature groups.
pub fn train(config: &TrainConfig, instances: &[AggregatedInstance]) -> Result<TrainedModel> {
    train_subset(config, instances, FeatureSet::FULL)
}

/// Trains on the columns of `subset`. Instances are first ordered by
/// (paper_id, event_id, grounding_id) so the result does not depend on input
/// order.
pub fn train_subset(
    config: &TrainConfig,
    instances: &[AggregatedInstance],
    subset: FeatureSet,
) -> Result<TrainedModel> {
    config.hyper.validate()?;
    let first = instances
        .first()
        .ok_or_else(|| Error::Training("empty training set".into()))?;
    if subset.is_empty() {
        return Err(Error::Config("empty feature subset".into()));
    }
    let layout = first.layout;
    if let Some(bad) = instances.iter().find(|i| i.layout != layout) {
        return Err(Error::Dimension {
            expected: layout.aggregated_dim(),
            actual: bad.vector.len(),
        });
    }
    let mut sorted: Vec<&AggregatedInstance> = instances.iter().collect();
    sorted.sort_by(|a, b| a.key().cmp(&b.key()));
    let y: Vec<bool> = sorted.iter().map(|i| i.label).collect();

    if config.kind == ModelKind::Baseline {
        let distances: Vec<f64> = sorted.iter().map(|i| i.min_sentence_distance()).collect();
        let k = match config.hyper.baseline_k {
            Some(k) => k,
            None => select_baseline_k(&distances, &y),
        };
        return Ok(TrainedModel {
            kind: ModelKind::Baseline,
            config: *config,
            feature_subset: FeatureSet::empty().with(crate::features::FeatureGroup::SentenceDistance),
            columns: vec![layout.dense_dim()],
            standardizer: Standardizer::identity(1),
            params: ModelParams::Baseline { k },
            warnings: Vec::new(),
        });
    }

    let columns = layout.columns(subset);
    let rows: Vec<Vec<f64>> = sorted
        .iter()
        .map(|i| columns.iter().map(|&c| i.vector[c]).collect())
        .collect();
    let raw = Matrix::from_rows(&rows, columns.len());
    let standardizer = Standardizer::fit(&raw);
    let x = standardizer.transform(&raw);
    let fitted = fit_standardized(config, &x, &y)?;
    Ok(TrainedModel {
        kind: config.kind,
        config: *config,
        feature_subset: subset,
        columns,
        standardizer,
        params: fitted.params,
        warnings: fitted.warnings,
    })
}

/// Scores a vector already restricted to the model's columns.
pub fn predict(model: &TrainedModel, vector: &[f64]) -> Result<Prediction> {
    if vector.len() != model.input_dim() {
        return Err(Error::Dimension {
            expected: model.input_dim(),
            actual: vector.len(),
        });
    }
    let mut z = vec![0.0; vector.len()];
    model.standardizer.transform_row(vector, &mut z);
    Ok(Prediction::from_score(model.params.score(&z)))
}

/// Scores a full aggregated vector, selecting the model's columns first.
pub fn predict_instance(model: &TrainedModel, instance: &AggregatedInstance) -> Result<Prediction> {
    let needed = model.columns.iter().max().map_or(0, |&c| c + 1);
    if instance.vector.len() < needed {
        return Err(Error::Dimension {
            expected: needed,
            actual: instance.vector.len(),
        });
    }
    let picked: Vec<f64> = model.columns.iter().map(|&c| instance.vector[c]).collect();
    predict(model, &picked)
}

// ---------------------------------------------------------------------------
// Gradient checking

/// Finite-difference step for [`gradient_check`].
pub const FD_STEP: f64 = 1e-5;

fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-8))
        .fold(0.0, f64::max)
}

fn numeric_grad(theta: &[f64], mut loss: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = theta.to_vec();
    (0..theta.len())
        .map(|k| {
            p[k] = theta[k] + FD_STEP;
            let up = loss(&p);
            p[k] = theta[k] - FD_STEP;
            let down = loss(&p);
            p[k] = theta[k];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Maximum relative error between the analytic training-loss gradient and
/// central finite differences, on random data and parameters.
pub fn gradient_check(kind: ModelKind, seed: u64) -> Result<f64> {
    let mut rng = seed::rng(seed);
    let (n, d) = (24, 5);
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let y: Vec<bool> = (0..n).map(|i| i % 3 == 0 || rng.gen_bool(0.3)).collect();
    let sw: Vec<f64> = y.iter().map(|&t| if t { 1.7 } else { 0.6 }).collect();
    let l2 = 0.8;
    match kind {
        ModelKind::LogisticRegression => {
            let x = Matrix::from_rows(&rows, d);
            let theta: Vec<f64> = (0..=d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut g = vec![0.0; d + 1];
            logistic::loss_and_grad(&theta, &x, &y, &sw, l2, &mut g);
            let mut scratch = vec![0.0; d + 1];
            let num = numeric_grad(&theta, |p| {
                logistic::loss_and_grad(p, &x, &y, &sw, l2, &mut scratch)
            });
            Ok(relative_error(&g, &num))
        }
        ModelKind::LinearSvm => {
            let theta: Vec<f64> = (0..=d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            // keep every margin away from the hinge kink
            for (i, row) in rows.iter_mut().enumerate() {
                let s = if y[i] { 1.0 } else { -1.0 };
                while (s * (dot(&theta[..d], row) + theta[d]) - 1.0).abs() < 1e-2 {
                    for v in row.iter_mut() {
                        *v = rng.gen_range(-2.0..2.0);
                    }
                }
            }
            let x = Matrix::from_rows(&rows, d);
            let mut g = vec![0.0; d + 1];
            svm::loss_and_grad(&theta, &x, &y, &sw, l2, &mut g);
            let mut scratch = vec![0.0; d + 1];
            let num = numeric_grad(&theta, |p| {
                svm::loss_and_grad(p, &x, &y, &sw, l2, &mut scratch)
            });
            Ok(relative_error(&g, &num))
        }
        ModelKind::FeedForwardNn => {
            let x = Matrix::from_rows(&rows, d);
            let mut net = Mlp::init(d, 6, &mut rng);
            net.b1.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
            net.b2 = rng.gen_range(-0.5..0.5);
            let all: Vec<usize> = (0..n).collect();
            let theta = net.to_flat();
            let mut g = vec![0.0; theta.len()];
            net.loss_and_grad(&x, &y, &sw, &all, &mut g);
            let mut probe = net.clone();
            let mut scratch = vec![0.0; theta.len()];
            let num = numeric_grad(&theta, |p| {
                probe.set_flat(p);
                probe.loss_and_grad(&x, &y, &sw, &all, &mut scratch)
            });
            Ok(relative_error(&g, &num))
        }
        other => Err(Error::Domain(format!(
            "{other} has no differentiable loss to check"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::ColumnLayout;

    fn instance(i: usize, x: [f64; 2], label: bool) -> AggregatedInstance {
        // 12 dense columns x 3 statistics; the two signal values go in the
        // mean segment of columns 0 and 1
        let mut vector = vec![0.0; 36];
        vector[0] = x[0];
        vector[1] = x[1];
        vector[12] = x[0];
        vector[24] = x[0];
        AggregatedInstance {
            paper_id: format!("P{}", i % 3),
            event_id: format!("E{i:03}"),
            grounding_id: "g".into(),
            vector,
            label,
            layout: ColumnLayout {
                evt_bigrams: 0,
                ctx_bigrams: 0,
            },
        }
    }

    fn separable() -> Vec<AggregatedInstance> {
        let mut rng = seed::rng(3);
        (0..80)
            .map(|i| {
                let a: f64 = rng.gen_range(-3.0..3.0);
                let b: f64 = rng.gen_range(-3.0..3.0);
                let label = a + 0.5 * b > 0.0;
                let shift = if label { 0.4 } else { -0.4 };
                instance(i, [a + shift, b], label)
            })
            .collect()
    }

    fn train_f1(model: &TrainedModel, data: &[AggregatedInstance]) -> f64 {
        let preds = data.iter().map(|i| predict_instance(model, i).unwrap().label);
        let gold: Vec<bool> = data.iter().map(|i| i.label).collect();
        f1_of(preds, &gold)
    }

    #[test]
    fn logistic_fits_separable_data() {
        let data = separable();
        let model = train(&TrainConfig::new(ModelKind::LogisticRegression, 1), &data).unwrap();
        assert!(train_f1(&model, &data) >= 0.99);
    }

    #[test]
    fn every_kind_learns_separable_data() {
        let data = separable();
        for kind in [ModelKind::LinearSvm, ModelKind::RandomForest, ModelKind::FeedForwardNn] {
            let model = train(&TrainConfig::new(kind, 5), &data).unwrap();
            assert!(train_f1(&model, &data) >= 0.95, "{kind}");
        }
    }

    #[test]
    fn single_class_rejected_except_forest() {
        let data: Vec<_> = separable().into_iter().filter(|i| i.label).collect();
        for kind in [
            ModelKind::LogisticRegression,
            ModelKind::LinearSvm,
            ModelKind::FeedForwardNn,
        ] {
            assert!(train(&TrainConfig::new(kind, 1), &data).is_err(), "{kind}");
        }
        let rf = train(&TrainConfig::new(ModelKind::RandomForest, 1), &data).unwrap();
        assert_eq!(rf.warnings.len(), 1);
        assert!(predict_instance(&rf, &data[0]).unwrap().label);
    }

    #[test]
    fn training_is_deterministic_and_order_free() {
        let data = separable();
        let mut reversed = data.clone();
        reversed.reverse();
        for kind in [
            ModelKind::LogisticRegression,
            ModelKind::LinearSvm,
            ModelKind::RandomForest,
            ModelKind::FeedForwardNn,
        ] {
            let cfg = TrainConfig::new(kind, 11);
            let a = train(&cfg, &data).unwrap();
            let b = train(&cfg, &data).unwrap();
            let c = train(&cfg, &reversed).unwrap();
            assert_eq!(a, b, "{kind}");
            assert_eq!(a, c, "{kind}");
        }
    }

    #[test]
    fn zero_linear_model_scores_half() {
        let model = TrainedModel {
            kind: ModelKind::LogisticRegression,
            config: TrainConfig::new(ModelKind::LogisticRegression, 0),
            feature_subset: FeatureSet::FULL,
            columns: vec![0, 1],
            standardizer: Standardizer::identity(2),
            params: ModelParams::Linear {
                weights: vec![0.0, 0.0],
                bias: 0.0,
            },
            warnings: vec![],
        };
        let p = predict(&model, &[3.0, -1.0]).unwrap();
        assert_eq!(p.score, 0.5);
        assert!(p.label);
        assert!(matches!(
            predict(&model, &[1.0]),
            Err(Error::Dimension { expected: 2, actual: 1 })
        ));
    }

    #[test]
    fn baseline_through_train_interface() {
        let data: Vec<AggregatedInstance> = (0..20)
            .map(|i| {
                let d = (i % 6) as f64;
                instance(i, [d, 0.0], d <= 2.0)
            })
            .collect();
        let model = train(&TrainConfig::new(ModelKind::Baseline, 0), &data).unwrap();
        assert_eq!(model.params, ModelParams::Baseline { k: 2 });
        assert!(predict_instance(&model, &data[2]).unwrap().label);
        assert!(!predict_instance(&model, &data[3]).unwrap().label);
    }

    #[test]
    fn model_json_round_trip() {
        let data = separable();
        for kind in [ModelKind::RandomForest, ModelKind::FeedForwardNn] {
            let mut cfg = TrainConfig::new(kind, 2);
            cfg.hyper.forest.trees = 5;
            cfg.hyper.mlp.epochs = 3;
            let model = train(&cfg, &data).unwrap();
            let back = TrainedModel::from_json(&model.to_json().unwrap()).unwrap();
            assert_eq!(back, model);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for kind in [
            ModelKind::LogisticRegression,
            ModelKind::LinearSvm,
            ModelKind::FeedForwardNn,
        ] {
            for seed in 0..5 {
                let err = gradient_check(kind, seed).unwrap();
                assert!(err < 1e-4, "{kind} seed {seed}: {err}");
            }
        }
        assert!(gradient_check(ModelKind::RandomForest, 0).is_err());
    }

    #[test]
    fn class_weights_balance_classes() {
        let w = class_weights(&[true, false, false, false], true);
        assert_eq!(w, [4.0 / 6.0, 2.0]);
        assert_eq!(class_weights(&[true, false], false), [1.0, 1.0]);
    }
}
