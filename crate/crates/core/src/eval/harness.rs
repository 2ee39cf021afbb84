//! Leave-one-paper-out cross-validation with feature-subset search.

use std::collections::BTreeMap;

use log::{debug, info};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::bootstrap::{bootstrap_compare, BootstrapOutcome};
use super::folds::{make_folds, FoldSpec};
use super::metrics::{micro_metrics, Metrics};
use super::report::{
    BootstrapRow, EvalReport, FeatureUsageRow, FoldModelResult, FoldReport, InstanceRecord,
    PaperF1Row, SkippedSubset,
};
use super::subsets::search_order;
use crate::aggregation::{aggregate, AggregatedInstance, ColumnLayout};
use crate::classifiers::{
    fit_standardized, predict_instance, select_baseline_k, BaselineModel, Hyperparams, ModelKind,
    Standardizer, TrainConfig, TrainedModel,
};
use crate::corpus::{ContextCategory, Corpus, Document};
use crate::error::{Error, Result};
use crate::features::{BigramValue, FeatureExtractor, FeatureGroup, FeatureSet, FeatureVocabulary, PairFeatureVector};
use crate::instances::{build_candidates, TypeLevelCandidate};
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    /// Trained models to evaluate. The baseline is always evaluated since
    /// the bootstrap compares against it.
    pub models: Vec<ModelKind>,
    /// Number of subsets searched per fold; `None` searches all of them.
    pub search_budget: Option<usize>,
    pub bootstrap_iterations: usize,
    pub hyper: Hyperparams,
    pub class_weighting: bool,
    pub bigram_value: BigramValue,
    /// Drop context mentions outside species, tissue type and cell line.
    pub restrict_categories: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 0,
            models: ModelKind::ALL.to_vec(),
            search_budget: None,
            bootstrap_iterations: 1000,
            hyper: Hyperparams::default(),
            class_weighting: true,
            bigram_value: BigramValue::Count,
            restrict_categories: true,
        }
    }
}

impl ExperimentConfig {
    /// Hex sha256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn trained_models(&self) -> Vec<ModelKind> {
        let mut kinds: Vec<ModelKind> = self.models.iter().copied().filter(|k| k.is_trainable()).collect();
        kinds.sort_unstable();
        kinds.dedup();
        kinds
    }

    fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.bootstrap_iterations == 0 {
            return Err(Error::Config("bootstrap iterations must be at least 1".into()));
        }
        if self.search_budget == Some(0) {
            return Err(Error::Config("search budget must be at least 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models selected".into()));
        }
        Ok(())
    }
}

/// Candidates and mention-pair features of one document, computed once and
/// shared by every fold.
#[derive(Debug, Clone)]
pub struct PreparedDoc {
    pub paper_id: String,
    pub candidates: Vec<TypeLevelCandidate>,
    /// Aligned with `candidates[i].pairs`.
    pub features: Vec<Vec<PairFeatureVector>>,
}

impl PreparedDoc {
    pub fn new(doc: &Document) -> Self {
        let extractor = FeatureExtractor::new(doc);
        let candidates = build_candidates(doc);
        let features = candidates
            .iter()
            .map(|c| c.pairs.iter().map(|&p| extractor.extract(p)).collect())
            .collect();
        PreparedDoc {
            paper_id: doc.paper_id.clone(),
            candidates,
            features,
        }
    }

    fn aggregate(&self, vocab: &FeatureVocabulary) -> Result<Vec<AggregatedInstance>> {
        self.candidates
            .iter()
            .zip(&self.features)
            .map(|(c, f)| aggregate(c, f, vocab))
            .collect()
    }
}

pub fn prepare_documents(corpus: &Corpus) -> Vec<PreparedDoc> {
    corpus.documents.par_iter().map(PreparedDoc::new).collect()
}

fn by_key(mut v: Vec<AggregatedInstance>) -> Vec<AggregatedInstance> {
    v.sort_by(|a, b| a.key().cmp(&b.key()));
    v
}

/// Everything a fold needs, fitted on its training papers only.
#[derive(Debug, Clone)]
pub struct FoldData {
    pub spec: FoldSpec,
    pub vocab: FeatureVocabulary,
    pub layout: ColumnLayout,
    /// Fitted on the full training vectors; per-subset standardizers are
    /// column selections of it.
    pub standardizer: Standardizer,
    pub train: Vec<AggregatedInstance>,
    pub validation: Vec<AggregatedInstance>,
    pub test: Vec<AggregatedInstance>,
    x_train: Matrix,
    y_train: Vec<bool>,
    x_val: Matrix,
    y_val: Vec<bool>,
}

fn full_matrix(instances: &[AggregatedInstance], dim: usize) -> Matrix {
    let rows: Vec<&[f64]> = instances.iter().map(|i| i.vector.as_slice()).collect();
    Matrix::from_rows(&rows, dim)
}

impl FoldData {
    pub fn prepare(docs: &[PreparedDoc], spec: FoldSpec, bigram_value: BigramValue) -> Result<Self> {
        let by_id: BTreeMap<&str, &PreparedDoc> = docs.iter().map(|d| (d.paper_id.as_str(), d)).collect();
        let lookup = |ids: &[String]| -> Result<Vec<&PreparedDoc>> {
            ids.iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .copied()
                        .ok_or_else(|| Error::Domain(format!("fold references unknown paper {id}")))
                })
                .collect()
        };
        let train_docs = lookup(&spec.training)?;
        let val_docs = lookup(&spec.validation)?;
        let test_docs = lookup(std::slice::from_ref(&spec.test))?;

        let vocab = FeatureVocabulary::from_pairs(train_docs.iter().flat_map(|d| d.features.iter().flatten()))
            .with_value(bigram_value);
        let layout = ColumnLayout::of(&vocab);
        let collect = |ds: &[&PreparedDoc]| -> Result<Vec<AggregatedInstance>> {
            let mut out = Vec::new();
            for d in ds {
                out.extend(d.aggregate(&vocab)?);
            }
            Ok(by_key(out))
        };
        let train = collect(&train_docs)?;
        let validation = collect(&val_docs)?;
        let test = collect(&test_docs)?;
        if train.is_empty() {
            return Err(Error::Training(format!("fold {}: no training instances", spec.test)));
        }
        let dim = layout.aggregated_dim();
        let raw_train = full_matrix(&train, dim);
        let standardizer = Standardizer::fit(&raw_train);
        let x_train = standardizer.transform(&raw_train);
        let x_val = standardizer.transform(&full_matrix(&validation, dim));
        let y_train = train.iter().map(|i| i.label).collect();
        let y_val = validation.iter().map(|i| i.label).collect();
        Ok(FoldData {
            spec,
            vocab,
            layout,
            standardizer,
            train,
            validation,
            test,
            x_train,
            y_train,
            x_val,
            y_val,
        })
    }

    /// Trains `config.kind` on the columns of `subset`. Identical to
    /// [`crate::classifiers::train_subset`] on the training instances.
    pub fn fit(&self, config: &TrainConfig, subset: FeatureSet) -> Result<TrainedModel> {
        if subset.is_empty() {
            return Err(Error::Config("empty feature subset".into()));
        }
        let columns = self.layout.columns(subset);
        let x = self.x_train.select_columns(&columns);
        let fitted = fit_standardized(config, &x, &self.y_train)?;
        Ok(TrainedModel {
            kind: config.kind,
            config: *config,
            feature_subset: subset,
            standardizer: self.standardizer.select(&columns),
            columns,
            params: fitted.params,
            warnings: fitted.warnings,
        })
    }

    /// Validation F1 of a model fitted by [`FoldData::fit`].
    pub fn validation_f1(&self, model: &TrainedModel) -> f64 {
        let x = self.x_val.select_columns(&model.columns);
        let preds: Vec<bool> = (0..x.rows())
            .map(|i| model.params.score(x.row(i)) >= crate::classifiers::THRESHOLD)
            .collect();
        micro_metrics(&preds, &self.y_val).map_or(0.0, |m| m.f1)
    }

    /// Baseline window chosen on the validation papers.
    pub fn baseline(&self) -> BaselineModel {
        let d: Vec<f64> = self.validation.iter().map(|i| i.min_sentence_distance()).collect();
        BaselineModel::new(select_baseline_k(&d, &self.y_val)).expect("selected k is in range")
    }
}

fn task_seed(master: u64, fold: &FoldSpec, kind: ModelKind, subset: FeatureSet) -> u64 {
    seed::derive(
        master,
        &[b"task", fold.test.as_bytes(), kind.name().as_bytes(), &subset.mask().to_le_bytes()],
    )
}

fn train_config(config: &ExperimentConfig, kind: ModelKind, rng_seed: u64) -> TrainConfig {
    TrainConfig {
        kind,
        hyper: config.hyper,
        rng_seed,
        class_weighting: config.class_weighting,
    }
}

struct SearchOutcome {
    position: usize,
    subset: FeatureSet,
    result: std::result::Result<f64, String>,
}

/// Picks the highest validation F1; ties go to the smaller subset, then to
/// the earlier search position.
fn select_best(outcomes: &[SearchOutcome]) -> Option<(FeatureSet, f64)> {
    let mut best: Option<(&SearchOutcome, f64)> = None;
    for o in outcomes {
        let Ok(f1) = o.result else { continue };
        let better = match best {
            None => true,
            Some((b, bf1)) => {
                f1 > bf1
                    || (f1 == bf1
                        && (o.subset.len(), o.position) < (b.subset.len(), b.position))
            }
        };
        if better {
            best = Some((o, f1));
        }
    }
    best.map(|(o, f1)| (o.subset, f1))
}

struct ModelFold {
    result: FoldModelResult,
    predictions: Vec<bool>,
}

fn finish_model(
    data: &FoldData,
    config: &ExperimentConfig,
    kind: ModelKind,
    outcomes: &[SearchOutcome],
) -> Result<ModelFold> {
    let skipped: Vec<SkippedSubset> = outcomes
        .iter()
        .filter_map(|o| {
            o.result.as_ref().err().map(|e| SkippedSubset {
                subset: o.subset.names().iter().map(|s| s.to_string()).collect(),
                error: e.clone(),
            })
        })
        .collect();
    let (subset, validation_f1) = select_best(outcomes).ok_or_else(|| {
        Error::Training(format!(
            "fold {}: every subset failed for {kind}: {}",
            data.spec.test,
            skipped.first().map_or("", |s| s.error.as_str())
        ))
    })?;
    let model = data.fit(&train_config(config, kind, task_seed(config.master_seed, &data.spec, kind, subset)), subset)?;
    let predictions = data
        .test
        .iter()
        .map(|i| predict_instance(&model, i).map(|p| p.label))
        .collect::<Result<Vec<bool>>>()?;
    let gold: Vec<bool> = data.test.iter().map(|i| i.label).collect();
    Ok(ModelFold {
        result: FoldModelResult {
            model: kind,
            best_subset: subset.names().iter().map(|s| s.to_string()).collect(),
            validation_f1,
            test: micro_metrics(&predictions, &gold)?,
            warnings: model.warnings.clone(),
            skipped,
        },
        predictions,
    })
}

/// Runs the search for one fold and model serially.
pub fn run_fold(
    data: &FoldData,
    config: &ExperimentConfig,
    kind: ModelKind,
) -> Result<FoldModelResult> {
    let order = search_order(config.search_budget);
    let outcomes: Vec<SearchOutcome> = order
        .iter()
        .enumerate()
        .map(|(position, &subset)| search_task(data, config, kind, position, subset))
        .collect();
    finish_model(data, config, kind, &outcomes).map(|m| m.result)
}

fn search_task(
    data: &FoldData,
    config: &ExperimentConfig,
    kind: ModelKind,
    position: usize,
    subset: FeatureSet,
) -> SearchOutcome {
    let tc = train_config(config, kind, task_seed(config.master_seed, &data.spec, kind, subset));
    let result = data
        .fit(&tc, subset)
        .map(|m| data.validation_f1(&m))
        .map_err(|e| e.to_string());
    SearchOutcome {
        position,
        subset,
        result,
    }
}

/// Runs the full protocol on `workers` threads. The report does not depend
/// on the worker count.
pub fn run_experiment(corpus: &Corpus, config: &ExperimentConfig, workers: usize) -> Result<EvalReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_in_pool(corpus, config))
}

fn run_in_pool(corpus: &Corpus, config: &ExperimentConfig) -> Result<EvalReport> {
    let filtered;
    let corpus = if config.restrict_categories {
        filtered = corpus.retain_categories(&ContextCategory::RESTRICTED);
        &filtered
    } else {
        corpus
    };
    let specs = make_folds(corpus, config.master_seed)?;
    let docs = prepare_documents(corpus);
    let folds: Vec<FoldData> = specs
        .into_par_iter()
        .map(|s| FoldData::prepare(&docs, s, config.bigram_value))
        .collect::<Result<_>>()?;
    let kinds = config.trained_models();
    let order = search_order(config.search_budget);
    info!(
        "{} folds, {} models, {} subsets per fold",
        folds.len(),
        kinds.len(),
        order.len()
    );

    let (n_models, n_subsets) = (kinds.len(), order.len());
    let tasks: Vec<(usize, usize, usize)> = (0..folds.len())
        .flat_map(|f| (0..n_models).flat_map(move |m| (0..n_subsets).map(move |p| (f, m, p))))
        .collect();
    let outcomes: Vec<SearchOutcome> = tasks
        .par_iter()
        .map(|&(f, m, p)| search_task(&folds[f], config, kinds[m], p, order[p]))
        .collect();
    debug!("search finished, {} tasks", outcomes.len());

    let per_fold = order.len() * kinds.len();
    let finished: Vec<Vec<ModelFold>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, data)| {
            kinds
                .iter()
                .enumerate()
                .map(|(m, &kind)| {
                    let start = f * per_fold + m * order.len();
                    finish_model(data, config, kind, &outcomes[start..start + order.len()])
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    assemble(corpus, config, &folds, &kinds, finished)
}

fn assemble(
    corpus: &Corpus,
    config: &ExperimentConfig,
    folds: &[FoldData],
    kinds: &[ModelKind],
    finished: Vec<Vec<ModelFold>>,
) -> Result<EvalReport> {
    let mut fold_reports = Vec::with_capacity(folds.len());
    let mut records = Vec::new();
    let mut per_paper = Vec::new();
    let mut pooled_parts: BTreeMap<ModelKind, Vec<Metrics>> = BTreeMap::new();
    let mut usage: BTreeMap<(ModelKind, FeatureGroup), usize> = BTreeMap::new();

    for (data, models) in folds.iter().zip(finished) {
        let gold: Vec<bool> = data.test.iter().map(|i| i.label).collect();
        let baseline = data.baseline();
        let base_preds: Vec<bool> = data
            .test
            .iter()
            .map(|i| baseline.predict_distance(i.min_sentence_distance()))
            .collect();
        let base_metrics = micro_metrics(&base_preds, &gold)?;
        per_paper.push(PaperF1Row {
            paper_id: data.spec.test.clone(),
            model: ModelKind::Baseline,
            f1: base_metrics.f1,
        });
        pooled_parts.entry(ModelKind::Baseline).or_default().push(base_metrics);

        for (idx, inst) in data.test.iter().enumerate() {
            let mut predicted = BTreeMap::new();
            predicted.insert(ModelKind::Baseline, base_preds[idx]);
            for m in &models {
                predicted.insert(m.result.model, m.predictions[idx]);
            }
            records.push(InstanceRecord {
                paper_id: inst.paper_id.clone(),
                event_id: inst.event_id.clone(),
                grounding_id: inst.grounding_id.clone(),
                gold: inst.label,
                predicted,
            });
        }
        for m in &models {
            per_paper.push(PaperF1Row {
                paper_id: data.spec.test.clone(),
                model: m.result.model,
                f1: m.result.test.f1,
            });
            pooled_parts.entry(m.result.model).or_default().push(m.result.test);
            for name in &m.result.best_subset {
                let group: FeatureGroup = name.parse()?;
                *usage.entry((m.result.model, group)).or_default() += 1;
            }
        }
        fold_reports.push(FoldReport {
            spec: data.spec.clone(),
            baseline_k: baseline.k(),
            baseline: base_metrics,
            models: models.into_iter().map(|m| m.result).collect(),
        });
    }

    let pooled: BTreeMap<ModelKind, Metrics> = pooled_parts
        .iter()
        .map(|(k, parts)| (*k, Metrics::pool(parts)))
        .collect();
    let feature_usage = kinds
        .iter()
        .flat_map(|&k| {
            FeatureGroup::ALL.iter().map(move |&g| (k, g))
        })
        .map(|(model, group)| FeatureUsageRow {
            model,
            group,
            count: usage.get(&(model, group)).copied().unwrap_or(0),
        })
        .collect();

    let gold: Vec<bool> = records.iter().map(|r| r.gold).collect();
    let base: Vec<bool> = records.iter().map(|r| r.predicted[&ModelKind::Baseline]).collect();
    let mut bootstrap = Vec::new();
    if !records.is_empty() {
        for &kind in kinds {
            let preds: Vec<bool> = records.iter().map(|r| r.predicted[&kind]).collect();
            let outcome: BootstrapOutcome = bootstrap_compare(
                &preds,
                &base,
                &gold,
                config.bootstrap_iterations,
                seed::derive(config.master_seed, &[b"bootstrap", kind.name().as_bytes()]),
            )?;
            bootstrap.push(BootstrapRow {
                model: kind,
                fraction: outcome.fraction,
                significant: outcome.significant,
                iterations: outcome.iterations,
            });
        }
    }

    Ok(EvalReport {
        master_seed: config.master_seed,
        config_hash: config.hash(),
        config: config.clone(),
        papers: corpus.documents.len(),
        pooled,
        folds: fold_reports,
        per_paper_f1: per_paper,
        feature_usage,
        bootstrap,
        predictions: records,
    })
}
