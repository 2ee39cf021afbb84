//! Evaluation report and its JSON/CSV renderings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::folds::FoldSpec;
use super::harness::ExperimentConfig;
use super::metrics::Metrics;
use crate::classifiers::ModelKind;
use crate::error::{Error, Result};
use crate::features::FeatureGroup;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSubset {
    pub subset: Vec<String>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldModelResult {
    pub model: ModelKind,
    pub best_subset: Vec<String>,
    pub validation_f1: f64,
    pub test: Metrics,
    pub warnings: Vec<String>,
    pub skipped: Vec<SkippedSubset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub spec: FoldSpec,
    pub baseline_k: u8,
    pub baseline: Metrics,
    pub models: Vec<FoldModelResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperF1Row {
    pub paper_id: String,
    pub model: ModelKind,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureUsageRow {
    pub model: ModelKind,
    pub group: FeatureGroup,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRow {
    pub model: ModelKind,
    pub fraction: f64,
    pub significant: bool,
    pub iterations: usize,
}

/// Test-paper prediction of every model for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub paper_id: String,
    pub event_id: String,
    pub grounding_id: String,
    pub gold: bool,
    pub predicted: BTreeMap<ModelKind, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub master_seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub papers: usize,
    /// Micro metrics pooled over all folds, baseline included.
    pub pooled: BTreeMap<ModelKind, Metrics>,
    pub folds: Vec<FoldReport>,
    pub per_paper_f1: Vec<PaperF1Row>,
    pub feature_usage: Vec<FeatureUsageRow>,
    pub bootstrap: Vec<BootstrapRow>,
    pub predictions: Vec<InstanceRecord>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Gold labels and per-model predictions over all test instances, in
    /// report order.
    pub fn prediction_vectors(&self, model: ModelKind) -> Option<(Vec<bool>, Vec<bool>)> {
        let preds = self
            .predictions
            .iter()
            .map(|r| r.predicted.get(&model).copied())
            .collect::<Option<Vec<bool>>>()?;
        let gold = self.predictions.iter().map(|r| r.gold).collect();
        Some((preds, gold))
    }

    pub fn feature_usage_of(&self, model: ModelKind, group: FeatureGroup) -> usize {
        self.feature_usage
            .iter()
            .find(|r| r.model == model && r.group == group)
            .map_or(0, |r| r.count)
    }
}

fn csv_bytes<R: Serialize>(rows: &[R], header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner()
        .map_err(|e| Error::Domain(format!("csv buffer: {e}")))
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<PathBuf> {
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `report.json`, `per_paper_f1.csv`, `feature_usage.csv` and
/// `bootstrap.csv` into `dir`, creating it if needed.
pub fn write_reports(dir: &Path, report: &EvalReport) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let bootstrap: Vec<(ModelKind, f64, bool)> = report
        .bootstrap
        .iter()
        .map(|b| (b.model, b.fraction, b.significant))
        .collect();
    Ok(vec![
        write(dir.join("report.json"), report.to_json()?.as_bytes())?,
        write(
            dir.join("per_paper_f1.csv"),
            &csv_bytes(&report.per_paper_f1, &["paper_id", "model", "f1"])?,
        )?,
        write(
            dir.join("feature_usage.csv"),
            &csv_bytes(&report.feature_usage, &["model", "feature_group", "count"])?,
        )?,
        write(
            dir.join("bootstrap.csv"),
            &csv_bytes(&bootstrap, &["model", "fraction", "significant"])?,
        )?,
    ])
}

/// Fixed-width table of pooled metrics, one row per model.
pub fn summary_table(report: &EvalReport) -> String {
    let mut out = format!(
        "{:<22} {:>6} {:>6} {:>6} {:>9} {:>7} {:>7}\n",
        "model", "tp", "fp", "fn", "precision", "recall", "f1"
    );
    for (model, m) in &report.pooled {
        out.push_str(&format!(
            "{:<22} {:>6} {:>6} {:>6} {:>9.4} {:>7.4} {:>7.4}\n",
            model.name(),
            m.tp,
            m.fp,
            m.fn_,
            m.precision,
            m.recall,
            m.f1
        ));
    }
    out
}
