//! Run configuration read from a TOML file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agreement::ItemUniverse;
use crate::classifiers::{Hyperparams, ModelKind};
use crate::error::{Error, Result};
use crate::eval::ExperimentConfig;
use crate::features::BigramValue;

/// Environment variable supplying the default worker count.
pub const WORKERS_ENV: &str = "CTXLINK_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub output: PathBuf,
    /// Required for any randomized command; there is no clock-based default.
    pub master_seed: Option<u64>,
    pub models: Vec<ModelKind>,
    pub restrict_categories: bool,
    pub search_budget: Option<usize>,
    pub bootstrap_iterations: usize,
    pub workers: Option<usize>,
    pub class_weighting: bool,
    pub bigram_value: BigramValue,
    pub item_universe: ItemUniverse,
    pub hyper: Hyperparams,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        RunConfig {
            corpus: None,
            output: PathBuf::from("out"),
            master_seed: None,
            models: e.models,
            restrict_categories: e.restrict_categories,
            search_budget: e.search_budget,
            bootstrap_iterations: e.bootstrap_iterations,
            workers: None,
            class_weighting: e.class_weighting,
            bigram_value: e.bigram_value,
            item_universe: ItemUniverse::default(),
            hyper: e.hyper,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn require_seed(&self) -> Result<u64> {
        self.master_seed
            .ok_or_else(|| Error::Config("master_seed is required".into()))
    }

    /// Worker count: the configured value, else the environment variable,
    /// else the available parallelism.
    pub fn resolve_workers(&self) -> Result<usize> {
        if let Some(w) = self.workers {
            return positive_workers(w);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) => {
                let w = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("{WORKERS_ENV}={v:?} is not a count")))?;
                positive_workers(w)
            }
            Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            master_seed: self.require_seed()?,
            models: self.models.clone(),
            search_budget: self.search_budget,
            bootstrap_iterations: self.bootstrap_iterations,
            hyper: self.hyper,
            class_weighting: self.class_weighting,
            bigram_value: self.bigram_value,
            restrict_categories: self.restrict_categories,
        })
    }
}

fn positive_workers(w: usize) -> Result<usize> {
    if w == 0 {
        Err(Error::Config("worker count must be at least 1".into()))
    } else {
        Ok(w)
    }
}
