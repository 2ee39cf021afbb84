//! Paired bootstrap comparison of a model against the baseline.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// A model counts as significantly better when it beats the baseline in at
/// least this fraction of resamples.
pub const SIGNIFICANCE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOutcome {
    pub iterations: usize,
    /// Fraction of resamples where model F1 > baseline F1.
    pub fraction: f64,
    pub significant: bool,
}

#[derive(Default)]
struct Counts {
    tp: usize,
    fp: usize,
    fn_: usize,
}

impl Counts {
    fn add(&mut self, pred: bool, gold: bool) {
        match (pred, gold) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            _ => {}
        }
    }

    fn f1(&self) -> f64 {
        let den = 2 * self.tp + self.fp + self.fn_;
        if den == 0 {
            0.0
        } else {
            2.0 * self.tp as f64 / den as f64
        }
    }
}

/// Resamples instance indices with replacement `iterations` times and
/// reports how often the model's F1 strictly exceeds the baseline's.
pub fn bootstrap_compare(
    model_preds: &[bool],
    baseline_preds: &[bool],
    gold: &[bool],
    iterations: usize,
    seed: u64,
) -> Result<BootstrapOutcome> {
    let n = gold.len();
    if n == 0 {
        return Err(Error::Domain("bootstrap over an empty instance list".into()));
    }
    if model_preds.len() != n || baseline_preds.len() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: model_preds.len().max(baseline_preds.len()),
        });
    }
    if iterations == 0 {
        return Err(Error::Config("bootstrap iterations must be at least 1".into()));
    }
    let mut rng = seed::rng(seed);
    let mut wins = 0usize;
    for _ in 0..iterations {
        let mut model = Counts::default();
        let mut base = Counts::default();
        for _ in 0..n {
            let i = rng.gen_range(0..n);
            model.add(model_preds[i], gold[i]);
            base.add(baseline_preds[i], gold[i]);
        }
        if model.f1() - base.f1() > 0.0 {
            wins += 1;
        }
    }
    let fraction = wins as f64 / iterations as f64;
    Ok(BootstrapOutcome {
        iterations,
        fraction,
        significant: fraction >= SIGNIFICANCE,
    })
}
