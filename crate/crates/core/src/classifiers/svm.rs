//! Linear SVM: hinge loss with L2 penalty, stochastic subgradient descent.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::matrix::{dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub l2: f64,
    pub epochs: usize,
    /// Base step; epoch `t` (1-based) uses `step / sqrt(t)`.
    pub step: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            l2: 1.0,
            epochs: 200,
            step: 0.1,
        }
    }
}

fn sign(label: bool) -> f64 {
    if label {
        1.0
    } else {
        -1.0
    }
}

/// Weighted mean hinge loss plus `l2 / (2n) * |w|^2`, with its subgradient
/// (exact gradient away from margin 1). Last entry of `params` is the bias.
pub fn loss_and_grad(
    params: &[f64],
    x: &Matrix,
    y: &[bool],
    sample_weight: &[f64],
    l2: f64,
    grad: &mut [f64],
) -> f64 {
    let d = x.cols();
    let n = x.rows() as f64;
    let (w, b) = (&params[..d], params[d]);
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for i in 0..x.rows() {
        let xi = x.row(i);
        let s = sign(y[i]);
        let margin = s * (dot(w, xi) + b);
        if margin < 1.0 {
            loss += sample_weight[i] * (1.0 - margin);
            let r = -sample_weight[i] * s / n;
            for (g, v) in grad[..d].iter_mut().zip(xi) {
                *g += r * v;
            }
            grad[d] += r;
        }
    }
    loss /= n;
    loss += 0.5 * l2 / n * dot(w, w);
    for (g, wj) in grad[..d].iter_mut().zip(w) {
        *g += l2 / n * wj;
    }
    loss
}

pub fn fit<R: rand::Rng>(
    x: &Matrix,
    y: &[bool],
    sample_weight: &[f64],
    params: &SvmParams,
    rng: &mut R,
) -> (Vec<f64>, f64) {
    let (n, d) = (x.rows(), x.cols());
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let shrink = params.l2 / n as f64;
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=params.epochs {
        let eta = params.step / (epoch as f64).sqrt();
        order.shuffle(rng);
        for &i in &order {
            let xi = x.row(i);
            let s = sign(y[i]);
            let margin = s * (dot(&w, xi) + b);
            let decay = 1.0 - eta * shrink;
            if margin < 1.0 {
                let r = eta * sample_weight[i] * s;
                for (wj, v) in w.iter_mut().zip(xi) {
                    *wj = *wj * decay + r * v;
                }
                b += r;
            } else {
                w.iter_mut().for_each(|wj| *wj *= decay);
            }
        }
    }
    (w, b)
}
