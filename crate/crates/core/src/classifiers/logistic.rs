//! L2-regularized logistic regression fitted by full-batch L-BFGS.

use serde::{Deserialize, Serialize};

use crate::matrix::{dot, softplus, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogisticParams {
    pub l2: f64,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2: 1.0,
            max_iter: 500,
            tolerance: 1e-6,
        }
    }
}

/// Weighted mean cross-entropy plus `l2 / (2n) * |w|^2`. The last entry of
/// `params` is the bias. Returns the loss and writes its gradient.
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
        let z = dot(w, xi) + b;
        let t = if y[i] { 1.0 } else { 0.0 };
        loss += sample_weight[i] * (softplus(z) - t * z);
        let r = sample_weight[i] * (crate::matrix::sigmoid(z) - t) / n;
        for (g, v) in grad[..d].iter_mut().zip(xi) {
            *g += r * v;
        }
        grad[d] += r;
    }
    loss /= n;
    loss += 0.5 * l2 / n * dot(w, w);
    for (g, wj) in grad[..d].iter_mut().zip(w) {
        *g += l2 / n * wj;
    }
    loss
}

/// L-BFGS memory.
const HISTORY: usize = 10;

/// Two-loop recursion: writes the quasi-Newton direction `-H grad` into `dir`.
fn direction(grad: &[f64], s: &[Vec<f64>], y: &[Vec<f64>], dir: &mut [f64]) {
    dir.copy_from_slice(grad);
    let mut alpha = vec![0.0; s.len()];
    for k in (0..s.len()).rev() {
        let rho = 1.0 / dot(&y[k], &s[k]);
        alpha[k] = rho * dot(&s[k], dir);
        for (d, yk) in dir.iter_mut().zip(&y[k]) {
            *d -= alpha[k] * yk;
        }
    }
    if let (Some(sl), Some(yl)) = (s.last(), y.last()) {
        let gamma = dot(sl, yl) / dot(yl, yl);
        dir.iter_mut().for_each(|d| *d *= gamma);
    }
    for k in 0..s.len() {
        let rho = 1.0 / dot(&y[k], &s[k]);
        let beta = rho * dot(&y[k], dir);
        for (d, sk) in dir.iter_mut().zip(&s[k]) {
            *d += (alpha[k] - beta) * sk;
        }
    }
    dir.iter_mut().for_each(|d| *d = -*d);
}

/// Fits weights and bias with limited-memory BFGS and a backtracking
/// (Armijo) line search, so the loss never increases. Also returns the loss
/// after every accepted step.
pub fn fit(
    x: &Matrix,
    y: &[bool],
    sample_weight: &[f64],
    params: &LogisticParams,
) -> (Vec<f64>, f64, Vec<f64>) {
    let d = x.cols();
    let mut theta = vec![0.0; d + 1];
    let mut grad = vec![0.0; d + 1];
    let mut trial = vec![0.0; d + 1];
    let mut trial_grad = vec![0.0; d + 1];
    let mut dir = vec![0.0; d + 1];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut loss = loss_and_grad(&theta, x, y, sample_weight, params.l2, &mut grad);
    let mut history = vec![loss];
    for _ in 0..params.max_iter {
        direction(&grad, &s_hist, &y_hist, &mut dir);
        let mut slope = dot(&dir, &grad);
        if slope >= 0.0 {
            // not a descent direction: restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            dir.iter_mut().zip(&grad).for_each(|(d, g)| *d = -g);
            slope = -dot(&grad, &grad);
        }
        if slope == 0.0 {
            break;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            for ((t, th), dk) in trial.iter_mut().zip(&theta).zip(&dir) {
                *t = th + step * dk;
            }
            let l = loss_and_grad(&trial, x, y, sample_weight, params.l2, &mut trial_grad);
            if l <= loss + 1e-4 * step * slope {
                accepted = Some(l);
                break;
            }
            step *= 0.5;
        }
        let Some(new_loss) = accepted else { break };
        let sk: Vec<f64> = trial.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = trial_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        if dot(&sk, &yk) > 1e-12 {
            if s_hist.len() == HISTORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(sk);
            y_hist.push(yk);
        }
        std::mem::swap(&mut theta, &mut trial);
        std::mem::swap(&mut grad, &mut trial_grad);
        let change = loss - new_loss;
        loss = new_loss;
        history.push(loss);
        if change < params.tolerance {
            break;
        }
    }
    let bias = theta.pop().expect("bias present");
    (theta, bias, history)
}
