//! Feed-forward network with one ReLU hidden layer and a sigmoid output,
//! trained on weighted cross-entropy with mini-batch Adam.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::{dot, sigmoid, softplus, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub hidden: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden: 20,
            batch_size: 32,
            learning_rate: 0.01,
            epochs: 100,
        }
    }
}

/// Network weights. `w1` is `hidden x inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub inputs: usize,
    pub hidden: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl Mlp {
    /// Uniform `±1/sqrt(fan_in)` weights, zero biases.
    pub fn init<R: Rng>(inputs: usize, hidden: usize, rng: &mut R) -> Self {
        let l1 = 1.0 / (inputs.max(1) as f64).sqrt();
        let l2 = 1.0 / (hidden.max(1) as f64).sqrt();
        Mlp {
            inputs,
            hidden,
            w1: (0..inputs * hidden).map(|_| rng.gen_range(-l1..l1)).collect(),
            b1: vec![0.0; hidden],
            w2: (0..hidden).map(|_| rng.gen_range(-l2..l2)).collect(),
            b2: 0.0,
        }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + 1
    }

    /// Flattened parameters: w1, b1, w2, b2.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let (a, rest) = flat.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.hidden);
        let (c, rest) = rest.split_at(self.hidden);
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2 = rest[0];
    }

    fn hidden_into(&self, x: &[f64], pre: &mut [f64], act: &mut [f64]) {
        for h in 0..self.hidden {
            let a = dot(&self.w1[h * self.inputs..(h + 1) * self.inputs], x) + self.b1[h];
            pre[h] = a;
            act[h] = a.max(0.0);
        }
    }

    /// Output logit.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut pre = vec![0.0; self.hidden];
        let mut act = vec![0.0; self.hidden];
        self.hidden_into(x, &mut pre, &mut act);
        dot(&self.w2, &act) + self.b2
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Adds the gradient of `weight * CE(row)` scaled by `scale` into `grad`
    /// (flat layout) and returns the unscaled weighted loss of the row.
    fn accumulate(
        &self,
        x: &[f64],
        label: bool,
        weight: f64,
        scale: f64,
        grad: &mut [f64],
        pre: &mut [f64],
        act: &mut [f64],
        with_loss: bool,
    ) -> f64 {
        self.hidden_into(x, pre, act);
        let z = dot(&self.w2, act) + self.b2;
        let t = if label { 1.0 } else { 0.0 };
        let loss = if with_loss { weight * (softplus(z) - t * z) } else { 0.0 };
        let dz = weight * (sigmoid(z) - t) * scale;
        let (gw1, rest) = grad.split_at_mut(self.w1.len());
        let (gb1, rest) = rest.split_at_mut(self.hidden);
        let (gw2, gb2) = rest.split_at_mut(self.hidden);
        gb2[0] += dz;
        for h in 0..self.hidden {
            gw2[h] += dz * act[h];
            if pre[h] > 0.0 {
                let da = dz * self.w2[h];
                gb1[h] += da;
                for (g, v) in gw1[h * self.inputs..(h + 1) * self.inputs]
                    .iter_mut()
                    .zip(x)
                {
                    *g += da * v;
                }
            }
        }
        loss
    }

    /// Mean weighted cross-entropy over `rows` of `x` and its gradient.
    pub fn loss_and_grad(
        &self,
        x: &Matrix,
        y: &[bool],
        sample_weight: &[f64],
        rows: &[usize],
        grad: &mut [f64],
    ) -> f64 {
        self.batch_gradient(x, y, sample_weight, rows, grad, true)
    }

    fn batch_gradient(
        &self,
        x: &Matrix,
        y: &[bool],
        sample_weight: &[f64],
        rows: &[usize],
        grad: &mut [f64],
        with_loss: bool,
    ) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut pre = vec![0.0; self.hidden];
        let mut act = vec![0.0; self.hidden];
        let scale = 1.0 / rows.len() as f64;
        let mut loss = 0.0;
        for &i in rows {
            loss += self.accumulate(
                x.row(i),
                y[i],
                sample_weight[i],
                scale,
                grad,
                &mut pre,
                &mut act,
                with_loss,
            );
        }
        loss * scale
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    rate: f64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize, rate: f64) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            rate,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        let (b1, b2) = (Self::BETA1, Self::BETA2);
        let (r1, r2) = (self.rate / c1, 1.0 / c2);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            *p -= r1 * *m / ((*v * r2).sqrt() + Self::EPS);
        }
    }
}

pub fn fit<R: Rng>(
    x: &Matrix,
    y: &[bool],
    sample_weight: &[f64],
    params: &MlpParams,
    rng: &mut R,
) -> Mlp {
    let mut net = Mlp::init(x.cols(), params.hidden, rng);
    let mut flat = net.to_flat();
    let mut grad = vec![0.0; flat.len()];
    let mut adam = Adam::new(flat.len(), params.learning_rate);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let batch = params.batch_size.max(1);
    for _ in 0..params.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(batch) {
            net.batch_gradient(x, y, sample_weight, chunk, &mut grad, false);
            adam.step(&mut flat, &grad);
            net.set_flat(&flat);
        }
    }
    net
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two inputs, two hidden units, hand-computed activations.
    #[test]
    fn forward_matches_hand_computation() {
        let net = Mlp {
            inputs: 2,
            hidden: 2,
            w1: vec![1.0, -1.0, 0.5, 2.0],
            b1: vec![0.0, -1.0],
            w2: vec![1.5, -0.5],
            b2: 0.25,
        };
        let x = [2.0, 1.0];
        // h0 = relu(2 - 1) = 1; h1 = relu(1 + 2 - 1) = 2
        // z = 1.5 * 1 - 0.5 * 2 + 0.25 = 0.75
        let expected = 1.0 / (1.0 + (-0.75f64).exp());
        assert!((net.forward(&x) - expected).abs() < 1e-15);
        // negative pre-activation is clipped
        let x = [0.0, 0.0];
        // h0 = 0, h1 = relu(-1) = 0 -> z = 0.25
        assert!((net.logit(&x) - 0.25).abs() < 1e-15);
    }
}
