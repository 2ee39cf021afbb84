//! Random forest of weighted-Gini CART trees grown on bootstrap samples.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_samples_split: usize,
    /// Features tried per split; `None` means `ceil(sqrt(d))`.
    pub features_per_split: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: 10,
            min_samples_split: 2,
            features_per_split: None,
        }
    }
}

const LEAF: i32 = -1;

/// One tree as parallel node arrays. `feature[i] == -1` marks a leaf whose
/// vote is `positive[i]`; internal nodes send `x[feature] <= threshold` left.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub feature: Vec<i32>,
    pub threshold: Vec<f64>,
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub positive: Vec<bool>,
}

impl Tree {
    fn push(&mut self) -> usize {
        self.feature.push(LEAF);
        self.threshold.push(0.0);
        self.left.push(0);
        self.right.push(0);
        self.positive.push(false);
        self.feature.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.feature.len()
    }

    pub fn vote(&self, x: &[f64]) -> bool {
        let mut node = 0;
        loop {
            let f = self.feature[node];
            if f == LEAF {
                return self.positive[node];
            }
            node = if x[f as usize] <= self.threshold[node] {
                self.left[node] as usize
            } else {
                self.right[node] as usize
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Fraction of trees voting positive.
    pub fn score(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        let votes = self.trees.iter().filter(|t| t.vote(x)).count();
        votes as f64 / self.trees.len() as f64
    }
}

fn gini(pos: f64, neg: f64) -> f64 {
    let total = pos + neg;
    if total <= 0.0 {
        return 0.0;
    }
    let p = pos / total;
    let q = neg / total;
    1.0 - p * p - q * q
}

struct Grower<'a, R> {
    /// Features by column: `columns.row(f)[i]` is feature `f` of sample `i`.
    columns: &'a Matrix,
    y: &'a [bool],
    params: &'a ForestParams,
    per_split: usize,
    rng: &'a mut R,
    tree: Tree,
    scratch: Vec<(f64, bool, f64)>,
    features: Vec<usize>,
}

impl<R: Rng> Grower<'_, R> {
    /// `samples` are `(row, weight, multiplicity)`.
    fn grow(&mut self, samples: &mut [(usize, f64, u32)], depth: usize) -> usize {
        let node = self.tree.push();
        let (mut pos, mut neg, mut count) = (0.0, 0.0, 0u32);
        for &(i, w, c) in samples.iter() {
            if self.y[i] {
                pos += w;
            } else {
                neg += w;
            }
            count += c;
        }
        // ties vote positive
        self.tree.positive[node] = pos >= neg;
        if depth >= self.params.max_depth
            || (count as usize) < self.params.min_samples_split
            || pos == 0.0
            || neg == 0.0
        {
            return node;
        }
        let Some((feature, threshold)) = self.best_split(samples, pos, neg) else {
            return node;
        };
        let mut split = 0;
        for k in 0..samples.len() {
            if self.columns.get(feature, samples[k].0) <= threshold {
                samples.swap(k, split);
                split += 1;
            }
        }
        let (l, r) = samples.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.tree.feature[node] = feature as i32;
        self.tree.threshold[node] = threshold;
        self.tree.left[node] = left as u32;
        self.tree.right[node] = right as u32;
        node
    }

    fn best_split(
        &mut self,
        samples: &[(usize, f64, u32)],
        pos: f64,
        neg: f64,
    ) -> Option<(usize, f64)> {
        let d = self.columns.rows();
        let parent = (pos + neg) * gini(pos, neg);
        let mut best: Option<(f64, usize, f64)> = None;
        // Features are drawn without replacement until `per_split` have been
        // tried and at least one of them varies over the node's samples, so
        // sparse columns do not stop a tree early.
        let (mut tried, mut constant) = (0, 0);
        for k in 0..d {
            if tried >= self.per_split && tried > constant {
                break;
            }
            let j = self.rng.gen_range(k..d);
            self.features.swap(k, j);
            let f = self.features[k];
            tried += 1;
            self.scratch.clear();
            let column = self.columns.row(f);
            self.scratch
                .extend(samples.iter().map(|&(i, w, _)| (column[i], self.y[i], w)));
            self.scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.scratch[0].0 >= self.scratch[self.scratch.len() - 1].0 {
                constant += 1;
                continue;
            }
            let (mut lp, mut ln) = (0.0, 0.0);
            for k in 0..self.scratch.len() - 1 {
                let (v, label, w) = self.scratch[k];
                if label {
                    lp += w;
                } else {
                    ln += w;
                }
                let next = self.scratch[k + 1].0;
                if next <= v {
                    continue;
                }
                let (rp, rn) = (pos - lp, neg - ln);
                let impurity = (lp + ln) * gini(lp, ln) + (rp + rn) * gini(rp, rn);
                if impurity < parent - 1e-12 && best.is_none_or(|(b, _, _)| impurity < b) {
                    best = Some((impurity, f, 0.5 * (v + next)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

pub fn fit(
    x: &Matrix,
    y: &[bool],
    class_weight: [f64; 2],
    params: &ForestParams,
    rng_seed: u64,
) -> Forest {
    let n = x.rows();
    let per_split = params
        .features_per_split
        .unwrap_or_else(|| (x.cols() as f64).sqrt().ceil() as usize)
        .max(1);
    let mut trees = Vec::with_capacity(params.trees);
    let mut counts = vec![0u32; n];
    let mut scratch = Vec::with_capacity(n);
    let columns = x.transpose();
    for t in 0..params.trees {
        let mut rng = seed::rng(seed::derive(rng_seed, &[b"tree", &(t as u64).to_le_bytes()]));
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..n {
            counts[rng.gen_range(0..n)] += 1;
        }
        let mut samples: Vec<(usize, f64, u32)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (i, c as f64 * class_weight[y[i] as usize], c))
            .collect();
        let mut grower = Grower {
            columns: &columns,
            y,
            params,
            per_split,
            rng: &mut rng,
            tree: Tree::default(),
            scratch: std::mem::take(&mut scratch),
            features: (0..x.cols()).collect(),
        };
        grower.grow(&mut samples, 0);
        scratch = grower.scratch;
        trees.push(grower.tree);
    }
    Forest { trees }
}
