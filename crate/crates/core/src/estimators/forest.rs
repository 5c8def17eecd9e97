//! Probability forest: bootstrap classification trees with Gini splits whose
//! leaves hold class frequencies; predictions average leaf frequencies.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use super::{ForestParams, PredictionMode};
use crate::rng::stream_rng;

#[derive(Debug, Clone)]
enum Node {
    Leaf(Vec<f64>),
    Split {
        feature: usize,
        /// values `<= threshold` go left
        threshold: u32,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn leaf_for(&self, features: &[Vec<u32>], row: usize) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if features[*feature][row] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct ForestModel {
    trees: Vec<Tree>,
    n_levels: usize,
}

struct Grower<'a> {
    features: &'a [Vec<u32>],
    feature_max: &'a [u32],
    y: &'a [usize],
    n_levels: usize,
    mtry: usize,
    min_node_size: usize,
}

fn sum_sq_over_n(counts: &[f64], n: f64) -> f64 {
    counts.iter().map(|c| c * c).sum::<f64>() / n
}

impl Grower<'_> {
    fn class_counts(&self, samples: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.n_levels];
        for &s in samples {
            c[self.y[s]] += 1.0;
        }
        c
    }

    /// Best `(feature, threshold)` by Gini decrease among `mtry` random
    /// features, or `None` when nothing improves on the parent.
    fn best_split(&self, samples: &[usize], parent: &[f64], rng: &mut impl Rng) -> Option<(usize, u32)> {
        let n = samples.len() as f64;
        let parent_score = sum_sq_over_n(parent, n);
        let mut best: Option<(f64, usize, u32)> = None;
        let candidates = index::sample(rng, self.features.len(), self.mtry);
        for f in candidates.iter() {
            let values = &self.features[f];
            let width = self.feature_max[f] as usize + 1;
            let mut table = vec![0.0f64; width * self.n_levels];
            let mut present = vec![false; width];
            for &s in samples {
                let v = values[s] as usize;
                table[v * self.n_levels + self.y[s]] += 1.0;
                present[v] = true;
            }
            let mut left = vec![0.0f64; self.n_levels];
            let mut n_left = 0.0;
            for v in 0..width {
                if !present[v] {
                    continue;
                }
                for c in 0..self.n_levels {
                    let t = table[v * self.n_levels + c];
                    left[c] += t;
                    n_left += t;
                }
                if n_left >= n {
                    break;
                }
                let right: Vec<f64> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
                let score = sum_sq_over_n(&left, n_left) + sum_sq_over_n(&right, n - n_left);
                if score > parent_score + 1e-12 && best.is_none_or(|b| score > b.0) {
                    best = Some((score, f, v as u32));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&self, bag: Vec<usize>, rng: &mut impl Rng) -> Tree {
        let mut nodes = vec![Node::Leaf(Vec::new())];
        let mut stack = vec![(0usize, bag)];
        while let Some((id, samples)) = stack.pop() {
            let counts = self.class_counts(&samples);
            let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
            let split = if pure || samples.len() <= self.min_node_size {
                None
            } else {
                self.best_split(&samples, &counts, rng)
            };
            match split {
                None => {
                    let n = samples.len() as f64;
                    nodes[id] = Node::Leaf(counts.iter().map(|c| c / n).collect());
                }
                Some((feature, threshold)) => {
                    let (l, r): (Vec<usize>, Vec<usize>) = samples
                        .iter()
                        .partition(|&&s| self.features[feature][s] <= threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf(Vec::new()));
                    nodes.push(Node::Leaf(Vec::new()));
                    nodes[id] = Node::Split {
                        feature,
                        threshold,
                        left,
                        right: left + 1,
                    };
                    stack.push((left + 1, r));
                    stack.push((left, l));
                }
            }
        }
        Tree { nodes }
    }
}

/// Result of fitting: the model and its training-row predictions.
pub(crate) struct ForestFit {
    pub model: ForestModel,
    pub fitted: DMatrix<f64>,
    pub oob_fallback_rows: usize,
}

pub(crate) fn default_mtry(n_features: usize) -> usize {
    ((n_features as f64).sqrt().ceil() as usize).clamp(1, n_features.max(1))
}

pub(crate) fn fit_forest(features: &[Vec<u32>], y: &[usize], n_levels: usize, params: &ForestParams) -> ForestFit {
    let n = y.len();
    let feature_max: Vec<u32> = features.iter().map(|f| f.iter().copied().max().unwrap_or(0)).collect();
    let mtry = params.mtry.unwrap_or_else(|| default_mtry(features.len())).clamp(1, features.len());
    let grower = Grower {
        features,
        feature_max: &feature_max,
        y,
        n_levels,
        mtry,
        min_node_size: params.min_node_size.max(1),
    };
    let grown: Vec<(Tree, Vec<bool>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(params.seed, t as u64);
            let mut in_bag = vec![false; n];
            let bag: Vec<usize> = (0..n)
                .map(|_| {
                    let s = rng.random_range(0..n);
                    in_bag[s] = true;
                    s
                })
                .collect();
            (grower.grow(bag, &mut rng), in_bag)
        })
        .collect();

    let mut fitted = DMatrix::zeros(n, n_levels);
    let mut oob_fallback_rows = 0;
    for i in 0..n {
        let use_all = match params.prediction_mode {
            PredictionMode::AllTrees => true,
            PredictionMode::OutOfBag => {
                let any_oob = grown.iter().any(|(_, bag)| !bag[i]);
                if !any_oob {
                    oob_fallback_rows += 1;
                }
                !any_oob
            }
        };
        let mut used = 0.0;
        for (tree, bag) in &grown {
            if use_all || !bag[i] {
                for (c, p) in tree.leaf_for(features, i).iter().enumerate() {
                    fitted[(i, c)] += p;
                }
                used += 1.0;
            }
        }
        for c in 0..n_levels {
            fitted[(i, c)] /= used;
        }
    }
    ForestFit {
        model: ForestModel {
            trees: grown.into_iter().map(|(t, _)| t).collect(),
            n_levels,
        },
        fitted,
        oob_fallback_rows,
    }
}

impl ForestModel {
    /// Average over all trees.
    pub(crate) fn predict(&self, features: &[Vec<u32>], n: usize) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(n, self.n_levels);
        for tree in &self.trees {
            for i in 0..n {
                for (c, v) in tree.leaf_for(features, i).iter().enumerate() {
                    p[(i, c)] += v;
                }
            }
        }
        p / self.trees.len() as f64
    }
}
