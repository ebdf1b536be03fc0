//! Bootstrap-aggregated CART trees split on weighted Gini impurity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::derive_seed_index;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfcParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features tried per node; `None` means the ceiling of the square root of the feature count.
    pub max_features: Option<usize>,
}

impl Default for RfcParams {
    fn default() -> Self {
        Self {
            n_trees: 200,
            max_depth: 5,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Leaf {
        /// Weighted fraction of stress samples reaching the leaf.
        p_stress: f64,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn p_stress(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { p_stress } => return p_stress,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub n_features: usize,
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Mean of the trees' leaf probabilities.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.p_stress(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Grows `n_trees` trees, each on a bootstrap resample drawn from its own
/// seed, so the result does not depend on how trees are scheduled.
pub fn train_rfc(x: &[Vec<f64>], y: &[u8], sample_weight: &[f64], p: &RfcParams, seed: u64) -> Result<Forest> {
    super::require_both_classes(y)?;
    let d = x.first().map_or(0, Vec::len);
    if d == 0 || p.n_trees == 0 {
        return Err(Error::InvalidSpec(
            "forest needs at least one feature and one tree".into(),
        ));
    }
    let max_features = p.max_features.unwrap_or((d as f64).sqrt().ceil() as usize).clamp(1, d);
    let trees = (0..p.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed_index(seed, t as u64));
            let n = x.len();
            let mut counts = vec![0u32; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1;
            }
            let samples: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
            let w: Vec<f64> = (0..n).map(|i| sample_weight[i] * counts[i] as f64).collect();
            let mut grower = Grower {
                x,
                y,
                w: &w,
                max_depth: p.max_depth,
                max_features,
                rng,
                nodes: Vec::new(),
            };
            grower.grow(samples, 0);
            Tree { nodes: grower.nodes }
        })
        .collect();
    Ok(Forest { n_features: d, trees })
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    w: &'a [f64],
    max_depth: usize,
    max_features: usize,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Grower<'_> {
    fn class_weights(&self, idx: &[usize]) -> [f64; 2] {
        let mut c = [0.0; 2];
        for &i in idx {
            c[self.y[i] as usize] += self.w[i];
        }
        c
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let c = self.class_weights(&idx);
        let total = c[0] + c[1];
        self.nodes.push(Node::Leaf { p_stress: c[1] / total });
        if depth >= self.max_depth || idx.len() < 2 || c[0] == 0.0 || c[1] == 0.0 {
            return id;
        }
        let Some(best) = self.best_split(&idx, c) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][best.feature] <= best.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Features are visited in random order until `max_features` non-constant
    /// ones have been tried. Scores are the sum over children of
    /// `(w0^2 + w1^2) / W`; larger means purer.
    fn best_split(&mut self, idx: &[usize], parent: [f64; 2]) -> Option<BestSplit> {
        let d = self.x[idx[0]].len();
        let parent_score = (parent[0] * parent[0] + parent[1] * parent[1]) / (parent[0] + parent[1]);
        let mut order: Vec<usize> = (0..d).collect();
        let mut tried = 0;
        let mut best: Option<BestSplit> = None;
        let mut sorted = idx.to_vec();
        for k in 0..d {
            if tried >= self.max_features {
                break;
            }
            let j = self.rng.random_range(k..d);
            order.swap(k, j);
            let f = order[k];
            sorted.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let lo = self.x[sorted[0]][f];
            let hi = self.x[sorted[sorted.len() - 1]][f];
            if lo == hi {
                continue;
            }
            tried += 1;
            let mut left = [0.0; 2];
            for s in 0..sorted.len() - 1 {
                let i = sorted[s];
                left[self.y[i] as usize] += self.w[i];
                let v = self.x[i][f];
                let next = self.x[sorted[s + 1]][f];
                if v == next {
                    continue;
                }
                let right = [parent[0] - left[0], parent[1] - left[1]];
                let wl = left[0] + left[1];
                let wr = right[0] + right[1];
                if wl <= 0.0 || wr <= 0.0 {
                    continue;
                }
                let score =
                    (left[0] * left[0] + left[1] * left[1]) / wl + (right[0] * right[0] + right[1] * right[1]) / wr;
                if score > parent_score * (1.0 + 1e-12) && best.as_ref().is_none_or(|b| score > b.score) {
                    let mid = v + (next - v) / 2.0;
                    let threshold = if mid < next { mid } else { v };
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }
}
