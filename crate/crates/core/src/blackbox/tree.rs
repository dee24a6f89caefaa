//! Arena-backed binary decision trees and the greedy builder shared by CART,
//! random forests and gradient boosting.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: Vec<f64>,
    },
}

/// A fitted tree. Node 0 is the root; `x[feature] < threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn leaf_value(&self, x: &[f64]) -> &[f64] {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if x[*feature] < *threshold { *left } else { *right },
                TreeNode::Leaf { value } => return value,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], idx: usize) -> usize {
            match &nodes[idx] {
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }
}

/// What a tree is fitted to.
pub(crate) enum Target<'a> {
    /// Class labels; Gini impurity, leaves hold class frequencies.
    Classes { labels: &'a [usize], n_classes: usize },
    /// Gradient/Hessian pairs; squared error on `residual`, leaves hold the
    /// Newton step Σr / Σh.
    Newton { residual: &'a [f64], hessian: &'a [f64] },
}

impl Target<'_> {
    fn stat_len(&self) -> usize {
        match self {
            Target::Classes { n_classes, .. } => 1 + n_classes,
            Target::Newton { .. } => 4,
        }
    }

    #[inline]
    fn accumulate(&self, stats: &mut [f64], i: usize, w: f64, sign: f64) {
        let w = sign * w;
        stats[0] += w;
        match self {
            Target::Classes { labels, .. } => stats[1 + labels[i]] += w,
            Target::Newton { residual, hessian } => {
                let r = residual[i];
                stats[1] += w * r;
                stats[2] += w * r * r;
                stats[3] += w * hessian[i];
            }
        }
    }

    /// Weighted impurity times total weight (Gini) or residual sum of squares.
    #[inline]
    fn cost(&self, stats: &[f64]) -> f64 {
        let w = stats[0];
        if w <= 0.0 {
            return 0.0;
        }
        match self {
            Target::Classes { .. } => w - stats[1..].iter().map(|c| c * c).sum::<f64>() / w,
            Target::Newton { .. } => (stats[2] - stats[1] * stats[1] / w).max(0.0),
        }
    }

    fn leaf_value(&self, stats: &[f64]) -> Vec<f64> {
        match self {
            Target::Classes { .. } => {
                let w = stats[0];
                stats[1..].iter().map(|c| c / w).collect()
            }
            Target::Newton { .. } => {
                let h = stats[3];
                vec![if h > 1e-150 { stats[1] / h } else { 0.0 }]
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    /// Minimum total sample weight on each side of a split.
    pub min_leaf: f64,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

/// Per-feature sample orderings by ascending value (ties by index).
pub(crate) fn presort(x: &Matrix) -> Vec<Vec<u32>> {
    (0..x.cols())
        .map(|f| {
            let mut idx: Vec<u32> = (0..x.rows() as u32).collect();
            idx.sort_by(|&a, &b| {
                x.get(a as usize, f)
                    .total_cmp(&x.get(b as usize, f))
                    .then(a.cmp(&b))
            });
            idx
        })
        .collect()
}

struct Builder<'a> {
    x: &'a Matrix,
    target: &'a Target<'a>,
    weights: &'a [f64],
    params: GrowParams,
    nodes: Vec<TreeNode>,
    goes_left: Vec<bool>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Grows a tree on the samples with positive weight. `sorted` holds, for
/// every feature, the sample indices in ascending value order; entries with
/// zero weight are skipped.
pub(crate) fn grow_tree(
    x: &Matrix,
    target: &Target<'_>,
    weights: &[f64],
    sorted: &[Vec<u32>],
    params: GrowParams,
    mut rng: Option<&mut Rng>,
) -> DecisionTree {
    let lists: Vec<Vec<u32>> = sorted
        .iter()
        .map(|l| l.iter().copied().filter(|&i| weights[i as usize] > 0.0).collect())
        .collect();
    let mut b = Builder {
        x,
        target,
        weights,
        params,
        nodes: Vec::new(),
        goes_left: vec![false; x.rows()],
    };
    b.grow(lists, 0, &mut rng);
    DecisionTree { nodes: b.nodes }
}

impl Builder<'_> {
    fn node_stats(&self, list: &[u32]) -> Vec<f64> {
        let mut s = vec![0.0; self.target.stat_len()];
        for &i in list {
            let i = i as usize;
            self.target.accumulate(&mut s, i, self.weights[i], 1.0);
        }
        s
    }

    fn grow(&mut self, lists: Vec<Vec<u32>>, depth: usize, rng: &mut Option<&mut Rng>) -> usize {
        let stats = self.node_stats(&lists[0]);
        let id = self.nodes.len();
        self.nodes.push(TreeNode::Leaf {
            value: self.target.leaf_value(&stats),
        });
        let parent_cost = self.target.cost(&stats);
        let total = stats[0];
        if depth >= self.params.max_depth
            || total < 2.0 * self.params.min_leaf
            || parent_cost <= 1e-12 * total
        {
            return id;
        }
        let p = lists.len();
        let features: Vec<usize> = match (self.params.max_features, rng.as_deref_mut()) {
            (Some(m), Some(r)) if m < p => {
                let mut f = sample(r, p, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        };
        let Some(best) = self.best_split(&lists, &features, &stats, parent_cost) else {
            return id;
        };

        for &i in &lists[best.feature] {
            let i = i as usize;
            self.goes_left[i] = self.x.get(i, best.feature) < best.threshold;
        }
        let mut left_lists = Vec::with_capacity(p);
        let mut right_lists = Vec::with_capacity(p);
        for list in lists {
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&i| self.goes_left[i as usize]);
            left_lists.push(l);
            right_lists.push(r);
        }
        let left = self.grow(left_lists, depth + 1, rng);
        let right = self.grow(right_lists, depth + 1, rng);
        self.nodes[id] = TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Highest-gain split; ties keep the lower feature, then lower threshold.
    fn best_split(&self, lists: &[Vec<u32>], features: &[usize], parent: &[f64], parent_cost: f64) -> Option<BestSplit> {
        let min_gain = 1e-12 * parent_cost.max(f64::MIN_POSITIVE);
        let mut best: Option<BestSplit> = None;
        let mut left = vec![0.0; parent.len()];
        let mut right = vec![0.0; parent.len()];
        for &f in features {
            let list = &lists[f];
            left.iter_mut().for_each(|v| *v = 0.0);
            right.copy_from_slice(parent);
            for k in 0..list.len().saturating_sub(1) {
                let i = list[k] as usize;
                let w = self.weights[i];
                self.target.accumulate(&mut left, i, w, 1.0);
                self.target.accumulate(&mut right, i, w, -1.0);
                let v = self.x.get(i, f);
                let v_next = self.x.get(list[k + 1] as usize, f);
                if v_next <= v {
                    continue;
                }
                if left[0] < self.params.min_leaf || right[0] < self.params.min_leaf {
                    continue;
                }
                let gain = parent_cost - self.target.cost(&left) - self.target.cost(&right);
                if gain > min_gain && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = v + 0.5 * (v_next - v);
                    if threshold <= v {
                        threshold = v_next;
                    }
                    best = Some(BestSplit {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }
}
