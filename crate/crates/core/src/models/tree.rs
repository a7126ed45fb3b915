//! Greedy binary regression trees.
//!
//! A single grower serves CART, the forest members and both boosting
//! flavours. It works on per-row gradient/hessian pairs: with `g = -y`,
//! `h = 1` and `lambda = gamma = 0` the leaf value `-G / (H + lambda)` is the
//! mean target and the split gain is half the reduction in squared error,
//! i.e. plain variance-reduction CART.
//!
//! Candidate thresholds are midpoints between consecutive distinct values.
//! Ties in gain go to the lowest feature index, then the lowest threshold.
//! A node is split only when its best gain is strictly positive.

use nalgebra::DMatrix;
use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
        n_samples: usize,
        grad_sum: f64,
        hess_sum: f64,
    },
    Leaf {
        value: f64,
        n_samples: usize,
        grad_sum: f64,
        hess_sum: f64,
    },
}

impl Node {
    pub fn n_samples(&self) -> usize {
        match self {
            Node::Split { n_samples, .. } | Node::Leaf { n_samples, .. } => *n_samples,
        }
    }

    pub fn hess_sum(&self) -> f64 {
        match self {
            Node::Split { hess_sum, .. } | Node::Leaf { hess_sum, .. } => *hess_sum,
        }
    }
}

/// Nodes in pre-order; the root is node 0. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub max_depth: Option<usize>,
    pub n_features: usize,
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value, .. } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let mut row = vec![0.0; x.ncols()];
        (0..x.nrows())
            .map(|i| {
                row.iter_mut().enumerate().for_each(|(j, v)| *v = x[(i, j)]);
                self.predict_row(&row)
            })
            .collect()
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Split gain per feature, divided by the root's hessian sum (the
    /// sample count for squared loss). Not normalized.
    pub fn gain_by_feature(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        let root = self.nodes[0].hess_sum();
        for n in &self.nodes {
            if let Node::Split { feature, gain, .. } = n {
                out[*feature] += gain / root;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub lambda: f64,
    pub gamma: f64,
    /// Stop when every row in a node has the same gradient and hessian.
    pub stop_on_constant: bool,
    /// Features drawn per node; `None` means all.
    pub mtry: Option<usize>,
}

impl GrowParams {
    pub fn cart(max_depth: Option<usize>, min_samples_leaf: usize) -> Self {
        Self {
            max_depth,
            min_samples_leaf: min_samples_leaf.max(1),
            lambda: 0.0,
            gamma: 0.0,
            stop_on_constant: true,
            mtry: None,
        }
    }
}

struct Grower<'a> {
    x: &'a DMatrix<f64>,
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GrowParams,
    rng: Option<&'a mut ChaCha8Rng>,
    nodes: Vec<Node>,
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

impl Grower<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.ncols();
        match (self.params.mtry, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = index::sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, rows: &[usize], g_total: f64, h_total: f64) -> Option<Best> {
        let min_leaf = self.params.min_samples_leaf;
        if rows.len() < 2 * min_leaf {
            return None;
        }
        let parent = self.score(g_total, h_total);
        let mut best: Option<Best> = None;
        let mut order = rows.to_vec();
        for feature in self.candidate_features() {
            order.copy_from_slice(rows);
            order.sort_by(|&a, &b| {
                self.x[(a, feature)]
                    .total_cmp(&self.x[(b, feature)])
                    .then(a.cmp(&b))
            });
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let r = order[k];
                gl += self.grad[r];
                hl += self.hess[r];
                let (lo, hi) = (self.x[(r, feature)], self.x[(order[k + 1], feature)]);
                if lo == hi || k + 1 < min_leaf || order.len() - k - 1 < min_leaf {
                    continue;
                }
                let (gr, hr) = (g_total - gl, h_total - hl);
                let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent) - self.params.gamma;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Best {
                        gain,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best.filter(|b| b.gain > 0.0)
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let g: f64 = rows.iter().map(|&r| self.grad[r]).sum();
        let h: f64 = rows.iter().map(|&r| self.hess[r]).sum();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: -g / (h + self.params.lambda),
            n_samples: rows.len(),
            grad_sum: g,
            hess_sum: h,
        });
        let depth_ok = self.params.max_depth.is_none_or(|m| depth < m);
        let constant = self.params.stop_on_constant && {
            let (g0, h0) = (self.grad[rows[0]], self.hess[rows[0]]);
            rows.iter().all(|&r| self.grad[r] == g0 && self.hess[r] == h0)
        };
        if !depth_ok || constant {
            return id;
        }
        let Some(best) = self.best_split(&rows, g, h) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[(r, best.feature)] <= best.threshold);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            gain: best.gain,
            n_samples: rows.len(),
            grad_sum: g,
            hess_sum: h,
        };
        id
    }
}

pub(crate) fn grow_tree(
    x: &DMatrix<f64>,
    grad: &[f64],
    hess: &[f64],
    rows: Vec<usize>,
    params: &GrowParams,
    rng: Option<&mut ChaCha8Rng>,
) -> RegressionTree {
    let mut grower = Grower {
        x,
        grad,
        hess,
        params,
        rng,
        nodes: Vec::new(),
    };
    grower.grow(rows, 0);
    RegressionTree {
        nodes: grower.nodes,
        max_depth: params.max_depth,
        n_features: x.ncols(),
    }
}

/// CART regression tree on raw targets.
pub fn fit_tree(
    data: &super::DesignMatrix,
    max_depth: Option<usize>,
    min_samples_leaf: usize,
) -> crate::Result<RegressionTree> {
    if max_depth == Some(0) {
        return Err(crate::Error::Validation("max_depth must be >= 1".into()));
    }
    let grad: Vec<f64> = data.y().iter().map(|y| -y).collect();
    let hess = vec![1.0; grad.len()];
    Ok(grow_tree(
        data.x(),
        &grad,
        &hess,
        (0..data.n_rows()).collect(),
        &GrowParams::cart(max_depth, min_samples_leaf),
        None,
    ))
}
