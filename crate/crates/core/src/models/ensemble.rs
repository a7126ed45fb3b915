//! Tree ensembles: bagged random forest, first-order gradient boosting and
//! second-order (regularized) boosting.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, GrowParams, RegressionTree};
use super::DesignMatrix;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Forest,
    GradientBoosting,
    Xgboost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub kind: EnsembleKind,
    pub trees: Vec<RegressionTree>,
    /// 1 for forests.
    pub learning_rate: f64,
    /// 0 for forests.
    pub base_score: f64,
    /// Per-tree stream seeds (forest only).
    pub tree_seeds: Vec<u64>,
    pub n_features: usize,
    /// Training loss `sum 1/2 (y - yhat)^2` after base score and each tree
    /// (boosting only).
    pub loss_path: Vec<f64>,
    /// Loss plus accumulated `gamma * leaves + 1/2 lambda |lr * w|^2`.
    pub objective_path: Vec<f64>,
}

impl Ensemble {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.ncols(),
            });
        }
        let mut out = vec![0.0; x.nrows()];
        for t in &self.trees {
            for (o, p) in out.iter_mut().zip(t.predict(x)) {
                *o += p;
            }
        }
        Ok(match self.kind {
            EnsembleKind::Forest => {
                let b = self.trees.len() as f64;
                out.into_iter().map(|s| s / b).collect()
            }
            _ => out
                .into_iter()
                .map(|s| self.base_score + self.learning_rate * s)
                .collect(),
        })
    }

    /// Per-stage predictions on `x` after 0, 1, .., K trees (boosting) or the
    /// running mean after 1, .., B trees (forest).
    pub fn staged_predict(&self, x: &DMatrix<f64>) -> Result<Vec<Vec<f64>>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.ncols(),
            });
        }
        let mut acc = vec![0.0; x.nrows()];
        let mut stages = Vec::with_capacity(self.trees.len() + 1);
        if self.kind != EnsembleKind::Forest {
            stages.push(vec![self.base_score; x.nrows()]);
        }
        for (k, t) in self.trees.iter().enumerate() {
            for (a, p) in acc.iter_mut().zip(t.predict(x)) {
                *a += p;
            }
            stages.push(match self.kind {
                EnsembleKind::Forest => acc.iter().map(|s| s / (k + 1) as f64).collect(),
                _ => acc
                    .iter()
                    .map(|s| self.base_score + self.learning_rate * s)
                    .collect(),
            });
        }
        Ok(stages)
    }
}

fn default_trees() -> usize {
    100
}

fn default_min_leaf() -> usize {
    1
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
    #[serde(default = "default_min_leaf")]
    pub min_samples_leaf: usize,
    /// Features tried per node; `None` means `ceil(d / 3)`.
    #[serde(default)]
    pub mtry: Option<usize>,
    #[serde(default = "default_true")]
    pub bootstrap: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            mtry: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

pub fn fit_forest(data: &DesignMatrix, config: &ForestConfig) -> Result<Ensemble> {
    let d = data.n_features();
    let n = data.n_rows();
    if config.n_trees == 0 {
        return Err(Error::Validation("n_trees must be >= 1".into()));
    }
    if config.max_depth == Some(0) {
        return Err(Error::Validation("max_depth must be >= 1".into()));
    }
    let mtry = config.mtry.unwrap_or(d.div_ceil(3));
    if !(1..=d).contains(&mtry) {
        return Err(Error::Validation(format!("mtry must be in [1, {d}], got {mtry}")));
    }
    let params = GrowParams {
        mtry: Some(mtry),
        ..GrowParams::cart(config.max_depth, config.min_samples_leaf)
    };
    let grad: Vec<f64> = data.y().iter().map(|y| -y).collect();
    let hess = vec![1.0; n];
    let seeds: Vec<u64> = (0..config.n_trees as u64).map(|b| rng::mix(config.seed, b)).collect();
    let trees = seeds
        .par_iter()
        .map(|&s| {
            let mut r = rng::stream(s, 0);
            let rows: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| r.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(data.x(), &grad, &hess, rows, &params, Some(&mut r))
        })
        .collect();
    Ok(Ensemble {
        kind: EnsembleKind::Forest,
        trees,
        learning_rate: 1.0,
        base_score: 0.0,
        tree_seeds: seeds,
        n_features: d,
        loss_path: Vec::new(),
        objective_path: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtConfig {
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    #[serde(default = "GbtConfig::default_rate")]
    pub learning_rate: f64,
    #[serde(default = "GbtConfig::default_depth")]
    pub max_depth: Option<usize>,
    #[serde(default = "default_min_leaf")]
    pub min_samples_leaf: usize,
    /// Recorded for provenance; the fit itself draws no randomness.
    #[serde(default)]
    pub seed: u64,
}

impl GbtConfig {
    fn default_rate() -> f64 {
        0.1
    }

    fn default_depth() -> Option<usize> {
        Some(3)
    }
}

impl Default for GbtConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            learning_rate: 0.1,
            max_depth: Some(3),
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XgbConfig {
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    #[serde(default = "XgbConfig::default_rate")]
    pub learning_rate: f64,
    #[serde(default = "XgbConfig::default_depth")]
    pub max_depth: Option<usize>,
    #[serde(default = "XgbConfig::default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_min_leaf")]
    pub min_samples_leaf: usize,
}

impl XgbConfig {
    fn default_rate() -> f64 {
        0.3
    }

    fn default_depth() -> Option<usize> {
        Some(6)
    }

    fn default_lambda() -> f64 {
        1.0
    }
}

impl Default for XgbConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            learning_rate: 0.3,
            max_depth: Some(6),
            lambda: 1.0,
            gamma: 0.0,
            min_samples_leaf: 1,
        }
    }
}

fn check_boosting(n_trees: usize, rate: f64, depth: Option<usize>) -> Result<()> {
    if n_trees == 0 {
        return Err(Error::Validation("n_trees must be >= 1".into()));
    }
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(Error::Validation(format!("learning_rate must be in (0, 1], got {rate}")));
    }
    if depth == Some(0) {
        return Err(Error::Validation("max_depth must be >= 1".into()));
    }
    Ok(())
}

fn boost(
    data: &DesignMatrix,
    kind: EnsembleKind,
    n_trees: usize,
    rate: f64,
    params: &GrowParams,
) -> Ensemble {
    let y = data.y();
    let n = y.len();
    let base = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    let hess = vec![1.0; n];
    let loss = |p: &[f64]| 0.5 * p.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let mut loss_path = vec![loss(&pred)];
    let mut objective_path = loss_path.clone();
    let mut penalty = 0.0;
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let grad: Vec<f64> = pred.iter().zip(y).map(|(p, t)| p - t).collect();
        let tree = grow_tree(data.x(), &grad, &hess, (0..n).collect(), params, None);
        for (p, v) in pred.iter_mut().zip(tree.predict(data.x())) {
            *p += rate * v;
        }
        for node in &tree.nodes {
            if let super::Node::Leaf { value, .. } = node {
                penalty += params.gamma + 0.5 * params.lambda * (rate * value).powi(2);
            }
        }
        let l = loss(&pred);
        loss_path.push(l);
        objective_path.push(l + penalty);
        trees.push(tree);
    }
    Ensemble {
        kind,
        trees,
        learning_rate: rate,
        base_score: base,
        tree_seeds: Vec::new(),
        n_features: data.n_features(),
        loss_path,
        objective_path,
    }
}

/// Least-squares gradient boosting: each tree is a CART fit to the current
/// residuals.
pub fn fit_gbt(data: &DesignMatrix, config: &GbtConfig) -> Result<Ensemble> {
    check_boosting(config.n_trees, config.learning_rate, config.max_depth)?;
    let params = GrowParams::cart(config.max_depth, config.min_samples_leaf);
    Ok(boost(
        data,
        EnsembleKind::GradientBoosting,
        config.n_trees,
        config.learning_rate,
        &params,
    ))
}

/// Second-order boosting for squared loss with L2 leaf penalty `lambda`
/// and per-split penalty `gamma`.
pub fn fit_xgb(data: &DesignMatrix, config: &XgbConfig) -> Result<Ensemble> {
    check_boosting(config.n_trees, config.learning_rate, config.max_depth)?;
    if !(config.lambda >= 0.0) || !(config.gamma >= 0.0) {
        return Err(Error::Validation("lambda and gamma must be >= 0".into()));
    }
    let params = GrowParams {
        max_depth: config.max_depth,
        min_samples_leaf: config.min_samples_leaf.max(1),
        lambda: config.lambda,
        gamma: config.gamma,
        stop_on_constant: false,
        mtry: None,
    };
    Ok(boost(
        data,
        EnsembleKind::Xgboost,
        config.n_trees,
        config.learning_rate,
        &params,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fit_tree;

    fn data(seed: u64, n: usize, d: usize) -> DesignMatrix {
        let mut r = rng::stream(seed, 99);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| r.gen_range(-1.0..1.0)).collect()).collect();
        let y = rows.iter().map(|x| x[0] * 2.0 + x[d - 1].powi(2) + r.gen_range(-0.1..0.1)).collect();
        DesignMatrix::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn single_unbagged_full_tree_forest_is_cart() {
        let dm = data(1, 40, 4);
        let cfg = ForestConfig {
            n_trees: 1,
            mtry: Some(4),
            bootstrap: false,
            max_depth: Some(5),
            ..ForestConfig::default()
        };
        let f = fit_forest(&dm, &cfg).unwrap();
        let t = fit_tree(&dm, Some(5), 1).unwrap();
        assert_eq!(f.trees[0].nodes, t.nodes);
        assert_eq!(f.predict(dm.x()).unwrap(), t.predict(dm.x()));
    }

    #[test]
    fn forest_is_mean_of_members() {
        let dm = data(2, 50, 3);
        let f = fit_forest(&dm, &ForestConfig { n_trees: 7, seed: 5, ..Default::default() }).unwrap();
        let p = f.predict(dm.x()).unwrap();
        for (i, v) in p.iter().enumerate() {
            let mean = f.trees.iter().map(|t| t.predict(dm.x())[i]).sum::<f64>() / 7.0;
            assert!((v - mean).abs() < 1e-12);
        }
        assert_eq!(f.tree_seeds.len(), 7);
    }

    #[test]
    fn gbt_single_full_step_matches_cart() {
        let dm = data(3, 30, 2);
        let cfg = GbtConfig { n_trees: 1, learning_rate: 1.0, max_depth: Some(2), ..Default::default() };
        let g = fit_gbt(&dm, &cfg).unwrap();
        let t = fit_tree(&dm, Some(2), 1).unwrap();
        for (a, b) in g.predict(dm.x()).unwrap().iter().zip(t.predict(dm.x())) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_target_boosting_is_flat() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let dm = DesignMatrix::from_rows(&rows, vec![2.5; 10]).unwrap();
        let g = fit_gbt(&dm, &GbtConfig { n_trees: 5, ..Default::default() }).unwrap();
        assert!(g.trees.iter().all(|t| t.nodes.len() == 1 && t.predict_row(&[0.0]) == 0.0));
        assert_eq!(g.predict(dm.x()).unwrap(), vec![2.5; 10]);
    }

    #[test]
    fn huge_gamma_keeps_only_base_score() {
        let dm = data(4, 30, 3);
        let x = fit_xgb(&dm, &XgbConfig { n_trees: 5, gamma: 1e9, ..Default::default() }).unwrap();
        assert!(x.trees.iter().all(|t| t.nodes.len() == 1));
        let base = dm.y().iter().sum::<f64>() / 30.0;
        assert!(x.predict(dm.x()).unwrap().iter().all(|p| (p - base).abs() < 1e-12));
    }

    #[test]
    fn loss_path_never_increases() {
        let dm = data(5, 40, 3);
        let x = fit_xgb(&dm, &XgbConfig { n_trees: 20, ..Default::default() }).unwrap();
        assert_eq!(x.loss_path.len(), 21);
        assert!(x.loss_path.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(x.objective_path.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let stages = x.staged_predict(dm.x()).unwrap();
        assert_eq!(stages.last().unwrap(), &x.predict(dm.x()).unwrap());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let dm = data(6, 10, 2);
        assert!(fit_forest(&dm, &ForestConfig { mtry: Some(3), ..Default::default() }).is_err());
        assert!(fit_gbt(&dm, &GbtConfig { learning_rate: 1.5, ..Default::default() }).is_err());
        assert!(fit_xgb(&dm, &XgbConfig { lambda: -1.0, ..Default::default() }).is_err());
    }
}
