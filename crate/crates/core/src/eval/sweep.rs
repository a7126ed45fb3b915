use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, MetricReport, Protocol};
use crate::models::{DesignMatrix, ForestConfig, GbtConfig, Kernel, ModelSpec, XgbConfig};
use crate::{Error, Result};

pub const RIDGE_ALPHAS: [f64; 5] = [0.1, 1.0, 10.0, 100.0, 1000.0];
pub const SVR_EPSILONS: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
pub const TREE_DEPTHS: [f64; 5] = [2.0, 4.0, 6.0, 8.0, 10.0];
pub const ENSEMBLE_SIZES: [f64; 11] = [10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 50.0, 100.0, 200.0, 500.0];
pub const POLYNOMIAL_DEGREES: [f64; 2] = [2.0, 3.0];

/// Built-in sweeps, in report order.
pub const NAMED_SWEEPS: [&str; 8] = [
    "linear",
    "polynomial",
    "ridge",
    "svr",
    "decision_tree",
    "random_forest",
    "gradient_boosting",
    "xgboost",
];

/// One model family over a one-dimensional grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub name: String,
    pub base: ModelSpec,
    /// `alpha`, `epsilon`, `max_depth`, `n_trees`, `degree`, or `none`.
    pub param: String,
    pub values: Vec<f64>,
}

impl SweepSpec {
    /// The built-in grid for `name` (see [`NAMED_SWEEPS`]); `seed` seeds the
    /// forest.
    pub fn named(name: &str, seed: u64) -> Result<Self> {
        let (base, param, values): (ModelSpec, &str, &[f64]) = match name {
            "linear" => (ModelSpec::Linear, "none", &[0.0]),
            "polynomial" => (ModelSpec::Polynomial { degree: 2 }, "degree", &POLYNOMIAL_DEGREES),
            "ridge" => (ModelSpec::Ridge { alpha: 1.0 }, "alpha", &RIDGE_ALPHAS),
            "svr" => (
                ModelSpec::Svr {
                    epsilon: 0.1,
                    c: 1.0,
                    kernel: Kernel::default(),
                },
                "epsilon",
                &SVR_EPSILONS,
            ),
            "decision_tree" => (
                ModelSpec::DecisionTree {
                    max_depth: None,
                    min_samples_leaf: 1,
                },
                "max_depth",
                &TREE_DEPTHS,
            ),
            "random_forest" => (
                ModelSpec::RandomForest(ForestConfig {
                    seed,
                    ..ForestConfig::default()
                }),
                "n_trees",
                &ENSEMBLE_SIZES,
            ),
            "gradient_boosting" => (
                ModelSpec::GradientBoosting(GbtConfig {
                    seed,
                    ..GbtConfig::default()
                }),
                "n_trees",
                &ENSEMBLE_SIZES,
            ),
            "xgboost" => (ModelSpec::Xgboost(XgbConfig::default()), "n_trees", &ENSEMBLE_SIZES),
            other => {
                return Err(Error::Validation(format!(
                    "unknown sweep {other:?}; expected one of {}",
                    NAMED_SWEEPS.join(", ")
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            base,
            param: param.to_string(),
            values: values.to_vec(),
        })
    }

    pub fn spec_at(&self, value: f64) -> Result<ModelSpec> {
        with_param(&self.base, &self.param, value)
    }
}

fn as_count(param: &str, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
        Ok(v as usize)
    } else {
        Err(Error::Validation(format!("{param} must be a positive integer, got {v}")))
    }
}

/// `base` with one hyperparameter replaced.
pub fn with_param(base: &ModelSpec, param: &str, value: f64) -> Result<ModelSpec> {
    let mut spec = base.clone();
    match (&mut spec, param) {
        (_, "none") => {}
        (ModelSpec::Ridge { alpha }, "alpha") => *alpha = value,
        (ModelSpec::Svr { epsilon, .. }, "epsilon") => *epsilon = value,
        (ModelSpec::Svr { c, .. }, "c") => *c = value,
        (ModelSpec::Polynomial { degree }, "degree") => *degree = as_count(param, value)? as u32,
        (ModelSpec::DecisionTree { max_depth, .. }, "max_depth") => *max_depth = Some(as_count(param, value)?),
        (ModelSpec::RandomForest(c), "max_depth") => c.max_depth = Some(as_count(param, value)?),
        (ModelSpec::GradientBoosting(c), "max_depth") => c.max_depth = Some(as_count(param, value)?),
        (ModelSpec::Xgboost(c), "max_depth") => c.max_depth = Some(as_count(param, value)?),
        (ModelSpec::RandomForest(c), "n_trees") => c.n_trees = as_count(param, value)?,
        (ModelSpec::GradientBoosting(c), "n_trees") => c.n_trees = as_count(param, value)?,
        (ModelSpec::Xgboost(c), "n_trees") => c.n_trees = as_count(param, value)?,
        (ModelSpec::GradientBoosting(c), "learning_rate") => c.learning_rate = value,
        (ModelSpec::Xgboost(c), "learning_rate") => c.learning_rate = value,
        (ModelSpec::Xgboost(c), "lambda") => c.lambda = value,
        (ModelSpec::Xgboost(c), "gamma") => c.gamma = value,
        (s, p) => {
            return Err(Error::Validation(format!(
                "{} models have no hyperparameter {p:?}",
                s.kind()
            )))
        }
    }
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub value: f64,
    pub spec: ModelSpec,
    pub train: MetricReport,
    pub validation: MetricReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub name: String,
    pub model_kind: String,
    pub param: String,
    pub protocol: String,
    /// One entry per grid value, in grid order.
    pub entries: Vec<SweepEntry>,
}

impl SweepResult {
    /// Entry with the lowest validation MSE; the first one on ties.
    pub fn best(&self) -> &SweepEntry {
        self.entries
            .iter()
            .reduce(|a, b| if b.validation.mse < a.validation.mse { b } else { a })
            .expect("sweeps are non-empty")
    }
}

/// Evaluates every grid point (in parallel) and returns results in grid
/// order.
pub fn run_sweep(data: &DesignMatrix, sweep: &SweepSpec, protocol: &Protocol) -> Result<SweepResult> {
    if sweep.values.is_empty() {
        return Err(Error::Validation(format!("sweep {} has an empty grid", sweep.name)));
    }
    let specs = sweep
        .values
        .iter()
        .map(|&v| sweep.spec_at(v))
        .collect::<Result<Vec<_>>>()?;
    let entries = specs
        .into_par_iter()
        .zip(sweep.values.par_iter())
        .map(|(spec, &value)| {
            let e = evaluate(data, &spec, protocol)?;
            Ok(SweepEntry {
                value,
                spec,
                train: e.train,
                validation: e.validation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        name: sweep.name.clone(),
        model_kind: sweep.base.kind().to_string(),
        param: sweep.param.clone(),
        protocol: protocol.split().to_string(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_grids() {
        let r = SweepSpec::named("ridge", 0).unwrap();
        assert_eq!(r.values, vec![0.1, 1.0, 10.0, 100.0, 1000.0]);
        let f = SweepSpec::named("random_forest", 9).unwrap();
        assert_eq!(f.values.len(), 11);
        assert_eq!(*f.values.last().unwrap(), 500.0);
        assert_eq!(
            f.spec_at(25.0).unwrap(),
            ModelSpec::RandomForest(ForestConfig { n_trees: 25, seed: 9, ..Default::default() })
        );
        assert!(SweepSpec::named("knn", 0).is_err());
        for n in NAMED_SWEEPS {
            let s = SweepSpec::named(n, 0).unwrap();
            for v in &s.values {
                s.spec_at(*v).unwrap();
            }
        }
    }

    #[test]
    fn bad_params_are_rejected() {
        assert!(with_param(&ModelSpec::Linear, "alpha", 1.0).is_err());
        let tree = ModelSpec::DecisionTree { max_depth: None, min_samples_leaf: 1 };
        assert!(with_param(&tree, "max_depth", 2.5).is_err());
    }

    #[test]
    fn singleton_sweep_is_a_direct_evaluation() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i * i % 5) as f64]).collect();
        let y: Vec<f64> = (0..12).map(|i| (i % 4) as f64).collect();
        let data = DesignMatrix::from_rows(&rows, y).unwrap();
        let sweep = SweepSpec {
            name: "one".into(),
            base: ModelSpec::Ridge { alpha: 0.0 },
            param: "alpha".into(),
            values: vec![10.0],
        };
        let r = run_sweep(&data, &sweep, &Protocol::Loo).unwrap();
        let direct = evaluate(&data, &ModelSpec::Ridge { alpha: 10.0 }, &Protocol::Loo).unwrap();
        assert_eq!(r.entries.len(), 1);
        assert_eq!(r.entries[0].train, direct.train);
        assert_eq!(r.entries[0].validation, direct.validation);
        assert_eq!(r.best().value, 10.0);
    }
}
