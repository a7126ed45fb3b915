use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    fit_forest, fit_gbt, fit_linear, fit_polynomial, fit_ridge, fit_svr, fit_tree, fit_xgb,
    DesignMatrix, Ensemble, ForestConfig, GbtConfig, Kernel, LinearModel, RegressionTree,
    SvrModel, XgbConfig,
};
use crate::{Error, Result};

fn default_c() -> f64 {
    1.0
}

fn default_min_leaf() -> usize {
    1
}

/// What to fit. Serialized with a `kind` tag, e.g.
/// `{"kind": "ridge", "alpha": 10.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModelSpec {
    /// Predicts the training mean; a floor for everything else.
    Mean,
    Linear,
    Polynomial {
        degree: u32,
    },
    Ridge {
        alpha: f64,
    },
    Svr {
        epsilon: f64,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default)]
        kernel: Kernel,
    },
    DecisionTree {
        #[serde(default)]
        max_depth: Option<usize>,
        #[serde(default = "default_min_leaf")]
        min_samples_leaf: usize,
    },
    RandomForest(ForestConfig),
    GradientBoosting(GbtConfig),
    Xgboost(XgbConfig),
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Mean => "mean",
            ModelSpec::Linear => "linear",
            ModelSpec::Polynomial { .. } => "polynomial",
            ModelSpec::Ridge { .. } => "ridge",
            ModelSpec::Svr { .. } => "svr",
            ModelSpec::DecisionTree { .. } => "decision_tree",
            ModelSpec::RandomForest(_) => "random_forest",
            ModelSpec::GradientBoosting(_) => "gradient_boosting",
            ModelSpec::Xgboost(_) => "xgboost",
        }
    }

    pub fn is_tree_based(&self) -> bool {
        matches!(
            self,
            ModelSpec::DecisionTree { .. }
                | ModelSpec::RandomForest(_)
                | ModelSpec::GradientBoosting(_)
                | ModelSpec::Xgboost(_)
        )
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Polynomial { degree } => write!(f, "polynomial(degree={degree})"),
            ModelSpec::Ridge { alpha } => write!(f, "ridge(alpha={alpha})"),
            ModelSpec::Svr { epsilon, c, .. } => write!(f, "svr(epsilon={epsilon}, C={c})"),
            ModelSpec::DecisionTree { max_depth, .. } => match max_depth {
                Some(d) => write!(f, "decision_tree(max_depth={d})"),
                None => write!(f, "decision_tree(max_depth=none)"),
            },
            ModelSpec::RandomForest(c) => write!(f, "random_forest(n_trees={})", c.n_trees),
            ModelSpec::GradientBoosting(c) => {
                write!(f, "gradient_boosting(n_trees={}, learning_rate={})", c.n_trees, c.learning_rate)
            }
            ModelSpec::Xgboost(c) => write!(f, "xgboost(n_trees={}, learning_rate={})", c.n_trees, c.learning_rate),
            other => f.write_str(other.kind()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanModel {
    pub value: f64,
    pub n_features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum TrainedModel {
    Mean(MeanModel),
    Linear(LinearModel),
    Svr(SvrModel),
    Tree(RegressionTree),
    Ensemble(Ensemble),
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        match self {
            TrainedModel::Mean(m) => m.n_features,
            TrainedModel::Linear(m) => m.n_features,
            TrainedModel::Svr(m) => m.n_features(),
            TrainedModel::Tree(t) => t.n_features,
            TrainedModel::Ensemble(e) => e.n_features,
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let expected = self.n_features();
        if x.ncols() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: x.ncols(),
            });
        }
        match self {
            TrainedModel::Mean(m) => Ok(vec![m.value; x.nrows()]),
            TrainedModel::Linear(m) => m.predict(x),
            TrainedModel::Svr(m) => m.predict(x),
            TrainedModel::Tree(t) => Ok(t.predict(x)),
            TrainedModel::Ensemble(e) => e.predict(x),
        }
    }

    /// Normalized split-gain importance for tree-based models.
    pub fn feature_importance(&self) -> Result<FeatureImportance> {
        let trees: &[RegressionTree] = match self {
            TrainedModel::Tree(t) => std::slice::from_ref(t),
            TrainedModel::Ensemble(e) => &e.trees,
            TrainedModel::Mean(_) => return Err(Error::UnsupportedModel("mean".into())),
            TrainedModel::Linear(_) => return Err(Error::UnsupportedModel("linear".into())),
            TrainedModel::Svr(_) => return Err(Error::UnsupportedModel("svr".into())),
        };
        let d = self.n_features();
        let mut raw = vec![0.0; d];
        for t in trees {
            for (r, g) in raw.iter_mut().zip(t.gain_by_feature()) {
                *r += g;
            }
        }
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            Ok(FeatureImportance {
                values: raw.iter().map(|r| r / total).collect(),
                uniform_fallback: false,
            })
        } else {
            Ok(FeatureImportance {
                values: vec![1.0 / d as f64; d],
                uniform_fallback: true,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    /// Non-negative, sums to 1.
    pub values: Vec<f64>,
    /// No tree split at all; `values` is uniform.
    pub uniform_fallback: bool,
}

pub fn fit(spec: &ModelSpec, data: &DesignMatrix) -> Result<TrainedModel> {
    Ok(match spec {
        ModelSpec::Mean => TrainedModel::Mean(MeanModel {
            value: data.y().iter().sum::<f64>() / data.n_rows() as f64,
            n_features: data.n_features(),
        }),
        ModelSpec::Linear => TrainedModel::Linear(fit_linear(data)?),
        ModelSpec::Polynomial { degree } => TrainedModel::Linear(fit_polynomial(data, *degree)?),
        ModelSpec::Ridge { alpha } => TrainedModel::Linear(fit_ridge(data, *alpha)?),
        ModelSpec::Svr { epsilon, c, kernel } => TrainedModel::Svr(fit_svr(data, *epsilon, *c, *kernel)?),
        ModelSpec::DecisionTree {
            max_depth,
            min_samples_leaf,
        } => TrainedModel::Tree(fit_tree(data, *max_depth, *min_samples_leaf)?),
        ModelSpec::RandomForest(c) => TrainedModel::Ensemble(fit_forest(data, c)?),
        ModelSpec::GradientBoosting(c) => TrainedModel::Ensemble(fit_gbt(data, c)?),
        ModelSpec::Xgboost(c) => TrainedModel::Ensemble(fit_xgb(data, c)?),
    })
}

/// On-disk form: the spec that produced a model, the feature names and the
/// fitted parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub kind: String,
    pub config: ModelSpec,
    pub feature_names: Vec<String>,
    pub model: TrainedModel,
}

impl SavedModel {
    pub fn new(config: ModelSpec, feature_names: Vec<String>, model: TrainedModel) -> Self {
        Self {
            kind: config.kind().to_string(),
            config,
            feature_names,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> DesignMatrix {
        let rows: Vec<Vec<f64>> = (0..24).map(|i| vec![(i % 6) as f64, (i / 6) as f64 * 0.3]).collect();
        let y = rows.iter().map(|r| r[0] * 1.5 - r[1] + 0.25).collect();
        DesignMatrix::from_rows(&rows, y).unwrap()
    }

    fn all_specs() -> Vec<ModelSpec> {
        vec![
            ModelSpec::Mean,
            ModelSpec::Linear,
            ModelSpec::Polynomial { degree: 2 },
            ModelSpec::Ridge { alpha: 1.0 },
            ModelSpec::Svr { epsilon: 0.1, c: 1.0, kernel: Kernel::default() },
            ModelSpec::DecisionTree { max_depth: Some(3), min_samples_leaf: 1 },
            ModelSpec::RandomForest(ForestConfig { n_trees: 5, seed: 3, ..Default::default() }),
            ModelSpec::GradientBoosting(GbtConfig { n_trees: 5, ..Default::default() }),
            ModelSpec::Xgboost(XgbConfig { n_trees: 5, ..Default::default() }),
        ]
    }

    #[test]
    fn saved_models_round_trip_exactly() {
        let data = toy();
        for spec in all_specs() {
            let m = fit(&spec, &data).unwrap();
            let saved = SavedModel::new(spec.clone(), data.feature_names().to_vec(), m);
            let back = SavedModel::from_json(&saved.to_json().unwrap()).unwrap();
            assert_eq!(back, saved, "{spec}");
            assert_eq!(back.model.predict(data.x()).unwrap(), saved.model.predict(data.x()).unwrap());
        }
    }

    #[test]
    fn spec_json_shape() {
        let s: ModelSpec = serde_json::from_str(r#"{"kind":"svr","epsilon":0.5}"#).unwrap();
        assert_eq!(s, ModelSpec::Svr { epsilon: 0.5, c: 1.0, kernel: Kernel::Rbf { gamma: None } });
        let f: ModelSpec = serde_json::from_str(r#"{"kind":"random_forest","n_trees":20}"#).unwrap();
        assert_eq!(f, ModelSpec::RandomForest(ForestConfig { n_trees: 20, ..Default::default() }));
    }

    #[test]
    fn predict_checks_dimension() {
        let data = toy();
        for spec in all_specs() {
            let m = fit(&spec, &data).unwrap();
            let err = m.predict(&DMatrix::zeros(2, 3)).unwrap_err();
            assert!(matches!(err, Error::DimensionMismatch { expected: 2, actual: 3 }), "{spec}");
        }
    }

    #[test]
    fn importance_only_for_trees() {
        let data = toy();
        for spec in all_specs() {
            let m = fit(&spec, &data).unwrap();
            match m.feature_importance() {
                Ok(imp) => {
                    assert!(spec.is_tree_based());
                    assert!((imp.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
                Err(e) => {
                    assert!(!spec.is_tree_based());
                    assert!(matches!(e, Error::UnsupportedModel(_)));
                }
            }
        }
    }

    #[test]
    fn single_split_importance_is_one_hot() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![(i % 3) as f64, i as f64]).collect();
        let y = (0..8).map(|i| if i < 4 { 0.0 } else { 1.0 }).collect();
        let data = DesignMatrix::from_rows(&rows, y).unwrap();
        let m = fit(&ModelSpec::DecisionTree { max_depth: Some(1), min_samples_leaf: 1 }, &data).unwrap();
        assert_eq!(m.feature_importance().unwrap().values, vec![0.0, 1.0]);
    }

    #[test]
    fn no_split_importance_is_uniform() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 1.0, 2.0, 3.0]).collect();
        let data = DesignMatrix::from_rows(&rows, vec![1.0; 5]).unwrap();
        let m = fit(&ModelSpec::DecisionTree { max_depth: None, min_samples_leaf: 1 }, &data).unwrap();
        let imp = m.feature_importance().unwrap();
        assert!(imp.uniform_fallback);
        assert_eq!(imp.values, vec![0.25; 4]);
    }
}
