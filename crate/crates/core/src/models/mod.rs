//! Regressors mapping community class features to crime rate.
//!
//! [`fit`] dispatches on a [`ModelSpec`]; the individual fitters are public
//! as well for callers that want the concrete model type.

mod ensemble;
mod linear;
mod matrix;
mod spec;
mod svr;
mod tree;

pub use ensemble::{
    fit_forest, fit_gbt, fit_xgb, Ensemble, EnsembleKind, ForestConfig, GbtConfig, XgbConfig,
};
pub use linear::{
    expand_polynomial, fit_linear, fit_polynomial, fit_ridge, monomials, Expansion, LinearModel,
};
pub use matrix::DesignMatrix;
pub use spec::{fit, FeatureImportance, MeanModel, ModelSpec, SavedModel, TrainedModel};
pub use svr::{fit_svr, Kernel, SvrModel, KKT_TOLERANCE};
pub use tree::{fit_tree, Node, RegressionTree};
