//! Metrics, cross-validation, hyperparameter sweeps and report output.
//!
//! Validation defaults to leave-one-out; every sweep reports train-set
//! metrics alongside the held-out ones.

mod cv;
mod metrics;
mod report;
mod suite;
mod sweep;

pub use cv::{cross_validate, evaluate, CrossValidation, Evaluation, Protocol};
pub use metrics::{mse, r2, r2_checked, MetricReport, Split};
pub use report::{
    importance_report, parse_plot_csv, plot_csv, plot_svg, ImportanceTable, PlotRow, PLOT_HEADER,
};
pub use suite::{run_paper_suite, run_suite, summarize, SuiteOutput, IMPORTANCE_MODELS, PAPER_SUITE};
pub use sweep::{
    run_sweep, with_param, SweepEntry, SweepResult, SweepSpec, ENSEMBLE_SIZES, NAMED_SWEEPS,
    POLYNOMIAL_DEGREES, RIDGE_ALPHAS, SVR_EPSILONS, TREE_DEPTHS,
};
