//! Street-level imagery features and community crime rates.
//!
//! The crate covers the whole offline pipeline:
//!
//! * [`geo`] samples points along road centerlines, tests polygon containment
//!   and joins located records to community districts.
//! * [`ingest`] parses the external datasets (arrest CSV, GeoJSON boundaries
//!   and centerlines, segmentation feature CSV) and builds/fetches the
//!   street-view image manifest.
//! * [`features`] aggregates per-image class tallies and crime counts into one
//!   row per community.
//! * [`models`] holds the regressors: least squares (plain, polynomial,
//!   ridge), epsilon-insensitive SVR, CART, random forest, gradient boosting
//!   and second-order boosting.
//! * [`eval`] computes metrics, runs cross-validation and hyperparameter
//!   sweeps and writes reports.
//!
//! The guide under `book/` walks through each stage; its code snippets are
//! compiled as doctests of this crate.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod eval;
pub mod features;
pub mod geo;
pub mod ingest;
pub mod models;
pub mod rng;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/geometry.md")]
    struct Geometry;
    #[doc = include_str!("../../../book/src/ingest.md")]
    struct Ingest;
    #[doc = include_str!("../../../book/src/features.md")]
    struct Features;
    #[doc = include_str!("../../../book/src/linear.md")]
    struct Linear;
    #[doc = include_str!("../../../book/src/svr.md")]
    struct Svr;
    #[doc = include_str!("../../../book/src/trees.md")]
    struct Trees;
    #[doc = include_str!("../../../book/src/boosting.md")]
    struct Boosting;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    struct Evaluation;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
