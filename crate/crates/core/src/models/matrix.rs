use nalgebra::DMatrix;

use crate::features::Dataset;
use crate::{Error, Result};

/// Predictors, target and feature labels for one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    y: Vec<f64>,
    feature_names: Vec<String>,
}

impl DesignMatrix {
    pub fn new(x: DMatrix<f64>, y: Vec<f64>, feature_names: Vec<String>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.nrows(),
                right: y.len(),
            });
        }
        if x.nrows() < 2 || x.ncols() < 1 {
            return Err(Error::Validation(format!(
                "design matrix needs n >= 2 rows and d >= 1 columns, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        if feature_names.len() != x.ncols() {
            return Err(Error::DimensionMismatch {
                expected: x.ncols(),
                actual: feature_names.len(),
            });
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Validation("design matrix has non-finite entries".into()));
        }
        Ok(Self { x, y, feature_names })
    }

    /// Row-major convenience constructor; features are named `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Validation("ragged rows".into()));
        }
        let x = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(x, y, (0..d).map(|j| format!("x{j}")).collect())
    }

    /// Class features against crime rate.
    pub fn from_dataset(data: &Dataset) -> Result<Self> {
        let d = data.schema.len();
        let x = DMatrix::from_fn(data.rows.len(), d, |i, j| data.rows[i].feature[j]);
        let y = data.rows.iter().map(|r| r.crime_rate).collect();
        Self::new(x, y, data.schema.classes().to_vec())
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    /// Subset of rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let x = self.x.select_rows(rows);
        let y = rows.iter().map(|&i| self.y[i]).collect();
        Self::new(x, y, self.feature_names.clone())
    }
}
