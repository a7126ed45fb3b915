use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn check(y: &[f64], yhat: &[f64], min: usize) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: yhat.len(),
        });
    }
    if y.len() < min {
        return Err(Error::Validation(format!("need at least {min} values, got {}", y.len())));
    }
    Ok(())
}

/// Mean squared error.
pub fn mse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check(y, yhat, 1)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
}

/// Coefficient of determination and whether the target was constant (in
/// which case the value is reported as 0).
pub fn r2_checked(y: &[f64], yhat: &[f64]) -> Result<(f64, bool)> {
    check(y, yhat, 2)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Ok((0.0, true));
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((1.0 - ss_res / ss_tot, false))
}

pub fn r2(y: &[f64], yhat: &[f64]) -> Result<f64> {
    r2_checked(y, yhat).map(|(v, _)| v)
}

/// Which rows a metric was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Split {
    Train,
    Loo,
    Cv { k: usize },
    Holdout { test_fraction: f64 },
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Split::Train => f.write_str("train"),
            Split::Loo => f.write_str("loo"),
            Split::Cv { k } => write!(f, "cv({k})"),
            Split::Holdout { test_fraction } => write!(f, "holdout({test_fraction})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mse: f64,
    pub r2: f64,
    pub n: usize,
    pub split: Split,
    pub degenerate_target: bool,
}

impl MetricReport {
    pub fn compute(y: &[f64], yhat: &[f64], split: Split) -> Result<Self> {
        let (r2, degenerate_target) = r2_checked(y, yhat)?;
        Ok(Self {
            mse: mse(y, yhat)?,
            r2,
            n: y.len(),
            split,
            degenerate_target,
        })
    }
}
