//! Least-squares family: ordinary, polynomial and ridge regression.
//!
//! All three solve through a singular value decomposition of the centred
//! design matrix, never through an explicit inverse. Singular values below
//! `s_max * max(n, d) * EPS` are treated as zero, which yields the
//! minimum-norm solution when the system is rank deficient (for example a
//! degree-3 expansion of 21 features on a few dozen rows).

use nalgebra::{DMatrix, DVector, SVD};
use serde::{Deserialize, Serialize};

use super::DesignMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Expansion {
    None,
    Polynomial { degree: u32 },
}

/// `y = intercept + coefficients . phi(x)`, with `phi` the identity or a
/// polynomial expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub expansion: Expansion,
    /// Raw feature count before expansion.
    pub n_features: usize,
    /// Per-column scale used for internal standardization (ridge only).
    pub feature_scale: Option<Vec<f64>>,
    /// The solver had to fall back to the minimum-norm solution.
    pub rank_deficient: bool,
}

impl LinearModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.ncols(),
            });
        }
        let expanded;
        let phi = match self.expansion {
            Expansion::None => x,
            Expansion::Polynomial { degree } => {
                expanded = expand_columns(x, degree);
                &expanded
            }
        };
        Ok((0..phi.nrows())
            .map(|i| {
                self.intercept
                    + phi
                        .row(i)
                        .iter()
                        .zip(&self.coefficients)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
            })
            .collect())
    }

    /// Slopes in standardized units (`beta_j * scale_j`); equal to the raw
    /// slopes for unstandardized fits.
    pub fn standardized_slopes(&self) -> Vec<f64> {
        match &self.feature_scale {
            Some(s) => self.coefficients.iter().zip(s).map(|(b, s)| b * s).collect(),
            None => self.coefficients.clone(),
        }
    }
}

fn column_means(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    x.column_iter().map(|c| c.sum() / n).collect()
}

fn centred(x: &DMatrix<f64>, means: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - means[j])
}

/// Solves `min ||a b - rhs||^2 + alpha ||b||^2` by SVD. Returns the solution
/// and whether `a` was rank deficient.
fn svd_solve(a: DMatrix<f64>, rhs: &DVector<f64>, alpha: f64) -> (DVector<f64>, bool) {
    let (n, d) = a.shape();
    let svd = SVD::new(a, true, true);
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("V^T requested");
    let s_max = svd.singular_values.max();
    let tol = s_max * n.max(d) as f64 * f64::EPSILON;
    let uty = u.transpose() * rhs;
    let mut coef = DVector::zeros(d);
    let mut rank = 0;
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= tol {
            continue;
        }
        rank += 1;
        let w = s / (s * s + alpha) * uty[k];
        coef += v_t.row(k).transpose() * w;
    }
    (coef, rank < d)
}

fn assemble(
    coef: DVector<f64>,
    means: &[f64],
    y_mean: f64,
    n_features: usize,
    expansion: Expansion,
    rank_deficient: bool,
) -> LinearModel {
    let coefficients: Vec<f64> = coef.iter().copied().collect();
    let intercept = y_mean - coefficients.iter().zip(means).map(|(b, m)| b * m).sum::<f64>();
    LinearModel {
        intercept,
        coefficients,
        expansion,
        n_features,
        feature_scale: None,
        rank_deficient,
    }
}

/// Ordinary least squares with an unpenalized intercept.
pub fn fit_linear(data: &DesignMatrix) -> Result<LinearModel> {
    let x = data.x();
    let means = column_means(x);
    let y = DVector::from_column_slice(data.y());
    let y_mean = y.mean();
    let (coef, deficient) = svd_solve(centred(x, &means), &y.add_scalar(-y_mean), 0.0);
    Ok(assemble(coef, &means, y_mean, x.ncols(), Expansion::None, deficient))
}

/// Exponent multisets of every monomial of total degree `1..=degree`,
/// ordered by degree, then lexicographically.
pub fn monomials(d: usize, degree: u32) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<usize>> = (0..d).map(|j| vec![j]).collect();
    for _ in 1..=degree {
        out.extend(layer.iter().cloned());
        layer = layer
            .iter()
            .flat_map(|m| {
                let last = *m.last().expect("non-empty monomial");
                (last..d).map(move |j| {
                    let mut next = m.clone();
                    next.push(j);
                    next
                })
            })
            .collect();
    }
    out
}

fn expand_columns(x: &DMatrix<f64>, degree: u32) -> DMatrix<f64> {
    let terms = monomials(x.ncols(), degree);
    DMatrix::from_fn(x.nrows(), terms.len(), |i, t| {
        terms[t].iter().map(|&j| x[(i, j)]).product()
    })
}

/// All monomials of total degree 1..=degree, cross terms included, no
/// constant column. Names join factors with `*` and powers with `^`.
pub fn expand_polynomial(
    x: &DMatrix<f64>,
    names: &[String],
    degree: u32,
) -> Result<(DMatrix<f64>, Vec<String>)> {
    if !(2..=3).contains(&degree) {
        return Err(Error::Validation(format!(
            "polynomial degree must be 2 or 3, got {degree}"
        )));
    }
    let terms = monomials(x.ncols(), degree);
    let labels = terms
        .iter()
        .map(|m| {
            let mut parts: Vec<String> = Vec::new();
            let mut k = 0;
            while k < m.len() {
                let run = m[k..].iter().take_while(|&&j| j == m[k]).count();
                let name = &names[m[k]];
                parts.push(if run == 1 { name.clone() } else { format!("{name}^{run}") });
                k += run;
            }
            parts.join("*")
        })
        .collect();
    Ok((expand_columns(x, degree), labels))
}

/// Least squares on the polynomial expansion of the features.
pub fn fit_polynomial(data: &DesignMatrix, degree: u32) -> Result<LinearModel> {
    let (phi, names) = expand_polynomial(data.x(), data.feature_names(), degree)?;
    let expanded = DesignMatrix::new(phi, data.y().to_vec(), names)?;
    let mut model = fit_linear(&expanded)?;
    model.expansion = Expansion::Polynomial { degree };
    model.n_features = data.n_features();
    Ok(model)
}

/// Per-column mean and population standard deviation; constant columns get
/// scale 1 so they stay at zero after centring.
pub(crate) fn standardizer(x: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let means = column_means(x);
    let n = x.nrows() as f64;
    let scale = x
        .column_iter()
        .zip(&means)
        .map(|(c, m)| {
            let sd = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (means, scale)
}

/// Ridge regression on internally standardized features with an
/// unpenalized intercept; coefficients are mapped back to raw units.
pub fn fit_ridge(data: &DesignMatrix, alpha: f64) -> Result<LinearModel> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::Validation(format!("alpha must be >= 0, got {alpha}")));
    }
    let x = data.x();
    let (means, scale) = standardizer(x);
    let z = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - means[j]) / scale[j]);
    let y = DVector::from_column_slice(data.y());
    let y_mean = y.mean();
    let (coef_z, deficient) = svd_solve(z, &y.add_scalar(-y_mean), alpha);
    let coef = DVector::from_iterator(coef_z.len(), coef_z.iter().zip(&scale).map(|(b, s)| b / s));
    let mut model = assemble(coef, &means, y_mean, x.ncols(), Expansion::None, deficient && alpha == 0.0);
    model.feature_scale = Some(scale);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(rows: &[Vec<f64>], y: &[f64]) -> DesignMatrix {
        DesignMatrix::from_rows(rows, y.to_vec()).unwrap()
    }

    #[test]
    fn exact_line() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 * i as f64 + 1.0).collect();
        let m = fit_linear(&dm(&rows, &y)).unwrap();
        assert!((m.intercept - 1.0).abs() < 1e-10);
        assert!((m.coefficients[0] - 2.0).abs() < 1e-10);
        assert!(!m.rank_deficient);
    }

    #[test]
    fn constant_target() {
        let rows = vec![vec![1.0, 5.0], vec![2.0, 3.0], vec![7.0, 1.0], vec![3.0, 3.0]];
        let m = fit_linear(&dm(&rows, &[4.0; 4])).unwrap();
        assert!((m.intercept - 4.0).abs() < 1e-12);
        assert!(m.coefficients.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn wide_system_is_min_norm_and_flagged() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![2.0, 1.0, 0.0], vec![0.0, 1.0, 5.0]];
        let y = [1.0, 2.0, 4.0];
        let m = fit_linear(&dm(&rows, &y)).unwrap();
        assert!(m.rank_deficient);
        let pred = m.predict(&dm(&rows, &y).x().clone()).unwrap();
        for (p, t) in pred.iter().zip(y) {
            assert!((p - t).abs() < 1e-10);
        }
    }

    #[test]
    fn polynomial_columns() {
        let x = DMatrix::from_row_slice(1, 2, &[2.0, 3.0]);
        let names = vec!["a".to_string(), "b".to_string()];
        let (phi, labels) = expand_polynomial(&x, &names, 2).unwrap();
        assert_eq!(phi.row(0).iter().copied().collect::<Vec<_>>(), vec![2.0, 3.0, 4.0, 6.0, 9.0]);
        assert_eq!(labels, ["a", "b", "a^2", "a*b", "b^2"]);
        let (_, cubic) = expand_polynomial(&x, &names, 3).unwrap();
        assert_eq!(&cubic[5..], ["a^3", "a^2*b", "a*b^2", "b^3"]);
        assert!(expand_polynomial(&x, &names, 4).is_err());
        assert!(expand_polynomial(&x, &names, 1).is_err());
    }

    #[test]
    fn polynomial_column_counts() {
        // C(d + k, k) - 1
        assert_eq!(monomials(2, 2).len(), 5);
        assert_eq!(monomials(21, 2).len(), 252);
        assert_eq!(monomials(21, 3).len(), 2023);
    }

    #[test]
    fn polynomial_fit_recovers_quadratic() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 * 0.5 - 3.0, (i * 7 % 5) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 1.0 + r[0] - 2.0 * r[0] * r[1] + 0.5 * r[1] * r[1]).collect();
        let data = dm(&rows, &y);
        let m = fit_polynomial(&data, 2).unwrap();
        let pred = m.predict(data.x()).unwrap();
        for (p, t) in pred.iter().zip(&y) {
            assert!((p - t).abs() < 1e-8, "{p} {t}");
        }
        assert!(m.predict(&DMatrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn ridge_limits() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, ((i * i) % 7) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 3.0 * r[0] - r[1] + 0.1).collect();
        let data = dm(&rows, &y);
        let ols = fit_linear(&data).unwrap();
        let r0 = fit_ridge(&data, 0.0).unwrap();
        for (a, b) in ols.coefficients.iter().zip(&r0.coefficients) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!((ols.intercept - r0.intercept).abs() < 1e-8);
        let big = fit_ridge(&data, 1e12).unwrap();
        assert!(big.coefficients.iter().all(|c| c.abs() < 1e-9));
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert!((big.intercept - mean).abs() < 1e-8);
        assert!(fit_ridge(&data, -1.0).is_err());
    }

    #[test]
    fn standardizer_handles_constant_columns() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 5.0, 3.0, 5.0]);
        let (m, s) = standardizer(&x);
        assert_eq!(m, vec![2.0, 5.0]);
        assert!((s[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s[1], 1.0);
    }
}
