//! Epsilon-insensitive support vector regression.
//!
//! The dual is solved in the single-weight form
//!
//! ```text
//! minimize   1/2 b'Kb - y'b + eps * sum |b_i|
//! subject to sum b_i = 0,  -C <= b_i <= C
//! ```
//!
//! by pairwise coordinate descent: each step moves weight from the most
//! violating `j` to the most violating `i` with an exact line search over the
//! piecewise-quadratic restriction. Prediction is `sum b_i k(x_i, x) + bias`
//! on internally standardized features.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linear::standardizer;
use super::DesignMatrix;
use crate::{Error, Result};

pub const KKT_TOLERANCE: f64 = 1e-3;
const ITERATIONS_PER_ROW: usize = 10_000;
const ETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Kernel {
    /// `exp(-gamma |a - b|^2)`; `None` picks `1 / (d * mean feature variance)`.
    Rbf { gamma: Option<f64> },
    Linear,
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Rbf { gamma: None }
    }
}

impl Kernel {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma.unwrap_or(1.0) * d2).exp()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    /// Dual weight per training row, `|w| <= c`.
    pub support_coefficients: Vec<f64>,
    pub bias: f64,
    pub epsilon: f64,
    pub c: f64,
    /// Kernel with `gamma` resolved.
    pub kernel: Kernel,
    /// Standardized training rows.
    pub support_vectors: Vec<Vec<f64>>,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Dual objective `y'b - 1/2 b'Kb - eps |b|_1` at the solution.
    pub dual_objective: f64,
}

impl SvrModel {
    pub fn n_features(&self) -> usize {
        self.feature_mean.len()
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: x.ncols(),
            });
        }
        let mut z = vec![0.0; x.ncols()];
        Ok((0..x.nrows())
            .map(|i| {
                for (j, v) in z.iter_mut().enumerate() {
                    *v = (x[(i, j)] - self.feature_mean[j]) / self.feature_scale[j];
                }
                self.bias
                    + self
                        .support_vectors
                        .iter()
                        .zip(&self.support_coefficients)
                        .filter(|(_, b)| **b != 0.0)
                        .map(|(sv, b)| b * self.kernel.eval(sv, &z))
                        .sum::<f64>()
            })
            .collect())
    }

    pub fn n_support(&self) -> usize {
        self.support_coefficients.iter().filter(|b| **b != 0.0).count()
    }
}

fn up_cost(g: f64, beta: f64, eps: f64) -> f64 {
    g + if beta >= 0.0 { eps } else { -eps }
}

fn down_cost(g: f64, beta: f64, eps: f64) -> f64 {
    -g + if beta <= 0.0 { eps } else { -eps }
}

/// Minimizes `1/2 eta t^2 + lin t + eps |bi + t| + eps |bj - t|` on `[0, hi]`.
fn line_search(eta: f64, lin: f64, bi: f64, bj: f64, eps: f64, hi: f64) -> f64 {
    let phi = |t: f64| 0.5 * eta * t * t + lin * t + eps * ((bi + t).abs() + (bj - t).abs());
    let mut knots = vec![0.0, hi];
    knots.extend([-bi, bj].into_iter().filter(|&k| k > 0.0 && k < hi));
    knots.sort_by(f64::total_cmp);
    let mut best = (phi(0.0), 0.0);
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let slope = lin + eps * (bi + mid).signum() - eps * (bj - mid).signum();
        let t = (-slope / eta).clamp(a, b);
        for cand in [t, b] {
            let v = phi(cand);
            if v < best.0 {
                best = (v, cand);
            }
        }
    }
    best.1
}

fn resolve_kernel(kernel: Kernel, z: &DMatrix<f64>) -> Kernel {
    match kernel {
        Kernel::Rbf { gamma: Some(g) } => Kernel::Rbf { gamma: Some(g) },
        Kernel::Rbf { gamma: None } => {
            let (n, d) = z.shape();
            let mean_var = z
                .column_iter()
                .map(|c| {
                    let m = c.sum() / n as f64;
                    c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64
                })
                .sum::<f64>()
                / d as f64;
            let denom = d as f64 * if mean_var > 0.0 { mean_var } else { 1.0 };
            Kernel::Rbf { gamma: Some(1.0 / denom) }
        }
        Kernel::Linear => Kernel::Linear,
    }
}

pub fn fit_svr(data: &DesignMatrix, epsilon: f64, c: f64, kernel: Kernel) -> Result<SvrModel> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Validation(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Validation(format!("C must be > 0, got {c}")));
    }
    if let Kernel::Rbf { gamma: Some(g) } = kernel {
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::Validation(format!("rbf gamma must be > 0, got {g}")));
        }
    }
    let x = data.x();
    let y = data.y();
    let n = x.nrows();
    let (mean, scale) = standardizer(x);
    let z = DMatrix::from_fn(n, x.ncols(), |i, j| (x[(i, j)] - mean[j]) / scale[j]);
    let kernel = resolve_kernel(kernel, &z);
    let rows: Vec<Vec<f64>> = z.row_iter().map(|r| r.iter().copied().collect()).collect();
    let k = DMatrix::from_fn(n, n, |i, j| kernel.eval(&rows[i], &rows[j]));

    let mut beta = vec![0.0; n];
    let mut grad: Vec<f64> = y.iter().map(|v| -v).collect();
    let cap = ITERATIONS_PER_ROW * n;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cap {
        let up: Vec<f64> = (0..n)
            .map(|i| if beta[i] < c { up_cost(grad[i], beta[i], epsilon) } else { f64::INFINITY })
            .collect();
        let down: Vec<f64> = (0..n)
            .map(|j| if beta[j] > -c { down_cost(grad[j], beta[j], epsilon) } else { f64::INFINITY })
            .collect();
        let Some((i, j)) = most_violating_pair(&up, &down) else {
            converged = true;
            break;
        };
        if up[i] + down[j] >= -KKT_TOLERANCE {
            converged = true;
            break;
        }
        let eta = (k[(i, i)] + k[(j, j)] - 2.0 * k[(i, j)]).max(ETA_FLOOR);
        let hi = (c - beta[i]).min(beta[j] + c);
        let t = line_search(eta, grad[i] - grad[j], beta[i], beta[j], epsilon, hi);
        iterations += 1;
        if t <= 0.0 {
            converged = true;
            break;
        }
        beta[i] = if t == c - beta[i] { c } else { beta[i] + t };
        beta[j] = if t == beta[j] + c { -c } else { beta[j] - t };
        for (r, g) in grad.iter_mut().enumerate() {
            *g += t * (k[(r, i)] - k[(r, j)]);
        }
    }

    let (min_up, min_down) = (0..n).fold((f64::INFINITY, f64::INFINITY), |(u, d), r| {
        let u2 = if beta[r] < c { up_cost(grad[r], beta[r], epsilon) } else { f64::INFINITY };
        let d2 = if beta[r] > -c { down_cost(grad[r], beta[r], epsilon) } else { f64::INFINITY };
        (u.min(u2), d.min(d2))
    });
    let bias = match (min_up.is_finite(), min_down.is_finite()) {
        (true, true) => 0.5 * (min_down - min_up),
        (true, false) => -min_up,
        (false, true) => min_down,
        (false, false) => 0.0,
    };
    let kb: Vec<f64> = (0..n).map(|r| grad[r] + y[r]).collect();
    let dual_objective = y.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()
        - 0.5 * kb.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()
        - epsilon * beta.iter().map(|b| b.abs()).sum::<f64>();

    Ok(SvrModel {
        support_coefficients: beta,
        bias,
        epsilon,
        c,
        kernel,
        support_vectors: rows,
        feature_mean: mean,
        feature_scale: scale,
        converged,
        iterations,
        dual_objective,
    })
}

/// Best `(i, j)` with `i != j` minimizing `up[i] + down[j]`.
fn most_violating_pair(up: &[f64], down: &[f64]) -> Option<(usize, usize)> {
    let argmin = |v: &[f64], skip: Option<usize>| {
        v.iter()
            .enumerate()
            .filter(|(k, x)| Some(*k) != skip && x.is_finite())
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
    };
    let i = argmin(up, None)?;
    let j = argmin(down, None)?;
    if i != j {
        return Some((i, j));
    }
    let a = argmin(down, Some(i)).map(|j2| (i, j2));
    let b = argmin(up, Some(j)).map(|i2| (i2, j));
    match (a, b) {
        (Some(a), Some(b)) => {
            Some(if up[a.0] + down[a.1] <= up[b.0] + down[b.1] { a } else { b })
        }
        (a, b) => a.or(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_data(n: usize) -> DesignMatrix {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
        let y = rows.iter().map(|r| 3.0 * r[0] - 1.0).collect();
        DesignMatrix::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn huge_tube_gives_constant_prediction() {
        let data = line_data(20);
        let m = fit_svr(&data, 100.0, 1.0, Kernel::default()).unwrap();
        assert!(m.support_coefficients.iter().all(|b| *b == 0.0));
        assert!(m.converged);
        let p = m.predict(data.x()).unwrap();
        assert!(p.iter().all(|v| *v == m.bias));
    }

    #[test]
    fn linear_kernel_fits_a_line_within_the_tube() {
        let data = line_data(25);
        let eps = 0.01;
        let m = fit_svr(&data, eps, 100.0, Kernel::Linear).unwrap();
        assert!(m.converged);
        let p = m.predict(data.x()).unwrap();
        let mse = p.iter().zip(data.y()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 25.0;
        assert!(mse <= eps * eps, "mse {mse}");
    }

    #[test]
    fn weights_stay_in_the_box_and_sum_to_zero() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64).sin(), (i as f64 * 0.7).cos()]).collect();
        let y = (0..30).map(|i| ((i * 37) % 11) as f64).collect();
        let data = DesignMatrix::from_rows(&rows, y).unwrap();
        let m = fit_svr(&data, 0.5, 2.0, Kernel::default()).unwrap();
        assert!(m.support_coefficients.iter().all(|b| b.abs() <= 2.0));
        assert!(m.support_coefficients.iter().sum::<f64>().abs() < 1e-9);
        assert!(m.n_support() > 0);
    }

    #[test]
    fn default_gamma_uses_standardized_variance() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 5.0, (i * i) as f64]).collect();
        let data = DesignMatrix::from_rows(&rows, (0..10).map(f64::from).collect()).unwrap();
        let m = fit_svr(&data, 0.1, 1.0, Kernel::default()).unwrap();
        // Two unit-variance columns and one constant column.
        assert_eq!(m.kernel, Kernel::Rbf { gamma: Some(1.0 / (3.0 * (2.0 / 3.0))) });
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let data = line_data(5);
        assert!(fit_svr(&data, -1.0, 1.0, Kernel::Linear).is_err());
        assert!(fit_svr(&data, 0.1, 0.0, Kernel::Linear).is_err());
        assert!(fit_svr(&data, 0.1, 1.0, Kernel::Rbf { gamma: Some(-1.0) }).is_err());
    }
}
