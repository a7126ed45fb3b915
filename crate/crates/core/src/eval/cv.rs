use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MetricReport, Split};
use crate::models::{fit, DesignMatrix, ModelSpec};
use crate::{rng, Error, Result};

/// Validation protocol.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Protocol {
    #[default]
    Loo,
    Kfold { k: usize, seed: u64 },
    Holdout { test_fraction: f64, seed: u64 },
}

impl Protocol {
    pub fn split(&self) -> Split {
        match *self {
            Protocol::Loo => Split::Loo,
            Protocol::Kfold { k, .. } => Split::Cv { k },
            Protocol::Holdout { test_fraction, .. } => Split::Holdout { test_fraction },
        }
    }

    /// Replaces the seed of seeded protocols.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            Protocol::Loo => Protocol::Loo,
            Protocol::Kfold { k, .. } => Protocol::Kfold { k, seed },
            Protocol::Holdout { test_fraction, .. } => Protocol::Holdout { test_fraction, seed },
        }
    }

    /// Validation row sets, each sorted ascending.
    pub fn folds(&self, n: usize) -> Result<Vec<Vec<usize>>> {
        match *self {
            Protocol::Loo => {
                if n < 3 {
                    return Err(Error::Validation(format!("leave-one-out needs n >= 3, got {n}")));
                }
                Ok((0..n).map(|i| vec![i]).collect())
            }
            Protocol::Kfold { k, seed } => {
                if k < 2 || k > n {
                    return Err(Error::Validation(format!("k-fold needs 2 <= k <= n, got k={k}, n={n}")));
                }
                let order = permutation(n, seed, "kfold");
                let mut folds = vec![Vec::new(); k];
                for (pos, row) in order.into_iter().enumerate() {
                    folds[pos % k].push(row);
                }
                folds.iter_mut().for_each(|f| f.sort_unstable());
                Ok(folds)
            }
            Protocol::Holdout { test_fraction, seed } => {
                let test = (n as f64 * test_fraction).floor() as usize;
                if !(test_fraction > 0.0 && test_fraction < 1.0) || test == 0 || n - test < 2 {
                    return Err(Error::Validation(format!(
                        "holdout fraction {test_fraction} leaves no usable split of {n} rows"
                    )));
                }
                let mut rows = permutation(n, seed, "holdout")[..test].to_vec();
                rows.sort_unstable();
                Ok(vec![rows])
            }
        }
    }
}

fn permutation(n: usize, seed: u64, key: &str) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream_for(seed, key));
    order
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Protocol::Loo => f.write_str("loo"),
            Protocol::Kfold { k, .. } => write!(f, "kfold:{k}"),
            Protocol::Holdout { test_fraction, .. } => write!(f, "holdout:{test_fraction}"),
        }
    }
}

/// `loo`, `kfold:K` or `holdout:FRACTION`; seeded variants start at seed 0
/// (see [`Protocol::with_seed`]).
impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("unknown protocol {s:?} (expected loo, kfold:K or holdout:FRACTION)"));
        match s.split_once(':') {
            None if s == "loo" => Ok(Protocol::Loo),
            Some(("kfold", k)) => Ok(Protocol::Kfold {
                k: k.parse().map_err(|_| bad())?,
                seed: 0,
            }),
            Some(("holdout", f)) => Ok(Protocol::Holdout {
                test_fraction: f.parse().map_err(|_| bad())?,
                seed: 0,
            }),
            _ => Err(bad()),
        }
    }
}

/// Out-of-fold predictions, in row order; `None` for rows never held out.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossValidation {
    pub report: MetricReport,
    pub predictions: Vec<Option<f64>>,
}

pub fn cross_validate(data: &DesignMatrix, spec: &ModelSpec, protocol: &Protocol) -> Result<CrossValidation> {
    let n = data.n_rows();
    let folds = protocol.folds(n)?;
    let per_fold: Vec<Result<Vec<f64>>> = folds
        .par_iter()
        .enumerate()
        .map(|(k, held)| {
            let mut is_held = vec![false; n];
            held.iter().for_each(|&i| is_held[i] = true);
            let train: Vec<usize> = (0..n).filter(|&i| !is_held[i]).collect();
            let run = || -> Result<Vec<f64>> {
                let model = fit(spec, &data.select_rows(&train)?)?;
                model.predict(&data.x().select_rows(held))
            };
            run().map_err(|e| Error::Fold {
                fold: k,
                source: Box::new(e),
            })
        })
        .collect();
    let mut predictions = vec![None; n];
    for (held, preds) in folds.iter().zip(per_fold) {
        for (&i, p) in held.iter().zip(preds?) {
            predictions[i] = Some(p);
        }
    }
    let (y, yhat): (Vec<f64>, Vec<f64>) = predictions
        .iter()
        .zip(data.y())
        .filter_map(|(p, y)| p.map(|p| (*y, p)))
        .unzip();
    Ok(CrossValidation {
        report: MetricReport::compute(&y, &yhat, protocol.split())?,
        predictions,
    })
}

/// Train-set metrics from a fit on all rows, plus validation metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub spec: ModelSpec,
    pub train: MetricReport,
    pub validation: MetricReport,
}

pub fn evaluate(data: &DesignMatrix, spec: &ModelSpec, protocol: &Protocol) -> Result<Evaluation> {
    let model = fit(spec, data)?;
    let train = MetricReport::compute(data.y(), &model.predict(data.x())?, Split::Train)?;
    let validation = cross_validate(data, spec, protocol)?.report;
    Ok(Evaluation {
        spec: spec.clone(),
        train,
        validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dm(y: &[f64]) -> DesignMatrix {
        let rows: Vec<Vec<f64>> = (0..y.len()).map(|i| vec![i as f64]).collect();
        DesignMatrix::from_rows(&rows, y.to_vec()).unwrap()
    }

    #[test]
    fn loo_mean_predictor_small_case() {
        // Held-out predictions are 1.5, 1.0, 0.5 for y = 0, 1, 2:
        // SS_res = 2.25 + 0 + 2.25, SS_tot = 2.
        let cv = cross_validate(&dm(&[0.0, 1.0, 2.0]), &ModelSpec::Mean, &Protocol::Loo).unwrap();
        assert_eq!(cv.predictions, vec![Some(1.5), Some(1.0), Some(0.5)]);
        assert_eq!(cv.report.r2, 1.0 - 4.5 / 2.0);
        assert_eq!(cv.report.split, Split::Loo);
    }

    #[test]
    fn kfold_partitions_rows_deterministically() {
        let p = Protocol::Kfold { k: 5, seed: 11 };
        let a = p.folds(23).unwrap();
        assert_eq!(a, p.folds(23).unwrap());
        let mut all: Vec<usize> = a.concat();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
        assert!(a.iter().all(|f| f.len() == 4 || f.len() == 5));
        assert_ne!(a, Protocol::Kfold { k: 5, seed: 12 }.folds(23).unwrap());
    }

    #[test]
    fn holdout_sizes_use_floor() {
        let f = Protocol::Holdout { test_fraction: 0.2, seed: 1 }.folds(71).unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].len(), 14);
        let data = dm(&(0..71).map(|i| (i % 7) as f64).collect::<Vec<_>>());
        let cv = cross_validate(&data, &ModelSpec::Linear, &Protocol::Holdout { test_fraction: 0.2, seed: 1 }).unwrap();
        assert_eq!(cv.predictions.iter().filter(|p| p.is_none()).count(), 57);
        assert_eq!(cv.report.n, 14);
    }

    #[test]
    fn protocol_parsing() {
        assert_eq!("loo".parse::<Protocol>().unwrap(), Protocol::Loo);
        assert_eq!("kfold:5".parse::<Protocol>().unwrap().with_seed(3), Protocol::Kfold { k: 5, seed: 3 });
        assert!("kfold".parse::<Protocol>().is_err());
        assert!(Protocol::Loo.folds(2).is_err());
        assert!(Protocol::Kfold { k: 6, seed: 0 }.folds(5).is_err());
    }

    #[test]
    fn fold_failures_name_the_fold() {
        let err = cross_validate(&dm(&[1.0, 2.0, 3.0]), &ModelSpec::Ridge { alpha: -1.0 }, &Protocol::Loo).unwrap_err();
        assert!(matches!(err, Error::Fold { fold: 0, .. }));
    }
}
