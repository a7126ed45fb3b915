use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{importance_report, run_sweep, ImportanceTable, Protocol, SweepResult, SweepSpec};
use crate::models::{fit, DesignMatrix};
use crate::{Error, Result};

/// The seven sweeps of the full experiment, in report order.
pub const PAPER_SUITE: [&str; 7] = [
    "linear",
    "polynomial",
    "ridge",
    "svr",
    "decision_tree",
    "random_forest",
    "gradient_boosting",
];

/// Sweeps that also get an importance table, fitted on all rows at the
/// grid value with the lowest validation MSE.
pub const IMPORTANCE_MODELS: [&str; 3] = ["decision_tree", "random_forest", "gradient_boosting"];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutput {
    pub sweeps: Vec<SweepResult>,
    pub importance: Vec<ImportanceTable>,
}

pub fn run_suite(
    data: &DesignMatrix,
    names: &[&str],
    protocol: &Protocol,
    seed: u64,
    top_n: Option<usize>,
) -> Result<SuiteOutput> {
    let mut sweeps = Vec::new();
    let mut importance = Vec::new();
    for name in names {
        let spec = SweepSpec::named(name, seed)?;
        let result = run_sweep(data, &spec, protocol)?;
        if IMPORTANCE_MODELS.contains(name) {
            let best = result.best();
            let model = fit(&best.spec, data)?;
            let label = format!("{} ({} = {})", name, spec.param, best.value);
            importance.push(importance_report(&model, data.feature_names(), &label, top_n)?);
        }
        sweeps.push(result);
    }
    Ok(SuiteOutput { sweeps, importance })
}

pub fn run_paper_suite(data: &DesignMatrix, protocol: &Protocol, seed: u64) -> Result<SuiteOutput> {
    run_suite(data, &PAPER_SUITE, protocol, seed, None)
}

fn write(dir: &Path, name: &str, body: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(())
}

impl SuiteOutput {
    /// Writes `<sweep>.{csv,txt,svg}`, `importance_<model>.{csv,txt}` and
    /// `summary.txt`; returns the paths written.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut files = Vec::new();
        for s in &self.sweeps {
            write(dir, &format!("{}.csv", s.name), &s.to_csv(), &mut files)?;
            write(dir, &format!("{}.txt", s.name), &s.to_text(), &mut files)?;
            write(dir, &format!("{}.svg", s.name), &s.to_svg(), &mut files)?;
        }
        for (t, name) in self.importance.iter().zip(self.importance_names()) {
            write(dir, &format!("importance_{name}.csv"), &t.to_csv(), &mut files)?;
            write(dir, &format!("importance_{name}.txt"), &t.to_text(), &mut files)?;
        }
        write(dir, "summary.txt", &self.summary(), &mut files)?;
        Ok(files)
    }

    fn importance_names(&self) -> Vec<&str> {
        self.sweeps
            .iter()
            .map(|s| s.name.as_str())
            .filter(|n| IMPORTANCE_MODELS.contains(n))
            .collect()
    }

    pub fn summary(&self) -> String {
        summarize(&self.sweeps)
    }
}

/// One line per sweep: best grid value and its metrics.
pub fn summarize(sweeps: &[SweepResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<18}  {:>10}  {:>12}  {:>14}  {:>14}  {:>14}  {:>14}",
        "model", "param", "best value", "train MSE", "train R2", "val MSE", "val R2"
    );
    for r in sweeps {
        let b = r.best();
        let _ = writeln!(
            s,
            "{:<18}  {:>10}  {:>12}  {:>14.6e}  {:>14.6}  {:>14.6e}  {:>14.6}",
            r.name, r.param, b.value, b.train.mse, b.train.r2, b.validation.mse, b.validation.r2
        );
    }
    if let Some(r) = sweeps.first() {
        let _ = writeln!(s, "\nvalidation: {}", r.protocol);
    }
    s
}
