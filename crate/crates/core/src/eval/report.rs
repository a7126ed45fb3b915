use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::SweepResult;
use crate::models::TrainedModel;
use crate::{Error, Result};

pub const PLOT_HEADER: &str = "value,train_mse,val_mse,train_r2,val_r2";

/// One grid point of a sweep plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub value: f64,
    pub train_mse: f64,
    pub val_mse: f64,
    pub train_r2: f64,
    pub val_r2: f64,
}

impl SweepResult {
    pub fn plot_rows(&self) -> Vec<PlotRow> {
        self.entries
            .iter()
            .map(|e| PlotRow {
                value: e.value,
                train_mse: e.train.mse,
                val_mse: e.validation.mse,
                train_r2: e.train.r2,
                val_r2: e.validation.r2,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        plot_csv(&self.plot_rows())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let first = &self.entries[0];
        let _ = writeln!(s, "Sweep: {} ({} over {})", self.name, self.model_kind, self.param);
        let _ = writeln!(s, "Validation: {} on n = {}", self.protocol, first.validation.n);
        let _ = writeln!(s, "Training rows: {}", first.train.n);
        if first.train.degenerate_target {
            let _ = writeln!(s, "Warning: constant target, R2 reported as 0");
        }
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "  {:>12}  {:>14}  {:>14}  {:>14}  {:>14}",
            self.param, "train MSE", "train R2", "val MSE", "val R2"
        );
        let best = self.best().value;
        for e in &self.entries {
            let mark = if e.value == best { '*' } else { ' ' };
            let _ = writeln!(
                s,
                "{mark} {:>12}  {:>14.6e}  {:>14.6}  {:>14.6e}  {:>14.6}",
                e.value, e.train.mse, e.train.r2, e.validation.mse, e.validation.r2
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "* lowest validation MSE");
        s
    }

    pub fn to_svg(&self) -> String {
        plot_svg(
            &format!("{}: MSE vs {}", self.name, self.param),
            &self.param,
            &self.plot_rows(),
        )
    }
}

pub fn plot_csv(rows: &[PlotRow]) -> String {
    let mut s = String::from(PLOT_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.value, r.train_mse, r.val_mse, r.train_r2, r.val_r2);
    }
    s
}

pub fn parse_plot_csv(text: &str) -> Result<Vec<PlotRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(PLOT_HEADER) {
        return Err(Error::Validation(format!("plot csv must start with {PLOT_HEADER:?}")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let bad = |m: String| Error::Row {
                context: "plot csv".into(),
                row: i + 1,
                message: m,
            };
            let v: Vec<f64> = line
                .split(',')
                .map(|f| f.parse::<f64>().map_err(|e| bad(format!("{f:?}: {e}"))))
                .collect::<Result<_>>()?;
            if v.len() != 5 {
                return Err(bad(format!("expected 5 fields, got {}", v.len())));
            }
            Ok(PlotRow {
                value: v[0],
                train_mse: v[1],
                val_mse: v[2],
                train_r2: v[3],
                val_r2: v[4],
            })
        })
        .collect()
}

/// Maps a value range onto pixels, logarithmically when it spans at least
/// two decades of positive values.
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
    from: f64,
    to: f64,
}

impl Axis {
    fn new(values: &[f64], from: f64, to: f64) -> Self {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log = lo > 0.0 && hi / lo >= 100.0;
        let (mut lo, mut hi) = if log { (lo.log10(), hi.log10()) } else { (lo, hi) };
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo <= 0.0 {
            lo -= 0.5;
            hi += 0.5;
        }
        Axis { lo, hi, log, from, to }
    }

    fn map(&self, v: f64) -> f64 {
        let t = if self.log { v.log10() } else { v };
        self.from + (t - self.lo) / (self.hi - self.lo) * (self.to - self.from)
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line chart of train and validation MSE against the grid value.
pub fn plot_svg(title: &str, x_label: &str, rows: &[PlotRow]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 80.0, 20.0, 40.0, 50.0);
    let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let ys: Vec<f64> = rows.iter().flat_map(|r| [r.train_mse, r.val_mse]).collect();
    let xa = Axis::new(&xs, left, w - right);
    let ya = Axis::new(&ys, h - bottom, top);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, w / 2.0, esc(title));
    let _ = writeln!(
        s,
        r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - bottom,
        w - right,
        h - bottom
    );
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, h - bottom);
    for x in &xs {
        let px = xa.map(*x);
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{}" text-anchor="middle" font-size="11">{x}</text>"#,
            h - bottom + 16.0
        );
    }
    let (ylo, yhi) = if ya.log {
        (10f64.powf(ya.lo), 10f64.powf(ya.hi))
    } else {
        (ya.lo, ya.hi)
    };
    for v in [ylo, yhi] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="11">{v:.3e}</text>"#,
            left - 6.0,
            ya.map(v) + 4.0
        );
    }
    let x_note = if xa.log { " (log scale)" } else { "" };
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}{x_note}</text>"#,
        (left + w - right) / 2.0,
        h - 12.0,
        esc(x_label)
    );
    let y_note = if ya.log { " (log scale)" } else { "" };
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {})">MSE{y_note}</text>"#,
        h / 2.0,
        h / 2.0
    );
    type Series = (&'static str, &'static str, fn(&PlotRow) -> f64);
    let series: [Series; 2] = [
        ("train", "#1f77b4", |r| r.train_mse),
        ("validation", "#d62728", |r| r.val_mse),
    ];
    for (k, (name, colour, get)) in series.iter().enumerate() {
        let points: Vec<String> = rows
            .iter()
            .filter(|r| get(r).is_finite() && (!ya.log || get(r) > 0.0))
            .map(|r| format!("{:.2},{:.2}", xa.map(r.value), ya.map(get(r))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="{name}" fill="none" stroke="{colour}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = top + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-size="11" fill="{colour}">{name} MSE</text>"#,
            w - right - 90.0
        );
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceTable {
    pub model: String,
    /// `(class, importance)`, descending, ties by name.
    pub rows: Vec<(String, f64)>,
    pub uniform_fallback: bool,
}

pub fn importance_report(
    model: &TrainedModel,
    feature_names: &[String],
    label: &str,
    top_n: Option<usize>,
) -> Result<ImportanceTable> {
    let imp = model.feature_importance()?;
    if feature_names.len() != imp.values.len() {
        return Err(Error::DimensionMismatch {
            expected: imp.values.len(),
            actual: feature_names.len(),
        });
    }
    let mut rows: Vec<(String, f64)> = feature_names.iter().cloned().zip(imp.values).collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if let Some(n) = top_n {
        rows.truncate(n);
    }
    Ok(ImportanceTable {
        model: label.to_string(),
        rows,
        uniform_fallback: imp.uniform_fallback,
    })
}

impl ImportanceTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,importance\n");
        for (c, v) in &self.rows {
            let _ = writeln!(s, "{},{v}", csv_field(c));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(5);
        let mut s = String::new();
        let _ = writeln!(s, "Feature importance: {}", self.model);
        if self.uniform_fallback {
            let _ = writeln!(s, "Warning: the model made no splits; importances are uniform");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<width$}  {:>10}", "Class", "Importance");
        for (c, v) in &self.rows {
            let _ = writeln!(s, "{c:<width$}  {v:>10.8}");
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
