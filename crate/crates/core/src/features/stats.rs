use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::Dataset;
use crate::geo::CommunityDistrict;

#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub variable: String,
    pub description: String,
    pub mean: f64,
    pub stdv: f64,
    pub min: f64,
    pub max: f64,
    /// Decimal places in the text rendering.
    pub precision: usize,
}

/// Per-variable summary over the dataset's communities.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsTable {
    pub rows: Vec<StatRow>,
}

pub const STATS_HEADER: [&str; 6] = ["Variable", "Description", "Mean", "Stdv", "Min", "Max"];

fn summarize(variable: &str, description: &str, values: &[f64], precision: usize) -> StatRow {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    // Sample standard deviation; a single value has zero spread.
    let stdv = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    StatRow {
        variable: variable.into(),
        description: description.into(),
        mean,
        stdv,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        precision,
    }
}

/// Area, road length, crime count and crime rate over the dataset's
/// communities. The dataset must be non-empty. Communities missing from
/// `districts` contribute no area or road length.
pub fn descriptive_stats(dataset: &Dataset, districts: &[CommunityDistrict]) -> StatsTable {
    let by_id: BTreeMap<&str, &CommunityDistrict> =
        districts.iter().map(|d| (d.community_id(), d)).collect();
    let matched: Vec<&CommunityDistrict> = dataset
        .rows
        .iter()
        .filter_map(|r| by_id.get(r.community_id.as_str()).copied())
        .collect();
    let area: Vec<f64> = matched.iter().map(|d| d.area_km2()).collect();
    let road: Vec<f64> = matched.iter().map(|d| d.road_length_km()).collect();
    let count: Vec<f64> = dataset.rows.iter().map(|r| r.crime_count as f64).collect();
    let rate: Vec<f64> = dataset.rows.iter().map(|r| r.crime_rate).collect();
    let mut rows = Vec::new();
    if !area.is_empty() {
        rows.push(summarize("Community Area (km2)", "Total area", &area, 2));
        rows.push(summarize("Road Length (km)", "Total road length", &road, 2));
    }
    rows.push(summarize("Crime Count", "Total reported crimes", &count, 2));
    rows.push(summarize("Crime Rate", "Rate of crimes", &rate, 5));
    StatsTable { rows }
}

impl StatsTable {
    /// Full-precision CSV with the header `Variable,Description,Mean,Stdv,Min,Max`.
    pub fn to_csv(&self) -> String {
        let mut s = STATS_HEADER.join(",");
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{},{}", r.variable, r.description, r.mean, r.stdv, r.min, r.max);
        }
        s
    }

    pub fn to_text(&self) -> String {
        let cells: Vec<[String; 6]> = self
            .rows
            .iter()
            .map(|r| {
                let p = r.precision;
                [
                    r.variable.clone(),
                    r.description.clone(),
                    format!("{:.p$}", r.mean),
                    format!("{:.p$}", r.stdv),
                    format!("{:.p$}", r.min),
                    format!("{:.p$}", r.max),
                ]
            })
            .collect();
        let mut width = STATS_HEADER.map(str::len);
        for row in &cells {
            for (w, c) in width.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let line = |cols: [&str; 6]| {
            let mut s = String::new();
            for (i, (c, w)) in cols.iter().zip(width).enumerate() {
                if i < 2 {
                    let _ = write!(s, "{c:<w$}  ");
                } else {
                    let _ = write!(s, "{c:>w$}  ");
                }
            }
            s.trim_end().to_string() + "\n"
        };
        let mut out = line(STATS_HEADER);
        for row in &cells {
            out += &line([&row[0], &row[1], &row[2], &row[3], &row[4], &row[5]].map(|s| s.as_str()));
        }
        out
    }
}
