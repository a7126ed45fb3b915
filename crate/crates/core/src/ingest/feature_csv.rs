use std::io::{Read, Write};

use super::ClassSchema;
use crate::{Error, Result};

const LEADING: [&str; 3] = ["image_id", "point_id", "total_pixels"];

/// Per-image pixel tallies over the class schema.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageFeatureVector {
    pub image_id: String,
    pub point_id: String,
    pub class_pixels: Vec<u64>,
    pub total_pixels: u64,
}

/// Parsed feature CSV with the rows that failed validation.
#[derive(Debug, Clone, Default)]
pub struct FeatureCsv {
    pub vectors: Vec<ImageFeatureVector>,
    /// `(1-based data row, reason)`
    pub rejected: Vec<(usize, String)>,
}

fn expected_header(schema: &ClassSchema) -> Vec<String> {
    LEADING
        .iter()
        .map(|s| s.to_string())
        .chain(schema.classes().iter().cloned())
        .collect()
}

fn header_diff(expected: &[String], found: &[String]) -> Vec<String> {
    let mut diff = Vec::new();
    for i in 0..expected.len().max(found.len()) {
        match (expected.get(i), found.get(i)) {
            (Some(e), Some(f)) if e == f => {}
            (Some(e), Some(f)) => diff.push(format!("column {i}: expected {e:?}, found {f:?}")),
            (Some(e), None) => diff.push(format!("column {i}: expected {e:?}, missing")),
            (None, Some(f)) => diff.push(format!("column {i}: unexpected {f:?}")),
            (None, None) => unreachable!(),
        }
    }
    diff
}

fn parse_row(row: &csv::StringRecord, n_classes: usize) -> std::result::Result<ImageFeatureVector, String> {
    if row.len() != n_classes + LEADING.len() {
        return Err(format!("expected {} fields, found {}", n_classes + 3, row.len()));
    }
    let count = |i: usize| -> std::result::Result<u64, String> {
        row[i]
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("column {i}: {:?} is not a non-negative integer", &row[i]))
    };
    let total_pixels = count(2)?;
    if total_pixels == 0 {
        return Err("total_pixels must be positive".into());
    }
    let class_pixels = (3..row.len()).map(count).collect::<std::result::Result<Vec<_>, _>>()?;
    let sum: u64 = class_pixels.iter().sum();
    if sum != total_pixels {
        return Err(format!("class pixels sum to {sum}, total_pixels is {total_pixels}"));
    }
    Ok(ImageFeatureVector {
        image_id: row[0].to_string(),
        point_id: row[1].to_string(),
        class_pixels,
        total_pixels,
    })
}

/// Reads the extractor's per-image CSV: `image_id, point_id, total_pixels`,
/// then one count column per schema class in schema order.
pub fn parse_feature_csv<R: Read>(reader: R, schema: &ClassSchema) -> Result<FeatureCsv> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let found: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
    let diff = header_diff(&expected_header(schema), &found);
    if !diff.is_empty() {
        return Err(Error::SchemaMismatch(diff));
    }
    let mut out = FeatureCsv::default();
    for (i, row) in csv.records().enumerate() {
        let row = row?;
        match parse_row(&row, schema.len()) {
            Ok(v) => out.vectors.push(v),
            Err(reason) => out.rejected.push((i + 1, reason)),
        }
    }
    Ok(out)
}

pub fn write_feature_csv<W: Write>(
    writer: W,
    schema: &ClassSchema,
    vectors: &[ImageFeatureVector],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(expected_header(schema))?;
    for v in vectors {
        if v.class_pixels.len() != schema.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.len(),
                actual: v.class_pixels.len(),
            });
        }
        let mut rec = vec![v.image_id.clone(), v.point_id.clone(), v.total_pixels.to_string()];
        rec.extend(v.class_pixels.iter().map(u64::to_string));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}
