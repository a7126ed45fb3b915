//! Sample-point CSV: `point_id,lon,lat,community_id,source_polyline,chainage_m`.

use std::collections::HashMap;
use std::io::{Read, Write};

use streetcrime::geo::{GeoPoint, SamplePoint};
use streetcrime::{Error, Result};

pub const POINTS_HEADER: [&str; 6] = ["point_id", "lon", "lat", "community_id", "source_polyline", "chainage_m"];

pub fn write_points<W: Write>(writer: W, points: &[SamplePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(POINTS_HEADER)?;
    for p in points {
        w.write_record([
            p.point_id.clone(),
            p.location.lon().to_string(),
            p.location.lat().to_string(),
            p.community_id.clone().unwrap_or_default(),
            p.source_polyline.clone(),
            p.chainage_m.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points<R: Read>(reader: R) -> Result<Vec<SamplePoint>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let found: Vec<&str> = headers.iter().collect();
    if found != POINTS_HEADER {
        let missing = POINTS_HEADER
            .iter()
            .filter(|h| !found.contains(h))
            .map(|h| h.to_string())
            .collect::<Vec<_>>();
        return Err(if missing.is_empty() {
            Error::Validation(format!("points header must be {}", POINTS_HEADER.join(",")))
        } else {
            Error::MissingColumns(missing)
        });
    }
    r.records()
        .enumerate()
        .map(|(i, row)| {
            let row = row?;
            let bad = |m: String| Error::Row {
                context: "points".into(),
                row: i + 1,
                message: m,
            };
            let num = |k: usize| row[k].parse::<f64>().map_err(|_| bad(format!("{}: {:?} is not a number", POINTS_HEADER[k], &row[k])));
            Ok(SamplePoint {
                point_id: row[0].to_string(),
                location: GeoPoint::new(num(1)?, num(2)?).map_err(|e| bad(e.to_string()))?,
                community_id: (!row[3].is_empty()).then(|| row[3].to_string()),
                source_polyline: row[4].to_string(),
                chainage_m: num(5)?,
            })
        })
        .collect()
}

/// `point_id -> community_id` for assigned points.
pub fn point_communities(points: &[SamplePoint]) -> HashMap<String, String> {
    points
        .iter()
        .filter_map(|p| p.community_id.clone().map(|c| (p.point_id.clone(), c)))
        .collect()
}
