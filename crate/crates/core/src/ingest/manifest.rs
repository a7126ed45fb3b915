//! Street-view image manifest.
//!
//! One JSON object per line, fields always in this order:
//! `point_id`, `location` (`{"lon":..,"lat":..}`), `width_px`, `height_px`,
//! `heading` (null = API default), `status` (`pending|fetched|failed`),
//! `request_url`. The URL carries [`KEY_PLACEHOLDER`] in place of the API
//! key; the real key is substituted only at request time.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::geo::{GeoPoint, SamplePoint};
use crate::{Error, Result};

pub const DEFAULT_ENDPOINT: &str = "https://maps.googleapis.com/maps/api/streetview";
pub const DEFAULT_IMAGE_SIZE: (u32, u32) = (600, 300);
pub const KEY_PLACEHOLDER: &str = "${STREETVIEW_API_KEY}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FetchStatus {
    Pending,
    Fetched,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub point_id: String,
    pub location: GeoPoint,
    pub width_px: u32,
    pub height_px: u32,
    pub heading: Option<f64>,
    pub status: FetchStatus,
    pub request_url: String,
}

impl ManifestEntry {
    /// File name of the fetched image inside the image directory.
    pub fn image_file_name(&self) -> String {
        let safe: String = self
            .point_id
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
            .collect();
        format!("{safe}.jpg")
    }
}

/// One pending entry per point, with a deterministic request URL.
pub fn build_image_manifest(
    points: &[SamplePoint],
    size: (u32, u32),
    endpoint: &str,
) -> Vec<ManifestEntry> {
    points
        .iter()
        .map(|p| {
            let (w, h) = size;
            let (lat, lon) = (p.location.lat(), p.location.lon());
            ManifestEntry {
                point_id: p.point_id.clone(),
                location: p.location,
                width_px: w,
                height_px: h,
                heading: None,
                status: FetchStatus::Pending,
                request_url: format!(
                    "{endpoint}?size={w}x{h}&location={lat},{lon}&return_error_code=true&key={KEY_PLACEHOLDER}"
                ),
            }
        })
        .collect()
}

pub fn write_manifest<W: Write>(mut writer: W, entries: &[ManifestEntry]) -> Result<()> {
    for e in entries {
        serde_json::to_writer(&mut writer, e)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_manifest<R: BufRead>(reader: R) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|e| Error::Row {
            context: "manifest".into(),
            row: i + 1,
            message: e.to_string(),
        })?;
        out.push(entry);
    }
    Ok(out)
}
