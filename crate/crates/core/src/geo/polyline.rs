use serde::{Deserialize, Serialize};

use super::{polygon::point_in_polygon, CommunityDistrict, GeoPoint, LocalFrame};
use crate::{Error, Result};

/// Slack added to the length before flooring, so a line that is 150 m up to
/// rounding still yields a sample at chainage 150.
const CHAINAGE_SLACK_M: f64 = 1e-6;

/// An open road centerline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    id: String,
    vertices: Vec<GeoPoint>,
}

impl Polyline {
    pub fn new(id: impl Into<String>, vertices: Vec<GeoPoint>) -> Result<Self> {
        let id = id.into();
        if vertices.len() < 2 {
            return Err(Error::Validation(format!(
                "polyline {id:?} needs at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(i) = vertices.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::Validation(format!(
                "polyline {id:?} repeats vertex {i}"
            )));
        }
        Ok(Self { id, vertices })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn vertices(&self) -> &[GeoPoint] {
        &self.vertices
    }

    pub fn frame(&self) -> LocalFrame {
        LocalFrame::centred_on(&self.vertices)
    }

    fn projected(&self) -> (LocalFrame, Vec<(f64, f64)>) {
        let frame = self.frame();
        let pts = self.vertices.iter().map(|&p| frame.project(p)).collect();
        (frame, pts)
    }
}

/// A street-view sampling location on a centerline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub point_id: String,
    pub location: GeoPoint,
    pub source_polyline: String,
    pub chainage_m: f64,
    pub community_id: Option<String>,
}

fn seg_len(a: (f64, f64), b: (f64, f64)) -> f64 {
    (b.0 - a.0).hypot(b.1 - a.1)
}

/// Length in meters, summed over segments in the polyline's centroid frame.
pub fn polyline_length(line: &Polyline) -> f64 {
    let (_, pts) = line.projected();
    pts.windows(2).map(|w| seg_len(w[0], w[1])).sum()
}

/// Points at chainage `0, s, 2s, ..., floor(L/s)*s`.
///
/// Each point is placed by linear interpolation along the projected
/// polyline and mapped back to degrees. A trailing partial step is dropped.
pub fn sample_equidistant(line: &Polyline, spacing_m: f64) -> Result<Vec<SamplePoint>> {
    if !(spacing_m > 0.0) || !spacing_m.is_finite() {
        return Err(Error::Validation(format!(
            "spacing must be positive, got {spacing_m}"
        )));
    }
    let (frame, pts) = line.projected();
    let cumulative: Vec<f64> = std::iter::once(0.0)
        .chain(pts.windows(2).scan(0.0, |acc, w| {
            *acc += seg_len(w[0], w[1]);
            Some(*acc)
        }))
        .collect();
    let total = *cumulative.last().unwrap_or(&0.0);
    let count = ((total + CHAINAGE_SLACK_M) / spacing_m).floor() as usize + 1;

    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    for k in 0..count {
        let chainage = (k as f64 * spacing_m).min(total);
        while seg + 2 < cumulative.len() && cumulative[seg + 1] < chainage {
            seg += 1;
        }
        let (a, b) = (pts[seg], pts[seg + 1]);
        let len = cumulative[seg + 1] - cumulative[seg];
        let t = if len > 0.0 {
            ((chainage - cumulative[seg]) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let location = frame.unproject(a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1))?;
        out.push(SamplePoint {
            point_id: format!("{}#{k:06}", line.id()),
            location,
            source_polyline: line.id().to_string(),
            chainage_m: chainage,
            community_id: None,
        });
    }
    Ok(out)
}

/// Segment-segment intersection parameter along `p0 -> p1`, if any.
fn crossing(p0: (f64, f64), p1: (f64, f64), q0: (f64, f64), q1: (f64, f64)) -> Option<f64> {
    let r = (p1.0 - p0.0, p1.1 - p0.1);
    let s = (q1.0 - q0.0, q1.1 - q0.1);
    let denom = r.0 * s.1 - r.1 * s.0;
    if denom == 0.0 {
        return None;
    }
    let qp = (q0.0 - p0.0, q0.1 - p0.1);
    let t = (qp.0 * s.1 - qp.1 * s.0) / denom;
    let u = (qp.0 * r.1 - qp.1 * r.0) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then_some(t)
}

/// Length in meters of the part of `line` lying inside `district`.
///
/// Each segment is cut at every boundary crossing and the pieces whose
/// midpoint is inside the district are summed.
pub fn length_inside(line: &Polyline, district: &CommunityDistrict) -> f64 {
    let (_, pts) = line.projected();
    let deg: Vec<(f64, f64)> = line.vertices.iter().map(|p| (p.lon(), p.lat())).collect();
    let (min_lon, min_lat, max_lon, max_lat) = district.bbox();
    let mut inside = 0.0;
    for (i, w) in deg.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if a.0.max(b.0) < min_lon
            || a.0.min(b.0) > max_lon
            || a.1.max(b.1) < min_lat
            || a.1.min(b.1) > max_lat
        {
            continue;
        }
        let mut cuts = vec![0.0, 1.0];
        for poly in district.boundary() {
            for ring in std::iter::once(poly.exterior()).chain(poly.holes().iter().map(Vec::as_slice)) {
                for e in ring.windows(2) {
                    let q0 = (e[0].lon(), e[0].lat());
                    let q1 = (e[1].lon(), e[1].lat());
                    if let Some(t) = crossing(a, b, q0, q1) {
                        cuts.push(t);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let len = seg_len(pts[i], pts[i + 1]);
        for c in cuts.windows(2) {
            let tm = 0.5 * (c[0] + c[1]);
            let mid = (a.0 + tm * (b.0 - a.0), a.1 + tm * (b.1 - a.1));
            let Ok(mid) = GeoPoint::new(mid.0, mid.1) else {
                continue;
            };
            if district.boundary().iter().any(|p| point_in_polygon(mid, p)) {
                inside += (c[1] - c[0]) * len;
            }
        }
    }
    inside
}
