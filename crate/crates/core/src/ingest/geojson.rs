use std::collections::HashSet;
use std::io::Read;

use geojson::{Feature, FeatureCollection, GeometryValue, Position};

use crate::geo::{CommunityDistrict, GeoPoint, Polygon, Polyline};
use crate::{Error, Result};

fn read_collection<R: Read>(reader: R) -> Result<FeatureCollection> {
    let fc: FeatureCollection = serde_json::from_reader(reader)?;
    Ok(fc)
}

fn geo_err(feature: usize, reason: impl Into<String>) -> Error {
    Error::Geometry {
        feature,
        reason: reason.into(),
    }
}

fn to_point(feature: usize, p: &Position) -> Result<GeoPoint> {
    let c = p.as_slice();
    if c.len() < 2 {
        return Err(geo_err(feature, "position with fewer than 2 coordinates"));
    }
    GeoPoint::new(c[0], c[1]).map_err(|e| geo_err(feature, e.to_string()))
}

fn to_ring(feature: usize, ring: &[Position]) -> Result<Vec<GeoPoint>> {
    ring.iter().map(|p| to_point(feature, p)).collect()
}

fn to_polygon(feature: usize, rings: &[Vec<Position>]) -> Result<Polygon> {
    let (exterior, holes) = rings
        .split_first()
        .ok_or_else(|| geo_err(feature, "polygon without rings"))?;
    let exterior = to_ring(feature, exterior)?;
    let holes = holes
        .iter()
        .map(|h| to_ring(feature, h))
        .collect::<Result<Vec<_>>>()?;
    Polygon::new(exterior, holes).map_err(|e| geo_err(feature, e.to_string()))
}

fn property_string(f: &Feature, name: &str) -> Option<String> {
    match f.properties.as_ref()?.get(name)? {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Reads community districts from a GeoJSON FeatureCollection of Polygon or
/// MultiPolygon features; `id_property` names the community id property.
/// Areas come from the projected shoelace formula.
pub fn parse_boundaries<R: Read>(reader: R, id_property: &str) -> Result<Vec<CommunityDistrict>> {
    let fc = read_collection(reader)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(fc.features.len());
    for (i, f) in fc.features.iter().enumerate() {
        let id = property_string(f, id_property)
            .ok_or_else(|| geo_err(i, format!("missing id property {id_property:?}")))?;
        let geometry = f
            .geometry
            .as_ref()
            .ok_or_else(|| geo_err(i, "feature has no geometry"))?;
        let polygons = match &geometry.value {
            GeometryValue::Polygon { coordinates } => vec![to_polygon(i, coordinates)?],
            GeometryValue::MultiPolygon { coordinates } => coordinates
                .iter()
                .map(|p| to_polygon(i, p))
                .collect::<Result<_>>()?,
            other => {
                return Err(geo_err(
                    i,
                    format!("expected Polygon or MultiPolygon, got {}", other.type_name()),
                ))
            }
        };
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateCommunity(id));
        }
        out.push(CommunityDistrict::new(id, polygons).map_err(|e| geo_err(i, e.to_string()))?);
    }
    Ok(out)
}

/// Road centerlines plus the features that could not be used.
#[derive(Debug, Clone, Default)]
pub struct Centerlines {
    pub lines: Vec<Polyline>,
    /// `(feature index, reason)`
    pub skipped: Vec<(usize, String)>,
}

/// Reads LineString/MultiLineString features. Consecutive repeated vertices
/// are collapsed; lines left with fewer than two vertices are skipped and
/// reported. Ids come from `id_property` when given (made unique with
/// `@<feature index>` on collision), else `f<feature index>`; MultiLineString
/// parts get a `.<part>` suffix.
pub fn parse_centerlines<R: Read>(reader: R, id_property: Option<&str>) -> Result<Centerlines> {
    let fc = read_collection(reader)?;
    let mut out = Centerlines::default();
    let mut seen = HashSet::new();
    for (i, f) in fc.features.iter().enumerate() {
        let Some(geometry) = f.geometry.as_ref() else {
            out.skipped.push((i, "no geometry".into()));
            continue;
        };
        let parts: Vec<&Vec<Position>> = match &geometry.value {
            GeometryValue::LineString { coordinates } => vec![coordinates],
            GeometryValue::MultiLineString { coordinates } => coordinates.iter().collect(),
            other => {
                out.skipped.push((i, format!("unsupported geometry {}", other.type_name())));
                continue;
            }
        };
        let mut base = id_property
            .and_then(|p| property_string(f, p))
            .unwrap_or_else(|| format!("f{i}"));
        if !seen.insert(base.clone()) {
            base = format!("{base}@{i}");
            seen.insert(base.clone());
        }
        let multi = parts.len() > 1;
        for (k, part) in parts.into_iter().enumerate() {
            let mut vertices = to_ring(i, part)?;
            vertices.dedup();
            let id = if multi { format!("{base}.{k}") } else { base.clone() };
            match Polyline::new(id, vertices) {
                Ok(line) => out.lines.push(line),
                Err(e) => out.skipped.push((i, e.to_string())),
            }
        }
    }
    Ok(out)
}
