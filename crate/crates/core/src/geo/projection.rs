use super::GeoPoint;
use crate::{Error, Result};

/// Mean Earth radius used by every metric computation.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Local equirectangular frame:
/// `x = R * dlon * cos(lat0)`, `y = R * dlat` (angles in radians).
///
/// Distortion grows with distance from the origin; at city scale (a few km)
/// the relative length error stays below 1e-3.
#[derive(Debug, Clone, Copy)]
pub struct LocalFrame {
    origin: GeoPoint,
    cos_lat: f64,
}

impl LocalFrame {
    pub fn new(origin: GeoPoint) -> Self {
        Self {
            origin,
            cos_lat: origin.lat().to_radians().cos(),
        }
    }

    /// Frame centred on the vertex mean of `points`.
    pub fn centred_on(points: &[GeoPoint]) -> Self {
        let n = points.len().max(1) as f64;
        let lon = points.iter().map(GeoPoint::lon).sum::<f64>() / n;
        let lat = points.iter().map(GeoPoint::lat).sum::<f64>() / n;
        // The mean of valid coordinates is itself valid.
        Self::new(GeoPoint::new(lon, lat).expect("mean of valid coordinates"))
    }

    pub fn origin(&self) -> GeoPoint {
        self.origin
    }

    pub fn project(&self, p: GeoPoint) -> (f64, f64) {
        let x = EARTH_RADIUS_M * (p.lon() - self.origin.lon()).to_radians() * self.cos_lat;
        let y = EARTH_RADIUS_M * (p.lat() - self.origin.lat()).to_radians();
        (x, y)
    }

    pub fn unproject(&self, x: f64, y: f64) -> Result<GeoPoint> {
        let lat = self.origin.lat() + (y / EARTH_RADIUS_M).to_degrees();
        let lon = self.origin.lon() + (x / (EARTH_RADIUS_M * self.cos_lat)).to_degrees();
        GeoPoint::new(lon, lat)
    }
}

fn check_near(p: GeoPoint, origin: GeoPoint) -> Result<()> {
    if (p.lon() - origin.lon()).abs() > 1.0 || (p.lat() - origin.lat()).abs() > 1.0 {
        return Err(Error::Validation(format!(
            "point ({}, {}) is more than 1 degree from projection origin ({}, {})",
            p.lon(),
            p.lat(),
            origin.lon(),
            origin.lat()
        )));
    }
    Ok(())
}

/// Projects `p` into the local frame at `origin`, in meters.
pub fn project_local(p: GeoPoint, origin: GeoPoint) -> Result<(f64, f64)> {
    check_near(p, origin)?;
    Ok(LocalFrame::new(origin).project(p))
}

/// Inverse of [`project_local`].
pub fn unproject_local(x: f64, y: f64, origin: GeoPoint) -> Result<GeoPoint> {
    let p = LocalFrame::new(origin).unproject(x, y)?;
    check_near(p, origin)?;
    Ok(p)
}
