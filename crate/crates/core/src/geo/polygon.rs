use super::{GeoPoint, LocalFrame};
use crate::{Error, Result};

/// A polygon with optional holes. Rings are closed (first == last).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    exterior: Vec<GeoPoint>,
    holes: Vec<Vec<GeoPoint>>,
}

fn check_ring(ring: &[GeoPoint], what: &str) -> Result<()> {
    if ring.len() < 4 {
        return Err(Error::Validation(format!(
            "{what} ring has {} positions, need at least 4",
            ring.len()
        )));
    }
    if ring.first() != ring.last() {
        return Err(Error::Validation(format!("{what} ring is not closed")));
    }
    Ok(())
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Index pair of the first two non-adjacent ring edges that touch, if any.
fn self_intersection(ring: &[GeoPoint]) -> Option<(usize, usize)> {
    let v: Vec<(f64, f64)> = ring.iter().map(|p| (p.lon(), p.lat())).collect();
    let edges = v.len() - 1;
    for i in 0..edges {
        let (a, b) = (v[i], v[i + 1]);
        let (ax0, ax1) = (a.0.min(b.0), a.0.max(b.0));
        for j in i + 2..edges {
            if i == 0 && j == edges - 1 {
                continue;
            }
            let (c, d) = (v[j], v[j + 1]);
            if c.0.max(d.0) < ax0 || c.0.min(d.0) > ax1 {
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

impl Polygon {
    pub fn new(exterior: Vec<GeoPoint>, holes: Vec<Vec<GeoPoint>>) -> Result<Self> {
        check_ring(&exterior, "exterior")?;
        for (k, h) in holes.iter().enumerate() {
            check_ring(h, &format!("hole {k}"))?;
        }
        if let Some((i, j)) = self_intersection(&exterior) {
            return Err(Error::Validation(format!(
                "exterior ring self-intersects at edges {i} and {j}"
            )));
        }
        Ok(Self { exterior, holes })
    }

    pub fn exterior(&self) -> &[GeoPoint] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<GeoPoint>] {
        &self.holes
    }

    fn rings(&self) -> impl Iterator<Item = &[GeoPoint]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    /// Area in square meters: exterior shoelace minus holes, in a frame
    /// centred on the exterior vertices.
    pub fn area_m2(&self) -> f64 {
        let frame = LocalFrame::centred_on(&self.exterior[..self.exterior.len() - 1]);
        let ring_area = |ring: &[GeoPoint]| {
            let p: Vec<(f64, f64)> = ring.iter().map(|&g| frame.project(g)).collect();
            0.5 * p.windows(2).map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1).sum::<f64>().abs()
        };
        let holes: f64 = self.holes.iter().map(|h| ring_area(h)).sum();
        ring_area(&self.exterior) - holes
    }

    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.exterior.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), p| (a.min(p.lon()), b.min(p.lat()), c.max(p.lon()), d.max(p.lat())),
        )
    }
}

enum RingHit {
    Edge,
    Inside,
    Outside,
}

fn ring_test(p: (f64, f64), ring: &[GeoPoint]) -> RingHit {
    let mut inside = false;
    for w in ring.windows(2) {
        let a = (w[0].lon(), w[0].lat());
        let b = (w[1].lon(), w[1].lat());
        if orient(a, b, p) == 0.0 && on_segment(a, b, p) {
            return RingHit::Edge;
        }
        if (a.1 > p.1) != (b.1 > p.1) {
            let x = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if p.0 < x {
                inside = !inside;
            }
        }
    }
    if inside {
        RingHit::Inside
    } else {
        RingHit::Outside
    }
}

/// Even-odd ray casting in the lon/lat plane. Points on any ring edge,
/// including hole edges, count as inside.
pub fn point_in_polygon(p: GeoPoint, poly: &Polygon) -> bool {
    let q = (p.lon(), p.lat());
    let mut rings = poly.rings();
    match ring_test(q, rings.next().expect("exterior ring")) {
        RingHit::Edge => return true,
        RingHit::Outside => return false,
        RingHit::Inside => {}
    }
    for hole in rings {
        match ring_test(q, hole) {
            RingHit::Edge => return true,
            RingHit::Inside => return false,
            RingHit::Outside => {}
        }
    }
    true
}

/// One community district: an id, its polygons and summary measures.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityDistrict {
    community_id: String,
    boundary: Vec<Polygon>,
    area_km2: f64,
    road_length_km: f64,
    bbox: (f64, f64, f64, f64),
}

impl CommunityDistrict {
    pub fn new(community_id: impl Into<String>, boundary: Vec<Polygon>) -> Result<Self> {
        let community_id = community_id.into();
        if boundary.is_empty() {
            return Err(Error::Validation(format!(
                "community {community_id:?} has no polygons"
            )));
        }
        let area_km2 = boundary.iter().map(Polygon::area_m2).sum::<f64>() / 1e6;
        if !(area_km2 > 0.0) {
            return Err(Error::Validation(format!(
                "community {community_id:?} has non-positive area"
            )));
        }
        let bbox = boundary.iter().map(Polygon::bbox).fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.min(b.0), a.1.min(b.1), a.2.max(b.2), a.3.max(b.3)),
        );
        Ok(Self {
            community_id,
            boundary,
            area_km2,
            road_length_km: 0.0,
            bbox,
        })
    }

    pub fn with_road_length_km(mut self, km: f64) -> Self {
        self.road_length_km = km.max(0.0);
        self
    }

    pub fn community_id(&self) -> &str {
        &self.community_id
    }

    pub fn boundary(&self) -> &[Polygon] {
        &self.boundary
    }

    pub fn area_km2(&self) -> f64 {
        self.area_km2
    }

    pub fn road_length_km(&self) -> f64 {
        self.road_length_km
    }

    /// `(min_lon, min_lat, max_lon, max_lat)`
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.bbox
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        let (a, b, c, d) = self.bbox;
        if p.lon() < a || p.lon() > c || p.lat() < b || p.lat() > d {
            return false;
        }
        self.boundary.iter().any(|poly| point_in_polygon(p, poly))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lon: f64, lat: f64) -> GeoPoint {
        GeoPoint::new(lon, lat).unwrap()
    }

    fn square(x0: f64, y0: f64, side: f64) -> Vec<GeoPoint> {
        vec![
            pt(x0, y0),
            pt(x0 + side, y0),
            pt(x0 + side, y0 + side),
            pt(x0, y0 + side),
            pt(x0, y0),
        ]
    }

    #[test]
    fn unit_square_containment() {
        let sq = Polygon::new(square(0.0, 0.0, 1.0), vec![]).unwrap();
        assert!(point_in_polygon(pt(0.5, 0.5), &sq));
        assert!(!point_in_polygon(pt(2.0, 2.0), &sq));
    }

    #[test]
    fn edges_and_vertices_count_inside() {
        let sq = Polygon::new(square(0.0, 0.0, 1.0), vec![]).unwrap();
        for p in [pt(0.0, 0.5), pt(1.0, 0.5), pt(0.5, 0.0), pt(0.5, 1.0), pt(1.0, 1.0), pt(0.0, 0.0)] {
            assert!(point_in_polygon(p, &sq), "{p:?}");
        }
        assert!(!point_in_polygon(pt(1.0 + 1e-12, 0.5), &sq));
    }

    #[test]
    fn holes_subtract_but_keep_their_edges() {
        let poly = Polygon::new(square(0.0, 0.0, 4.0), vec![square(1.0, 1.0, 2.0)]).unwrap();
        assert!(!point_in_polygon(pt(2.0, 2.0), &poly));
        assert!(point_in_polygon(pt(0.5, 0.5), &poly));
        assert!(point_in_polygon(pt(1.0, 2.0), &poly));
    }

    #[test]
    fn ring_validation() {
        let mut open = square(0.0, 0.0, 1.0);
        open.pop();
        assert!(Polygon::new(open, vec![]).is_err());
        assert!(Polygon::new(vec![pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 0.0)], vec![]).is_err());
        let bowtie = vec![pt(0.0, 0.0), pt(1.0, 1.0), pt(1.0, 0.0), pt(0.0, 1.0), pt(0.0, 0.0)];
        let err = Polygon::new(bowtie, vec![]).unwrap_err().to_string();
        assert!(err.contains("self-intersects"), "{err}");
    }

    #[test]
    fn equator_degree_square_area() {
        let poly = Polygon::new(square(0.0, 0.0, 1.0), vec![]).unwrap();
        let side_km = 6371.0 * 1f64.to_radians();
        // Frame latitude is 0.5 degrees, so the x extent shrinks by cos(0.5 deg).
        let expected = side_km * side_km * 0.5f64.to_radians().cos();
        let d = CommunityDistrict::new("eq", vec![poly]).unwrap();
        assert!((d.area_km2() - expected).abs() < 1e-6 * expected);
        assert!((d.area_km2() / (side_km * side_km) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn hole_area_is_removed() {
        let outer = Polygon::new(square(0.0, 0.0, 0.02), vec![]).unwrap();
        let holed = Polygon::new(square(0.0, 0.0, 0.02), vec![square(0.005, 0.005, 0.01)]).unwrap();
        let ratio = holed.area_m2() / outer.area_m2();
        assert!((ratio - 0.75).abs() < 1e-6, "{ratio}");
    }

    #[test]
    fn district_bbox_prefilter() {
        let d = CommunityDistrict::new(
            "a",
            vec![
                Polygon::new(square(0.0, 0.0, 1.0), vec![]).unwrap(),
                Polygon::new(square(5.0, 5.0, 1.0), vec![]).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(d.bbox(), (0.0, 0.0, 6.0, 6.0));
        assert!(d.contains(pt(5.5, 5.5)));
        assert!(!d.contains(pt(3.0, 3.0)));
    }
}
