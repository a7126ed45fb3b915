use std::collections::BTreeMap;

use rand::seq::index;
use rayon::prelude::*;

use super::{CommunityDistrict, GeoPoint, SamplePoint};
use crate::rng;

/// Anything with a location that can be joined to districts.
pub trait Located {
    fn location(&self) -> GeoPoint;
}

impl Located for GeoPoint {
    fn location(&self) -> GeoPoint {
        *self
    }
}

impl Located for SamplePoint {
    fn location(&self) -> GeoPoint {
        self.location
    }
}

/// Records bucketed by community; input order is kept inside each bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialJoin<T> {
    pub buckets: BTreeMap<String, Vec<T>>,
    pub unassigned: Vec<T>,
}

impl<T> SpatialJoin<T> {
    pub fn total(&self) -> usize {
        self.buckets.values().map(Vec::len).sum::<usize>() + self.unassigned.len()
    }

    pub fn unassigned_fraction(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.unassigned.len() as f64 / n as f64,
        }
    }
}

/// Assigns each record to the district containing it. Where districts
/// overlap (shared edges included) the smallest `community_id` wins.
pub fn spatial_join<T: Located + Send + Sync>(
    records: Vec<T>,
    districts: &[CommunityDistrict],
) -> SpatialJoin<T> {
    let mut order: Vec<&CommunityDistrict> = districts.iter().collect();
    order.sort_by(|a, b| a.community_id().cmp(b.community_id()));

    let owners: Vec<Option<usize>> = records
        .par_iter()
        .map(|r| {
            let p = r.location();
            order.iter().position(|d| d.contains(p))
        })
        .collect();

    let mut buckets: BTreeMap<String, Vec<T>> = BTreeMap::new();
    let mut unassigned = Vec::new();
    for (record, owner) in records.into_iter().zip(owners) {
        match owner {
            Some(i) => buckets
                .entry(order[i].community_id().to_string())
                .or_default()
                .push(record),
            None => unassigned.push(record),
        }
    }
    SpatialJoin {
        buckets,
        unassigned,
    }
}

/// Uniform sample without replacement of `min(n, available)` points per
/// community. Each community draws from its own generator keyed by
/// `(seed, community_id)`; candidates are ordered by `point_id` before the
/// draw so the result does not depend on input order. Points without a
/// community are ignored. Output is sorted by `(community_id, point_id)`.
pub fn subsample_per_community(points: &[SamplePoint], n: usize, seed: u64) -> Vec<SamplePoint> {
    let mut groups: BTreeMap<&str, Vec<&SamplePoint>> = BTreeMap::new();
    for p in points {
        if let Some(c) = p.community_id.as_deref() {
            groups.entry(c).or_default().push(p);
        }
    }
    let picked: Vec<Vec<SamplePoint>> = groups
        .into_par_iter()
        .map(|(community, mut candidates)| {
            candidates.sort_by(|a, b| a.point_id.cmp(&b.point_id));
            let mut chosen: Vec<&SamplePoint> = if candidates.len() <= n {
                candidates
            } else {
                let mut rng = rng::stream_for(seed, community);
                index::sample(&mut rng, candidates.len(), n)
                    .into_iter()
                    .map(|i| candidates[i])
                    .collect()
            };
            chosen.sort_by(|a, b| a.point_id.cmp(&b.point_id));
            chosen.into_iter().cloned().collect()
        })
        .collect();
    picked.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Polygon;

    fn pt(lon: f64, lat: f64) -> GeoPoint {
        GeoPoint::new(lon, lat).unwrap()
    }

    fn cell(id: &str, x0: f64, y0: f64) -> CommunityDistrict {
        let ring = vec![
            pt(x0, y0),
            pt(x0 + 1.0, y0),
            pt(x0 + 1.0, y0 + 1.0),
            pt(x0, y0 + 1.0),
            pt(x0, y0),
        ];
        CommunityDistrict::new(id, vec![Polygon::new(ring, vec![]).unwrap()]).unwrap()
    }

    fn grid() -> Vec<CommunityDistrict> {
        vec![cell("d", 1.0, 1.0), cell("c", 0.0, 1.0), cell("b", 1.0, 0.0), cell("a", 0.0, 0.0)]
    }

    #[test]
    fn joins_to_containing_cell() {
        let j = spatial_join(vec![pt(0.5, 0.5), pt(1.5, 1.5), pt(3.0, 3.0)], &grid());
        assert_eq!(j.buckets["a"], vec![pt(0.5, 0.5)]);
        assert_eq!(j.buckets["d"], vec![pt(1.5, 1.5)]);
        assert_eq!(j.unassigned, vec![pt(3.0, 3.0)]);
        assert!((j.unassigned_fraction() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn shared_edge_goes_to_smallest_id() {
        let j = spatial_join(vec![pt(1.0, 0.5), pt(1.0, 1.0), pt(0.5, 1.0)], &grid());
        assert_eq!(j.buckets["a"].len(), 3);
        assert_eq!(j.total(), 3);
    }

    fn sp(id: &str, community: Option<&str>) -> SamplePoint {
        SamplePoint {
            point_id: id.to_string(),
            location: pt(0.0, 0.0),
            source_polyline: "r".into(),
            chainage_m: 0.0,
            community_id: community.map(str::to_string),
        }
    }

    #[test]
    fn small_communities_keep_everything() {
        let pts: Vec<SamplePoint> = (0..120).map(|i| sp(&format!("p{i:03}"), Some("x"))).collect();
        let out = subsample_per_community(&pts, 200, 1);
        assert_eq!(out.len(), 120);
    }

    #[test]
    fn subsample_is_order_independent_and_sorted() {
        let mut pts: Vec<SamplePoint> = (0..500)
            .map(|i| sp(&format!("p{i:03}"), Some(if i % 2 == 0 { "even" } else { "odd" })))
            .collect();
        pts.push(sp("lost", None));
        let a = subsample_per_community(&pts, 200, 42);
        pts.reverse();
        let b = subsample_per_community(&pts, 200, 42);
        assert_eq!(a, b);
        assert_eq!(a.len(), 400);
        let keys: Vec<(String, String)> = a
            .iter()
            .map(|p| (p.community_id.clone().unwrap(), p.point_id.clone()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let c = subsample_per_community(&pts, 200, 43);
        assert_ne!(a, c);
    }
}
