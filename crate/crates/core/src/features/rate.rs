use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::geo::{CommunityDistrict, SpatialJoin};
use crate::ingest::CrimeRecord;
use crate::{Error, Result};

/// What a community's crime count is divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateDenominator {
    #[default]
    Population,
    AreaKm2,
    RoadLengthKm,
}

/// Crimes per district; districts without any crime get 0.
pub fn count_crimes(
    joined: &SpatialJoin<CrimeRecord>,
    districts: &[CommunityDistrict],
) -> BTreeMap<String, u64> {
    districts
        .iter()
        .map(|d| {
            let n = joined.buckets.get(d.community_id()).map_or(0, Vec::len);
            (d.community_id().to_string(), n as u64)
        })
        .collect()
}

/// Reads `community_id,population` rows (header required).
pub fn parse_population_csv<R: Read>(reader: R) -> Result<BTreeMap<String, f64>> {
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(id_i), Some(pop_i)) = (col("community_id"), col("population")) else {
        let missing = ["community_id", "population"]
            .into_iter()
            .filter(|c| col(c).is_none())
            .map(str::to_string)
            .collect();
        return Err(Error::MissingColumns(missing));
    };
    let mut out = BTreeMap::new();
    for (i, row) in csv.records().enumerate() {
        let row = row?;
        let pop: f64 = row
            .get(pop_i)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::Row {
                context: "population table".into(),
                row: i + 1,
                message: format!("unparseable population {:?}", row.get(pop_i).unwrap_or("")),
            })?;
        out.insert(row.get(id_i).unwrap_or("").trim().to_string(), pop);
    }
    Ok(out)
}

/// `rate = count / denominator` for every community in `counts`.
pub fn compute_crime_rate(
    counts: &BTreeMap<String, u64>,
    districts: &[CommunityDistrict],
    denominator: RateDenominator,
    population: Option<&BTreeMap<String, f64>>,
) -> Result<BTreeMap<String, f64>> {
    let by_id: BTreeMap<&str, &CommunityDistrict> =
        districts.iter().map(|d| (d.community_id(), d)).collect();
    if denominator == RateDenominator::Population {
        let missing: Vec<String> = counts
            .keys()
            .filter(|c| population.and_then(|p| p.get(*c)).is_none())
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingPopulation(missing));
        }
    }
    counts
        .iter()
        .map(|(c, &n)| {
            let denom = match denominator {
                RateDenominator::Population => population.and_then(|p| p.get(c)).copied(),
                RateDenominator::AreaKm2 => by_id.get(c.as_str()).map(|d| d.area_km2()),
                RateDenominator::RoadLengthKm => by_id.get(c.as_str()).map(|d| d.road_length_km()),
            };
            match denom {
                Some(v) if v > 0.0 && v.is_finite() => Ok((c.clone(), n as f64 / v)),
                Some(v) => Err(Error::Validation(format!(
                    "community {c:?}: denominator must be positive, got {v}"
                ))),
                None => Err(Error::Validation(format!("community {c:?}: no district"))),
            }
        })
        .collect()
}
