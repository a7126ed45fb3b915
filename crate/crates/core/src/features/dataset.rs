use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use super::{CommunityFeatures, RateDenominator};
use crate::ingest::ClassSchema;
use crate::{Error, Result};

const LEADING: [&str; 4] = ["community_id", "n_images", "crime_count", "crime_rate"];

/// One aggregated community: the model's unit of observation.
#[derive(Debug, Clone, PartialEq)]
pub struct CommunityRow {
    pub community_id: String,
    pub feature: Vec<f64>,
    pub n_images: usize,
    pub crime_count: u64,
    pub crime_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<CommunityRow>,
    pub schema: ClassSchema,
    /// Unknown when the dataset was read back from CSV.
    pub rate_denominator: Option<RateDenominator>,
}

/// Communities dropped while joining features to rates.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExclusionReport {
    /// Have a crime rate but no retrieved images.
    pub without_images: Vec<String>,
    /// Have images but no crime rate (no district).
    pub without_rate: Vec<String>,
}

impl ExclusionReport {
    pub fn len(&self) -> usize {
        self.without_images.len() + self.without_rate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Joins features and rates on community id. Rows are sorted by id;
/// communities present on one side only are excluded and reported.
pub fn build_dataset(
    features: &BTreeMap<String, CommunityFeatures>,
    counts: &BTreeMap<String, u64>,
    rates: &BTreeMap<String, f64>,
    schema: &ClassSchema,
    denominator: RateDenominator,
) -> Result<(Dataset, ExclusionReport)> {
    let with_images: BTreeSet<&String> = features
        .iter()
        .filter(|(_, f)| f.n_images > 0)
        .map(|(c, _)| c)
        .collect();
    let with_rate: BTreeSet<&String> = rates.keys().collect();
    let report = ExclusionReport {
        without_images: with_rate.difference(&with_images).map(|s| s.to_string()).collect(),
        without_rate: with_images.difference(&with_rate).map(|s| s.to_string()).collect(),
    };
    let mut rows = Vec::new();
    for c in with_images.intersection(&with_rate) {
        let f = &features[*c];
        if f.feature.len() != schema.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.len(),
                actual: f.feature.len(),
            });
        }
        rows.push(CommunityRow {
            community_id: c.to_string(),
            feature: f.feature.clone(),
            n_images: f.n_images,
            crime_count: counts.get(*c).copied().unwrap_or(0),
            crime_rate: rates[*c],
        });
    }
    if rows.is_empty() {
        return Err(Error::Validation(
            "no community has both images and a crime rate".into(),
        ));
    }
    Ok((
        Dataset {
            rows,
            schema: schema.clone(),
            rate_denominator: Some(denominator),
        },
        report,
    ))
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Header: `community_id,n_images,crime_count,crime_rate`, then one
    /// column per schema class. Floats use the shortest round-trip form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(LEADING.iter().map(|s| s.to_string()).chain(self.schema.classes().iter().cloned()))?;
        for r in &self.rows {
            let mut rec = vec![
                r.community_id.clone(),
                r.n_images.to_string(),
                r.crime_count.to_string(),
                r.crime_rate.to_string(),
            ];
            rec.extend(r.feature.iter().map(f64::to_string));
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut csv = csv::Reader::from_reader(reader);
        let headers = csv.headers()?.clone();
        let found: Vec<&str> = headers.iter().take(LEADING.len()).collect();
        if found != LEADING {
            return Err(Error::MissingColumns(
                LEADING.iter().filter(|c| !found.contains(c)).map(|s| s.to_string()).collect(),
            ));
        }
        let classes: Vec<String> = headers.iter().skip(LEADING.len()).map(str::to_string).collect();
        let schema = ClassSchema::new("dataset", classes)?;
        let mut rows = Vec::new();
        for (i, rec) in csv.records().enumerate() {
            let rec = rec?;
            let bad = |message: String| Error::Row {
                context: "dataset".into(),
                row: i + 1,
                message,
            };
            if rec.len() != headers.len() {
                return Err(bad(format!("expected {} fields, found {}", headers.len(), rec.len())));
            }
            let num = |j: usize| -> Result<f64> {
                rec[j]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| bad(format!("column {:?}: bad number {:?}", &headers[j], &rec[j])))
            };
            rows.push(CommunityRow {
                community_id: rec[0].to_string(),
                n_images: rec[1].parse().map_err(|_| bad(format!("bad n_images {:?}", &rec[1])))?,
                crime_count: rec[2].parse().map_err(|_| bad(format!("bad crime_count {:?}", &rec[2])))?,
                crime_rate: num(3)?,
                feature: (LEADING.len()..rec.len()).map(num).collect::<Result<_>>()?,
            });
        }
        if rows.is_empty() {
            return Err(Error::Validation("dataset has no rows".into()));
        }
        Ok(Self {
            rows,
            schema,
            rate_denominator: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> ClassSchema {
        ClassSchema::new("t", vec!["a".into(), "b".into()]).unwrap()
    }

    fn feats(ids: &[&str]) -> BTreeMap<String, CommunityFeatures> {
        ids.iter()
            .map(|c| (c.to_string(), CommunityFeatures { feature: vec![0.25, 0.75], n_images: 3 }))
            .collect()
    }

    fn rates(ids: &[&str]) -> BTreeMap<String, f64> {
        ids.iter().enumerate().map(|(i, c)| (c.to_string(), i as f64 * 0.01)).collect()
    }

    #[test]
    fn seventy_one_communities() {
        let ids: Vec<String> = (0..71).map(|i| format!("{}", 101 + i)).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let (d, rep) = build_dataset(&feats(&refs), &BTreeMap::new(), &rates(&refs), &schema(), RateDenominator::Population).unwrap();
        assert_eq!(d.len(), 71);
        assert!(rep.is_empty());
    }

    #[test]
    fn one_sided_communities_are_reported() {
        let f = feats(&["a", "b", "c"]);
        let r = rates(&["b", "c", "d", "e"]);
        let (d, rep) = build_dataset(&f, &BTreeMap::new(), &r, &schema(), RateDenominator::AreaKm2).unwrap();
        let ids: Vec<&str> = d.rows.iter().map(|r| r.community_id.as_str()).collect();
        assert_eq!(ids, ["b", "c"]);
        assert_eq!(rep.without_images, ["d", "e"]);
        assert_eq!(rep.without_rate, ["a"]);
        // rows + exclusions = union
        assert_eq!(d.len() + rep.len(), 5);
    }

    #[test]
    fn empty_intersection_is_fatal() {
        assert!(build_dataset(&feats(&["a"]), &BTreeMap::new(), &rates(&["b"]), &schema(), RateDenominator::AreaKm2).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = BTreeMap::from([("x".to_string(), 7u64)]);
        let (d, _) = build_dataset(&feats(&["x", "y"]), &c, &rates(&["x", "y"]), &schema(), RateDenominator::Population).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("community_id,n_images,crime_count,crime_rate,a,b\nx,3,7,0,0.25,0.75\n"), "{text}");
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.rows, d.rows);
        let mut again = Vec::new();
        back.write_csv(&mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn bad_cells_name_the_row() {
        let err = Dataset::read_csv("community_id,n_images,crime_count,crime_rate,a\nx,1,1,0.1,0.5\ny,1,1,nan,0.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Row { row: 2, .. }), "{err}");
    }
}
