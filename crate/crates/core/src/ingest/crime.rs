use std::io::Read;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::geo::{GeoPoint, Located};
use crate::{Error, Result};

/// One arrest record.
#[derive(Debug, Clone, PartialEq)]
pub struct CrimeRecord {
    pub record_id: String,
    pub occurred_at: NaiveDate,
    pub offense_category: String,
    pub location: GeoPoint,
}

impl Located for CrimeRecord {
    fn location(&self) -> GeoPoint {
        self.location
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl BoundingBox {
    pub fn contains(&self, p: GeoPoint) -> bool {
        (self.min_lon..=self.max_lon).contains(&p.lon())
            && (self.min_lat..=self.max_lat).contains(&p.lat())
    }
}

/// Column mapping for the arrest CSV. Defaults follow the NYPD Arrests Data
/// (Historic) export: `ARREST_KEY`, `ARREST_DATE` (MM/DD/YYYY), `OFNS_DESC`,
/// `Latitude`, `Longitude`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CrimeCsvConfig {
    pub id_column: String,
    pub date_column: String,
    pub offense_column: String,
    pub lat_column: String,
    pub lon_column: String,
    /// Tried in order; the first that parses wins.
    pub date_formats: Vec<String>,
    pub bbox: Option<BoundingBox>,
}

impl Default for CrimeCsvConfig {
    fn default() -> Self {
        Self {
            id_column: "ARREST_KEY".into(),
            date_column: "ARREST_DATE".into(),
            offense_column: "OFNS_DESC".into(),
            lat_column: "Latitude".into(),
            lon_column: "Longitude".into(),
            date_formats: vec!["%m/%d/%Y".into(), "%Y-%m-%d".into()],
            bbox: None,
        }
    }
}

/// Counts of rows that did not become records.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DropReport {
    pub rows: usize,
    pub bad_date: usize,
    pub bad_coord: usize,
    pub outside_bbox: usize,
    /// Valid rows excluded by the year filter (not errors).
    pub other_year: usize,
}

impl DropReport {
    pub fn dropped(&self) -> usize {
        self.bad_date + self.bad_coord + self.outside_bbox
    }
}

fn parse_date(s: &str, formats: &[String]) -> Option<NaiveDate> {
    let s = s.trim();
    formats
        .iter()
        .find_map(|f| NaiveDate::parse_from_str(s, f).ok())
}

/// Streams the arrest CSV. Output order is input order.
pub fn parse_crime_csv<R: Read>(
    reader: R,
    config: &CrimeCsvConfig,
    year_filter: Option<i32>,
) -> Result<(Vec<CrimeRecord>, DropReport)> {
    let mut csv = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = csv.headers()?.clone();
    let wanted = [
        &config.id_column,
        &config.date_column,
        &config.offense_column,
        &config.lat_column,
        &config.lon_column,
    ];
    let mut idx = [0usize; 5];
    let mut missing = Vec::new();
    for (slot, name) in idx.iter_mut().zip(wanted) {
        match headers.iter().position(|h| h == name) {
            Some(i) => *slot = i,
            None => missing.push(name.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }
    let [id_i, date_i, off_i, lat_i, lon_i] = idx;

    let mut report = DropReport::default();
    let mut out = Vec::new();
    for row in csv.records() {
        let row = row?;
        report.rows += 1;
        let field = |i: usize| row.get(i).unwrap_or("").trim();
        let Some(date) = parse_date(field(date_i), &config.date_formats) else {
            report.bad_date += 1;
            continue;
        };
        let location = match (field(lat_i).parse::<f64>(), field(lon_i).parse::<f64>()) {
            (Ok(lat), Ok(lon)) => GeoPoint::new(lon, lat).ok(),
            _ => None,
        };
        let Some(location) = location else {
            report.bad_coord += 1;
            continue;
        };
        if config.bbox.is_some_and(|b| !b.contains(location)) {
            report.outside_bbox += 1;
            continue;
        }
        if year_filter.is_some_and(|y| date.year() != y) {
            report.other_year += 1;
            continue;
        }
        out.push(CrimeRecord {
            record_id: field(id_i).to_string(),
            occurred_at: date,
            offense_category: field(off_i).to_string(),
            location,
        });
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "ARREST_KEY,ARREST_DATE,PD_DESC,OFNS_DESC,Latitude,Longitude\n";

    #[test]
    fn malformed_latitude_is_counted() {
        let data = format!(
            "{HEADER}1,01/05/2022,x,ASSAULT 3,40.71,-73.99\n2,02/05/2022,x,ROBBERY,forty,-73.98\n3,2022-03-01,x,FELONY ASSAULT,40.80,-73.95\n"
        );
        let (recs, rep) = parse_crime_csv(data.as_bytes(), &CrimeCsvConfig::default(), None).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(rep.bad_coord, 1);
        assert_eq!(rep.dropped(), 1);
        assert_eq!(recs[0].record_id, "1");
        assert_eq!(recs[1].occurred_at, NaiveDate::from_ymd_opt(2022, 3, 1).unwrap());
        assert_eq!(recs[1].offense_category, "FELONY ASSAULT");
    }

    #[test]
    fn year_filter_keeps_one_year() {
        let data = format!(
            "{HEADER}a,12/31/2021,x,A,40.7,-73.9\nb,01/01/2022,x,B,40.7,-73.9\nc,12/31/2022,x,C,40.7,-73.9\nd,01/01/2023,x,D,40.7,-73.9\n"
        );
        let (recs, rep) =
            parse_crime_csv(data.as_bytes(), &CrimeCsvConfig::default(), Some(2022)).unwrap();
        let ids: Vec<&str> = recs.iter().map(|r| r.record_id.as_str()).collect();
        assert_eq!(ids, ["b", "c"]);
        assert_eq!(rep.other_year, 2);
        assert_eq!(rep.dropped(), 0);
    }

    #[test]
    fn bad_dates_and_bbox() {
        let cfg = CrimeCsvConfig {
            bbox: Some(BoundingBox {
                min_lon: -74.3,
                min_lat: 40.45,
                max_lon: -73.65,
                max_lat: 40.95,
            }),
            ..CrimeCsvConfig::default()
        };
        let data = format!("{HEADER}1,13/45/2022,x,A,40.7,-73.9\n2,01/01/2022,x,B,0,0\n3,01/01/2022,x,C,40.7,-73.9\n4,01/01/2022,x,D,95,-73.9\n");
        let (recs, rep) = parse_crime_csv(data.as_bytes(), &cfg, None).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!((rep.bad_date, rep.outside_bbox, rep.bad_coord), (1, 1, 1));
    }

    #[test]
    fn missing_columns_are_fatal() {
        let data = "ARREST_KEY,ARREST_DATE,Latitude\n1,01/01/2022,40.7\n";
        match parse_crime_csv(data.as_bytes(), &CrimeCsvConfig::default(), None) {
            Err(Error::MissingColumns(cols)) => assert_eq!(cols, ["OFNS_DESC", "Longitude"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn custom_column_names() {
        let cfg = CrimeCsvConfig {
            id_column: "id".into(),
            date_column: "when".into(),
            offense_column: "what".into(),
            lat_column: "y".into(),
            lon_column: "x".into(),
            ..Default::default()
        };
        let data = "x,y,when,what,id\n-73.9,40.7,2022-06-01,THEFT,r9\n";
        let (recs, _) = parse_crime_csv(data.as_bytes(), &cfg, Some(2022)).unwrap();
        assert_eq!(recs[0].record_id, "r9");
        assert_eq!(recs[0].location.lon(), -73.9);
    }
}
