//! Synthetic city: a grid of square community districts crossed by a road
//! grid, with arrests, populations and per-image segmentation tallies whose
//! "aeroplane" share tracks the community crime rate.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use streetcrime::ingest::ClassSchema;

pub const LON0: f64 = -74.0;
pub const LAT0: f64 = 40.70;
pub const CELL_LON: f64 = 0.012;
pub const CELL_LAT: f64 = 0.009;
/// Roads per cell edge length.
pub const ROADS_PER_CELL: usize = 6;
pub const IMAGE_PIXELS: u64 = 600 * 300;

#[derive(Debug, Clone)]
pub struct City {
    pub dir: PathBuf,
    pub cols: usize,
    pub rows: usize,
    pub n_communities: usize,
    /// Per-community population, in id order.
    pub population: Vec<u64>,
    /// Per-community arrest count for the target year.
    pub crimes: Vec<u64>,
}

impl City {
    pub fn ids(&self) -> Vec<String> {
        (0..self.n_communities).map(community_id).collect()
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Config with every input path set; `out` relative to the city dir.
    pub fn write_config(&self, out: &str, per_community: usize, extra: &str) -> PathBuf {
        let text = format!(
            "[paths]\ncenterlines = \"centerlines.geojson\"\nboundaries = \"boundaries.geojson\"\ncrime_csv = \"arrests.csv\"\nfeature_csv = \"features.csv\"\npopulation = \"population.csv\"\npoints = \"{out}/points.csv\"\ndataset = \"{out}/dataset.csv\"\nout = \"{out}\"\n\n[sampling]\nspacing_m = 50.0\nper_community = {per_community}\nseed = 2022\n\n[crime]\nyear = 2022\n\n[features]\nmode = \"pixel_fraction\"\ndenominator = \"population\"\n\n[eval]\nprotocol = \"loo\"\nseed = 7\n{extra}"
        );
        let p = self.dir.join(format!("{out}.toml"));
        fs::write(&p, text).unwrap();
        p
    }
}

pub fn community_id(i: usize) -> String {
    format!("{}", 101 + i)
}

fn cell_origin(i: usize, cols: usize) -> (f64, f64) {
    let (c, r) = (i % cols, i / cols);
    (LON0 + c as f64 * CELL_LON, LAT0 + r as f64 * CELL_LAT)
}

fn ring(x0: f64, y0: f64) -> String {
    let (x1, y1) = (x0 + CELL_LON, y0 + CELL_LAT);
    format!("[[[{x0},{y0}],[{x1},{y0}],[{x1},{y1}],[{x0},{y1}],[{x0},{y0}]]]")
}

/// Builds the static inputs (everything except the feature CSV, which
/// depends on the sampled points) under `dir`.
pub fn build_city(dir: &Path, n_communities: usize, cols: usize, base_population: u64, seed: u64) -> City {
    fs::create_dir_all(dir).unwrap();
    let rows = n_communities.div_ceil(cols);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut features = Vec::new();
    for i in 0..n_communities {
        let (x0, y0) = cell_origin(i, cols);
        features.push(format!(
            "{{\"type\":\"Feature\",\"properties\":{{\"community_id\":\"{}\"}},\"geometry\":{{\"type\":\"Polygon\",\"coordinates\":{}}}}}",
            community_id(i),
            ring(x0, y0)
        ));
    }
    fs::write(
        dir.join("boundaries.geojson"),
        format!("{{\"type\":\"FeatureCollection\",\"features\":[{}]}}", features.join(",\n")),
    )
    .unwrap();

    // Roads run slightly past the city edge; offset half a road spacing so
    // none lies on a district boundary.
    let step_lon = CELL_LON / ROADS_PER_CELL as f64;
    let step_lat = CELL_LAT / ROADS_PER_CELL as f64;
    let (w, h) = (cols as f64 * CELL_LON, rows as f64 * CELL_LAT);
    let mut lines = Vec::new();
    for k in 0..cols * ROADS_PER_CELL {
        let x = LON0 + (k as f64 + 0.5) * step_lon;
        lines.push(((x, LAT0 - 0.001), (x, LAT0 + h + 0.001), format!("ave-{k}")));
    }
    for k in 0..rows * ROADS_PER_CELL {
        let y = LAT0 + (k as f64 + 0.5) * step_lat;
        lines.push(((LON0 - 0.001, y), (LON0 + w + 0.001, y), format!("st-{k}")));
    }
    let road_features: Vec<String> = lines
        .iter()
        .map(|((ax, ay), (bx, by), name)| {
            format!(
                "{{\"type\":\"Feature\",\"properties\":{{\"name\":\"{name}\"}},\"geometry\":{{\"type\":\"LineString\",\"coordinates\":[[{ax},{ay}],[{bx},{by}]]}}}}"
            )
        })
        .collect();
    fs::write(
        dir.join("centerlines.geojson"),
        format!("{{\"type\":\"FeatureCollection\",\"features\":[{}]}}", road_features.join(",\n")),
    )
    .unwrap();

    let mut population = Vec::new();
    let mut crimes = Vec::new();
    let mut pop_csv = String::from("community_id,population\n");
    for i in 0..n_communities {
        let p = base_population * rng.gen_range(80..=120) / 100;
        let rate = rng.gen_range(0.006..0.024);
        population.push(p);
        crimes.push((p as f64 * rate).round() as u64);
        let _ = writeln!(pop_csv, "{},{p}", community_id(i));
    }
    fs::write(dir.join("population.csv"), pop_csv).unwrap();

    let mut arrests = String::from("ARREST_KEY,ARREST_DATE,PD_DESC,OFNS_DESC,Latitude,Longitude\n");
    let mut key = 100_000_000u64;
    for (i, &n) in crimes.iter().enumerate() {
        let (x0, y0) = cell_origin(i, cols);
        // Two extra rows per community from the previous year.
        for k in 0..n + 2 {
            key += 1;
            let year = if k < n { 2022 } else { 2021 };
            let (m, d) = (rng.gen_range(1..=12), rng.gen_range(1..=28));
            let lon = x0 + CELL_LON * rng.gen_range(0.02..0.98);
            let lat = y0 + CELL_LAT * rng.gen_range(0.02..0.98);
            let _ = writeln!(arrests, "{key},{m:02}/{d:02}/{year},DESC,ASSAULT 3 & RELATED OFFENSES,{lat:.6},{lon:.6}");
        }
    }
    arrests.push_str("1,99/99/2022,DESC,BAD DATE,40.71,-73.99\n2,01/05/2022,DESC,NO COORD,,\n");
    fs::write(dir.join("arrests.csv"), arrests).unwrap();

    City {
        dir: dir.to_path_buf(),
        cols,
        rows,
        n_communities,
        population,
        crimes,
    }
}

/// Writes `features.csv` with one image per sampled point.
pub fn write_features(city: &City, points_csv: &Path, seed: u64) {
    let schema = ClassSchema::voc21();
    let text = fs::read_to_string(points_csv).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids = city.ids();
    let rates: Vec<f64> = city
        .crimes
        .iter()
        .zip(&city.population)
        .map(|(c, p)| *c as f64 / *p as f64)
        .collect();
    let mut out = String::from("image_id,point_id,total_pixels");
    for c in schema.classes() {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (k, line) in text.lines().skip(1).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let (point_id, community) = (fields[0], fields[3]);
        let idx = ids.iter().position(|c| c == community).expect("sampled point in a known community");
        let signal = (rates[idx] - 0.006) / 0.018;
        let mut counts = vec![0u64; schema.len()];
        for (j, c) in counts.iter_mut().enumerate().skip(2) {
            *c = rng.gen_range(0..1500) * (j as u64 % 3);
        }
        counts[1] = (IMAGE_PIXELS as f64 * (0.01 + 0.05 * signal + rng.gen_range(0.0..0.004))) as u64;
        let used: u64 = counts.iter().sum();
        counts[0] = IMAGE_PIXELS - used;
        let _ = write!(out, "img-{k:06},{point_id},{IMAGE_PIXELS}");
        for c in counts {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    fs::write(city.path("features.csv"), out).unwrap();
}

pub fn run(args: &[&str]) {
    let mut full = vec!["streetcrime", "--quiet"];
    full.extend_from_slice(args);
    if let Err(e) = streetcrime_cli::run_from(full) {
        panic!("streetcrime {}: {e}", args.join(" "));
    }
}

/// Regular files under `dir`, relative names, sorted.
pub fn list_files(dir: &Path) -> Vec<String> {
    let mut out: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    out.sort();
    out
}
