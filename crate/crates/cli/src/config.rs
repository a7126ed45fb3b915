//! Pipeline configuration: a TOML file with `[paths]`, `[sampling]`,
//! `[crime]`, `[features]`, `[fetch]` and `[eval]` sections. Relative paths
//! in the file are resolved against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use streetcrime::eval::Protocol;
use streetcrime::features::{AggregationMode, RateDenominator};
use streetcrime::ingest::{CrimeCsvConfig, DEFAULT_ENDPOINT, DEFAULT_IMAGE_SIZE};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub centerlines: Option<PathBuf>,
    pub boundaries: Option<PathBuf>,
    pub crime_csv: Option<PathBuf>,
    pub feature_csv: Option<PathBuf>,
    pub population: Option<PathBuf>,
    /// Class schema file; the built-in 21-class schema when unset.
    pub schema: Option<PathBuf>,
    pub points: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub spacing_m: f64,
    pub per_community: usize,
    pub seed: u64,
    pub boundary_id_property: String,
    pub centerline_id_property: Option<String>,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            spacing_m: 50.0,
            per_community: 200,
            seed: 0,
            boundary_id_property: "community_id".into(),
            centerline_id_property: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Crime {
    /// Keep only arrests from this calendar year.
    pub year: Option<i32>,
    #[serde(flatten)]
    pub csv: CrimeCsvConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    PixelFraction,
    ImagePresence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Features {
    pub mode: ModeName,
    /// Pixels above which a class counts as present in an image.
    pub presence_threshold: u64,
    pub denominator: RateDenominator,
}

impl Default for Features {
    fn default() -> Self {
        Self {
            mode: ModeName::PixelFraction,
            presence_threshold: 0,
            denominator: RateDenominator::Population,
        }
    }
}

impl Features {
    pub fn mode(&self) -> AggregationMode {
        self.mode_for(self.mode)
    }

    pub fn mode_for(&self, name: ModeName) -> AggregationMode {
        match name {
            ModeName::PixelFraction => AggregationMode::PixelFraction,
            ModeName::ImagePresence => AggregationMode::ImagePresence {
                threshold: self.presence_threshold,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fetch {
    pub endpoint: String,
    pub width: u32,
    pub height: u32,
    pub max_concurrent: usize,
    pub retries: u32,
    pub backoff_ms: u64,
    pub timeout_s: u64,
    pub checkpoint_every: usize,
}

impl Default for Fetch {
    fn default() -> Self {
        Self {
            endpoint: DEFAULT_ENDPOINT.into(),
            width: DEFAULT_IMAGE_SIZE.0,
            height: DEFAULT_IMAGE_SIZE.1,
            max_concurrent: 8,
            retries: 3,
            backoff_ms: 250,
            timeout_s: 30,
            checkpoint_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Eval {
    /// `loo`, `kfold:K` or `holdout:FRACTION`.
    pub protocol: String,
    pub seed: u64,
    pub top_n: Option<usize>,
}

impl Default for Eval {
    fn default() -> Self {
        Self {
            protocol: "loo".into(),
            seed: 0,
            top_n: None,
        }
    }
}

impl Eval {
    pub fn protocol(&self) -> Result<Protocol, CliError> {
        Ok(self.protocol.parse::<Protocol>()?.with_seed(self.seed))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub sampling: Sampling,
    pub crime: Crime,
    pub features: Features,
    pub fetch: Fetch,
    pub eval: Eval,
}

fn rebase(p: &mut Option<PathBuf>, base: &Path) {
    if let Some(path) = p.as_mut() {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| streetcrime::Error::io(path, e))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut cfg.paths;
        for slot in [
            &mut p.centerlines,
            &mut p.boundaries,
            &mut p.crime_csv,
            &mut p.feature_csv,
            &mut p.population,
            &mut p.schema,
            &mut p.points,
            &mut p.manifest,
            &mut p.dataset,
            &mut p.out,
        ] {
            rebase(slot, base);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.sampling.spacing_m.is_finite() && self.sampling.spacing_m > 0.0) {
            return Err(CliError::Config(format!(
                "sampling.spacing_m must be > 0, got {}",
                self.sampling.spacing_m
            )));
        }
        if self.sampling.per_community == 0 {
            return Err(CliError::Config("sampling.per_community must be >= 1".into()));
        }
        self.eval.protocol()?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serializable")
    }
}

/// Returns `path` or a diagnostic naming the missing setting; checks that
/// the file exists.
pub fn require(path: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    let p = path
        .clone()
        .ok_or_else(|| CliError::Config(format!("no {what} given (set paths.{what} or pass --{})", what.replace('_', "-"))))?;
    if !p.exists() {
        return Err(CliError::Config(format!("{what} {} does not exist", p.display())));
    }
    Ok(p)
}
