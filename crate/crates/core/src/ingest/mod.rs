//! Parsers and clients for the external datasets.

mod crime;
mod feature_csv;
mod fetch;
mod geojson;
mod manifest;
mod schema;

pub use crime::{parse_crime_csv, BoundingBox, CrimeCsvConfig, CrimeRecord, DropReport};
pub use feature_csv::{parse_feature_csv, write_feature_csv, FeatureCsv, ImageFeatureVector};
pub use fetch::{api_key_from_env, fetch_images, FetchOptions, FetchSummary, API_KEY_ENV};
pub use geojson::{parse_boundaries, parse_centerlines, Centerlines};
pub use manifest::{
    build_image_manifest, read_manifest, write_manifest, FetchStatus, ManifestEntry,
    DEFAULT_ENDPOINT, DEFAULT_IMAGE_SIZE, KEY_PLACEHOLDER,
};
pub use schema::ClassSchema;
