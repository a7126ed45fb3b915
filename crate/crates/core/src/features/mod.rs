//! Community-level dataset assembly: per-image tallies and crime counts
//! reduced to one row per community.

mod aggregate;
mod dataset;
mod rate;
mod stats;

pub use aggregate::{aggregate_features, AggregationMode, Aggregated, ClassTally, CommunityFeatures};
pub use dataset::{build_dataset, CommunityRow, Dataset, ExclusionReport};
pub use rate::{compute_crime_rate, count_crimes, parse_population_csv, RateDenominator};
pub use stats::{descriptive_stats, StatRow, StatsTable, STATS_HEADER};
