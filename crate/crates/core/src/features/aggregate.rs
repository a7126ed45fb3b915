use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::ingest::ImageFeatureVector;
use crate::{Error, Result};

/// How class occurrence is measured per community.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum AggregationMode {
    #[default]
    /// Share of all pixels in the community's images.
    PixelFraction,
    /// Share of images with more than `threshold` pixels of the class.
    ImagePresence { threshold: u64 },
}

impl AggregationMode {
    pub fn name(&self) -> &'static str {
        match self {
            AggregationMode::PixelFraction => "pixel_fraction",
            AggregationMode::ImagePresence { .. } => "image_presence",
        }
    }
}

/// Exact integer tallies for one community. Merging is associative and
/// commutative, so any partition of the images gives the same result.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassTally {
    pub pixels: Vec<u128>,
    pub total_pixels: u128,
    pub present: Vec<u64>,
    pub n_images: u64,
}

impl ClassTally {
    pub fn new(n_classes: usize) -> Self {
        Self {
            pixels: vec![0; n_classes],
            total_pixels: 0,
            present: vec![0; n_classes],
            n_images: 0,
        }
    }

    pub fn add(&mut self, v: &ImageFeatureVector, presence_threshold: u64) {
        for (c, &px) in v.class_pixels.iter().enumerate() {
            self.pixels[c] += u128::from(px);
            if px > presence_threshold {
                self.present[c] += 1;
            }
        }
        self.total_pixels += u128::from(v.total_pixels);
        self.n_images += 1;
    }

    pub fn merge(&mut self, other: &ClassTally) {
        for (a, b) in self.pixels.iter_mut().zip(&other.pixels) {
            *a += b;
        }
        for (a, b) in self.present.iter_mut().zip(&other.present) {
            *a += b;
        }
        self.total_pixels += other.total_pixels;
        self.n_images += other.n_images;
    }

    pub fn finish(&self, mode: AggregationMode) -> Vec<f64> {
        match mode {
            AggregationMode::PixelFraction => self
                .pixels
                .iter()
                .map(|&p| p as f64 / self.total_pixels as f64)
                .collect(),
            AggregationMode::ImagePresence { .. } => self
                .present
                .iter()
                .map(|&k| k as f64 / self.n_images as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityFeatures {
    pub feature: Vec<f64>,
    pub n_images: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Aggregated {
    pub communities: BTreeMap<String, CommunityFeatures>,
    /// Vectors whose point has no community.
    pub unmatched: Vec<String>,
}

/// Reduces per-image vectors to per-community feature vectors.
/// `point_community` maps each `point_id` to its community.
pub fn aggregate_features(
    vectors: &[ImageFeatureVector],
    point_community: &HashMap<String, String>,
    n_classes: usize,
    mode: AggregationMode,
) -> Result<Aggregated> {
    let threshold = match mode {
        AggregationMode::ImagePresence { threshold } => threshold,
        AggregationMode::PixelFraction => 0,
    };
    let mut tallies: BTreeMap<&str, ClassTally> = BTreeMap::new();
    let mut unmatched = Vec::new();
    for v in vectors {
        if v.class_pixels.len() != n_classes {
            return Err(Error::DimensionMismatch {
                expected: n_classes,
                actual: v.class_pixels.len(),
            });
        }
        match point_community.get(&v.point_id) {
            Some(c) => tallies
                .entry(c.as_str())
                .or_insert_with(|| ClassTally::new(n_classes))
                .add(v, threshold),
            None => unmatched.push(v.image_id.clone()),
        }
    }
    let communities = tallies
        .into_iter()
        .map(|(c, t)| {
            (
                c.to_string(),
                CommunityFeatures {
                    feature: t.finish(mode),
                    n_images: t.n_images as usize,
                },
            )
        })
        .collect();
    Ok(Aggregated {
        communities,
        unmatched,
    })
}
