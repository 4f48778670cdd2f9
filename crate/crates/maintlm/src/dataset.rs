//! Normalization to the network's `[-1, 1]` working range and the seeded
//! 70/15/15 train/validation/test split.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::SamplePair;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("need at least 3 samples to split, got {0}")]
    TooFewSamples(usize),
    #[error("cannot fit normalization on an empty sample list")]
    Empty,
    #[error("invalid range: lo {lo} > hi {hi}")]
    InvalidRange { lo: f64, hi: f64 },
}

/// Min-max ranges fitted on training data, mapping raw units onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParams {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl NormParams {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self, DatasetError> {
        if x_min > x_max {
            return Err(DatasetError::InvalidRange { lo: x_min, hi: x_max });
        }
        if y_min > y_max {
            return Err(DatasetError::InvalidRange { lo: y_min, hi: y_max });
        }
        Ok(Self { x_min, x_max, y_min, y_max })
    }

    /// The identity-scale params: `[-1, 1]` maps onto itself on both axes.
    pub fn identity() -> Self {
        Self { x_min: -1.0, x_max: 1.0, y_min: -1.0, y_max: 1.0 }
    }

    pub fn normalize_x(&self, v: f64) -> f64 {
        affine_to_unit(v, self.x_min, self.x_max)
    }

    pub fn normalize_y(&self, v: f64) -> f64 {
        affine_to_unit(v, self.y_min, self.y_max)
    }

    pub fn denormalize_x(&self, v: f64) -> f64 {
        affine_from_unit(v, self.x_min, self.x_max)
    }

    pub fn denormalize_y(&self, v: f64) -> f64 {
        affine_from_unit(v, self.y_min, self.y_max)
    }

    pub fn normalize_samples(&self, samples: &[SamplePair]) -> Vec<SamplePair> {
        samples
            .iter()
            .map(|s| SamplePair {
                x: self.normalize_x(s.x),
                y: self.normalize_y(s.y),
            })
            .collect()
    }
}

fn affine_to_unit(v: f64, lo: f64, hi: f64) -> f64 {
    if lo < hi {
        2.0 * (v - lo) / (hi - lo) - 1.0
    } else {
        0.0
    }
}

fn affine_from_unit(v: f64, lo: f64, hi: f64) -> f64 {
    if lo < hi {
        lo + (v + 1.0) * (hi - lo) / 2.0
    } else {
        lo
    }
}

/// Affine map of `[lo, hi]` onto `[-1, 1]`; degenerate `lo == hi` maps to 0.
/// Not clamping: values outside `[lo, hi]` map outside `[-1, 1]`.
pub fn normalize(v: f64, lo: f64, hi: f64) -> Result<f64, DatasetError> {
    if lo > hi {
        return Err(DatasetError::InvalidRange { lo, hi });
    }
    Ok(affine_to_unit(v, lo, hi))
}

/// Exact inverse of [`normalize`] for `lo < hi`.
pub fn denormalize(v: f64, lo: f64, hi: f64) -> Result<f64, DatasetError> {
    if lo > hi {
        return Err(DatasetError::InvalidRange { lo, hi });
    }
    Ok(affine_from_unit(v, lo, hi))
}

/// Fit min/max ranges over the given samples (training partition only, to
/// avoid leakage into validation/test).
pub fn fit_normalization(samples: &[SamplePair]) -> Result<NormParams, DatasetError> {
    if samples.is_empty() {
        return Err(DatasetError::Empty);
    }
    let mut p = NormParams {
        x_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_min: f64::INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    for s in samples {
        p.x_min = p.x_min.min(s.x);
        p.x_max = p.x_max.max(s.x);
        p.y_min = p.y_min.min(s.y);
        p.y_max = p.y_max.max(s.y);
    }
    Ok(p)
}

/// Disjoint, exhaustive index partition into train/validation/test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSplit {
    pub train_idx: Vec<usize>,
    pub val_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Shuffle `0..n` with a seeded RNG and partition into
/// `round(0.70 n) / round(0.15 n) / remainder`.
///
/// Identical `(n, seed)` always yields identical index lists.
pub fn split_indices(n: usize, seed: u64) -> Result<DataSplit, DatasetError> {
    if n < 3 {
        return Err(DatasetError::TooFewSamples(n));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);

    let n_train = (0.70 * n as f64).round() as usize;
    let n_val = (0.15 * n as f64).round() as usize;
    let test_idx = idx.split_off(n_train + n_val);
    let val_idx = idx.split_off(n_train);
    Ok(DataSplit {
        train_idx: idx,
        val_idx,
        test_idx,
    })
}
