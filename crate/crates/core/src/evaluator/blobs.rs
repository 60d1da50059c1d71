use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};

/// Synthetic Gaussian-cluster classification data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobsConfig {
    pub num_classes: usize,
    pub samples_per_class: usize,
    pub spread: f32,
    #[serde(default = "default_dims")]
    pub dims: usize,
    pub seed: u64,
}

fn default_dims() -> usize {
    2
}

impl Default for BlobsConfig {
    fn default() -> Self {
        Self {
            num_classes: 3,
            samples_per_class: 300,
            spread: 0.8,
            dims: 2,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobSplits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

const CENTER_BOX: f32 = 4.0;
const MIN_CENTER_GAP: f32 = 2.0;

/// Per class: two thirds of the samples train, the rest form a held-out
/// pool from which 10% (at least one sample) becomes validation and the
/// remainder test. Validation and test never share a sample.
pub fn make_blobs(config: &BlobsConfig) -> Result<BlobSplits> {
    let BlobsConfig {
        num_classes,
        samples_per_class,
        spread,
        dims,
        seed,
    } = *config;
    if num_classes == 0 || samples_per_class < 3 || dims == 0 {
        return Err(Error::InvalidConfig(format!(
            "blobs need classes > 0, samples_per_class >= 3, dims > 0 (got {num_classes}, {samples_per_class}, {dims})"
        )));
    }
    if !(spread >= 0.0) || !spread.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "spread {spread} must be finite and >= 0"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centers: Vec<Vec<f32>> = Vec::with_capacity(num_classes);
    let mut attempts = 0;
    while centers.len() < num_classes {
        let c: Vec<f32> = (0..dims)
            .map(|_| rng.random_range(-CENTER_BOX..CENTER_BOX))
            .collect();
        attempts += 1;
        let far_enough = centers.iter().all(|o| {
            o.iter()
                .zip(&c)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f32>()
                >= MIN_CENTER_GAP * MIN_CENTER_GAP
        });
        if far_enough || attempts > 10_000 {
            centers.push(c);
        }
    }

    let n_train = (samples_per_class * 2).div_ceil(3);
    let pool = samples_per_class - n_train;
    let n_val = (pool / 10).max(1);

    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut test = Vec::new();
    for (class, center) in centers.iter().enumerate() {
        for i in 0..samples_per_class {
            let point: Vec<f32> = center
                .iter()
                .map(|&m| {
                    let z: f32 = StandardNormal.sample(&mut rng);
                    m + spread * z
                })
                .collect();
            let sample = (point, class as u32);
            if i < n_train {
                train.push(sample);
            } else if i < n_train + n_val {
                validation.push(sample);
            } else {
                test.push(sample);
            }
        }
    }

    let mut build = |mut samples: Vec<(Vec<f32>, u32)>, split: Split| {
        samples.shuffle(&mut rng);
        let labels = samples.iter().map(|s| s.1).collect();
        let features = samples.into_iter().flat_map(|s| s.0).collect();
        Dataset::new(features, dims, labels, num_classes, split)
    };
    Ok(BlobSplits {
        train: build(train, Split::Train)?,
        validation: build(validation, Split::Validation)?,
        test: build(test, Split::Test)?,
    })
}
