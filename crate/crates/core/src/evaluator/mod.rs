//! Inference, scoring and the small-scale trainer that produces baselines.

mod blobs;
mod forward;
mod metrics;
mod trainer;

pub use blobs::{make_blobs, BlobSplits, BlobsConfig};
pub use forward::{forward, logits};
pub use metrics::{macro_f1, ClassScore, EvalReport, Threshold};
pub use trainer::{train_baseline, TrainerConfig};

use crate::dataset::Dataset;
use crate::error::Result;
use crate::model::{unflatten, ModelSpec, ParameterVector};
use crate::quantizer::{reconstruct, Codebook};

/// Scores `model` on every sample of `dataset`.
pub fn evaluate(model: &ModelSpec, dataset: &Dataset) -> Result<EvalReport> {
    let predictions = forward(model, &dataset.features, dataset.cols)?;
    macro_f1(&predictions, &dataset.labels, dataset.num_classes)
}

/// Scores the network obtained by replacing θ with its codebook centroids.
pub fn evaluate_codebook(
    model: &ModelSpec,
    theta: &ParameterVector,
    codebook: &Codebook,
    dataset: &Dataset,
) -> Result<EvalReport> {
    let quantized = reconstruct(theta, codebook)?;
    let shared = unflatten(&quantized, model)?;
    evaluate(&shared, dataset)
}
