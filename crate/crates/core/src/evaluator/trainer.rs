use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forward::dense;
use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::model::{Activation, ModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerConfig {
    pub arch: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f32,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            arch: vec![2, 32, 32, 3],
            epochs: 200,
            learning_rate: 0.05,
            seed: 42,
        }
    }
}

/// He-uniform weights, zero biases.
fn init_model(arch: &[usize], rng: &mut ChaCha8Rng) -> Result<ModelSpec> {
    let mut model = ModelSpec::from_arch(arch)?;
    for layer in &mut model.layers {
        let limit = (6.0 / layer.in_dim as f32).sqrt();
        for w in &mut layer.weights {
            *w = rng.random_range(-limit..limit);
        }
    }
    Ok(model)
}

/// Per-sample SGD on softmax cross-entropy, single-threaded and fully
/// determined by `config.seed`.
pub fn train_baseline(train: &Dataset, config: &TrainerConfig) -> Result<ModelSpec> {
    if train.split != Split::Train {
        return Err(Error::InvalidDataset(format!(
            "trainer needs the train split, got {}",
            train.split.name()
        )));
    }
    let arch = &config.arch;
    if arch.first() != Some(&train.cols) {
        return Err(Error::DimensionMismatch {
            expected: arch.first().copied().unwrap_or(0),
            actual: train.cols,
        });
    }
    if arch.last() != Some(&train.num_classes) {
        return Err(Error::InvalidModel(format!(
            "output dim {:?} does not match {} classes",
            arch.last(),
            train.num_classes
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = init_model(arch, &mut rng)?;
    let n_layers = model.layers.len();
    let lr = config.learning_rate;

    let mut order: Vec<usize> = (0..train.rows).collect();
    // activations[0] is the input, activations[i + 1] the output of layer i
    let mut activations: Vec<Vec<f32>> = vec![Vec::new(); n_layers + 1];
    let mut grad = Vec::new();
    let mut grad_prev = Vec::new();

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &s in &order {
            activations[0].clear();
            activations[0].extend_from_slice(train.row(s));
            for (i, layer) in model.layers.iter().enumerate() {
                let (head, tail) = activations.split_at_mut(i + 1);
                dense(layer, &head[i], &mut tail[0]);
            }

            // dL/dz at the output: softmax(z) - onehot(label)
            let out = &activations[n_layers];
            let max = out.iter().copied().fold(f32::NEG_INFINITY, f32::max);
            let exp: Vec<f32> = out.iter().map(|z| (z - max).exp()).collect();
            let total: f32 = exp.iter().sum();
            grad.clear();
            grad.extend(exp.iter().map(|e| e / total));
            grad[train.labels[s] as usize] -= 1.0;

            for i in (0..n_layers).rev() {
                let input = &activations[i];
                let layer = &mut model.layers[i];
                if i > 0 {
                    grad_prev.clear();
                    grad_prev.resize(layer.in_dim, 0.0);
                    for (row, &g) in layer.weights.chunks_exact(layer.in_dim).zip(&grad) {
                        for (gp, w) in grad_prev.iter_mut().zip(row) {
                            *gp += g * w;
                        }
                    }
                }
                for ((row, b), &g) in layer
                    .weights
                    .chunks_exact_mut(layer.in_dim)
                    .zip(&mut layer.bias)
                    .zip(&grad)
                {
                    for (w, x) in row.iter_mut().zip(input) {
                        *w -= lr * g * x;
                    }
                    *b -= lr * g;
                }
                if i > 0 {
                    // previous layer is ReLU or identity
                    let prev_act = model.layers[i - 1].activation;
                    grad.clear();
                    grad.extend(grad_prev.iter().zip(input).map(|(&g, &a)| {
                        if prev_act == Activation::Relu && a <= 0.0 {
                            0.0
                        } else {
                            g
                        }
                    }));
                }
            }
        }
    }
    model.validate()?;
    Ok(model)
}
