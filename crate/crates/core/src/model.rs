//! Dense feed-forward models and the flat parameter vector they quantize to.
//!
//! Every weight and bias of every layer is concatenated into one vector θ.
//! Layout: layers in declaration order; within a layer the weight matrix
//! (row-major, `out_dim` rows by `in_dim` columns) followed by the bias.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Identity,
    SoftmaxOutput,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Identity => 1,
            Activation::SoftmaxOutput => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Activation::Relu),
            1 => Ok(Activation::Identity),
            2 => Ok(Activation::SoftmaxOutput),
            other => Err(Error::format(format!("unknown activation code {other}"))),
        }
    }
}

/// One fully connected layer computing `act(W x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f32 {
        self.weights[row * self.in_dim + col]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub layers: Vec<DenseLayer>,
}

impl ModelSpec {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        let model = Self { layers };
        model.validate()?;
        Ok(model)
    }

    /// Zero-initialised model with ReLU hidden layers and a softmax output.
    pub fn from_arch(arch: &[usize]) -> Result<Self> {
        if arch.len() < 2 {
            return Err(Error::InvalidModel(format!(
                "architecture needs at least input and output dims, got {arch:?}"
            )));
        }
        let last = arch.len() - 2;
        let layers = arch
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::SoftmaxOutput
                } else {
                    Activation::Relu
                };
                DenseLayer::zeros(w[0], w[1], act)
            })
            .collect();
        Self::new(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    pub fn arch(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self.layers.iter().map(|l| l.in_dim).collect();
        dims.extend(self.layers.last().map(|l| l.out_dim));
        dims
    }

    /// Checks shape consistency, the dimension chain and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::EmptyModel);
        }
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.in_dim == 0 || layer.out_dim == 0 {
                return Err(Error::InvalidModel(format!(
                    "layer {i} has a zero dimension"
                )));
            }
            if layer.weights.len() != layer.in_dim * layer.out_dim {
                return Err(Error::InvalidModel(format!(
                    "layer {i} weights hold {} values, expected {}x{}",
                    layer.weights.len(),
                    layer.out_dim,
                    layer.in_dim
                )));
            }
            if layer.bias.len() != layer.out_dim {
                return Err(Error::InvalidModel(format!(
                    "layer {i} bias holds {} values, expected {}",
                    layer.bias.len(),
                    layer.out_dim
                )));
            }
            if i > 0 {
                let prev = self.layers[i - 1].out_dim;
                if prev != layer.in_dim {
                    return Err(Error::DimensionChain {
                        layer: i,
                        expected: prev,
                        actual: layer.in_dim,
                    });
                }
            }
            if !layer.weights.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite {
                    tensor: weight_id(i),
                });
            }
            if !layer.bias.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite { tensor: bias_id(i) });
            }
        }
        Ok(())
    }
}

fn weight_id(layer: usize) -> String {
    format!("layer{layer}.weight")
}

fn bias_id(layer: usize) -> String {
    format!("layer{layer}.bias")
}

/// A contiguous span of the parameter vector owned by one tensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub tensor_id: String,
    pub offset: usize,
    pub length: usize,
}

/// The flattened parameters θ of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    pub values: Vec<f32>,
    pub segments: Vec<Segment>,
}

impl ParameterVector {
    /// A vector with a single anonymous segment, for working on raw values.
    pub fn from_values(values: Vec<f32>) -> Self {
        let segments = vec![Segment {
            tensor_id: "theta".to_string(),
            offset: 0,
            length: values.len(),
        }];
        Self { values, segments }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same layout, different values.
    pub fn with_values(&self, values: Vec<f32>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                expected: self.values.len(),
                actual: values.len(),
            });
        }
        Ok(Self {
            values,
            segments: self.segments.clone(),
        })
    }
}

/// Concatenates all weights and biases into θ.
pub fn flatten(model: &ModelSpec) -> Result<ParameterVector> {
    model.validate()?;
    let mut values = Vec::with_capacity(model.param_count());
    let mut segments = Vec::with_capacity(model.layers.len() * 2);
    for (i, layer) in model.layers.iter().enumerate() {
        segments.push(Segment {
            tensor_id: weight_id(i),
            offset: values.len(),
            length: layer.weights.len(),
        });
        values.extend_from_slice(&layer.weights);
        segments.push(Segment {
            tensor_id: bias_id(i),
            offset: values.len(),
            length: layer.bias.len(),
        });
        values.extend_from_slice(&layer.bias);
    }
    Ok(ParameterVector { values, segments })
}

/// Writes θ back into a copy of `model`, keeping shapes and activations.
pub fn unflatten(theta: &ParameterVector, model: &ModelSpec) -> Result<ModelSpec> {
    let expected = model.param_count();
    if theta.values.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: theta.values.len(),
        });
    }
    let mut out = model.clone();
    let mut offset = 0;
    for layer in &mut out.layers {
        let w = layer.weights.len();
        layer
            .weights
            .copy_from_slice(&theta.values[offset..offset + w]);
        offset += w;
        let b = layer.bias.len();
        layer
            .bias
            .copy_from_slice(&theta.values[offset..offset + b]);
        offset += b;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelSpec {
        ModelSpec::new(vec![DenseLayer {
            in_dim: 2,
            out_dim: 2,
            weights: vec![1.0, 2.0, 3.0, 4.0],
            bias: vec![5.0, 6.0],
            activation: Activation::SoftmaxOutput,
        }])
        .unwrap()
    }

    #[test]
    fn flatten_is_row_major_weights_then_bias() {
        let theta = flatten(&tiny()).unwrap();
        assert_eq!(theta.values, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(theta.len(), 6);
        assert_eq!(theta.segments.len(), 2);
        assert_eq!(theta.segments[1].offset, 4);
        assert_eq!(theta.segments.iter().map(|s| s.length).sum::<usize>(), 6);
    }

    #[test]
    fn unflatten_inverts_the_example() {
        let m = tiny();
        let mut zeroed = m.clone();
        zeroed.layers[0].weights.fill(0.0);
        zeroed.layers[0].bias.fill(0.0);
        let theta = ParameterVector::from_values(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(unflatten(&theta, &zeroed).unwrap(), m);
    }

    #[test]
    fn empty_model_is_rejected() {
        let m = ModelSpec { layers: vec![] };
        let err = flatten(&m).unwrap_err();
        assert_eq!(err.to_string(), "empty model");
    }

    #[test]
    fn off_by_one_length_is_rejected() {
        let theta = ParameterVector::from_values(vec![0.0; 5]);
        match unflatten(&theta, &tiny()) {
            Err(Error::LengthMismatch { expected, actual }) => {
                assert_eq!((expected, actual), (6, 5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_names_the_tensor() {
        let mut m = tiny();
        m.layers[0].bias[1] = f32::NAN;
        match flatten(&m) {
            Err(Error::NonFinite { tensor }) => assert_eq!(tensor, "layer0.bias"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn broken_chain_is_rejected() {
        let m = ModelSpec {
            layers: vec![
                DenseLayer::zeros(4, 3, Activation::Relu),
                DenseLayer::zeros(5, 2, Activation::SoftmaxOutput),
            ],
        };
        assert!(matches!(
            m.validate(),
            Err(Error::DimensionChain {
                layer: 1,
                expected: 3,
                actual: 5
            })
        ));
    }

    #[test]
    fn arch_round_trips() {
        let m = ModelSpec::from_arch(&[2, 32, 32, 3]).unwrap();
        assert_eq!(m.arch(), vec![2, 32, 32, 3]);
        assert_eq!(m.param_count(), 2 * 32 + 32 + 32 * 32 + 32 + 32 * 3 + 3);
        assert_eq!(m.layers[2].activation, Activation::SoftmaxOutput);
    }
}
