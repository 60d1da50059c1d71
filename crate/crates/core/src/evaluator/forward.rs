use crate::error::{Error, Result};
use crate::model::{Activation, ModelSpec};

/// Final-layer outputs for one sample. The softmax of a `SoftmaxOutput`
/// layer is not applied; it does not change the argmax.
pub fn logits(model: &ModelSpec, input: &[f32]) -> Result<Vec<f32>> {
    if input.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: input.len(),
        });
    }
    let mut current = input.to_vec();
    let mut next = Vec::new();
    for layer in &model.layers {
        dense(layer, &current, &mut next);
        std::mem::swap(&mut current, &mut next);
    }
    Ok(current)
}

pub(crate) fn dense(layer: &crate::model::DenseLayer, input: &[f32], out: &mut Vec<f32>) {
    out.clear();
    out.extend(
        layer
            .weights
            .chunks_exact(layer.in_dim)
            .zip(&layer.bias)
            .map(|(row, &b)| {
                let z = row.iter().zip(input).fold(b, |acc, (w, x)| acc + w * x);
                match layer.activation {
                    Activation::Relu => z.max(0.0),
                    Activation::Identity | Activation::SoftmaxOutput => z,
                }
            }),
    );
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(values: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Predicted class for every row of a row-major feature matrix.
pub fn forward(model: &ModelSpec, features: &[f32], cols: usize) -> Result<Vec<u32>> {
    if cols != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: cols,
        });
    }
    if cols == 0 || !features.len().is_multiple_of(cols) {
        return Err(Error::InvalidDataset(format!(
            "{} feature values do not fill rows of width {cols}",
            features.len()
        )));
    }
    let width = model.layers.iter().map(|l| l.out_dim).max().unwrap_or(0);
    let mut a = Vec::with_capacity(width);
    let mut b = Vec::with_capacity(width);
    let predictions = features
        .chunks_exact(cols)
        .map(|row| {
            a.clear();
            a.extend_from_slice(row);
            for layer in &model.layers {
                dense(layer, &a, &mut b);
                std::mem::swap(&mut a, &mut b);
            }
            argmax(&a) as u32
        })
        .collect();
    Ok(predictions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DenseLayer;

    #[test]
    fn identity_layer_picks_largest_input() {
        let model = ModelSpec::new(vec![DenseLayer {
            in_dim: 2,
            out_dim: 2,
            weights: vec![1.0, 0.0, 0.0, 1.0],
            bias: vec![0.0, 0.0],
            activation: Activation::SoftmaxOutput,
        }])
        .unwrap();
        assert_eq!(forward(&model, &[0.9, 0.1], 2).unwrap(), vec![0]);
        assert_eq!(forward(&model, &[0.2, 0.7], 2).unwrap(), vec![1]);
    }

    #[test]
    fn zero_weights_tie_to_lowest_class() {
        let model = ModelSpec::from_arch(&[3, 4, 5]).unwrap();
        assert_eq!(
            forward(&model, &[1.0, -2.0, 3.0, 0.0, 0.0, 0.0], 3).unwrap(),
            vec![0, 0]
        );
    }

    #[test]
    fn width_mismatch_is_an_error() {
        let model = ModelSpec::from_arch(&[3, 2]).unwrap();
        assert!(matches!(
            forward(&model, &[1.0, 2.0], 2),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        ));
        assert!(logits(&model, &[1.0]).is_err());
    }
}
