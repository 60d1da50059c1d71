//! Uniform binning of θ into a shared-weight codebook.
//!
//! The range `[θ_min, θ_max]` is cut into `k` equal-width bins of width
//! `Δ = (θ_max − θ_min) / k`. A weight goes to bin `floor((θ − θ_min) / Δ)`,
//! with `θ_max` clamped into the last bin. Bins are half-open `[lower, upper)`
//! except the last, which is closed. Empty bins are dropped and survivors are
//! re-indexed densely in order, leaving `d ≤ k` bins whose centroid is the
//! plain mean of their members.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ParameterVector;

/// Geometry of a k-bin uniform partition of `[theta_min, theta_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinningRequest {
    pub k: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub delta: f64,
}

impl BinningRequest {
    pub fn new(theta_min: f64, theta_max: f64, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidBinCount(k));
        }
        if !(theta_min < theta_max) {
            return Err(Error::DegenerateRange(theta_min));
        }
        let delta = (theta_max - theta_min) / k as f64;
        if !(delta > 0.0) {
            return Err(Error::DegenerateRange(theta_min));
        }
        Ok(Self {
            k,
            theta_min,
            theta_max,
            delta,
        })
    }

    /// Left edge of bin `i`; `boundary(k)` is `theta_max`.
    #[inline]
    pub fn boundary(&self, i: usize) -> f64 {
        if i >= self.k {
            self.theta_max
        } else {
            self.theta_min + i as f64 * self.delta
        }
    }

    /// Raw (pre-removal) bin of a value inside the range.
    #[inline]
    pub fn bin_of(&self, value: f64) -> usize {
        let last = self.k - 1;
        let raw = ((value - self.theta_min) / self.delta).floor();
        let mut idx = if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(last)
        };
        // The division can land one bin off near an edge; settle against the
        // materialised boundaries so membership is exactly [lower, upper).
        while idx > 0 && value < self.boundary(idx) {
            idx -= 1;
        }
        while idx < last && value >= self.boundary(idx + 1) {
            idx += 1;
        }
        idx
    }
}

/// One non-empty bin of the codebook.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    /// Mean of the member weights (the shared weight).
    pub centroid: f64,
    pub cardinality: u64,
    /// Sum of the member weights, accumulated in f64.
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    pub k_requested: usize,
    pub bins: Vec<Bin>,
    /// Bin index per weight, in `0..d`.
    pub indices: Vec<u32>,
}

impl Codebook {
    /// Number of shared weights.
    pub fn d(&self) -> usize {
        self.bins.len()
    }

    pub fn n(&self) -> usize {
        self.indices.len()
    }

    pub fn cardinalities(&self) -> Vec<u64> {
        self.bins.iter().map(|b| b.cardinality).collect()
    }

    pub fn centroids(&self) -> Vec<f64> {
        self.bins.iter().map(|b| b.centroid).collect()
    }

    /// Checks the structural invariants; `theta` additionally checks
    /// membership and centroid values against the raw weights.
    pub fn validate(&self, theta: Option<&[f32]>) -> Result<()> {
        let d = self.d();
        if d == 0 {
            return Err(Error::Invariant("codebook has no bins".into()));
        }
        let mut hist = vec![0u64; d];
        for &ix in &self.indices {
            let ix = ix as usize;
            if ix >= d {
                return Err(Error::IndexOutOfRange { index: ix, d });
            }
            hist[ix] += 1;
        }
        for (i, bin) in self.bins.iter().enumerate() {
            if bin.cardinality == 0 {
                return Err(Error::Invariant(format!("bin {i} is empty")));
            }
            if hist[i] != bin.cardinality {
                return Err(Error::Invariant(format!(
                    "bin {i} claims {} members, indices hold {}",
                    bin.cardinality, hist[i]
                )));
            }
            if !(bin.lower <= bin.upper) {
                return Err(Error::Invariant(format!("bin {i} has lower > upper")));
            }
            if bin.centroid < bin.lower || bin.centroid > bin.upper {
                return Err(Error::Invariant(format!(
                    "bin {i} centroid {} outside [{}, {}]",
                    bin.centroid, bin.lower, bin.upper
                )));
            }
            if i + 1 < d {
                let next = &self.bins[i + 1];
                if !(bin.lower < next.lower) || bin.upper > next.lower {
                    return Err(Error::Invariant(format!("bins {i} and {} overlap", i + 1)));
                }
            }
        }
        if let Some(theta) = theta {
            if theta.len() != self.indices.len() {
                return Err(Error::LengthMismatch {
                    expected: self.indices.len(),
                    actual: theta.len(),
                });
            }
            for (j, (&w, &ix)) in theta.iter().zip(&self.indices).enumerate() {
                let bin = &self.bins[ix as usize];
                let w = w as f64;
                if w < bin.lower || w > bin.upper {
                    return Err(Error::Invariant(format!(
                        "weight {j} = {w} lies outside its bin [{}, {}]",
                        bin.lower, bin.upper
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Weights replaced by their shared centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedModel {
    pub codebook: Codebook,
    pub reconstructed: ParameterVector,
}

/// Exact min and max of θ.
pub fn compute_range(theta: &[f32]) -> Result<(f64, f64)> {
    if theta.len() < 2 {
        return Err(Error::TooFewParameters(theta.len()));
    }
    let mut lo = f32::INFINITY;
    let mut hi = f32::NEG_INFINITY;
    for &v in theta {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                tensor: "theta".into(),
            });
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        return Err(Error::DegenerateRange(lo as f64));
    }
    Ok((lo as f64, hi as f64))
}

/// Uniform binning with empty-bin removal. Linear in N.
pub fn uniform_bin(theta: &[f32], k: usize) -> Result<Codebook> {
    if k < 2 {
        return Err(Error::InvalidBinCount(k));
    }
    let (lo, hi) = compute_range(theta)?;
    uniform_bin_in_range(theta, &BinningRequest::new(lo, hi, k)?)
}

/// Binning against a precomputed range, so a search over many `k` scans
/// θ for its extremes only once.
pub fn uniform_bin_in_range(theta: &[f32], req: &BinningRequest) -> Result<Codebook> {
    let k = req.k;
    let mut raw = Vec::with_capacity(theta.len());
    let mut counts = vec![0u64; k];
    let mut sums = vec![0f64; k];
    for &v in theta {
        let v = v as f64;
        if v < req.theta_min || v > req.theta_max || !v.is_finite() {
            return Err(Error::Invariant(format!(
                "value {v} outside binning range [{}, {}]",
                req.theta_min, req.theta_max
            )));
        }
        let b = req.bin_of(v);
        counts[b] += 1;
        sums[b] += v;
        raw.push(b as u32);
    }

    let mut remap = vec![u32::MAX; k];
    let mut bins = Vec::new();
    for i in 0..k {
        if counts[i] == 0 {
            continue;
        }
        remap[i] = bins.len() as u32;
        let lower = req.boundary(i);
        let upper = req.boundary(i + 1);
        // Mean of values inside [lower, upper] rounds back inside it.
        let centroid = (sums[i] / counts[i] as f64).clamp(lower, upper);
        bins.push(Bin {
            lower,
            upper,
            centroid,
            cardinality: counts[i],
            sum: sums[i],
        });
    }
    let indices = raw.into_iter().map(|b| remap[b as usize]).collect();
    Ok(Codebook {
        k_requested: k,
        bins,
        indices,
    })
}

/// Replaces every weight with its bin's centroid (as f32).
pub fn reconstruct(theta: &ParameterVector, codebook: &Codebook) -> Result<ParameterVector> {
    if codebook.indices.len() != theta.len() {
        return Err(Error::LengthMismatch {
            expected: theta.len(),
            actual: codebook.indices.len(),
        });
    }
    let centroids: Vec<f32> = codebook.bins.iter().map(|b| b.centroid as f32).collect();
    let d = centroids.len();
    let values = codebook
        .indices
        .iter()
        .map(|&ix| {
            centroids
                .get(ix as usize)
                .copied()
                .ok_or(Error::IndexOutOfRange {
                    index: ix as usize,
                    d,
                })
        })
        .collect::<Result<Vec<f32>>>()?;
    theta.with_values(values)
}

/// `uniform_bin` followed by `reconstruct`.
pub fn quantize(theta: &ParameterVector, k: usize) -> Result<QuantizedModel> {
    let codebook = uniform_bin(&theta.values, k)?;
    let reconstructed = reconstruct(theta, &codebook)?;
    Ok(QuantizedModel {
        codebook,
        reconstructed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_of_small_vector() {
        assert_eq!(compute_range(&[-1.5, 0.0, 2.5]).unwrap(), (-1.5, 2.5));
    }

    #[test]
    fn constant_vector_is_degenerate() {
        assert!(matches!(
            compute_range(&[3.0, 3.0, 3.0]),
            Err(Error::DegenerateRange(_))
        ));
    }

    #[test]
    fn two_bins_over_four_values() {
        let cb = uniform_bin(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(cb.d(), 2);
        assert_eq!(cb.bins[0].lower, 0.0);
        assert_eq!(cb.bins[0].upper, 1.5);
        assert_eq!(cb.bins[0].centroid, 0.5);
        assert_eq!(cb.bins[1].centroid, 2.5);
        assert_eq!(cb.indices, vec![0, 0, 1, 1]);
        cb.validate(Some(&[0.0, 1.0, 2.0, 3.0])).unwrap();

        let theta = ParameterVector::from_values(vec![0.0, 1.0, 2.0, 3.0]);
        let rec = reconstruct(&theta, &cb).unwrap();
        assert_eq!(rec.values, vec![0.5, 0.5, 2.5, 2.5]);
    }

    #[test]
    fn empty_bins_are_removed() {
        let cb = uniform_bin(&[0.0, 10.0], 5).unwrap();
        assert_eq!(cb.d(), 2);
        assert_eq!(cb.centroids(), vec![0.0, 10.0]);
        // survivor 1 is raw bin 4
        assert_eq!(cb.bins[1].lower, 8.0);
        assert_eq!(cb.bins[1].upper, 10.0);
        assert_eq!(cb.indices, vec![0, 1]);
    }

    #[test]
    fn identity_quantization_when_k_equals_n() {
        let values: Vec<f32> = (0..16).map(|i| i as f32 * 0.25).collect();
        let theta = ParameterVector::from_values(values.clone());
        let q = quantize(&theta, values.len()).unwrap();
        assert_eq!(q.codebook.d(), values.len());
        assert_eq!(q.reconstructed.values, values);
    }

    #[test]
    fn interior_boundary_goes_up() {
        // Δ = 1: 1.0 sits exactly on the edge between bins 0 and 1.
        let cb = uniform_bin(&[0.0, 1.0, 2.0], 2).unwrap();
        assert_eq!(cb.indices, vec![0, 1, 1]);
    }

    #[test]
    fn k_below_two_is_rejected() {
        assert!(matches!(
            uniform_bin(&[0.0, 1.0], 1),
            Err(Error::InvalidBinCount(1))
        ));
    }

    #[test]
    fn reconstruct_rejects_bad_index() {
        let mut cb = uniform_bin(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        cb.indices[3] = 7;
        let theta = ParameterVector::from_values(vec![0.0, 1.0, 2.0, 3.0]);
        assert!(matches!(
            reconstruct(&theta, &cb),
            Err(Error::IndexOutOfRange { index: 7, d: 2 })
        ));
    }
}
