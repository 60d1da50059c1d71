//! Whole-network weight-sharing compression.
//!
//! All weights and biases of a dense network are flattened into one vector
//! and quantized together against a single codebook of shared weights:
//!
//! 1. [`quantizer`] bins the vector into `k` equal-width bins, drops empty
//!    bins and uses each bin's mean as its shared weight.
//! 2. [`moea`] searches `k` with NSGA-II, trading the number of shared
//!    weights against validation F1.
//! 3. [`merge`] greedily fuses neighbouring bins while F1 holds.
//! 4. [`codec`] Huffman-codes the bin indices and accounts compression ratios.
//!
//! [`pipeline`] chains the stages through files for the `weightshare` CLI.

// Negated float comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codec;
pub mod dataset;
pub mod error;
pub mod evaluator;
pub mod formats;
pub mod merge;
pub mod model;
pub mod moea;
pub mod pipeline;
pub mod quantizer;

pub use dataset::{Dataset, Split};
pub use error::{Error, Result};
pub use model::{flatten, unflatten, Activation, DenseLayer, ModelSpec, ParameterVector};
pub use quantizer::{compute_range, reconstruct, uniform_bin, Bin, Codebook};
