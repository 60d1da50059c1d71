//! Compression-ratio accounting.
//!
//! Storage of the uncompressed network is `N · b_W` bits. The compressed
//! network stores `d` centroids at `b_W` bits plus an index term where every
//! bin contributes `|C_i| + 1` entries. With fixed-length indices each entry
//! costs `⌈log2 d⌉` bits; with Huffman indices bin `i` costs its code length.

use serde::{Deserialize, Serialize};

use super::huffman::HuffmanTable;
use crate::error::{Error, Result};

/// Bits per full-precision weight.
pub const WEIGHT_BITS: u32 = 32;

/// `⌈log2 d⌉`, with `⌈log2 1⌉ = 0`.
pub fn ceil_log2(d: usize) -> u32 {
    if d <= 1 {
        0
    } else {
        usize::BITS - (d - 1).leading_zeros()
    }
}

fn check_sum(n: u64, cardinalities: &[u64]) -> Result<()> {
    if cardinalities.is_empty() {
        return Err(Error::EmptyInput("cardinalities"));
    }
    let total: u64 = cardinalities.iter().sum();
    if total != n {
        return Err(Error::CardinalityMismatch {
            expected: n,
            actual: total,
        });
    }
    Ok(())
}

fn entry_count(cardinalities: &[u64]) -> f64 {
    cardinalities.iter().map(|&c| (c + 1) as f64).sum()
}

/// Fixed-length-index compression ratio; `d` is `cardinalities.len()`.
pub fn cr_fixed(n: u64, cardinalities: &[u64]) -> Result<f64> {
    check_sum(n, cardinalities)?;
    let d = cardinalities.len();
    let bits = ceil_log2(d) as f64;
    let stored = d as f64 * WEIGHT_BITS as f64 + bits * entry_count(cardinalities);
    Ok(n as f64 * WEIGHT_BITS as f64 / stored)
}

fn check_table(table: &HuffmanTable, cardinalities: &[u64]) -> Result<()> {
    if table.d() != cardinalities.len() {
        return Err(Error::TableMismatch {
            table: table.d(),
            cardinalities: cardinalities.len(),
        });
    }
    Ok(())
}

/// Variable-length-index compression ratio.
pub fn cr_huffman(n: u64, cardinalities: &[u64], table: &HuffmanTable) -> Result<f64> {
    check_sum(n, cardinalities)?;
    check_table(table, cardinalities)?;
    let d = cardinalities.len();
    let index_bits: f64 = cardinalities
        .iter()
        .zip(&table.lengths)
        .map(|(&c, &l)| l as f64 * (c + 1) as f64)
        .sum();
    let stored = d as f64 * WEIGHT_BITS as f64 + index_bits;
    Ok(n as f64 * WEIGHT_BITS as f64 / stored)
}

/// Frequency-weighted mean code length.
pub fn avg_bits(table: &HuffmanTable, cardinalities: &[u64]) -> Result<f64> {
    check_table(table, cardinalities)?;
    let weighted: f64 = cardinalities
        .iter()
        .zip(&table.lengths)
        .map(|(&c, &l)| l as f64 * (c + 1) as f64)
        .sum();
    Ok(weighted / entry_count(cardinalities))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub n: u64,
    pub d: usize,
    pub b_w: u32,
    pub fixed_bits: u32,
    pub avg_bits: f64,
    pub cr_fixed: f64,
    pub cr_huffman: f64,
}

impl CompressionReport {
    pub fn new(n: u64, cardinalities: &[u64]) -> Result<Self> {
        let table = HuffmanTable::build(cardinalities)?;
        Ok(Self {
            n,
            d: cardinalities.len(),
            b_w: WEIGHT_BITS,
            fixed_bits: ceil_log2(cardinalities.len()),
            avg_bits: avg_bits(&table, cardinalities)?,
            cr_fixed: cr_fixed(n, cardinalities)?,
            cr_huffman: cr_huffman(n, cardinalities, &table)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_log2_values() {
        let got: Vec<u32> = [1, 2, 3, 4, 5, 197, 256, 257, 538]
            .iter()
            .map(|&d| ceil_log2(d))
            .collect();
        assert_eq!(got, vec![0, 1, 2, 2, 3, 8, 8, 9, 10]);
    }

    #[test]
    fn fixed_ratio_hand_example() {
        let cr = cr_fixed(100, &[10, 20, 30, 40]).unwrap();
        assert!((cr - 3200.0 / 336.0).abs() < 1e-12);
    }

    #[test]
    fn single_bin_ratio_is_n() {
        assert_eq!(cr_fixed(500, &[500]).unwrap(), 500.0);
    }

    #[test]
    fn cardinality_mismatch() {
        assert!(matches!(
            cr_fixed(10, &[3, 3]),
            Err(Error::CardinalityMismatch {
                expected: 10,
                actual: 6
            })
        ));
    }

    #[test]
    fn uniform_huffman_equals_fixed() {
        let cards = [1, 1, 1, 1];
        let t = HuffmanTable::build(&cards).unwrap();
        assert_eq!(avg_bits(&t, &cards).unwrap(), 2.0);
        assert_eq!(
            cr_huffman(4, &cards, &t).unwrap(),
            cr_fixed(4, &cards).unwrap()
        );
    }

    #[test]
    fn skewed_average_bits() {
        let cards = [8, 4, 2, 1, 1];
        let t = HuffmanTable::build(&cards).unwrap();
        assert!((avg_bits(&t, &cards).unwrap() - 44.0 / 21.0).abs() < 1e-12);
    }

    #[test]
    fn mismatched_table() {
        let t = HuffmanTable::build(&[1, 1]).unwrap();
        assert!(matches!(
            cr_huffman(3, &[1, 1, 1], &t),
            Err(Error::TableMismatch { .. })
        ));
    }
}
