//! Canonical Huffman codes over codebook bin indices.
//!
//! Each bin is weighted by `|C_i| + 1`: its member count plus its codebook
//! entry. Code lengths come from the usual bottom-up tree (ties broken by
//! the lowest bin index in a subtree); code words are then assigned
//! canonically so a table is fully described by its lengths.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::bits::{BitReader, BitWriter};
use crate::error::{Error, Result};

const MAX_CODE_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HuffmanTable {
    pub lengths: Vec<u8>,
    /// Code word per bin, right-aligned in `lengths[i]` bits.
    pub codes: Vec<u64>,
}

/// Packed index stream.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bitstream {
    pub bytes: Vec<u8>,
    pub bit_len: u64,
}

/// Huffman weight of a bin.
pub fn frequencies(cardinalities: &[u64]) -> Vec<u64> {
    cardinalities.iter().map(|&c| c + 1).collect()
}

/// Optimal code lengths for positive frequencies.
pub fn code_lengths(freqs: &[u64]) -> Result<Vec<u8>> {
    if freqs.is_empty() {
        return Err(Error::EmptyInput("frequencies"));
    }
    if freqs.contains(&0) {
        return Err(Error::Invariant("Huffman frequencies must be >= 1".into()));
    }
    if freqs.len() == 1 {
        return Ok(vec![1]);
    }
    // Node arena: leaves are 0..d, internal nodes follow.
    let d = freqs.len();
    let mut parent = vec![usize::MAX; 2 * d - 1];
    let mut heap: BinaryHeap<Reverse<(u64, usize, usize)>> = freqs
        .iter()
        .enumerate()
        .map(|(i, &f)| Reverse((f, i, i)))
        .collect();
    let mut next = d;
    while heap.len() > 1 {
        let Reverse((fa, la, a)) = heap.pop().unwrap();
        let Reverse((fb, lb, b)) = heap.pop().unwrap();
        parent[a] = next;
        parent[b] = next;
        heap.push(Reverse((fa + fb, la.min(lb), next)));
        next += 1;
    }
    let root = next - 1;
    let mut depth = vec![0usize; 2 * d - 1];
    // parents are created after children, so walk top-down by descending id
    for node in (0..root).rev() {
        depth[node] = depth[parent[node]] + 1;
    }
    depth[..d]
        .iter()
        .map(|&l| {
            if l > MAX_CODE_LEN {
                Err(Error::CodeTooLong(l))
            } else {
                Ok(l as u8)
            }
        })
        .collect()
}

impl HuffmanTable {
    /// Builds the table for a codebook's bin cardinalities.
    pub fn build(cardinalities: &[u64]) -> Result<Self> {
        Self::from_lengths(code_lengths(&frequencies(cardinalities))?)
    }

    /// Canonical code words for the given lengths.
    pub fn from_lengths(lengths: Vec<u8>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::EmptyInput("code lengths"));
        }
        if let Some(&bad) = lengths
            .iter()
            .find(|&&l| l == 0 || l as usize > MAX_CODE_LEN)
        {
            return Err(Error::format(format!("invalid code length {bad}")));
        }
        if kraft_sum(&lengths) > 1.0 {
            return Err(Error::format("code lengths violate the Kraft inequality"));
        }
        let mut order: Vec<usize> = (0..lengths.len()).collect();
        order.sort_by_key(|&i| (lengths[i], i));
        let mut codes = vec![0u64; lengths.len()];
        let mut code = 0u64;
        let mut prev_len = lengths[order[0]];
        for (n, &i) in order.iter().enumerate() {
            let len = lengths[i];
            if n > 0 {
                code = (code + 1) << (len - prev_len);
            }
            codes[i] = code;
            prev_len = len;
        }
        Ok(Self { lengths, codes })
    }

    pub fn d(&self) -> usize {
        self.lengths.len()
    }

    pub fn code_string(&self, symbol: usize) -> String {
        let len = self.lengths[symbol] as u32;
        (0..len)
            .rev()
            .map(|s| {
                if (self.codes[symbol] >> s) & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }

    pub fn kraft_sum(&self) -> f64 {
        kraft_sum(&self.lengths)
    }

    /// True when no code word is a prefix of another.
    pub fn is_prefix_free(&self) -> bool {
        for i in 0..self.d() {
            for j in 0..self.d() {
                if i == j || self.lengths[i] > self.lengths[j] {
                    continue;
                }
                let shift = self.lengths[j] - self.lengths[i];
                if self.codes[j] >> shift == self.codes[i] {
                    return false;
                }
            }
        }
        true
    }
}

fn kraft_sum(lengths: &[u8]) -> f64 {
    lengths.iter().map(|&l| 0.5f64.powi(l as i32)).sum()
}

pub fn build_huffman(cardinalities: &[u64]) -> Result<HuffmanTable> {
    HuffmanTable::build(cardinalities)
}

pub fn encode_indices(indices: &[u32], table: &HuffmanTable) -> Result<Bitstream> {
    let mut w = BitWriter::new();
    for &ix in indices {
        let ix = ix as usize;
        if ix >= table.d() {
            return Err(Error::IndexOutOfRange {
                index: ix,
                d: table.d(),
            });
        }
        w.write(table.codes[ix], table.lengths[ix] as u32);
    }
    let (bytes, bit_len) = w.finish();
    Ok(Bitstream { bytes, bit_len })
}

/// Canonical decoding state: per length, the first code and where its
/// symbols start in the length-sorted symbol list.
struct Decoder {
    max_len: usize,
    first_code: Vec<u64>,
    count: Vec<u64>,
    offset: Vec<usize>,
    symbols: Vec<u32>,
}

impl Decoder {
    fn new(table: &HuffmanTable) -> Self {
        let max_len = table.lengths.iter().copied().max().unwrap_or(0) as usize;
        let mut symbols: Vec<u32> = (0..table.d() as u32).collect();
        symbols.sort_by_key(|&i| (table.lengths[i as usize], i));
        let mut count = vec![0u64; max_len + 1];
        for &l in &table.lengths {
            count[l as usize] += 1;
        }
        let mut first_code = vec![0u64; max_len + 1];
        let mut offset = vec![0usize; max_len + 1];
        let mut code = 0u64;
        let mut seen = 0usize;
        for len in 1..=max_len {
            first_code[len] = code;
            offset[len] = seen;
            seen += count[len] as usize;
            code = (code + count[len]) << 1;
        }
        Self {
            max_len,
            first_code,
            count,
            offset,
            symbols,
        }
    }

    fn next(&self, reader: &mut BitReader<'_>) -> Result<u32> {
        let start = reader.position();
        let mut code = 0u64;
        for len in 1..=self.max_len {
            code = (code << 1) | reader.read_bit()?;
            let first = self.first_code[len];
            if code >= first && code - first < self.count[len] {
                return Ok(self.symbols[self.offset[len] + (code - first) as usize]);
            }
        }
        Err(Error::UnknownCode(start))
    }
}

pub fn decode_indices(stream: &Bitstream, table: &HuffmanTable, n: usize) -> Result<Vec<u32>> {
    let decoder = Decoder::new(table);
    let mut reader = BitReader::new(&stream.bytes, stream.bit_len)?;
    let out = (0..n)
        .map(|_| decoder.next(&mut reader))
        .collect::<Result<Vec<u32>>>()?;
    if reader.position() != stream.bit_len {
        return Err(Error::format(format!(
            "{} trailing bits after {n} symbols",
            stream.bit_len - reader.position()
        )));
    }
    Ok(out)
}
