//! Huffman coding of bin indices and compression-ratio accounting.

pub mod bits;
mod huffman;
mod ratio;

pub use huffman::{
    build_huffman, code_lengths, decode_indices, encode_indices, frequencies, Bitstream,
    HuffmanTable,
};
pub use ratio::{avg_bits, ceil_log2, cr_fixed, cr_huffman, CompressionReport, WEIGHT_BITS};
