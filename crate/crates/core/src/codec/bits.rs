//! MSB-first bit packing.

use crate::error::{Error, Result};

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `width` bits of `value`, most significant first.
    pub fn write(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        for shift in (0..width).rev() {
            let bit = (value >> shift) & 1;
            let offset = (self.bit_len % 8) as u32;
            if offset == 0 {
                self.bytes.push(0);
            }
            if bit == 1 {
                *self.bytes.last_mut().unwrap() |= 0x80 >> offset;
            }
            self.bit_len += 1;
        }
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    /// Zero-padded bytes and the number of meaningful bits.
    pub fn finish(self) -> (Vec<u8>, u64) {
        (self.bytes, self.bit_len)
    }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    bit_len: u64,
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_len: u64) -> Result<Self> {
        if bit_len > bytes.len() as u64 * 8 {
            return Err(Error::TruncatedStream(format!(
                "{bit_len} bits declared, {} bytes available",
                bytes.len()
            )));
        }
        Ok(Self {
            bytes,
            bit_len,
            pos: 0,
        })
    }

    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn read_bit(&mut self) -> Result<u64> {
        if self.pos >= self.bit_len {
            return Err(Error::TruncatedStream(format!(
                "read past end at bit {}",
                self.pos
            )));
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = (byte >> (7 - (self.pos % 8))) & 1;
        self.pos += 1;
        Ok(bit as u64)
    }

    pub fn read(&mut self, width: u32) -> Result<u64> {
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.read_bit()?;
        }
        Ok(v)
    }
}

/// Fixed-width packing of indices, `width` bits each.
pub fn pack_fixed(values: &[u32], width: u32) -> Vec<u8> {
    let mut w = BitWriter::new();
    for &v in values {
        w.write(v as u64, width);
    }
    w.finish().0
}

pub fn unpack_fixed(bytes: &[u8], width: u32, count: usize) -> Result<Vec<u32>> {
    let mut r = BitReader::new(bytes, bytes.len() as u64 * 8)?;
    (0..count)
        .map(|_| r.read(width).map(|v| v as u32))
        .collect()
}
