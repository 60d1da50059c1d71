//! On-disk formats. All integers and floats are little-endian.
//!
//! | file       | magic  | body |
//! |------------|--------|------|
//! | model      | `WSNN` | u16 version, u32 layers, per layer: u32 in, u32 out, u8 activation, f32 weights (row-major), f32 bias |
//! | dataset    | `WSDS` | u16 version, u32 rows, u32 cols, u32 classes, f32 features (row-major), u32 labels |
//! | codebook   | `WSCB` | u16 version, u32 k, u32 d, u64 N, d × {f64 lower, f64 upper, f64 centroid, u64 count}, fixed-width ⌈log2 d⌉-bit indices (MSB-first, zero-padded) |
//! | compressed | `WSHC` | u16 version, u64 N, u32 d, f32 centroids × d, u8 code lengths × d, u64 payload bits, packed Huffman bitstream |
//!
//! Models, datasets and codebooks also load from JSON. A model's JSON is
//! `{"layers": [{"in_dim", "out_dim", "weights": [...], "bias": [...],
//! "activation": "relu" | "identity" | "softmax-output"}]}` with flat
//! row-major weights. A dataset's JSON is `{"num_classes", "features":
//! [[...], ...], "labels": [...]}`. Loaders sniff the magic bytes, so the
//! file extension does not matter.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::{self, bits, Bitstream, HuffmanTable};
use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::model::{Activation, DenseLayer, ModelSpec};
use crate::quantizer::{Bin, Codebook};

pub const VERSION: u16 = 1;
pub const MODEL_MAGIC: &[u8; 4] = b"WSNN";
pub const DATASET_MAGIC: &[u8; 4] = b"WSDS";
pub const CODEBOOK_MAGIC: &[u8; 4] = b"WSCB";
pub const COMPRESSED_MAGIC: &[u8; 4] = b"WSHC";

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                Error::format(format!(
                    "truncated payload: need {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.buf.len()
                ))
            })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }

    fn f32s(&mut self, count: usize) -> Result<Vec<f32>> {
        let bytes = self.take(
            count
                .checked_mul(4)
                .ok_or_else(|| Error::format("size overflow"))?,
        )?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn u32s(&mut self, count: usize) -> Result<Vec<u32>> {
        let bytes = self.take(
            count
                .checked_mul(4)
                .ok_or_else(|| Error::format("size overflow"))?,
        )?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != magic {
            return Err(Error::format(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.u16()?;
        if version != VERSION {
            return Err(Error::format(format!(
                "unsupported version {version}, expected {VERSION}"
            )));
        }
        Ok(())
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}

fn header(out: &mut Vec<u8>, magic: &[u8; 4]) {
    out.extend_from_slice(magic);
    out.extend_from_slice(&VERSION.to_le_bytes());
}

fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn looks_like_json(bytes: &[u8]) -> bool {
    bytes
        .iter()
        .find(|b| !b.is_ascii_whitespace())
        .is_some_and(|&b| b == b'{')
}

fn count(v: usize) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::format(format!("{v} does not fit in u32")))
}

// ---------------------------------------------------------------- models

/// Serialises without validating, so malformed fixtures can be produced.
pub fn encode_model(model: &ModelSpec) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(10 + model.param_count() * 4);
    header(&mut out, MODEL_MAGIC);
    out.extend_from_slice(&count(model.layers.len())?.to_le_bytes());
    for layer in &model.layers {
        out.extend_from_slice(&count(layer.in_dim)?.to_le_bytes());
        out.extend_from_slice(&count(layer.out_dim)?.to_le_bytes());
        out.push(layer.activation.code());
        put_f32s(&mut out, &layer.weights);
        put_f32s(&mut out, &layer.bias);
    }
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelSpec> {
    if looks_like_json(bytes) {
        let model: ModelSpec = serde_json::from_slice(bytes)?;
        model.validate()?;
        return Ok(model);
    }
    let mut c = Cursor::new(bytes);
    c.header(MODEL_MAGIC)?;
    let n_layers = c.u32()? as usize;
    let mut layers = Vec::new();
    for _ in 0..n_layers {
        let in_dim = c.u32()? as usize;
        let out_dim = c.u32()? as usize;
        let activation = Activation::from_code(c.u8()?)?;
        let weights = c.f32s(
            in_dim
                .checked_mul(out_dim)
                .ok_or_else(|| Error::format("size overflow"))?,
        )?;
        let bias = c.f32s(out_dim)?;
        layers.push(DenseLayer {
            in_dim,
            out_dim,
            weights,
            bias,
            activation,
        });
    }
    c.finish()?;
    ModelSpec::new(layers)
}

pub fn save_model(path: impl AsRef<Path>, model: &ModelSpec) -> Result<()> {
    model.validate()?;
    fs::write(path, encode_model(model)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelSpec> {
    decode_model(&fs::read(path)?)
}

pub fn model_to_json(model: &ModelSpec) -> Result<String> {
    Ok(serde_json::to_string_pretty(model)?)
}

// -------------------------------------------------------------- datasets

#[derive(Serialize, Deserialize)]
struct DatasetJson {
    num_classes: usize,
    features: Vec<Vec<f32>>,
    labels: Vec<u32>,
}

pub fn encode_dataset(ds: &Dataset) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(18 + ds.features.len() * 4 + ds.labels.len() * 4);
    header(&mut out, DATASET_MAGIC);
    out.extend_from_slice(&count(ds.rows)?.to_le_bytes());
    out.extend_from_slice(&count(ds.cols)?.to_le_bytes());
    out.extend_from_slice(&count(ds.num_classes)?.to_le_bytes());
    put_f32s(&mut out, &ds.features);
    for l in &ds.labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_dataset(bytes: &[u8], split: Split) -> Result<Dataset> {
    if looks_like_json(bytes) {
        let j: DatasetJson = serde_json::from_slice(bytes)?;
        let cols = j.features.first().map_or(0, Vec::len);
        if j.features.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidDataset("ragged feature rows".into()));
        }
        let features = j.features.into_iter().flatten().collect();
        return Dataset::new(features, cols, j.labels, j.num_classes, split);
    }
    let mut c = Cursor::new(bytes);
    c.header(DATASET_MAGIC)?;
    let rows = c.u32()? as usize;
    let cols = c.u32()? as usize;
    let num_classes = c.u32()? as usize;
    let features = c.f32s(
        rows.checked_mul(cols)
            .ok_or_else(|| Error::format("size overflow"))?,
    )?;
    let labels = c.u32s(rows)?;
    c.finish()?;
    Dataset::new(features, cols, labels, num_classes, split)
}

pub fn save_dataset(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    ds.validate()?;
    fs::write(path, encode_dataset(ds)?)?;
    Ok(())
}

pub fn load_dataset(path: impl AsRef<Path>, split: Split) -> Result<Dataset> {
    decode_dataset(&fs::read(path)?, split)
}

pub fn dataset_to_json(ds: &Dataset) -> Result<String> {
    let j = DatasetJson {
        num_classes: ds.num_classes,
        features: (0..ds.rows).map(|i| ds.row(i).to_vec()).collect(),
        labels: ds.labels.clone(),
    };
    Ok(serde_json::to_string_pretty(&j)?)
}

// ------------------------------------------------------------- codebooks

pub fn encode_codebook(cb: &Codebook) -> Result<Vec<u8>> {
    let d = cb.d();
    let mut out = Vec::with_capacity(22 + d * 32 + cb.n());
    header(&mut out, CODEBOOK_MAGIC);
    out.extend_from_slice(&count(cb.k_requested)?.to_le_bytes());
    out.extend_from_slice(&count(d)?.to_le_bytes());
    out.extend_from_slice(&(cb.n() as u64).to_le_bytes());
    for b in &cb.bins {
        out.extend_from_slice(&b.lower.to_le_bytes());
        out.extend_from_slice(&b.upper.to_le_bytes());
        out.extend_from_slice(&b.centroid.to_le_bytes());
        out.extend_from_slice(&b.cardinality.to_le_bytes());
    }
    out.extend(bits::pack_fixed(&cb.indices, codec::ceil_log2(d)));
    Ok(out)
}

/// Member sums are not stored; they are restored as `centroid · count`.
pub fn decode_codebook(bytes: &[u8]) -> Result<Codebook> {
    if looks_like_json(bytes) {
        let cb: Codebook = serde_json::from_slice(bytes)?;
        cb.validate(None)?;
        return Ok(cb);
    }
    let mut c = Cursor::new(bytes);
    c.header(CODEBOOK_MAGIC)?;
    let k_requested = c.u32()? as usize;
    let d = c.u32()? as usize;
    let n = usize::try_from(c.u64()?).map_err(|_| Error::format("N too large"))?;
    let mut bins = Vec::with_capacity(d.min(1 << 20));
    for _ in 0..d {
        let lower = c.f64()?;
        let upper = c.f64()?;
        let centroid = c.f64()?;
        let cardinality = c.u64()?;
        bins.push(Bin {
            lower,
            upper,
            centroid,
            cardinality,
            sum: centroid * cardinality as f64,
        });
    }
    let width = codec::ceil_log2(d);
    let packed_len = (n as u128 * width as u128).div_ceil(8);
    let packed = c.take(usize::try_from(packed_len).map_err(|_| Error::format("N too large"))?)?;
    let indices = bits::unpack_fixed(packed, width, n)?;
    c.finish()?;
    let cb = Codebook {
        k_requested,
        bins,
        indices,
    };
    cb.validate(None)?;
    Ok(cb)
}

pub fn save_codebook(path: impl AsRef<Path>, cb: &Codebook) -> Result<()> {
    fs::write(path, encode_codebook(cb)?)?;
    Ok(())
}

pub fn load_codebook(path: impl AsRef<Path>) -> Result<Codebook> {
    decode_codebook(&fs::read(path)?)
}

// ------------------------------------------------------ compressed models

/// Shared weights plus Huffman-coded indices: everything needed, together
/// with a model skeleton, to rebuild the quantized network.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedModel {
    pub n: u64,
    pub centroids: Vec<f32>,
    pub table: HuffmanTable,
    pub stream: Bitstream,
}

impl CompressedModel {
    pub fn from_codebook(cb: &Codebook) -> Result<Self> {
        let table = HuffmanTable::build(&cb.cardinalities())?;
        let stream = codec::encode_indices(&cb.indices, &table)?;
        Ok(Self {
            n: cb.n() as u64,
            centroids: cb.bins.iter().map(|b| b.centroid as f32).collect(),
            table,
            stream,
        })
    }

    pub fn d(&self) -> usize {
        self.centroids.len()
    }

    pub fn indices(&self) -> Result<Vec<u32>> {
        let n = usize::try_from(self.n).map_err(|_| Error::format("N too large"))?;
        codec::decode_indices(&self.stream, &self.table, n)
    }

    /// Bin sizes recovered from the decoded stream.
    pub fn cardinalities(&self) -> Result<Vec<u64>> {
        let mut cards = vec![0u64; self.d()];
        for ix in self.indices()? {
            cards[ix as usize] += 1;
        }
        Ok(cards)
    }

    pub fn reconstruct(&self, skeleton: &ModelSpec) -> Result<ModelSpec> {
        let values: Vec<f32> = self
            .indices()?
            .into_iter()
            .map(|ix| self.centroids[ix as usize])
            .collect();
        let theta = crate::model::flatten(skeleton)?.with_values(values)?;
        crate::model::unflatten(&theta, skeleton)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let d = self.d();
        let mut out = Vec::with_capacity(32 + d * 5 + self.stream.bytes.len());
        header(&mut out, COMPRESSED_MAGIC);
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&count(d)?.to_le_bytes());
        put_f32s(&mut out, &self.centroids);
        out.extend_from_slice(&self.table.lengths);
        out.extend_from_slice(&self.stream.bit_len.to_le_bytes());
        out.extend_from_slice(&self.stream.bytes);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor::new(bytes);
        c.header(COMPRESSED_MAGIC)?;
        let n = c.u64()?;
        let d = c.u32()? as usize;
        let centroids = c.f32s(d)?;
        let lengths = c.take(d)?.to_vec();
        let table = HuffmanTable::from_lengths(lengths)?;
        let bit_len = c.u64()?;
        let n_bytes =
            usize::try_from(bit_len.div_ceil(8)).map_err(|_| Error::format("payload too large"))?;
        let stream = Bitstream {
            bytes: c.take(n_bytes)?.to_vec(),
            bit_len,
        };
        c.finish()?;
        Ok(Self {
            n,
            centroids,
            table,
            stream,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::uniform_bin;

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
    fn corrupted_magic() {
        let mut bytes = encode_model(&tiny()).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode_model(&bytes), Err(Error::Format(m)) if m.contains("magic")));
    }

    #[test]
    fn wrong_version() {
        let mut bytes = encode_model(&tiny()).unwrap();
        bytes[4] = 2;
        assert!(matches!(decode_model(&bytes), Err(Error::Format(m)) if m.contains("version")));
    }

    #[test]
    fn truncated_model() {
        let bytes = encode_model(&tiny()).unwrap();
        assert!(matches!(
            decode_model(&bytes[..bytes.len() - 1]),
            Err(Error::Format(m)) if m.contains("truncated")
        ));
    }

    #[test]
    fn broken_chain_in_file() {
        let bad = ModelSpec {
            layers: vec![
                DenseLayer::zeros(4, 3, Activation::Relu),
                DenseLayer::zeros(5, 2, Activation::SoftmaxOutput),
            ],
        };
        let bytes = encode_model(&bad).unwrap();
        assert!(matches!(
            decode_model(&bytes),
            Err(Error::DimensionChain { layer: 1, .. })
        ));
    }

    #[test]
    fn model_header_layout() {
        let bytes = encode_model(&tiny()).unwrap();
        assert_eq!(&bytes[..4], b"WSNN");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &[1, 0, 0, 0]);
        assert_eq!(bytes[18], 2);
        assert_eq!(bytes.len(), 10 + 9 + 6 * 4);
    }

    #[test]
    fn model_json_mirror() {
        let json = model_to_json(&tiny()).unwrap();
        assert!(json.contains("softmax-output"));
        assert_eq!(decode_model(json.as_bytes()).unwrap(), tiny());
    }

    #[test]
    fn dataset_json_mirror() {
        let json = r#"{"num_classes": 2, "features": [[0.5, 1.0], [2.0, -1.0]], "labels": [1, 0]}"#;
        let ds = decode_dataset(json.as_bytes(), Split::Validation).unwrap();
        assert_eq!(ds.rows, 2);
        assert_eq!(ds.cols, 2);
        let back = decode_dataset(&encode_dataset(&ds).unwrap(), Split::Validation).unwrap();
        assert_eq!(back, ds);
        assert_eq!(
            decode_dataset(dataset_to_json(&ds).unwrap().as_bytes(), Split::Validation).unwrap(),
            ds
        );
    }

    #[test]
    fn codebook_round_trip() {
        let theta = [0.0f32, 1.0, 2.0, 3.0, 0.5, 2.9, 1.2];
        let cb = uniform_bin(&theta, 3).unwrap();
        let bytes = encode_codebook(&cb).unwrap();
        assert_eq!(&bytes[..4], b"WSCB");
        // header 22 bytes + 3 records + 7 indices at 2 bits
        assert_eq!(bytes.len(), 22 + 3 * 32 + 2);
        let back = decode_codebook(&bytes).unwrap();
        assert_eq!(back.indices, cb.indices);
        assert_eq!(back.centroids(), cb.centroids());
        assert_eq!(back.cardinalities(), cb.cardinalities());
        assert_eq!(back.k_requested, 3);
    }

    #[test]
    fn compressed_round_trip_and_reconstruction() {
        let model = tiny();
        let theta = crate::model::flatten(&model).unwrap();
        let cb = uniform_bin(&theta.values, 2).unwrap();
        let cm = CompressedModel::from_codebook(&cb).unwrap();
        let bytes = cm.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"WSHC");
        let back = CompressedModel::from_bytes(&bytes).unwrap();
        assert_eq!(back, cm);
        let expected = crate::quantizer::reconstruct(&theta, &cb).unwrap();
        let rebuilt = back.reconstruct(&model).unwrap();
        assert_eq!(
            crate::model::flatten(&rebuilt).unwrap().values,
            expected.values
        );
        assert_eq!(back.cardinalities().unwrap(), cb.cardinalities());
    }
}
