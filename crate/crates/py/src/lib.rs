//! Python bindings: models, datasets, codebooks, Huffman tables and the
//! stage functions of the compression pipeline.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use weightshare::codec::{self, Bitstream};
use weightshare::evaluator::{self, BlobsConfig, TrainerConfig};
use weightshare::merge::{self, TiePolicy};
use weightshare::moea::{self, MoeaConfig};
use weightshare::{formats, quantizer, Error, ModelSpec, ParameterVector, Split};

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        Error::MissingArtifact { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn split_from(name: &str) -> PyResult<Split> {
    match name {
        "train" => Ok(Split::Train),
        "validation" => Ok(Split::Validation),
        "test" => Ok(Split::Test),
        _ => Err(PyValueError::new_err(format!("unknown split {name:?}"))),
    }
}

#[pyclass(name = "Model", module = "pyweightshare", skip_from_py_object)]
#[derive(Clone)]
pub struct PyModel {
    inner: ModelSpec,
}

#[pymethods]
impl PyModel {
    /// Zero-initialised ReLU network ending in a softmax layer.
    #[staticmethod]
    fn from_arch(arch: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: ModelSpec::from_arch(&arch).map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: formats::load_model(path).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        formats::save_model(path, &self.inner).map_err(err)
    }

    #[getter]
    fn arch(&self) -> Vec<usize> {
        self.inner.arch()
    }

    #[getter]
    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    /// All weights and biases, layer by layer.
    fn flatten(&self) -> PyResult<Vec<f32>> {
        Ok(weightshare::flatten(&self.inner).map_err(err)?.values)
    }

    /// Copy of this model with its parameters replaced by `theta`.
    fn with_parameters(&self, theta: Vec<f32>) -> PyResult<Self> {
        let pv = weightshare::flatten(&self.inner)
            .and_then(|pv| pv.with_values(theta))
            .map_err(err)?;
        Ok(Self {
            inner: weightshare::unflatten(&pv, &self.inner).map_err(err)?,
        })
    }

    fn logits(&self, x: Vec<f32>) -> PyResult<Vec<f32>> {
        evaluator::logits(&self.inner, &x).map_err(err)
    }

    fn predict(&self, dataset: &PyDataset) -> PyResult<Vec<u32>> {
        let d = &dataset.inner;
        evaluator::forward(&self.inner, &d.features, d.cols).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        formats::model_to_json(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(arch={:?}, params={})",
            self.inner.arch(),
            self.inner.param_count()
        )
    }
}

#[pyclass(name = "Dataset", module = "pyweightshare", skip_from_py_object)]
#[derive(Clone)]
pub struct PyDataset {
    inner: weightshare::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    #[pyo3(signature = (features, labels, num_classes, split = "test"))]
    fn new(
        features: Vec<Vec<f32>>,
        labels: Vec<u32>,
        num_classes: usize,
        split: &str,
    ) -> PyResult<Self> {
        let cols = features.first().map_or(0, Vec::len);
        if features.iter().any(|r| r.len() != cols) {
            return Err(PyValueError::new_err("rows have different lengths"));
        }
        let flat = features.concat();
        Ok(Self {
            inner: weightshare::Dataset::new(flat, cols, labels, num_classes, split_from(split)?)
                .map_err(err)?,
        })
    }

    #[staticmethod]
    fn load(path: &str, split: &str) -> PyResult<Self> {
        Ok(Self {
            inner: formats::load_dataset(path, split_from(split)?).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        formats::save_dataset(path, &self.inner).map_err(err)
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f32>> {
        (0..self.inner.rows)
            .map(|i| self.inner.row(i).to_vec())
            .collect()
    }

    #[getter]
    fn labels(&self) -> Vec<u32> {
        self.inner.labels.clone()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes
    }

    #[getter]
    fn split(&self) -> &'static str {
        self.inner.split.name()
    }

    fn __len__(&self) -> usize {
        self.inner.rows
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(split={}, rows={}, cols={}, classes={})",
            self.inner.split.name(),
            self.inner.rows,
            self.inner.cols,
            self.inner.num_classes
        )
    }
}

#[pyclass(name = "Codebook", module = "pyweightshare", skip_from_py_object)]
#[derive(Clone)]
pub struct PyCodebook {
    inner: quantizer::Codebook,
}

#[pymethods]
impl PyCodebook {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: formats::load_codebook(path).map_err(err)?,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        formats::save_codebook(path, &self.inner).map_err(err)
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn k_requested(&self) -> usize {
        self.inner.k_requested
    }

    #[getter]
    fn indices(&self) -> Vec<u32> {
        self.inner.indices.clone()
    }

    #[getter]
    fn cardinalities(&self) -> Vec<u64> {
        self.inner.cardinalities()
    }

    #[getter]
    fn centroids(&self) -> Vec<f64> {
        self.inner.centroids()
    }

    /// `(lower, upper)` for every bin.
    #[getter]
    fn intervals(&self) -> Vec<(f64, f64)> {
        self.inner.bins.iter().map(|b| (b.lower, b.upper)).collect()
    }

    /// Merges adjacent bins `i` and `i + 1`.
    fn merge(&self, i: usize) -> PyResult<Self> {
        Ok(Self {
            inner: merge::merge_bins(&self.inner, i, i + 1).map_err(err)?,
        })
    }

    #[pyo3(signature = (theta = None))]
    fn validate(&self, theta: Option<Vec<f32>>) -> PyResult<()> {
        self.inner.validate(theta.as_deref()).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.d()
    }

    fn __repr__(&self) -> String {
        format!(
            "Codebook(k={}, d={}, n={})",
            self.inner.k_requested,
            self.inner.d(),
            self.inner.n()
        )
    }
}

#[pyclass(name = "HuffmanTable", module = "pyweightshare", skip_from_py_object)]
#[derive(Clone)]
pub struct PyHuffmanTable {
    inner: codec::HuffmanTable,
}

#[pymethods]
impl PyHuffmanTable {
    #[staticmethod]
    fn from_lengths(lengths: Vec<u8>) -> PyResult<Self> {
        Ok(Self {
            inner: codec::HuffmanTable::from_lengths(lengths).map_err(err)?,
        })
    }

    #[getter]
    fn lengths(&self) -> Vec<u32> {
        self.inner.lengths.iter().map(|&l| l as u32).collect()
    }

    /// Code words as strings of `0` and `1`.
    #[getter]
    fn codes(&self) -> Vec<String> {
        (0..self.inner.d())
            .map(|i| self.inner.code_string(i))
            .collect()
    }

    fn kraft_sum(&self) -> f64 {
        self.inner.kraft_sum()
    }

    fn is_prefix_free(&self) -> bool {
        self.inner.is_prefix_free()
    }

    /// Returns `(bytes, bit_len)`.
    fn encode<'py>(
        &self,
        py: Python<'py>,
        indices: Vec<u32>,
    ) -> PyResult<(Bound<'py, PyBytes>, u64)> {
        let s = codec::encode_indices(&indices, &self.inner).map_err(err)?;
        Ok((PyBytes::new(py, &s.bytes), s.bit_len))
    }

    fn decode(&self, data: &[u8], bit_len: u64, n: usize) -> PyResult<Vec<u32>> {
        let s = Bitstream {
            bytes: data.to_vec(),
            bit_len,
        };
        codec::decode_indices(&s, &self.inner, n).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.d()
    }

    fn __repr__(&self) -> String {
        format!("HuffmanTable(lengths={:?})", self.inner.lengths)
    }
}

#[pyfunction]
fn uniform_bin(theta: Vec<f32>, k: usize) -> PyResult<PyCodebook> {
    Ok(PyCodebook {
        inner: quantizer::uniform_bin(&theta, k).map_err(err)?,
    })
}

/// Every parameter replaced by its bin centroid.
#[pyfunction]
fn reconstruct(theta: Vec<f32>, codebook: &PyCodebook) -> PyResult<Vec<f32>> {
    let pv = ParameterVector::from_values(theta);
    Ok(quantizer::reconstruct(&pv, &codebook.inner)
        .map_err(err)?
        .values)
}

#[pyfunction]
fn build_huffman(cardinalities: Vec<u64>) -> PyResult<PyHuffmanTable> {
    Ok(PyHuffmanTable {
        inner: codec::build_huffman(&cardinalities).map_err(err)?,
    })
}

#[pyfunction]
fn cr_fixed(n: u64, cardinalities: Vec<u64>) -> PyResult<f64> {
    codec::cr_fixed(n, &cardinalities).map_err(err)
}

#[pyfunction]
fn cr_huffman(n: u64, cardinalities: Vec<u64>, table: &PyHuffmanTable) -> PyResult<f64> {
    codec::cr_huffman(n, &cardinalities, &table.inner).map_err(err)
}

#[pyfunction]
fn avg_bits(table: &PyHuffmanTable, cardinalities: Vec<u64>) -> PyResult<f64> {
    codec::avg_bits(&table.inner, &cardinalities).map_err(err)
}

#[pyfunction]
fn linear_spacing(lb: usize, ub: usize, np: usize) -> PyResult<Vec<usize>> {
    moea::linear_spacing(lb, ub, np).map_err(err)
}

/// Fronts of point indices, best first.
#[pyfunction]
fn non_dominated_sort(points: Vec<(f64, f64)>) -> Vec<Vec<usize>> {
    let pts: Vec<moea::Point> = points.into_iter().map(|(a, b)| [a, b]).collect();
    moea::non_dominated_sort(&pts)
}

#[pyfunction]
fn crowding_distance(points: Vec<(f64, f64)>, front: Vec<usize>) -> Vec<f64> {
    let pts: Vec<moea::Point> = points.into_iter().map(|(a, b)| [a, b]).collect();
    moea::crowding_distance(&pts, &front)
}

#[pyfunction]
fn macro_f1(predictions: Vec<u32>, labels: Vec<u32>, num_classes: usize) -> PyResult<f64> {
    Ok(evaluator::macro_f1(&predictions, &labels, num_classes)
        .map_err(err)?
        .f1)
}

#[pyfunction]
fn evaluate(model: &PyModel, dataset: &PyDataset) -> PyResult<f64> {
    Ok(evaluator::evaluate(&model.inner, &dataset.inner)
        .map_err(err)?
        .f1)
}

/// Returns `(train, validation, test)`.
#[pyfunction]
#[pyo3(signature = (num_classes = 3, samples_per_class = 300, spread = 0.8, seed = 7, dims = 2))]
fn make_blobs(
    num_classes: usize,
    samples_per_class: usize,
    spread: f32,
    seed: u64,
    dims: usize,
) -> PyResult<(PyDataset, PyDataset, PyDataset)> {
    let s = evaluator::make_blobs(&BlobsConfig {
        num_classes,
        samples_per_class,
        spread,
        dims,
        seed,
    })
    .map_err(err)?;
    Ok((
        PyDataset { inner: s.train },
        PyDataset {
            inner: s.validation,
        },
        PyDataset { inner: s.test },
    ))
}

#[pyfunction]
#[pyo3(signature = (train, arch = vec![2, 32, 32, 3], epochs = 200, learning_rate = 0.05, seed = 42))]
fn train_baseline(
    py: Python<'_>,
    train: &PyDataset,
    arch: Vec<usize>,
    epochs: usize,
    learning_rate: f32,
    seed: u64,
) -> PyResult<PyModel> {
    let config = TrainerConfig {
        arch,
        epochs,
        learning_rate,
        seed,
    };
    let data = train.inner.clone();
    let model = py
        .detach(move || evaluator::train_baseline(&data, &config))
        .map_err(err)?;
    Ok(PyModel { inner: model })
}

/// NSGA-II over the bin count. Returns the final front as a list of dicts
/// with keys `k`, `d`, `f1` and `codebook`, ascending by `d`.
#[pyfunction]
#[pyo3(signature = (model, validation, lb = 2, ub = 256, np = 20, max_iter = 10, seed = 1))]
#[allow(clippy::too_many_arguments)]
fn run_search<'py>(
    py: Python<'py>,
    model: &PyModel,
    validation: &PyDataset,
    lb: usize,
    ub: usize,
    np: usize,
    max_iter: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let config = MoeaConfig {
        lb,
        ub,
        population: np,
        max_iter,
        seed,
        ..MoeaConfig::default()
    };
    let (m, v) = (model.inner.clone(), validation.inner.clone());
    let outcome = py
        .detach(move || {
            let theta = weightshare::flatten(&m)?;
            moea::run_search(&config, &theta, &m, &v)
        })
        .map_err(err)?;
    outcome
        .front
        .solutions
        .iter()
        .map(|s| {
            let d = PyDict::new(py);
            d.set_item("k", s.individual.k)?;
            d.set_item("d", s.individual.shared_weights)?;
            d.set_item("f1", s.individual.f1())?;
            let cb = s.codebook.as_ref().map(|c| PyCodebook {
                inner: (**c).clone(),
            });
            d.set_item("codebook", cb)?;
            Ok(d)
        })
        .collect()
}

/// Greedy neighbour merging gated on validation F1.
/// Returns `(codebook, f1_before, f1_after, steps)`.
#[pyfunction]
#[pyo3(signature = (model, codebook, validation, prefer_keep = false))]
fn iterative_merge(
    py: Python<'_>,
    model: &PyModel,
    codebook: &PyCodebook,
    validation: &PyDataset,
    prefer_keep: bool,
) -> PyResult<(PyCodebook, f64, f64, usize)> {
    let policy = if prefer_keep {
        TiePolicy::PreferKeep
    } else {
        TiePolicy::PreferMerge
    };
    let (m, cb, v) = (
        model.inner.clone(),
        codebook.inner.clone(),
        validation.inner.clone(),
    );
    let out = py
        .detach(move || {
            let theta = weightshare::flatten(&m)?;
            merge::iterative_merge(&theta, &m, &cb, &v, policy)
        })
        .map_err(err)?;
    Ok((
        PyCodebook {
            inner: out.codebook,
        },
        out.initial.f1,
        out.report.f1,
        out.log.len(),
    ))
}

#[pymodule]
fn pyweightshare(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyCodebook>()?;
    m.add_class::<PyHuffmanTable>()?;
    m.add_function(wrap_pyfunction!(uniform_bin, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(build_huffman, m)?)?;
    m.add_function(wrap_pyfunction!(cr_fixed, m)?)?;
    m.add_function(wrap_pyfunction!(cr_huffman, m)?)?;
    m.add_function(wrap_pyfunction!(avg_bits, m)?)?;
    m.add_function(wrap_pyfunction!(linear_spacing, m)?)?;
    m.add_function(wrap_pyfunction!(non_dominated_sort, m)?)?;
    m.add_function(wrap_pyfunction!(crowding_distance, m)?)?;
    m.add_function(wrap_pyfunction!(macro_f1, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(make_blobs, m)?)?;
    m.add_function(wrap_pyfunction!(train_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(run_search, m)?)?;
    m.add_function(wrap_pyfunction!(iterative_merge, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
