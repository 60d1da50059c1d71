//! File-based orchestration: train → random-ub → search → merge → encode → report.
//!
//! Each stage reads only the artifacts of earlier stages from the output
//! directory and writes its own, so any stage can be rerun on its own.
//! Output layout:
//!
//! ```text
//! out/
//!   data/{train,validation,test}.wsds   generated datasets
//!   model.wsnn  baseline.json           train
//!   random_ub.json                      random-ub
//!   front.csv  front.json               search
//!   merge/k<k>.wscb  merge/k<k>.log.jsonl  merge/summary.json
//!   encoded/k<k>.wshc  encoded/summary.json
//!   report.json  report.csv
//! ```

mod config;

pub use config::{Flags, Paths, PipelineConfig, OUT_DIR_ENV};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::{avg_bits, ceil_log2, cr_fixed, cr_huffman, CompressionReport, WEIGHT_BITS};
use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::evaluator::{
    evaluate, evaluate_codebook, make_blobs, train_baseline, EvalReport, Threshold,
};
use crate::formats::{self, CompressedModel};
use crate::merge::{iterative_merge, log_to_jsonl};
use crate::model::{flatten, ModelSpec, ParameterVector};
use crate::moea::{filter_by_threshold, run_search, GenerationStats, MoeaConfig};
use crate::quantizer::{uniform_bin, Codebook};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineArtifact {
    pub arch: Vec<usize>,
    pub params: usize,
    pub tau: f64,
    pub validation: EvalReport,
    pub test: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomUbArtifact {
    pub k: usize,
    pub compression: CompressionReport,
    pub validation: EvalReport,
    pub test: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub k: usize,
    pub d: usize,
    pub val_f1: f64,
    pub test_f1: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontArtifact {
    pub config: MoeaConfig,
    pub seed: u64,
    pub tau: f64,
    pub history: Vec<GenerationStats>,
    pub solutions: Vec<FrontRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeRow {
    pub k: usize,
    pub d: usize,
    pub m: usize,
    pub val_f1_before: f64,
    pub val_f1: f64,
    pub test_f1: f64,
    pub top1: f64,
    pub accepted: bool,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeArtifact {
    pub tau: f64,
    pub solutions: Vec<MergeRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedRow {
    pub k: usize,
    /// `merged` or `mo-ub`, the codebook the file was built from.
    pub source: String,
    pub file: String,
    pub file_bytes: u64,
    pub compression: CompressionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedArtifact {
    pub solutions: Vec<EncodedRow>,
}

/// One line of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: String,
    pub k: Option<usize>,
    pub params: usize,
    pub avg_bits: f64,
    pub cr: f64,
    pub top1: f64,
    pub val_f1: f64,
    pub test_f1: f64,
}

pub const METHOD_BASELINE: &str = "Baseline";
pub const METHOD_RANDOM_UB: &str = "Random UB";
pub const METHOD_MO_UB: &str = "MO-UB";
pub const METHOD_MERGE: &str = "MO-UB+M";
pub const METHOD_MERGE_HUFFMAN: &str = "MO-UB+M+H";
pub const METHOD_HUFFMAN: &str = "MO-UB+H";

/// A configured pipeline rooted at its output directory.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
}

struct Loaded {
    model: ModelSpec,
    theta: ParameterVector,
    validation: Dataset,
    test: Dataset,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, stage: &'static str) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            stage,
            path: path.to_path_buf(),
        });
    }
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

fn require(path: PathBuf, stage: &'static str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact { stage, path })
    }
}

fn solution_stem(k: usize) -> String {
    format!("k{k:05}")
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.paths.out_dir
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.out_dir().join(rel)
    }

    fn ensure_dir(&self, rel: &str) -> Result<PathBuf> {
        let dir = self.path(rel);
        fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn data_dir(&self) -> PathBuf {
        self.config
            .paths
            .data_dir
            .clone()
            .unwrap_or_else(|| self.path("data"))
    }

    fn load_split(&self, split: Split) -> Result<Dataset> {
        let dir = self.data_dir();
        for ext in ["wsds", "json"] {
            let p = dir.join(format!("{}.{ext}", split.name()));
            if p.exists() {
                return formats::load_dataset(p, split);
            }
        }
        Err(Error::MissingArtifact {
            stage: "train",
            path: dir.join(format!("{}.wsds", split.name())),
        })
    }

    fn load(&self) -> Result<Loaded> {
        let model = formats::load_model(require(self.path("model.wsnn"), "train")?)?;
        let theta = flatten(&model)?;
        Ok(Loaded {
            model,
            theta,
            validation: self.load_split(Split::Validation)?,
            test: self.load_split(Split::Test)?,
        })
    }

    fn baseline(&self) -> Result<BaselineArtifact> {
        read_json(&self.path("baseline.json"), "train")
    }

    /// Trains the baseline network (generating data first if configured)
    /// and records its validation F1 as the threshold τ.
    pub fn train(&self) -> Result<BaselineArtifact> {
        fs::create_dir_all(self.out_dir())?;
        if self.config.paths.data_dir.is_none() {
            let blobs = self.config.blobs.as_ref().ok_or_else(|| {
                Error::InvalidConfig("no dataset and no [blobs] generator".into())
            })?;
            let splits = make_blobs(blobs)?;
            let dir = self.ensure_dir("data")?;
            formats::save_dataset(dir.join("train.wsds"), &splits.train)?;
            formats::save_dataset(dir.join("validation.wsds"), &splits.validation)?;
            formats::save_dataset(dir.join("test.wsds"), &splits.test)?;
        }
        let train = self.load_split(Split::Train)?;
        let validation = self.load_split(Split::Validation)?;
        let test = self.load_split(Split::Test)?;
        let model = train_baseline(&train, &self.config.trainer)?;
        formats::save_model(self.path("model.wsnn"), &model)?;
        let val = evaluate(&model, &validation)?;
        let artifact = BaselineArtifact {
            arch: model.arch(),
            params: model.param_count(),
            tau: Threshold::new(val.f1)?.tau,
            validation: val,
            test: evaluate(&model, &test)?,
        };
        write_json(&self.path("baseline.json"), &artifact)?;
        Ok(artifact)
    }

    /// Bins with one fixed `k` and reports size and quality.
    pub fn random_ub(&self, k: Option<usize>) -> Result<RandomUbArtifact> {
        let k = k.unwrap_or(self.config.flags.random_ub_k);
        let l = self.load()?;
        let cb = uniform_bin(&l.theta.values, k)?;
        let artifact = RandomUbArtifact {
            k,
            compression: CompressionReport::new(cb.n() as u64, &cb.cardinalities())?,
            validation: evaluate_codebook(&l.model, &l.theta, &cb, &l.validation)?,
            test: evaluate_codebook(&l.model, &l.theta, &cb, &l.test)?,
        };
        write_json(&self.path("random_ub.json"), &artifact)?;
        Ok(artifact)
    }

    /// NSGA-II over `k`; writes the rank-0 front with its τ verdicts.
    pub fn search(&self) -> Result<FrontArtifact> {
        let tau = self.baseline()?.tau;
        let l = self.load()?;
        let outcome = run_search(&self.config.moea, &l.theta, &l.model, &l.validation)?;
        if !outcome.front.is_mutually_non_dominated() {
            return Err(Error::Invariant(
                "search front is not mutually non-dominated".into(),
            ));
        }
        let accepted: Vec<usize> = filter_by_threshold(&outcome.front, tau)
            .iter()
            .map(|s| s.individual.k)
            .collect();
        let mut solutions = Vec::with_capacity(outcome.front.len());
        for s in &outcome.front.solutions {
            let ind = &s.individual;
            let cb = s
                .codebook
                .as_ref()
                .ok_or_else(|| Error::Invariant(format!("no codebook for k={}", ind.k)))?;
            solutions.push(FrontRow {
                k: ind.k,
                d: ind.shared_weights,
                val_f1: ind.f1(),
                test_f1: evaluate_codebook(&l.model, &l.theta, cb, &l.test)?.f1,
                accepted: accepted.contains(&ind.k),
            });
        }
        let artifact = FrontArtifact {
            config: self.config.moea.clone(),
            seed: self.config.moea.seed,
            tau,
            history: outcome.history,
            solutions,
        };
        write_json(&self.path("front.json"), &artifact)?;
        let mut w = csv::Writer::from_path(self.path("front.csv"))?;
        for row in &artifact.solutions {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(artifact)
    }

    fn front(&self) -> Result<FrontArtifact> {
        read_json(&self.path("front.json"), "search")
    }

    /// Merges every accepted front solution and re-applies τ.
    pub fn merge(&self) -> Result<MergeArtifact> {
        let front = self.front()?;
        let l = self.load()?;
        let dir = self.ensure_dir("merge")?;
        let mut solutions = Vec::new();
        for row in front.solutions.iter().filter(|r| r.accepted) {
            let cb = uniform_bin(&l.theta.values, row.k)?;
            let out = iterative_merge(
                &l.theta,
                &l.model,
                &cb,
                &l.validation,
                self.config.flags.tie_policy,
            )?;
            if out.report.f1 < out.initial.f1 {
                return Err(Error::Invariant(format!(
                    "merge lowered validation F1 for k={}",
                    row.k
                )));
            }
            let stem = solution_stem(row.k);
            formats::save_codebook(dir.join(format!("{stem}.wscb")), &out.codebook)?;
            fs::write(
                dir.join(format!("{stem}.log.jsonl")),
                log_to_jsonl(&out.log)?,
            )?;
            let test = evaluate_codebook(&l.model, &l.theta, &out.codebook, &l.test)?;
            solutions.push(MergeRow {
                k: row.k,
                d: cb.d(),
                m: out.codebook.d(),
                val_f1_before: out.initial.f1,
                val_f1: out.report.f1,
                test_f1: test.f1,
                top1: test.top1_accuracy,
                accepted: out.report.f1 >= front.tau,
                steps: out.log.len(),
            });
        }
        let artifact = MergeArtifact {
            tau: front.tau,
            solutions,
        };
        write_json(&dir.join("summary.json"), &artifact)?;
        Ok(artifact)
    }

    fn merged(&self) -> Result<MergeArtifact> {
        read_json(&self.path("merge/summary.json"), "merge")
    }

    fn merged_codebook(&self, k: usize) -> Result<Codebook> {
        let p = require(
            self.path(&format!("merge/{}.wscb", solution_stem(k))),
            "merge",
        )?;
        formats::load_codebook(p)
    }

    /// Codebooks that reach the encoder: merged survivors, or the accepted
    /// front when merging is skipped.
    fn final_codebooks(
        &self,
        theta: &ParameterVector,
    ) -> Result<Vec<(usize, &'static str, Codebook)>> {
        if self.config.flags.skip_merge {
            self.front()?
                .solutions
                .iter()
                .filter(|r| r.accepted)
                .map(|r| Ok((r.k, "mo-ub", uniform_bin(&theta.values, r.k)?)))
                .collect()
        } else {
            self.merged()?
                .solutions
                .iter()
                .filter(|r| r.accepted)
                .map(|r| Ok((r.k, "merged", self.merged_codebook(r.k)?)))
                .collect()
        }
    }

    /// Huffman-codes the final codebooks into WSHC files.
    pub fn encode(&self) -> Result<EncodedArtifact> {
        let l = self.load()?;
        let dir = self.ensure_dir("encoded")?;
        let mut solutions = Vec::new();
        for (k, source, cb) in self.final_codebooks(&l.theta)? {
            let cm = CompressedModel::from_codebook(&cb)?;
            let bytes = cm.to_bytes()?;
            let name = format!("{}.wshc", solution_stem(k));
            fs::write(dir.join(&name), &bytes)?;
            // the stored stream must reproduce the codebook exactly
            if cm.indices()? != cb.indices {
                return Err(Error::Invariant(format!(
                    "WSHC round trip failed for k={k}"
                )));
            }
            solutions.push(EncodedRow {
                k,
                source: source.to_string(),
                file: name,
                file_bytes: bytes.len() as u64,
                compression: CompressionReport::new(cb.n() as u64, &cb.cardinalities())?,
            });
        }
        let artifact = EncodedArtifact { solutions };
        write_json(&dir.join("summary.json"), &artifact)?;
        Ok(artifact)
    }

    /// Aggregates every available stage into one table.
    pub fn report(&self) -> Result<Vec<ReportRow>> {
        let base = self.baseline()?;
        let l = self.load()?;
        let n = l.theta.len() as u64;
        let mut rows = vec![ReportRow {
            method: METHOD_BASELINE.into(),
            k: None,
            params: base.params,
            avg_bits: WEIGHT_BITS as f64,
            cr: 1.0,
            top1: base.test.top1_accuracy,
            val_f1: base.validation.f1,
            test_f1: base.test.f1,
        }];

        let rub_path = self.path("random_ub.json");
        if rub_path.exists() {
            let r: RandomUbArtifact = read_json(&rub_path, "random-ub")?;
            rows.push(ReportRow {
                method: METHOD_RANDOM_UB.into(),
                k: Some(r.k),
                params: r.compression.d,
                avg_bits: r.compression.fixed_bits as f64,
                cr: r.compression.cr_fixed,
                top1: r.test.top1_accuracy,
                val_f1: r.validation.f1,
                test_f1: r.test.f1,
            });
        }

        let front = self.front()?;
        for row in front.solutions.iter().filter(|r| r.accepted) {
            let cb = uniform_bin(&l.theta.values, row.k)?;
            let test = evaluate_codebook(&l.model, &l.theta, &cb, &l.test)?;
            rows.push(ReportRow {
                method: METHOD_MO_UB.into(),
                k: Some(row.k),
                params: cb.d(),
                avg_bits: ceil_log2(cb.d()) as f64,
                cr: cr_fixed(n, &cb.cardinalities())?,
                top1: test.top1_accuracy,
                val_f1: row.val_f1,
                test_f1: test.f1,
            });
        }

        let merged = if self.config.flags.skip_merge {
            None
        } else {
            Some(self.merged()?)
        };
        if let Some(merged) = &merged {
            for row in merged.solutions.iter().filter(|r| r.accepted) {
                let cb = self.merged_codebook(row.k)?;
                rows.push(ReportRow {
                    method: METHOD_MERGE.into(),
                    k: Some(row.k),
                    params: cb.d(),
                    avg_bits: ceil_log2(cb.d()) as f64,
                    cr: cr_fixed(n, &cb.cardinalities())?,
                    top1: row.top1,
                    val_f1: row.val_f1,
                    test_f1: row.test_f1,
                });
            }
        }

        if !self.config.flags.skip_huffman {
            let encoded: EncodedArtifact = read_json(&self.path("encoded/summary.json"), "encode")?;
            let method = if merged.is_some() {
                METHOD_MERGE_HUFFMAN
            } else {
                METHOD_HUFFMAN
            };
            for row in &encoded.solutions {
                let cm = CompressedModel::load(require(
                    self.path(&format!("encoded/{}", row.file)),
                    "encode",
                )?)?;
                let cards = cm.cardinalities()?;
                let rebuilt = cm.reconstruct(&l.model)?;
                let val = evaluate(&rebuilt, &l.validation)?;
                let test = evaluate(&rebuilt, &l.test)?;
                rows.push(ReportRow {
                    method: method.into(),
                    k: Some(row.k),
                    params: cm.d(),
                    avg_bits: avg_bits(&cm.table, &cards)?,
                    cr: cr_huffman(n, &cards, &cm.table)?,
                    top1: test.top1_accuracy,
                    val_f1: val.f1,
                    test_f1: test.f1,
                });
            }
        }

        write_json(&self.path("report.json"), &rows)?;
        let mut w = csv::Writer::from_path(self.path("report.csv"))?;
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(rows)
    }

    /// Every stage in order, honouring the skip flags.
    pub fn run_all(&self) -> Result<Vec<ReportRow>> {
        self.train()?;
        self.random_ub(None)?;
        self.search()?;
        if !self.config.flags.skip_merge {
            self.merge()?;
        }
        if !self.config.flags.skip_huffman {
            self.encode()?;
        }
        self.report()
    }
}
