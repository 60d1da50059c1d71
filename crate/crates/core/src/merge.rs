//! Greedy merging of neighbouring codebook bins, gated on validation F1.
//!
//! A pointer sweeps the bins from the left. At each position the pointed
//! bin is tentatively merged with its left neighbour (`f_L`) and with its
//! right neighbour (`f_R`); both candidates are scored on validation data
//! and compared with the current score `f_curr`. A winning merge is
//! committed and the pointer stays put so the losing neighbour gets another
//! chance against the grown bin. Otherwise the pointer advances. The sweep
//! ends once the pointer moves past the last bin.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::evaluator::{evaluate_codebook, EvalReport};
use crate::model::{ModelSpec, ParameterVector};
use crate::quantizer::{Bin, Codebook};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MergeDecision {
    Left,
    Right,
    Keep,
}

/// How exact ties between the three scores are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// keep > left > right: a merge must strictly improve F1.
    PreferKeep,
    /// left > right > keep: a merge is taken whenever F1 does not drop.
    #[default]
    PreferMerge,
}

/// Strict argmax of `(f_l, f_r, f_curr)` under `policy`. A missing
/// neighbour is passed as `f64::NEG_INFINITY`.
pub fn decide(f_l: f64, f_r: f64, f_curr: f64, policy: TiePolicy) -> MergeDecision {
    let best = f_l.max(f_r).max(f_curr);
    match policy {
        TiePolicy::PreferKeep => {
            if f_curr == best {
                MergeDecision::Keep
            } else if f_l == best {
                MergeDecision::Left
            } else {
                MergeDecision::Right
            }
        }
        TiePolicy::PreferMerge => {
            if f_l == best {
                MergeDecision::Left
            } else if f_r == best {
                MergeDecision::Right
            } else {
                MergeDecision::Keep
            }
        }
    }
}

/// Tie order keep > left > right.
pub fn tie_break(f_l: f64, f_r: f64, f_curr: f64) -> MergeDecision {
    decide(f_l, f_r, f_curr, TiePolicy::PreferKeep)
}

/// Replaces adjacent bins `i` and `j = i + 1` by their union.
///
/// The merged centroid is the count-weighted mean of the two centroids,
/// evaluated as `(sum_i + sum_j) / (|C_i| + |C_j|)` from the stored member
/// sums, which equals the plain mean over the union.
pub fn merge_bins(codebook: &Codebook, i: usize, j: usize) -> Result<Codebook> {
    let d = codebook.d();
    if j != i + 1 {
        return Err(Error::NotAdjacent(i, j));
    }
    if j >= d {
        return Err(Error::IndexOutOfRange { index: j, d });
    }
    let (a, b) = (&codebook.bins[i], &codebook.bins[j]);
    if a.cardinality == 0 || b.cardinality == 0 {
        return Err(Error::Invariant(format!(
            "cannot merge empty bin ({i}, {j})"
        )));
    }
    let cardinality = a.cardinality + b.cardinality;
    let sum = a.sum + b.sum;
    let merged = Bin {
        lower: a.lower,
        upper: b.upper,
        centroid: (sum / cardinality as f64).clamp(a.lower, b.upper),
        cardinality,
        sum,
    };
    let mut bins = Vec::with_capacity(d - 1);
    bins.extend_from_slice(&codebook.bins[..i]);
    bins.push(merged);
    bins.extend_from_slice(&codebook.bins[j + 1..]);
    let j = j as u32;
    let indices = codebook
        .indices
        .iter()
        .map(|&ix| if ix >= j { ix - 1 } else { ix })
        .collect();
    Ok(Codebook {
        k_requested: codebook.k_requested,
        bins,
        indices,
    })
}

/// One pointer position of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub pointer: usize,
    #[serde(rename = "f_L")]
    pub f_left: Option<f64>,
    #[serde(rename = "f_R")]
    pub f_right: Option<f64>,
    /// Score the candidates were compared against.
    pub f_curr: f64,
    pub decision: MergeDecision,
    pub d_after: usize,
}

impl MergeStep {
    /// The adjacent pair committed at this step, if any.
    pub fn merged_pair(&self) -> Option<(usize, usize)> {
        match self.decision {
            MergeDecision::Left => Some((self.pointer - 1, self.pointer)),
            MergeDecision::Right => Some((self.pointer, self.pointer + 1)),
            MergeDecision::Keep => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MergeOutcome {
    pub codebook: Codebook,
    pub initial: EvalReport,
    pub report: EvalReport,
    pub log: Vec<MergeStep>,
}

/// Runs the merge sweep over `codebook`, scoring candidates on `validation`.
pub fn iterative_merge(
    theta: &ParameterVector,
    model: &ModelSpec,
    codebook: &Codebook,
    validation: &Dataset,
    policy: TiePolicy,
) -> Result<MergeOutcome> {
    let initial = evaluate_codebook(model, theta, codebook, validation)?;
    let mut current = codebook.clone();
    let mut report = initial.clone();
    let mut log = Vec::new();
    let mut pointer = 0usize;

    let score = |cb: &Codebook| evaluate_codebook(model, theta, cb, validation);

    while current.d() > 1 && pointer < current.d() {
        let d = current.d();
        let left = if pointer > 0 {
            Some(merge_bins(&current, pointer - 1, pointer)?)
        } else {
            None
        };
        let right = if pointer + 1 < d {
            Some(merge_bins(&current, pointer, pointer + 1)?)
        } else {
            None
        };
        let (left_report, right_report) = rayon::join(
            || left.as_ref().map(score).transpose(),
            || right.as_ref().map(score).transpose(),
        );
        let (left_report, right_report) = (left_report?, right_report?);

        let f_curr = report.f1;
        let f_left = left_report.as_ref().map(|r| r.f1);
        let f_right = right_report.as_ref().map(|r| r.f1);
        let decision = decide(
            f_left.unwrap_or(f64::NEG_INFINITY),
            f_right.unwrap_or(f64::NEG_INFINITY),
            f_curr,
            policy,
        );
        let at = pointer;
        match decision {
            MergeDecision::Left => {
                current = left.unwrap();
                report = left_report.unwrap();
            }
            MergeDecision::Right => {
                current = right.unwrap();
                report = right_report.unwrap();
            }
            MergeDecision::Keep => pointer += 1,
        }
        log.push(MergeStep {
            pointer: at,
            f_left,
            f_right,
            f_curr,
            decision,
            d_after: current.d(),
        });
    }

    Ok(MergeOutcome {
        codebook: current,
        initial,
        report,
        log,
    })
}

/// Serialises a merge log as JSON lines.
pub fn log_to_jsonl(log: &[MergeStep]) -> Result<String> {
    let mut out = String::new();
    for step in log {
        out.push_str(&serde_json::to_string(step)?);
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantizer::uniform_bin;

    #[test]
    fn tie_break_examples() {
        assert_eq!(tie_break(0.9, 0.8, 0.85), MergeDecision::Left);
        assert_eq!(tie_break(0.85, 0.85, 0.85), MergeDecision::Keep);
        assert_eq!(tie_break(0.9, 0.9, 0.85), MergeDecision::Left);
        assert_eq!(tie_break(0.8, 0.9, 0.85), MergeDecision::Right);
    }

    #[test]
    fn prefer_merge_policy() {
        let p = TiePolicy::PreferMerge;
        assert_eq!(decide(0.85, 0.85, 0.85, p), MergeDecision::Left);
        assert_eq!(
            decide(f64::NEG_INFINITY, 0.85, 0.85, p),
            MergeDecision::Right
        );
        assert_eq!(decide(0.8, 0.84, 0.85, p), MergeDecision::Keep);
    }

    #[test]
    fn weighted_centroid() {
        let cb = uniform_bin(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        let m = merge_bins(&cb, 0, 1).unwrap();
        assert_eq!(m.d(), 1);
        assert_eq!(m.bins[0].cardinality, 4);
        assert_eq!(m.bins[0].centroid, 1.5);
        assert_eq!((m.bins[0].lower, m.bins[0].upper), (0.0, 3.0));
        assert_eq!(m.indices, vec![0, 0, 0, 0]);
    }

    #[test]
    fn indices_shift_down_past_the_merge() {
        let cb = uniform_bin(&[0.0, 1.0, 2.0, 3.0], 4).unwrap();
        let m = merge_bins(&cb, 1, 2).unwrap();
        assert_eq!(m.indices, vec![0, 1, 1, 2]);
        m.validate(Some(&[0.0, 1.0, 2.0, 3.0])).unwrap();
    }

    #[test]
    fn non_adjacent_pairs_are_rejected() {
        let cb = uniform_bin(&[0.0, 1.0, 2.0, 3.0], 4).unwrap();
        assert!(matches!(
            merge_bins(&cb, 0, 2),
            Err(Error::NotAdjacent(0, 2))
        ));
        assert!(merge_bins(&cb, 3, 4).is_err());
    }

    #[test]
    fn merged_pair_follows_decision() {
        let step = |decision| MergeStep {
            pointer: 3,
            f_left: None,
            f_right: None,
            f_curr: 0.0,
            decision,
            d_after: 0,
        };
        assert_eq!(step(MergeDecision::Left).merged_pair(), Some((2, 3)));
        assert_eq!(step(MergeDecision::Right).merged_pair(), Some((3, 4)));
        assert_eq!(step(MergeDecision::Keep).merged_pair(), None);
    }
}
