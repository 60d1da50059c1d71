//! NSGA-II over the bin count `k`, minimising the number of shared weights
//! `d` and the validation error `1 − F1`.

mod operators;
mod search;
mod sorting;

pub use operators::{linear_spacing, pm_mutation, pm_real, sbx_crossover, sbx_real, to_integer};
pub use search::{
    evaluate_population, run_search, run_search_with, CodebookObjective, Evaluation,
    GenerationStats, Objective, SearchOutcome,
};
pub use sorting::{crowding_distance, dominates, non_dominated_sort, ranks, Point};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer::Codebook;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoeaConfig {
    pub lb: usize,
    pub ub: usize,
    #[serde(rename = "np")]
    pub population: usize,
    pub max_iter: usize,
    pub sbx_eta: f64,
    pub sbx_prob: f64,
    pub pm_eta: f64,
    pub seed: u64,
}

impl Default for MoeaConfig {
    fn default() -> Self {
        Self {
            lb: 2,
            ub: 1024,
            population: 100,
            max_iter: 10,
            sbx_eta: 15.0,
            sbx_prob: 0.9,
            pm_eta: 20.0,
            seed: 1,
        }
    }
}

impl MoeaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lb < 2 || self.lb >= self.ub {
            return Err(Error::InvalidConfig(format!(
                "bounds must satisfy 2 <= lb < ub, got [{}, {}]",
                self.lb, self.ub
            )));
        }
        if self.population < 2 {
            return Err(Error::InvalidConfig(format!(
                "population {} must be at least 2",
                self.population
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.sbx_prob) {
            return Err(Error::InvalidConfig(format!(
                "sbx_prob {} outside [0, 1]",
                self.sbx_prob
            )));
        }
        if !(self.sbx_eta >= 0.0 && self.pm_eta >= 0.0) {
            return Err(Error::InvalidConfig(
                "distribution indices must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub k: usize,
    /// First objective: number of shared weights `d`.
    pub shared_weights: usize,
    /// Second objective: `1 − F1` on validation data.
    pub error: f64,
    pub rank: usize,
    pub crowding: f64,
}

impl Individual {
    pub fn objectives(&self) -> Point {
        [self.shared_weights as f64, self.error]
    }

    pub fn f1(&self) -> f64 {
        1.0 - self.error
    }
}

#[derive(Debug, Clone)]
pub struct FrontMember {
    pub individual: Individual,
    /// Absent only for objectives that do not build codebooks.
    pub codebook: Option<Arc<Codebook>>,
}

/// Rank-0 solutions, one per `k`, ascending by `d`.
#[derive(Debug, Clone, Default)]
pub struct ParetoFront {
    pub solutions: Vec<FrontMember>,
}

impl ParetoFront {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn is_mutually_non_dominated(&self) -> bool {
        let pts: Vec<Point> = self
            .solutions
            .iter()
            .map(|s| s.individual.objectives())
            .collect();
        pts.iter().all(|a| pts.iter().all(|b| !dominates(a, b)))
    }
}

/// Members whose validation F1 reaches `tau`.
pub fn filter_by_threshold(front: &ParetoFront, tau: f64) -> Vec<FrontMember> {
    front
        .solutions
        .iter()
        .filter(|s| s.individual.f1() >= tau)
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn member(k: usize, d: usize, f1: f64) -> FrontMember {
        FrontMember {
            individual: Individual {
                k,
                shared_weights: d,
                error: 1.0 - f1,
                rank: 0,
                crowding: 0.0,
            },
            codebook: None,
        }
    }

    #[test]
    fn threshold_filter() {
        let front = ParetoFront {
            solutions: vec![member(5, 4, 0.94), member(9, 8, 0.96)],
        };
        assert_eq!(filter_by_threshold(&front, 0.0).len(), 2);
        assert!(filter_by_threshold(&front, 1.0 + 1e-9).is_empty());
        let kept = filter_by_threshold(&front, 0.95);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].individual.k, 9);
    }

    #[test]
    fn config_validation() {
        assert!(MoeaConfig::default().validate().is_ok());
        let bad = MoeaConfig {
            lb: 10,
            ub: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MoeaConfig {
            lb: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = MoeaConfig {
            population: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
