use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operators::{linear_spacing, pm_mutation, sbx_crossover};
use super::sorting::{crowding_distance, non_dominated_sort, Point};
use super::{FrontMember, Individual, MoeaConfig, ParetoFront};
use crate::dataset::Dataset;
use crate::error::Result;
use crate::evaluator::evaluate_codebook;
use crate::model::{ModelSpec, ParameterVector};
use crate::quantizer::{compute_range, uniform_bin_in_range, BinningRequest, Codebook};

/// Objective values for one `k`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub shared_weights: usize,
    pub f1: f64,
    pub codebook: Option<Arc<Codebook>>,
}

/// Maps a bin count to its objectives. Implementations must be pure.
pub trait Objective: Sync {
    fn evaluate(&self, k: usize) -> Result<Evaluation>;
}

/// The network-backed objective: bin θ into `k` bins, count survivors and
/// score the shared-weight network on validation data.
pub struct CodebookObjective<'a> {
    theta: &'a ParameterVector,
    model: &'a ModelSpec,
    validation: &'a Dataset,
    theta_min: f64,
    theta_max: f64,
}

impl<'a> CodebookObjective<'a> {
    /// Scans θ for its range once; every `k` reuses it.
    pub fn new(
        theta: &'a ParameterVector,
        model: &'a ModelSpec,
        validation: &'a Dataset,
    ) -> Result<Self> {
        let (theta_min, theta_max) = compute_range(&theta.values)?;
        Ok(Self {
            theta,
            model,
            validation,
            theta_min,
            theta_max,
        })
    }
}

impl Objective for CodebookObjective<'_> {
    fn evaluate(&self, k: usize) -> Result<Evaluation> {
        let req = BinningRequest::new(self.theta_min, self.theta_max, k)?;
        let codebook = uniform_bin_in_range(&self.theta.values, &req)?;
        let report = evaluate_codebook(self.model, self.theta, &codebook, self.validation)?;
        Ok(Evaluation {
            shared_weights: codebook.d(),
            f1: report.f1,
            codebook: Some(Arc::new(codebook)),
        })
    }
}

/// Memoises evaluations by `k`.
#[derive(Default)]
struct Cache {
    entries: Mutex<BTreeMap<usize, Evaluation>>,
}

impl Cache {
    fn get(&self, k: usize) -> Option<Evaluation> {
        self.entries.lock().unwrap().get(&k).cloned()
    }

    fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    /// Evaluates the uncached `ks` concurrently, then returns all of them.
    fn fill<O: Objective>(&self, ks: &[usize], objective: &O) -> Result<Vec<Evaluation>> {
        let mut missing: Vec<usize> = {
            let entries = self.entries.lock().unwrap();
            ks.iter()
                .copied()
                .filter(|k| !entries.contains_key(k))
                .collect()
        };
        missing.sort_unstable();
        missing.dedup();
        let fresh = missing
            .par_iter()
            .map(|&k| objective.evaluate(k).map(|e| (k, e)))
            .collect::<Result<Vec<_>>>()?;
        {
            let mut entries = self.entries.lock().unwrap();
            entries.extend(fresh);
        }
        Ok(ks.iter().map(|&k| self.get(k).unwrap()).collect())
    }
}

fn individual(k: usize, e: &Evaluation) -> Individual {
    Individual {
        k,
        shared_weights: e.shared_weights,
        error: 1.0 - e.f1,
        rank: 0,
        crowding: 0.0,
    }
}

/// Objectives for every `k` of a population.
pub fn evaluate_population<O: Objective>(ks: &[usize], objective: &O) -> Result<Vec<Individual>> {
    let cache = Cache::default();
    let evals = cache.fill(ks, objective)?;
    Ok(ks
        .iter()
        .zip(&evals)
        .map(|(&k, e)| individual(k, e))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    /// Lowest `1 − F1` in the population after survival.
    pub best_error: f64,
    /// Distinct `k` evaluated so far.
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub front: ParetoFront,
    pub population: Vec<Individual>,
    pub history: Vec<GenerationStats>,
}

/// Sorts `pool` into fronts, writes rank and crowding, and returns the
/// indices of the `keep` survivors.
fn environmental_selection(pool: &mut [Individual], keep: usize) -> Vec<usize> {
    let points: Vec<Point> = pool.iter().map(Individual::objectives).collect();
    let mut survivors = Vec::with_capacity(keep);
    for (rank, front) in non_dominated_sort(&points).into_iter().enumerate() {
        let crowd = crowding_distance(&points, &front);
        for (&i, &c) in front.iter().zip(&crowd) {
            pool[i].rank = rank;
            pool[i].crowding = c;
        }
        if survivors.len() == keep {
            continue;
        }
        if survivors.len() + front.len() <= keep {
            survivors.extend_from_slice(&front);
        } else {
            let mut order: Vec<usize> = (0..front.len()).collect();
            order.sort_by(|&a, &b| crowd[b].total_cmp(&crowd[a]).then(a.cmp(&b)));
            let room = keep - survivors.len();
            survivors.extend(order.into_iter().take(room).map(|o| front[o]));
        }
    }
    survivors
}

/// Binary tournament on (rank, crowding); the first pick wins full ties.
fn tournament<R: Rng>(pop: &[Individual], rng: &mut R) -> usize {
    let a = rng.random_range(0..pop.len());
    let b = rng.random_range(0..pop.len());
    let (pa, pb) = (&pop[a], &pop[b]);
    if pb.rank < pa.rank || (pb.rank == pa.rank && pb.crowding > pa.crowding) {
        b
    } else {
        a
    }
}

/// NSGA-II with a linearly spaced initial population.
pub fn run_search_with<O: Objective>(config: &MoeaConfig, objective: &O) -> Result<SearchOutcome> {
    config.validate()?;
    let MoeaConfig {
        lb,
        ub,
        population: np,
        ..
    } = *config;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let cache = Cache::default();

    let ks = linear_spacing(lb, ub, np)?;
    let evals = cache.fill(&ks, objective)?;
    let mut pop: Vec<Individual> = ks
        .iter()
        .zip(&evals)
        .map(|(&k, e)| individual(k, e))
        .collect();
    let keep = environmental_selection(&mut pop, np);
    debug_assert_eq!(keep.len(), np);

    let mut history = vec![GenerationStats {
        generation: 0,
        best_error: best_error(&pop),
        evaluations: cache.len(),
    }];

    for generation in 1..=config.max_iter {
        let mut child_ks = Vec::with_capacity(np + 1);
        while child_ks.len() < np {
            let p1 = pop[tournament(&pop, &mut rng)].k;
            let p2 = pop[tournament(&pop, &mut rng)].k;
            let (c1, c2) = sbx_crossover(p1, p2, lb, ub, config.sbx_eta, config.sbx_prob, &mut rng);
            child_ks.push(pm_mutation(c1, lb, ub, config.pm_eta, &mut rng));
            child_ks.push(pm_mutation(c2, lb, ub, config.pm_eta, &mut rng));
        }
        child_ks.truncate(np);
        let evals = cache.fill(&child_ks, objective)?;

        let mut pool = pop;
        pool.extend(child_ks.iter().zip(&evals).map(|(&k, e)| individual(k, e)));
        let survivors = environmental_selection(&mut pool, np);
        pop = survivors.into_iter().map(|i| pool[i].clone()).collect();

        history.push(GenerationStats {
            generation,
            best_error: best_error(&pop),
            evaluations: cache.len(),
        });
    }

    // Final front: rank 0 of the last population, one entry per k.
    let points: Vec<Point> = pop.iter().map(Individual::objectives).collect();
    let first = non_dominated_sort(&points)
        .into_iter()
        .next()
        .unwrap_or_default();
    let crowd = crowding_distance(&points, &first);
    let mut by_k: BTreeMap<usize, Individual> = BTreeMap::new();
    for (&i, &c) in first.iter().zip(&crowd) {
        let mut ind = pop[i].clone();
        ind.rank = 0;
        ind.crowding = c;
        by_k.entry(ind.k).or_insert(ind);
    }
    let mut solutions: Vec<FrontMember> = by_k
        .into_values()
        .map(|ind| {
            let codebook = cache.get(ind.k).and_then(|e| e.codebook);
            FrontMember {
                individual: ind,
                codebook,
            }
        })
        .collect();
    solutions.sort_by(|a, b| {
        let (a, b) = (&a.individual, &b.individual);
        a.shared_weights
            .cmp(&b.shared_weights)
            .then(a.error.total_cmp(&b.error))
            .then(a.k.cmp(&b.k))
    });

    Ok(SearchOutcome {
        front: ParetoFront { solutions },
        population: pop,
        history,
    })
}

fn best_error(pop: &[Individual]) -> f64 {
    pop.iter().map(|i| i.error).fold(f64::INFINITY, f64::min)
}

/// Searches `k` for a trained network against its validation split.
pub fn run_search(
    config: &MoeaConfig,
    theta: &ParameterVector,
    model: &ModelSpec,
    validation: &Dataset,
) -> Result<SearchOutcome> {
    let objective = CodebookObjective::new(theta, model, validation)?;
    run_search_with(config, &objective)
}
