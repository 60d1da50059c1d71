//! Variation operators for the single integer decision variable `k`.
//!
//! SBX and polynomial mutation work on `k` as a real number inside
//! `[lb, ub]`; results are rounded to the nearest integer (ties to even)
//! and clamped back into the bounds.

use rand::Rng;

use crate::error::{Error, Result};

/// `np` integers evenly spaced over `[lb, ub]`, both ends included.
pub fn linear_spacing(lb: usize, ub: usize, np: usize) -> Result<Vec<usize>> {
    if np < 2 {
        return Err(Error::InvalidConfig(format!(
            "population size {np} must be at least 2"
        )));
    }
    if lb > ub {
        return Err(Error::InvalidConfig(format!("lb {lb} > ub {ub}")));
    }
    let step = (ub - lb) as f64 / (np - 1) as f64;
    Ok((0..np)
        .map(|i| {
            if i == np - 1 {
                ub
            } else {
                to_integer(lb as f64 + i as f64 * step, lb, ub)
            }
        })
        .collect())
}

/// Nearest integer (ties to even), clamped to `[lb, ub]`.
pub fn to_integer(value: f64, lb: usize, ub: usize) -> usize {
    let r = value.round_ties_even();
    if r <= lb as f64 {
        lb
    } else if r >= ub as f64 {
        ub
    } else {
        r as usize
    }
}

const EPS: f64 = 1e-14;

/// Spread factor for one side of bounded SBX.
fn sbx_beta_q(u: f64, beta: f64, eta: f64) -> f64 {
    let alpha = 2.0 - beta.powf(-(eta + 1.0));
    if u <= 1.0 / alpha {
        (u * alpha).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
    }
}

/// Bounded simulated binary crossover on real values.
pub fn sbx_real<R: Rng + ?Sized>(
    a: f64,
    b: f64,
    lb: f64,
    ub: f64,
    eta: f64,
    prob: f64,
    rng: &mut R,
) -> (f64, f64) {
    if rng.random::<f64>() >= prob || (a - b).abs() <= EPS {
        return (a, b);
    }
    let (y1, y2) = if a < b { (a, b) } else { (b, a) };
    let u: f64 = rng.random();
    let span = y2 - y1;

    let beta = 1.0 + 2.0 * (y1 - lb) / span;
    let c1 = 0.5 * ((y1 + y2) - sbx_beta_q(u, beta, eta) * span);
    let beta = 1.0 + 2.0 * (ub - y2) / span;
    let c2 = 0.5 * ((y1 + y2) + sbx_beta_q(u, beta, eta) * span);

    let c1 = c1.clamp(lb, ub);
    let c2 = c2.clamp(lb, ub);
    if rng.random_bool(0.5) {
        (c2, c1)
    } else {
        (c1, c2)
    }
}

/// Bounded polynomial mutation on a real value.
pub fn pm_real<R: Rng + ?Sized>(y: f64, lb: f64, ub: f64, eta: f64, rng: &mut R) -> f64 {
    let span = ub - lb;
    if span <= 0.0 {
        return y;
    }
    let delta1 = (y - lb) / span;
    let delta2 = (ub - y) / span;
    let power = 1.0 / (eta + 1.0);
    let u: f64 = rng.random();
    let delta_q = if u < 0.5 {
        let xy = 1.0 - delta1;
        let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(eta + 1.0);
        val.powf(power) - 1.0
    } else {
        let xy = 1.0 - delta2;
        let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(eta + 1.0);
        1.0 - val.powf(power)
    };
    (y + delta_q * span).clamp(lb, ub)
}

/// SBX on two integer parents.
pub fn sbx_crossover<R: Rng + ?Sized>(
    parent_a: usize,
    parent_b: usize,
    lb: usize,
    ub: usize,
    eta: f64,
    prob: f64,
    rng: &mut R,
) -> (usize, usize) {
    let (c1, c2) = sbx_real(
        parent_a as f64,
        parent_b as f64,
        lb as f64,
        ub as f64,
        eta,
        prob,
        rng,
    );
    (to_integer(c1, lb, ub), to_integer(c2, lb, ub))
}

/// Polynomial mutation of an integer `k`.
pub fn pm_mutation<R: Rng + ?Sized>(
    k: usize,
    lb: usize,
    ub: usize,
    eta: f64,
    rng: &mut R,
) -> usize {
    to_integer(pm_real(k as f64, lb as f64, ub as f64, eta, rng), lb, ub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_spacing_examples() {
        assert_eq!(linear_spacing(2, 10, 5).unwrap(), vec![2, 4, 6, 8, 10]);
        assert_eq!(linear_spacing(2, 3, 5).unwrap(), vec![2, 2, 2, 3, 3]);
        assert_eq!(linear_spacing(7, 300, 2).unwrap(), vec![7, 300]);
        assert!(linear_spacing(2, 10, 1).is_err());
    }

    #[test]
    fn linear_spacing_covers_bounds() {
        let ks = linear_spacing(2, 1024, 100).unwrap();
        assert_eq!(ks.len(), 100);
        assert_eq!((ks[0], ks[99]), (2, 1024));
        assert!(ks.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn identical_parents_are_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sbx_crossover(40, 40, 2, 256, 15.0, 0.9, &mut rng), (40, 40));
        }
    }

    #[test]
    fn children_stay_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5000 {
            let a = rng.random_range(2..=20);
            let b = rng.random_range(2..=20);
            let (c1, c2) = sbx_crossover(a, b, 2, 20, 2.0, 1.0, &mut rng);
            assert!((2..=20).contains(&c1) && (2..=20).contains(&c2));
            let m = pm_mutation(a, 2, 20, 1.0, &mut rng);
            assert!((2..=20).contains(&m));
        }
    }

    #[test]
    fn sbx_mean_matches_parent_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let mut total = 0.0;
        for _ in 0..n {
            let (a, b) = sbx_real(10.0, 20.0, 2.0, 256.0, 15.0, 1.0, &mut rng);
            total += a + b;
        }
        let mean = total / (2 * n) as f64;
        assert!((mean - 15.0).abs() < 1.0, "mean {mean}");
    }

    #[test]
    fn no_crossover_when_probability_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(
            sbx_crossover(10, 200, 2, 256, 15.0, 0.0, &mut rng),
            (10, 200)
        );
    }
}
