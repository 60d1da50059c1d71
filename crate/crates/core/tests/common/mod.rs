//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use weightshare::moea::{dominates, Point};

/// Brute-force interval assignment: every value is tested against every
/// raw bin `[min + iΔ, min + (i+1)Δ)` (the last bin closed at `max`), empty
/// bins are dropped and centroids are plain means.
pub struct BruteCodebook {
    pub indices: Vec<u32>,
    pub cardinalities: Vec<u64>,
    pub centroids: Vec<f64>,
}

pub fn brute_bin(theta: &[f32], k: usize) -> BruteCodebook {
    let lo = theta.iter().fold(f32::INFINITY, |a, &b| a.min(b)) as f64;
    let hi = theta.iter().fold(f32::NEG_INFINITY, |a, &b| a.max(b)) as f64;
    let delta = (hi - lo) / k as f64;
    let edge = |i: usize| if i == k { hi } else { lo + i as f64 * delta };
    let mut raw = Vec::with_capacity(theta.len());
    for &v in theta {
        let v = v as f64;
        let hit = (0..k)
            .filter(|&i| {
                let (a, b) = (edge(i), edge(i + 1));
                a <= v && (v < b || (i == k - 1 && v <= b))
            })
            .collect::<Vec<_>>();
        assert_eq!(hit.len(), 1, "value {v} falls in {} raw bins", hit.len());
        raw.push(hit[0]);
    }
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); k];
    for (&b, &v) in raw.iter().zip(theta) {
        members[b].push(v as f64);
    }
    let mut remap = vec![u32::MAX; k];
    let mut cardinalities = Vec::new();
    let mut centroids = Vec::new();
    for (i, m) in members.iter().enumerate() {
        if m.is_empty() {
            continue;
        }
        remap[i] = cardinalities.len() as u32;
        cardinalities.push(m.len() as u64);
        centroids.push(m.iter().sum::<f64>() / m.len() as f64);
    }
    BruteCodebook {
        indices: raw.iter().map(|&b| remap[b]).collect(),
        cardinalities,
        centroids,
    }
}

/// Fronts by repeated peeling with an O(n²) dominance check per layer.
pub fn brute_fronts(points: &[Point]) -> Vec<Vec<usize>> {
    let mut left: Vec<usize> = (0..points.len()).collect();
    let mut fronts = Vec::new();
    while !left.is_empty() {
        let front: Vec<usize> = left
            .iter()
            .copied()
            .filter(|&i| !left.iter().any(|&j| dominates(&points[j], &points[i])))
            .collect();
        left.retain(|i| !front.contains(i));
        fronts.push(front);
    }
    fronts
}

/// Minimum of `Σ f_i · l_i` over every prefix code for `freqs`.
///
/// Searches all non-decreasing length sequences satisfying Kraft, paired
/// with the frequencies sorted in decreasing order (the best pairing for any
/// length multiset). Exponential; intended for `d <= 12`.
pub fn optimal_code_cost(freqs: &[u64]) -> u64 {
    let d = freqs.len();
    if d == 1 {
        return freqs[0];
    }
    let mut f = freqs.to_vec();
    f.sort_unstable_by(|a, b| b.cmp(a));
    let max_len = (d - 1) as u32;
    let unit = 1u64 << max_len;
    let mut best = u64::MAX;
    #[allow(clippy::too_many_arguments)]
    fn go(
        f: &[u64],
        pos: usize,
        min_len: u32,
        max_len: u32,
        used: u64,
        unit: u64,
        cost: u64,
        best: &mut u64,
    ) {
        if cost >= *best {
            return;
        }
        if pos == f.len() {
            *best = cost;
            return;
        }
        let remaining = (f.len() - pos) as u64;
        for l in min_len..=max_len {
            let share = unit >> l;
            // later codes need at least one unit each
            if used + share + (remaining - 1) > unit {
                continue;
            }
            go(
                f,
                pos + 1,
                l,
                max_len,
                used + share,
                unit,
                cost + f[pos] * l as u64,
                best,
            );
        }
    }
    go(&f, 0, 1, max_len, 0, unit, 0, &mut best);
    best
}

/// Dense forward pass in f64 with explicit loops.
pub fn naive_logits(model: &weightshare::ModelSpec, input: &[f32]) -> Vec<f64> {
    use weightshare::Activation;
    let mut x: Vec<f64> = input.iter().map(|&v| v as f64).collect();
    for layer in &model.layers {
        let mut y = vec![0f64; layer.out_dim];
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = layer.bias[r] as f64;
            for (c, xc) in x.iter().enumerate() {
                acc += layer.weights[r * layer.in_dim + c] as f64 * xc;
            }
            *out = match layer.activation {
                Activation::Relu => acc.max(0.0),
                _ => acc,
            };
        }
        x = y;
    }
    x
}

/// Distance in representable f32 steps between two finite values.
pub fn ulps_f32(a: f32, b: f32) -> u32 {
    let key = |x: f32| {
        let bits = x.to_bits() as i32;
        if bits < 0 {
            i32::MIN.wrapping_sub(bits)
        } else {
            bits
        }
    };
    key(a).abs_diff(key(b))
}
