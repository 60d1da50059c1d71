mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_bin, brute_fronts, naive_logits, optimal_code_cost, ulps_f32};
use weightshare::codec::{
    build_huffman, cr_fixed, decode_indices, encode_indices, frequencies, HuffmanTable,
};
use weightshare::evaluator::{logits, macro_f1};
use weightshare::merge::merge_bins;
use weightshare::moea::{non_dominated_sort, Point};
use weightshare::{flatten, reconstruct, uniform_bin, ModelSpec, ParameterVector};

fn arch() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..6, 2..5)
}

fn random_model(arch: &[usize], seed: u64) -> ModelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = ModelSpec::from_arch(arch).unwrap();
    for layer in &mut model.layers {
        layer
            .weights
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-1.0..1.0));
        layer
            .bias
            .iter_mut()
            .for_each(|b| *b = rng.random_range(-1.0..1.0));
    }
    model
}

fn theta() -> impl Strategy<Value = Vec<f32>> {
    prop::collection::vec(-2.0f32..2.0, 2..400).prop_filter("needs a non-degenerate range", |v| {
        v.iter().any(|&x| x != v[0])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn flatten_round_trips(arch in arch(), seed in any::<u64>()) {
        let model = random_model(&arch, seed);
        let theta = flatten(&model).unwrap();
        prop_assert_eq!(theta.len(), model.param_count());
        prop_assert_eq!(weightshare::unflatten(&theta, &model).unwrap(), model);
    }

    #[test]
    fn flatten_is_injective(arch in arch(), seed in any::<u64>(), pos in any::<prop::sample::Index>()) {
        let a = random_model(&arch, seed);
        let theta = flatten(&a).unwrap();
        let i = pos.index(theta.len());
        let mut values = theta.values.clone();
        values[i] += 0.5;
        let b = weightshare::unflatten(&theta.with_values(values).unwrap(), &a).unwrap();
        prop_assert_ne!(flatten(&b).unwrap().values, theta.values);
    }

    #[test]
    fn binning_matches_interval_oracle(theta in theta(), k in 2usize..80) {
        let cb = uniform_bin(&theta, k).unwrap();
        let oracle = brute_bin(&theta, k);
        prop_assert_eq!(&cb.indices, &oracle.indices);
        prop_assert_eq!(cb.cardinalities(), oracle.cardinalities);
        for (got, want) in cb.centroids().iter().zip(&oracle.centroids) {
            prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }
        cb.validate(Some(&theta)).unwrap();
    }

    #[test]
    fn binning_is_permutation_invariant(theta in theta(), k in 2usize..64, seed in any::<u64>()) {
        let mut shuffled: Vec<(usize, f32)> = theta.iter().copied().enumerate().collect();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let values: Vec<f32> = shuffled.iter().map(|p| p.1).collect();
        let a = uniform_bin(&theta, k).unwrap();
        let b = uniform_bin(&values, k).unwrap();
        prop_assert_eq!(a.cardinalities(), b.cardinalities());
        for (x, y) in a.bins.iter().zip(&b.bins) {
            prop_assert!((x.centroid - y.centroid).abs() <= 1e-12);
        }
        for (j, &(orig, _)) in shuffled.iter().enumerate() {
            prop_assert_eq!(b.indices[j], a.indices[orig]);
        }
    }

    #[test]
    fn reconstruction_error_below_bin_width(theta in theta(), k in 2usize..256) {
        let (lo, hi) = weightshare::compute_range(&theta).unwrap();
        let delta = (hi - lo) / k as f64;
        let pv = ParameterVector::from_values(theta.clone());
        let cb = uniform_bin(&theta, k).unwrap();
        let rec = reconstruct(&pv, &cb).unwrap();
        for (a, b) in theta.iter().zip(&rec.values) {
            prop_assert!(((*a as f64) - (*b as f64)).abs() < delta);
        }
    }

    #[test]
    fn merged_centroid_is_member_mean(theta in theta(), k in 3usize..40, picks in prop::collection::vec(any::<prop::sample::Index>(), 1..20)) {
        let mut cb = uniform_bin(&theta, k).unwrap();
        for p in picks {
            if cb.d() < 2 {
                break;
            }
            let i = p.index(cb.d() - 1);
            cb = merge_bins(&cb, i, i + 1).unwrap();
            cb.validate(Some(&theta)).unwrap();
        }
        for (b, bin) in cb.bins.iter().enumerate() {
            let members: Vec<f64> = theta
                .iter()
                .zip(&cb.indices)
                .filter(|(_, &ix)| ix as usize == b)
                .map(|(&v, _)| v as f64)
                .collect();
            prop_assert_eq!(members.len() as u64, bin.cardinality);
            let mean = members.iter().sum::<f64>() / members.len() as f64;
            prop_assert!(ulps_f32(mean as f32, bin.centroid as f32) <= 1);
        }
    }

    #[test]
    fn huffman_codes_are_prefix_free_and_invertible(
        cards in prop::collection::vec(0u64..500, 1..40),
        seed in any::<u64>(),
        n in 0usize..600,
    ) {
        let table = build_huffman(&cards).unwrap();
        prop_assert!(table.is_prefix_free());
        prop_assert!(table.kraft_sum() <= 1.0 + 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = cards.len() as u32;
        let indices: Vec<u32> = (0..n).map(|_| rng.random_range(0..d)).collect();
        let stream = encode_indices(&indices, &table).unwrap();
        let expected: u64 = indices.iter().map(|&i| table.lengths[i as usize] as u64).sum();
        prop_assert_eq!(stream.bit_len, expected);
        prop_assert_eq!(decode_indices(&stream, &table, n).unwrap(), indices);
        let rebuilt = HuffmanTable::from_lengths(table.lengths.clone()).unwrap();
        prop_assert_eq!(rebuilt, table);
    }

    #[test]
    fn huffman_is_optimal(cards in prop::collection::vec(0u64..60, 1..10)) {
        let table = build_huffman(&cards).unwrap();
        let freqs = frequencies(&cards);
        let cost: u64 = freqs.iter().zip(&table.lengths).map(|(f, &l)| f * l as u64).sum();
        prop_assert_eq!(cost, optimal_code_cost(&freqs));
    }

    #[test]
    fn sorting_matches_pairwise_oracle(raw in prop::collection::vec((0u8..12, 0u8..12), 1..60)) {
        let points: Vec<Point> = raw.iter().map(|&(a, b)| [a as f64, b as f64 / 4.0]).collect();
        prop_assert_eq!(non_dominated_sort(&points), brute_fronts(&points));
    }

    #[test]
    fn forward_matches_naive_oracle(arch in arch(), seed in any::<u64>()) {
        let model = random_model(&arch, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let input: Vec<f32> = (0..arch[0]).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = logits(&model, &input).unwrap();
        let want = naive_logits(&model, &input);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((*g as f64 - w).abs() <= 1e-5 * w.abs().max(1.0));
        }
    }

    #[test]
    fn macro_f1_ignores_class_names(
        pairs in prop::collection::vec((0u32..4, 0u32..4), 1..200),
        seed in any::<u64>(),
    ) {
        let mut perm: Vec<u32> = (0..4).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (p, l): (Vec<u32>, Vec<u32>) = pairs.iter().copied().unzip();
        let pp: Vec<u32> = p.iter().map(|&c| perm[c as usize]).collect();
        let lp: Vec<u32> = l.iter().map(|&c| perm[c as usize]).collect();
        let a = macro_f1(&p, &l, 4).unwrap();
        let b = macro_f1(&pp, &lp, 4).unwrap();
        prop_assert!((a.f1 - b.f1).abs() < 1e-12);
        prop_assert_eq!(a.top1_accuracy, b.top1_accuracy);
    }
}

#[test]
fn binning_is_linear_in_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let theta: Vec<f32> = (0..2_000_000)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let start = std::time::Instant::now();
    let cb = uniform_bin(&theta, 1024).unwrap();
    assert_eq!(cb.n(), theta.len());
    assert!(
        start.elapsed().as_secs_f64() < 5.0,
        "binning took {:?}",
        start.elapsed()
    );
}

#[test]
fn fixed_ratio_grows_as_shared_weights_shrink() {
    let n: u64 = 100_000;
    let balanced = |d: usize| {
        let mut cards = vec![n / d as u64; d];
        cards[0] += n - cards.iter().sum::<u64>();
        cr_fixed(n, &cards).unwrap()
    };
    for d in 2..600 {
        assert!(balanced(d) >= balanced(d + 1), "d={d}");
    }
}

#[test]
fn fixed_ratio_approaches_its_limit() {
    // With N much larger than d the centroid table vanishes and the ratio
    // tends to 32 / ceil(log2 d).
    let n: u64 = 10_000_000;
    for d in [2usize, 3, 16, 100, 197, 1024] {
        let mut cards = vec![n / d as u64; d];
        cards[0] += n - cards.iter().sum::<u64>();
        let cr = cr_fixed(n, &cards).unwrap();
        let limit = 32.0 / weightshare::codec::ceil_log2(d) as f64;
        assert!((cr - limit).abs() / limit < 0.01, "d={d}: {cr} vs {limit}");
    }
}
