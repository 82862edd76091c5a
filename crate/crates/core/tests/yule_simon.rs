use nrlevy_core::yule_simon::{ys_moment, ys_pmf, ys_process_sample, ys_sample, CountingPath};
use nrlevy_core::RngStream;
use proptest::prelude::*;

const TIMES: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// Bins `1..=9` and `>= 10`.
fn binned(values: impl Iterator<Item = u64>) -> ([f64; 10], f64) {
    let mut counts = [0.0; 10];
    let mut n = 0.0;
    for v in values.filter(|&v| v >= 1) {
        counts[(v.min(10) - 1) as usize] += 1.0;
        n += 1.0;
    }
    (counts, n)
}

fn pmf_bins(rho: f64) -> [f64; 10] {
    let mut probs = [0.0; 10];
    for k in 1..=9u64 {
        probs[(k - 1) as usize] = ys_pmf(k, rho).unwrap();
    }
    probs[9] = 1.0 - probs.iter().sum::<f64>();
    probs
}

fn chi_square(counts: &[f64; 10], n: f64, probs: &[f64; 10]) -> f64 {
    counts.iter().zip(probs).map(|(c, p)| (c - n * p) * (c - n * p) / (n * p)).sum()
}

/// Upper 1% point of the chi-square law with 9 degrees of freedom.
const CHI2_9_99: f64 = 21.666;

fn paths(rho: f64, n: usize, seed: u64) -> Vec<CountingPath> {
    let mut rng = RngStream::new(seed, 0).rng();
    (0..n).map(|_| ys_process_sample(rho, &mut rng).unwrap()).collect()
}

#[test]
fn conditional_marginals_are_yule_simon() {
    let rho = 2.0;
    let sample = paths(rho, 100_000, 21);
    let probs = pmf_bins(rho);
    for t in TIMES {
        let (counts, n) = binned(sample.iter().map(|w| w.value(t)));
        let stat = chi_square(&counts, n, &probs);
        assert!(stat < CHI2_9_99, "t = {t}: chi-square {stat}");
    }
}

#[test]
fn marginals_agree_with_direct_sampler() {
    // pooled two-sample chi-square between value(t) | >= 1 and ys_sample
    let rho = 2.0;
    let sample = paths(rho, 100_000, 22);
    let mut rng = RngStream::new(23, 0).rng();
    let direct: Vec<u64> = (0..100_000).map(|_| ys_sample(rho, &mut rng).unwrap()).collect();
    let (b, nb) = binned(direct.into_iter());
    for t in [0.3, 0.7, 1.0] {
        let (a, na) = binned(sample.iter().map(|w| w.value(t)));
        let mut stat = 0.0;
        for i in 0..10 {
            let pooled = (a[i] + b[i]) / (na + nb);
            let ea = na * pooled;
            let eb = nb * pooled;
            stat += (a[i] - ea) * (a[i] - ea) / ea + (b[i] - eb) * (b[i] - eb) / eb;
        }
        assert!(stat < CHI2_9_99, "t = {t}: chi-square {stat}");
    }
}

#[test]
fn rescaled_paths_are_yule_simon() {
    // given value(t) >= 1, s -> value(st) hits 1 with probability s and has
    // Yule-Simon marginals again
    let rho = 2.0;
    let t = 0.5;
    let sample: Vec<CountingPath> = paths(rho, 200_000, 24)
        .into_iter()
        .filter(|w| w.value(t) >= 1)
        .collect();
    let n = sample.len() as f64;
    let probs = pmf_bins(rho);
    for s in [0.2, 0.5, 0.8] {
        let hit = sample.iter().filter(|w| w.value(s * t) >= 1).count() as f64 / n;
        let se = (s * (1.0 - s) / n).sqrt();
        assert!((hit - s).abs() < 4.0 * se, "s = {s}: {hit}");
        let (counts, m) = binned(sample.iter().map(|w| w.value(s * t)));
        let stat = chi_square(&counts, m, &probs);
        assert!(stat < CHI2_9_99, "s = {s}: chi-square {stat}");
    }
    let rescaled: Vec<CountingPath> = sample.iter().map(|w| w.time_scaled(t)).collect();
    let (counts, m) = binned(rescaled.iter().map(|w| w.terminal()));
    assert!(chi_square(&counts, m, &probs) < CHI2_9_99);
}

fn median_of_batch_means(rho: f64, q: f64, batch: usize, batches: usize, seed: u64) -> f64 {
    let mut means: Vec<f64> = (0..batches)
        .map(|b| {
            let mut rng = RngStream::new(seed, b as u64).rng();
            (0..batch).map(|_| (ys_sample(rho, &mut rng).unwrap() as f64).powf(q)).sum::<f64>() / batch as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    means[batches / 2]
}

#[test]
fn moments_stabilise_below_rho_and_grow_beyond() {
    let rho = 2.0;
    let below_small = median_of_batch_means(rho, 1.5, 1_000, 41, 31);
    let below_large = median_of_batch_means(rho, 1.5, 100_000, 41, 32);
    let exact = ys_moment(1.5, rho).unwrap();
    assert!(below_large / below_small < 1.3, "{below_small} -> {below_large}");
    assert!((below_large - exact).abs() / exact < 0.1, "{below_large} vs {exact}");
    // the sample mean of Y^2.5 grows like N^(1/4)
    let above_small = median_of_batch_means(rho, 2.5, 1_000, 41, 33);
    let above_large = median_of_batch_means(rho, 2.5, 100_000, 41, 34);
    assert!(above_large / above_small > 2.0, "{above_small} -> {above_large}");
    assert_eq!(ys_moment(2.5, rho).unwrap(), f64::INFINITY);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn paths_are_monotone(seed in any::<u64>(), rho in 1.05f64..8.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let mut rng = RngStream::new(seed, 0).rng();
        let w = ys_process_sample(rho, &mut rng).unwrap();
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        prop_assert!(w.value(lo) <= w.value(hi));
        prop_assert_eq!(w.value(1.0), w.terminal());
        prop_assert_eq!(w.jump_times().len() as u64, w.terminal());
    }

    #[test]
    fn pmf_is_decreasing_and_below_one(k in 1u64..100_000, rho in 0.1f64..20.0) {
        let a = ys_pmf(k, rho).unwrap();
        let b = ys_pmf(k + 1, rho).unwrap();
        prop_assert!(b < a && a < 1.0 && b > 0.0);
    }
}
