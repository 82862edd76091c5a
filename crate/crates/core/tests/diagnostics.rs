use nrlevy_core::diagnostics::{
    admissible_contrast, default_queries, ks_distance, skeleton_ecf, supercritical_experiment, theorem1_experiment,
    ReplicaRunner, Sequential, Theorem1Options,
};
use nrlevy_core::levy::{characteristic_exponent, LevyTriplet};
use nrlevy_core::noise::Query;
use nrlevy_core::yule_simon::MemoryParameter;
use nrlevy_core::{Complex64, RngStream};

/// Evaluates replicas back to front, as a scheduler might.
struct Reversed;

impl ReplicaRunner for Reversed {
    fn map<T, F>(&self, count: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let mut out: Vec<(usize, T)> = (0..count).rev().map(|i| (i, f(i))).collect();
        out.sort_by_key(|(i, _)| *i);
        out.into_iter().map(|(_, t)| t).collect()
    }
}

/// cf of `(ξ(t_1), ξ(t_2))` for the plain Lévy process, `t_1 <= t_2`.
fn levy_fdd_cf(triplet: &LevyTriplet, q: &Query) -> Complex64 {
    let (t1, t2) = (q.times[0], q.times[1]);
    let both: Vec<f64> = q.theta(0).iter().zip(q.theta(1)).map(|(a, b)| a + b).collect();
    let e1 = characteristic_exponent(triplet, &both).unwrap();
    let e2 = characteristic_exponent(triplet, q.theta(1)).unwrap();
    (-(e1 * t1 + e2 * (t2 - t1))).exp()
}

#[test]
fn replica_order_does_not_change_results() {
    let triplet = LevyTriplet::cauchy();
    let p = MemoryParameter::new(0.5).unwrap();
    let queries = default_queries();
    let stream = RngStream::new(42, 0);
    let a = skeleton_ecf(&triplet, p, &queries, 500, 2_000, stream, &Sequential).unwrap();
    let b = skeleton_ecf(&triplet, p, &queries, 500, 2_000, stream, &Reversed).unwrap();
    assert_eq!(a, b);
}

#[test]
fn vanishing_memory_recovers_the_plain_process() {
    let p = MemoryParameter::new(0.01).unwrap();
    let queries = default_queries();
    let options = Theorem1Options { cf_replicas: 100_000, ..Theorem1Options::default() };
    for triplet in [LevyTriplet::brownian(1), LevyTriplet::cauchy()] {
        let report = theorem1_experiment(
            &triplet,
            p,
            &queries,
            &[100, 1_000],
            4_000,
            options,
            RngStream::new(91, 0),
            &Sequential,
        )
        .unwrap();
        assert!(report.verdict.final_distance < report.verdict.threshold, "{:?}", report.distances);
        for (q, r) in queries.iter().zip(&report.reference) {
            let plain = levy_fdd_cf(&triplet, q);
            assert!((r - plain).norm() < 0.05, "{q:?}: {r} vs {plain}");
        }
    }
}

#[test]
fn supercritical_and_admissible_runs_separate() {
    let schedule = [100, 1_000];
    let replicas = 4_000;
    let stream = RngStream::new(92, 0);
    let sup = supercritical_experiment(1.5, MemoryParameter::new(0.8).unwrap(), 0.5, &schedule, replicas, stream, &Sequential)
        .unwrap();
    let adm = admissible_contrast(
        1.5,
        MemoryParameter::new(0.5).unwrap(),
        0.5,
        &schedule,
        replicas,
        100_000,
        stream,
        &Sequential,
    )
    .unwrap();
    let a = adm.moduli.ecf[1][0].norm();
    let s = sup.ecf[1][0].norm();
    let pooled = (2.0 / replicas as f64).sqrt();
    assert!(a - s > 5.0 * pooled, "admissible {a}, supercritical {s}");
    assert!(sup.distances[1] < sup.distances[0]);
}

#[test]
fn cauchy_increments_pass_ks_against_cauchy() {
    use nrlevy_core::diagnostics::cauchy_cdf;
    use nrlevy_core::levy::increment_sample;
    let mut rng = RngStream::new(93, 0).rng();
    let xs: Vec<f64> = (0..100_000)
        .map(|_| increment_sample(&LevyTriplet::cauchy(), 0.5, &mut rng).unwrap()[0])
        .collect();
    assert!(ks_distance(&xs, |x| cauchy_cdf(x, 0.5)).unwrap() < 0.01);
}
