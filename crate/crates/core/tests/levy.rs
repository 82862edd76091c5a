use nrlevy_core::levy::{characteristic_exponent, increment_sample, Atom, JumpMeasure, LevyTriplet, RadialFn};
use nrlevy_core::{Complex64, RngStream};
use proptest::prelude::*;
use std::sync::Arc;

fn families() -> Vec<LevyTriplet> {
    let atoms = JumpMeasure::finite_atomic(vec![
        Atom { location: vec![0.5, -0.2], mass: 1.5 },
        Atom { location: vec![-2.0, 1.0], mass: 0.3 },
        Atom { location: vec![0.05, 0.0], mass: 4.0 },
    ])
    .unwrap();
    let tempered: RadialFn = Arc::new(|r: f64| (-r).exp() * r.powf(-2.5));
    let radial = JumpMeasure::radial_density(tempered, 1.5).unwrap();
    vec![
        LevyTriplet::brownian(2),
        LevyTriplet::new(2, vec![1.0, 0.5, 0.0, 2.0], vec![0.3, -1.0], JumpMeasure::Zero).unwrap(),
        LevyTriplet::stable(2, 1.2, 0.7).unwrap(),
        LevyTriplet::new(2, vec![0.0; 4], vec![0.1, 0.0], atoms).unwrap(),
        LevyTriplet::new(2, vec![0.0; 4], vec![0.0; 2], radial).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exponent_is_hermitian_with_nonnegative_real_part(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        for t in families() {
            let plus = characteristic_exponent(&t, &[a, b]).unwrap();
            let minus = characteristic_exponent(&t, &[-a, -b]).unwrap();
            let tol = 1e-9 * (1.0 + plus.norm());
            prop_assert!((plus - minus.conj()).norm() <= tol, "{plus} vs {minus}");
            prop_assert!(plus.re >= -tol);
        }
    }

    #[test]
    fn exponents_add_under_superposition(a in -4.0f64..4.0, b in -4.0f64..4.0, i in 0usize..5, j in 0usize..5) {
        let fam = families();
        let sum = fam[i].superpose(&fam[j]).unwrap();
        let lhs = characteristic_exponent(&sum, &[a, b]).unwrap();
        let rhs = characteristic_exponent(&fam[i], &[a, b]).unwrap()
            + characteristic_exponent(&fam[j], &[a, b]).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-9 * (1.0 + rhs.norm()));
    }
}

#[test]
fn cauchy_increment_median_is_the_time_step() {
    let dt = 0.1;
    let mut rng = RngStream::new(61, 0).rng();
    let n = 200_000;
    let mut xs: Vec<f64> = (0..n)
        .map(|_| increment_sample(&LevyTriplet::cauchy(), dt, &mut rng).unwrap()[0].abs())
        .collect();
    xs.sort_by(f64::total_cmp);
    let median = xs[n / 2];
    // the density of |X| at its median is 1/(pi dt)
    let se = 0.5 / (n as f64).sqrt() * std::f64::consts::PI * dt;
    assert!((median - dt).abs() < 4.0 * se, "median {median}");
}

#[test]
fn increment_ecf_matches_exponent_for_sampleable_families() {
    let n = 100_000;
    for (fi, t) in families().into_iter().take(4).enumerate() {
        let dt = 0.3;
        let mut rng = RngStream::new(62, fi as u64).rng();
        let draws: Vec<Vec<f64>> = (0..n).map(|_| increment_sample(&t, dt, &mut rng).unwrap()).collect();
        for k in 0..20 {
            let theta = [0.2 * k as f64 - 1.9, 0.1 * k as f64 - 0.7];
            let ecf = draws
                .iter()
                .map(|x| Complex64::new(0.0, theta[0] * x[0] + theta[1] * x[1]).exp())
                .sum::<Complex64>()
                / n as f64;
            let exact = (-characteristic_exponent(&t, &theta).unwrap() * dt).exp();
            assert!((ecf - exact).norm() < 4.0 / (n as f64).sqrt(), "family {fi}, θ = {theta:?}");
        }
    }
}
