//! Special functions used across the crate.

use core::f64::consts::PI;

#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// `ln B(a, b)`. When one argument is large the difference
/// `ln Γ(a + b) - ln Γ(b)` is taken from Stirling's series directly, so no
/// two large log-gamma values are subtracted.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    if large < 100.0 {
        return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b);
    }
    ln_gamma(small) - ln_gamma_ratio(large, small)
}

/// `ln Γ(x + a) - ln Γ(x)` for `x >= 100`.
fn ln_gamma_ratio(x: f64, a: f64) -> f64 {
    let corr = |y: f64| {
        let y2 = y * y;
        (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / (1260.0 * y2)) / y2) / y
    };
    (x - 0.5) * libm::log1p(a / x) + a * libm::log(x + a) - a + corr(x + a) - corr(x)
}

/// Radial constant `K` of the isotropic `alpha`-stable Lévy measure in `R^dim`
/// whose exponent is `|theta|^alpha`: the measure of `{|x| in dr}` is
/// `K r^{-1-alpha} dr`, with directions uniform on the sphere.
pub fn stable_radial_constant(alpha: f64, dim: usize) -> f64 {
    let d = dim as f64;
    alpha * libm::pow(2.0, alpha) * gamma((alpha + d) / 2.0)
        / (gamma(d / 2.0) * gamma(1.0 - alpha / 2.0))
}

/// `E[cos(s * sigma_1)]` for `sigma` uniform on the unit sphere of `R^dim`.
pub fn sphere_cos_average(s: f64, dim: usize) -> f64 {
    match dim {
        1 => libm::cos(s),
        2 => libm::j0(s),
        3 => {
            if s.abs() < 1e-4 {
                1.0 - s * s / 6.0
            } else {
                libm::sin(s) / s
            }
        }
        _ => 1.0 - sphere_one_minus_cos_average(s, dim),
    }
}

/// `E[1 - cos(s * sigma_1)]` for `sigma` uniform on the unit sphere of
/// `R^dim`, evaluated without cancellation for small `s`.
pub fn sphere_one_minus_cos_average(s: f64, dim: usize) -> f64 {
    let half_sin_sq = |x: f64| {
        let h = libm::sin(0.5 * x);
        2.0 * h * h
    };
    match dim {
        1 => half_sin_sq(s),
        2 => {
            if s.abs() < 1e-2 {
                let s2 = s * s;
                s2 / 4.0 - s2 * s2 / 64.0 + s2 * s2 * s2 / 2304.0
            } else {
                1.0 - libm::j0(s)
            }
        }
        3 => {
            if s.abs() < 1e-2 {
                let s2 = s * s;
                s2 / 6.0 - s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0
            } else {
                1.0 - libm::sin(s) / s
            }
        }
        _ => {
            // sigma_1 = cos(phi) with density proportional to sin(phi)^(d-2) on [0, pi].
            let k = (dim as i32) - 2;
            let f = |phi: f64| half_sin_sq(s * libm::cos(phi)) * libm::pow(libm::sin(phi), k as f64);
            let g = |phi: f64| libm::pow(libm::sin(phi), k as f64);
            let (num, den) = gauss_legendre_pair(f, g, 0.0, PI, 64.max(8 * (s.abs() as usize + 1)).min(4096));
            num / den
        }
    }
}

fn gauss_legendre_pair(
    f: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
) -> (f64, f64) {
    // Five-point Gauss-Legendre on each panel.
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_47,
        0.478_628_670_499_366_47,
        0.236_926_885_056_189_08,
        0.236_926_885_056_189_08,
    ];
    let h = (b - a) / panels as f64;
    let (mut sf, mut sg) = (0.0, 0.0);
    for i in 0..panels {
        let mid = a + (i as f64 + 0.5) * h;
        for (x, w) in X.iter().zip(W.iter()) {
            let t = mid + 0.5 * h * x;
            sf += w * f(t);
            sg += w * g(t);
        }
    }
    (0.5 * h * sf, 0.5 * h * sg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cauchy_radial_constant() {
        // Symmetric Cauchy: density 1/(pi x^2) on each half line.
        assert!((stable_radial_constant(1.0, 1) - 2.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn beta_values() {
        assert!((libm::exp(ln_beta(1.0, 3.0)) - 1.0 / 3.0).abs() < 1e-14);
        assert!((libm::exp(ln_beta(2.0, 3.0)) - 1.0 / 12.0).abs() < 1e-14);
        // B(1, b) = 1/b and B(2, b) = 1/(b(b+1)) on the large-argument branch
        for b in [100.0, 1e4, 1e9, 1e15] {
            assert!((ln_beta(1.0, b) + libm::log(b)).abs() < 1e-13 * libm::log(b));
            assert!((ln_beta(b, 2.0) + libm::log(b) + libm::log(b + 1.0)).abs() < 1e-13 * libm::log(b));
        }
        // both branches agree at the switch
        let lo = ln_gamma(2.5) + ln_gamma(100.0) - ln_gamma(102.5);
        assert!((ln_beta(2.5, 100.0) - lo).abs() < 1e-10);
    }

    #[test]
    fn sphere_average_matches_closed_forms() {
        // d = 2: E cos(s sigma_1) = J_0(s); J_0(1) = 0.7651976865579666.
        assert!((sphere_cos_average(1.0, 2) - 0.765_197_686_557_966_6).abs() < 1e-10);
        // d = 3 through the generic route agrees with sin(s)/s.
        for &s in &[1e-3, 0.3, 2.0, 7.5] {
            let k = 1;
            let generic = {
                let f = |phi: f64| {
                    let h = libm::sin(0.5 * s * libm::cos(phi));
                    2.0 * h * h * libm::pow(libm::sin(phi), k as f64)
                };
                let g = |phi: f64| libm::pow(libm::sin(phi), k as f64);
                let (a, b) = gauss_legendre_pair(f, g, 0.0, PI, 256);
                a / b
            };
            assert!((generic - sphere_one_minus_cos_average(s, 3)).abs() < 1e-10, "s = {s}");
        }
    }
}
