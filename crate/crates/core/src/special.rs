//! Special functions used by the estimator models: the standard normal law
//! and the regularized incomplete gamma function with both tails kept
//! accurate.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};
use std::f64::consts::{PI, SQRT_2};

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Standard normal cdf Φ(z).
pub fn std_normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        return 1.0;
    }
    if z == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal quantile Φ⁻¹(p) for p in (0, 1).
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        // upper half via the complement keeps symmetry exact
        return -std_normal_quantile_upper(p);
    }
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Φ⁻¹(1 - q) computed from the upper tail mass `q` without forming `1 - q`.
pub fn std_normal_quantile_upper(q: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return f64::NEG_INFINITY;
    }
    SQRT_2 * erfc_inv(2.0 * q)
}

/// Standard normal quantile expressed from a (lower, upper) tail pair, using
/// whichever tail is smaller for precision.
pub fn std_normal_quantile_from_tails(lower: f64, upper: f64) -> f64 {
    if lower <= upper {
        std_normal_quantile(lower)
    } else {
        std_normal_quantile_upper(upper)
    }
}

pub fn ln_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * d * d / var - 0.5 * var.ln() - LN_SQRT_2PI
}

pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
}

/// Regularized incomplete gamma tails `(P(a, x), Q(a, x))`.
///
/// The smaller of the two is evaluated directly (series below the mode,
/// continued fraction above it) and the other is its complement, so a tail
/// of 1e-200 is returned as such rather than rounded to zero.
pub fn reg_gamma_tails(a: f64, x: f64) -> (f64, f64) {
    debug_assert!(a > 0.0);
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if x == f64::INFINITY {
        return (1.0, 0.0);
    }
    if x <= a {
        let p = gamma_lr(a, x);
        (p, 1.0 - p)
    } else {
        let q = gamma_ur(a, x);
        (1.0 - q, q)
    }
}

/// Solves `Q(a, z) = q` for `z > 0`.
///
/// Safeguarded Newton iteration; when `q > 0.5` the equivalent lower-tail
/// equation `P(a, z) = 1 - q` is solved instead.
pub fn reg_gamma_upper_inv(a: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return 0.0;
    }
    let use_upper = q < 0.5;
    let target = if use_upper { q } else { 1.0 - q };
    // f(z) is increasing in z in both branches after the sign flip below.
    let f = |z: f64| {
        let (p, qq) = reg_gamma_tails(a, z);
        if use_upper {
            target - qq
        } else {
            p - target
        }
    };
    let ln_ga = ln_gamma(a);
    let density = |z: f64| ((a - 1.0) * z.ln() - z - ln_ga).exp();

    let mut lo = 0.0_f64;
    let mut hi = a.max(1.0);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fz = f(z);
        if fz == 0.0 {
            return z;
        }
        if fz < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let d = density(z);
        let mut next = if d > 0.0 { z - fz / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - z).abs() <= 1e-15 * z.abs() || hi - lo <= 1e-15 * hi {
            return next;
        }
        z = next;
    }
    z
}

/// Solves `P(a, z) = p` for `z > 0`.
pub fn reg_gamma_lower_inv(a: f64, p: f64) -> f64 {
    reg_gamma_upper_inv(a, 1.0 - p)
}
