//! Scalar normal-distribution helpers evaluated in log space.
//!
//! The lower tail of the standard normal cdf below `t = -8` is handled by a
//! continued fraction for the Mills ratio, so `log_norm_cdf` and
//! `mills_ratio` stay finite down to `t = -700` and beyond.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `ln(1 / sqrt(2 pi))`.
pub const LN_INV_SQRT_2PI: f64 = -0.918_938_533_204_672_8;

/// Below this point the cdf is evaluated through the continued fraction.
const TAIL_SWITCH: f64 = -8.0;

pub fn norm_pdf(t: f64) -> f64 {
    (LN_INV_SQRT_2PI - 0.5 * t * t).exp()
}

pub fn log_norm_pdf(t: f64) -> f64 {
    LN_INV_SQRT_2PI - 0.5 * t * t
}

pub fn norm_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t * FRAC_1_SQRT_2)
}

/// Upper-tail Mills ratio `(1 - Phi(x)) / phi(x)` for `x >= 8`, by the
/// Laplace continued fraction `1/(x+ 1/(x+ 2/(x+ 3/(x+ ...))))` evaluated
/// with the modified Lentz method.
fn upper_mills_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// `ln Phi(t)`, accurate in both tails.
pub fn log_norm_cdf(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t > 5.0 {
        (-0.5 * libm::erfc(t * FRAC_1_SQRT_2)).ln_1p()
    } else if t >= TAIL_SWITCH {
        (0.5 * libm::erfc(-t * FRAC_1_SQRT_2)).ln()
    } else if t == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        log_norm_pdf(t) + upper_mills_cf(-t).ln()
    }
}

/// `W(t) = phi(t) / Phi(t)`.
pub fn mills_ratio(t: f64) -> f64 {
    if t >= TAIL_SWITCH {
        norm_pdf(t) / norm_cdf(t)
    } else {
        1.0 / upper_mills_cf(-t)
    }
}

/// First two moments of `N(mu_t, sigma_t^2)` truncated to `(0, inf)`.
pub fn tn_moments(mu_t: f64, sigma_t: f64) -> (f64, f64) {
    let w = mills_ratio(mu_t / sigma_t);
    let mean = mu_t + sigma_t * w;
    let second = mu_t * mu_t + sigma_t * sigma_t + mu_t * sigma_t * w;
    (mean, second)
}

/// `ln(exp(a) + exp(b))` with `-inf` handled.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `sqrt(2 / pi)`, the mean of a standard half-normal.
pub fn sqrt_2_over_pi() -> f64 {
    (2.0 / PI).sqrt()
}
