//! Scalar special functions shared by the correlation and information
//! density code.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

/// Largest argument evaluated with the power series; beyond it the Hankel
/// asymptotic expansion is used.
const J0_SERIES_LIMIT: f64 = 12.0;

/// Zeroth-order Bessel function of the first kind.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= J0_SERIES_LIMIT {
        j0_series(x)
    } else {
        j0_asymptotic(x)
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200 {
        let mf = m as f64;
        term *= q / (mf * mf);
        sum += term;
        // terms shrink monotonically once m exceeds x/2
        if mf > 0.5 * x && term.abs() <= 1e-15 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn j0_asymptotic(x: f64) -> f64 {
    let y = 1.0 / (x * x);
    let p = 1.0 + y * (-9.0 / 128.0 + y * (3675.0 / 32768.0 - y * 2_401_245.0 / 4_194_304.0));
    let q =
        (-1.0 / 8.0 + y * (75.0 / 1024.0 + y * (-59535.0 / 262_144.0 + y * 57_972_915.0 / 33_554_432.0))) / x;
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Standard Gaussian tail probability `Q(x) = P[N(0,1) > x]`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// `ln(sum_i exp(v_i))` without overflow. Returns `-inf` for an empty slice.
pub fn ln_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let s: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + s.ln()
}

/// `10 log10(x)`.
pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Inverse of [`to_db`].
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
