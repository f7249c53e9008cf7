//! Reference numerics for tests: deterministic quadrature rules and slow,
//! obviously-correct evaluations that share no code with `minislot`.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// `J0(x) = (1/pi) * int_0^pi cos(x sin theta) dtheta`, trapezoid rule on a
/// periodic integrand (geometric convergence).
pub fn bessel_j0_integral(x: f64) -> f64 {
    let n = 4000;
    let h = PI / n as f64;
    let mut s = 0.5 * (1.0 + 1.0);
    for i in 1..n {
        s += (x * (i as f64 * h).sin()).cos();
    }
    s * h / PI
}

/// Power series of `J0` summed to a fixed large number of terms in extended
/// style (pairs of terms added before accumulation).
pub fn bessel_j0_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut fact = 1.0f64;
    for m in 0..60u32 {
        if m > 0 {
            fact *= m as f64;
        }
        let t = (x / 2.0).powi(2 * m as i32) / (fact * fact);
        if m % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
    }
    sum
}

/// Quadrature rule as `(nodes, weights)`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64) -> Rule {
    let n = diag.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = diag[i];
        if i + 1 < n {
            j[(i, i + 1)] = off[i];
            j[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Gauss-Hermite rule for `E[f(X)]`, `X ~ N(0, 1)`.
pub fn gauss_hermite_normal(n: usize) -> Rule {
    let diag = vec![0.0; n];
    let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let r = golub_welsch(&diag, &off, PI.sqrt());
    Rule {
        nodes: r.nodes.iter().map(|x| x * 2f64.sqrt()).collect(),
        weights: r.weights.iter().map(|w| w / PI.sqrt()).collect(),
    }
}

/// Gauss-Laguerre rule for `E[f(X)]`, `X ~ Exp(1)`.
pub fn gauss_laguerre(n: usize) -> Rule {
    let diag: Vec<f64> = (0..n).map(|k| 2.0 * k as f64 + 1.0).collect();
    let off: Vec<f64> = (1..n).map(|k| k as f64).collect();
    golub_welsch(&diag, &off, 1.0)
}

/// Exact `ln(sum exp)` by sorting and summing from the largest term; slow but
/// independent of the production helper.
pub fn ln_sum_exp_sorted(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| b.total_cmp(a));
    let m = v[0];
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Direct `O(n^2)` DFT with the `1/sqrt(n)` unitary scaling; `sign = -1`
/// is the forward transform.
pub fn naive_dft(re: &[f64], im: &[f64], sign: f64) -> (Vec<f64>, Vec<f64>) {
    let n = re.len();
    let scale = 1.0 / (n as f64).sqrt();
    let mut out_re = vec![0.0; n];
    let mut out_im = vec![0.0; n];
    for k in 0..n {
        for i in 0..n {
            let ang = sign * 2.0 * PI * (k * i) as f64 / n as f64;
            let (s, c) = ang.sin_cos();
            out_re[k] += re[i] * c - im[i] * s;
            out_im[k] += re[i] * s + im[i] * c;
        }
        out_re[k] *= scale;
        out_im[k] *= scale;
    }
    (out_re, out_im)
}

/// Mean and variance of the per-use information density of the
/// differential phase channel, by tensor Gauss-Hermite quadrature of the
/// given order per real dimension.
///
/// The received components `(x1, y1, x2, y2)` are Gaussian with per-component
/// variance `s2 = (1 + g) / (2 g)` and cross-covariance `rho / 2` rotated by
/// the phase difference. Each conditional density is evaluated from an
/// explicitly inverted 4x4 covariance.
pub fn diff_info_quadrature(gamma: f64, rho: f64, order: u32, points: usize) -> (f64, f64) {
    use nalgebra::{Matrix4, Vector4};
    let s2 = (1.0 + gamma) / (2.0 * gamma);
    let eta = rho / 2.0;
    let cov = |phi: f64| {
        let (s, c) = phi.sin_cos();
        Matrix4::new(
            s2,
            0.0,
            eta * c,
            eta * s,
            0.0,
            s2,
            -eta * s,
            eta * c,
            eta * c,
            -eta * s,
            s2,
            0.0,
            eta * s,
            eta * c,
            0.0,
            s2,
        )
    };
    let mats: Vec<(Matrix4<f64>, f64)> = (0..order)
        .map(|m| {
            let c = cov(2.0 * PI * m as f64 / order as f64);
            (
                c.try_inverse().expect("covariance invertible"),
                c.determinant().ln(),
            )
        })
        .collect();
    // whitening of the phase-0 law: (x1, x2) = ((u + v), (u - v)) / sqrt 2
    let su = (s2 + eta).sqrt();
    let sv = (s2 - eta).sqrt();
    let rule = gauss_hermite_normal(points);
    let log2m = (order as f64).log2();
    let (mut m1, mut m2) = (0.0, 0.0);
    let mut logs = vec![0.0; order as usize];
    for (a, wa) in rule.nodes.iter().zip(&rule.weights) {
        for (b, wb) in rule.nodes.iter().zip(&rule.weights) {
            let x1 = (su * a + sv * b) / 2f64.sqrt();
            let x2 = (su * a - sv * b) / 2f64.sqrt();
            for (c, wc) in rule.nodes.iter().zip(&rule.weights) {
                for (d, wd) in rule.nodes.iter().zip(&rule.weights) {
                    let y1 = (su * c + sv * d) / 2f64.sqrt();
                    let y2 = (su * c - sv * d) / 2f64.sqrt();
                    let z = Vector4::new(x1, y1, x2, y2);
                    for (l, (inv, ld)) in logs.iter_mut().zip(&mats) {
                        *l = -0.5 * (z.transpose() * inv * z)[0] - 0.5 * ld;
                    }
                    let l0 = logs[0];
                    let mut v: Vec<f64> = logs.iter().map(|l| l - l0).collect();
                    let i = log2m - ln_sum_exp_sorted(&mut v) / std::f64::consts::LN_2;
                    let w = wa * wb * wc * wd;
                    m1 += w * i;
                    m2 += w * i * i;
                }
            }
        }
    }
    (m1, m2 - m1 * m1)
}

/// Mean and variance of the per-use information density of BPSK over
/// Rayleigh fading with perfect channel knowledge at SNR `gamma`.
///
/// After rotating the noise onto the fading phase the density for either
/// input is `1 - log2(1 + exp(-4 sqrt(g) r n - 4 g r^2))` with `r^2 ~ Exp(1)`
/// and `n ~ N(0, 1/2)`; the two expectations use Gauss-Laguerre and
/// Gauss-Hermite rules of the given orders.
pub fn bpsk_fading_info_quadrature(gamma: f64, laguerre: usize, hermite: usize) -> (f64, f64) {
    let lr = gauss_laguerre(laguerre);
    let hr = gauss_hermite_normal(hermite);
    let (mut m1, mut m2) = (0.0, 0.0);
    for (u, wu) in lr.nodes.iter().zip(&lr.weights) {
        let r = u.sqrt();
        for (x, wx) in hr.nodes.iter().zip(&hr.weights) {
            let n = x / 2f64.sqrt();
            let e = -4.0 * gamma.sqrt() * r * n - 4.0 * gamma * u;
            // log2(1 + e^e) computed stably
            let sp = if e > 0.0 {
                e + (-e).exp().ln_1p()
            } else {
                e.exp().ln_1p()
            };
            let i = 1.0 - sp / std::f64::consts::LN_2;
            m1 += wu * wx * i;
            m2 += wu * wx * i * i;
        }
    }
    (m1, m2 - m1 * m1)
}

/// Symbol error probability of coherent QPSK over Rayleigh fading with
/// perfect channel knowledge at symbol SNR `gamma`, from the Craig-form
/// integral `(1/π) ∫_0^{3π/4} sin²θ / (sin²θ + γ/2) dθ` by composite Simpson.
pub fn qpsk_rayleigh_ser(gamma: f64) -> f64 {
    let f = |t: f64| {
        let s = t.sin().powi(2);
        s / (s + gamma / 2.0)
    };
    let n = 20_000;
    let b = 0.75 * PI;
    let h = b / n as f64;
    let mut acc = f(0.0) + f(b);
    for i in 1..n {
        acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0 / PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_ser_reference_value() {
        assert!((qpsk_rayleigh_ser(10.0) - 0.078_573_056_738_552_78).abs() < 1e-12);
        assert!((qpsk_rayleigh_ser(1e-9) - 0.75).abs() < 1e-4);
    }

    #[test]
    fn hermite_moments() {
        let r = gauss_hermite_normal(20);
        let m = |p: i32| -> f64 { r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p)).sum() };
        assert!((m(0) - 1.0).abs() < 1e-13);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-11);
    }

    #[test]
    fn laguerre_moments() {
        let r = gauss_laguerre(20);
        let m = |p: i32| -> f64 { r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(p)).sum() };
        assert!((m(0) - 1.0).abs() < 1e-12);
        assert!((m(1) - 1.0).abs() < 1e-11);
        assert!((m(3) - 6.0).abs() < 1e-9);
    }

    #[test]
    fn bpsk_quadrature_limits() {
        let (lo, _) = bpsk_fading_info_quadrature(1e-9, 40, 40);
        assert!(lo.abs() < 1e-4);
        let (hi, v) = bpsk_fading_info_quadrature(1e4, 80, 40);
        assert!(hi > 0.999 && v < 1e-3);
    }

    #[test]
    fn diff_quadrature_is_zero_without_correlation() {
        let (i, v) = diff_info_quadrature(5.0, 0.0, 4, 6);
        assert!(i.abs() < 1e-12 && v.abs() < 1e-12);
    }

    #[test]
    fn j0_routes_agree() {
        for &x in &[0.0, 0.5, 1.0, 3.0, 7.0] {
            assert!((bessel_j0_integral(x) - bessel_j0_series(x)).abs() < 1e-12);
        }
    }
}
