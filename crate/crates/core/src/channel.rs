//! WSSUS Rayleigh tapped-delay-line channel: second-order statistics and
//! correlated realizations.
//!
//! Taps are independent across path index `l` and follow the Jakes time
//! autocorrelation `sigma_l^2 * J0(2 pi fdTs dt)` across OFDM symbols. The
//! channel is constant within one OFDM symbol.

use crate::rng::{complex_normal, substream, SimRng};
use crate::special::bessel_j0;
use crate::{CMatrix, Complex64, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Pivots below this magnitude are treated as exact zeros when factoring the
/// Jakes covariance.
const DIAGONAL_LOADING: f64 = 1e-12;

/// Normalised per-path powers `sigma_l^2`, `l = 0..L-1`, summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PowerDelayProfile {
    taps: Vec<f64>,
}

impl PowerDelayProfile {
    /// Builds a profile from positive relative powers, rescaling them to unit
    /// sum.
    pub fn new(powers: Vec<f64>) -> Result<Self> {
        if powers.is_empty() {
            return Err(Error::invalid("power-delay profile needs at least one tap"));
        }
        if let Some(p) = powers.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::invalid(format!("tap power {p} is not positive")));
        }
        let total: f64 = powers.iter().sum();
        Ok(Self {
            taps: powers.into_iter().map(|p| p / total).collect(),
        })
    }

    /// `sigma_l^2 ∝ exp(-decay * l)`.
    pub fn exponential(paths: usize, decay: f64) -> Result<Self> {
        if paths == 0 {
            return Err(Error::invalid("path count must be at least 1"));
        }
        if !(decay.is_finite() && decay >= 0.0) {
            return Err(Error::invalid(format!("decay rate {decay} must be >= 0")));
        }
        Self::new((0..paths).map(|l| (-decay * l as f64).exp()).collect())
    }

    pub fn single_tap() -> Self {
        Self { taps: vec![1.0] }
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// The cyclic prefix has length `L`, so the profile must be shorter than
    /// the DFT size.
    pub fn check_subcarriers(&self, k: usize) -> Result<()> {
        if self.len() >= k {
            return Err(Error::invalid(format!(
                "{} paths do not fit a {k}-subcarrier symbol (need L < K)",
                self.len()
            )));
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for PowerDelayProfile {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PowerDelayProfile> for Vec<f64> {
    fn from(p: PowerDelayProfile) -> Self {
        p.taps
    }
}

/// Normalised Doppler `f_d * T_s` per OFDM symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Doppler {
    fd_ts: f64,
}

impl Doppler {
    pub fn new(fd_ts: f64) -> Result<Self> {
        if !(fd_ts.is_finite() && fd_ts >= 0.0) {
            return Err(Error::invalid(format!("normalised Doppler {fd_ts} must be >= 0")));
        }
        Ok(Self { fd_ts })
    }

    pub fn fd_ts(&self) -> f64 {
        self.fd_ts
    }
}

/// `rho_t(dt) = J0(2 pi fdTs dt)`.
pub fn time_correlation(delta_t: i64, doppler: Doppler) -> f64 {
    bessel_j0(2.0 * PI * doppler.fd_ts * delta_t as f64)
}

/// `rho_f(dk) = sum_l sigma_l^2 exp(-j 2 pi l dk / K)`.
pub fn freq_correlation(delta_k: i64, pdp: &PowerDelayProfile, k: usize) -> Complex64 {
    pdp.taps
        .iter()
        .enumerate()
        .map(|(l, &p)| {
            let ang = -2.0 * PI * ((l as i64 * delta_k).rem_euclid(k as i64)) as f64 / k as f64;
            Complex64::from_polar(p, ang)
        })
        .sum()
}

/// `rho(dk, dt) = E{H[k+dk, t+dt] H*[k, t]}`, which factors exactly into the
/// time and frequency correlations.
pub fn time_freq_correlation(
    delta_k: i64,
    delta_t: i64,
    pdp: &PowerDelayProfile,
    doppler: Doppler,
    k: usize,
) -> Complex64 {
    freq_correlation(delta_k, pdp, k) * time_correlation(delta_t, doppler)
}

/// One channel realisation over a mini-slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGrid {
    /// `h_t(l)`, `L x T`.
    pub taps: CMatrix,
    /// `H[k, t]`, `K x T`.
    pub response: CMatrix,
}

impl ChannelGrid {
    pub fn subcarriers(&self) -> usize {
        self.response.nrows()
    }

    pub fn symbols(&self) -> usize {
        self.response.ncols()
    }
}

/// Lower-triangular factor `F` with `F F^T = C` for a PSD matrix, accepting
/// pivots within the loading tolerance as zero.
fn psd_cholesky(c: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = c.len();
    let mut f = vec![vec![0.0; n]; n];
    for j in 0..n {
        let pivot = c[j][j] - (0..j).map(|s| f[j][s] * f[j][s]).sum::<f64>();
        if pivot < -DIAGONAL_LOADING {
            return Err(Error::NotPositiveSemidefinite { row: j, pivot });
        }
        if pivot <= DIAGONAL_LOADING {
            // rank-deficient direction; the column stays zero
            continue;
        }
        let d = pivot.sqrt();
        f[j][j] = d;
        for i in j + 1..n {
            let s = c[i][j] - (0..j).map(|s| f[i][s] * f[j][s]).sum::<f64>();
            f[i][j] = s / d;
        }
    }
    Ok(f)
}

/// Reusable generator of channel grids for one `(pdp, Doppler, K, T)`
/// configuration.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    tap_std: Vec<f64>,
    time_factor: Vec<Vec<f64>>,
    /// `exp(-j 2 pi k l / K)`, indexed `[k][l]`.
    twiddle: Vec<Vec<Complex64>>,
    symbols: usize,
}

impl ChannelSampler {
    pub fn new(pdp: &PowerDelayProfile, doppler: Doppler, k: usize, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::invalid("mini-slot needs at least one OFDM symbol"));
        }
        pdp.check_subcarriers(k)?;
        let cov: Vec<Vec<f64>> = (0..t)
            .map(|a| {
                (0..t)
                    .map(|b| time_correlation(a as i64 - b as i64, doppler))
                    .collect()
            })
            .collect();
        let time_factor = psd_cholesky(&cov)?;
        let twiddle = (0..k)
            .map(|kk| {
                (0..pdp.len())
                    .map(|l| Complex64::from_polar(1.0, -2.0 * PI * ((kk * l) % k) as f64 / k as f64))
                    .collect()
            })
            .collect();
        Ok(Self {
            tap_std: pdp.taps.iter().map(|p| p.sqrt()).collect(),
            time_factor,
            twiddle,
            symbols: t,
        })
    }

    pub fn sample(&self, rng: &mut SimRng) -> ChannelGrid {
        let paths = self.tap_std.len();
        let t = self.symbols;
        let mut taps = CMatrix::zeros(paths, t);
        let mut innov = vec![Complex64::new(0.0, 0.0); t];
        for l in 0..paths {
            for u in innov.iter_mut() {
                *u = complex_normal(rng, 1.0);
            }
            for tt in 0..t {
                let mut acc = Complex64::new(0.0, 0.0);
                for (s, u) in innov.iter().enumerate().take(tt + 1) {
                    acc += *u * self.time_factor[tt][s];
                }
                taps[(l, tt)] = acc * self.tap_std[l];
            }
        }
        let response = frequency_response(&taps, &self.twiddle);
        ChannelGrid { taps, response }
    }
}

fn frequency_response(taps: &CMatrix, twiddle: &[Vec<Complex64>]) -> CMatrix {
    let k = twiddle.len();
    CMatrix::from_fn(k, taps.ncols(), |kk, t| {
        twiddle[kk]
            .iter()
            .enumerate()
            .map(|(l, w)| taps[(l, t)] * w)
            .sum()
    })
}

/// Draws one `K x T` channel realisation for `seed`.
pub fn sample_channel_grid(
    pdp: &PowerDelayProfile,
    doppler: Doppler,
    k: usize,
    t: usize,
    seed: u64,
) -> Result<ChannelGrid> {
    let sampler = ChannelSampler::new(pdp, doppler, k, t)?;
    Ok(sampler.sample(&mut substream(seed, 0)))
}
