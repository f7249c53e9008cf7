//! Pilot-based channel estimation for the coherent scheme and its error
//! budget.
//!
//! Pilot symbols carry the value 1 on every `delta_sub`-th subcarrier
//! starting at `k = 0`. Pilot subcarriers are estimated jointly by LMMSE,
//! the subcarriers in between by linear interpolation (linear extrapolation
//! past the last pilot), and symbols without pilots reuse the estimates of
//! the nearest preceding pilot symbol.
//!
//! Three views of the mean squared estimation error are provided:
//!
//! * [`MseBreakdown::closed_form`]: per-region closed forms that treat the
//!   LMMSE error as white and independent of the channel.
//! * [`exact_mse`]: the exact second-order error of the same estimator,
//!   computed from the channel correlation functions.
//! * [`empirical_mse`]: Monte Carlo over channel and noise draws.

use crate::channel::{freq_correlation, time_correlation, ChannelSampler, Doppler, PowerDelayProfile};
use crate::grid::MiniSlotGrid;
use crate::rng::complex_normal;
use crate::stats::{parallel_chunks, Moments};
use crate::{CMatrix, Complex64, Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Value transmitted on every pilot resource element.
pub const PILOT_VALUE: f64 = 1.0;

/// Channel autocorrelation across the pilot subcarriers of one symbol, with
/// its eigenvalues.
#[derive(Debug, Clone)]
pub struct PilotCovariance {
    r: CMatrix,
    eigenvalues: Vec<f64>,
}

impl PilotCovariance {
    /// `R[i, j] = rho_f((i - j) delta_sub)` for `lambda_p = K / delta_sub`
    /// pilots.
    pub fn new(pdp: &PowerDelayProfile, k: usize, delta_sub: usize) -> Result<Self> {
        if delta_sub == 0 || !k.is_multiple_of(delta_sub) {
            return Err(Error::invalid(format!(
                "pilot spacing {delta_sub} must divide K = {k}"
            )));
        }
        pdp.check_subcarriers(k)?;
        let lp = k / delta_sub;
        let r = CMatrix::from_fn(lp, lp, |i, j| {
            freq_correlation((i as i64 - j as i64) * delta_sub as i64, pdp, k)
        });
        Self::from_matrix(r)
    }

    /// Wraps an arbitrary Hermitian positive semidefinite matrix.
    pub fn from_matrix(r: CMatrix) -> Result<Self> {
        if !r.is_square() || r.nrows() == 0 {
            return Err(Error::invalid("pilot covariance must be square and non-empty"));
        }
        let scale = r.iter().map(|x| x.norm()).fold(1.0, f64::max);
        if (&r - r.adjoint()).iter().any(|x| x.norm() > 1e-10 * scale) {
            return Err(Error::invalid("pilot covariance is not Hermitian"));
        }
        let eigenvalues: Vec<f64> = r.clone().symmetric_eigenvalues().iter().copied().collect();
        if let Some(min) = eigenvalues.iter().copied().reduce(f64::min) {
            if min < -1e-9 * scale {
                return Err(Error::NotPositiveSemidefinite { row: 0, pivot: min });
            }
        }
        Ok(Self { r, eigenvalues })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.r
    }

    /// Eigenvalues `psi`, clamped at zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|x| x.max(0.0)).collect()
    }

    pub fn len(&self) -> usize {
        self.r.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.r.nrows() == 0
    }

    /// LMMSE filter `W = R (R + I/gamma)^{-1}`.
    pub fn lmmse_filter(&self, gamma: f64) -> Result<CMatrix> {
        check_gamma(gamma)?;
        let n = self.len();
        let a = &self.r + CMatrix::identity(n, n) * Complex64::new(1.0 / gamma, 0.0);
        let chol = a
            .cholesky()
            .ok_or_else(|| Error::Numerical("R + I/gamma is not positive definite".into()))?;
        // W^H = (R + I/gamma)^{-1} R since both factors are Hermitian
        Ok(chol.solve(&self.r).adjoint())
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma.is_finite() && gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("SNR must be positive, got {gamma}")))
    }
}

/// `R (R + I/gamma)^{-1} h_ls`.
pub fn lmmse_estimate(ls: &[Complex64], r: &PilotCovariance, gamma: f64) -> Result<Vec<Complex64>> {
    if ls.len() != r.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} pilot estimates", r.len()),
            actual: format!("{}", ls.len()),
        });
    }
    let w = r.lmmse_filter(gamma)?;
    Ok((w * DVector::from_column_slice(ls)).iter().copied().collect())
}

/// Interpolation weights `(pilot index, weight)` for subcarrier `k`: pilots
/// are used as is, interior subcarriers interpolate between their two
/// neighbouring pilots and subcarriers after the last pilot extrapolate from
/// the last two.
fn interpolation_weights(k: usize, delta_sub: usize, lp: usize) -> [(usize, f64); 2] {
    let lambda = k / delta_sub;
    let kd = (k % delta_sub) as f64;
    let d = delta_sub as f64;
    if kd == 0.0 {
        [(lambda, 1.0), (lambda, 0.0)]
    } else if lambda + 1 < lp {
        [(lambda, (d - kd) / d), (lambda + 1, kd / d)]
    } else {
        [(lp - 2, -kd / d), (lp - 1, (d + kd) / d)]
    }
}

fn check_interpolation(lp: usize, delta_sub: usize) -> Result<()> {
    if delta_sub == 0 {
        return Err(Error::invalid("pilot spacing must be >= 1"));
    }
    if lp < 2 && delta_sub > 1 {
        return Err(Error::invalid(format!(
            "interpolation needs at least two pilots per symbol, got {lp}"
        )));
    }
    Ok(())
}

/// Estimates on all `lambda_p * delta_sub` subcarriers of a pilot symbol from
/// the pilot estimates.
pub fn interpolate_linear(pilots: &[Complex64], delta_sub: usize) -> Result<Vec<Complex64>> {
    let lp = pilots.len();
    check_interpolation(lp, delta_sub)?;
    Ok((0..lp * delta_sub)
        .map(|k| {
            interpolation_weights(k, delta_sub, lp)
                .iter()
                .map(|&(i, w)| pilots[i] * w)
                .sum()
        })
        .collect())
}

/// `(1/lambda_p) sum psi / (gamma psi + 1)`.
pub fn phi_lmmse(r: &PilotCovariance, gamma: f64) -> f64 {
    let psi = r.eigenvalues();
    psi.iter().map(|p| p / (gamma * p + 1.0)).sum::<f64>() / psi.len() as f64
}

/// Matrix form `tr(R (I - (R + I/gamma)^{-1} R)) / lambda_p`.
pub fn phi_lmmse_trace(r: &PilotCovariance, gamma: f64) -> Result<f64> {
    let w = r.lmmse_filter(gamma)?;
    let err = r.matrix() - w * r.matrix();
    Ok(err.trace().re / r.len() as f64)
}

fn re_rho(dk: i64, pdp: &PowerDelayProfile, k: usize) -> f64 {
    freq_correlation(dk, pdp, k).re
}

/// Constant `L` shared by the interpolated and region-B closed forms.
fn interp_constant(pdp: &PowerDelayProfile, k: usize, delta_sub: usize, phi_lmmse: f64) -> f64 {
    let d = delta_sub as f64;
    (5.0 * d - 1.0) / (3.0 * d)
        + (d + 1.0) / (3.0 * d) * re_rho(delta_sub as i64, pdp, k)
        + (2.0 * d - 1.0) / (3.0 * d) * phi_lmmse
}

/// `sum_{k_d} [(d - k_d)/d Re rho(k_d) + k_d/d Re rho(k_d - d)]`.
fn interp_cross(pdp: &PowerDelayProfile, k: usize, delta_sub: usize) -> f64 {
    let d = delta_sub as f64;
    (1..delta_sub)
        .map(|kd| {
            let x = kd as f64;
            (d - x) / d * re_rho(kd as i64, pdp, k) + x / d * re_rho(kd as i64 - delta_sub as i64, pdp, k)
        })
        .sum()
}

/// Closed-form MSE of interpolated subcarriers on a pilot symbol.
pub fn phi_linear(pdp: &PowerDelayProfile, k: usize, delta_sub: usize, phi_lmmse: f64) -> f64 {
    if delta_sub <= 1 {
        return 0.0;
    }
    interp_constant(pdp, k, delta_sub, phi_lmmse)
        - 2.0 / (delta_sub as f64 - 1.0) * interp_cross(pdp, k, delta_sub)
}

/// Closed-form MSE of extrapolated subcarriers after the last pilot, built
/// the same way as [`phi_linear`].
pub fn phi_edge(pdp: &PowerDelayProfile, k: usize, delta_sub: usize, phi_lmmse: f64) -> f64 {
    if delta_sub <= 1 {
        return 0.0;
    }
    let d = delta_sub as f64;
    let rho_d = re_rho(delta_sub as i64, pdp, k);
    let total: f64 = (1..delta_sub)
        .map(|kd| {
            let x = kd as f64;
            let (a, b) = (-x / d, (d + x) / d);
            (a * a + b * b) * (1.0 + phi_lmmse) + 2.0 * a * b * rho_d
                - 2.0 * a * re_rho(kd as i64 + delta_sub as i64, pdp, k)
                - 2.0 * b * re_rho(kd as i64, pdp, k)
                + 1.0
        })
        .sum();
    total / (d - 1.0)
}

/// Closed-form MSE of pilot-subcarrier estimates reused on later symbols.
pub fn phi_region_a(doppler: Doppler, delta_sym: usize, phi_lmmse: f64) -> f64 {
    if delta_sym <= 1 {
        return phi_lmmse;
    }
    let s: f64 = (1..delta_sym)
        .map(|dt| time_correlation(dt as i64, doppler))
        .sum();
    2.0 + phi_lmmse - 2.0 / (delta_sym as f64 - 1.0) * s
}

/// Closed-form MSE of interpolated estimates reused on later symbols. With
/// `delta_sym = 1` this is [`phi_linear`], with `delta_sub = 1` it is
/// [`phi_region_a`].
pub fn phi_region_b(
    pdp: &PowerDelayProfile,
    doppler: Doppler,
    k: usize,
    delta_sub: usize,
    delta_sym: usize,
    phi_lmmse: f64,
) -> f64 {
    if delta_sym <= 1 {
        return phi_linear(pdp, k, delta_sub, phi_lmmse);
    }
    if delta_sub <= 1 {
        return phi_region_a(doppler, delta_sym, phi_lmmse);
    }
    let time: f64 = (1..delta_sym)
        .map(|dt| time_correlation(dt as i64, doppler))
        .sum();
    interp_constant(pdp, k, delta_sub, phi_lmmse)
        - 2.0 / ((delta_sym as f64 - 1.0) * (delta_sub as f64 - 1.0)) * time * interp_cross(pdp, k, delta_sub)
}

/// Weighted average of the region MSEs over one pilot-symbol interval.
pub fn average_mse(
    k: usize,
    lambda_p: usize,
    delta_sym: usize,
    phi_lmmse: f64,
    phi_linear: f64,
    phi_a: f64,
    phi_b: f64,
) -> f64 {
    let (k, lp, ds) = (k as f64, lambda_p as f64, delta_sym as f64);
    (lp * phi_lmmse + (k - lp) * phi_linear + lp * (ds - 1.0) * phi_a + (k - lp) * (ds - 1.0) * phi_b)
        / (k * ds)
}

/// Closed-form estimation error budget of one grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseBreakdown {
    pub phi_lmmse: f64,
    pub phi_linear: f64,
    pub phi_edge: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    /// Average with edge subcarriers counted as interpolated.
    pub sigma_e2: f64,
    /// Average with edge subcarriers weighted separately.
    pub sigma_e2_with_edge: f64,
}

impl MseBreakdown {
    pub fn closed_form(
        grid: &MiniSlotGrid,
        pdp: &PowerDelayProfile,
        doppler: Doppler,
        gamma: f64,
    ) -> Result<Self> {
        check_gamma(gamma)?;
        let (k, ds, dsub, lp) = geometry(grid)?;
        let r = PilotCovariance::new(pdp, k, dsub)?;
        let pl = phi_lmmse(&r, gamma);
        let lin = phi_linear(pdp, k, dsub, pl);
        let edge = phi_edge(pdp, k, dsub, pl);
        let a = phi_region_a(doppler, ds, pl);
        let b = phi_region_b(pdp, doppler, k, dsub, ds, pl);
        let sigma_e2 = average_mse(k, lp, ds, pl, lin, a, b);
        let edge_weight = (dsub - 1) as f64 / (k * ds) as f64;
        let sigma_e2_with_edge = sigma_e2 + edge_weight * (edge - lin);
        Ok(Self {
            phi_lmmse: pl,
            phi_linear: lin,
            phi_edge: edge,
            phi_a: a,
            phi_b: b,
            sigma_e2,
            sigma_e2_with_edge,
        })
    }
}

/// `(K, delta_sym, delta_sub, lambda_p)` of a pilot-carrying grid.
fn geometry(grid: &MiniSlotGrid) -> Result<(usize, usize, usize, usize)> {
    let p = grid
        .pattern()
        .ok_or_else(|| Error::invalid("channel estimation needs a pilot pattern"))?;
    let k = grid.subcarriers();
    let lp = k / p.delta_sub();
    check_interpolation(lp, p.delta_sub())?;
    Ok((k, p.delta_sym(), p.delta_sub(), lp))
}

/// Effective SNR after channel estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSnr {
    pub gamma_hat: f64,
}

/// `(1 - sigma_e2) / (sigma_e2 + sigma_w2)`.
pub fn effective_snr(sigma_e2: f64, sigma_w2: f64) -> Result<EffectiveSnr> {
    if !(sigma_w2.is_finite() && sigma_w2 > 0.0) {
        return Err(Error::invalid(format!(
            "noise variance must be positive, got {sigma_w2}"
        )));
    }
    if sigma_e2.is_nan() || sigma_e2 >= 1.0 {
        return Err(Error::EstimationCollapse { sigma_e2 });
    }
    if sigma_e2 < 0.0 {
        return Err(Error::invalid(format!("estimation MSE {sigma_e2} is negative")));
    }
    Ok(EffectiveSnr {
        gamma_hat: (1.0 - sigma_e2) / (sigma_e2 + sigma_w2),
    })
}

/// Estimation error kind of one resource element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Pilot,
    Linear,
    Edge,
    A,
    B,
    BEdge,
}

fn region(k: usize, delta_sub: usize, lp: usize, pilot_symbol: bool) -> Region {
    let on_pilot = k.is_multiple_of(delta_sub);
    let edge = k > (lp - 1) * delta_sub;
    match (pilot_symbol, on_pilot, edge) {
        (true, true, _) => Region::Pilot,
        (true, false, false) => Region::Linear,
        (true, false, true) => Region::Edge,
        (false, true, _) => Region::A,
        (false, false, false) => Region::B,
        (false, false, true) => Region::BEdge,
    }
}

/// Per-region values of some MSE measure. Regions absent from the grid are
/// `None`. Region B covers reused interpolated estimates only (reused
/// extrapolated estimates enter `average` alone).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionMse<T> {
    pub lmmse: Option<T>,
    pub linear: Option<T>,
    pub edge: Option<T>,
    pub region_a: Option<T>,
    pub region_b: Option<T>,
    /// Over all `K x T` resource elements.
    pub average: T,
}

impl<T> RegionMse<T> {
    fn slot(&mut self, r: Region) -> Option<&mut Option<T>> {
        match r {
            Region::Pilot => Some(&mut self.lmmse),
            Region::Linear => Some(&mut self.linear),
            Region::Edge => Some(&mut self.edge),
            Region::A => Some(&mut self.region_a),
            Region::B => Some(&mut self.region_b),
            Region::BEdge => None,
        }
    }
}

/// Region averages of a per-element error map.
fn region_averages(errors: &DMatrix<f64>, grid: &MiniSlotGrid) -> Result<RegionMse<f64>> {
    let (k, _, dsub, lp) = geometry(grid)?;
    let pattern = grid.pattern().expect("checked by geometry");
    let mut sums: RegionMse<(f64, usize)> = RegionMse {
        lmmse: None,
        linear: None,
        edge: None,
        region_a: None,
        region_b: None,
        average: (0.0, 0),
    };
    for t in 0..grid.symbols() {
        let pilot_symbol = pattern.is_pilot_symbol(t + 1);
        for kk in 0..k {
            let e = errors[(kk, t)];
            sums.average.0 += e;
            sums.average.1 += 1;
            if let Some(slot) = sums.slot(region(kk, dsub, lp, pilot_symbol)) {
                let s = slot.get_or_insert((0.0, 0));
                s.0 += e;
                s.1 += 1;
            }
        }
    }
    let avg = |x: Option<(f64, usize)>| x.map(|(s, n)| s / n as f64);
    Ok(RegionMse {
        lmmse: avg(sums.lmmse),
        linear: avg(sums.linear),
        edge: avg(sums.edge),
        region_a: avg(sums.region_a),
        region_b: avg(sums.region_b),
        average: sums.average.0 / sums.average.1 as f64,
    })
}

/// Exact per-element MSE `E|H_hat - H|^2` of the estimator, `K x T`.
pub fn exact_mse_map(
    grid: &MiniSlotGrid,
    pdp: &PowerDelayProfile,
    doppler: Doppler,
    gamma: f64,
) -> Result<DMatrix<f64>> {
    let (k, _, dsub, lp) = geometry(grid)?;
    let pattern = grid.pattern().expect("checked by geometry");
    let r = PilotCovariance::new(pdp, k, dsub)?;
    let w = r.lmmse_filter(gamma)?;
    // covariance of the pilot estimates
    let est_cov = &w * r.matrix();
    let mut out = DMatrix::zeros(k, grid.symbols());
    for t in 1..=grid.symbols() {
        let lag = (t - pattern.source_symbol(t)) as i64;
        let time = time_correlation(lag, doppler);
        for kk in 0..k {
            let c = DVector::from_fn(lp, |i, _| {
                freq_correlation((i * dsub) as i64 - kk as i64, pdp, k) * time
            });
            let cross = &w * c;
            let a = interpolation_weights(kk, dsub, lp);
            let mut quad = 0.0;
            let mut lin = 0.0;
            for &(i, wi) in &a {
                lin += wi * cross[i].re;
                for &(j, wj) in &a {
                    quad += wi * wj * est_cov[(i, j)].re;
                }
            }
            out[(kk, t - 1)] = (quad - 2.0 * lin + 1.0).max(0.0);
        }
    }
    Ok(out)
}

/// Exact region MSEs of the estimator from second-order channel statistics.
pub fn exact_mse(
    grid: &MiniSlotGrid,
    pdp: &PowerDelayProfile,
    doppler: Doppler,
    gamma: f64,
) -> Result<RegionMse<f64>> {
    region_averages(&exact_mse_map(grid, pdp, doppler, gamma)?, grid)
}

/// Estimates the whole channel grid from received samples of a mini-slot.
#[derive(Debug, Clone)]
pub struct PilotEstimator {
    grid: MiniSlotGrid,
    filter: CMatrix,
}

impl PilotEstimator {
    pub fn new(grid: &MiniSlotGrid, pdp: &PowerDelayProfile, gamma: f64) -> Result<Self> {
        let (k, _, dsub, _) = geometry(grid)?;
        let r = PilotCovariance::new(pdp, k, dsub)?;
        Ok(Self {
            grid: grid.clone(),
            filter: r.lmmse_filter(gamma)?,
        })
    }

    /// `H_hat` (`K x T`) from `z` (`K x T`); only pilot positions of `z` are
    /// read.
    pub fn estimate(&self, z: &CMatrix) -> Result<CMatrix> {
        let (k, t) = (self.grid.subcarriers(), self.grid.symbols());
        if z.shape() != (k, t) {
            return Err(Error::DimensionMismatch {
                expected: format!("{k} x {t}"),
                actual: format!("{} x {}", z.nrows(), z.ncols()),
            });
        }
        let pattern = self.grid.pattern().expect("checked in new");
        let dsub = pattern.delta_sub();
        let lp = k / dsub;
        let mut out = CMatrix::zeros(k, t);
        for &tp in pattern.pilot_symbols() {
            let ls = DVector::from_fn(lp, |i, _| z[(i * dsub, tp - 1)] / PILOT_VALUE);
            let pilots: Vec<Complex64> = (&self.filter * ls).iter().copied().collect();
            let full = interpolate_linear(&pilots, dsub)?;
            out.column_mut(tp - 1).copy_from_slice(&full);
        }
        for tt in 1..=t {
            let src = pattern.source_symbol(tt);
            if src != tt {
                let col = out.column(src - 1).clone_owned();
                out.column_mut(tt - 1).copy_from(&col);
            }
        }
        Ok(out)
    }
}

/// Monte Carlo region MSEs over `n` channel and noise realisations. Each
/// realisation contributes one sample per region: its mean squared error
/// over that region's elements.
pub fn empirical_mse(
    grid: &MiniSlotGrid,
    pdp: &PowerDelayProfile,
    doppler: Doppler,
    gamma: f64,
    n: usize,
    seed: u64,
) -> Result<RegionMse<Moments>> {
    let (k, _, dsub, _) = geometry(grid)?;
    let estimator = PilotEstimator::new(grid, pdp, gamma)?;
    let sampler = ChannelSampler::new(pdp, doppler, k, grid.symbols())?;
    let pattern = grid.pattern().expect("checked by geometry").clone();
    let noise_var = 1.0 / gamma;
    let parts = parallel_chunks(n, seed, |rng, len| -> Result<RegionMse<Moments>> {
        let mut acc = empty_moments();
        for _ in 0..len {
            let ch = sampler.sample(rng);
            let mut z = ch.response.clone();
            for &tp in pattern.pilot_symbols() {
                for kk in (0..k).step_by(dsub) {
                    z[(kk, tp - 1)] += complex_normal(rng, noise_var);
                }
            }
            let est = estimator.estimate(&z)?;
            let errors = DMatrix::from_fn(k, grid.symbols(), |i, j| {
                (est[(i, j)] - ch.response[(i, j)]).norm_sqr()
            });
            let r = region_averages(&errors, grid)?;
            push_region(&mut acc, &r);
        }
        Ok(acc)
    });
    let mut total = empty_moments();
    for p in parts {
        merge_region(&mut total, &p?);
    }
    Ok(total)
}

fn empty_moments() -> RegionMse<Moments> {
    RegionMse {
        lmmse: None,
        linear: None,
        edge: None,
        region_a: None,
        region_b: None,
        average: Moments::default(),
    }
}

fn push_region(acc: &mut RegionMse<Moments>, r: &RegionMse<f64>) {
    let pairs = [
        (&mut acc.lmmse, r.lmmse),
        (&mut acc.linear, r.linear),
        (&mut acc.edge, r.edge),
        (&mut acc.region_a, r.region_a),
        (&mut acc.region_b, r.region_b),
    ];
    for (slot, x) in pairs {
        if let Some(x) = x {
            slot.get_or_insert_with(Moments::default).push(x);
        }
    }
    acc.average.push(r.average);
}

fn merge_region(acc: &mut RegionMse<Moments>, r: &RegionMse<Moments>) {
    let pairs = [
        (&mut acc.lmmse, r.lmmse),
        (&mut acc.linear, r.linear),
        (&mut acc.edge, r.edge),
        (&mut acc.region_a, r.region_a),
        (&mut acc.region_b, r.region_b),
    ];
    for (slot, x) in pairs {
        if let Some(x) = x {
            let merged = slot.map_or(x, |m| m.merge(&x));
            *slot = Some(merged);
        }
    }
    acc.average = acc.average.merge(&r.average);
}
