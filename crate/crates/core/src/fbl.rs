//! Finite-blocklength performance of the three schemes.
//!
//! Every scheme is reduced to a memoryless channel with capacity-like mean
//! `I` and dispersion-like variance `V` of its per-use information density;
//! the block error rate at blocklength `N` and rate `R` then follows from the
//! normal approximation `Q(sqrt(N / V) (I - R + log2(N) / (2N)))`.
//!
//! Differential schemes use an equivalent channel from the phase difference
//! of two adjacent resource elements to their four real received components;
//! its only channel parameter is the correlation `rho` between the two
//! elements. The coherent scheme uses the fading channel with PSK/QAM input
//! at the SNR left after channel estimation.

use crate::bounds::{BlockSamples, BoundEstimate, DensitySampler, MIN_BLOCKS};
use crate::chanest::{effective_snr, MseBreakdown};
use crate::channel::{freq_correlation, time_correlation, Doppler, PowerDelayProfile};
use crate::constellation::Constellation;
use crate::grid::{data_symbol_count, MiniSlotGrid, Scheme};
use crate::rng::{derive_seed, std_normal, SimRng};
use crate::special::{ln_sum_exp, q_function, to_db};
use crate::stats::{parallel_moments, Moments};
use crate::{Complex64, Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

/// Smallest Monte Carlo sample count accepted for `(I, V)` estimates.
pub const MIN_SAMPLES: usize = 10_000;

/// `|Im rho_f|` above which the real-part approximation of the differential
/// channel is flagged.
pub const IMAG_RHO_WARNING: f64 = 0.05;

/// `(log2(1 + gamma), gamma (2 + gamma) / (1 + gamma)^2)`.
pub fn awgn_capacity_dispersion(gamma: f64) -> Result<(f64, f64)> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::invalid(format!("SNR must be >= 0, got {gamma}")));
    }
    let c = gamma.ln_1p() / LN_2;
    let v = gamma * (2.0 + gamma) / ((1.0 + gamma) * (1.0 + gamma));
    Ok((c, v))
}

/// Normal-approximation block error rate. With `V = 0` the result is a step:
/// 0 below `I + log2(N) / (2N)` and 1 at or above it.
pub fn normal_approx_bler(capacity: f64, dispersion: f64, n: usize, rate: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("blocklength must be >= 1"));
    }
    if dispersion.is_nan() || dispersion < 0.0 || !capacity.is_finite() || !rate.is_finite() {
        return Err(Error::Numerical(format!(
            "invalid normal approximation inputs I = {capacity}, V = {dispersion}, R = {rate}"
        )));
    }
    let nf = n as f64;
    let margin = capacity - rate + nf.log2() / (2.0 * nf);
    if dispersion == 0.0 {
        return Ok(if margin > 0.0 { 0.0 } else { 1.0 });
    }
    Ok(q_function((nf / dispersion).sqrt() * margin))
}

/// Capacity/dispersion estimate with Monte Carlo standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityDispersion {
    pub capacity: f64,
    pub dispersion: f64,
    pub capacity_stderr: f64,
    pub dispersion_stderr: f64,
    pub n_samples: usize,
}

impl CapacityDispersion {
    fn from_moments(m: &Moments) -> Self {
        Self {
            capacity: m.mean(),
            dispersion: m.variance(),
            capacity_stderr: m.mean_stderr(),
            dispersion_stderr: m.variance_stderr(),
            n_samples: m.n as usize,
        }
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "at least {MIN_SAMPLES} Monte Carlo samples are needed, got {n}"
        )));
    }
    Ok(())
}

/// Parameters of the differential equivalent channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffChannelParams {
    pub gamma: f64,
    pub rho: f64,
    pub order: u32,
}

impl DiffChannelParams {
    pub fn new(gamma: f64, rho: f64, order: u32) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid(format!("SNR must be positive, got {gamma}")));
        }
        if rho.is_nan() || rho.abs() > 1.0 {
            return Err(Error::invalid(format!("correlation {rho} outside [-1, 1]")));
        }
        Constellation::psk(order)?;
        let p = Self { gamma, rho, order };
        let (s2, eta) = (p.sigma2(), p.eta());
        if s2 * s2 - eta * eta <= 0.0 {
            return Err(Error::NotPositiveSemidefinite {
                row: 2,
                pivot: s2 * s2 - eta * eta,
            });
        }
        Ok(p)
    }

    /// Per-component variance `(1 + gamma) / (2 gamma)`.
    pub fn sigma2(&self) -> f64 {
        (1.0 + self.gamma) / (2.0 * self.gamma)
    }

    /// Cross-covariance scale `rho / 2`.
    pub fn eta(&self) -> f64 {
        self.rho / 2.0
    }

    /// Coefficient of the phase-dependent quadratic form in the log-density,
    /// `gamma^2 rho / ((1 + gamma)^2 - gamma^2 rho^2)`.
    pub fn coupling(&self) -> f64 {
        let g = self.gamma;
        g * g * self.rho / ((1.0 + g) * (1.0 + g) - g * g * self.rho * self.rho)
    }
}

/// `F(dphi) = (x1 + x2 cos + y2 sin)^2 + (y1 - x2 sin + y2 cos)^2`.
pub fn diff_quadratic_form(z: [f64; 4], dphi: f64) -> f64 {
    let [x1, y1, x2, y2] = z;
    let (s, c) = dphi.sin_cos();
    let a = x1 + x2 * c + y2 * s;
    let b = y1 - x2 * s + y2 * c;
    a * a + b * b
}

/// Natural log of the density of `z = (x1, y1, x2, y2)` given the phase
/// difference `dphi`.
pub fn diff_transition_logpdf(z: [f64; 4], dphi: f64, params: &DiffChannelParams) -> f64 {
    let (s2, eta) = (params.sigma2(), params.eta());
    let det_root = s2 * s2 - eta * eta;
    let energy: f64 = z.iter().map(|x| x * x).sum();
    -(4.0 * PI * PI * det_root).ln()
        + (eta * diff_quadratic_form(z, dphi) - (s2 + eta) * energy) / (2.0 * det_root)
}

const STACK_ORDER: usize = 64;

/// Per-use information density sampler of the differential channel. Draws
/// are taken with phase difference 0; the channel is symmetric under PSK
/// rotations so this is the uniform-input law.
#[derive(Debug, Clone)]
pub struct DiffDensity {
    params: DiffChannelParams,
    coupling: f64,
    /// `exp(-j dphi_m)` for every PSK phase.
    rotations: Vec<Complex64>,
    /// Factor of `(x1, x2)` (and `(y1, y2)`) covariance.
    chol: [f64; 3],
    log2_order: f64,
}

impl DiffDensity {
    pub fn new(params: DiffChannelParams) -> Self {
        let (s2, eta) = (params.sigma2(), params.eta());
        let s = s2.sqrt();
        let off = eta / s;
        let chol = [s, off, (s2 - off * off).max(0.0).sqrt()];
        let m = params.order;
        Self {
            params,
            coupling: params.coupling(),
            rotations: (0..m)
                .map(|i| Complex64::from_polar(1.0, -2.0 * PI * i as f64 / m as f64))
                .collect(),
            chol,
            log2_order: (m as f64).log2(),
        }
    }

    pub fn params(&self) -> &DiffChannelParams {
        &self.params
    }

    /// Information density at the received components `z` when phase
    /// difference 0 was sent.
    pub fn density_at(&self, z: [f64; 4]) -> f64 {
        let z1 = Complex64::new(z[0], z[1]);
        let z2 = Complex64::new(z[2], z[3]);
        // F(dphi_m) - F(0) = 2 Re(a e^{-j dphi_m}) - 2 Re(a), a = conj(z1) z2
        let a = z1.conj() * z2;
        let term = |r: &Complex64| 2.0 * self.coupling * ((a * r).re - a.re);
        let lse = if self.rotations.len() <= STACK_ORDER {
            let mut buf = [0.0f64; STACK_ORDER];
            let ex = &mut buf[..self.rotations.len()];
            for (e, r) in ex.iter_mut().zip(&self.rotations) {
                *e = term(r);
            }
            ln_sum_exp(ex)
        } else {
            ln_sum_exp(&self.rotations.iter().map(term).collect::<Vec<_>>())
        };
        self.log2_order - lse / LN_2
    }

    fn draw_z(&self, rng: &mut SimRng) -> [f64; 4] {
        let [a, b, c] = self.chol;
        let (g1, g2, g3, g4) = (std_normal(rng), std_normal(rng), std_normal(rng), std_normal(rng));
        [a * g1, a * g3, b * g1 + c * g2, b * g3 + c * g4]
    }
}

impl DensitySampler for DiffDensity {
    fn sample(&self, rng: &mut SimRng) -> f64 {
        let z = self.draw_z(rng);
        self.density_at(z)
    }

    fn max_density(&self) -> f64 {
        self.log2_order
    }
}

/// Monte Carlo `(I, V)` of the differential channel.
pub fn diff_capacity_dispersion(
    params: &DiffChannelParams,
    n_samples: usize,
    seed: u64,
) -> Result<CapacityDispersion> {
    check_samples(n_samples)?;
    let d = DiffDensity::new(*params);
    finite(parallel_moments(n_samples, seed, |rng| d.sample(rng)))
}

fn finite(m: Moments) -> Result<CapacityDispersion> {
    let cd = CapacityDispersion::from_moments(&m);
    if cd.capacity.is_finite() && cd.dispersion.is_finite() {
        Ok(cd)
    } else {
        Err(Error::Numerical("non-finite information density".into()))
    }
}

/// Per-use information density sampler of the coherent fading channel with
/// a uniformly drawn alphabet point.
#[derive(Debug, Clone)]
pub struct CoherentDensity {
    amplitude: f64,
    points: Vec<Complex64>,
    log2_order: f64,
}

impl CoherentDensity {
    pub fn new(gamma_hat: f64, constellation: Constellation) -> Result<Self> {
        if !(gamma_hat.is_finite() && gamma_hat >= 0.0) {
            return Err(Error::invalid(format!(
                "effective SNR must be >= 0, got {gamma_hat}"
            )));
        }
        Ok(Self {
            amplitude: gamma_hat.sqrt(),
            points: constellation.points(),
            log2_order: constellation.bits_per_symbol(),
        })
    }

    /// Information density for noise `w`, fading `h` and sent point `j`.
    pub fn density_at(&self, w: Complex64, h: Complex64, j: usize) -> f64 {
        let xj = self.points[j];
        let w2 = w.norm_sqr();
        let ex: Vec<f64> = self
            .points
            .iter()
            .map(|xi| w2 - (w + h * (xj - xi) * self.amplitude).norm_sqr())
            .collect();
        self.log2_order - ln_sum_exp(&ex) / LN_2
    }
}

impl DensitySampler for CoherentDensity {
    fn sample(&self, rng: &mut SimRng) -> f64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let w = Complex64::new(s * std_normal(rng), s * std_normal(rng));
        let h = Complex64::new(s * std_normal(rng), s * std_normal(rng));
        let j = rng.random_range(0..self.points.len());
        self.density_at(w, h, j)
    }

    fn max_density(&self) -> f64 {
        self.log2_order
    }
}

/// Monte Carlo `(I, V)` of the coherent channel at effective SNR `gamma_hat`.
pub fn coherent_capacity_dispersion(
    gamma_hat: f64,
    constellation: Constellation,
    n_samples: usize,
    seed: u64,
) -> Result<CapacityDispersion> {
    check_samples(n_samples)?;
    let d = CoherentDensity::new(gamma_hat, constellation)?;
    finite(parallel_moments(n_samples, seed, |rng| d.sample(rng)))
}

/// Everything needed to evaluate one scheme at one operating point.
#[derive(Debug, Clone)]
pub struct LinkScenario {
    pub grid: MiniSlotGrid,
    pub pdp: PowerDelayProfile,
    pub doppler: Doppler,
    /// Linear SNR `1 / sigma_w^2`.
    pub gamma: f64,
    pub payload_bits: u32,
    pub n_samples: usize,
    pub seed: u64,
}

/// Normal-approximation result of one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FblResult {
    pub scheme: Scheme,
    pub constellation: Constellation,
    /// Data resource elements `N`.
    pub blocklength: usize,
    /// `B / N` bits per use.
    pub rate: f64,
    pub info: CapacityDispersion,
    pub epsilon: f64,
    /// Correlation of the differential equivalent channel.
    pub rho: Option<f64>,
    /// Closed-form estimation budget of the coherent scheme.
    pub mse: Option<MseBreakdown>,
    pub gamma_hat: Option<f64>,
    pub warning: Option<String>,
}

impl FblResult {
    pub fn gamma_hat_db(&self) -> Option<f64> {
        self.gamma_hat.map(to_db)
    }
}

/// Seed used for the information-density samples of `scheme`.
pub fn scheme_seed(seed: u64, scheme: Scheme) -> u64 {
    derive_seed(
        seed,
        match scheme {
            Scheme::Pa => 1,
            Scheme::Fddi => 2,
            Scheme::Tddi => 3,
        },
    )
}

/// Correlation of the differential equivalent channel and an optional
/// fidelity warning. FDDi uses the real part of the adjacent-subcarrier
/// correlation; TDDi the adjacent-symbol time correlation.
pub fn diff_correlation(
    scheme: Scheme,
    pdp: &PowerDelayProfile,
    doppler: Doppler,
    k: usize,
) -> Result<(f64, Option<String>)> {
    match scheme {
        Scheme::Fddi => {
            let r = freq_correlation(1, pdp, k);
            let warning = (r.im.abs() > IMAG_RHO_WARNING).then(|| {
                format!(
                    "adjacent-subcarrier correlation {:.4}{:+.4}j has a large imaginary part; \
                     only the real part enters the differential channel",
                    r.re, r.im
                )
            });
            Ok((r.re, warning))
        }
        Scheme::Tddi => Ok((time_correlation(1, doppler), None)),
        Scheme::Pa => Err(Error::invalid("PA is not a differential scheme")),
    }
}

/// Normal-approximation BLER of `scheme` carrying `payload_bits` on the grid.
pub fn scheme_fbl(scheme: Scheme, constellation: Constellation, sc: &LinkScenario) -> Result<FblResult> {
    if !(sc.gamma.is_finite() && sc.gamma > 0.0) {
        return Err(Error::invalid(format!("SNR must be positive, got {}", sc.gamma)));
    }
    if sc.payload_bits == 0 {
        return Err(Error::invalid("payload must be at least one bit"));
    }
    if scheme.is_differential() && !constellation.is_psk() {
        return Err(Error::invalid(format!(
            "{scheme} needs a PSK alphabet, got {constellation}"
        )));
    }
    sc.pdp.check_subcarriers(sc.grid.subcarriers())?;
    let n = data_symbol_count(&sc.grid, scheme)?;
    let rate = sc.payload_bits as f64 / n as f64;
    let max_rate = constellation.bits_per_symbol();
    if rate > max_rate {
        return Err(Error::InfeasiblePayload {
            bits: sc.payload_bits,
            rate,
            max_rate,
        });
    }
    let seed = scheme_seed(sc.seed, scheme);
    let (info, rho, mse, gamma_hat, warning) = match scheme {
        Scheme::Fddi | Scheme::Tddi => {
            let (rho, warning) = diff_correlation(scheme, &sc.pdp, sc.doppler, sc.grid.subcarriers())?;
            if let Some(w) = &warning {
                log::debug!("{w}");
            }
            let params = DiffChannelParams::new(sc.gamma, rho, constellation.order())?;
            let info = diff_capacity_dispersion(&params, sc.n_samples, seed)?;
            (info, Some(rho), None, None, warning)
        }
        Scheme::Pa => {
            let mse = MseBreakdown::closed_form(&sc.grid, &sc.pdp, sc.doppler, sc.gamma)?;
            let gh = effective_snr(mse.sigma_e2, 1.0 / sc.gamma)?.gamma_hat;
            let info = coherent_capacity_dispersion(gh, constellation, sc.n_samples, seed)?;
            (info, None, Some(mse), Some(gh), None)
        }
    };
    let epsilon = normal_approx_bler(info.capacity, info.dispersion, n, rate)?;
    Ok(FblResult {
        scheme,
        constellation,
        blocklength: n,
        rate,
        info,
        epsilon,
        rho,
        mse,
        gamma_hat,
        warning,
    })
}

/// IS and DT bounds of the scheme evaluated in `result`, from `n_blocks`
/// simulated blocks of `N` uses at the same operating point.
pub fn scheme_bounds(
    result: &FblResult,
    sc: &LinkScenario,
    n_blocks: usize,
) -> Result<(BoundEstimate, BoundEstimate)> {
    if n_blocks < MIN_BLOCKS {
        return Err(Error::invalid(format!(
            "at least {MIN_BLOCKS} blocks are needed, got {n_blocks}"
        )));
    }
    let seed = derive_seed(scheme_seed(sc.seed, result.scheme), 16);
    let n = result.blocklength;
    let blocks = match (result.rho, result.gamma_hat) {
        (Some(rho), _) => {
            let params = DiffChannelParams::new(sc.gamma, rho, result.constellation.order())?;
            BlockSamples::draw(&DiffDensity::new(params), n, n_blocks, seed)?
        }
        (None, Some(gh)) => BlockSamples::draw(
            &CoherentDensity::new(gh, result.constellation)?,
            n,
            n_blocks,
            seed,
        )?,
        (None, None) => {
            return Err(Error::invalid(
                "result carries neither a correlation nor an effective SNR",
            ))
        }
    };
    Ok((blocks.is_bound(sc.payload_bits), blocks.dt_bound(sc.payload_bits)))
}
