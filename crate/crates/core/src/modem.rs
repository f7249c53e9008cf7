//! Transmit and receive chains.
//!
//! The frequency-domain model `z = H ∘ d + W` is what Monte Carlo campaigns
//! use; the explicit IDFT / cyclic prefix / multipath / DFT chain exists to
//! check that equivalence sample by sample.

use crate::channel::ChannelGrid;
use crate::constellation::Constellation;
use crate::grid::Scheme;
use crate::rng::{complex_normal, substream};
use crate::{CMatrix, Complex64, Error, Result};
use rustfft::FftPlanner;
use std::f64::consts::PI;

const UNIT_MODULUS_TOL: f64 = 1e-9;

/// Frequency-domain transmit symbols `d[k, t]`, `K x T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolGrid(pub CMatrix);

/// Received samples after the DFT, with the noise variance they were drawn
/// with.
#[derive(Debug, Clone, PartialEq)]
pub struct RxGrid {
    pub z: CMatrix,
    pub noise_var: f64,
}

/// Differential detection statistics and hard phase decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffDecision {
    pub stats: CMatrix,
    pub hard: nalgebra::DMatrix<u32>,
}

fn check_shape(m: &CMatrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::DimensionMismatch {
            expected: format!("{rows} x {cols}"),
            actual: format!("{} x {}", m.nrows(), m.ncols()),
        });
    }
    Ok(())
}

/// Places the PSK payload `v` onto a `K x T` grid with phase accumulation.
///
/// FDDi expects `v` of shape `(K-1) x T` and chains along subcarriers from
/// `d[0, t] = 1`; TDDi expects `K x (T-1)` and chains along symbols from
/// `d[k, 0] = 1`.
pub fn differential_encode(v: &CMatrix, scheme: Scheme) -> Result<SymbolGrid> {
    if let Some(x) = v.iter().find(|x| (x.norm() - 1.0).abs() > UNIT_MODULUS_TOL) {
        return Err(Error::invalid(format!("payload symbol {x} is not unit modulus")));
    }
    let d = match scheme {
        Scheme::Fddi => {
            let (k, t) = (v.nrows() + 1, v.ncols());
            let mut d = CMatrix::from_element(k, t, Complex64::new(1.0, 0.0));
            for tt in 0..t {
                for kk in 1..k {
                    d[(kk, tt)] = v[(kk - 1, tt)] * d[(kk - 1, tt)];
                }
            }
            d
        }
        Scheme::Tddi => {
            let (k, t) = (v.nrows(), v.ncols() + 1);
            let mut d = CMatrix::from_element(k, t, Complex64::new(1.0, 0.0));
            for tt in 1..t {
                for kk in 0..k {
                    d[(kk, tt)] = v[(kk, tt - 1)] * d[(kk, tt - 1)];
                }
            }
            d
        }
        Scheme::Pa => return Err(Error::invalid("PA is not a differential scheme")),
    };
    Ok(SymbolGrid(d))
}

/// Frequency-domain noise `W[k, t] ~ CN(0, noise_var)` for `seed`. Both
/// receive paths draw their noise here so paired seeds see one realisation.
fn noise_grid(k: usize, t: usize, noise_var: f64, seed: u64) -> CMatrix {
    let mut rng = substream(seed, 0);
    let mut w = CMatrix::zeros(k, t);
    if noise_var > 0.0 {
        for x in w.iter_mut() {
            *x = complex_normal(&mut rng, noise_var);
        }
    }
    w
}

fn check_rx_inputs(d: &SymbolGrid, channel: &ChannelGrid, noise_var: f64) -> Result<()> {
    check_shape(&d.0, channel.subcarriers(), channel.symbols())?;
    if !(noise_var.is_finite() && noise_var >= 0.0) {
        return Err(Error::invalid(format!("noise variance {noise_var} must be >= 0")));
    }
    Ok(())
}

/// `z = H ∘ d + W`.
pub fn fast_rx(d: &SymbolGrid, channel: &ChannelGrid, noise_var: f64, seed: u64) -> Result<RxGrid> {
    check_rx_inputs(d, channel, noise_var)?;
    let w = noise_grid(d.0.nrows(), d.0.ncols(), noise_var, seed);
    let z = channel.response.component_mul(&d.0) + w;
    Ok(RxGrid { z, noise_var })
}

/// Explicit OFDM chain: unitary IDFT, cyclic prefix of length `L`, per-symbol
/// multipath convolution with `h_t(l)`, additive white noise, prefix removal
/// and unitary DFT. `K` must be a power of two.
///
/// The time-domain noise is the inverse DFT of the same frequency-domain draw
/// used by [`fast_rx`]; the unitary transform keeps it white with variance
/// `noise_var` per sample.
pub fn ofdm_time_domain_chain(
    d: &SymbolGrid,
    channel: &ChannelGrid,
    noise_var: f64,
    seed: u64,
) -> Result<RxGrid> {
    check_rx_inputs(d, channel, noise_var)?;
    let (k, t) = d.0.shape();
    let paths = channel.taps.nrows();
    if !k.is_power_of_two() {
        return Err(Error::invalid(format!(
            "time-domain chain needs K a power of two, got {k}"
        )));
    }
    if paths >= k {
        return Err(Error::invalid(format!(
            "{paths} paths need a longer symbol than K = {k}"
        )));
    }
    let cp = paths;
    let scale = 1.0 / (k as f64).sqrt();
    let mut planner = FftPlanner::<f64>::new();
    let ifft = planner.plan_fft_inverse(k);
    let fft = planner.plan_fft_forward(k);
    let w = noise_grid(k, t, noise_var, seed);

    let mut z = CMatrix::zeros(k, t);
    let mut buf = vec![Complex64::new(0.0, 0.0); k];
    for tt in 0..t {
        buf.copy_from_slice(d.0.column(tt).as_slice());
        ifft.process(&mut buf);
        let mut tx = Vec::with_capacity(cp + k);
        tx.extend(buf[k - cp..].iter().map(|x| x * scale));
        tx.extend(buf.iter().map(|x| x * scale));

        buf.copy_from_slice(w.column(tt).as_slice());
        ifft.process(&mut buf);
        let noise: Vec<Complex64> = buf.iter().map(|x| x * scale).collect();

        // r(i) = sum_l h(l) s(i - l) + w(i) for i = 0..K-1; tx[cp + i] = s(i)
        for i in 0..k {
            let mut acc = noise[i];
            for l in 0..paths {
                acc += channel.taps[(l, tt)] * tx[cp + i - l];
            }
            buf[i] = acc;
        }
        fft.process(&mut buf);
        for i in 0..k {
            z[(i, tt)] = buf[i] * scale;
        }
    }
    Ok(RxGrid { z, noise_var })
}

/// Index of the PSK phase nearest to `arg(a)`; exact ties and `a = 0` go to
/// the lowest index.
pub fn nearest_phase(a: Complex64, order: u32) -> u32 {
    if a.norm_sqr() == 0.0 {
        return 0;
    }
    let theta = a.arg();
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for m in 0..order {
        let phi = 2.0 * PI * m as f64 / order as f64;
        let diff = (theta - phi).rem_euclid(2.0 * PI);
        let dist = diff.min(2.0 * PI - diff);
        if dist < best_dist {
            best = m;
            best_dist = dist;
        }
    }
    best
}

/// `a[k, t] = z[k, t] z*[k-1, t]` (FDDi) or `z[k, t] z*[k, t-1]` (TDDi) with
/// nearest-phase hard decisions. Output shapes match the payload shapes of
/// [`differential_encode`].
pub fn differential_detect(rx: &RxGrid, scheme: Scheme, order: u32) -> Result<DiffDecision> {
    let z = &rx.z;
    let (k, t) = z.shape();
    let stats = match scheme {
        Scheme::Fddi => CMatrix::from_fn(k.saturating_sub(1), t, |i, j| z[(i + 1, j)] * z[(i, j)].conj()),
        Scheme::Tddi => CMatrix::from_fn(k, t.saturating_sub(1), |i, j| z[(i, j + 1)] * z[(i, j)].conj()),
        Scheme::Pa => return Err(Error::invalid("PA is not a differential scheme")),
    };
    let hard = stats.map(|a| nearest_phase(a, order));
    Ok(DiffDecision { stats, hard })
}

/// Minimum-distance detection of `z / Ĥ` at the listed `(k, t)` positions
/// (0-based). Exact ties resolve to the lowest alphabet index.
pub fn coherent_detect(
    rx: &RxGrid,
    estimate: &CMatrix,
    constellation: Constellation,
    positions: &[(usize, usize)],
) -> Result<Vec<u32>> {
    check_shape(estimate, rx.z.nrows(), rx.z.ncols())?;
    let points = constellation.points();
    positions
        .iter()
        .map(|&(k, t)| {
            if k >= rx.z.nrows() || t >= rx.z.ncols() {
                return Err(Error::OutOfRange {
                    k,
                    t,
                    rows: rx.z.nrows(),
                    cols: rx.z.ncols(),
                });
            }
            let h = estimate[(k, t)];
            if h.norm_sqr() == 0.0 {
                return Err(Error::DegenerateEstimate { k, t });
            }
            let y = rx.z[(k, t)] / h;
            let mut best = 0;
            let mut best_dist = f64::INFINITY;
            for (i, p) in points.iter().enumerate() {
                let dist = (y - p).norm_sqr();
                if dist < best_dist {
                    best = i as u32;
                    best_dist = dist;
                }
            }
            Ok(best)
        })
        .collect()
}

/// PSK payload matrix from phase indices.
pub fn psk_symbols(indices: &nalgebra::DMatrix<u32>, order: u32) -> CMatrix {
    indices.map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / order as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel_grid, Doppler, PowerDelayProfile};
    use proptest::prelude::*;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn identity_payload_encodes_to_ones() {
        let v = CMatrix::from_element(3, 2, one());
        for s in [Scheme::Fddi, Scheme::Tddi] {
            let d = differential_encode(&v, s).unwrap();
            assert!(d.0.iter().all(|x| *x == one()));
        }
        assert_eq!(differential_encode(&v, Scheme::Fddi).unwrap().0.shape(), (4, 2));
        assert_eq!(differential_encode(&v, Scheme::Tddi).unwrap().0.shape(), (3, 3));
    }

    #[test]
    fn pi_rotations_alternate() {
        let v = CMatrix::from_element(2, 1, Complex64::from_polar(1.0, PI));
        let d = differential_encode(&v, Scheme::Fddi).unwrap();
        assert!((d.0[(0, 0)] - one()).norm() < 1e-15);
        assert!((d.0[(1, 0)] + one()).norm() < 1e-15);
        assert!((d.0[(2, 0)] - one()).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_unit_payload() {
        let v = CMatrix::from_element(2, 2, Complex64::new(0.5, 0.0));
        assert!(differential_encode(&v, Scheme::Fddi).is_err());
    }

    #[test]
    fn zero_statistic_and_ties_go_to_index_zero() {
        assert_eq!(nearest_phase(Complex64::new(0.0, 0.0), 4), 0);
        // exactly between phase 0 and phase 1 of BPSK
        assert_eq!(nearest_phase(Complex64::new(0.0, 1.0), 2), 0);
        assert_eq!(nearest_phase(Complex64::new(-1.0, 1e-18), 4), 2);
    }

    #[test]
    fn coherent_tie_breaks_low_and_flags_zero_estimate() {
        let qpsk = Constellation::psk(4).unwrap();
        let rx = RxGrid {
            z: CMatrix::from_element(1, 1, Complex64::new(0.0, 0.0)),
            noise_var: 0.0,
        };
        let h = CMatrix::from_element(1, 1, one());
        assert_eq!(coherent_detect(&rx, &h, qpsk, &[(0, 0)]).unwrap(), vec![0]);
        let zero = CMatrix::from_element(1, 1, Complex64::new(0.0, 0.0));
        assert!(matches!(
            coherent_detect(&rx, &zero, qpsk, &[(0, 0)]),
            Err(Error::DegenerateEstimate { k: 0, t: 0 })
        ));
    }

    #[test]
    fn single_tap_identity_channel() {
        let pdp = PowerDelayProfile::single_tap();
        let mut ch = sample_channel_grid(&pdp, Doppler::new(0.0).unwrap(), 8, 2, 1).unwrap();
        ch.taps.fill(one());
        ch.response.fill(one());
        let d = SymbolGrid(CMatrix::from_fn(8, 2, |k, t| {
            Complex64::from_polar(1.0, (k * 3 + t) as f64)
        }));
        let z = ofdm_time_domain_chain(&d, &ch, 0.0, 3).unwrap();
        assert!((z.z - &d.0).norm() < 1e-12);
    }

    #[test]
    fn time_chain_rejects_bad_sizes() {
        let pdp = PowerDelayProfile::exponential(3, 1.0).unwrap();
        let ch = sample_channel_grid(&pdp, Doppler::new(0.0).unwrap(), 12, 2, 1).unwrap();
        let d = SymbolGrid(CMatrix::from_element(12, 2, one()));
        assert!(ofdm_time_domain_chain(&d, &ch, 0.0, 1).is_err());
        assert!(fast_rx(&d, &ch, 0.1, 1).is_ok());
        let wrong = SymbolGrid(CMatrix::from_element(12, 4, one()));
        assert!(matches!(
            fast_rx(&wrong, &ch, 0.1, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fddi_statistics_ignore_common_phase_per_symbol() {
        let pdp = PowerDelayProfile::exponential(4, 0.5).unwrap();
        let ch = sample_channel_grid(&pdp, Doppler::new(0.05).unwrap(), 16, 4, 8).unwrap();
        let d = SymbolGrid(CMatrix::from_element(16, 4, one()));
        let a = differential_detect(&fast_rx(&d, &ch, 0.0, 0).unwrap(), Scheme::Fddi, 4).unwrap();
        let mut rotated = ch.clone();
        for t in 0..4 {
            let r = Complex64::from_polar(1.0, 0.7 * t as f64 + 0.3);
            for k in 0..16 {
                rotated.response[(k, t)] *= r;
            }
        }
        let b = differential_detect(&fast_rx(&d, &rotated, 0.0, 0).unwrap(), Scheme::Fddi, 4).unwrap();
        assert!((a.stats - b.stats).norm() < 1e-12);
    }

    proptest! {
        #[test]
        fn encode_detect_round_trip(
            log_m in 1u32..5,
            k in 2usize..12,
            t in 2usize..8,
            seed in any::<u64>(),
        ) {
            use rand::Rng;
            let m = 1u32 << log_m;
            let mut rng = substream(seed, 0);
            for scheme in [Scheme::Fddi, Scheme::Tddi] {
                let (r, c) = if scheme == Scheme::Fddi { (k - 1, t) } else { (k, t - 1) };
                let idx = nalgebra::DMatrix::from_fn(r, c, |_, _| rng.random_range(0..m));
                let d = differential_encode(&psk_symbols(&idx, m), scheme).unwrap();
                prop_assert!(d.0.iter().all(|x| (x.norm() - 1.0).abs() < 1e-9));
                let rx = RxGrid { z: d.0, noise_var: 0.0 };
                let dec = differential_detect(&rx, scheme, m).unwrap();
                prop_assert_eq!(dec.hard, idx);
            }
        }

        #[test]
        fn fddi_phase_is_cumulative(phases in proptest::collection::vec(-PI..PI, 1..20)) {
            let v = CMatrix::from_iterator(phases.len(), 1, phases.iter().map(|p| Complex64::from_polar(1.0, *p)));
            let d = differential_encode(&v, Scheme::Fddi).unwrap();
            let mut acc = 0.0;
            for (i, p) in phases.iter().enumerate() {
                acc += p;
                prop_assert!((d.0[(i + 1, 0)] - Complex64::from_polar(1.0, acc)).norm() < 1e-9);
            }
        }
    }
}
