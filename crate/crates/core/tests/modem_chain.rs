//! Receive chains against each other and against reference error rates.

use minislot::channel::{sample_channel_grid, ChannelGrid, Doppler, PowerDelayProfile};
use minislot::constellation::Constellation;
use minislot::grid::Scheme;
use minislot::modem::{
    coherent_detect, differential_detect, differential_encode, fast_rx, ofdm_time_domain_chain, psk_symbols,
    RxGrid, SymbolGrid,
};
use minislot::rng::{complex_normal, substream};
use minislot::stats::Moments;
use minislot::{CMatrix, Complex64};
use minislot_check::{naive_dft, qpsk_rayleigh_ser};
use nalgebra::DMatrix;
use rand::Rng;

fn random_qpsk(k: usize, t: usize, seed: u64) -> SymbolGrid {
    let mut rng = substream(seed, 7);
    let idx = DMatrix::from_fn(k, t, |_, _| rng.random_range(0..4u32));
    SymbolGrid(psk_symbols(&idx, 4))
}

#[test]
fn time_domain_chain_matches_frequency_model() {
    let pdp = PowerDelayProfile::exponential(5, 1.0).unwrap();
    for k in [64, 256] {
        for seed in 0..3 {
            let ch = sample_channel_grid(&pdp, Doppler::new(0.05).unwrap(), k, 2, seed).unwrap();
            let d = random_qpsk(k, 2, seed);
            for noise in [0.0, 0.3] {
                let a = ofdm_time_domain_chain(&d, &ch, noise, seed + 10).unwrap();
                let b = fast_rx(&d, &ch, noise, seed + 10).unwrap();
                for (x, y) in a.z.iter().zip(b.z.iter()) {
                    assert!((x - y).norm() <= 1e-9 * y.norm().max(1.0), "K={k}: {x} vs {y}");
                }
            }
        }
    }
}

#[test]
fn frequency_response_is_dft_of_taps() {
    let pdp = PowerDelayProfile::exponential(5, 1.0).unwrap();
    let k = 16;
    let ch = sample_channel_grid(&pdp, Doppler::new(0.0).unwrap(), k, 2, 4).unwrap();
    let mut re = vec![0.0; k];
    let mut im = vec![0.0; k];
    for l in 0..5 {
        re[l] = ch.taps[(l, 0)].re;
        im[l] = ch.taps[(l, 0)].im;
    }
    let (fr, fi) = naive_dft(&re, &im, -1.0);
    for i in 0..k {
        // unitary DFT carries 1/sqrt(K); H is the plain sum
        let h = Complex64::new(fr[i], fi[i]) * (k as f64).sqrt();
        assert!((h - ch.response[(i, 0)]).norm() < 1e-12);
    }
}

#[test]
fn noise_variance_survives_the_dft_chain() {
    let pdp = PowerDelayProfile::single_tap();
    let k = 64;
    let ch = sample_channel_grid(&pdp, Doppler::new(0.0).unwrap(), k, 2, 0).unwrap();
    let d = SymbolGrid(CMatrix::zeros(k, 2));
    let mut m = Moments::default();
    for seed in 0..400 {
        let rx = ofdm_time_domain_chain(&d, &ch, 0.25, seed).unwrap();
        for x in rx.z.iter() {
            m.push(x.norm_sqr());
        }
    }
    assert!((m.mean() - 0.25).abs() <= 3.0 * m.mean_stderr(), "{}", m.mean());
}

fn flat_static(h: Complex64, k: usize, t: usize) -> ChannelGrid {
    ChannelGrid {
        taps: CMatrix::from_element(1, t, h),
        response: CMatrix::from_element(k, t, h),
    }
}

#[test]
fn dqpsk_error_rate_matches_direct_simulation() {
    let (k, t, gamma) = (64, 2, 10.0);
    let noise = 1.0 / gamma;
    let trials = 4000;
    let mut ours = Moments::default();
    let mut rng = substream(31, 0);
    for trial in 0..trials {
        let h = complex_normal(&mut rng, 1.0);
        let idx = DMatrix::from_fn(k - 1, t, |_, _| rng.random_range(0..4u32));
        let d = differential_encode(&psk_symbols(&idx, 4), Scheme::Fddi).unwrap();
        let rx = fast_rx(&d, &flat_static(h, k, t), noise, trial).unwrap();
        let dec = differential_detect(&rx, Scheme::Fddi, 4).unwrap();
        // one fading draw per trial, so the trial is the independent unit
        let errors = dec.hard.iter().zip(idx.iter()).filter(|(a, b)| a != b).count();
        ours.push(errors as f64 / idx.len() as f64);
    }
    // independent reference: two received samples, phase quadrant of z2 conj(z1)
    let mut reference = Moments::default();
    let mut rng = substream(32, 0);
    for _ in 0..500_000 {
        let h = complex_normal(&mut rng, 1.0);
        let m = rng.random_range(0..4u32);
        let z1 = h + complex_normal(&mut rng, noise);
        let z2 = h * Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_2 * m as f64)
            + complex_normal(&mut rng, noise);
        let a = z2 * z1.conj();
        let q = ((a.arg() / std::f64::consts::FRAC_PI_2).round() as i64).rem_euclid(4) as u32;
        reference.push((q != m) as u8 as f64);
    }
    let diff = (ours.mean() - reference.mean()).abs();
    let se = (ours.mean_stderr().powi(2) + reference.mean_stderr().powi(2)).sqrt();
    assert!(diff <= 3.0 * se, "{} vs {}", ours.mean(), reference.mean());
}

#[test]
fn coherent_qpsk_error_rate_matches_closed_form() {
    let (k, gamma) = (64, 10.0);
    let qpsk = Constellation::psk(4).unwrap();
    let points = qpsk.points();
    let positions: Vec<(usize, usize)> = (0..k).map(|i| (i, 0)).collect();
    let mut m = Moments::default();
    let mut rng = substream(41, 0);
    for trial in 0..3000 {
        let h = CMatrix::from_fn(k, 1, |_, _| complex_normal(&mut rng, 1.0));
        let idx: Vec<u32> = (0..k).map(|_| rng.random_range(0..4u32)).collect();
        let d = CMatrix::from_fn(k, 1, |i, _| points[idx[i] as usize]);
        let ch = ChannelGrid {
            taps: CMatrix::zeros(1, 1),
            response: h.clone(),
        };
        let rx = fast_rx(&SymbolGrid(d), &ch, 1.0 / gamma, trial).unwrap();
        let dec = coherent_detect(&rx, &h, qpsk, &positions).unwrap();
        for (a, b) in dec.iter().zip(&idx) {
            m.push((a != b) as u8 as f64);
        }
    }
    let expected = qpsk_rayleigh_ser(gamma);
    assert!(
        (m.mean() - expected).abs() <= 3.0 * m.mean_stderr(),
        "{} vs {expected}",
        m.mean()
    );
}

#[test]
fn perfect_csi_recovers_every_alphabet() {
    for c in [
        Constellation::psk(8).unwrap(),
        Constellation::qam(16).unwrap(),
        Constellation::qam(64).unwrap(),
    ] {
        let pts = c.points();
        let k = pts.len();
        let h = CMatrix::from_fn(k, 1, |i, _| {
            Complex64::from_polar(0.5 + i as f64 * 0.01, i as f64)
        });
        let z = CMatrix::from_fn(k, 1, |i, _| h[(i, 0)] * pts[i]);
        let rx = RxGrid { z, noise_var: 0.0 };
        let positions: Vec<(usize, usize)> = (0..k).map(|i| (i, 0)).collect();
        let dec = coherent_detect(&rx, &h, c, &positions).unwrap();
        assert_eq!(dec, (0..k as u32).collect::<Vec<_>>());
    }
}
