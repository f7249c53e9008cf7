//! Quick invariant checks of an installed build.

use crate::scenario::Scenario;
use crate::select::select_scheme;
use crate::sweep::run_sweep;
use crate::CliError;
use minislot::chanest::effective_snr;
use minislot::channel::{sample_channel_grid, Doppler, PowerDelayProfile};
use minislot::fbl::{awgn_capacity_dispersion, diff_capacity_dispersion, DiffChannelParams};
use minislot::modem::{fast_rx, ofdm_time_domain_chain, SymbolGrid};
use minislot::rng::{complex_normal, substream};
use minislot::CMatrix;

type CheckFn = fn() -> Result<bool, CliError>;

pub struct Check {
    pub name: &'static str,
    pub outcome: Result<bool, CliError>,
}

fn scenario(extra: &str) -> Result<Scenario, CliError> {
    Scenario::from_json(&format!(
        r#"{{"K": 64, "T": 2, "B": 64, "nSamples": 20000, "seed": 7, {extra}}}"#
    ))
}

fn awgn_reference() -> Result<bool, CliError> {
    Ok(awgn_capacity_dispersion(1.0)? == (1.0, 0.75))
}

fn perfect_estimate() -> Result<bool, CliError> {
    Ok([0.5, 0.1, 0.01].into_iter().all(|w| {
        effective_snr(0.0, w)
            .map(|e| e.gamma_hat == 1.0 / w)
            .unwrap_or(false)
    }))
}

fn chain_equivalence() -> Result<bool, CliError> {
    let pdp = PowerDelayProfile::exponential(5, 1.0)?;
    let ch = sample_channel_grid(&pdp, Doppler::new(0.05)?, 64, 2, 1)?;
    let mut rng = substream(2, 0);
    let d = SymbolGrid(CMatrix::from_fn(64, 2, |_, _| complex_normal(&mut rng, 1.0)));
    let a = ofdm_time_domain_chain(&d, &ch, 0.1, 3)?;
    let b = fast_rx(&d, &ch, 0.1, 3)?;
    Ok(a.z
        .iter()
        .zip(b.z.iter())
        .all(|(x, y)| (x - y).norm() <= 1e-9 * y.norm().max(1.0)))
}

fn uncorrelated_channel_is_useless() -> Result<bool, CliError> {
    let cd = diff_capacity_dispersion(&DiffChannelParams::new(10.0, 0.0, 4)?, 20_000, 5)?;
    Ok(cd.capacity.abs() <= 3.0 * cd.capacity_stderr && cd.dispersion.abs() <= 3.0 * cd.dispersion_stderr)
}

fn seeded_reproducibility() -> Result<bool, CliError> {
    let p = DiffChannelParams::new(3.0, 0.95, 4)?;
    Ok(diff_capacity_dispersion(&p, 20_000, 9)? == diff_capacity_dispersion(&p, 20_000, 9)?)
}

fn fddi_ignores_doppler() -> Result<bool, CliError> {
    let s = scenario(r#""fdTs": [0.001, 0.1], "gammaDb": 4, "schemes": [{"scheme": "FDDi", "M": 4}]"#)?;
    let rows = run_sweep(&s, false)?;
    Ok(rows[0].result.as_ref().map(|r| r.epsilon) == rows[1].result.as_ref().map(|r| r.epsilon))
}

fn bler_falls_with_snr() -> Result<bool, CliError> {
    let s = scenario(
        r#""fdTs": 0.01, "gammaDb": [-2, 0, 2, 4, 6, 8],
        "schemes": [{"scheme": "PA", "M": 4}, {"scheme": "FDDi", "M": 4}, {"scheme": "TDDi", "M": 4}]"#,
    )?;
    let rows = run_sweep(&s, false)?;
    let ok = (0..3).all(|i| {
        let eps: Vec<f64> = rows
            .iter()
            .skip(i)
            .step_by(3)
            .filter_map(|r| r.result.as_ref().map(|r| r.epsilon))
            .collect();
        eps.len() == 6 && eps.windows(2).all(|w| w[1] <= w[0])
    });
    Ok(ok)
}

fn selection_is_argmin() -> Result<bool, CliError> {
    let s = scenario(
        r#""fdTs": 0.05, "gammaDb": 4,
        "schemes": [{"scheme": "PA", "M": 4}, {"scheme": "FDDi", "M": 4}, {"scheme": "TDDi", "M": 4}]"#,
    )?;
    let rec = select_scheme(&s)?;
    let min = rec
        .ranked
        .iter()
        .filter_map(|c| c.epsilon)
        .fold(f64::INFINITY, f64::min);
    Ok(rec.ranked[0].scheme == rec.chosen && rec.ranked[0].epsilon == Some(min))
}

pub fn run() -> Vec<Check> {
    let checks: [(&'static str, CheckFn); 8] = [
        ("awgn capacity and dispersion at 0 dB", awgn_reference),
        ("effective SNR with perfect estimation", perfect_estimate),
        ("time-domain chain equals per-subcarrier model", chain_equivalence),
        (
            "no information without correlation",
            uncorrelated_channel_is_useless,
        ),
        ("seeded Monte Carlo is reproducible", seeded_reproducibility),
        ("FDDi BLER does not depend on Doppler", fddi_ignores_doppler),
        ("BLER falls with SNR for every scheme", bler_falls_with_snr),
        ("selected scheme has the smallest BLER", selection_is_argmin),
    ];
    checks
        .into_iter()
        .map(|(name, f)| Check { name, outcome: f() })
        .collect()
}
