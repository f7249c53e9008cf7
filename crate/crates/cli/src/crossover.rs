//! Doppler value at which two schemes swap their BLER ordering.

use crate::scenario::Scenario;
use crate::sweep::{evaluate, report_warnings, SweepRow};
use crate::CliError;
use minislot::grid::Scheme;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub scheme: Scheme,
    #[serde(rename = "M")]
    pub order: u32,
    pub epsilon: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CrossoverReport {
    pub gamma_db: f64,
    #[serde(rename = "fdTs")]
    pub fd_ts: Vec<f64>,
    pub curves: [Curve; 2],
    /// First sweep point where the ordering differs from the one before it;
    /// `None` without a flip or with several.
    pub crossover: Option<f64>,
    pub ambiguous: bool,
    pub flips: Vec<f64>,
    pub seed: u64,
}

/// Sweep points at which the sign of `a - b` changes, ignoring exact ties.
pub fn flip_points(x: &[f64], a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut flips = Vec::new();
    let mut last = 0.0;
    for ((&x, &a), &b) in x.iter().zip(a).zip(b) {
        let sign = (a - b).signum() * ((a != b) as u8 as f64);
        if sign != 0.0 {
            if last != 0.0 && sign != last {
                flips.push(x);
            }
            last = sign;
        }
    }
    flips
}

pub fn doppler_crossover(s: &Scenario) -> Result<CrossoverReport, CliError> {
    if s.schemes.len() != 2 {
        return Err(CliError::Config(format!(
            "crossover needs exactly two schemes, got {}",
            s.schemes.len()
        )));
    }
    let gamma_db = s
        .gamma_db
        .scalar()
        .ok_or_else(|| CliError::Config("crossover needs a single gammaDb".into()))?;
    let fd = s.fd_ts.values();
    let points: Vec<_> = s
        .schemes
        .iter()
        .flat_map(|spec| fd.iter().map(move |&f| (*spec, f)))
        .collect();
    let rows: Vec<SweepRow> = points
        .into_par_iter()
        .map(|(spec, f)| evaluate(s, spec, f, gamma_db, false))
        .collect::<Result<_, _>>()?;
    report_warnings(&rows);
    let curve = |i: usize| -> Result<Curve, CliError> {
        let spec = s.schemes[i];
        let epsilon = rows[i * fd.len()..(i + 1) * fd.len()]
            .iter()
            .map(|r| {
                r.result.as_ref().map(|r| r.epsilon).ok_or_else(|| {
                    CliError::Config(format!("{} cannot carry {} bits", spec.scheme, s.payload_bits))
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Curve {
            scheme: spec.scheme,
            order: spec.order,
            epsilon,
        })
    };
    let curves = [curve(0)?, curve(1)?];
    let flips = flip_points(&fd, &curves[0].epsilon, &curves[1].epsilon);
    Ok(CrossoverReport {
        gamma_db,
        crossover: (flips.len() == 1).then(|| flips[0]),
        ambiguous: flips.len() > 1,
        fd_ts: fd,
        curves,
        flips,
        seed: s.seed,
    })
}
