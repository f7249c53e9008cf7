//! Adaptive scheme recommendation at one operating point.

use crate::scenario::Scenario;
use crate::sweep::{evaluate, report_warnings, SweepRow};
use crate::CliError;
use minislot::chanest::MseBreakdown;
use minislot::channel::Doppler;
use minislot::grid::{match_coding_rates, Scheme};
use minislot::special::from_db;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Factor {
    Doppler,
    #[serde(rename = "overhead")]
    Overhead,
    #[serde(rename = "payload")]
    Payload,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Candidate {
    pub scheme: Scheme,
    #[serde(rename = "M")]
    pub order: u32,
    pub modulation: String,
    #[serde(rename = "N")]
    pub blocklength: usize,
    #[serde(rename = "R")]
    pub rate: f64,
    pub coding_rate: f64,
    pub feasible: bool,
    pub epsilon: Option<f64>,
    #[serde(rename = "I")]
    pub capacity: Option<f64>,
    #[serde(rename = "V")]
    pub dispersion: Option<f64>,
    pub gamma_hat_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Recommendation {
    #[serde(rename = "fdTs")]
    pub fd_ts: f64,
    pub gamma_db: f64,
    #[serde(rename = "B")]
    pub payload_bits: u32,
    pub chosen: Scheme,
    pub dominant_factor: Factor,
    pub rationale: String,
    /// Feasible schemes by ascending ε, then the infeasible ones.
    pub ranked: Vec<Candidate>,
    pub seed: u64,
}

/// Lower reference overhead wins ties.
fn tie_rank(s: Scheme) -> u8 {
    match s {
        Scheme::Fddi => 0,
        Scheme::Pa => 1,
        Scheme::Tddi => 2,
    }
}

fn candidate(row: &SweepRow, s: &Scenario) -> Result<Candidate, CliError> {
    let c = row.spec.constellation()?;
    let grid = s.grid(row.spec.scheme)?;
    let coding_rate = match match_coding_rates(s.payload_bits, &grid, &[(row.spec.scheme, c)]) {
        Ok(cfg) => cfg[0].coding_rate,
        Err(_) => s.payload_bits as f64 / (row.blocklength as f64 * c.bits_per_symbol()),
    };
    let r = row.result.as_ref();
    Ok(Candidate {
        scheme: row.spec.scheme,
        order: row.spec.order,
        modulation: c.to_string(),
        blocklength: row.blocklength,
        rate: row.rate,
        coding_rate,
        feasible: r.is_some(),
        epsilon: r.map(|r| r.epsilon),
        capacity: r.map(|r| r.info.capacity),
        dispersion: r.map(|r| r.info.dispersion),
        gamma_hat_db: r.and_then(|r| r.gamma_hat_db()),
    })
}

fn compare(a: &Candidate, b: &Candidate) -> Ordering {
    match (a.epsilon, b.epsilon) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(tie_rank(a.scheme).cmp(&tie_rank(b.scheme))),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
}

/// Share of the coherent estimation error that comes from channel ageing
/// between pilot and data symbols.
fn doppler_share(s: &Scenario, fd_ts: f64, gamma_db: f64) -> Result<f64, CliError> {
    let grid = s.grid(Scheme::Pa)?;
    let pdp = s.pdp()?;
    let gamma = from_db(gamma_db);
    let moving = MseBreakdown::closed_form(&grid, &pdp, Doppler::new(fd_ts)?, gamma)?.sigma_e2;
    let still = MseBreakdown::closed_form(&grid, &pdp, Doppler::new(0.0)?, gamma)?.sigma_e2;
    Ok(if moving > 0.0 {
        (moving - still) / moving
    } else {
        0.0
    })
}

pub fn select_scheme(s: &Scenario) -> Result<Recommendation, CliError> {
    let fd_ts = s
        .fd_ts
        .scalar()
        .ok_or_else(|| CliError::Config("select needs a single fdTs".into()))?;
    let gamma_db = s
        .gamma_db
        .scalar()
        .ok_or_else(|| CliError::Config("select needs a single gammaDb".into()))?;
    if s.schemes.is_empty() {
        return Err(CliError::Config("no schemes to select from".into()));
    }
    let rows: Vec<SweepRow> = s
        .schemes
        .par_iter()
        .map(|spec| evaluate(s, *spec, fd_ts, gamma_db, false))
        .collect::<Result<_, _>>()?;
    report_warnings(&rows);
    let mut ranked = rows
        .iter()
        .map(|r| candidate(r, s))
        .collect::<Result<Vec<_>, _>>()?;
    ranked.sort_by(compare);
    let best = ranked
        .first()
        .filter(|c| c.feasible)
        .ok_or_else(|| CliError::Config(format!("no scheme carries {} bits on this grid", s.payload_bits)))?
        .clone();
    let has_pa = ranked.iter().any(|c| c.scheme == Scheme::Pa && c.feasible);
    let factor = if ranked.iter().any(|c| !c.feasible) {
        Factor::Payload
    } else if has_pa && doppler_share(s, fd_ts, gamma_db)? > 0.5 {
        Factor::Doppler
    } else {
        Factor::Overhead
    };
    let eps = best.epsilon.expect("feasible");
    let rationale = match factor {
        Factor::Payload => format!(
            "{} has the lowest predicted BLER ({eps:.3e}); some schemes cannot carry {} bits",
            best.scheme, s.payload_bits
        ),
        Factor::Doppler => format!(
            "{} has the lowest predicted BLER ({eps:.3e}); channel ageing at fdTs={fd_ts} dominates the pilot estimation error",
            best.scheme
        ),
        Factor::Overhead => format!(
            "{} has the lowest predicted BLER ({eps:.3e}); reference overhead and noise enhancement decide at fdTs={fd_ts}",
            best.scheme
        ),
    };
    Ok(Recommendation {
        fd_ts,
        gamma_db,
        payload_bits: s.payload_bits,
        chosen: best.scheme,
        dominant_factor: factor,
        rationale,
        ranked,
        seed: s.seed,
    })
}
