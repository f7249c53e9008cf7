//! Sweeps over Doppler, SNR and scheme, written as CSV.

use crate::scenario::{Scenario, SchemeSpec};
use crate::{format_number, CliError};
use minislot::bounds::BoundEstimate;
use minislot::fbl::{scheme_bounds, scheme_fbl, FblResult};
use minislot::grid::data_symbol_count;
use rayon::prelude::*;
use std::collections::BTreeSet;
use std::io::Write;

pub const COLUMNS: [&str; 15] = [
    "scheme",
    "K",
    "T",
    "M",
    "fdTs",
    "gammaDb",
    "N",
    "R",
    "sigmaE2",
    "gammaHatDb",
    "I",
    "V",
    "epsilonNA",
    "nSamples",
    "seed",
];

pub const BOUND_COLUMNS: [&str; 4] = ["epsilonIS", "epsilonISstderr", "epsilonDT", "epsilonDTstderr"];

/// Written in the `epsilonNA` column of rows whose payload does not fit.
pub const INFEASIBLE: &str = "ERR:infeasible";

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub spec: SchemeSpec,
    pub fd_ts: f64,
    pub gamma_db: f64,
    pub blocklength: usize,
    pub rate: f64,
    /// `None` for an infeasible payload.
    pub result: Option<FblResult>,
    pub bounds: Option<(BoundEstimate, BoundEstimate)>,
}

/// One point of the sweep for one scheme.
pub fn evaluate(
    s: &Scenario,
    spec: SchemeSpec,
    fd_ts: f64,
    gamma_db: f64,
    with_bounds: bool,
) -> Result<SweepRow, CliError> {
    let link = s.link(spec.scheme, fd_ts, gamma_db)?;
    let n = data_symbol_count(&link.grid, spec.scheme)?;
    let mut row = SweepRow {
        spec,
        fd_ts,
        gamma_db,
        blocklength: n,
        rate: s.payload_bits as f64 / n as f64,
        result: None,
        bounds: None,
    };
    match scheme_fbl(spec.scheme, spec.constellation()?, &link) {
        Ok(r) => {
            if with_bounds {
                row.bounds = Some(scheme_bounds(&r, &link, s.bound_blocks)?);
            }
            row.result = Some(r);
        }
        Err(minislot::Error::InfeasiblePayload { .. }) => {
            log::warn!(
                "{} at fdTs={fd_ts}, gammaDb={gamma_db}: payload does not fit",
                spec.scheme
            );
        }
        Err(e) => return Err(e.into()),
    }
    Ok(row)
}

/// Rows in scenario order: Doppler outermost, then SNR, then schemes as
/// listed.
pub fn run_sweep(s: &Scenario, with_bounds: bool) -> Result<Vec<SweepRow>, CliError> {
    let mut points = Vec::new();
    for fd in s.fd_ts.values() {
        for g in s.gamma_db.values() {
            for spec in &s.schemes {
                points.push((*spec, fd, g));
            }
        }
    }
    let rows: Vec<SweepRow> = points
        .into_par_iter()
        .map(|(spec, fd, g)| evaluate(s, spec, fd, g, with_bounds))
        .collect::<Result<_, _>>()?;
    report_warnings(&rows);
    Ok(rows)
}

/// Logs each distinct model warning once.
pub fn report_warnings(rows: &[SweepRow]) {
    let warnings: BTreeSet<&str> = rows
        .iter()
        .filter_map(|r| r.result.as_ref()?.warning.as_deref())
        .collect();
    for w in warnings {
        log::warn!("{w}");
    }
}

pub fn write_csv<W: Write>(
    rows: &[SweepRow],
    s: &Scenario,
    with_bounds: bool,
    out: W,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = COLUMNS[..13].to_vec();
    if with_bounds {
        header.extend(BOUND_COLUMNS);
    }
    header.extend(&COLUMNS[13..]);
    w.write_record(&header)?;
    for row in rows {
        let num = |x: f64| format_number(x);
        let mut rec = vec![
            row.spec.scheme.to_string(),
            s.subcarriers.to_string(),
            s.symbols.to_string(),
            row.spec.order.to_string(),
            num(row.fd_ts),
            num(row.gamma_db),
            row.blocklength.to_string(),
            num(row.rate),
        ];
        match &row.result {
            Some(r) => {
                rec.push(r.mse.map(|m| num(m.sigma_e2)).unwrap_or_default());
                rec.push(r.gamma_hat_db().map(num).unwrap_or_default());
                rec.push(num(r.info.capacity));
                rec.push(num(r.info.dispersion));
                rec.push(num(r.epsilon));
            }
            None => {
                rec.extend(std::iter::repeat_n(String::new(), 4));
                rec.push(INFEASIBLE.into());
            }
        }
        if with_bounds {
            match &row.bounds {
                Some((is, dt)) => {
                    rec.extend([num(is.value), num(is.stderr), num(dt.value), num(dt.stderr)]);
                }
                None => rec.extend(std::iter::repeat_n(String::new(), 4)),
            }
        }
        rec.push(s.n_samples.to_string());
        rec.push(s.seed.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
