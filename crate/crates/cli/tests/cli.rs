//! Subcommand behaviour through the library and the installed binary.

use minislot::grid::Scheme;
use minislot_cli::crossover::doppler_crossover;
use minislot_cli::scenario::Scenario;
use minislot_cli::select::{select_scheme, Factor};
use minislot_cli::sweep::{run_sweep, write_csv, INFEASIBLE};
use minislot_cli::CliError;
use std::path::Path;
use std::process::{Command, Output};

fn scenario(json: &str) -> Scenario {
    Scenario::from_json(json).unwrap()
}

fn csv(s: &Scenario, bounds: bool) -> String {
    let rows = run_sweep(s, bounds).unwrap();
    let mut out = Vec::new();
    write_csv(&rows, s, bounds, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn bin(args: &[&str], dir: &Path, env_seed: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_minislot"));
    c.args(args).current_dir(dir).env_remove("FBL_SEED");
    if let Some(s) = env_seed {
        c.env("FBL_SEED", s);
    }
    c.output().unwrap()
}

const WIDE_GRID: &str = r#"{"K": 256, "T": 2, "fdTs": 0.01, "gammaDb": 2, "B": 256, "nSamples": 10000,
    "schemes": [{"scheme": "PA", "M": 4}, {"scheme": "FDDi", "M": 4}, {"scheme": "TDDi", "M": 4}]}"#;

#[test]
fn data_symbol_counts_of_the_256_subcarrier_grid() {
    let text = csv(&scenario(WIDE_GRID), false);
    let n: Vec<&str> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(6).unwrap())
        .collect();
    assert_eq!(n, ["384", "510", "256"]);
}

#[test]
fn header_only_without_schemes() {
    let s = scenario(r#"{"K": 64, "T": 2, "fdTs": 0.01, "gammaDb": [0, 1], "B": 64, "schemes": []}"#);
    assert_eq!(
        csv(&s, false),
        "scheme,K,T,M,fdTs,gammaDb,N,R,sigmaE2,gammaHatDb,I,V,epsilonNA,nSamples,seed\n"
    );
    assert_eq!(
        csv(&s, true).trim_end(),
        "scheme,K,T,M,fdTs,gammaDb,N,R,sigmaE2,gammaHatDb,I,V,epsilonNA,epsilonIS,epsilonISstderr,\
         epsilonDT,epsilonDTstderr,nSamples,seed"
    );
}

#[test]
fn infeasible_rows_carry_a_marker_and_the_run_continues() {
    // 2 x 64 grid: PA has 96 data elements, TDDi with BPSK only 64
    let s = scenario(
        r#"{"K": 64, "T": 2, "fdTs": 0.01, "gammaDb": 4, "B": 100, "nSamples": 10000,
            "schemes": [{"scheme": "TDDi", "M": 2}, {"scheme": "PA", "M": 4}]}"#,
    );
    let text = csv(&s, false);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "TDDi");
    assert_eq!(rows[0][12], INFEASIBLE);
    assert!(rows[0][10].is_empty() && rows[0][11].is_empty());
    assert_eq!(rows[1][0], "PA");
    assert!(rows[1][12].parse::<f64>().is_ok());
}

#[test]
fn pa_only_columns_stay_empty_for_differential_rows() {
    let text = csv(&scenario(WIDE_GRID), false);
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 15);
        assert_eq!(f[8].is_empty(), f[0] != "PA", "{line}");
        assert_eq!(f[9].is_empty(), f[0] != "PA", "{line}");
    }
}

#[test]
fn fddi_rows_do_not_depend_on_doppler() {
    let s = scenario(
        r#"{"K": 64, "T": 2, "fdTs": [0.001, 0.05, 0.2], "gammaDb": [0, 3], "B": 64, "nSamples": 10000,
            "schemes": [{"scheme": "FDDi", "M": 4}]}"#,
    );
    let text = csv(&s, false);
    let strip = |l: &str| {
        let mut f: Vec<String> = l.split(',').map(String::from).collect();
        f.remove(4);
        f.join(",")
    };
    let lines: Vec<String> = text.lines().skip(1).map(strip).collect();
    assert_eq!(lines[0], lines[2]);
    assert_eq!(lines[0], lines[4]);
    assert_eq!(lines[1], lines[3]);
    assert_eq!(lines[1], lines[5]);
}

#[test]
fn selection_is_the_argmin_of_its_candidates() {
    for fd in [0.01, 0.05, 0.2] {
        let s = scenario(&WIDE_GRID.replace("\"fdTs\": 0.01", &format!("\"fdTs\": {fd}")));
        let rec = select_scheme(&s).unwrap();
        let best = rec
            .ranked
            .iter()
            .filter_map(|c| c.epsilon)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(rec.ranked[0].epsilon, Some(best));
        assert_eq!(rec.ranked[0].scheme, rec.chosen);
        assert_eq!(rec.ranked.len(), 3);
    }
}

#[test]
fn low_doppler_selects_pa() {
    let rec = select_scheme(&scenario(WIDE_GRID)).unwrap();
    assert_eq!(rec.chosen, Scheme::Pa);
}

#[test]
fn single_scheme_and_infeasible_exclusion() {
    let one = WIDE_GRID.replace(r#", {"scheme": "FDDi", "M": 4}, {"scheme": "TDDi", "M": 4}"#, "");
    let rec = select_scheme(&scenario(&one)).unwrap();
    assert_eq!(rec.chosen, Scheme::Pa);
    assert!(rec.ranked[0].epsilon.is_some());

    let heavy = r#"{"K": 64, "T": 2, "fdTs": 0.01, "gammaDb": 4, "B": 100, "nSamples": 10000,
        "schemes": [{"scheme": "TDDi", "M": 2}, {"scheme": "FDDi", "M": 4}]}"#;
    let rec = select_scheme(&scenario(heavy)).unwrap();
    assert_eq!(rec.chosen, Scheme::Fddi);
    assert_eq!(rec.dominant_factor, Factor::Payload);
    assert!(!rec.ranked[1].feasible);
}

#[test]
fn ties_prefer_lower_overhead() {
    // a 2-bit payload at 40 dB is error-free for every scheme
    let s = scenario(
        r#"{"K": 64, "T": 2, "fdTs": 0.01, "gammaDb": 40, "B": 2, "nSamples": 10000,
            "schemes": [{"scheme": "TDDi", "M": 4}, {"scheme": "PA", "M": 4}, {"scheme": "FDDi", "M": 4}]}"#,
    );
    let rec = select_scheme(&s).unwrap();
    assert!(rec.ranked.iter().all(|c| c.epsilon == Some(0.0)), "{rec:?}");
    let order: Vec<Scheme> = rec.ranked.iter().map(|c| c.scheme).collect();
    assert_eq!(order, [Scheme::Fddi, Scheme::Pa, Scheme::Tddi]);
}

#[test]
fn select_needs_scalar_operating_point() {
    let s = scenario(&WIDE_GRID.replace("\"gammaDb\": 2", "\"gammaDb\": [2, 3]"));
    assert!(matches!(select_scheme(&s), Err(CliError::Config(_))));
}

#[test]
fn crossover_trivial_cases() {
    let same = scenario(
        r#"{"K": 64, "T": 2, "fdTs": [0.01, 0.05, 0.1], "gammaDb": 4, "B": 64, "nSamples": 10000,
            "schemes": [{"scheme": "FDDi", "M": 4}, {"scheme": "FDDi", "M": 4}]}"#,
    );
    let r = doppler_crossover(&same).unwrap();
    assert_eq!(r.crossover, None);
    assert!(!r.ambiguous);

    let single = scenario(
        r#"{"K": 64, "T": 2, "fdTs": [0.05], "gammaDb": 4, "B": 64, "nSamples": 10000,
            "schemes": [{"scheme": "PA", "M": 4}, {"scheme": "FDDi", "M": 4}]}"#,
    );
    assert_eq!(doppler_crossover(&single).unwrap().crossover, None);

    let three = scenario(&WIDE_GRID.replace("\"fdTs\": 0.01", "\"fdTs\": [0.01, 0.1]"));
    assert!(matches!(doppler_crossover(&three), Err(CliError::Config(_))));
}

#[test]
fn crossover_at_high_doppler_for_the_wide_grid() {
    let s = scenario(
        r#"{"K": 256, "T": 2, "fdTs": [0.01, 0.05, 0.1, 0.15, 0.2, 0.25], "gammaDb": 2, "B": 256,
            "nSamples": 10000, "schemes": [{"scheme": "PA", "M": 4}, {"scheme": "FDDi", "M": 4}]}"#,
    );
    let r = doppler_crossover(&s).unwrap();
    let x = r.crossover.expect("PA degrades with Doppler");
    assert!(x > 0.01, "{r:?}");
    let pa = &r.curves[0].epsilon;
    assert!(pa.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.json"), r#"{"K": 64}"#).unwrap();
    std::fs::write(d.join("ok.json"), WIDE_GRID).unwrap();
    assert_eq!(bin(&["sweep", "bad.json"], d, None).status.code(), Some(1));
    assert_eq!(bin(&["sweep", "missing.json"], d, None).status.code(), Some(1));
    assert_eq!(bin(&["frobnicate"], d, None).status.code(), Some(1));
    assert_eq!(
        bin(&["sweep", "ok.json"], d, Some("not-a-number")).status.code(),
        Some(1)
    );
    assert_eq!(
        bin(&["sweep", "ok.json", "-o", "out.csv"], d, None).status.code(),
        Some(0)
    );
    assert!(std::fs::read_to_string(d.join("out.csv"))
        .unwrap()
        .starts_with("scheme,K,T"));
    assert_eq!(bin(&["--help"], d, None).status.code(), Some(0));
}

#[test]
fn seed_flag_beats_environment_beats_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("s.json"),
        WIDE_GRID.replace("\"B\": 256", "\"B\": 256, \"seed\": 3"),
    )
    .unwrap();
    let seed_of = |o: Output| -> String {
        let text = String::from_utf8(o.stdout).unwrap();
        text.lines()
            .nth(1)
            .unwrap()
            .rsplit(',')
            .next()
            .unwrap()
            .to_string()
    };
    assert_eq!(seed_of(bin(&["sweep", "s.json"], d, None)), "3");
    assert_eq!(seed_of(bin(&["sweep", "s.json"], d, Some("11"))), "11");
    assert_eq!(
        seed_of(bin(&["sweep", "s.json", "--seed", "12"], d, Some("11"))),
        "12"
    );
    let a = bin(&["sweep", "s.json", "--seed", "12"], d, None).stdout;
    let b = bin(&["sweep", "s.json"], d, Some("12")).stdout;
    assert_eq!(a, b);
}

#[test]
fn json_reports_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("s.json"), WIDE_GRID).unwrap();
    let out = bin(&["select", "s.json"], d, None);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["chosen"], "PA");
    assert_eq!(v["ranked"].as_array().unwrap().len(), 3);
}
