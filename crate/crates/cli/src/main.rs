use clap::{Parser, Subcommand};
use minislot_cli::crossover::doppler_crossover;
use minislot_cli::scenario::Scenario;
use minislot_cli::select::select_scheme;
use minislot_cli::sweep::{run_sweep, write_csv};
use minislot_cli::{selftest, CliError};
use serde::Serialize;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Short-packet link performance of mini-slot OFDM schemes.
#[derive(Parser)]
#[command(name = "minislot", version)]
struct Cli {
    /// Master seed; overrides the scenario file.
    #[arg(long, global = true, env = "FBL_SEED")]
    seed: Option<u64>,

    /// Monte Carlo samples per (I, V) estimate; overrides the scenario file.
    #[arg(long, global = true)]
    n_samples: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every scheme at every sweep point and write CSV.
    Sweep {
        scenario: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Add Monte Carlo IS and DT bound columns.
        #[arg(long)]
        bounds: bool,
        /// Blocks per bound estimate; overrides the scenario file.
        #[arg(long)]
        bound_blocks: Option<usize>,
    },
    /// Recommend the scheme with the lowest predicted BLER.
    Select {
        scenario: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Find where two schemes swap order along an fdTs sweep.
    Crossover {
        scenario: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the built-in invariant checks.
    Selftest,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io(e.into()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn load(cli: &Cli, path: &Path) -> Result<Scenario, CliError> {
    let mut s = Scenario::load(path)?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(n) = cli.n_samples {
        s.n_samples = n;
    }
    if let Command::Sweep {
        bound_blocks: Some(b),
        ..
    } = cli.command
    {
        s.bound_blocks = b;
    }
    s.validate()?;
    Ok(s)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Sweep {
            scenario,
            output,
            bounds,
            ..
        } => {
            let s = load(cli, scenario)?;
            let rows = run_sweep(&s, *bounds)?;
            write_csv(&rows, &s, *bounds, sink(output.as_deref())?)
        }
        Command::Select { scenario, output } => {
            let s = load(cli, scenario)?;
            write_json(&select_scheme(&s)?, output.as_deref())
        }
        Command::Crossover { scenario, output } => {
            let s = load(cli, scenario)?;
            write_json(&doppler_crossover(&s)?, output.as_deref())
        }
        Command::Selftest => {
            let mut failed = 0;
            for check in selftest::run() {
                match check.outcome {
                    Ok(true) => println!("ok    {}", check.name),
                    Ok(false) => {
                        failed += 1;
                        println!("FAIL  {}", check.name);
                    }
                    Err(e) => {
                        failed += 1;
                        println!("FAIL  {} ({e})", check.name);
                    }
                }
            }
            if failed > 0 {
                return Err(CliError::Numerical(format!("{failed} self-test check(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
