use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use divisio::divisibility::{report_to_json, Kind, DIVISIBILITY_TOLERANCE};
use divisio::exec::{self, Execution};
use divisio_cli::output::{write_json, write_table, Format, Meta};
use divisio_cli::{exit, grid, run_collisional, run_dephasing, run_dephasing_hd, run_query, run_unitary_mix, summarize, CliError, Result};
use serde_json::json;

/// Distance-to-divisibility experiments for discrete quantum dynamics.
#[derive(Parser)]
#[command(name = "divisio", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Base seed for randomized experiments.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Distance at or below which a pair counts as divisible.
    #[arg(long, default_value_t = DIVISIBILITY_TOLERANCE)]
    tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cp,
    P,
}

#[derive(Subcommand)]
enum Command {
    /// CP and P distances of the collisional model over p in [0, 1].
    Collisional {
        #[arg(long, default_value_t = 51)]
        steps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// CP distance of the qubit dephasing dynamics over t1 <= t2 in [0, 2π].
    Dephasing {
        #[arg(long, default_value_t = 40)]
        steps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// CP distance between d-dimensional dephasing channels on a (p, q) grid.
    DephasingHd {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        /// Grid points i/steps for i = 0..steps.
        #[arg(long, default_value_t = 21)]
        steps: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Solve times for random unitary mixtures against the identity.
    UnitaryMix {
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4])]
        dim: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2, 5, 15])]
        n: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Divisibility of the map in --choi-b through the map in --choi-a.
    Query {
        /// First map (earlier time).
        #[arg(long)]
        choi_a: PathBuf,
        /// Target map (later time, same initial time).
        #[arg(long)]
        choi_b: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Cp)]
        mode: Mode,
        /// Accept inputs that fail the CPTP check.
        #[arg(long)]
        allow_noncptp: bool,
        #[command(flatten)]
        common: Common,
    },
}

fn meta(experiment: &str, common: &Common, parameters: serde_json::Value) -> Meta {
    Meta { experiment: experiment.into(), seed: common.seed, tol: common.tol, parameters, summary: None }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("DIVISIO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Config(format!("DIVISIO_THREADS must be a positive integer, got {raw:?}")))?;
    exec::limit_threads(n).map_err(CliError::Config)
}

fn run(cli: Cli) -> Result<i32> {
    configure_threads()?;
    let par = Execution::Parallel;
    match cli.command {
        Command::Collisional { steps, common } => {
            let ps = grid(0.0, 1.0, steps)?;
            let rows = run_collisional(&ps, par)?;
            write_table(&rows, common.format, common.out.as_deref(), &meta("collisional", &common, json!({ "steps": steps })))?;
        }
        Command::Dephasing { steps, common } => {
            let rows = run_dephasing(steps, par)?;
            write_table(&rows, common.format, common.out.as_deref(), &meta("dephasing", &common, json!({ "steps": steps })))?;
        }
        Command::DephasingHd { dim, steps, common } => {
            if steps == 0 {
                return Err(CliError::Config("steps must be at least 1".into()));
            }
            let ps: Vec<f64> = (0..steps).map(|i| i as f64 / steps as f64).collect();
            let rows = run_dephasing_hd(dim, &ps, &ps, par)?;
            let m = meta("dephasing_hd", &common, json!({ "dim": dim, "steps": steps }));
            write_table(&rows, common.format, common.out.as_deref(), &m)?;
        }
        Command::UnitaryMix { dim, n, samples, common } => {
            let records = run_unitary_mix(&dim, &n, samples, common.seed)?;
            let summary = summarize(&records);
            match summary.exponent {
                Some(e) => eprintln!("log-log slope of mean solve time against d: {e:.3}"),
                None => eprintln!("log-log slope needs at least two dimensions"),
            }
            let mut m = meta("unitary_mix", &common, json!({ "dim": dim, "n": n, "samples": samples }));
            m.summary = Some(serde_json::to_value(&summary)?);
            write_table(&records, common.format, common.out.as_deref(), &m)?;
        }
        Command::Query { choi_a, choi_b, mode, allow_noncptp, common } => {
            let kind = match mode {
                Mode::Cp => Kind::Cp,
                Mode::P => Kind::PQubit,
            };
            let outcome = run_query(&choi_a, &choi_b, kind, allow_noncptp, common.tol)?;
            write_json(&report_to_json(&outcome.report)?, common.out.as_deref())?;
            let verdict = if outcome.divisible { "divisible" } else { "not divisible" };
            eprintln!("{verdict}: distance {:.3e} (tolerance {:.1e})", outcome.report.distance, common.tol);
            return Ok(if outcome.divisible { exit::DIVISIBLE } else { exit::NOT_DIVISIBLE });
        }
    }
    Ok(exit::DIVISIBLE)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit::ERROR as u8)
        }
    }
}
