//! `mpa`: runs the experiment families and the acceptance suite, writing
//! plot-ready CSV tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use mpa_core::harq_power::Protocol;
use mpa_core::marcum_approx::Variant;

use crate::config::{
    parse_axis, parse_protocols, parse_variant, Experiment, FileConfig, Overrides,
};
use crate::error::CliError;

// Aliases keep clap from treating these as repeatable flags; each flag takes one list.
type Values = Vec<f64>;
type Protocols = Vec<Protocol>;

#[derive(Debug, Parser)]
#[command(
    name = "mpa",
    version,
    about = "Marcum-Q approximation and predictor-antenna link-adaptation experiments",
    after_long_help = include_str!("../SCHEMA.md")
)]
struct Cli {
    /// Experiments to run, comma separated or repeated. Overrides `experiments` in the config.
    #[arg(long, value_enum, value_delimiter = ',')]
    experiment: Vec<Experiment>,

    /// TOML config: top-level keys apply to every experiment, [experiment.<name>] sections to one.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed for every Monte Carlo stream. Required by the Monte Carlo experiments.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Monte Carlo samples per point (trials per point for harq-sweep).
    #[arg(long, value_name = "N")]
    samples: Option<usize>,

    /// Output directory [default: results].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// SNR axis in dB.
    #[arg(long, value_name = "A:B:STEP", value_parser = parse_axis)]
    snr_db: Option<Values>,

    /// Speed axis in km/h.
    #[arg(long, value_name = "A:B:STEP", value_parser = parse_axis)]
    v_kmh: Option<Values>,

    /// Feedback-delay axis in ms.
    #[arg(long, value_name = "A:B:STEP", value_parser = parse_axis)]
    delta_ms: Option<Values>,

    /// Estimation correlation values, comma separated.
    #[arg(long, value_name = "LIST", value_parser = parse_axis)]
    kappa: Option<Values>,

    /// Semi-linear line used by the adaptive rate.
    #[arg(long, value_name = "lemma1|coro1|coro2|coro3", value_parser = parse_variant)]
    variant: Option<Variant>,

    /// HARQ protocols, comma separated.
    #[arg(long, value_name = "rtd|inr", value_parser = parse_protocols)]
    protocol: Option<Protocols>,

    /// HARQ outage targets, comma separated.
    #[arg(long, value_name = "LIST", value_parser = parse_axis)]
    epsilon: Option<Values>,
}

fn threads_from_env() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MPA_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "MPA_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the worker pool: {e}")))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    threads_from_env()?;
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let experiments = if cli.experiment.is_empty() {
        file.experiments()?.unwrap_or_default()
    } else {
        cli.experiment.clone()
    };
    if experiments.is_empty() {
        return Err(CliError::Config(
            "no experiment selected; pass --experiment or set `experiments` in the config".into(),
        ));
    }
    let out = cli
        .out
        .clone()
        .or_else(|| file.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("results"));
    let flags = Overrides {
        seed: cli.seed,
        samples: cli.samples,
        snr_db: cli.snr_db,
        v_kmh: cli.v_kmh,
        delta_ms: cli.delta_ms,
        kappa: cli.kappa,
        variant: cli.variant,
        protocol: cli.protocol,
        epsilon: cli.epsilon,
    };
    // Resolve everything first so a bad section fails before any work starts.
    let plans = experiments
        .iter()
        .map(|&e| config::resolve(e, &file, &flags).map(|p| (e, p)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut failed = Vec::new();
    for (exp, plan) in &plans {
        log::info!("running {}", exp.name());
        let outcome = run::run(*exp, plan, &out)?;
        for line in &outcome.report {
            println!("{line}");
        }
        println!(
            "{}: wrote {} ({} rows)",
            exp.name(),
            outcome.csv.display(),
            outcome.rows
        );
        failed.extend(outcome.failed);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(failed))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mpa: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
