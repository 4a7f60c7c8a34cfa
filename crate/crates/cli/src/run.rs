//! Executes a resolved plan and writes its CSV and metadata sidecar.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use mpa_core::acceptance::{self, Criterion, Thresholds, G_PAIRS};
use mpa_core::experiments::{
    approx_curves, csv_bytes, g_integral_table, harq_sweep, num, rate_sweep, t_integral_table,
    CsvRow, SweepGrid,
};
use mpa_core::harq_power::Protocol;
use mpa_core::marcum_approx::Variant;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{parse_policy, Experiment, Plan, SweepPlan};
use crate::error::CliError;

/// What one experiment produced.
pub struct Outcome {
    pub csv: PathBuf,
    pub rows: usize,
    /// Printable pass/fail table, for acceptance runs.
    pub report: Vec<String>,
    pub failed: Vec<u8>,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    experiment: &'static str,
    csv: String,
    rows: usize,
    seed: Option<u64>,
    samples: Option<usize>,
    config_sha256: String,
    config: &'a Plan,
    mpa_core_version: &'static str,
    mpa_cli_version: &'static str,
}

/// SHA-256 of the plan's canonical JSON form.
pub fn config_hash(plan: &Plan) -> String {
    let json = serde_json::to_vec(plan).expect("plan serializes");
    Sha256::digest(&json)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn grid(p: &SweepPlan) -> SweepGrid {
    SweepGrid {
        f_c: p.f_c_hz,
        d_a_wavelengths: p.d_a_wavelengths,
        snr_db: p.snr_db.clone(),
        kappa: p.kappa.clone(),
        v_kmh: p.v_kmh.clone(),
        delta_ms: p.delta_ms.clone(),
    }
}

fn sweep(p: &SweepPlan) -> Result<(Vec<u8>, usize), CliError> {
    let kinds: Vec<_> = p
        .policies
        .iter()
        .map(|n| parse_policy(n).expect("validated"))
        .collect();
    let variant = Variant::parse(&p.variant).expect("validated");
    let rows = rate_sweep(&grid(p), &kinds, variant, p.samples, p.seed)?;
    Ok((csv_bytes(&rows)?, rows.len()))
}

/// One line of the acceptance report table.
struct ReportRow<'a>(&'a Criterion);

impl CsvRow for ReportRow<'_> {
    const HEADER: &'static [&'static str] = &[
        "criterion",
        "title",
        "passed",
        "detail",
        "elapsed_s",
        "budget_s",
    ];

    fn fields(&self) -> Vec<String> {
        let c = self.0;
        vec![
            c.id.to_string(),
            c.title.to_string(),
            c.passed.to_string(),
            c.detail.clone(),
            num(c.elapsed.as_secs_f64()),
            c.budget
                .map(|b: Duration| num(b.as_secs_f64()))
                .unwrap_or_default(),
        ]
    }
}

/// Runs `plan` and writes `<stem>.csv` and `<stem>.meta.json` into `out`.
pub fn run(exp: Experiment, plan: &Plan, out: &Path) -> Result<Outcome, CliError> {
    fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.display().to_string(),
        source,
    })?;
    let mut report = Vec::new();
    let mut failed = Vec::new();
    let (bytes, rows) = match plan {
        Plan::ApproxCurves { alpha, beta_step } => {
            let rows = approx_curves(alpha, *beta_step)?;
            (csv_bytes(&rows)?, rows.len())
        }
        Plan::IntegralCheck {
            alpha,
            rho,
            t_alpha,
            t_m,
            t_a,
        } => {
            let mut rows = g_integral_table(*alpha, &G_PAIRS, rho)?;
            rows.extend(t_integral_table(t_alpha, t_m, t_a)?);
            (csv_bytes(&rows)?, rows.len())
        }
        Plan::RateSweep(p) | Plan::SpeedSweep(p) | Plan::DelaySweep(p) | Plan::KappaSweep(p) => {
            sweep(p)?
        }
        Plan::HarqSweep {
            protocol,
            rate_npcu,
            epsilon,
            sigma,
            samples,
            seed,
        } => {
            let protocols: Vec<Protocol> = protocol
                .iter()
                .map(|n| Protocol::parse(n).expect("validated"))
                .collect();
            let rows = harq_sweep(&protocols, rate_npcu, epsilon, sigma, *samples, *seed)?;
            (csv_bytes(&rows)?, rows.len())
        }
        Plan::Acceptance {
            criteria,
            tolerance_scale,
            seed,
        } => {
            let th = Thresholds::PINNED.scaled(*tolerance_scale);
            let result = acceptance::run(*seed, criteria, &th)?;
            let dir = out.join("acceptance");
            fs::create_dir_all(&dir).map_err(|source| CliError::Io {
                path: dir.display().to_string(),
                source,
            })?;
            for (name, bytes) in &result.artifacts {
                write(&dir.join(name), bytes)?;
            }
            report = result.lines();
            failed = result
                .criteria
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.id)
                .collect();
            let rows: Vec<ReportRow> = result.criteria.iter().map(ReportRow).collect();
            (csv_bytes(&rows)?, rows.len())
        }
    };
    let csv = out.join(format!("{}.csv", exp.file_stem()));
    write(&csv, &bytes)?;
    let sidecar = Sidecar {
        experiment: exp.name(),
        csv: format!("{}.csv", exp.file_stem()),
        rows,
        seed: plan.seed(),
        samples: plan.samples(),
        config_sha256: config_hash(plan),
        config: plan,
        mpa_core_version: mpa_core::VERSION,
        mpa_cli_version: env!("CARGO_PKG_VERSION"),
    };
    let mut meta = serde_json::to_vec_pretty(&sidecar).expect("sidecar serializes");
    meta.push(b'\n');
    write(&out.join(format!("{}.meta.json", exp.file_stem())), &meta)?;
    Ok(Outcome {
        csv,
        rows,
        report,
        failed,
    })
}
