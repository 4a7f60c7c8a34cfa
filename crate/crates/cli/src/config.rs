//! Config file schema and resolution of file, flag and default values into
//! one fully specified plan per experiment.

use std::collections::BTreeMap;
use std::path::Path;

use clap::ValueEnum;
use mpa_core::experiments::stepped;
use mpa_core::harq_power::Protocol;
use mpa_core::marcum_approx::Variant;
use mpa_core::rate_adapt::PolicyKind;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum)]
pub enum Experiment {
    ApproxCurves,
    IntegralCheck,
    RateSweep,
    SpeedSweep,
    DelaySweep,
    KappaSweep,
    HarqSweep,
    Acceptance,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ApproxCurves => "approx-curves",
            Experiment::IntegralCheck => "integral-check",
            Experiment::RateSweep => "rate-sweep",
            Experiment::SpeedSweep => "speed-sweep",
            Experiment::DelaySweep => "delay-sweep",
            Experiment::KappaSweep => "kappa-sweep",
            Experiment::HarqSweep => "harq-sweep",
            Experiment::Acceptance => "acceptance",
        }
    }

    /// Stem of the CSV (and sidecar) written by this experiment.
    pub fn file_stem(self) -> &'static str {
        match self {
            Experiment::ApproxCurves => "approx_curves",
            Experiment::IntegralCheck => "integrals",
            Experiment::RateSweep => "rate_sweep",
            Experiment::SpeedSweep => "speed_sweep",
            Experiment::DelaySweep => "delay_sweep",
            Experiment::KappaSweep => "kappa_sweep",
            Experiment::HarqSweep => "harq",
            Experiment::Acceptance => "acceptance",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::value_variants()
            .iter()
            .copied()
            .find(|e| e.name() == s)
    }
}

/// A numeric axis: a number, an array, `"A:B:STEP"` or a comma list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    One(f64),
    List(Vec<f64>),
    Text(String),
}

impl Axis {
    fn values(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let v = match self {
            Axis::One(x) => vec![*x],
            Axis::List(v) => v.clone(),
            Axis::Text(s) => parse_axis(s).map_err(|e| CliError::Config(format!("{key}: {e}")))?,
        };
        if v.is_empty() {
            return Err(CliError::Config(format!("{key}: empty list")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config(format!("{key}: values must be finite")));
        }
        Ok(v)
    }
}

/// `A:B:STEP` (inclusive of B) or a comma-separated list.
pub fn parse_axis(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("not a number: {t:?}"))
    };
    let s = s.trim();
    if s.is_empty() {
        return Err("empty list".into());
    }
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, step] = parts[..] else {
            return Err(format!("expected A:B:STEP, got {s:?}"));
        };
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if !(step > 0.0) || b < a {
            return Err(format!("range {s:?} needs STEP > 0 and B >= A"));
        }
        return stepped(a, b, step).map_err(|e| e.to_string());
    }
    s.split(',').map(num).collect()
}

fn parse_names<T>(
    s: &str,
    what: &str,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Vec<T>, String> {
    let out: Vec<T> = s
        .split(',')
        .map(|t| parse(t.trim()).ok_or_else(|| format!("unknown {what} {:?}", t.trim())))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(format!("empty {what} list"));
    }
    Ok(out)
}

pub fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s)
        .ok_or_else(|| format!("unknown variant {s:?}; expected lemma1, coro1, coro2 or coro3"))
}

pub fn parse_protocols(s: &str) -> Result<Vec<Protocol>, String> {
    parse_names(s, "protocol", Protocol::parse)
}

pub fn parse_policy(s: &str) -> Option<PolicyKind> {
    PolicyKind::ALL.into_iter().find(|k| k.name() == s)
}

/// Keys accepted at the top level and in each experiment section.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub f_c_hz: Option<f64>,
    pub d_a_wavelengths: Option<f64>,
    pub snr_db: Option<Axis>,
    pub v_kmh: Option<Axis>,
    pub delta_ms: Option<Axis>,
    pub kappa: Option<Axis>,
    pub variant: Option<String>,
    pub policies: Option<Vec<String>>,
    pub alpha: Option<Axis>,
    pub beta_step: Option<f64>,
    pub rho: Option<Axis>,
    pub t_alpha: Option<Axis>,
    pub t_m: Option<Axis>,
    pub t_a: Option<Axis>,
    pub protocol: Option<Vec<String>>,
    pub rate_npcu: Option<Axis>,
    pub epsilon: Option<Axis>,
    pub sigma: Option<Axis>,
    pub criteria: Option<Vec<u8>>,
    pub tolerance_scale: Option<f64>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub experiments: Option<Vec<String>>,
    pub out: Option<String>,
    /// Top-level keys, shared by every experiment.
    pub defaults: Section,
    /// Per-experiment sections, keyed by experiment name.
    pub experiment: BTreeMap<String, Section>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        let experiments = table
            .remove("experiments")
            .map(|v| v.try_into::<Vec<String>>())
            .transpose()
            .map_err(|e| format!("experiments: {e}"))?;
        let out = table
            .remove("out")
            .map(|v| v.try_into::<String>())
            .transpose()
            .map_err(|e| format!("out: {e}"))?;
        let experiment = table
            .remove("experiment")
            .map(|v| v.try_into::<BTreeMap<String, Section>>())
            .transpose()
            .map_err(|e| format!("[experiment]: {e}"))?
            .unwrap_or_default();
        for name in experiment.keys() {
            if Experiment::parse(name).is_none() {
                return Err(format!("unknown experiment section [experiment.{name}]"));
            }
        }
        let defaults: Section = toml::Value::Table(table)
            .try_into()
            .map_err(|e| e.to_string())?;
        Ok(FileConfig {
            experiments,
            out,
            defaults,
            experiment,
        })
    }

    pub fn experiments(&self) -> Result<Option<Vec<Experiment>>, CliError> {
        self.experiments
            .as_ref()
            .map(|names| {
                names
                    .iter()
                    .map(|n| {
                        Experiment::parse(n)
                            .ok_or_else(|| CliError::Config(format!("unknown experiment {n:?}")))
                    })
                    .collect()
            })
            .transpose()
    }
}

/// Values given on the command line; these win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub snr_db: Option<Vec<f64>>,
    pub v_kmh: Option<Vec<f64>>,
    pub delta_ms: Option<Vec<f64>>,
    pub kappa: Option<Vec<f64>>,
    pub variant: Option<Variant>,
    pub protocol: Option<Vec<Protocol>>,
    pub epsilon: Option<Vec<f64>>,
}

/// Radio geometry and the swept axes of the throughput experiments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPlan {
    pub f_c_hz: f64,
    pub d_a_wavelengths: f64,
    pub snr_db: Vec<f64>,
    pub v_kmh: Vec<f64>,
    pub delta_ms: Vec<f64>,
    pub kappa: Vec<f64>,
    pub variant: String,
    pub policies: Vec<String>,
    pub samples: usize,
    pub seed: u64,
}

/// A fully resolved experiment. Serialized form is what the config hash covers.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Plan {
    ApproxCurves {
        alpha: Vec<f64>,
        beta_step: f64,
    },
    IntegralCheck {
        alpha: f64,
        rho: Vec<f64>,
        t_alpha: Vec<f64>,
        t_m: Vec<f64>,
        t_a: Vec<f64>,
    },
    RateSweep(SweepPlan),
    SpeedSweep(SweepPlan),
    DelaySweep(SweepPlan),
    KappaSweep(SweepPlan),
    HarqSweep {
        protocol: Vec<String>,
        rate_npcu: Vec<f64>,
        epsilon: Vec<f64>,
        sigma: Vec<f64>,
        samples: usize,
        seed: u64,
    },
    Acceptance {
        criteria: Vec<u8>,
        tolerance_scale: f64,
        seed: u64,
    },
}

impl Plan {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Plan::ApproxCurves { .. } | Plan::IntegralCheck { .. } => None,
            Plan::RateSweep(s)
            | Plan::SpeedSweep(s)
            | Plan::DelaySweep(s)
            | Plan::KappaSweep(s) => Some(s.seed),
            Plan::HarqSweep { seed, .. } | Plan::Acceptance { seed, .. } => Some(*seed),
        }
    }

    pub fn samples(&self) -> Option<usize> {
        match self {
            Plan::RateSweep(s)
            | Plan::SpeedSweep(s)
            | Plan::DelaySweep(s)
            | Plan::KappaSweep(s) => Some(s.samples),
            Plan::HarqSweep { samples, .. } => Some(*samples),
            _ => None,
        }
    }
}

const DEFAULT_SAMPLES: usize = 100_000;

/// Looks a key up in flags, then the experiment section, then the top level.
struct Layers<'a> {
    flags: &'a Overrides,
    section: &'a Section,
    top: &'a Section,
}

impl Layers<'_> {
    fn scalar<T: Copy>(&self, get: impl Fn(&Section) -> Option<T>) -> Option<T> {
        get(self.section).or_else(|| get(self.top))
    }

    fn axis(
        &self,
        key: &str,
        flag: Option<&Vec<f64>>,
        get: impl Fn(&Section) -> Option<&Axis>,
        default: &[f64],
    ) -> Result<Vec<f64>, CliError> {
        if let Some(v) = flag {
            return Ok(v.clone());
        }
        match get(self.section).or_else(|| get(self.top)) {
            Some(a) => a.values(key),
            None => Ok(default.to_vec()),
        }
    }

    fn seed(&self, exp: Experiment) -> Result<u64, CliError> {
        self.flags
            .seed
            .or_else(|| self.scalar(|s| s.seed))
            .ok_or_else(|| {
                CliError::Config(format!(
                    "{} is a Monte Carlo experiment and needs a seed",
                    exp.name()
                ))
            })
    }

    fn samples(&self) -> Result<usize, CliError> {
        let n = self
            .flags
            .samples
            .or_else(|| self.scalar(|s| s.samples))
            .unwrap_or(DEFAULT_SAMPLES);
        if n == 0 {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        Ok(n)
    }
}

fn check_all(
    key: &str,
    values: &[f64],
    ok: impl Fn(f64) -> bool,
    want: &str,
) -> Result<(), CliError> {
    match values.iter().find(|&&x| !ok(x)) {
        Some(x) => Err(CliError::Config(format!(
            "{key} = {x} is out of range; {want}"
        ))),
        None => Ok(()),
    }
}

struct SweepDefaults {
    snr_db: &'static [f64],
    v_kmh: &'static [f64],
    delta_ms: &'static [f64],
    kappa: &'static [f64],
    policies: &'static [&'static str],
}

fn sweep_defaults(exp: Experiment) -> SweepDefaults {
    const SNR_0_30: [f64; 11] = [0.0, 3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0, 27.0, 30.0];
    const ALL: [&str; 3] = ["adaptive", "genie", "nocsit"];
    const SPEEDS: [f64; 25] = {
        let mut v = [0.0; 25];
        let mut i = 0;
        while i < 25 {
            v[i] = 90.0 + 2.5 * i as f64;
            i += 1;
        }
        v
    };
    const DELAYS: [f64; 21] = {
        let mut v = [0.0; 21];
        let mut i = 0;
        while i < 21 {
            v[i] = 3.0 + 0.2 * i as f64;
            i += 1;
        }
        v
    };
    match exp {
        Experiment::SpeedSweep => SweepDefaults {
            snr_db: &[23.0],
            v_kmh: &SPEEDS,
            delta_ms: &[5.0],
            kappa: &[1.0, 0.9, 0.66],
            policies: &["adaptive"],
        },
        Experiment::DelaySweep => SweepDefaults {
            snr_db: &[23.0],
            v_kmh: &[120.0],
            delta_ms: &DELAYS,
            kappa: &[1.0, 0.9, 0.66],
            policies: &["adaptive"],
        },
        Experiment::KappaSweep => SweepDefaults {
            snr_db: &SNR_0_30,
            v_kmh: &[114.0],
            delta_ms: &[5.0],
            kappa: &[1.0, 0.95, 0.9, 0.8, 0.66],
            policies: &["adaptive"],
        },
        _ => SweepDefaults {
            snr_db: &SNR_0_30,
            v_kmh: &[114.0],
            delta_ms: &[5.0],
            kappa: &[1.0],
            policies: &ALL,
        },
    }
}

fn resolve_sweep(exp: Experiment, l: &Layers) -> Result<SweepPlan, CliError> {
    let d = sweep_defaults(exp);
    let f = l.flags;
    let plan = SweepPlan {
        f_c_hz: l
            .scalar(|s| s.f_c_hz)
            .unwrap_or(mpa_core::channel::DEFAULT_CARRIER_HZ),
        d_a_wavelengths: l
            .scalar(|s| s.d_a_wavelengths)
            .unwrap_or(mpa_core::channel::DEFAULT_SEPARATION_WAVELENGTHS),
        snr_db: l.axis("snr_db", f.snr_db.as_ref(), |s| s.snr_db.as_ref(), d.snr_db)?,
        v_kmh: l.axis("v_kmh", f.v_kmh.as_ref(), |s| s.v_kmh.as_ref(), d.v_kmh)?,
        delta_ms: l.axis(
            "delta_ms",
            f.delta_ms.as_ref(),
            |s| s.delta_ms.as_ref(),
            d.delta_ms,
        )?,
        kappa: l.axis("kappa", f.kappa.as_ref(), |s| s.kappa.as_ref(), d.kappa)?,
        variant: match (
            f.variant,
            l.section.variant.as_ref().or(l.top.variant.as_ref()),
        ) {
            (Some(v), _) => v.name().to_string(),
            (None, Some(s)) => parse_variant(s)
                .map_err(CliError::Config)?
                .name()
                .to_string(),
            (None, None) => Variant::Lemma1.name().to_string(),
        },
        policies: match l.section.policies.as_ref().or(l.top.policies.as_ref()) {
            Some(p) => {
                if p.is_empty() {
                    return Err(CliError::Config("policies: empty list".into()));
                }
                for name in p {
                    if parse_policy(name).is_none() {
                        return Err(CliError::Config(format!(
                            "unknown policy {name:?}; expected adaptive, genie or nocsit"
                        )));
                    }
                }
                p.clone()
            }
            None => d.policies.iter().map(|s| s.to_string()).collect(),
        },
        samples: l.samples()?,
        seed: l.seed(exp)?,
    };
    if !(plan.f_c_hz > 0.0 && plan.f_c_hz.is_finite()) {
        return Err(CliError::Config(format!(
            "f_c_hz = {} must be positive",
            plan.f_c_hz
        )));
    }
    if !(plan.d_a_wavelengths >= 0.0 && plan.d_a_wavelengths.is_finite()) {
        return Err(CliError::Config(format!(
            "d_a_wavelengths = {} must be nonnegative",
            plan.d_a_wavelengths
        )));
    }
    check_all(
        "v_kmh",
        &plan.v_kmh,
        |v| v >= 0.0,
        "speeds must be nonnegative",
    )?;
    check_all(
        "delta_ms",
        &plan.delta_ms,
        |d| d >= 0.0,
        "delays must be nonnegative",
    )?;
    check_all(
        "kappa",
        &plan.kappa,
        |k| (0.0..=1.0).contains(&k),
        "kappa lies in [0, 1]",
    )?;
    Ok(plan)
}

/// Resolves one experiment from flags, the file and built-in defaults.
pub fn resolve(exp: Experiment, file: &FileConfig, flags: &Overrides) -> Result<Plan, CliError> {
    let empty = Section::default();
    let l = Layers {
        flags,
        section: file.experiment.get(exp.name()).unwrap_or(&empty),
        top: &file.defaults,
    };
    let plan = match exp {
        Experiment::ApproxCurves => {
            let alpha = l.axis("alpha", None, |s| s.alpha.as_ref(), &[0.1, 0.5, 1.0, 2.0])?;
            check_all("alpha", &alpha, |a| a >= 0.0, "alpha must be nonnegative")?;
            let beta_step = l.scalar(|s| s.beta_step).unwrap_or(0.05);
            if !(beta_step > 0.0) {
                return Err(CliError::Config("beta_step must be positive".into()));
            }
            Plan::ApproxCurves { alpha, beta_step }
        }
        Experiment::IntegralCheck => {
            let alpha = match l.section.alpha.as_ref().or(l.top.alpha.as_ref()) {
                Some(a) => match a.values("alpha")?[..] {
                    [x] => x,
                    _ => {
                        return Err(CliError::Config(
                            "integral-check takes a single alpha".into(),
                        ))
                    }
                },
                None => 2.0,
            };
            let rho = l.axis(
                "rho",
                None,
                |s| s.rho.as_ref(),
                &stepped(0.0, 3.0, 0.25).expect("valid range"),
            )?;
            let t_alpha = l.axis("t_alpha", None, |s| s.t_alpha.as_ref(), &[1.0, 2.0, 3.0])?;
            let t_m = l.axis("t_m", None, |s| s.t_m.as_ref(), &[0.0, 1.0, 2.0, 4.0])?;
            let t_a = l.axis("t_a", None, |s| s.t_a.as_ref(), &[1.0, 2.0, 5.0])?;
            check_all("alpha", &[alpha], |a| a > 0.0, "alpha must be positive")?;
            check_all("rho", &rho, |r| r >= 0.0, "rho must be nonnegative")?;
            check_all("t_alpha", &t_alpha, |a| a > 0.0, "alpha must be positive")?;
            check_all("t_m", &t_m, |m| m >= 0.0, "m must be nonnegative")?;
            check_all("t_a", &t_a, |a| a > 0.0, "a must be positive")?;
            Plan::IntegralCheck {
                alpha,
                rho,
                t_alpha,
                t_m,
                t_a,
            }
        }
        Experiment::RateSweep => Plan::RateSweep(resolve_sweep(exp, &l)?),
        Experiment::SpeedSweep => Plan::SpeedSweep(resolve_sweep(exp, &l)?),
        Experiment::DelaySweep => Plan::DelaySweep(resolve_sweep(exp, &l)?),
        Experiment::KappaSweep => Plan::KappaSweep(resolve_sweep(exp, &l)?),
        Experiment::HarqSweep => {
            let protocol: Vec<Protocol> = match (
                &flags.protocol,
                l.section.protocol.as_ref().or(l.top.protocol.as_ref()),
            ) {
                (Some(p), _) => p.clone(),
                (None, Some(names)) => {
                    parse_protocols(&names.join(",")).map_err(CliError::Config)?
                }
                (None, None) => Protocol::ALL.to_vec(),
            };
            let rate_npcu = l.axis(
                "rate_npcu",
                None,
                |s| s.rate_npcu.as_ref(),
                &[0.5, 1.0, 2.0],
            )?;
            let epsilon = l.axis(
                "epsilon",
                flags.epsilon.as_ref(),
                |s| s.epsilon.as_ref(),
                &[1e-1, 1e-2],
            )?;
            let sigma = l.axis("sigma", None, |s| s.sigma.as_ref(), &[0.3, 0.6])?;
            check_all(
                "rate_npcu",
                &rate_npcu,
                |r| r > 0.0,
                "rates must be positive",
            )?;
            check_all(
                "epsilon",
                &epsilon,
                |e| e > 0.0 && e < 1.0,
                "epsilon lies in (0, 1)",
            )?;
            check_all(
                "sigma",
                &sigma,
                |s| (0.0..1.0).contains(&s),
                "sigma lies in [0, 1)",
            )?;
            Plan::HarqSweep {
                protocol: protocol.iter().map(|p| p.name().to_string()).collect(),
                rate_npcu,
                epsilon,
                sigma,
                samples: l.samples()?,
                seed: l.seed(exp)?,
            }
        }
        Experiment::Acceptance => {
            let criteria = l
                .section
                .criteria
                .clone()
                .or_else(|| l.top.criteria.clone())
                .unwrap_or_else(|| (1..=10).collect());
            if criteria.is_empty() {
                return Err(CliError::Config("criteria: empty list".into()));
            }
            if let Some(c) = criteria.iter().find(|c| !(1..=10).contains(*c)) {
                return Err(CliError::Config(format!(
                    "no acceptance criterion {c}; criteria are 1 to 10"
                )));
            }
            let tolerance_scale = l.scalar(|s| s.tolerance_scale).unwrap_or(1.0);
            if !(tolerance_scale >= 0.0 && tolerance_scale.is_finite()) {
                return Err(CliError::Config(
                    "tolerance_scale must be a nonnegative number".into(),
                ));
            }
            Plan::Acceptance {
                criteria,
                tolerance_scale,
                seed: l.seed(exp)?,
            }
        }
    };
    Ok(plan)
}
