//! Outage-constrained power allocation for two-round HARQ with a predictor antenna.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};

use rand_distr::{Distribution, Exp1};

use crate::channel::{ConditionalGainDist, SIGMA_MIN};
use crate::mc::par_chunks;
use crate::optim::golden_max;
use crate::quad::{integrate, QuadOptions};
use crate::{Error, Result};

/// Largest s for which the quartic Q₁ fit is used without a warning.
pub const LOGLINEAR_S_MAX: f64 = 10.0;

const I_COEFFS: [f64; 5] = [-0.840, 0.327, -0.740, 0.083, -0.004];
const J_COEFFS: [f64; 5] = [2.174, -0.592, 0.593, -0.092, 0.005];

static WARNED_S_RANGE: AtomicBool = AtomicBool::new(false);

/// Retransmission protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    /// Repetition time diversity: the same codeword, combined by MRC.
    Rtd,
    /// Incremental redundancy: mutual information accumulates.
    Inr,
}

impl Protocol {
    pub const ALL: [Protocol; 2] = [Protocol::Rtd, Protocol::Inr];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Rtd => "rtd",
            Protocol::Inr => "inr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rtd" => Some(Protocol::Rtd),
            "inr" => Some(Protocol::Inr),
            _ => None,
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rate, outage target, round-1 power and mismatch for one HARQ link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarqPolicy {
    pub protocol: Protocol,
    pub rate: f64,
    pub epsilon: f64,
    /// e^R − 1.
    pub theta: f64,
    pub p1: f64,
    pub sigma: f64,
}

impl HarqPolicy {
    pub fn new(protocol: Protocol, rate: f64, epsilon: f64, p1: f64, sigma: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::domain(
                "HarqPolicy",
                format!("rate must be positive, got {rate}"),
            ));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::domain(
                "HarqPolicy",
                format!("epsilon must lie in (0, 1), got {epsilon}"),
            ));
        }
        if !(p1 > 0.0 && p1.is_finite()) {
            return Err(Error::domain(
                "HarqPolicy",
                format!("P1 must be positive, got {p1}"),
            ));
        }
        if !(0.0..1.0).contains(&sigma) {
            return Err(Error::domain(
                "HarqPolicy",
                format!("sigma must lie in [0, 1), got {sigma}"),
            ));
        }
        Ok(Self {
            protocol,
            rate,
            epsilon,
            theta: rate.exp_m1(),
            p1,
            sigma,
        })
    }

    pub fn with_p1(&self, p1: f64) -> Result<Self> {
        Self::new(self.protocol, self.rate, self.epsilon, p1, self.sigma)
    }

    /// ĝ below which round 1 fails.
    pub fn round1_threshold(&self) -> f64 {
        self.theta / self.p1
    }
}

/// Optimized round-1 power with its expected total and measured outage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerResult {
    pub p1: f64,
    pub expected_total: f64,
    /// Pr(both rounds fail), over all slots.
    pub achieved_outage: f64,
    /// Pr(round 2 fails | round 1 failed).
    pub conditional_outage: f64,
}

/// 1 − e^{−θ/P1} for an Exp(1) ĝ.
pub fn round1_outage(rate: f64, p1: f64) -> Result<f64> {
    if !(p1 > 0.0) {
        return Err(Error::domain(
            "round1_outage",
            format!("P1 must be positive, got {p1}"),
        ));
    }
    Ok(-(-rate.exp_m1() / p1).exp_m1())
}

/// Quartic coefficients (I(s), J(s)) of Q₁(s, ρ) ≈ exp(−e^{I(s)}ρ^{J(s)}).
pub fn q1_loglinear_coeffs(s: f64) -> Result<(f64, f64)> {
    if !(s >= 0.0) {
        return Err(Error::domain(
            "q1_loglinear_coeffs",
            format!("s must be nonnegative, got {s}"),
        ));
    }
    if s > LOGLINEAR_S_MAX && !WARNED_S_RANGE.swap(true, Ordering::Relaxed) {
        log::warn!("log-linear Q1 fit evaluated at s = {s:.3} > {LOGLINEAR_S_MAX}, outside its fitted range");
    }
    let horner = |c: &[f64; 5]| c.iter().rev().fold(0.0, |acc, &k| acc * s + k);
    Ok((horner(&I_COEFFS), horner(&J_COEFFS)))
}

/// Q₁(s, ρ) under the log-linear fit.
pub fn loglinear_q1(s: f64, rho: f64) -> Result<f64> {
    let (i, j) = q1_loglinear_coeffs(s)?;
    Ok((-i.exp() * rho.powf(j)).exp())
}

fn shape(g_hat: f64, sigma: f64) -> f64 {
    (2.0 * g_hat * (1.0 - sigma * sigma) / (sigma * sigma)).sqrt()
}

/// Gain x with F(x | ĝ) = ε under the log-linear fit.
pub fn inverse_cdf_approx(epsilon: f64, g_hat: f64, sigma: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(
            "inverse_cdf_approx",
            format!("epsilon must lie in (0, 1), got {epsilon}"),
        ));
    }
    if !(g_hat >= 0.0) {
        return Err(Error::domain(
            "inverse_cdf_approx",
            format!("g_hat must be nonnegative, got {g_hat}"),
        ));
    }
    if sigma < SIGMA_MIN {
        return Ok((1.0 - sigma * sigma) * g_hat);
    }
    let (i, j) = q1_loglinear_coeffs(shape(g_hat, sigma))?;
    let base = -(-epsilon).ln_1p() * (-i).exp();
    Ok(0.5 * sigma * sigma * base.powf(2.0 / j))
}

/// Ω(ĝ) = 1 / F⁻¹(ε).
pub fn omega(epsilon: f64, g_hat: f64, sigma: f64) -> Result<f64> {
    Ok(1.0 / inverse_cdf_approx(epsilon, g_hat, sigma)?)
}

fn check_g_hat(g_hat: f64) -> Result<()> {
    if !(g_hat >= 0.0) {
        return Err(Error::domain(
            "p2",
            format!("g_hat must be nonnegative, got {g_hat}"),
        ));
    }
    Ok(())
}

/// Round-2 power for repetition time diversity, (θ − ĝP1)·Ω(ĝ).
pub fn p2_rtd(g_hat: f64, policy: &HarqPolicy) -> Result<f64> {
    check_g_hat(g_hat)?;
    let deficit = policy.theta - g_hat * policy.p1;
    if deficit <= 0.0 {
        return Ok(0.0);
    }
    Ok(deficit * omega(policy.epsilon, g_hat, policy.sigma)?)
}

/// Round-2 power for incremental redundancy, (e^{R − log(1+ĝP1)} − 1)·Ω(ĝ).
pub fn p2_inr(g_hat: f64, policy: &HarqPolicy) -> Result<f64> {
    check_g_hat(g_hat)?;
    let gp = g_hat * policy.p1;
    if gp >= policy.theta {
        return Ok(0.0);
    }
    let need = (policy.rate - gp.ln_1p()).exp_m1();
    Ok(need * omega(policy.epsilon, g_hat, policy.sigma)?)
}

/// Round-2 power under the policy's protocol.
pub fn p2(g_hat: f64, policy: &HarqPolicy) -> Result<f64> {
    match policy.protocol {
        Protocol::Rtd => p2_rtd(g_hat, policy),
        Protocol::Inr => p2_inr(g_hat, policy),
    }
}

/// P1 + ∫₀^{θ/P1} e^{−x} P2(x) dx.
pub fn expected_total_power(policy: &HarqPolicy) -> Result<f64> {
    if policy.sigma < SIGMA_MIN {
        return Err(Error::divergent(
            "expected_total_power",
            "with exact CSIT the round-2 power is unbounded as g_hat -> 0",
        ));
    }
    let opts = QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-8,
        max_intervals: 2000,
    };
    let r = integrate(
        |x: f64| Ok((-x).exp() * p2(x, policy)?),
        0.0,
        policy.round1_threshold(),
        &opts,
    )?;
    if !(r.error <= 1e-8 * r.value.abs()) && r.value != 0.0 {
        return Err(Error::accuracy(
            "expected_total_power",
            format!("quadrature error {} on {}", r.error, r.value),
        ));
    }
    Ok(policy.p1 + r.value)
}

/// Monte Carlo average of P1 + P2(ĝ)·1{ĝ < θ/P1}.
pub fn expected_total_power_mc(policy: &HarqPolicy, samples: usize, seed: u64) -> Result<f64> {
    let chunks = par_chunks(samples, seed, POWER_STREAM, |rng, range| -> Result<f64> {
        let mut acc = 0.0;
        for _ in range {
            let g_hat: f64 = Exp1.sample(rng);
            acc += p2(g_hat, policy)?;
        }
        Ok(acc)
    });
    let mut sum = 0.0;
    for c in chunks {
        sum += c?;
    }
    Ok(policy.p1 + sum / samples as f64)
}

/// Stream family for the total-power Monte Carlo.
pub const POWER_STREAM: u64 = 20;
/// Stream family for the outage verifier.
pub const OUTAGE_STREAM: u64 = 21;

/// End-to-end and conditional outage counts from the exact accumulation rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageEstimate {
    pub trials: usize,
    pub round1_failures: usize,
    pub failures: usize,
}

impl OutageEstimate {
    pub fn end_to_end(&self) -> f64 {
        self.failures as f64 / self.trials as f64
    }

    pub fn conditional(&self) -> f64 {
        if self.round1_failures == 0 {
            0.0
        } else {
            self.failures as f64 / self.round1_failures as f64
        }
    }
}

/// Simulates ĝ ~ Exp(1) and g | ĝ, then applies the protocol's combining rule.
pub fn simulate_outage(policy: &HarqPolicy, trials: usize, seed: u64) -> Result<OutageEstimate> {
    if trials == 0 {
        return Err(Error::domain(
            "simulate_outage",
            "trials must be at least 1",
        ));
    }
    let coeff = 1.0 - policy.sigma * policy.sigma;
    let chunks = par_chunks(
        trials,
        seed,
        OUTAGE_STREAM,
        |rng, range| -> Result<(usize, usize)> {
            let (mut r1, mut fail) = (0, 0);
            for _ in range {
                let g_hat: f64 = Exp1.sample(rng);
                let gp1 = g_hat * policy.p1;
                if gp1 >= policy.theta {
                    continue;
                }
                r1 += 1;
                let power2 = p2(g_hat, policy)?;
                let g = ConditionalGainDist::new(g_hat, policy.sigma, coeff).sample(rng);
                let ok = match policy.protocol {
                    Protocol::Rtd => gp1 + g * power2 >= policy.theta,
                    Protocol::Inr => gp1.ln_1p() + (g * power2).ln_1p() >= policy.rate,
                };
                if !ok {
                    fail += 1;
                }
            }
            Ok((r1, fail))
        },
    );
    let mut est = OutageEstimate {
        trials,
        round1_failures: 0,
        failures: 0,
    };
    for c in chunks {
        let (r1, f) = c?;
        est.round1_failures += r1;
        est.failures += f;
    }
    Ok(est)
}

/// Points per decade in the coarse P1 scan.
const SCAN_PER_DECADE: usize = 8;
/// Points per decade in the dense fallback scan.
const DENSE_PER_DECADE: usize = 64;

fn log_scan(base: &HarqPolicy, lo: f64, hi: f64, per_decade: usize) -> Result<Vec<(f64, f64)>> {
    let n = (((hi / lo).log10() * per_decade as f64).ceil() as usize).max(2);
    (0..=n)
        .map(|i| {
            let u = lo.ln() + (hi / lo).ln() * i as f64 / n as f64;
            let p = expected_total_power(&base.with_p1(u.exp())?)?;
            Ok((u, p))
        })
        .collect()
}

fn local_minima(values: &[(f64, f64)]) -> usize {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let v = values[i].1;
            let left = if i == 0 {
                f64::INFINITY
            } else {
                values[i - 1].1
            };
            let right = if i + 1 == n {
                f64::INFINITY
            } else {
                values[i + 1].1
            };
            v < left && v <= right
        })
        .count()
}

/// Searches P1 over [θ/50, 10³θ] for the smallest expected total power.
pub fn minimize_p1(protocol: Protocol, rate: f64, epsilon: f64, sigma: f64) -> Result<(f64, f64)> {
    let base = HarqPolicy::new(protocol, rate, epsilon, 1.0, sigma)?;
    let (lo, hi) = (base.theta / 50.0, base.theta * 1e3);
    let mut scan = log_scan(&base, lo, hi, SCAN_PER_DECADE)?;
    if local_minima(&scan) > 1 {
        log::debug!("P1 scan is not unimodal, rescanning densely");
        scan = log_scan(&base, lo, hi, DENSE_PER_DECADE)?;
    }
    let best = scan
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let u_lo = scan[best.saturating_sub(1)].0;
    let u_hi = scan[(best + 1).min(scan.len() - 1)].0;
    let (u, neg) = golden_max(
        |u| Ok(-expected_total_power(&base.with_p1(u.exp())?)?),
        u_lo,
        u_hi,
        1e-9,
    )?;
    if -neg <= scan[best].1 {
        Ok((u.exp(), -neg))
    } else {
        Ok((scan[best].0.exp(), scan[best].1))
    }
}

/// Minimizes P̄ over P1 and verifies the resulting outage by simulation.
pub fn optimize_p1(
    protocol: Protocol,
    rate: f64,
    epsilon: f64,
    sigma: f64,
    trials: usize,
    seed: u64,
) -> Result<PowerResult> {
    let (p1, expected_total) = minimize_p1(protocol, rate, epsilon, sigma)?;
    let policy = HarqPolicy::new(protocol, rate, epsilon, p1, sigma)?;
    let est = simulate_outage(&policy, trials, seed)?;
    Ok(PowerResult {
        p1,
        expected_total,
        achieved_outage: est.end_to_end(),
        conditional_outage: est.conditional(),
    })
}

/// (mean of log(1+x), log(1 + mean of x)) over nonnegative gains.
pub fn jensen_check(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() || values.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::domain(
            "jensen_check",
            "needs a nonempty list of nonnegative values",
        ));
    }
    let n = values.len() as f64;
    let lhs = values.iter().map(|v| v.ln_1p()).sum::<f64>() / n;
    let rhs = (values.iter().sum::<f64>() / n).ln_1p();
    Ok((lhs.min(rhs), rhs))
}
