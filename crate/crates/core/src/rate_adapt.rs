//! Throughput-optimized rate adaptation from the predictor-antenna estimate.

use std::fmt;

use rand_distr::{Distribution, Exp1};

use crate::channel::{ConditionalGainDist, MismatchModel};
use crate::marcum_approx::{SemiLinearParams, Variant};
use crate::mc::par_chunks;
use crate::optim::{argmax, count_local_maxima, golden_max, grid};
use crate::special_fn::{exp_integral_e1, lambert_w0};
use crate::{Error, Result};

/// Coarse grid step of the rate oracle, in npcu.
pub const ORACLE_GRID_STEP: f64 = 1.0 / 256.0;
/// Final bracket width of the rate oracle, in npcu.
pub const ORACLE_WIDTH: f64 = 1.0 / 1_048_576.0;
/// Step of the dense fallback grid.
const DENSE_STEP: f64 = 1.0 / 4096.0;

/// Transmit power (linear, unit noise) and rate in npcu.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePolicy {
    pub power: f64,
    pub rate: f64,
    pub variant: Variant,
}

/// Throughput, outage probability and the rate that produced them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputResult {
    pub eta: f64,
    pub outage: f64,
    pub rate_used: f64,
}

/// Which transmitter the expected throughput is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Closed-form rate chosen from ĝ.
    Adaptive,
    /// Rate log(1 + gP) with the true gain known.
    Genie,
    /// One fixed rate for all slots.
    NoCsit,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Adaptive, PolicyKind::Genie, PolicyKind::NoCsit];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Adaptive => "adaptive",
            PolicyKind::Genie => "genie",
            PolicyKind::NoCsit => "nocsit",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Throughput R·(1 − F((e^R − 1)/P)) for one ĝ.
pub fn instantaneous_throughput(
    dist: &ConditionalGainDist,
    policy: &RatePolicy,
) -> Result<ThroughputResult> {
    check_power(policy.power)?;
    if !(policy.rate >= 0.0) {
        return Err(Error::domain(
            "instantaneous_throughput",
            format!("negative rate {}", policy.rate),
        ));
    }
    let outage = outage_probability(dist, policy.rate, policy.power)?;
    Ok(ThroughputResult {
        eta: policy.rate * (1.0 - outage),
        outage,
        rate_used: policy.rate,
    })
}

/// Pr(log(1 + gP) < R | ĝ).
pub fn outage_probability(dist: &ConditionalGainDist, rate: f64, power: f64) -> Result<f64> {
    if rate == 0.0 {
        return Ok(0.0);
    }
    if rate.is_infinite() {
        return Ok(1.0);
    }
    let threshold = rate.exp_m1() / power;
    if dist.is_degenerate() {
        // Strict inequality; allow for rounding in log/exp round trips.
        let k = dist.known_power();
        return Ok(if threshold > k * (1.0 + 1e-12) + 1e-300 {
            1.0
        } else {
            0.0
        });
    }
    dist.cdf(threshold)
}

fn throughput_at(dist: &ConditionalGainDist, rate: f64, power: f64) -> Result<f64> {
    Ok(rate * (1.0 - outage_probability(dist, rate, power)?))
}

fn check_power(p: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::domain(
            "rate_adapt",
            format!("power must be positive, got {p}"),
        ));
    }
    Ok(())
}

/// Throughput-maximizing rate by grid search and golden-section refinement.
pub fn optimal_rate_oracle(dist: &ConditionalGainDist, power: f64) -> Result<f64> {
    check_power(power)?;
    if dist.is_degenerate() {
        return Ok((dist.known_power() * power).ln_1p());
    }
    let top = (power * dist.quantile(0.9999)?).ln_1p();
    let f = |r: f64| throughput_at(dist, r, power);
    let steps = ((top / ORACLE_GRID_STEP).ceil() as usize).max(8);
    let mut values = grid(f, 0.0, top, steps)?;
    let mut step = top / steps as f64;
    let peak = values[argmax(&values)].1;
    if count_local_maxima(&values, peak * 1e-6) > 1 {
        log::debug!("rate oracle: several local maxima on the coarse grid, using dense grid");
        let dense = ((top / DENSE_STEP).ceil() as usize).max(steps);
        values = grid(f, 0.0, top, dense)?;
        step = top / dense as f64;
    }
    let best = values[argmax(&values)].0;
    let lo = (best - step).max(0.0);
    let hi = (best + step).min(top);
    let (r, v) = golden_max(f, lo, hi, ORACLE_WIDTH)?;
    let at_best = f(best)?;
    Ok(if at_best > v { best } else { r })
}

/// Throughput-maximizing rate by golden section alone, assuming η(R) is unimodal.
/// Much cheaper than [`optimal_rate_oracle`]; used for Monte Carlo over ĝ.
pub fn optimal_rate_golden(dist: &ConditionalGainDist, power: f64) -> Result<f64> {
    check_power(power)?;
    if dist.is_degenerate() {
        return Ok((dist.known_power() * power).ln_1p());
    }
    // |h| ≤ √k + σ|z| and Pr(|z|² > t) = e^{−t} bound the 99.99% quantile
    let reach = dist.known_power().sqrt() + dist.sigma_eff * 10_000f64.ln().sqrt();
    let top = (power * reach * reach).ln_1p();
    Ok(golden_max(|r| throughput_at(dist, r, power), 0.0, top, ORACLE_WIDTH)?.0)
}

/// Argument y of the Lambert-W rate formula, (1 + o1·o2 − o3)·e·√(2Pσ²)/(2·o1).
pub fn lambert_argument(params: &SemiLinearParams<f64>, sigma_eff: f64, power: f64) -> f64 {
    let k = 1.0 + params.o1 * params.o2 - params.o3;
    if k <= 0.0 || params.o1 <= 0.0 {
        return 0.0;
    }
    k * std::f64::consts::E * (2.0 * power * sigma_eff * sigma_eff).sqrt() / (2.0 * params.o1)
}

/// R = max(0, 2(W(y) − 1)) from precomputed line parameters.
pub fn closed_form_rate_from_params(
    params: &SemiLinearParams<f64>,
    sigma_eff: f64,
    power: f64,
) -> Result<f64> {
    let y = lambert_argument(params, sigma_eff, power);
    if y <= 0.0 {
        return Ok(0.0);
    }
    Ok((2.0 * (lambert_w0(y)? - 1.0)).max(0.0))
}

/// Semi-linear line parameters for this ĝ, or `None` if the law is a point mass.
pub fn line_params(
    dist: &ConditionalGainDist,
    variant: Variant,
) -> Result<Option<SemiLinearParams<f64>>> {
    if dist.is_degenerate() {
        return Ok(None);
    }
    SemiLinearParams::new(dist.alpha(), variant).map(Some)
}

/// Closed-form approximation of the throughput-optimal rate.
pub fn optimal_rate_closed_form(
    dist: &ConditionalGainDist,
    power: f64,
    variant: Variant,
) -> Result<f64> {
    check_power(power)?;
    match line_params(dist, variant)? {
        None => Ok((dist.known_power() * power).ln_1p()),
        Some(p) => closed_form_rate_from_params(&p, dist.sigma_eff, power),
    }
}

/// Rate from W(y) ≈ log y − log log y, i.e. R = 2 log y − 2 log log y − 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogApproxRate {
    pub rate: f64,
    /// True when y ≤ e and the exact Lambert-W form was used instead.
    pub fell_back: bool,
}

pub fn optimal_rate_log_approx(
    dist: &ConditionalGainDist,
    power: f64,
    variant: Variant,
) -> Result<LogApproxRate> {
    check_power(power)?;
    let params = match line_params(dist, variant)? {
        None => {
            return Ok(LogApproxRate {
                rate: (dist.known_power() * power).ln_1p(),
                fell_back: true,
            })
        }
        Some(p) => p,
    };
    let y = lambert_argument(&params, dist.sigma_eff, power);
    if y <= std::f64::consts::E {
        return Ok(LogApproxRate {
            rate: closed_form_rate_from_params(&params, dist.sigma_eff, power)?,
            fell_back: true,
        });
    }
    Ok(LogApproxRate {
        rate: (2.0 * y.ln() - 2.0 * y.ln().ln() - 2.0).max(0.0),
        fell_back: false,
    })
}

/// Fixed rate maximizing R·e^{−(e^R − 1)/P} for an Exp(1) gain, with that throughput.
pub fn no_csit_rate(power: f64) -> Result<(f64, f64)> {
    check_power(power)?;
    let f = |r: f64| Ok(r * (-r.exp_m1() / power).exp());
    golden_max(f, 0.0, (40.0 * power).ln_1p(), ORACLE_WIDTH)
}

/// E[log(1 + gP)] for g ~ Exp(1), e^{1/P}·E₁(1/P).
pub fn genie_closed_form(power: f64) -> Result<f64> {
    check_power(power)?;
    let u = 1.0 / power;
    crate::special_fn::scaled_e1(u).or_else(|_| exp_integral_e1(u).map(|e| e * u.exp()))
}

/// Stream family for ĝ draws of the adaptive policy.
pub const ADAPTIVE_STREAM: u64 = 10;
/// Stream family for g draws of the genie policy.
pub const GENIE_STREAM: u64 = 11;

/// Expected throughput at one power.
pub fn expected_throughput(
    model: &MismatchModel,
    power: f64,
    kind: PolicyKind,
    variant: Variant,
    samples: usize,
    seed: u64,
) -> Result<ThroughputResult> {
    expected_throughput_curve(model, &[power], kind, variant, samples, seed)
        .map(|mut v| v.remove(0))
}

/// Expected throughput over several powers, reusing the same draws for every power.
pub fn expected_throughput_curve(
    model: &MismatchModel,
    powers: &[f64],
    kind: PolicyKind,
    variant: Variant,
    samples: usize,
    seed: u64,
) -> Result<Vec<ThroughputResult>> {
    if samples == 0 {
        return Err(Error::domain(
            "expected_throughput",
            "samples must be at least 1",
        ));
    }
    for &p in powers {
        check_power(p)?;
    }
    match kind {
        PolicyKind::NoCsit => powers
            .iter()
            .map(|&p| {
                let (rate, eta) = no_csit_rate(p)?;
                Ok(ThroughputResult {
                    eta,
                    outage: 1.0 - eta / rate.max(f64::MIN_POSITIVE),
                    rate_used: rate,
                })
            })
            .map(|r: Result<ThroughputResult>| {
                r.map(|t| {
                    if t.rate_used == 0.0 {
                        ThroughputResult { outage: 0.0, ..t }
                    } else {
                        t
                    }
                })
            })
            .collect(),
        PolicyKind::Genie => {
            let chunks = par_chunks(samples, seed, GENIE_STREAM, |rng, range| {
                let mut acc = vec![[0.0; 1]; powers.len()];
                for _ in range {
                    let g: f64 = Exp1.sample(rng);
                    for (a, &p) in acc.iter_mut().zip(powers) {
                        a[0] += (g * p).ln_1p();
                    }
                }
                acc
            });
            let sums = sum_columns(chunks.into_iter().map(Ok), powers.len())?;
            Ok(sums
                .into_iter()
                .map(|s| {
                    let eta = s[0] / samples as f64;
                    ThroughputResult {
                        eta,
                        outage: 0.0,
                        rate_used: eta,
                    }
                })
                .collect())
        }
        PolicyKind::Adaptive => {
            let chunks = par_chunks(
                samples,
                seed,
                ADAPTIVE_STREAM,
                |rng, range| -> Result<Vec<[f64; 3]>> {
                    let mut acc = vec![[0.0; 3]; powers.len()];
                    for _ in range {
                        let g_hat: f64 = Exp1.sample(rng);
                        let dist = model.conditional(g_hat);
                        let params = line_params(&dist, variant)?;
                        for (a, &p) in acc.iter_mut().zip(powers) {
                            let rate = match &params {
                                None => (dist.known_power() * p).ln_1p(),
                                Some(lp) => closed_form_rate_from_params(lp, dist.sigma_eff, p)?,
                            };
                            let outage = outage_probability(&dist, rate, p)?;
                            a[0] += rate * (1.0 - outage);
                            a[1] += outage;
                            a[2] += rate;
                        }
                    }
                    Ok(acc)
                },
            );
            let sums = sum_columns(chunks.into_iter(), powers.len())?;
            let n = samples as f64;
            Ok(sums
                .into_iter()
                .map(|s| ThroughputResult {
                    eta: s[0] / n,
                    outage: s[1] / n,
                    rate_used: s[2] / n,
                })
                .collect())
        }
    }
}

/// Stream family for ĝ draws of [`expected_throughput_exact`].
pub const EXACT_STREAM: u64 = 12;

/// Expected throughput when each ĝ gets its exactly optimal rate.
pub fn expected_throughput_exact(
    model: &MismatchModel,
    powers: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<ThroughputResult>> {
    if samples == 0 {
        return Err(Error::domain(
            "expected_throughput_exact",
            "samples must be at least 1",
        ));
    }
    for &p in powers {
        check_power(p)?;
    }
    let chunks = par_chunks(
        samples,
        seed,
        EXACT_STREAM,
        |rng, range| -> Result<Vec<[f64; 3]>> {
            let mut acc = vec![[0.0; 3]; powers.len()];
            for _ in range {
                let g_hat: f64 = Exp1.sample(rng);
                let dist = model.conditional(g_hat);
                for (a, &p) in acc.iter_mut().zip(powers) {
                    let rate = optimal_rate_golden(&dist, p)?;
                    let outage = outage_probability(&dist, rate, p)?;
                    a[0] += rate * (1.0 - outage);
                    a[1] += outage;
                    a[2] += rate;
                }
            }
            Ok(acc)
        },
    );
    let sums = sum_columns(chunks.into_iter(), powers.len())?;
    let n = samples as f64;
    Ok(sums
        .into_iter()
        .map(|s| ThroughputResult {
            eta: s[0] / n,
            outage: s[1] / n,
            rate_used: s[2] / n,
        })
        .collect())
}

fn sum_columns<const K: usize>(
    chunks: impl Iterator<Item = Result<Vec<[f64; K]>>>,
    len: usize,
) -> Result<Vec<[f64; K]>>
where
    [f64; K]: Default,
{
    let mut total = vec![[0.0; K]; len];
    for chunk in chunks {
        for (t, c) in total.iter_mut().zip(chunk?) {
            for k in 0..K {
                t[k] += c[k];
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(g_hat: f64, sigma: f64) -> ConditionalGainDist {
        ConditionalGainDist::new(g_hat, sigma, 1.0 - sigma * sigma)
    }

    #[test]
    fn zero_and_huge_rates() {
        let d = dist(1.0, 0.5);
        let pol = RatePolicy {
            power: 100.0,
            rate: 0.0,
            variant: Variant::Lemma1,
        };
        assert_eq!(instantaneous_throughput(&d, &pol).unwrap().eta, 0.0);
        let pol = RatePolicy { rate: 40.0, ..pol };
        let r = instantaneous_throughput(&d, &pol).unwrap();
        assert!(r.eta < 1e-12 && r.outage > 1.0 - 1e-12);
    }

    #[test]
    fn throughput_identity() {
        let d = dist(0.7, 0.4);
        let pol = RatePolicy {
            power: 30.0,
            rate: 2.2,
            variant: Variant::Lemma1,
        };
        let r = instantaneous_throughput(&d, &pol).unwrap();
        assert_eq!(r.eta, r.rate_used * (1.0 - r.outage));
        let q = crate::special_fn::marcum_q1(
            d.alpha(),
            (2.0 * 2.2_f64.exp_m1() / (30.0 * 0.16)).sqrt(),
            &Default::default(),
        )
        .unwrap();
        assert!((r.outage - (1.0 - q)).abs() < 1e-12);
    }

    #[test]
    fn throughput_matches_monte_carlo() {
        let d = dist(1.0, 0.5);
        let (p, rate) = (100.0, 3.0);
        let n = 1_000_000;
        let ok = crate::mc::par_sum(n, 4, 77, |rng| {
            let g = d.sample(rng);
            if (g * p).ln_1p() >= rate {
                1.0
            } else {
                0.0
            }
        });
        let mc = rate * ok / n as f64;
        let r = instantaneous_throughput(
            &d,
            &RatePolicy {
                power: p,
                rate,
                variant: Variant::Lemma1,
            },
        )
        .unwrap();
        assert!(((mc - r.eta) / r.eta).abs() < 0.01);
    }

    #[test]
    fn oracle_limits() {
        let d = ConditionalGainDist::new(1.3, 0.0, 1.0);
        assert!((optimal_rate_oracle(&d, 10.0).unwrap() - 14.0_f64.ln()).abs() < 1e-15);
        // ĝ = 0: fixed-rate optimum of R·exp(−(e^R−1)/(Pσ²))
        let d = dist(0.0, 0.6);
        let r = optimal_rate_oracle(&d, 10.0).unwrap();
        let (want, _) = no_csit_rate(10.0 * 0.36).unwrap();
        assert!((r - want).abs() < 1e-5, "{r} vs {want}");
    }

    #[test]
    fn oracle_reference_value() {
        let d = dist(1.0, 0.3);
        let r = optimal_rate_oracle(&d, 10.0).unwrap();
        // frozen from a bounded scalar optimizer over the scipy noncentral chi-square law
        let brute = (0..100_000)
            .map(|i| i as f64 * 5e-5)
            .map(|x| (x, throughput_at(&d, x, 10.0).unwrap()))
            .fold((0.0, -1.0), |b, v| if v.1 > b.1 { v } else { b });
        assert!((r - brute.0).abs() < 1e-4);
        assert!((r - ORACLE_REFERENCE_G1_S03_P10).abs() < 1e-5, "{r}");
    }
    const ORACLE_REFERENCE_G1_S03_P10: f64 = 1.883_959_419_453_396_8;

    #[test]
    fn golden_rate_matches_oracle() {
        for &(g, sg, p) in &[
            (1.0, 0.3, 10.0),
            (0.25, 0.9, 1.0),
            (4.0, 0.1, 1000.0),
            (1.0, 0.01, 200.0),
        ] {
            let d = dist(g, sg);
            let a = optimal_rate_golden(&d, p).unwrap();
            let b = optimal_rate_oracle(&d, p).unwrap();
            let (ea, eb) = (
                throughput_at(&d, a, p).unwrap(),
                throughput_at(&d, b, p).unwrap(),
            );
            assert!(
                (ea - eb).abs() <= 1e-9 * eb,
                "g={g} s={sg} P={p}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn closed_form_growth_law() {
        // R(4P) − R(P) = 2(W(2y) − W(y)) rises toward 2·log 2 as P grows
        let d = dist(1.0, 0.5);
        let target = 2.0 * 2.0_f64.ln();
        let mut prev = 0.0;
        for p in [1e6, 1e12, 1e20, 1e40] {
            let r1 = optimal_rate_closed_form(&d, p, Variant::Lemma1).unwrap();
            let r4 = optimal_rate_closed_form(&d, 4.0 * p, Variant::Lemma1).unwrap();
            let diff = r4 - r1;
            assert!(diff > prev && diff < target);
            prev = diff;
        }
        assert!((target - prev) / target < 0.05, "{prev}");
    }

    #[test]
    fn closed_form_clamps_degenerate_line() {
        let mut p = SemiLinearParams::<f64>::new(1.0, Variant::Lemma1).unwrap();
        p.o3 = 1.0 + p.o1 * p.o2 + 0.1;
        assert_eq!(closed_form_rate_from_params(&p, 0.5, 100.0).unwrap(), 0.0);
    }

    fn worst_log_approx_gap(db_grid: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &g in &[0.25, 1.0, 4.0] {
            for &s in &[0.1, 0.5, 0.9] {
                let d = dist(g, s);
                for &db in db_grid {
                    let p = 10f64.powf(db / 10.0);
                    let cf = optimal_rate_closed_form(&d, p, Variant::Lemma1).unwrap();
                    let la = optimal_rate_log_approx(&d, p, Variant::Lemma1).unwrap();
                    assert!(!la.fell_back);
                    assert!(la.rate < cf);
                    worst = worst.max((cf - la.rate) / cf);
                }
            }
        }
        worst
    }

    #[test]
    fn log_approx_gap_at_high_snr() {
        // log y − log log y undershoots W(y) by about log log y / log y, so the
        // gap at 20–30 dB is well above 5%; frozen from this implementation.
        let worst = worst_log_approx_gap(&[20.0, 25.0, 30.0]);
        assert!((worst - MEASURED_LOG_APPROX_GAP).abs() < 1e-4, "{worst}");
        // the two forms do converge as P grows
        assert!(worst_log_approx_gap(&[200.0]) < 0.05);
    }
    const MEASURED_LOG_APPROX_GAP: f64 = 0.284_683;

    #[test]
    fn log_approx_is_monotone_in_power() {
        let d = dist(1.0, 0.5);
        let mut prev = 0.0;
        for i in 0..60 {
            let p = 10f64.powf(i as f64 / 10.0);
            let r = optimal_rate_log_approx(&d, p, Variant::Lemma1)
                .unwrap()
                .rate;
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn genie_closed_form_value() {
        assert!((genie_closed_form(10.0).unwrap() - 2.0146).abs() < 1e-4);
        let e1 = crate::special_fn::exp_integral_e1(0.1_f64).unwrap();
        assert!((genie_closed_form(10.0).unwrap() - 0.1_f64.exp() * e1).abs() < 1e-13);
    }

    #[test]
    fn genie_monte_carlo_matches_closed_form() {
        let m = MismatchModel::with_defaults(114.0 / 3.6, 5e-3, 1.0).unwrap();
        let ps = [1.0, 10.0, 100.0];
        let mc =
            expected_throughput_curve(&m, &ps, PolicyKind::Genie, Variant::Lemma1, 1_000_000, 5)
                .unwrap();
        for (r, &p) in mc.iter().zip(&ps) {
            let cf = genie_closed_form(p).unwrap();
            assert!(((r.eta - cf) / cf).abs() < 0.005);
        }
    }

    #[test]
    fn vanishing_power() {
        let m = MismatchModel::with_defaults(114.0 / 3.6, 5e-3, 1.0).unwrap();
        for kind in PolicyKind::ALL {
            let r = expected_throughput(&m, 1e-6, kind, Variant::Lemma1, 2000, 1).unwrap();
            assert!(r.eta < 1e-5, "{kind}: {}", r.eta);
        }
    }

    #[test]
    fn curve_is_deterministic() {
        let m = MismatchModel::with_defaults(114.0 / 3.6, 5e-3, 0.9).unwrap();
        let a = expected_throughput_curve(
            &m,
            &[10.0, 100.0],
            PolicyKind::Adaptive,
            Variant::Lemma1,
            40_000,
            3,
        )
        .unwrap();
        let b = expected_throughput_curve(
            &m,
            &[10.0, 100.0],
            PolicyKind::Adaptive,
            Variant::Lemma1,
            40_000,
            3,
        )
        .unwrap();
        assert_eq!(a, b);
        let single =
            expected_throughput(&m, 100.0, PolicyKind::Adaptive, Variant::Lemma1, 40_000, 3)
                .unwrap();
        assert_eq!(single, a[1]);
    }
}
