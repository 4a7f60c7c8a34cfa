//! Table generators for the experiment families and their CSV form.

use std::io::Write;

use crate::channel::{
    sample_pair, MismatchModel, DEFAULT_CARRIER_HZ, DEFAULT_SEPARATION_WAVELENGTHS,
};
use crate::harq_power::{optimize_p1, Protocol};
use crate::integrals::{
    g_closed_form, g_quadrature_oracle, t_closed_form, t_quadrature_oracle, t_tail_cutoff,
    GIntegralSpec, TIntegralSpec,
};
use crate::marcum_approx::{beta_extent, ErrorRow, SemiLinearParams, Variant};
use crate::rate_adapt::{expected_throughput_curve, PolicyKind};
use crate::special_fn::marcum_q1_pair;
use crate::{Error, Result, Tolerance};

/// A record with a fixed CSV header.
pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes a header row and one line per record, comma separated with LF endings.
pub fn write_csv<W: Write, R: CsvRow>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let fail = |e: csv::Error| Error::Output(e.to_string());
    w.write_record(R::HEADER).map_err(fail)?;
    for r in rows {
        w.write_record(r.fields()).map_err(fail)?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))
}

pub fn csv_bytes<R: CsvRow>(rows: &[R]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(buf)
}

/// a, a+step, …, b. The end point is included when it lies on the grid.
pub fn stepped(a: f64, b: f64, step: f64) -> Result<Vec<f64>> {
    if !(a.is_finite() && b.is_finite() && step > 0.0 && step.is_finite()) || b < a {
        return Err(Error::domain(
            "stepped",
            format!("bad range {a}:{b}:{step}"),
        ));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| a + step * i as f64).collect())
}

impl CsvRow for ErrorRow<f64> {
    const HEADER: &'static [&'static str] =
        &["alpha", "variant", "region", "max_abs_err", "mean_abs_err"];

    fn fields(&self) -> Vec<String> {
        vec![
            num(self.alpha),
            self.variant.name().to_string(),
            self.region.name().to_string(),
            num(self.max_abs_err),
            num(self.mean_abs_err),
        ]
    }
}

/// Exact CDF and the four semi-linear curves at one (α, β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub alpha: f64,
    pub beta: f64,
    pub exact_cdf: f64,
    /// In [`Variant::ALL`] order; `None` where a variant is undefined.
    pub approx: [Option<f64>; 4],
}

impl CsvRow for CurveRow {
    const HEADER: &'static [&'static str] = &[
        "alpha",
        "beta",
        "exact_cdf",
        "lemma1",
        "coro1",
        "coro2",
        "coro3",
    ];

    fn fields(&self) -> Vec<String> {
        let mut f = vec![num(self.alpha), num(self.beta), num(self.exact_cdf)];
        f.extend(self.approx.iter().map(|v| opt(*v)));
        f
    }
}

/// CDF curves for each α on β ∈ [0, α + 8] at the given step.
pub fn approx_curves(alphas: &[f64], beta_step: f64) -> Result<Vec<CurveRow>> {
    let tol = Tolerance::default();
    let mut rows = Vec::new();
    for &alpha in alphas {
        let params: Vec<Option<SemiLinearParams<f64>>> = Variant::ALL
            .iter()
            .map(|&v| match SemiLinearParams::new(alpha, v) {
                Ok(p) => Ok(Some(p)),
                Err(Error::Domain { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        for beta in stepped(0.0, beta_extent(alpha), beta_step)? {
            let exact_cdf = marcum_q1_pair(alpha, beta, &tol)?.1;
            let mut approx = [None; 4];
            for (slot, p) in approx.iter_mut().zip(&params) {
                *slot = p.as_ref().map(|p| p.approx_cdf(beta));
            }
            rows.push(CurveRow {
                alpha,
                beta,
                exact_cdf,
                approx,
            });
        }
    }
    Ok(rows)
}

/// Closed form against quadrature for one integral instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralRow {
    /// "g", "t" or "t0" (the m = 0 form of T).
    pub family: &'static str,
    pub alpha: f64,
    pub m: f64,
    pub n_or_a: f64,
    pub rho_or_theta1: f64,
    pub theta2: Option<f64>,
    pub closed_form: f64,
    pub oracle: f64,
    pub rel_err: f64,
}

impl CsvRow for IntegralRow {
    const HEADER: &'static [&'static str] = &[
        "family",
        "alpha",
        "m",
        "n_or_a",
        "rho_or_theta1",
        "theta2",
        "closed_form",
        "oracle",
        "rel_err",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.family.to_string(),
            num(self.alpha),
            num(self.m),
            num(self.n_or_a),
            num(self.rho_or_theta1),
            opt(self.theta2),
            num(self.closed_form),
            num(self.oracle),
            num(self.rel_err),
        ]
    }
}

fn rel_err(cf: f64, oracle: f64) -> f64 {
    if oracle == 0.0 {
        if cf == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((cf - oracle) / oracle).abs()
    }
}

/// G(α, ρ, m, n) for each (m, n) pair and ρ.
pub fn g_integral_table(alpha: f64, mn: &[(f64, f64)], rhos: &[f64]) -> Result<Vec<IntegralRow>> {
    let tol = Tolerance::default();
    let mut rows = Vec::new();
    for &(m, n) in mn {
        for &rho in rhos {
            let spec = GIntegralSpec::new(alpha, rho, m, n)?;
            let closed_form = g_closed_form(&spec)?;
            let oracle = g_quadrature_oracle(&spec, &tol)?;
            rows.push(IntegralRow {
                family: "g",
                alpha,
                m,
                n_or_a: n,
                rho_or_theta1: rho,
                theta2: None,
                closed_form,
                oracle,
                rel_err: rel_err(closed_form, oracle),
            });
        }
    }
    Ok(rows)
}

/// Absolute tail tolerance used to pick the finite stand-in for θ2 = ∞.
pub const T_TAIL_TOL: f64 = 1e-12;

/// T(α, m, a) on [0, X] where X is the tail-bound cutoff for each (α, a).
pub fn t_integral_table(alphas: &[f64], ms: &[f64], a_values: &[f64]) -> Result<Vec<IntegralRow>> {
    let tol = Tolerance::default();
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &m in ms {
            for &a in a_values {
                let theta2 = t_tail_cutoff(alpha, a, 0.0, T_TAIL_TOL);
                let spec = TIntegralSpec::new(alpha, m, a, 0.0, theta2)?;
                let closed_form = t_closed_form(&spec)?;
                let oracle = t_quadrature_oracle(&spec, &tol)?;
                rows.push(IntegralRow {
                    family: if m == 0.0 { "t0" } else { "t" },
                    alpha,
                    m,
                    n_or_a: a,
                    rho_or_theta1: 0.0,
                    theta2: Some(theta2),
                    closed_form,
                    oracle,
                    rel_err: rel_err(closed_form, oracle),
                });
            }
        }
    }
    Ok(rows)
}

/// One sampled (ĝ, g) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRow {
    pub g_hat: f64,
    pub g: f64,
}

impl CsvRow for SampleRow {
    const HEADER: &'static [&'static str] = &["g_hat", "g"];

    fn fields(&self) -> Vec<String> {
        vec![num(self.g_hat), num(self.g)]
    }
}

pub fn sample_rows(model: &MismatchModel, count: usize, seed: u64) -> Vec<SampleRow> {
    sample_pair(model, count, seed)
        .into_iter()
        .map(|(g_hat, g)| SampleRow { g_hat, g })
        .collect()
}

/// Link geometry and sweep axes. Speeds in km/h and delays in ms, as in the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub f_c: f64,
    pub d_a_wavelengths: f64,
    pub snr_db: Vec<f64>,
    pub kappa: Vec<f64>,
    pub v_kmh: Vec<f64>,
    pub delta_ms: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            f_c: DEFAULT_CARRIER_HZ,
            d_a_wavelengths: DEFAULT_SEPARATION_WAVELENGTHS,
            snr_db: vec![10.0],
            kappa: vec![1.0],
            v_kmh: vec![114.0],
            delta_ms: vec![5.0],
        }
    }
}

impl SweepGrid {
    pub fn model(&self, v_kmh: f64, delta_ms: f64, kappa: f64) -> Result<MismatchModel> {
        let lambda = crate::channel::wavelength(self.f_c);
        MismatchModel::new(
            self.d_a_wavelengths * lambda,
            v_kmh / 3.6,
            delta_ms * 1e-3,
            self.f_c,
            kappa,
        )
    }

    /// Speed in km/h at which the receive antenna lands where the predictor measured.
    pub fn aligned_speed_kmh(&self, delta_ms: f64) -> f64 {
        self.d_a_wavelengths * crate::channel::wavelength(self.f_c) / (delta_ms * 1e-3) * 3.6
    }

    /// Delay in ms at which the receive antenna lands where the predictor measured.
    pub fn aligned_delay_ms(&self, v_kmh: f64) -> f64 {
        self.d_a_wavelengths * crate::channel::wavelength(self.f_c) / (v_kmh / 3.6) * 1e3
    }
}

/// Expected throughput at one grid point for one policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRow {
    pub snr_db: f64,
    pub kind: PolicyKind,
    pub kappa: f64,
    pub v_kmh: f64,
    pub delta_ms: f64,
    pub eta: f64,
    pub outage: f64,
}

impl CsvRow for RateRow {
    const HEADER: &'static [&'static str] = &[
        "snr_db", "kind", "kappa", "v_kmh", "delta_ms", "eta_npcu", "outage",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            num(self.snr_db),
            self.kind.name().to_string(),
            num(self.kappa),
            num(self.v_kmh),
            num(self.delta_ms),
            num(self.eta),
            num(self.outage),
        ]
    }
}

/// Every (κ, v, δ, SNR, kind) combination. All points share the seed, so
/// neighbouring points see the same ĝ draws.
pub fn rate_sweep(
    grid: &SweepGrid,
    kinds: &[PolicyKind],
    variant: Variant,
    samples: usize,
    seed: u64,
) -> Result<Vec<RateRow>> {
    let powers: Vec<f64> = grid.snr_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
    let mut rows = Vec::new();
    for &kappa in &grid.kappa {
        for &v_kmh in &grid.v_kmh {
            for &delta_ms in &grid.delta_ms {
                let model = grid.model(v_kmh, delta_ms, kappa)?;
                let mut per_kind = Vec::with_capacity(kinds.len());
                for &kind in kinds {
                    per_kind.push(expected_throughput_curve(
                        &model, &powers, kind, variant, samples, seed,
                    )?);
                }
                for (i, &snr_db) in grid.snr_db.iter().enumerate() {
                    for (k, &kind) in kinds.iter().enumerate() {
                        let r = per_kind[k][i];
                        rows.push(RateRow {
                            snr_db,
                            kind,
                            kappa,
                            v_kmh,
                            delta_ms,
                            eta: r.eta,
                            outage: r.outage,
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Optimized HARQ power for one (protocol, R, ε, σ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarqRow {
    pub protocol: Protocol,
    pub rate: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub p1: f64,
    pub p_bar: f64,
    pub achieved_outage: f64,
    /// Outage among slots where round 1 failed; not part of the CSV.
    pub conditional_outage: f64,
}

impl CsvRow for HarqRow {
    const HEADER: &'static [&'static str] = &[
        "protocol",
        "R_npcu",
        "epsilon",
        "sigma",
        "P1",
        "P_bar",
        "achieved_outage",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.protocol.name().to_string(),
            num(self.rate),
            num(self.epsilon),
            num(self.sigma),
            num(self.p1),
            num(self.p_bar),
            num(self.achieved_outage),
        ]
    }
}

pub fn harq_sweep(
    protocols: &[Protocol],
    rates: &[f64],
    epsilons: &[f64],
    sigmas: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<HarqRow>> {
    let mut rows = Vec::new();
    for &protocol in protocols {
        for &rate in rates {
            for &epsilon in epsilons {
                for &sigma in sigmas {
                    let r = optimize_p1(protocol, rate, epsilon, sigma, trials, seed)?;
                    rows.push(HarqRow {
                        protocol,
                        rate,
                        epsilon,
                        sigma,
                        p1: r.p1,
                        p_bar: r.expected_total,
                        achieved_outage: r.achieved_outage,
                        conditional_outage: r.conditional_outage,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stepped_ranges() {
        assert_eq!(stepped(0.0, 30.0, 3.0).unwrap().len(), 11);
        assert_eq!(stepped(1.0, 1.0, 0.5).unwrap(), vec![1.0]);
        let v = stepped(0.0, 3.0, 0.25).unwrap();
        assert_eq!(v.len(), 13);
        assert_eq!(*v.last().unwrap(), 3.0);
        assert!(stepped(2.0, 1.0, 0.5).is_err());
        assert!(stepped(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let rows = [SampleRow {
            g_hat: 0.5,
            g: 1e-20,
        }];
        let text = String::from_utf8(csv_bytes(&rows).unwrap()).unwrap();
        assert_eq!(text, "g_hat,g\n0.5,1e-20\n");
        let rows = [CurveRow {
            alpha: 0.0,
            beta: 1.0,
            exact_cdf: 0.25,
            approx: [Some(0.5), None, None, Some(1.0)],
        }];
        let text = String::from_utf8(csv_bytes(&rows).unwrap()).unwrap();
        assert_eq!(
            text,
            "alpha,beta,exact_cdf,lemma1,coro1,coro2,coro3\n0.0,1.0,0.25,0.5,,,1.0\n"
        );
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02e23, 2.5e-300, -0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn aligned_geometry() {
        let grid = SweepGrid::default();
        let v = grid.aligned_speed_kmh(5.0);
        assert!((v - 120.81).abs() < 0.01, "{v}");
        let m = grid.model(v, 5.0, 1.0).unwrap();
        assert!(m.d < 1e-12 && m.sigma < 1e-6);
        assert!((grid.aligned_delay_ms(v) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn curves_cover_every_variant_for_positive_alpha() {
        let rows = approx_curves(&[1.0], 0.5).unwrap();
        assert_eq!(rows.len(), 19);
        assert!(rows.iter().all(|r| r.approx.iter().all(Option::is_some)));
    }
}
