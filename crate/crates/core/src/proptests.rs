use proptest::prelude::*;

use crate::channel::ConditionalGainDist;
use crate::harq_power::{
    expected_total_power, inverse_cdf_approx, jensen_check, p2_inr, p2_rtd, HarqPolicy, Protocol,
};
use crate::integrals::{g_closed_form, t_closed_form, GIntegralSpec, TIntegralSpec};
use crate::marcum_approx::{SemiLinearParams, Variant};
use crate::rate_adapt::{instantaneous_throughput, RatePolicy};
use crate::special_fn::{
    bessel_i0e, lambert_w0, marcum_q1, marcum_q1_pair, upper_incomplete_gamma,
};
use crate::Tolerance;

fn tol() -> Tolerance<f64> {
    Tolerance::default()
}

fn variant() -> impl Strategy<Value = Variant> {
    prop::sample::select(Variant::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn q1_is_a_probability_and_monotone(a in 0.0..10.0f64, b in 0.1..12.0f64, d in 0.01..1.0f64) {
        let q = marcum_q1(a, b, &tol()).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
        let (q_right, _) = marcum_q1_pair(a, b + d, &tol()).unwrap();
        let (q_up, _) = marcum_q1_pair(a + d, b, &tol()).unwrap();
        prop_assert!(q_right <= q && q_up >= q);
        if q > 1e-12 && q < 1.0 - 1e-12 {
            prop_assert!(q_right < q);
        }
    }

    #[test]
    fn q1_beta_derivative(a in 0.0..5.0f64, b in 0.1..8.0f64) {
        // differentiate whichever of Q and 1 − Q is smaller, for relative accuracy
        let (q0, _) = marcum_q1_pair(a, b, &tol()).unwrap();
        let small = |x: f64| {
            let (q, c) = marcum_q1_pair(a, x, &tol()).unwrap();
            if q0 <= 0.5 { q } else { -c }
        };
        let h = 1e-3 * b.min(1.0);
        let fd = (small(b - 2.0 * h) - 8.0 * small(b - h) + 8.0 * small(b + h) - small(b + 2.0 * h)) / (12.0 * h);
        let exact = -b * (-(a - b) * (a - b) / 2.0).exp() * bessel_i0e(a * b).unwrap();
        prop_assume!(exact.abs() > 1e-250);
        prop_assert!(((fd - exact) / exact).abs() < 1e-5, "fd {fd} exact {exact}");
    }

    #[test]
    fn lambert_fixed_point(x in -0.367_878_441_171_442_3..1e6f64) {
        prop_assume!(x != 0.0);
        let w = lambert_w0(x).unwrap();
        prop_assert!(((w * w.exp() - x) / x).abs() < 1e-12);
    }

    #[test]
    fn upper_gamma_recurrence(s in 0.1..20.0f64, x in 0.01..40.0f64) {
        let lhs = upper_incomplete_gamma(s + 1.0, x, &tol()).unwrap();
        let rhs = s * upper_incomplete_gamma(s, x, &tol()).unwrap() + (s * x.ln() - x).exp();
        prop_assert!(((lhs - rhs) / lhs).abs() < 1e-10);
    }

    #[test]
    fn approx_cdf_is_a_nondecreasing_ramp(a in 0.05..8.0f64, v in variant(), b1 in 0.0..20.0f64, d in 0.0..5.0f64) {
        let p = SemiLinearParams::new(a, v).unwrap();
        let (y1, y2) = (p.approx_cdf(b1), p.approx_cdf(b1 + d));
        prop_assert!((0.0..=1.0).contains(&y1));
        prop_assert!(y2 >= y1);
        // continuity: a tiny step never jumps
        prop_assert!((p.approx_cdf(b1 + 1e-9) - y1).abs() < 1e-8);
    }

    #[test]
    fn breakpoints_hit_zero_and_one(a in 0.05..8.0f64, v in variant()) {
        let p = SemiLinearParams::new(a, v).unwrap();
        if p.c1 > 0.0 {
            prop_assert!(p.approx_cdf(p.c1).abs() < 1e-9);
        }
        prop_assert!((p.approx_cdf(p.c2) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn o_form_is_the_tangent_line(a in 0.0..8.0f64, b in 0.0..15.0f64) {
        let p = SemiLinearParams::new(a, Variant::Lemma1).unwrap();
        let tangent = p.y0 + p.slope * (b - p.x0);
        prop_assert!((p.line(b) - tangent).abs() < 1e-12 * (1.0 + tangent.abs()));
    }

    #[test]
    fn g_monotone_in_rho_and_n(a in 0.2..4.0f64, m in 0.0..4.0f64, n in 0.5..4.0f64, rho in 0.0..4.0f64, d in 0.01..1.0f64) {
        let g = |rho: f64, n: f64| g_closed_form(&GIntegralSpec::new(a, rho, m, n).unwrap()).unwrap();
        let base = g(rho, n);
        prop_assert!(g(rho + d, n) <= base * (1.0 + 1e-12));
        prop_assert!(g(rho, (n - d).max(0.1)) >= base * (1.0 - 1e-12));
    }

    #[test]
    fn t_closed_form_continuous_at_breakpoints(a in 0.3..4.0f64, m in 0.0..3.0f64, aa in 0.5..5.0f64) {
        let p = SemiLinearParams::new(a, Variant::Lemma1).unwrap();
        let theta2 = p.c2 + 5.0;
        let t = |theta1: f64| t_closed_form(&TIntegralSpec::new(a, m, aa, theta1, theta2).unwrap()).unwrap();
        for c in [p.c1, p.c2] {
            if c > 1e-6 {
                prop_assert!((t(c - 1e-9) - t(c + 1e-9)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn conditional_cdf_is_a_cdf(g in 0.0..4.0f64, s in 0.05..0.99f64, x in 0.0..20.0f64, d in 0.0..5.0f64) {
        let dist = ConditionalGainDist::new(g, s, 1.0 - s * s);
        let (f1, f2) = (dist.cdf(x).unwrap(), dist.cdf(x + d).unwrap());
        prop_assert!((0.0..=1.0).contains(&f1) && f2 >= f1);
        prop_assert!(dist.cdf(g + 60.0).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn throughput_identity(g in 0.0..4.0f64, s in 0.05..0.99f64, db in 0.0..30.0f64, r in 0.0..8.0f64) {
        let dist = ConditionalGainDist::new(g, s, 1.0 - s * s);
        let power = 10f64.powf(db / 10.0);
        let t = instantaneous_throughput(&dist, &RatePolicy { power, rate: r, variant: Variant::Lemma1 }).unwrap();
        prop_assert_eq!(t.eta, t.rate_used * (1.0 - t.outage));
        prop_assert!((0.0..=1.0).contains(&t.outage));
        if r > 0.0 {
            let beta = (2.0 * r.exp_m1() / (power * s * s)).sqrt();
            let q = marcum_q1(dist.alpha(), beta, &tol()).unwrap();
            prop_assert!((t.outage - (1.0 - q)).abs() < 1e-12);
        }
    }

    #[test]
    fn inr_never_needs_more_power(r in 0.1..3.0f64, eps in 0.001..0.5f64, p1 in 0.1..50.0f64, s in 0.1..0.9f64, u in 0.0..1.0f64) {
        let rtd = HarqPolicy::new(Protocol::Rtd, r, eps, p1, s).unwrap();
        let inr = HarqPolicy::new(Protocol::Inr, r, eps, p1, s).unwrap();
        let g = u * rtd.round1_threshold();
        prop_assert!(p2_inr(g, &inr).unwrap() <= p2_rtd(g, &rtd).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn p2_decreases_wherever_the_fitted_quantile_grows(
        r in 0.2..2.5f64, eps in 0.005..0.3f64, p1 in 0.2..20.0f64, s in 0.3..0.8f64,
        u in 0.0..1.0f64, d in 0.0..0.2f64, inr in any::<bool>(),
    ) {
        // The quartic fit makes the quantile dip for small ĝ, so monotonicity of P2
        // over the whole interval does not hold; the product rule does.
        let proto = if inr { Protocol::Inr } else { Protocol::Rtd };
        let pol = HarqPolicy::new(proto, r, eps, p1, s).unwrap();
        let t = pol.round1_threshold();
        let (g1, g2) = (u * t, ((u + d) * t).min(t * (1.0 - 1e-9)));
        let q = |g: f64| inverse_cdf_approx(eps, g, s).unwrap();
        prop_assume!(q(g2) >= q(g1));
        let f = |g: f64| crate::harq_power::p2(g, &pol).unwrap();
        prop_assert!(f(g2) <= f(g1) * (1.0 + 1e-12));
    }

    #[test]
    fn total_power_at_least_round_one(r in 0.2..2.0f64, eps in 0.01..0.3f64, p1 in 0.5..20.0f64, s in 0.2..0.8f64) {
        let pol = HarqPolicy::new(Protocol::Rtd, r, eps, p1, s).unwrap();
        prop_assert!(expected_total_power(&pol).unwrap() >= p1);
    }

    #[test]
    fn jensen_never_violated(v in prop::collection::vec(0.0..100.0f64, 1..40)) {
        let (l, r) = jensen_check(&v).unwrap();
        prop_assert!(l <= r);
    }
}
