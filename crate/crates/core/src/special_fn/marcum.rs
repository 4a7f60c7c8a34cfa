use super::{poisson_pmf, regularized_gamma, Tolerance};
use crate::scalar::Real;
use crate::{Error, Result};

/// First-order Marcum Q-function Q₁(α, β).
pub fn marcum_q1<T: Real>(alpha: T, beta: T, tol: &Tolerance<T>) -> Result<T> {
    marcum_q1_pair(alpha, beta, tol).map(|(q, _)| q)
}

/// Returns (Q₁(α,β), 1 − Q₁(α,β)), each accurate even when tiny.
///
/// Uses Q₁(α,β) = Pr(J ≤ K) with K ~ Poisson(α²/2) and J ~ Poisson(β²/2),
/// summed over K outward from its mode.
pub fn marcum_q1_pair<T: Real>(alpha: T, beta: T, tol: &Tolerance<T>) -> Result<(T, T)> {
    const NAME: &str = "marcum_q1";
    if alpha.is_nan() || beta.is_nan() || alpha.is_infinite() {
        return Err(Error::domain(
            NAME,
            format!("invalid arguments α={alpha}, β={beta}"),
        ));
    }
    if alpha < T::zero() || beta < T::zero() {
        return Err(Error::domain(
            NAME,
            format!("negative argument α={alpha}, β={beta}"),
        ));
    }
    if beta == T::zero() {
        return Ok((T::one(), T::zero()));
    }
    if beta.is_infinite() {
        return Ok((T::zero(), T::one()));
    }
    let half = T::lit(0.5);
    if alpha == T::zero() {
        let e = -half * beta * beta;
        return Ok((e.exp(), -e.exp_m1()));
    }

    let lambda = half * alpha * alpha;
    let mu = half * beta * beta;
    // Sum Pr(J ≤ k) when Q₁ is the small side, Pr(J > k) otherwise.
    let upper = beta > alpha;
    let k0 = lambda.floor();
    let (p_lo, q_up) = regularized_gamma(k0 + T::one(), mu, tol)?;
    let f0 = if upper { q_up } else { p_lo };
    let w0 = poisson_pmf(k0, lambda);
    let pmf0 = poisson_pmf(k0, mu);

    let mut sum = w0 * f0;
    let mut terms = 1usize;

    let (mut k, mut w, mut pmf, mut f) = (k0, w0, pmf0, f0);
    loop {
        k = k + T::one();
        w = w * lambda / k;
        pmf = pmf * mu / k;
        f = if upper {
            (f + pmf).min(T::one())
        } else {
            (f - pmf).max(T::zero())
        };
        sum = sum + w * f;
        terms += 1;
        if terms > tol.max_terms {
            return Err(Error::accuracy(NAME, "series exceeded max_terms"));
        }
        let r = lambda / (k + T::one());
        let cap = if upper { T::one() } else { f };
        if w == T::zero() || (r < T::one() && negligible(w * r / (T::one() - r) * cap, sum, tol)) {
            break;
        }
    }

    let (mut k, mut w, mut pmf, mut f) = (k0, w0, pmf0, f0);
    while k >= T::one() {
        // pmf holds Pr(J = k); step to k − 1.
        f = if upper {
            (f - pmf).max(T::zero())
        } else {
            (f + pmf).min(T::one())
        };
        w = w * k / lambda;
        pmf = pmf * k / mu;
        k = k - T::one();
        sum = sum + w * f;
        terms += 1;
        if terms > tol.max_terms {
            return Err(Error::accuracy(NAME, "series exceeded max_terms"));
        }
        let r = k / lambda;
        let cap = if upper { f } else { T::one() };
        if w == T::zero() || negligible(w * r / (T::one() - r) * cap, sum, tol) {
            break;
        }
    }

    let small = sum.max(T::zero()).min(T::one());
    let big = T::one() - small;
    Ok(if upper { (small, big) } else { (big, small) })
}

// The residual Poisson mass must be small both absolutely and against the partial sum.
fn negligible<T: Real>(rest: T, sum: T, tol: &Tolerance<T>) -> bool {
    rest < tol.abs_tol && rest <= tol.rel_tol * sum
}

#[cfg(test)]
mod tests {
    use super::super::bessel_i0e;
    use super::*;

    fn tol() -> Tolerance<f64> {
        Tolerance::default()
    }

    // Independent oracle: Q₁ = 1 − ∫₀^β x e^{−(x²+α²)/2} I₀(αx) dx by composite Simpson.
    fn q1_by_integration(a: f64, b: f64) -> f64 {
        let n = 20_000;
        let h = b / n as f64;
        let pdf = |x: f64| x * (-(x - a) * (x - a) / 2.0).exp() * bessel_i0e(a * x).unwrap();
        let mut s = pdf(0.0) + pdf(b);
        for i in 1..n {
            let x = i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(x);
        }
        1.0 - s * h / 3.0
    }

    #[test]
    fn boundary_values() {
        assert_eq!(marcum_q1(1.7, 0.0, &tol()).unwrap(), 1.0);
        for &b in &[0.1_f64, 1.0, 3.0, 10.0] {
            let got = marcum_q1(0.0, b, &tol()).unwrap();
            assert!((got - (-b * b / 2.0).exp()).abs() < 1e-16);
        }
    }

    #[test]
    fn equal_argument_identity() {
        for &a in &[0.25_f64, 0.5, 1.0, 2.0, 4.0] {
            let want = 0.5 * (1.0 + bessel_i0e(a * a).unwrap());
            let got = marcum_q1(a, a, &tol()).unwrap();
            assert!((got - want).abs() < 1e-10, "α={a}: {got} vs {want}");
        }
        assert!((marcum_q1(2.0, 2.0, &tol()).unwrap() - 0.603_501).abs() < 1e-6);
    }

    #[test]
    fn agrees_with_density_integration() {
        for &(a, b) in &[(0.5, 1.0), (1.0, 2.5), (2.0, 1.2), (3.0, 3.5), (5.0, 4.0)] {
            let want = q1_by_integration(a, b);
            let got = marcum_q1(a, b, &tol()).unwrap();
            assert!((got - want).abs() < 1e-10, "({a},{b}): {got} vs {want}");
        }
    }

    #[test]
    fn frozen_reference_values() {
        // 40-digit Poisson-mixture sums.
        let cases = [
            (1.0, 2.0, 0.269_012_060_035_910_00),
            (3.0, 1.0, 0.989_170_550_178_452_15),
            (10.0, 14.0, 3.780_690_689_249_129e-5),
            (2.0, 9.0, 2.754_810_181_280_074e-12),
        ];
        for (a, b, want) in cases {
            let got = marcum_q1(a, b, &tol()).unwrap();
            assert!(
                ((got - want) / want).abs() < 1e-9,
                "({a},{b}): {got} vs {want}"
            );
        }
    }

    #[test]
    fn complement_is_accurate_in_lower_tail() {
        // 1 − Q₁(5, 0.01) ≈ e^{−12.5}·0.01²/2
        let (_, c) = marcum_q1_pair(5.0, 0.01, &tol()).unwrap();
        let approx = (-12.5_f64).exp() * 0.01 * 0.01 / 2.0;
        assert!(((c - approx) / approx).abs() < 1e-3);
    }

    #[test]
    fn large_arguments_converge() {
        let q = marcum_q1(200.0, 200.0, &tol()).unwrap();
        let want = 0.5 * (1.0 + bessel_i0e(40_000.0).unwrap());
        assert!((q - want).abs() < 1e-10);
    }

    #[test]
    fn single_precision_runs() {
        let t = Tolerance::<f32>::default();
        let q = marcum_q1(2.0_f32, 2.0_f32, &t).unwrap();
        assert!((q - 0.603_501).abs() < 1e-5);
    }

    #[test]
    fn rejects_negative_arguments() {
        assert!(marcum_q1(-1.0, 1.0, &tol()).is_err());
        assert!(marcum_q1(1.0, -1.0, &tol()).is_err());
    }

    #[test]
    fn max_terms_is_enforced() {
        let t = Tolerance::new(1e-14, 1e-12, 3).unwrap();
        assert!(matches!(
            marcum_q1(30.0, 30.0, &t),
            Err(Error::Accuracy { .. })
        ));
    }
}
