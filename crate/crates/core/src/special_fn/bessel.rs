use super::require_finite;
use crate::scalar::Real;
use crate::Result;

// Above this the scaled asymptotic series is accurate to machine precision.
const I0_SERIES_MAX: f64 = 30.0;
// Below this the alternating series loses under four digits.
const J0_SERIES_MAX: f64 = 12.0;

/// Modified Bessel function I₀(x) for x ≥ 0. Overflows to +∞ past x ≈ 713 in `f64`.
pub fn bessel_i0<T: Real>(x: T) -> Result<T> {
    check_i0_arg(x)?;
    if x <= T::lit(I0_SERIES_MAX) {
        Ok(i0_series(x))
    } else {
        Ok(i0e_asymptotic(x) * x.exp())
    }
}

/// Scaled modified Bessel function e^{−x}·I₀(x) for x ≥ 0. Never overflows.
pub fn bessel_i0e<T: Real>(x: T) -> Result<T> {
    check_i0_arg(x)?;
    if x <= T::lit(I0_SERIES_MAX) {
        Ok(i0_series(x) * (-x).exp())
    } else {
        Ok(i0e_asymptotic(x))
    }
}

fn check_i0_arg<T: Real>(x: T) -> Result<()> {
    require_finite("bessel_i0", x)?;
    if x < T::zero() {
        return Err(crate::Error::domain(
            "bessel_i0",
            format!("negative argument {x}"),
        ));
    }
    Ok(())
}

fn i0_series<T: Real>(x: T) -> T {
    let q = x * x / T::lit(4.0);
    let mut term = T::one();
    let mut sum = T::one();
    let mut k = T::zero();
    loop {
        k = k + T::one();
        term = term * q / (k * k);
        sum = sum + term;
        if term <= sum * T::epsilon() {
            return sum;
        }
    }
}

fn i0e_asymptotic<T: Real>(x: T) -> T {
    let mut term = T::one();
    let mut sum = T::one();
    let mut k = T::zero();
    loop {
        k = k + T::one();
        let odd = T::lit(2.0) * k - T::one();
        let next = term * odd * odd / (T::lit(8.0) * k * x);
        if next >= term || next <= sum * T::epsilon() {
            break;
        }
        term = next;
        sum = sum + term;
    }
    sum / (T::lit(2.0) * T::PI() * x).sqrt()
}

/// Bessel function of the first kind J₀(x).
pub fn bessel_j0<T: Real>(x: T) -> Result<T> {
    require_finite("bessel_j0", x)?;
    let x = x.abs();
    if x <= T::lit(J0_SERIES_MAX) {
        Ok(j0_series(x))
    } else {
        Ok(j0_hankel(x))
    }
}

fn j0_series<T: Real>(x: T) -> T {
    let q = -(x * x) / T::lit(4.0);
    let mut term = T::one();
    let mut sum = T::one();
    let mut k = T::zero();
    loop {
        k = k + T::one();
        term = term * q / (k * k);
        sum = sum + term;
        if term.abs() <= T::epsilon() * T::lit(1e-3) {
            return sum;
        }
    }
}

fn j0_hankel<T: Real>(x: T) -> T {
    // t_k = a_k / x^k with a_k the Hankel coefficients for order zero.
    let mut p = T::one();
    let mut q = T::zero();
    let mut term = T::one();
    let mut k = 0usize;
    loop {
        k += 1;
        let kk = T::from_count(k);
        let odd = T::lit(2.0) * kk - T::one();
        let next = -term * odd * odd / (T::lit(8.0) * kk * x);
        if next.abs() >= term.abs() || next.abs() <= T::epsilon() * T::lit(1e-2) {
            break;
        }
        term = next;
        // P takes even k with alternating signs, Q takes odd k likewise.
        let sign = if (k / 2).is_multiple_of(2) {
            T::one()
        } else {
            -T::one()
        };
        if k.is_multiple_of(2) {
            p = p + sign * term;
        } else {
            q = q + sign * term;
        }
    }
    let chi = x - T::FRAC_PI_4();
    (T::lit(2.0) / (T::PI() * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i0_taylor(x: f64, terms: usize) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..terms {
            term *= (x / 2.0) * (x / 2.0) / ((k * k) as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn i0_at_zero_is_one() {
        assert_eq!(bessel_i0(0.0_f64).unwrap(), 1.0);
        assert_eq!(bessel_i0e(0.0_f64).unwrap(), 1.0);
    }

    #[test]
    fn i0_matches_forty_term_series() {
        let want = i0_taylor(4.0, 40);
        let got = bessel_i0(4.0_f64).unwrap();
        assert!(((got - want) / want).abs() < 1e-12, "{got} vs {want}");
        // frozen: 11.301921952136330
        assert!((got - 11.301_921_952_136_33).abs() < 1e-12);
    }

    #[test]
    fn i0e_approaches_leading_asymptote() {
        let x = 50.0_f64;
        let lead = 1.0 / (2.0 * std::f64::consts::PI * x).sqrt();
        let got = bessel_i0e(x).unwrap();
        assert!(((got - lead) / lead).abs() < 0.01);
        // Long series evaluated with rescaling as the oracle.
        let mut term = 1.0_f64;
        let mut sum = 1.0_f64;
        let mut k = 0.0;
        let mut log_scale = 0.0_f64;
        while term > 1e-18 * sum {
            k += 1.0;
            term *= (x / 2.0) * (x / 2.0) / (k * k);
            sum += term;
            if sum > 1e200 {
                sum *= 1e-200;
                term *= 1e-200;
                log_scale += 200.0 * 10f64.ln();
            }
        }
        let oracle = (sum.ln() + log_scale - x).exp();
        assert!(((got - oracle) / oracle).abs() < 1e-13, "{got} vs {oracle}");
    }

    #[test]
    fn i0e_is_continuous_across_branch() {
        let below = bessel_i0e(30.0_f64).unwrap();
        let above = bessel_i0e(30.0_f64 + 1e-12).unwrap();
        assert!(((below - above) / below).abs() < 1e-13);
    }

    #[test]
    fn i0e_never_overflows() {
        let v = bessel_i0e(1e6_f64).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(bessel_i0(800.0_f64).unwrap().is_infinite());
    }

    #[test]
    fn i0_rejects_bad_input() {
        assert!(bessel_i0(-1.0_f64).is_err());
        assert!(bessel_i0e(f64::NAN).is_err());
    }

    #[test]
    fn j0_basic_values() {
        assert_eq!(bessel_j0(0.0_f64).unwrap(), 1.0);
        // frozen from a high-precision evaluation
        assert!((bessel_j0(1.0_f64).unwrap() - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(20.0_f64).unwrap() - 0.167_024_664_340_583).abs() < 1e-10);
        assert!((bessel_j0(12.0_f64).unwrap() - 0.047_689_310_796_833_5).abs() < 1e-10);
        assert_eq!(bessel_j0(-3.3_f64).unwrap(), bessel_j0(3.3_f64).unwrap());
    }

    #[test]
    fn j0_first_root_by_bisection() {
        let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if bessel_j0(mid).unwrap() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 2.404_826).abs() < 1e-6);
        assert!((lo - 2.404_825_557_695_773).abs() < 1e-12);
    }

    #[test]
    fn j0_is_bounded() {
        for i in 0..4000 {
            let x = i as f64 * 0.05 - 100.0;
            assert!(bessel_j0(x).unwrap().abs() <= 1.0);
        }
    }

    #[test]
    fn works_in_single_precision() {
        let v = bessel_i0(4.0_f32).unwrap();
        assert!((v - 11.301_922).abs() < 1e-4);
        let j = bessel_j0(1.0_f32).unwrap();
        assert!((j - 0.765_197_7).abs() < 1e-6);
    }
}
