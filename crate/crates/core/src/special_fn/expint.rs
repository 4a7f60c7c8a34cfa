use super::require_finite;
use crate::scalar::Real;
use crate::{Error, Result};

const MAX_ITER: usize = 10_000;

/// Exponential integral E₁(x) = ∫ₓ^∞ e^{−t}/t dt for x > 0.
pub fn exp_integral_e1<T: Real>(x: T) -> Result<T> {
    check(x)?;
    if x <= T::one() {
        Ok(e1_series(x))
    } else {
        Ok(e1_fraction(x)? * (-x).exp())
    }
}

/// e^{x}·E₁(x) for x > 0, finite for arbitrarily large x.
pub fn scaled_e1<T: Real>(x: T) -> Result<T> {
    check(x)?;
    if x <= T::one() {
        Ok(e1_series(x) * x.exp())
    } else {
        e1_fraction(x)
    }
}

fn check<T: Real>(x: T) -> Result<()> {
    if x.is_nan() {
        return Err(Error::domain("exp_integral_e1", "NaN argument"));
    }
    if x <= T::zero() {
        return Err(Error::domain(
            "exp_integral_e1",
            format!("non-positive argument {x}"),
        ));
    }
    if x.is_infinite() {
        return Ok(());
    }
    require_finite("exp_integral_e1", x)
}

fn e1_series<T: Real>(x: T) -> T {
    // −γ − ln x − Σ_{k≥1} (−x)^k / (k·k!)
    let mut term = T::one();
    let mut sum = T::zero();
    let mut k = 0usize;
    loop {
        k += 1;
        let kk = T::from_count(k);
        term = -term * x / kk;
        let add = term / kk;
        sum = sum + add;
        if add.abs() <= T::epsilon() * sum.abs() {
            break;
        }
    }
    -T::euler_gamma() - x.ln() - sum
}

fn e1_fraction<T: Real>(x: T) -> Result<T> {
    if x.is_infinite() {
        return Ok(T::zero());
    }
    let tiny = T::min_positive_value() / T::epsilon();
    let mut b = x + T::one();
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let ii = T::from_count(i);
        let a = -ii * ii;
        b = b + T::lit(2.0);
        d = T::one() / (a * d + b);
        c = b + a / c;
        let delta = c * d;
        h = h * delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            return Ok(h);
        }
    }
    Err(Error::accuracy(
        "exp_integral_e1",
        "continued fraction did not converge",
    ))
}
