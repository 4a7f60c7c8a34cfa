use super::require_finite;
use crate::scalar::Real;
use crate::{Error, Result};

const MAX_ITER: usize = 30;

/// Principal branch W₀(x) of the Lambert W function, x ≥ −1/e.
pub fn lambert_w0<T: Real>(x: T) -> Result<T> {
    require_finite("lambert_w0", x)?;
    let branch = -T::one() / T::E();
    let slack = T::epsilon() * T::lit(4.0);
    if x < branch - slack {
        return Err(Error::domain(
            "lambert_w0",
            format!("argument {x} below -1/e"),
        ));
    }
    if x == T::zero() {
        return Ok(T::zero());
    }
    if x <= branch {
        return Ok(-T::one());
    }
    if x > T::E() {
        return Ok(halley_log_form(x));
    }
    Ok(halley_direct(x))
}

// Iterates on h(w) = w + ln w − ln x, which avoids forming e^w for large x.
fn halley_log_form<T: Real>(x: T) -> T {
    let lx = x.ln();
    let mut w = lx - lx.ln();
    for _ in 0..MAX_ITER {
        let h = w + w.ln() - lx;
        let h1 = T::one() + T::one() / w;
        let h2 = -T::one() / (w * w);
        let step = h / (h1 - h * h2 / (T::lit(2.0) * h1));
        w = w - step;
        if step.abs() <= T::epsilon() * w.abs() {
            break;
        }
    }
    w
}

fn halley_direct<T: Real>(x: T) -> T {
    let mut w = if x < T::lit(-0.25) {
        // Series about the branch point in p = √(2(ex+1)).
        let p = (T::lit(2.0) * (T::E() * x + T::one())).sqrt();
        -T::one() + p - p * p / T::lit(3.0) + T::lit(11.0 / 72.0) * p * p * p
    } else {
        x.ln_1p()
    };
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + T::one();
        if wp1 == T::zero() {
            break;
        }
        let denom = ew * wp1 - (w + T::lit(2.0)) * f / (T::lit(2.0) * wp1);
        let step = f / denom;
        w = w - step;
        if step.abs() <= T::epsilon() * w.abs().max(T::epsilon()) {
            break;
        }
    }
    w
}
