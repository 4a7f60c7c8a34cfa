//! Reference implementations of the special functions used throughout the crate.

mod bessel;
mod expint;
mod gamma;
mod lambert;
mod marcum;

pub use bessel::{bessel_i0, bessel_i0e, bessel_j0};
pub use expint::{exp_integral_e1, scaled_e1};
pub use gamma::{
    gamma, ln_gamma, poisson_pmf, regularized_gamma, regularized_gamma_p, regularized_gamma_q,
    upper_incomplete_gamma,
};
pub use lambert::lambert_w0;
pub use marcum::{marcum_q1, marcum_q1_pair};

use crate::scalar::Real;

/// Stopping rules for series, continued fractions and quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_terms: usize,
}

impl<T: Real> Tolerance<T> {
    /// Builds a tolerance, rejecting non-positive values.
    pub fn new(abs_tol: T, rel_tol: T, max_terms: usize) -> crate::Result<Self> {
        if !(abs_tol > T::zero()) || !(rel_tol > T::zero()) || max_terms == 0 {
            return Err(crate::Error::domain(
                "Tolerance::new",
                "abs_tol and rel_tol must be positive and max_terms at least 1",
            ));
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_terms,
        })
    }
}

impl<T: Real> Default for Tolerance<T> {
    /// 1e-14 absolute, 1e-12 relative, 10^6 terms, widened to the precision of `T`.
    fn default() -> Self {
        let eps16 = T::epsilon() * T::lit(16.0);
        Self {
            abs_tol: T::lit(1e-14).max(eps16),
            rel_tol: T::lit(1e-12).max(eps16),
            max_terms: 1_000_000,
        }
    }
}

pub(crate) fn require_finite<T: Real>(func: &'static str, x: T) -> crate::Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(crate::Error::domain(
            func,
            format!("non-finite argument {x}"),
        ))
    }
}
