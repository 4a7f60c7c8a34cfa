//! Semi-linear Marcum Q approximation, closed-form Marcum-Q integrals and
//! predictor-antenna link adaptation.

// Constants are kept at full published precision; `!(x >= 0)` forms deliberately reject NaN.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod harq_power;
pub mod integrals;
pub mod marcum_approx;
pub mod mc;
pub mod optim;
pub mod quad;
pub mod rate_adapt;
pub mod scalar;
pub mod special_fn;

#[cfg(test)]
mod proptests;

pub use error::{Error, Result};
pub use scalar::Real;
pub use special_fn::Tolerance;

/// Library version, recorded in experiment metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Tolerance64 = Tolerance<f64>;
pub type Tolerance32 = Tolerance<f32>;
pub type SemiLinearParams64 = marcum_approx::SemiLinearParams<f64>;
pub type SemiLinearParams32 = marcum_approx::SemiLinearParams<f32>;
pub type ErrorSurface64 = marcum_approx::ErrorSurface<f64>;
pub type ErrorSurface32 = marcum_approx::ErrorSurface<f32>;
pub type GIntegralSpec64 = integrals::GIntegralSpec<f64>;
pub type GIntegralSpec32 = integrals::GIntegralSpec<f32>;
pub type TIntegralSpec64 = integrals::TIntegralSpec<f64>;
pub type TIntegralSpec32 = integrals::TIntegralSpec<f32>;
pub type QuadOptions64 = quad::QuadOptions<f64>;
pub type QuadOptions32 = quad::QuadOptions<f32>;
