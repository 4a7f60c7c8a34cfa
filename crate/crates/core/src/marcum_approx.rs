//! Semi-linear approximation of the CDF y(α,β) = 1 − Q₁(α,β).
//!
//! The CDF is replaced by 0 below c1, by a line through its inflection
//! point between c1 and c2, and by 1 above c2.

use std::fmt;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::scalar::Real;
use crate::special_fn::{bessel_i0e, marcum_q1_pair, Tolerance};
use crate::{Error, Result};

/// Which construction of the line to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Exact inflection point and slope.
    Lemma1,
    /// Large-α form anchored at β = α.
    Corollary1,
    /// Small-α form anchored at β = (α+√2)/2.
    Corollary2,
    /// Large-α form with the asymptotic Bessel substitution.
    Corollary3,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Lemma1,
        Variant::Corollary1,
        Variant::Corollary2,
        Variant::Corollary3,
    ];

    /// Short lowercase name used in tables and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Variant::Lemma1 => "lemma1",
            Variant::Corollary1 => "coro1",
            Variant::Corollary2 => "coro2",
            Variant::Corollary3 => "coro3",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Line parameters for one α and variant.
///
/// On [c1, c2] the CDF is approximated by `o1·(β − o2) + o3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiLinearParams<T> {
    pub alpha: T,
    pub variant: Variant,
    pub x0: T,
    pub y0: T,
    pub slope: T,
    pub c1: T,
    pub c2: T,
    pub o1: T,
    pub o2: T,
    pub o3: T,
}

static WARNED_LARGE_ALPHA_FORM: AtomicBool = AtomicBool::new(false);

impl<T: Real> SemiLinearParams<T> {
    /// Builds the parameters for `alpha` under `variant`.
    pub fn new(alpha: T, variant: Variant) -> Result<Self> {
        if !alpha.is_finite() || alpha < T::zero() {
            return Err(Error::domain(
                "SemiLinearParams::new",
                format!("need finite α ≥ 0, got {alpha}"),
            ));
        }
        match variant {
            Variant::Lemma1 => {
                let x0 = (alpha + (alpha * alpha + T::lit(2.0)).sqrt()) / T::lit(2.0);
                Self::from_tangent(alpha, variant, x0)
            }
            Variant::Corollary2 => {
                let x0 = (alpha + T::SQRT_2()) / T::lit(2.0);
                let mut p = Self::from_tangent(alpha, variant, x0)?;
                let (c1, c2) = corollary2_printed_breakpoints(alpha)?;
                if p.line(c1).abs() < T::lit(1e-9) && (p.line(c2) - T::one()).abs() < T::lit(1e-9) {
                    p.c1 = c1.max(T::zero());
                    p.c2 = c2;
                } else {
                    log::debug!("corollary-2 breakpoints are off the tangent line at α={alpha}; using line intercepts");
                }
                Ok(p)
            }
            Variant::Corollary1 | Variant::Corollary3 => {
                if alpha == T::zero() {
                    return Err(Error::domain(
                        "SemiLinearParams::new",
                        format!("{variant} is undefined at α = 0"),
                    ));
                }
                if alpha < T::one() && !WARNED_LARGE_ALPHA_FORM.swap(true, Ordering::Relaxed) {
                    log::warn!(
                        "{variant} is a large-α form; α = {alpha} < 1 is outside its regime"
                    );
                }
                if variant == Variant::Corollary1 {
                    Self::corollary1(alpha)
                } else {
                    Ok(Self::corollary3(alpha))
                }
            }
        }
    }

    fn from_tangent(alpha: T, variant: Variant, x0: T) -> Result<Self> {
        let (q, cdf) = marcum_q1_pair(alpha, x0, &Tolerance::default())?;
        let slope = cdf_slope(alpha, x0)?;
        let y0 = cdf.max(T::zero()).min(T::one());
        Ok(Self {
            alpha,
            variant,
            x0,
            y0,
            slope,
            c1: (x0 - y0 / slope).max(T::zero()),
            c2: x0 + q / slope,
            o1: slope,
            o2: x0,
            o3: y0,
        })
    }

    fn corollary1(alpha: T) -> Result<Self> {
        let scaled = bessel_i0e(alpha * alpha)?;
        let o1 = alpha * scaled;
        let o3 = T::lit(0.5) * (T::one() - scaled);
        Ok(Self {
            alpha,
            variant: Variant::Corollary1,
            x0: alpha,
            y0: o3,
            slope: o1,
            c1: (alpha - o3 / o1).max(T::zero()),
            c2: alpha + (T::one() - o3) / o1,
            o1,
            o2: alpha,
            o3,
        })
    }

    fn corollary3(alpha: T) -> Self {
        let root = (T::lit(2.0) * T::PI()).sqrt();
        let o1 = T::one() / root;
        let o3 = T::lit(0.5) * (T::one() - T::one() / (root * alpha));
        let (c1, c2) = corollary3_breakpoints(alpha);
        Self {
            alpha,
            variant: Variant::Corollary3,
            x0: alpha,
            y0: o3.max(T::zero()).min(T::one()),
            slope: o1,
            c1: c1.max(T::zero()),
            c2,
            o1,
            o2: alpha,
            o3,
        }
    }

    /// Unclipped line value o1·(β − o2) + o3.
    pub fn line(&self, beta: T) -> T {
        self.o1 * (beta - self.o2) + self.o3
    }

    /// Approximate CDF 1 − Q₁(α, β).
    pub fn approx_cdf(&self, beta: T) -> T {
        if beta < self.c1 {
            T::zero()
        } else if beta > self.c2 {
            T::one()
        } else {
            self.line(beta).max(T::zero()).min(T::one())
        }
    }

    /// Approximate Q₁(α, β).
    pub fn approx_q1(&self, beta: T) -> T {
        T::one() - self.approx_cdf(beta)
    }
}

/// Convenience wrapper for [`SemiLinearParams::new`].
pub fn build_params<T: Real>(alpha: T, variant: Variant) -> Result<SemiLinearParams<T>> {
    SemiLinearParams::new(alpha, variant)
}

/// ∂(1 − Q₁(α,β))/∂β = β·e^{−(α²+β²)/2}·I₀(αβ), evaluated without overflow.
pub fn cdf_slope<T: Real>(alpha: T, beta: T) -> Result<T> {
    let d = alpha - beta;
    Ok(beta * (-(d * d) / T::lit(2.0)).exp() * bessel_i0e(alpha * beta)?)
}

/// The small-α breakpoints exactly as written in the corollary: the Lemma-1
/// quotient with a squared anchor in the denominator and α added instead of the anchor.
pub fn corollary2_printed_breakpoints<T: Real>(alpha: T) -> Result<(T, T)> {
    let x0 = (alpha + T::SQRT_2()) / T::lit(2.0);
    let (q, _) = marcum_q1_pair(alpha, x0, &Tolerance::default())?;
    let denom = x0 * cdf_slope(alpha, x0)?;
    Ok(((q - T::one()) / denom + alpha, q / denom + alpha))
}

/// Breakpoints of the asymptotic large-α line; c̆1 may be negative for small α.
pub fn corollary3_breakpoints<T: Real>(alpha: T) -> (T, T) {
    let root = (T::lit(2.0) * T::PI()).sqrt();
    let half_width = root / T::lit(2.0) * (T::one() - T::one() / (root * alpha));
    let c1 = alpha - half_width;
    (c1, root + c1)
}

/// Which part of the β axis an error statistic covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Midrange,
    Tails,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Midrange => "midrange",
            Region::Tails => "tails",
        }
    }
}

/// One row of an approximation error table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow<T> {
    pub alpha: T,
    pub variant: Variant,
    pub region: Region,
    pub max_abs_err: T,
    pub mean_abs_err: T,
}

/// Approximation error against the exact CDF for a grid of α.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorSurface<T> {
    pub rows: Vec<ErrorRow<T>>,
}

/// Upper end of the β axis used for error tables and curves.
pub fn beta_extent<T: Real>(alpha: T) -> T {
    alpha + T::lit(8.0)
}

/// Max/mean absolute CDF error for each α and variant, split into the
/// linear midrange [c1, c2] and the tails. Variants undefined at an α are skipped.
pub fn error_report<T: Real>(alpha_grid: &[T], beta_resolution: T) -> Result<ErrorSurface<T>> {
    if alpha_grid.is_empty() {
        return Err(Error::domain("error_report", "empty α grid"));
    }
    if !(beta_resolution > T::zero()) {
        return Err(Error::domain(
            "error_report",
            "β resolution must be positive",
        ));
    }
    let tol = Tolerance::default();
    let mut rows = Vec::new();
    for &alpha in alpha_grid {
        let top = beta_extent(alpha);
        let steps = (top / beta_resolution)
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(1);
        let mut exact = Vec::with_capacity(steps + 1);
        for i in 0..=steps {
            let beta = top * T::from_count(i) / T::from_count(steps);
            exact.push((beta, marcum_q1_pair(alpha, beta, &tol)?.1));
        }
        for variant in Variant::ALL {
            let params = match SemiLinearParams::new(alpha, variant) {
                Ok(p) => p,
                Err(Error::Domain { .. }) => continue,
                Err(e) => return Err(e),
            };
            let mut stats = [(T::zero(), T::zero(), 0usize); 2];
            for &(beta, cdf) in &exact {
                let err = (params.approx_cdf(beta) - cdf).abs();
                let slot = if beta >= params.c1 && beta <= params.c2 {
                    0
                } else {
                    1
                };
                let s = &mut stats[slot];
                s.0 = s.0.max(err);
                s.1 = s.1 + err;
                s.2 += 1;
            }
            for (slot, region) in [(0, Region::Midrange), (1, Region::Tails)] {
                let (max, total, n) = stats[slot];
                if n == 0 {
                    continue;
                }
                rows.push(ErrorRow {
                    alpha,
                    variant,
                    region,
                    max_abs_err: max,
                    mean_abs_err: total / T::from_count(n),
                });
            }
        }
    }
    Ok(ErrorSurface { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_fn::marcum_q1;

    fn exact_cdf(a: f64, b: f64) -> f64 {
        1.0 - marcum_q1(a, b, &Tolerance::default()).unwrap()
    }

    #[test]
    fn lemma1_at_zero_alpha() {
        let p = SemiLinearParams::new(0.0_f64, Variant::Lemma1).unwrap();
        assert!((p.x0 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        // inflection condition 2x² − 2αx − 1 = 0
        assert!((2.0 * p.x0 * p.x0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lemma1_tangent_value_matches_exact_cdf() {
        let p = SemiLinearParams::new(2.0_f64, Variant::Lemma1).unwrap();
        assert!((p.y0 - exact_cdf(2.0, p.x0)).abs() < 1e-10);
        assert!((p.approx_cdf(p.x0) - p.y0).abs() < 1e-15);
        assert!(p.c1 < p.x0 && p.x0 < p.c2);
        // frozen: c1, c2 at α = 2
        assert!((p.c1 - 1.066_098_064_556_085).abs() < 1e-9, "{}", p.c1);
        assert!((p.c2 - 3.425_495_283_010_784).abs() < 1e-9, "{}", p.c2);
    }

    #[test]
    fn corollary1_anchor_shift() {
        let l = SemiLinearParams::new(1.0_f64, Variant::Lemma1).unwrap();
        let c = SemiLinearParams::new(1.0_f64, Variant::Corollary1).unwrap();
        let want = (3.0_f64.sqrt() - 1.0) / 2.0;
        assert!(((l.x0 - c.x0) - want).abs() < 1e-15);
        assert!((want - 0.366).abs() < 1e-3);
    }

    #[test]
    fn corollary1_anchor_is_equal_argument_identity() {
        let c = SemiLinearParams::new(1.5_f64, Variant::Corollary1).unwrap();
        assert!((c.o3 - exact_cdf(1.5, 1.5)).abs() < 1e-12);
    }

    #[test]
    fn corollary2_printed_breakpoints_are_off_the_line() {
        let alpha = 0.5_f64;
        let p = SemiLinearParams::new(alpha, Variant::Corollary2).unwrap();
        let (c1, c2) = corollary2_printed_breakpoints(alpha).unwrap();
        assert!(p.line(c1).abs() > 1e-3 || (p.line(c2) - 1.0).abs() > 1e-3);
        assert!(p.line(p.c2) - 1.0 < 1e-12);
        assert!((p.line(p.c1)).abs() < 1e-12 || p.c1 == 0.0);
    }

    #[test]
    fn corollary3_line_hits_zero_and_one() {
        let p = SemiLinearParams::new(3.0_f64, Variant::Corollary3).unwrap();
        assert!(p.line(p.c1).abs() < 1e-12);
        assert!((p.line(p.c2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn large_alpha_forms_reject_zero() {
        assert!(SemiLinearParams::new(0.0_f64, Variant::Corollary1).is_err());
        assert!(SemiLinearParams::new(0.0_f64, Variant::Corollary3).is_err());
        assert!(SemiLinearParams::new(-1.0_f64, Variant::Lemma1).is_err());
    }

    #[test]
    fn pieces_and_complement() {
        let p = SemiLinearParams::new(2.0_f64, Variant::Lemma1).unwrap();
        assert_eq!(p.approx_cdf(0.0), 0.0);
        assert_eq!(p.approx_q1(p.c2 + 0.1), 0.0);
        assert_eq!(p.approx_q1(p.c1 - 0.1), 1.0);
        let q = marcum_q1(2.0, p.x0, &Tolerance::default()).unwrap();
        assert!((p.approx_q1(p.x0) - q).abs() < 1e-12);
    }

    #[test]
    fn midrange_error_at_alpha_two_peaks_at_upper_breakpoint() {
        let p = SemiLinearParams::new(2.0_f64, Variant::Lemma1).unwrap();
        let mut worst: f64 = 0.0;
        let mut at = 0.0;
        for i in 0..=6000 {
            let b = 6.0 * i as f64 / 6000.0;
            if b >= p.c1 && b <= p.c2 {
                let e = (p.approx_cdf(b) - exact_cdf(2.0, b)).abs();
                if e > worst {
                    worst = e;
                    at = b;
                }
            }
        }
        // The line reaches 1 at c2 while the exact CDF is still ≈ 0.891 there.
        let at_c2 = 1.0 - exact_cdf(2.0, p.c2);
        assert!((at_c2 - 0.108_951).abs() < 1e-5, "{at_c2}");
        assert!(worst <= at_c2 + 1e-12 && worst > 0.1, "{worst}");
        assert!(p.c2 - at < 1e-3 + 6.0 / 6000.0);
    }

    #[test]
    fn slope_matches_finite_difference() {
        let p = SemiLinearParams::new(1.3_f64, Variant::Lemma1).unwrap();
        let h = 1e-5;
        let fd = (exact_cdf(1.3, p.x0 + h) - exact_cdf(1.3, p.x0 - h)) / (2.0 * h);
        assert!(((fd - p.slope) / p.slope).abs() < 1e-6);
    }

    #[test]
    fn error_report_rows() {
        let s = error_report(&[0.1_f64, 0.5, 1.0], 0.01).unwrap();
        assert_eq!(s.rows.len(), 3 * 4 * 2);
        let z = error_report(&[0.0_f64], 0.01).unwrap();
        assert!(z.rows.iter().all(|r| r.alpha == 0.0));
        assert!(error_report::<f64>(&[], 0.01).is_err());
    }

    #[test]
    fn small_alpha_form_misused_at_large_alpha() {
        let s = error_report(&[3.0_f64], 0.005).unwrap();
        let mid = |v: Variant| {
            s.rows
                .iter()
                .find(|r| r.variant == v && r.region == Region::Midrange)
                .unwrap()
                .max_abs_err
        };
        assert!(mid(Variant::Corollary2) > mid(Variant::Lemma1));
    }

    #[test]
    fn single_precision_params() {
        let p = SemiLinearParams::new(2.0_f32, Variant::Lemma1).unwrap();
        assert!((p.c1 - 1.066_098_1).abs() < 1e-4);
    }
}
