//! Predictor-antenna spatial-mismatch channel.
//!
//! The receive-antenna channel given the predictor-antenna estimate ĥ is
//! h = κ√(1−σ²)·ĥ + κσ·q + √(1−κ²)·z with q, z ~ CN(0,1), so g = |h|² given
//! ĝ = |ĥ|² is non-central chi-squared.

use rand::Rng;

use crate::mc::{complex_normal, par_chunks};
use crate::special_fn::{bessel_i0e, bessel_j0, marcum_q1_pair, Tolerance};
use crate::Result;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Below this effective σ the conditional law is treated as a point mass.
pub const SIGMA_MIN: f64 = 1e-6;
/// Default carrier frequency in Hz.
pub const DEFAULT_CARRIER_HZ: f64 = 2.68e9;
/// Default antenna separation in wavelengths.
pub const DEFAULT_SEPARATION_WAVELENGTHS: f64 = 1.5;

/// |d_a − v·δ|.
pub fn effective_distance(d_a: f64, v: f64, delta: f64) -> f64 {
    (d_a - v * delta).abs()
}

/// Wavelength c/f_c.
pub fn wavelength(f_c: f64) -> f64 {
    SPEED_OF_LIGHT / f_c
}

/// 2×2 Jakes correlation matrix with off-diagonal J₀(2πd/λ).
pub fn jakes_correlation(d: f64, lambda: f64) -> [[f64; 2]; 2] {
    let r = bessel_j0(2.0 * std::f64::consts::PI * d / lambda).expect("finite argument");
    [[1.0, r], [r, 1.0]]
}

/// Principal symmetric square root of [[1, r], [r, 1]], returned as (φ1, φ2) = (S₁₁, S₁₂).
pub fn correlation_sqrt(r: f64) -> (f64, f64) {
    // Eigenvalues 1 ± r with eigenvectors (1, ±1)/√2.
    let up = (1.0 + r).max(0.0).sqrt();
    let down = (1.0 - r).max(0.0).sqrt();
    ((up + down) / 2.0, (up - down) / 2.0)
}

/// Mismatch coefficient from the square-root entries:
/// |(φ2² − φ1²)/φ1| / √((φ2/φ1)² + ((φ2² − φ1²)/φ1)²).
pub fn sigma_from_distance(d: f64, lambda: f64) -> f64 {
    let r = jakes_correlation(d, lambda)[0][1];
    let (phi1, phi2) = correlation_sqrt(r);
    let u = (phi2 * phi2 - phi1 * phi1) / phi1;
    let w = phi2 / phi1;
    let denom = (w * w + u * u).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    (u.abs() / denom).clamp(0.0, 1.0)
}

/// (σ_eff, noncentrality coefficient) after folding in the estimation error κ.
pub fn fold_estimation_error(sigma: f64, kappa: f64) -> (f64, f64) {
    let nc = kappa * kappa * (1.0 - sigma * sigma);
    let var = (kappa * sigma).powi(2) + 1.0 - kappa * kappa;
    (var.max(0.0).sqrt(), nc)
}

/// Geometry and derived correlation of the predictor-antenna link. SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MismatchModel {
    pub d_a: f64,
    pub v: f64,
    pub delta: f64,
    pub f_c: f64,
    pub lambda: f64,
    pub d: f64,
    pub sigma: f64,
    pub kappa: f64,
}

impl MismatchModel {
    pub fn new(d_a: f64, v: f64, delta: f64, f_c: f64, kappa: f64) -> Result<Self> {
        let bad = |what: &str| crate::Error::domain("MismatchModel::new", what.to_string());
        if !(d_a >= 0.0 && d_a.is_finite())
            || !(v >= 0.0 && v.is_finite())
            || !(delta >= 0.0 && delta.is_finite())
        {
            return Err(bad("d_a, v and δ must be finite and nonnegative"));
        }
        if !(f_c > 0.0 && f_c.is_finite()) {
            return Err(bad("carrier frequency must be positive"));
        }
        if !(0.0..=1.0).contains(&kappa) {
            return Err(bad("κ must lie in [0, 1]"));
        }
        let lambda = wavelength(f_c);
        let d = effective_distance(d_a, v, delta);
        Ok(Self {
            d_a,
            v,
            delta,
            f_c,
            lambda,
            d,
            sigma: sigma_from_distance(d, lambda),
            kappa,
        })
    }

    /// 2.68 GHz carrier and 1.5λ antenna separation.
    pub fn with_defaults(v: f64, delta: f64, kappa: f64) -> Result<Self> {
        let lambda = wavelength(DEFAULT_CARRIER_HZ);
        Self::new(
            DEFAULT_SEPARATION_WAVELENGTHS * lambda,
            v,
            delta,
            DEFAULT_CARRIER_HZ,
            kappa,
        )
    }

    /// (σ_eff, noncentrality coefficient).
    pub fn folded(&self) -> (f64, f64) {
        fold_estimation_error(self.sigma, self.kappa)
    }

    /// Law of g given ĝ.
    pub fn conditional(&self, g_hat: f64) -> ConditionalGainDist {
        let (sigma_eff, nc) = self.folded();
        ConditionalGainDist::new(g_hat, sigma_eff, nc)
    }
}

/// Non-central chi-squared law of g given ĝ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalGainDist {
    pub g_hat: f64,
    pub sigma_eff: f64,
    pub noncentrality_coeff: f64,
}

impl ConditionalGainDist {
    pub fn new(g_hat: f64, sigma_eff: f64, noncentrality_coeff: f64) -> Self {
        Self {
            g_hat: g_hat.max(0.0),
            sigma_eff,
            noncentrality_coeff,
        }
    }

    /// Power of the known part, noncentrality_coeff·ĝ.
    pub fn known_power(&self) -> f64 {
        self.noncentrality_coeff * self.g_hat
    }

    pub fn is_degenerate(&self) -> bool {
        self.sigma_eff <= SIGMA_MIN
    }

    pub fn mean(&self) -> f64 {
        self.known_power() + self.sigma_eff * self.sigma_eff
    }

    /// Marcum arguments scale: α = √(2·nc·ĝ/σ_eff²).
    pub fn alpha(&self) -> f64 {
        (2.0 * self.known_power()).sqrt() / self.sigma_eff
    }

    /// β = √(2x/σ_eff²).
    pub fn beta(&self, x: f64) -> f64 {
        (2.0 * x.max(0.0)).sqrt() / self.sigma_eff
    }

    /// (F(x), 1 − F(x)), each accurate when small.
    pub fn cdf_pair(&self, x: f64) -> Result<(f64, f64)> {
        if self.is_degenerate() {
            return Ok(if x >= self.known_power() {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            });
        }
        if x <= 0.0 {
            return Ok((0.0, 1.0));
        }
        let (q, c) = marcum_q1_pair(self.alpha(), self.beta(x), &Tolerance::default())?;
        Ok((c, q))
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.cdf_pair(x).map(|p| p.0)
    }

    /// Density of g given ĝ. The degenerate law has no density and returns 0.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if self.is_degenerate() || x < 0.0 {
            return Ok(0.0);
        }
        let s2 = self.sigma_eff * self.sigma_eff;
        let k = self.known_power();
        let gap = x.sqrt() - k.sqrt();
        Ok((-gap * gap / s2).exp() * bessel_i0e(2.0 * (x * k).sqrt() / s2)? / s2)
    }

    /// Smallest x with F(x) ≥ p, by bisection to 1e-13 relative width.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(crate::Error::domain(
                "quantile",
                format!("probability {p} outside [0, 1]"),
            ));
        }
        if self.is_degenerate() {
            return Ok(self.known_power());
        }
        if p == 0.0 {
            return Ok(0.0);
        }
        let below = |x: f64| -> Result<bool> {
            let (f, sf) = self.cdf_pair(x)?;
            // Compare on the accurate side.
            Ok(if p > 0.5 { sf > 1.0 - p } else { f < p })
        };
        let mut hi = self.mean().max(1e-300) * 2.0;
        while below(hi)? {
            hi *= 2.0;
            if !hi.is_finite() {
                return Ok(f64::INFINITY);
            }
        }
        let mut lo = 0.0;
        while hi - lo > 1e-13 * hi {
            let mid = 0.5 * (lo + hi);
            if below(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(hi)
    }

    /// Draws one g from the conditional law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (re, im) = complex_normal(rng);
        let a = self.known_power().sqrt() + self.sigma_eff * re;
        let b = self.sigma_eff * im;
        a * a + b * b
    }
}

/// Stream family used by [`sample_pair`].
pub const PAIR_STREAM: u64 = 1;

/// Joint (ĝ, g) generator for one model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSampler {
    a: f64,
    b: f64,
    c: f64,
}

impl PairSampler {
    pub fn new(model: &MismatchModel) -> Self {
        Self {
            a: model.kappa * (1.0 - model.sigma * model.sigma).sqrt(),
            b: model.kappa * model.sigma,
            c: (1.0 - model.kappa * model.kappa).max(0.0).sqrt(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let (hr, hi) = complex_normal(rng);
        let (qr, qi) = complex_normal(rng);
        let (zr, zi) = complex_normal(rng);
        let re = self.a * hr + self.b * qr + self.c * zr;
        let im = self.a * hi + self.b * qi + self.c * zi;
        (hr * hr + hi * hi, re * re + im * im)
    }
}

/// `count` draws of (ĝ, g) from the full model, reproducible from `seed`.
pub fn sample_pair(model: &MismatchModel, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let sampler = PairSampler::new(model);
    par_chunks(count, seed, PAIR_STREAM, |rng, range| {
        range.map(|_| sampler.sample(rng)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Draws [ĥ, h] = Φ^{1/2}·[ε1, ε2] and returns sample means of
/// Re(ĥ·ε1*) and Re(ĥ·ε2*), which estimate φ1 and φ2.
pub fn sample_sqrt_entries(r: f64, count: usize, seed: u64) -> (f64, f64) {
    let (phi1, phi2) = correlation_sqrt(r);
    let parts = par_chunks(count, seed, 2, |rng, range| {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for _ in range {
            let e1 = complex_normal(rng);
            let e2 = complex_normal(rng);
            let h = (phi1 * e1.0 + phi2 * e2.0, phi1 * e1.1 + phi2 * e2.1);
            s1 += h.0 * e1.0 + h.1 * e1.1;
            s2 += h.0 * e2.0 + h.1 * e2.1;
        }
        (s1, s2)
    });
    let n = count as f64;
    let (s1, s2) = parts
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    (s1 / n, s2 / n)
}
