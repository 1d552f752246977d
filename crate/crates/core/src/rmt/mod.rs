//! Limiting quantities for the trace of a rank-one-numerator F-matrix.
//!
//! `T²` is the trace of `F = n₁(ȳ−μ₀)(ȳ−μ₀)' S⁻¹`, an F-matrix with
//! degrees of freedom `(1, m)` where `m` is the denominator degrees of
//! freedom (`n₁ − 1` for the pooled test). With `γ₁ = p` and `γ₂ = p/m`:
//!
//! - `T²/p → d(γ₂) = 1/(1−γ₂)` almost surely;
//! - `T² − p·d(γ₂)` is asymptotically normal with mean `μ(f)` and variance
//!   `υ(f)` for `f(x) = x`, given by [`asymptotic_mean`] and [`asymptotic_var`].
//!
//! Kurtosis parameters `β_x`, `β_y` are **excess** kurtoses (`E z⁴ − 3` for
//! standardized real entries), so both vanish for Gaussian data. Written
//! with raw fourth moments (`E z⁴ = β + κ − 1`) the Gaussian value would be
//! `β = 2`, which is inconsistent with the closed forms reducing to the
//! Gaussian case; the excess-kurtosis convention is the one used here.
//!
//! [`contour`] holds independent numerical evaluations of the same means
//! and variances as unit-circle contour integrals.

pub mod contour;

use serde::Serialize;

use crate::error::{Error, Result};

/// Real (`κ = 2`) or complex (`κ = 1`) entries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kappa {
    #[default]
    Real,
    Complex,
}

impl Kappa {
    pub fn value(self) -> f64 {
        match self {
            Kappa::Real => 2.0,
            Kappa::Complex => 1.0,
        }
    }

    /// Only real data is supported end to end.
    pub fn ensure_supported(self) -> Result<()> {
        match self {
            Kappa::Real => Ok(()),
            Kappa::Complex => Err(Error::UnsupportedKappa),
        }
    }
}

/// `γ₁`, `γ₂`, `h = √(γ₁+γ₂−γ₁γ₂)` and the support `[a, b]` of the limiting
/// spectral distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionRatios {
    /// Dimension, when the ratios come from a concrete sample.
    pub p: Option<usize>,
    /// Denominator degrees of freedom, when the ratios come from a concrete sample.
    pub denom_dof: Option<usize>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub h: f64,
    pub support_a: f64,
    pub support_b: f64,
}

impl DimensionRatios {
    /// Ratios from arbitrary `γ₁ > 0`, `γ₂ ∈ (0, 1)`.
    pub fn from_gammas(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1 > 0.0) || !gamma1.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma1",
                value: gamma1,
            });
        }
        if !(gamma2 > 0.0 && gamma2 < 1.0) {
            return Err(Error::RatioOutOfRange(gamma2));
        }
        // Grouped so that γ₁ = 1 gives h = 1 exactly.
        let h = (gamma1 + gamma2 * (1.0 - gamma1)).sqrt();
        let scale = 1.0 - gamma2;
        Ok(Self {
            p: None,
            denom_dof: None,
            gamma1,
            gamma2,
            h,
            support_a: ((1.0 - h) / scale).powi(2),
            support_b: ((1.0 + h) / scale).powi(2),
        })
    }
}

/// Ratios for an F-matrix with numerator degree 1: `γ₁ = p`, `γ₂ = p/m`.
pub fn ratios(p: usize, denom_dof: usize) -> Result<DimensionRatios> {
    if p == 0 {
        return Err(Error::InvalidParameter {
            name: "p",
            value: 0.0,
        });
    }
    if p >= denom_dof {
        return Err(Error::RatioOutOfRange(p as f64 / denom_dof as f64));
    }
    let mut r = DimensionRatios::from_gammas(p as f64, p as f64 / denom_dof as f64)?;
    r.p = Some(p);
    r.denom_dof = Some(denom_dof);
    Ok(r)
}

/// Density of the continuous part of the limiting spectral distribution.
///
/// The continuous part carries mass `min(1, 1/γ₁)`; for `γ₁ > 1` the rest
/// sits at the origin.
pub fn lsd_density(x: f64, r: &DimensionRatios) -> f64 {
    let (a, b) = (r.support_a, r.support_b);
    if !(x > a && x < b) {
        return 0.0;
    }
    (1.0 - r.gamma2) * ((b - x) * (x - a)).sqrt()
        / (2.0 * std::f64::consts::PI * x * (r.gamma1 + r.gamma2 * x))
}

/// `d(γ₂) = 1/(1−γ₂)`.
pub fn centering_d(gamma2: f64) -> Result<f64> {
    if !(gamma2 > 0.0 && gamma2 < 1.0) {
        return Err(Error::RatioOutOfRange(gamma2));
    }
    Ok(1.0 / (1.0 - gamma2))
}

/// `μ(f) = γ₂/(1−γ₂)² + β_y γ₂/(1−γ₂)` for `f(x) = x`.
///
/// The `β_x` contribution integrates to zero, so `beta_x` is accepted only
/// for call-site symmetry with [`asymptotic_var`].
pub fn asymptotic_mean(r: &DimensionRatios, _beta_x: f64, beta_y: f64) -> f64 {
    let g2 = r.gamma2;
    let s = 1.0 - g2;
    g2 / (s * s) + beta_y * g2 / s
}

/// `υ(f) = κh²/(1−γ₂)⁴ + (β_xγ₁ + β_yγ₂)/(1−γ₂)²` with `κ = 2`.
pub fn asymptotic_var(r: &DimensionRatios, beta_x: f64, beta_y: f64) -> Result<f64> {
    let s2 = (1.0 - r.gamma2).powi(2);
    let v = Kappa::Real.value() * r.h * r.h / (s2 * s2)
        + (beta_x * r.gamma1 + beta_y * r.gamma2) / s2;
    if !(v > 0.0) {
        return Err(Error::NonPositiveVariance(v));
    }
    Ok(v)
}

/// Centering and scaling terms for the corrected statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitParams {
    pub d: f64,
    pub mu_f: f64,
    pub upsilon_f: f64,
    pub beta_x: f64,
    pub beta_y: f64,
    pub kappa: Kappa,
}

impl LimitParams {
    pub fn compute(r: &DimensionRatios, beta_x: f64, beta_y: f64) -> Result<Self> {
        Ok(Self {
            d: centering_d(r.gamma2)?,
            mu_f: asymptotic_mean(r, beta_x, beta_y),
            upsilon_f: asymptotic_var(r, beta_x, beta_y)?,
            beta_x,
            beta_y,
            kappa: Kappa::Real,
        })
    }
}
