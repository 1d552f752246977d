//! Unit-circle contour integrals for the asymptotic mean and covariance of
//! linear spectral statistics of the F-matrix.
//!
//! With `x(ξ) = (1 + h² + 2h·Re ξ)/(1−γ₂)²` the support `[a, b]` is traced
//! twice as `ξ` runs around `|ξ| = 1`. The mean is
//!
//! ```text
//! μ(f) = lim_{τ↓1} (κ−1)/(4πi) ∮ f(x(ξ)) [1/(ξ−1/τ) + 1/(ξ+1/τ) − 2/(ξ+γ₂/(hτ))] dξ
//!      + β_x γ₁(1−γ₂)²/(2πi h²) ∮ f(x(ξ)) / (ξ+γ₂/h)³ dξ
//!      + β_y γ₂(1−γ₂)/(2πi h)   ∮ f(x(ξ)) (ξ+1/h) / (ξ+γ₂/h)³ dξ
//! ```
//!
//! and the covariance is
//!
//! ```text
//! υ(f,g) = −lim_{τ↓1} κ/(4π²) ∮∮ f(x(ξ₁)) g(x(ξ₂)) / (ξ₁−τξ₂)² dξ₁ dξ₂
//!          − (β_xγ₁+β_yγ₂)(1−γ₂)²/(4π²h²) ∮ f(x(ξ))/(ξ+γ₂/h)² dξ · ∮ g(x(ξ))/(ξ+γ₂/h)² dξ
//! ```
//!
//! Every integral uses the uniform-angle trapezoidal rule, which converges
//! geometrically for periodic analytic integrands. The `τ`-dependent terms
//! are evaluated along a fixed schedule and extrapolated to `τ = 1` by
//! polynomial (Neville) extrapolation in `u = 1/τ`, the variable the kernel
//! poles depend on.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{DimensionRatios, Kappa};
use crate::error::{Error, Result};

/// Quadrature and extrapolation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourOptions {
    pub kappa: Kappa,
    /// Decreasing values of `τ > 1`.
    pub tau_schedule: Vec<f64>,
    pub mean_nodes: usize,
    /// Nodes per circle in the double integral.
    pub var_nodes: usize,
    /// Largest accepted change between the last two extrapolants (relative to `max(1, |value|)`).
    pub extrapolation_tol: f64,
    pub mean_imag_bound: f64,
    pub var_imag_bound: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        Self {
            kappa: Kappa::Real,
            tau_schedule: vec![1.1, 1.05, 1.025, 1.0125],
            mean_nodes: 1 << 12,
            var_nodes: 1 << 12,
            extrapolation_tol: 1e-7,
            mean_imag_bound: 1e-9,
            var_imag_bound: 1e-8,
        }
    }
}

impl ContourOptions {
    fn validate(&self) -> Result<()> {
        self.kappa.ensure_supported()?;
        if self.tau_schedule.is_empty() {
            return Err(Error::InvalidParameter {
                name: "tau_schedule length",
                value: 0.0,
            });
        }
        for w in self.tau_schedule.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::InvalidParameter {
                    name: "tau_schedule (must decrease)",
                    value: w[1],
                });
            }
        }
        if let Some(&t) = self.tau_schedule.iter().find(|&&t| !(t > 1.0)) {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: t,
            });
        }
        if self.mean_nodes < 8 || self.var_nodes < 8 {
            return Err(Error::InvalidParameter {
                name: "nodes",
                value: self.mean_nodes.min(self.var_nodes) as f64,
            });
        }
        Ok(())
    }
}

/// Breakdown of the mean integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourMean {
    pub kappa_term: f64,
    pub beta_x_term: f64,
    pub beta_y_term: f64,
    pub total: f64,
    /// `κ`-term value at each `τ` of the schedule.
    pub tau_values: Vec<f64>,
    pub imag_residual: f64,
}

/// Breakdown of the covariance integral.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourVar {
    pub kappa_term: f64,
    pub beta_term: f64,
    pub total: f64,
    pub tau_values: Vec<f64>,
    pub imag_residual: f64,
}

/// Unit-circle nodes and the matching spectral points `x(ξ)`.
struct Circle {
    xi: Vec<Complex64>,
    x: Vec<f64>,
}

impl Circle {
    fn new(r: &DimensionRatios, n: usize) -> Self {
        let scale = (1.0 - r.gamma2).powi(2);
        let h = r.h;
        let mut xi = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n);
        for j in 0..n {
            let theta = std::f64::consts::TAU * j as f64 / n as f64;
            let z = Complex64::from_polar(1.0, theta);
            xi.push(z);
            x.push((1.0 + h * h + 2.0 * h * z.re) / scale);
        }
        Self { xi, x }
    }

    /// `Σ_j w_j ξ_j kernel(ξ_j)`, i.e. `N/(2πi) ∮ w·kernel dξ`.
    fn sum(&self, weights: &[f64], kernel: impl Fn(Complex64) -> Complex64) -> Complex64 {
        self.xi
            .iter()
            .zip(weights)
            .map(|(&z, &w)| w * z * kernel(z))
            .sum()
    }
}

/// Neville extrapolation to `u = 1`; returns the estimate using all points
/// and the change from the estimate using all but the last.
fn extrapolate(us: &[f64], values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mut table = values.to_vec();
    let mut diag = vec![values[0]];
    for k in 1..n {
        for i in (k..n).rev() {
            let (ui, uik) = (us[i], us[i - k]);
            table[i] = ((1.0 - uik) * table[i] - (1.0 - ui) * table[i - 1]) / (ui - uik);
        }
        diag.push(table[n - 1]);
    }
    let last = diag[n - 1];
    let change = if n > 1 { (last - diag[n - 2]).abs() } else { 0.0 };
    (last, change)
}

fn extrapolated(opts: &ContourOptions, values: &[f64]) -> Result<f64> {
    let us: Vec<f64> = opts.tau_schedule.iter().map(|t| 1.0 / t).collect();
    let (value, change) = extrapolate(&us, values);
    if !(change <= opts.extrapolation_tol * value.abs().max(1.0)) {
        return Err(Error::NotConverged { change });
    }
    Ok(value)
}

fn check_imag(residual: f64, value: f64, bound: f64) -> Result<()> {
    if !(residual <= bound * value.abs().max(1.0)) {
        return Err(Error::ImaginaryResidual { residual, bound });
    }
    Ok(())
}

/// Numerical `μ(f)` for an arbitrary real-analytic `f`.
pub fn contour_mean_oracle(
    f: &dyn Fn(f64) -> f64,
    r: &DimensionRatios,
    beta_x: f64,
    beta_y: f64,
    opts: &ContourOptions,
) -> Result<ContourMean> {
    opts.validate()?;
    let n = opts.mean_nodes;
    let circle = Circle::new(r, n);
    let fx: Vec<f64> = circle.x.iter().map(|&x| f(x)).collect();
    let (g1, g2, h) = (r.gamma1, r.gamma2, r.h);
    let c = g2 / h;
    let nf = n as f64;
    let kappa = opts.kappa.value();

    let mut imag: f64 = 0.0;
    let mut tau_values = Vec::with_capacity(opts.tau_schedule.len());
    for &tau in &opts.tau_schedule {
        let u = 1.0 / tau;
        let s = circle.sum(&fx, |z| 1.0 / (z - u) + 1.0 / (z + u) - 2.0 / (z + c * u));
        let v = s * ((kappa - 1.0) / (2.0 * nf));
        imag = imag.max(v.im.abs());
        tau_values.push(v.re);
    }
    let kappa_term = extrapolated(opts, &tau_values)?;

    let sx = circle.sum(&fx, |z| (z + c).powi(-3));
    let bx = sx * (beta_x * g1 * (1.0 - g2).powi(2) / (h * h * nf));
    let sy = circle.sum(&fx, |z| (z + 1.0 / h) * (z + c).powi(-3));
    let by = sy * (beta_y * g2 * (1.0 - g2) / (h * nf));
    imag = imag.max(bx.im.abs()).max(by.im.abs());

    let total = kappa_term + bx.re + by.re;
    check_imag(imag, total, opts.mean_imag_bound)?;
    Ok(ContourMean {
        kappa_term,
        beta_x_term: bx.re,
        beta_y_term: by.re,
        total,
        tau_values,
        imag_residual: imag,
    })
}

/// Numerical `υ(f, g)`; `f = g` gives the variance.
pub fn contour_var_oracle(
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    r: &DimensionRatios,
    beta_x: f64,
    beta_y: f64,
    opts: &ContourOptions,
) -> Result<ContourVar> {
    opts.validate()?;
    let n = opts.var_nodes;
    let circle = Circle::new(r, n);
    let fx: Vec<f64> = circle.x.iter().map(|&x| f(x)).collect();
    let gx: Vec<f64> = circle.x.iter().map(|&x| g(x)).collect();
    let (g1, g2, h) = (r.gamma1, r.gamma2, r.h);
    let c = g2 / h;
    let nf = n as f64;
    let kappa = opts.kappa.value();

    let mut imag: f64 = 0.0;
    let mut tau_values = Vec::with_capacity(opts.tau_schedule.len());
    for &tau in &opts.tau_schedule {
        // ξ₁ξ₂/(ξ₁−τξ₂)² depends only on w = ξ₁/ξ₂, so the kernel is circulant.
        let kernel: Vec<Complex64> = circle.xi.iter().map(|&w| w / (w - tau).powi(2)).collect();
        let rows: Vec<Complex64> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &gk) in gx.iter().enumerate() {
                    acc += gk * kernel[(j + n - k) % n];
                }
                fx[j] * acc
            })
            .collect();
        let s: Complex64 = rows.iter().sum();
        let v = s * (kappa / (nf * nf));
        imag = imag.max(v.im.abs());
        tau_values.push(v.re);
    }
    let kappa_term = extrapolated(opts, &tau_values)?;

    let sf = circle.sum(&fx, |z| (z + c).powi(-2));
    let sg = circle.sum(&gx, |z| (z + c).powi(-2));
    let beta = sf * sg * ((beta_x * g1 + beta_y * g2) * (1.0 - g2).powi(2) / (h * h * nf * nf));
    imag = imag.max(beta.im.abs());

    let total = kappa_term + beta.re;
    check_imag(imag, total, opts.var_imag_bound)?;
    Ok(ContourVar {
        kappa_term,
        beta_term: beta.re,
        total,
        tau_values,
        imag_residual: imag,
    })
}
