//! Cross-checks of the closed-form limits against the contour-integral
//! oracles, plus a Monte Carlo check of the centering `T²/p → d(γ₂)`.

use std::fmt::Write as _;
use std::time::Instant;

use hdlin_core::rmt::contour::{contour_mean_oracle, contour_var_oracle, ContourOptions};
use hdlin_core::rmt::{asymptotic_mean, asymptotic_var, centering_d, ratios, DimensionRatios};
use hdlin_core::stats::{sample_moments, t2_statistic, PooledSample};
use hdlin_core::{Distribution, RandomStream};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub const REL_TOL: f64 = 1e-5;
pub const BETA_X_TOL: f64 = 1e-8;
/// Half-width of the band around `d(γ₂)` for the centering check.
pub const LIMIT_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleTuple {
    pub gamma1: f64,
    pub gamma2: f64,
    pub beta_x: f64,
    pub beta_y: f64,
}

/// 24 tuples: a 5 × 4 sweep of `(γ₁, γ₂)` with rotating kurtosis pairs,
/// plus the four ratio pairs of the simulation tables.
pub fn default_grid() -> Vec<OracleTuple> {
    let betas = [(0.0, 0.0), (0.05, 1.5), (0.3, -0.8), (1.0, 4.0)];
    let mut out = Vec::new();
    let mut k = 0;
    for &gamma1 in &[0.25, 1.0, 3.0, 40.0, 120.0] {
        for &gamma2 in &[0.05, 0.25, 0.5, 0.9] {
            let (beta_x, beta_y) = betas[k % betas.len()];
            k += 1;
            out.push(OracleTuple {
                gamma1,
                gamma2,
                beta_x,
                beta_y,
            });
        }
    }
    for &(p, m) in &[(40usize, 89usize), (40, 179), (80, 179), (120, 179)] {
        out.push(OracleTuple {
            gamma1: p as f64,
            gamma2: p as f64 / m as f64,
            beta_x: 1.5 / (m + 1) as f64,
            beta_y: 1.5,
        });
    }
    out
}

/// Same `(γ₁, γ₂)` sweep with both kurtoses zero.
pub fn gaussian_grid() -> Vec<OracleTuple> {
    default_grid()
        .into_iter()
        .map(|t| OracleTuple {
            beta_x: 0.0,
            beta_y: 0.0,
            ..t
        })
        .collect()
}

pub type MeanForm = fn(&DimensionRatios, f64, f64) -> f64;
pub type VarForm = fn(&DimensionRatios, f64, f64) -> hdlin_core::Result<f64>;

/// Closed forms under test; replaceable so a corrupted form can be checked
/// to fail.
#[derive(Clone, Copy)]
pub struct ClosedForms {
    pub mean: MeanForm,
    pub var: VarForm,
    pub centering: fn(f64) -> hdlin_core::Result<f64>,
}

impl Default for ClosedForms {
    fn default() -> Self {
        Self {
            mean: asymptotic_mean,
            var: asymptotic_var,
            centering: centering_d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCase {
    pub tuple: OracleTuple,
    pub mean_oracle: f64,
    pub mean_closed: f64,
    pub mean_rel_err: f64,
    pub beta_x_term: f64,
    pub var_oracle: f64,
    pub var_closed: f64,
    pub var_rel_err: f64,
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCheck {
    pub p: usize,
    pub denom_dof: usize,
    pub draws: usize,
    pub d: f64,
    pub values: Vec<f64>,
    pub average: f64,
    pub within_band: f64,
    /// Passes when the average of `T²/p` over the draws is within the band.
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub cases: Vec<OracleCase>,
    pub limit: Option<LimitCheck>,
    pub max_rel_err: f64,
    pub max_beta_x_term: f64,
    pub seconds: f64,
    pub passed: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = b.abs().max(1e-12);
    (a - b).abs() / scale
}

fn check_tuple(t: OracleTuple, forms: &ClosedForms, opts: &ContourOptions) -> OracleCase {
    let id = |x: f64| x;
    let mut case = OracleCase {
        tuple: t,
        mean_oracle: f64::NAN,
        mean_closed: f64::NAN,
        mean_rel_err: f64::NAN,
        beta_x_term: f64::NAN,
        var_oracle: f64::NAN,
        var_closed: f64::NAN,
        var_rel_err: f64::NAN,
        error: None,
        passed: false,
    };
    let result = (|| -> hdlin_core::Result<()> {
        let r = DimensionRatios::from_gammas(t.gamma1, t.gamma2)?;
        let m = contour_mean_oracle(&id, &r, t.beta_x, t.beta_y, opts)?;
        case.mean_oracle = m.total;
        case.beta_x_term = m.beta_x_term;
        case.mean_closed = (forms.mean)(&r, t.beta_x, t.beta_y);
        case.mean_rel_err = rel(m.total, case.mean_closed);
        let v = contour_var_oracle(&id, &id, &r, t.beta_x, t.beta_y, opts)?;
        case.var_oracle = v.total;
        case.var_closed = (forms.var)(&r, t.beta_x, t.beta_y)?;
        case.var_rel_err = rel(v.total, case.var_closed);
        Ok(())
    })();
    match result {
        Ok(()) => {
            case.passed = case.mean_rel_err <= REL_TOL
                && case.var_rel_err <= REL_TOL
                && case.beta_x_term.abs() <= BETA_X_TOL;
        }
        Err(e) => case.error = Some(e.to_string()),
    }
    case
}

/// `T²/p` over `draws` Gaussian samples of size `denom_dof + 1` in dimension
/// `p` with identity covariance and the true mean as target.
pub fn limit_check(
    p: usize,
    denom_dof: usize,
    draws: usize,
    seed: u64,
    centering: fn(f64) -> hdlin_core::Result<f64>,
) -> hdlin_core::Result<LimitCheck> {
    let r = ratios(p, denom_dof)?;
    let d = centering(r.gamma2)?;
    let n = denom_dof + 1;
    let root = RandomStream::new(seed);
    let mu0 = DVector::zeros(p);
    let mut values = Vec::with_capacity(draws);
    for i in 0..draws {
        let mut rng = root.substream(i as u64).rng();
        let data = DMatrix::from_fn(n, p, |_, _| Distribution::Normal.draw(&mut rng));
        let pooled = PooledSample::from_rows(data)?;
        let m = sample_moments(&pooled)?;
        values.push(t2_statistic(&m, &mu0, n)? / p as f64);
    }
    let average = values.iter().sum::<f64>() / draws as f64;
    let within = values.iter().filter(|v| (*v - d).abs() <= LIMIT_BAND).count();
    Ok(LimitCheck {
        p,
        denom_dof,
        draws,
        d,
        average,
        within_band: within as f64 / draws as f64,
        passed: (average - d).abs() <= LIMIT_BAND,
        values,
    })
}

pub struct VerifyOptions {
    pub contour: ContourOptions,
    pub forms: ClosedForms,
    /// Run the centering Monte Carlo check (p = 200, 400 dof, 200 draws).
    pub limit: bool,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            contour: ContourOptions::default(),
            forms: ClosedForms::default(),
            limit: true,
            seed: 0x5eed,
        }
    }
}

pub fn verify_oracle(grid: &[OracleTuple], opts: &VerifyOptions) -> OracleReport {
    let start = Instant::now();
    let cases: Vec<OracleCase> = grid.iter().map(|&t| check_tuple(t, &opts.forms, &opts.contour)).collect();
    let limit = opts
        .limit
        .then(|| limit_check(200, 400, 200, opts.seed, opts.forms.centering).ok())
        .flatten();
    let max_rel_err = cases
        .iter()
        .map(|c| c.mean_rel_err.max(c.var_rel_err))
        .fold(0.0, |a: f64, b| if b.is_nan() { f64::INFINITY } else { a.max(b) });
    let max_beta_x_term = cases.iter().map(|c| c.beta_x_term.abs()).fold(0.0, f64::max);
    let passed = !grid.is_empty()
        && cases.iter().all(|c| c.passed)
        && (!opts.limit || limit.as_ref().is_some_and(|l| l.passed));
    OracleReport {
        cases,
        limit,
        max_rel_err,
        max_beta_x_term,
        seconds: start.elapsed().as_secs_f64(),
        passed,
    }
}

pub fn render_report(report: &OracleReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>8} {:>7} {:>7} {:>6} {:>14} {:>10} {:>14} {:>10} {:>10}  status",
        "gamma1", "gamma2", "beta_x", "beta_y", "mean", "mean_rel", "var", "var_rel", "beta_x_mu"
    );
    for c in &report.cases {
        let t = c.tuple;
        let status = match (&c.error, c.passed) {
            (Some(e), _) => format!("ERROR {e}"),
            (None, true) => "ok".to_string(),
            (None, false) => "FAIL".to_string(),
        };
        let _ = writeln!(
            s,
            "{:>8.3} {:>7.4} {:>7.4} {:>6.2} {:>14.8e} {:>10.2e} {:>14.8e} {:>10.2e} {:>10.2e}  {status}",
            t.gamma1, t.gamma2, t.beta_x, t.beta_y, c.mean_oracle, c.mean_rel_err, c.var_oracle, c.var_rel_err, c.beta_x_term
        );
    }
    let _ = writeln!(
        s,
        "max relative error {:.3e} (tolerance {REL_TOL:e}); max |beta_x mean term| {:.3e} (tolerance {BETA_X_TOL:e})",
        report.max_rel_err, report.max_beta_x_term
    );
    if let Some(l) = &report.limit {
        let _ = writeln!(
            s,
            "centering: p = {}, dof = {}, {} draws: mean T^2/p = {:.4} vs d = {:.4} ({}); {:.1}% of draws within +/-{LIMIT_BAND}",
            l.p,
            l.denom_dof,
            l.draws,
            l.average,
            l.d,
            if l.passed { "ok" } else { "FAIL" },
            100.0 * l.within_band
        );
    }
    let _ = writeln!(
        s,
        "{} cases in {:.1}s: {}",
        report.cases.len(),
        report.seconds,
        if report.passed { "PASS" } else { "FAIL" }
    );
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_size() {
        assert!(default_grid().len() >= 20);
        assert!(gaussian_grid().iter().all(|t| t.beta_x == 0.0 && t.beta_y == 0.0));
    }

    #[test]
    fn gaussian_subgrid_passes_without_beta_terms() {
        let opts = VerifyOptions {
            limit: false,
            ..VerifyOptions::default()
        };
        let report = verify_oracle(&gaussian_grid()[..6], &opts);
        assert!(report.passed, "{}", render_report(&report));
        assert!(report.cases.iter().all(|c| c.beta_x_term == 0.0));
    }

    #[test]
    fn corrupted_form_fails() {
        fn off(r: &DimensionRatios, bx: f64, by: f64) -> f64 {
            asymptotic_mean(r, bx, by) * (1.0 + 1e-3)
        }
        let opts = VerifyOptions {
            limit: false,
            forms: ClosedForms {
                mean: off,
                ..ClosedForms::default()
            },
            ..VerifyOptions::default()
        };
        assert!(!verify_oracle(&default_grid()[..3], &opts).passed);
    }
}
