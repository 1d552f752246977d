//! The corrected test `T_ours = (T² − p·d − μ(f)) / √υ(f)` and its
//! common-covariance and two-sample variants.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{inv_sqrt_spd, symmetrize_from_lower};
use crate::rmt::{ratios, DimensionRatios, LimitParams};
use crate::stats::{
    pool_groups, pooled_within_cov, sample_moments, t2_common_cov, t2_statistic,
    t2_two_sample_equal_cov, GroupSample, LinearHypothesis, PooledSample, SampleMoments, TmScale,
};

/// How the kurtosis pair was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KurtosisMethod {
    WhitenedEmpirical,
    UserSupplied,
    Zero,
}

/// Excess kurtoses `β_y` (pooled vectors) and `β_x` (numerator vector).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KurtosisEstimate {
    pub beta_y: f64,
    pub beta_x: f64,
    pub method: KurtosisMethod,
}

impl KurtosisEstimate {
    pub fn zero() -> Self {
        Self {
            beta_y: 0.0,
            beta_x: 0.0,
            method: KurtosisMethod::Zero,
        }
    }

    pub fn user(beta_x: f64, beta_y: f64) -> Result<Self> {
        for (name, v) in [("beta_x", beta_x), ("beta_y", beta_y)] {
            if !v.is_finite() || v < -2.0 {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        Ok(Self {
            beta_y,
            beta_x,
            method: KurtosisMethod::UserSupplied,
        })
    }
}

/// Where the kurtosis pair comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub enum KurtosisSource {
    #[default]
    Estimate,
    Zero,
    User { beta_x: f64, beta_y: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    /// Reject for large `T_ours`; alternatives inflate `T²`.
    #[default]
    Upper,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOptions {
    pub alpha: f64,
    pub kurtosis: KurtosisSource,
    pub sidedness: Sidedness,
    /// Only read by [`test_common_cov`].
    pub tm_scale: TmScale,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            kurtosis: KurtosisSource::Estimate,
            sidedness: Sidedness::Upper,
            tm_scale: TmScale::Reciprocal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    General,
    BehrensFisher,
    CommonCov,
    TwoSampleEqualCov,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub t2: f64,
    /// `p·d(γ₂)`.
    pub centering: f64,
    pub mu_f: f64,
    pub upsilon_f: f64,
    pub t_ours: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub sidedness: Sidedness,
    pub ratios: DimensionRatios,
    pub kurtosis: KurtosisEstimate,
    pub variant: Variant,
}

/// `1 − Φ(t)`, accurate in the far upper tail.
pub fn normal_upper_tail(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

/// Mean of the per-coordinate excess kurtoses of `residuals · W`, where
/// `residuals` are centered rows and `W` is symmetric.
fn whitened_excess_kurtosis(residuals: &DMatrix<f64>, whitener: &DMatrix<f64>) -> f64 {
    let z = residuals * whitener;
    let n = z.nrows() as f64;
    let p = z.ncols();
    let mut total = 0.0;
    for col in z.column_iter() {
        let m2 = col.iter().map(|v| v * v).sum::<f64>() / n;
        let m4 = col.iter().map(|v| v.powi(4)).sum::<f64>() / n;
        total += m4 / (m2 * m2) - 3.0;
    }
    total / p as f64
}

fn centered(data: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = data.row_mean();
    let mut out = data.clone();
    for mut row in out.row_iter_mut() {
        row -= &mean;
    }
    out
}

/// `β_y` from whitened pooled residuals; `β_x = β_y / n₁`.
///
/// Each `y_k − ȳ` is whitened by `S^{-1/2}`, the excess kurtosis
/// `m₄/m₂² − 3` is taken per coordinate and averaged over coordinates.
pub fn estimate_kurtosis(pooled: &PooledSample, moments: &SampleMoments) -> Result<KurtosisEstimate> {
    let whitener = inv_sqrt_spd(&moments.cov)?;
    let beta_y = whitened_excess_kurtosis(&centered(pooled.vectors()), &whitener);
    Ok(KurtosisEstimate {
        beta_y,
        beta_x: beta_y / pooled.base_size() as f64,
        method: KurtosisMethod::WhitenedEmpirical,
    })
}

/// Kurtosis for the statistics built on the within-group covariance: the
/// residuals of every group are whitened by the pooled `S`. The numerator
/// `Σ βᵢ x̄ᵢ` averages `nᵢ` draws per group, which gives
/// `β_x = β_y · (Σ βᵢ⁴/nᵢ³) / (Σ βᵢ²/nᵢ)²`.
fn estimate_kurtosis_within(
    groups: &[GroupSample],
    coefficients: &[f64],
    cov: &DMatrix<f64>,
) -> Result<KurtosisEstimate> {
    let whitener = inv_sqrt_spd(cov)?;
    let total: usize = groups.iter().map(GroupSample::n).sum();
    let p = cov.nrows();
    let mut residuals = DMatrix::<f64>::zeros(total, p);
    let mut row = 0;
    for g in groups {
        residuals.rows_mut(row, g.n()).copy_from(&centered(g.data()));
        row += g.n();
    }
    let beta_y = whitened_excess_kurtosis(&residuals, &whitener);
    Ok(KurtosisEstimate {
        beta_y,
        beta_x: beta_y * numerator_kurtosis_factor(groups, coefficients),
        method: KurtosisMethod::WhitenedEmpirical,
    })
}

fn numerator_kurtosis_factor(groups: &[GroupSample], coefficients: &[f64]) -> f64 {
    let (mut fourth, mut second) = (0.0, 0.0);
    for (g, &b) in groups.iter().zip(coefficients) {
        let n = g.n() as f64;
        fourth += b.powi(4) / n.powi(3);
        second += b * b / n;
    }
    fourth / (second * second)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: alpha,
        });
    }
    Ok(())
}

fn resolve_kurtosis(
    source: KurtosisSource,
    estimate: impl FnOnce() -> Result<KurtosisEstimate>,
) -> Result<KurtosisEstimate> {
    match source {
        KurtosisSource::Estimate => estimate(),
        KurtosisSource::Zero => Ok(KurtosisEstimate::zero()),
        KurtosisSource::User { beta_x, beta_y } => KurtosisEstimate::user(beta_x, beta_y),
    }
}

fn assemble(
    t2: f64,
    r: DimensionRatios,
    kurtosis: KurtosisEstimate,
    opts: &TestOptions,
    variant: Variant,
) -> Result<TestResult> {
    let limits = LimitParams::compute(&r, kurtosis.beta_x, kurtosis.beta_y)?;
    let centering = r.gamma1 * limits.d;
    let t_ours = (t2 - centering - limits.mu_f) / limits.upsilon_f.sqrt();
    if !t_ours.is_finite() {
        return Err(Error::NonFinite("T_ours"));
    }
    let p_value = match opts.sidedness {
        Sidedness::Upper => normal_upper_tail(t_ours),
        Sidedness::TwoSided => (2.0 * normal_upper_tail(t_ours.abs())).min(1.0),
    };
    Ok(TestResult {
        t2,
        centering,
        mu_f: limits.mu_f,
        upsilon_f: limits.upsilon_f,
        t_ours,
        p_value,
        reject: p_value < opts.alpha,
        alpha: opts.alpha,
        sidedness: opts.sidedness,
        ratios: r,
        kurtosis,
        variant,
    })
}

fn general(
    groups: &[GroupSample],
    hypothesis: &LinearHypothesis,
    opts: &TestOptions,
    variant: Variant,
) -> Result<TestResult> {
    check_alpha(opts.alpha)?;
    let pooled = pool_groups(groups, hypothesis)?;
    let n1 = pooled.base_size();
    let p = pooled.p();
    if p >= n1 {
        return Err(Error::InsufficientDof { p, dof: n1 - 1 });
    }
    let moments = sample_moments(&pooled)?;
    let t2 = t2_statistic(&moments, hypothesis.target(), n1)?;
    let r = ratios(p, moments.dof)?;
    let kurtosis = resolve_kurtosis(opts.kurtosis, || estimate_kurtosis(&pooled, &moments))?;
    assemble(t2, r, kurtosis, opts, variant)
}

/// `H₀: Σ βᵢ μᵢ = μ₀` with arbitrary group covariances, via the pooling
/// transform; `denom_dof = n₁ − 1` with `n₁` the smallest group.
pub fn test_linear_hypothesis(
    groups: &[GroupSample],
    hypothesis: &LinearHypothesis,
    opts: &TestOptions,
) -> Result<TestResult> {
    general(groups, hypothesis, opts, Variant::General)
}

/// `μ₁ = μ₂` with unequal covariances.
pub fn test_behrens_fisher(
    group1: &GroupSample,
    group2: &GroupSample,
    opts: &TestOptions,
) -> Result<TestResult> {
    let hypothesis = LinearHypothesis::two_sample(group1.p());
    general(
        &[group1.clone(), group2.clone()],
        &hypothesis,
        opts,
        Variant::BehrensFisher,
    )
}

/// `H₀: Σ βᵢ μᵢ = μ₀` under a common covariance; `denom_dof = Σnᵢ − q`.
pub fn test_common_cov(
    groups: &[GroupSample],
    hypothesis: &LinearHypothesis,
    opts: &TestOptions,
) -> Result<TestResult> {
    check_alpha(opts.alpha)?;
    let (t2, dof) = t2_common_cov(groups, hypothesis, opts.tm_scale)?;
    let r = ratios(groups[0].p(), dof)?;
    let kurtosis = resolve_kurtosis(opts.kurtosis, || {
        let (cov, _) = pooled_within_cov(groups)?;
        estimate_kurtosis_within(groups, hypothesis.coefficients(), &cov)
    })?;
    assemble(t2, r, kurtosis, opts, Variant::CommonCov)
}

/// `μ₁ = μ₂` under a common covariance; `denom_dof = n₁ + n₂ − 2`.
pub fn test_two_sample_equal_cov(
    group1: &GroupSample,
    group2: &GroupSample,
    opts: &TestOptions,
) -> Result<TestResult> {
    check_alpha(opts.alpha)?;
    let (t2, dof) = t2_two_sample_equal_cov(group1, group2)?;
    let r = ratios(group1.p(), dof)?;
    let groups = [group1.clone(), group2.clone()];
    let kurtosis = resolve_kurtosis(opts.kurtosis, || {
        let (mut cov, _) = pooled_within_cov(&groups)?;
        symmetrize_from_lower(&mut cov);
        estimate_kurtosis_within(&groups, &[1.0, -1.0], &cov)
    })?;
    assemble(t2, r, kurtosis, opts, Variant::TwoSampleEqualCov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Exp1, StandardNormal};

    fn gaussian(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
    }

    fn shifted_gamma(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| {
            let s: f64 = (0..4).map(|_| rng.sample::<f64, _>(Exp1)).sum();
            0.5 * s - 2.0
        })
    }

    fn single_pool(data: DMatrix<f64>) -> (PooledSample, SampleMoments) {
        let pooled = PooledSample::from_rows(data).unwrap();
        let m = sample_moments(&pooled).unwrap();
        (pooled, m)
    }

    #[test]
    fn gaussian_kurtosis_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (pooled, m) = single_pool(gaussian(&mut rng, 5000, 10));
        let k = estimate_kurtosis(&pooled, &m).unwrap();
        assert!(k.beta_y.abs() <= 0.1, "{}", k.beta_y);
        assert_eq!(k.beta_x, k.beta_y / 5000.0);
        assert_eq!(k.method, KurtosisMethod::WhitenedEmpirical);
    }

    #[test]
    fn gamma_kurtosis_near_one_and_a_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (pooled, m) = single_pool(shifted_gamma(&mut rng, 5000, 10));
        let k = estimate_kurtosis(&pooled, &m).unwrap();
        assert!((1.3..=1.7).contains(&k.beta_y), "{}", k.beta_y);
    }

    #[test]
    fn zero_override_ignores_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g: Vec<GroupSample> = (1..=2)
            .map(|i| GroupSample::new(shifted_gamma(&mut rng, 60, 5), i).unwrap())
            .collect();
        let opts = TestOptions {
            kurtosis: KurtosisSource::Zero,
            ..TestOptions::default()
        };
        let r = test_behrens_fisher(&g[0], &g[1], &opts).unwrap();
        assert_eq!(r.kurtosis, KurtosisEstimate::zero());
    }

    #[test]
    fn stored_fields_are_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let g: Vec<GroupSample> = (1..=3)
            .map(|i| GroupSample::new(gaussian(&mut rng, 50 + 5 * i, 8), i).unwrap())
            .collect();
        let hyp = LinearHypothesis::new(vec![1.0, 1.0, 1.0], DVector::zeros(8)).unwrap();
        let r = test_linear_hypothesis(&g, &hyp, &TestOptions::default()).unwrap();
        assert_eq!(r.t_ours, (r.t2 - r.centering - r.mu_f) / r.upsilon_f.sqrt());
        assert_eq!(r.p_value, normal_upper_tail(r.t_ours));
        assert_eq!(r.reject, r.p_value < r.alpha);
        assert_eq!(r.ratios.denom_dof, Some(54));
    }

    #[test]
    fn upper_tail_matches_known_values() {
        // Reference values from 30-digit arithmetic.
        let cases = [
            (1.959963984540054, 0.025000000000000013765),
            (3.0, 0.0013498980316300945267),
            (0.0, 0.5),
            (-3.0, 0.99865010196836990547),
            (8.0, 6.2209605742717841235e-16),
        ];
        for (t, expected) in cases {
            let got = normal_upper_tail(t);
            assert!((got - expected).abs() <= 1e-15, "{t}: {got}");
        }
    }

    #[test]
    fn two_sided_doubles_the_smaller_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let g: Vec<GroupSample> = (1..=2)
            .map(|i| GroupSample::new(gaussian(&mut rng, 40, 4), i).unwrap())
            .collect();
        let one = test_behrens_fisher(&g[0], &g[1], &TestOptions::default()).unwrap();
        let opts = TestOptions {
            sidedness: Sidedness::TwoSided,
            ..TestOptions::default()
        };
        let two = test_behrens_fisher(&g[0], &g[1], &opts).unwrap();
        let expected = 2.0 * one.p_value.min(1.0 - one.p_value);
        assert!((two.p_value - expected).abs() < 1e-14);
    }

    #[test]
    fn identical_groups_do_not_reject() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let data = gaussian(&mut rng, 60, 20);
        let g1 = GroupSample::new(data.clone(), 1).unwrap();
        let g2 = GroupSample::new(data, 2).unwrap();
        let r = test_behrens_fisher(&g1, &g2, &TestOptions::default());
        // Equal sizes make every pooled vector zero, so S is singular.
        assert!(matches!(r, Err(Error::NotPositiveDefinite { .. })));

        // The equal-covariance statistic keeps a full-rank S.
        let r = test_two_sample_equal_cov(&g1, &g2, &TestOptions::default()).unwrap();
        assert_eq!(r.t2, 0.0);
        assert!(r.t_ours < -2.0, "{}", r.t_ours);
        assert!(!r.reject);
    }

    #[test]
    fn target_equal_to_mean_gives_zero_common_cov_statistic() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g: Vec<GroupSample> = (1..=3)
            .map(|i| GroupSample::new(gaussian(&mut rng, 30, 5), i).unwrap())
            .collect();
        let beta = vec![1.0, -0.5, 2.0];
        let mut ybar = DVector::zeros(5);
        for (gi, &b) in g.iter().zip(&beta) {
            ybar += b * gi.mean();
        }
        let hyp = LinearHypothesis::new(beta, ybar).unwrap();
        let r = test_common_cov(&g, &hyp, &TestOptions::default()).unwrap();
        assert!(r.t2.abs() < 1e-20);
        assert_eq!(r.ratios.denom_dof, Some(87));
    }

    #[test]
    fn scalar_case_uses_unit_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let g: Vec<GroupSample> = (1..=2)
            .map(|i| GroupSample::new(gaussian(&mut rng, 30, 1), i).unwrap())
            .collect();
        let opts = TestOptions {
            kurtosis: KurtosisSource::Zero,
            ..TestOptions::default()
        };
        let r = test_behrens_fisher(&g[0], &g[1], &opts).unwrap();
        // Scalar oracle: y_k = x1k − x2k, t² = n ȳ²/s², γ₁ = 1, γ₂ = 1/29.
        let y: Vec<f64> = (0..30).map(|k| g[0].data()[(k, 0)] - g[1].data()[(k, 0)]).collect();
        let mean = y.iter().sum::<f64>() / 30.0;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 29.0;
        let t2 = 30.0 * mean * mean / var;
        let g2: f64 = 1.0 / 29.0;
        let d = 1.0 / (1.0 - g2);
        let mu = g2 / (1.0 - g2).powi(2);
        let ups = 2.0 / (1.0 - g2).powi(4);
        let t = (t2 - d - mu) / ups.sqrt();
        assert!((r.t2 - t2).abs() <= 1e-10 * t2.max(1.0));
        assert!((r.t_ours - t).abs() <= 1e-10);
    }

    #[test]
    fn rejects_bad_alpha_and_wide_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let g: Vec<GroupSample> = (1..=2)
            .map(|i| GroupSample::new(gaussian(&mut rng, 10, 12), i).unwrap())
            .collect();
        let opts = TestOptions {
            alpha: 0.0,
            ..TestOptions::default()
        };
        assert!(test_behrens_fisher(&g[0], &g[1], &opts).is_err());
        assert!(matches!(
            test_behrens_fisher(&g[0], &g[1], &TestOptions::default()),
            Err(Error::InsufficientDof { .. })
        ));
    }

    #[test]
    fn numerator_factor_reduces_to_reciprocal_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let g: Vec<GroupSample> = (1..=2)
            .map(|i| GroupSample::new(gaussian(&mut rng, 50, 2), i).unwrap())
            .collect();
        // Equal sizes and |βᵢ| = 1: (2/n³)/(2/n)² = 1/(2n).
        let f = numerator_kurtosis_factor(&g, &[1.0, -1.0]);
        assert!((f - 1.0 / 100.0).abs() < 1e-15);
    }
}
