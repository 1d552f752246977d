//! Multi-group samples, the pooling transform and the classical T² statistics.
//!
//! Observations are stored row-wise: a group with `n` observations in
//! dimension `p` is an `n × p` matrix. For a hypothesis
//! `Σ βᵢ μᵢ = μ₀` over `q` groups, [`pool_groups`] maps the groups onto
//! `n₁` independent vectors `y_k` (with `n₁` the smallest group size) whose
//! mean is `Σ βᵢ μᵢ` and whose covariance is `Σᵢ βᵢ² (n₁/nᵢ) Σᵢ`. The
//! classical statistic is then `T² = n₁ (ȳ − μ₀)' S⁻¹ (ȳ − μ₀)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{symmetrize_from_lower, SpdFactor};

/// One population's observations (`n × p`, one row per observation).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSample {
    data: DMatrix<f64>,
    group_index: usize,
}

impl GroupSample {
    /// `group_index` is 1-based.
    pub fn new(data: DMatrix<f64>, group_index: usize) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::EmptyGroup {
                index: group_index,
                size: data.nrows(),
            });
        }
        if data.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
                context: "group dimension p",
            });
        }
        if group_index == 0 {
            return Err(Error::InvalidParameter {
                name: "group_index",
                value: 0.0,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("group data"));
        }
        Ok(Self { data, group_index })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn group_index(&self) -> usize {
        self.group_index
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    /// Row `k` as a column vector.
    pub fn observation(&self, k: usize) -> DVector<f64> {
        self.data.row(k).transpose()
    }

    pub fn mean(&self) -> DVector<f64> {
        self.data.row_mean().transpose()
    }
}

/// `H₀: Σ βᵢ μᵢ = μ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHypothesis {
    coefficients: Vec<f64>,
    target: DVector<f64>,
}

impl LinearHypothesis {
    pub fn new(coefficients: Vec<f64>, target: DVector<f64>) -> Result<Self> {
        if coefficients.len() < 2 {
            return Err(Error::TooFewGroups(coefficients.len()));
        }
        if coefficients.iter().chain(target.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hypothesis"));
        }
        if coefficients.iter().all(|&b| b == 0.0) {
            return Err(Error::ZeroCoefficients);
        }
        Ok(Self {
            coefficients,
            target,
        })
    }

    /// `μ₁ = μ₂` in dimension `p`.
    pub fn two_sample(p: usize) -> Self {
        Self {
            coefficients: vec![1.0, -1.0],
            target: DVector::zeros(p),
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    pub fn q(&self) -> usize {
        self.coefficients.len()
    }

    /// `Σ βᵢ² / nᵢ`, the variance multiplier of `Σ βᵢ x̄ᵢ`.
    pub fn variance_factor(&self, sizes: &[usize]) -> f64 {
        self.coefficients
            .iter()
            .zip(sizes)
            .map(|(b, &n)| b * b / n as f64)
            .sum()
    }
}

/// The `n₁` pooled vectors `y_k`, stored as rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSample {
    vectors: DMatrix<f64>,
    source_sizes: Vec<usize>,
    permutation: Vec<usize>,
}

impl PooledSample {
    /// Wraps vectors that are already i.i.d. (e.g. a single sample).
    pub fn from_rows(vectors: DMatrix<f64>) -> Result<Self> {
        if vectors.nrows() < 2 {
            return Err(Error::EmptyGroup {
                index: 1,
                size: vectors.nrows(),
            });
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("pooled vectors"));
        }
        let n = vectors.nrows();
        Ok(Self {
            vectors,
            source_sizes: vec![n],
            permutation: vec![0],
        })
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// `n₁`, the number of pooled vectors.
    pub fn base_size(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn p(&self) -> usize {
        self.vectors.ncols()
    }

    /// Group sizes in the caller's original order.
    pub fn source_sizes(&self) -> &[usize] {
        &self.source_sizes
    }

    /// `permutation[j]` is the original position of the group used as the
    /// `j`-th group of the transform (position 0 is the smallest group).
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }
}

/// Sample mean `ȳ` and unbiased covariance `S` (divisor `n₁ − 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub dof: usize,
}

/// Stable ordering of groups by size, smallest first; ties keep input order.
fn size_order(groups: &[GroupSample]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.sort_by_key(|&i| groups[i].n());
    order
}

fn check_groups(groups: &[GroupSample], hypothesis: &LinearHypothesis) -> Result<usize> {
    if groups.len() < 2 {
        return Err(Error::TooFewGroups(groups.len()));
    }
    if hypothesis.q() != groups.len() {
        return Err(Error::DimensionMismatch {
            expected: groups.len(),
            got: hypothesis.q(),
            context: "number of coefficients",
        });
    }
    let p = groups[0].p();
    for g in groups {
        if g.p() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: g.p(),
                context: "group dimension p",
            });
        }
        if g.n() < 2 {
            return Err(Error::EmptyGroup {
                index: g.group_index(),
                size: g.n(),
            });
        }
    }
    if hypothesis.target().len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: hypothesis.target().len(),
            context: "target vector mu0",
        });
    }
    Ok(p)
}

/// Maps `q` groups onto `n₁` i.i.d. vectors with mean `Σ βᵢ μᵢ`.
///
/// With `n₁` the smallest group (groups are reordered, coefficients follow),
///
/// ```text
/// y_k = β₁ x₁ₖ + Σ_{i≥2} βᵢ √(n₁/nᵢ) ( xᵢₖ − (1/n₁) Σ_{l≤n₁} xᵢₗ + (1/√(n₁nᵢ)) Σ_{m≤nᵢ} xᵢₘ )
/// ```
///
/// When all sizes are equal the transform is evaluated as
/// `((β₁x₁ₖ + β₂x₂ₖ) + β₃x₃ₖ) + …`, in input order.
pub fn pool_groups(groups: &[GroupSample], hypothesis: &LinearHypothesis) -> Result<PooledSample> {
    let p = check_groups(groups, hypothesis)?;
    let order = size_order(groups);
    let n1 = groups[order[0]].n();
    let beta = hypothesis.coefficients();
    let source_sizes: Vec<usize> = groups.iter().map(GroupSample::n).collect();

    let mut y = DMatrix::<f64>::zeros(n1, p);
    if groups.iter().all(|g| g.n() == n1) {
        for (g, &b) in groups.iter().zip(beta) {
            y.zip_apply(&g.data().rows(0, n1), |acc, x| *acc += b * x);
        }
    } else {
        let first = order[0];
        let b1 = beta[first];
        y.zip_apply(groups[first].data(), |acc, x| *acc = b1 * x);
        for &gi in &order[1..] {
            let g = &groups[gi];
            let ni = g.n() as f64;
            let n1f = n1 as f64;
            let head_mean = g.data().rows(0, n1).row_mean();
            let full_sum = g.data().row_sum();
            // shift_j = −(1/n₁)Σ_{l≤n₁} x_lj + (1/√(n₁nᵢ))Σ_m x_mj
            let shift: Vec<f64> = (0..p)
                .map(|j| -head_mean[j] + full_sum[j] / (n1f * ni).sqrt())
                .collect();
            let scale = beta[gi] * (n1f / ni).sqrt();
            for j in 0..p {
                for k in 0..n1 {
                    y[(k, j)] += scale * (g.data()[(k, j)] + shift[j]);
                }
            }
        }
    }
    Ok(PooledSample {
        vectors: y,
        source_sizes,
        permutation: order,
    })
}

/// Two-pass mean and covariance of the rows of `data`.
fn two_pass(data: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let mean = data.row_mean().transpose();
    let mut centered = data.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mean[j]);
    }
    let scatter = centered.tr_mul(&centered);
    (mean, scatter)
}

pub fn sample_moments(pooled: &PooledSample) -> Result<SampleMoments> {
    let n1 = pooled.base_size();
    if n1 < 2 {
        return Err(Error::EmptyGroup { index: 1, size: n1 });
    }
    let (mean, mut cov) = two_pass(pooled.vectors());
    cov /= (n1 - 1) as f64;
    symmetrize_from_lower(&mut cov);
    Ok(SampleMoments {
        mean,
        cov,
        dof: n1 - 1,
    })
}

/// `T² = n₁ (ȳ − μ₀)' S⁻¹ (ȳ − μ₀)` via a Cholesky solve.
pub fn t2_statistic(moments: &SampleMoments, mu0: &DVector<f64>, n1: usize) -> Result<f64> {
    let p = moments.mean.len();
    if mu0.len() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: mu0.len(),
            context: "target vector mu0",
        });
    }
    let factor = SpdFactor::new(&moments.cov)?;
    let diff = &moments.mean - mu0;
    Ok(n1 as f64 * factor.quad_form(&diff))
}

/// Scale applied to the quadratic form in the common-covariance statistic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TmScale {
    /// `T_M = (Σ βᵢ²/nᵢ)⁻¹ (ȳ−μ₀)' S⁻¹ (ȳ−μ₀)`. Makes the numerator an
    /// exact `W_p(1, Σ)` under H₀ and matches the two-sample statistic.
    #[default]
    Reciprocal,
    /// `T_M = (Σ βᵢ²/nᵢ) (ȳ−μ₀)' S⁻¹ (ȳ−μ₀)`, the factor as typeset in the
    /// original display.
    AsPrinted,
}

/// Within-group pooled covariance with divisor `Σ nᵢ − q`.
pub fn pooled_within_cov(groups: &[GroupSample]) -> Result<(DMatrix<f64>, usize)> {
    let p = groups.first().map(GroupSample::p).ok_or(Error::TooFewGroups(0))?;
    let total: usize = groups.iter().map(GroupSample::n).sum();
    let dof = total - groups.len();
    let mut scatter = DMatrix::<f64>::zeros(p, p);
    for g in groups {
        if g.p() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: g.p(),
                context: "group dimension p",
            });
        }
        scatter += two_pass(g.data()).1;
    }
    scatter /= dof as f64;
    symmetrize_from_lower(&mut scatter);
    Ok((scatter, dof))
}

/// Common-covariance statistic `T_M`; returns `(statistic, Σnᵢ − q)`.
pub fn t2_common_cov(
    groups: &[GroupSample],
    hypothesis: &LinearHypothesis,
    scale: TmScale,
) -> Result<(f64, usize)> {
    let p = check_groups(groups, hypothesis)?;
    let (cov, dof) = pooled_within_cov(groups)?;
    if dof < p + 1 {
        return Err(Error::InsufficientDof { p, dof });
    }
    let mut ybar = DVector::<f64>::zeros(p);
    for (g, &b) in groups.iter().zip(hypothesis.coefficients()) {
        ybar.axpy(b, &g.mean(), 1.0);
    }
    let diff = ybar - hypothesis.target();
    let quad = SpdFactor::new(&cov)?.quad_form(&diff);
    let sizes: Vec<usize> = groups.iter().map(GroupSample::n).collect();
    let c = hypothesis.variance_factor(&sizes);
    let stat = match scale {
        TmScale::Reciprocal => quad / c,
        TmScale::AsPrinted => quad * c,
    };
    Ok((stat, dof))
}

/// `T_D = n₁n₂/(n₁+n₂) (x̄₁−x̄₂)' S⁻¹ (x̄₁−x̄₂)`; returns `(statistic, n₁+n₂−2)`.
pub fn t2_two_sample_equal_cov(group1: &GroupSample, group2: &GroupSample) -> Result<(f64, usize)> {
    let p = group1.p();
    if group2.p() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: group2.p(),
            context: "group dimension p",
        });
    }
    let groups = [group1.clone(), group2.clone()];
    let (cov, dof) = pooled_within_cov(&groups)?;
    if dof < p + 1 {
        return Err(Error::InsufficientDof { p, dof });
    }
    let diff = group1.mean() - group2.mean();
    let (n1, n2) = (group1.n() as f64, group2.n() as f64);
    let quad = SpdFactor::new(&cov)?.quad_form(&diff);
    Ok((n1 * n2 / (n1 + n2) * quad, dof))
}
