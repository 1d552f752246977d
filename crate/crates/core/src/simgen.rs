//! Simulation models: structured covariances, Normal and shifted-Gamma
//! innovations, and sparse mean alternatives.
//!
//! Group `i` has covariance `Σᵢ = WᵢΦᵢWᵢ` with `Wᵢ = diag(2i + (p−j+1)/p)`
//! and `φ_jk = (−1)^{j+k} (0.2i)^{|j−k|^{0.1}}`, and observations
//! `x = Γᵢ z + μᵢ` with `Γᵢ` the symmetric square root of `Σᵢ`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigen_range, sym_apply};
use crate::stats::{GroupSample, LinearHypothesis};

/// Relative eigenvalue floor for the positive-definiteness check.
pub const PD_TOLERANCE: f64 = 1e-10;

/// Covariance `Σᵢ` and its symmetric root `Γᵢ` for group `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovSpec {
    pub group_index: usize,
    pub p: usize,
    pub sigma: DMatrix<f64>,
    pub root: DMatrix<f64>,
}

impl CovSpec {
    /// `Σ = Γ = I`, handy for checks that do not need the structured model.
    pub fn identity(group_index: usize, p: usize) -> Self {
        Self {
            group_index,
            p,
            sigma: DMatrix::identity(p, p),
            root: DMatrix::identity(p, p),
        }
    }
}

/// `(−1)^{j+k} (0.2i)^{|j−k|^{0.1}}`, with unit diagonal.
fn phi(i: usize, j: usize, k: usize) -> f64 {
    if j == k {
        return 1.0;
    }
    let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
    let gap = (j as f64 - k as f64).abs();
    sign * (0.2 * i as f64).powf(gap.powf(0.1))
}

pub fn build_covariance(i: usize, p: usize) -> Result<CovSpec> {
    if !(1..=3).contains(&i) {
        return Err(Error::InvalidParameter {
            name: "group index i (must be 1, 2 or 3)",
            value: i as f64,
        });
    }
    if p == 0 {
        return Err(Error::InvalidParameter {
            name: "p",
            value: 0.0,
        });
    }
    let pf = p as f64;
    // 1-based j, k as in the model definition.
    let w: Vec<f64> = (1..=p).map(|j| 2.0 * i as f64 + (pf - j as f64 + 1.0) / pf).collect();
    let sigma = DMatrix::from_fn(p, p, |r, c| w[r] * phi(i, r + 1, c + 1) * w[c]);

    let eig = SymmetricEigen::new(sigma.clone());
    let (lo, hi) = eigen_range(&eig);
    if !(lo > PD_TOLERANCE * hi) {
        return Err(Error::CovarianceNotPd {
            group: i,
            min_eigenvalue: lo,
            max_eigenvalue: hi,
        });
    }
    let root = sym_apply(&eig, f64::sqrt);
    Ok(CovSpec {
        group_index: i,
        p,
        sigma,
        root,
    })
}

/// First `⌊p^{v₀}⌋` coordinates equal `ε√(2 ln p)`, the rest zero.
pub fn alt_mean(epsilon: f64, v0: f64, p: usize) -> DVector<f64> {
    let mut out = DVector::zeros(p);
    if p == 0 {
        return out;
    }
    // The relative nudge keeps exact powers such as 100^{0.5} from truncating down.
    let k = ((p as f64).powf(v0) * (1.0 + 1e-12)).floor() as usize;
    let value = epsilon * (2.0 * (p as f64).ln()).sqrt();
    for j in 0..k.min(p) {
        out[j] = value;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Normal,
    /// `Gamma(shape 4, scale 0.5) − 2`: mean 0, variance 1, excess kurtosis 1.5.
    GammaShifted,
}

impl Distribution {
    pub fn name(self) -> &'static str {
        match self {
            Distribution::Normal => "normal",
            Distribution::GammaShifted => "gamma_shifted",
        }
    }

    /// One standardized innovation. Gamma(4, 0.5) is drawn as half the sum of
    /// four unit exponentials.
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Distribution::Normal => rng.sample(StandardNormal),
            Distribution::GammaShifted => {
                let s: f64 = (0..4).map(|_| rng.sample::<f64, _>(Exp1)).sum();
                0.5 * s - 2.0
            }
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" | "gaussian" => Ok(Distribution::Normal),
            "gamma_shifted" | "gamma" => Ok(Distribution::GammaShifted),
            _ => Err(Error::Unknown {
                kind: "distribution",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioVariant {
    /// `β = (1, 1, 1)`, `μ = (1, 1, −2)`; the shift goes to group 3.
    ThreeGroupSum,
    /// `β = (−½, −½, 1)`, `μ = (1, 3, 2)`; the shift goes to group 3.
    ThreeGroupContrast,
    /// `β = (1, −1)`, `μ = (0, 0)`; the shift goes to group 2.
    TwoSample,
}

impl ScenarioVariant {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioVariant::ThreeGroupSum => "three_group_sum",
            ScenarioVariant::ThreeGroupContrast => "three_group_contrast",
            ScenarioVariant::TwoSample => "two_sample",
        }
    }

    pub fn groups(self) -> usize {
        match self {
            ScenarioVariant::TwoSample => 2,
            _ => 3,
        }
    }

    pub fn default_coefficients(self) -> Vec<f64> {
        match self {
            ScenarioVariant::ThreeGroupSum => vec![1.0, 1.0, 1.0],
            ScenarioVariant::ThreeGroupContrast => vec![-0.5, -0.5, 1.0],
            ScenarioVariant::TwoSample => vec![1.0, -1.0],
        }
    }

    /// Scalar base means, broadcast to every coordinate.
    pub fn default_base_means(self) -> Vec<f64> {
        match self {
            ScenarioVariant::ThreeGroupSum => vec![1.0, 1.0, -2.0],
            ScenarioVariant::ThreeGroupContrast => vec![1.0, 3.0, 2.0],
            ScenarioVariant::TwoSample => vec![0.0, 0.0],
        }
    }

    /// 0-based index of the group that receives `Δμ` under the alternative.
    pub fn shifted_group(self) -> usize {
        self.groups() - 1
    }
}

impl fmt::Display for ScenarioVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "three_group_sum" => Ok(ScenarioVariant::ThreeGroupSum),
            "three_group_contrast" => Ok(ScenarioVariant::ThreeGroupContrast),
            "two_sample" => Ok(ScenarioVariant::TwoSample),
            _ => Err(Error::Unknown {
                kind: "variant",
                name: s.to_string(),
            }),
        }
    }
}

/// One cell of a simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub variant: ScenarioVariant,
    pub distribution: Distribution,
    pub p: usize,
    pub sizes: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub base_means: Vec<f64>,
    pub epsilon: f64,
    pub v0: f64,
    pub replications: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl ScenarioConfig {
    /// A cell with the variant's default coefficients and base means.
    pub fn new(
        variant: ScenarioVariant,
        distribution: Distribution,
        p: usize,
        sizes: Vec<usize>,
        epsilon: f64,
        v0: f64,
    ) -> Self {
        Self {
            variant,
            distribution,
            p,
            sizes,
            coefficients: variant.default_coefficients(),
            base_means: variant.default_base_means(),
            epsilon,
            v0,
            replications: 10_000,
            seed: 0,
            alpha: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let q = self.variant.groups();
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.sizes.len() != q {
            return bad(format!("{} needs {q} sample sizes, got {}", self.variant, self.sizes.len()));
        }
        if self.coefficients.len() != q {
            return bad(format!("{} needs {q} coefficients, got {}", self.variant, self.coefficients.len()));
        }
        if self.base_means.len() != q {
            return bad(format!("{} needs {q} base means, got {}", self.variant, self.base_means.len()));
        }
        if self.variant == ScenarioVariant::TwoSample && self.coefficients != [1.0, -1.0] {
            return bad("two_sample uses coefficients (1, -1)".into());
        }
        let n_min = self.sizes.iter().copied().min().unwrap_or(0);
        if self.p == 0 || self.p >= n_min {
            return bad(format!("need 0 < p < smallest sample size, got p = {}, n = {n_min}", self.p));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.v0 > 0.0 && self.v0 < 1.0) {
            return bad(format!("v0 must lie in (0, 1), got {}", self.v0));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return bad(format!("epsilon must be finite and non-negative, got {}", self.epsilon));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        Ok(())
    }

    /// `H₀: Σ βᵢ μᵢ = 0`.
    pub fn hypothesis(&self) -> Result<LinearHypothesis> {
        LinearHypothesis::new(self.coefficients.clone(), DVector::zeros(self.p))
    }
}

/// Group means for the cell: base means broadcast, with `Δμ` added to the
/// variant's shifted group.
pub fn build_scenario_means(config: &ScenarioConfig) -> Result<Vec<DVector<f64>>> {
    config.validate()?;
    let mut means: Vec<DVector<f64>> = config
        .base_means
        .iter()
        .map(|&m| DVector::from_element(config.p, m))
        .collect();
    let shift = alt_mean(config.epsilon, config.v0, config.p);
    means[config.variant.shifted_group()] += shift;
    Ok(means)
}

/// A deterministic random stream identified by a 64-bit key.
///
/// Child streams are derived by mixing the parent key with an index, so a
/// replication or group always sees the same draws regardless of which
/// thread evaluates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomStream {
    key: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomStream {
    pub fn new(key: u64) -> Self {
        Self { key }
    }

    pub fn key(self) -> u64 {
        self.key
    }

    pub fn substream(self, index: u64) -> Self {
        Self {
            key: splitmix(splitmix(self.key) ^ index),
        }
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key)
    }
}

/// `n` rows `x = Γz + μ`; the innovations fill `z` row by row.
pub fn sample_group(
    spec: &CovSpec,
    mu: &DVector<f64>,
    n: usize,
    dist: Distribution,
    stream: RandomStream,
) -> Result<GroupSample> {
    if mu.len() != spec.p {
        return Err(Error::DimensionMismatch {
            expected: spec.p,
            got: mu.len(),
            context: "group mean",
        });
    }
    let mut rng = stream.rng();
    let mut z = DMatrix::<f64>::zeros(n, spec.p);
    for r in 0..n {
        for c in 0..spec.p {
            z[(r, c)] = dist.draw(&mut rng);
        }
    }
    // Rows of ZΓ are (Γz)' because Γ is symmetric.
    let mut x = z * &spec.root;
    for mut row in x.row_iter_mut() {
        row += mu.transpose();
    }
    GroupSample::new(x, spec.group_index)
}

/// Covariances and means of one cell, built once and sampled per replication.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub covariances: Vec<CovSpec>,
    pub means: Vec<DVector<f64>>,
    pub hypothesis: LinearHypothesis,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        let means = build_scenario_means(&config)?;
        let covariances = (1..=config.variant.groups())
            .map(|i| build_covariance(i, config.p))
            .collect::<Result<Vec<_>>>()?;
        let hypothesis = config.hypothesis()?;
        Ok(Self {
            config,
            covariances,
            means,
            hypothesis,
        })
    }

    /// All groups of one replication; group `g` draws from `stream.substream(g)`.
    pub fn sample(&self, stream: RandomStream) -> Result<Vec<GroupSample>> {
        self.covariances
            .iter()
            .zip(&self.means)
            .zip(&self.config.sizes)
            .enumerate()
            .map(|(g, ((spec, mu), &n))| {
                sample_group(spec, mu, n, self.config.distribution, stream.substream(g as u64))
            })
            .collect()
    }
}
