//! Corrected likelihood-ratio tests for linear hypotheses on the mean
//! vectors of several large-dimensional populations.
//!
//! The classical statistic `T²` is recentered and rescaled with limits from
//! the spectral theory of F-matrices so that the corrected statistic is
//! approximately standard normal when `p` is comparable to the sample size.
//!
//! - [`stats`]: groups, the pooling transform and the `T²` statistics.
//! - [`rmt`]: limiting centering, mean and variance, plus contour-integral oracles.
//! - [`testkit`]: the user-facing tests.
//! - [`simgen`]: simulation models used for size and power studies.

pub mod error;
pub mod linalg;
pub mod rmt;
pub mod simgen;
pub mod stats;
pub mod testkit;

pub use error::{Error, Result};
pub use rmt::{ratios, DimensionRatios, Kappa, LimitParams};
pub use simgen::{Distribution, RandomStream, Scenario, ScenarioConfig, ScenarioVariant};
pub use stats::{GroupSample, LinearHypothesis, TmScale};
pub use testkit::{
    test_behrens_fisher, test_common_cov, test_linear_hypothesis, test_two_sample_equal_cov,
    KurtosisSource, Sidedness, TestOptions, TestResult, Variant,
};
