//! TOML experiment files.
//!
//! ```toml
//! seed = 7                 # master seed (default 0)
//! threads = 4              # default: available parallelism
//! out = "results"          # output directory
//! formats = ["csv", "markdown", "svg"]
//! alpha = 0.05             # default for every cell
//! replications = 10000     # default for every cell
//!
//! [[baseline]]             # optional external tests
//! name = "other"
//! command = "python3"
//! args = ["other_test.py"]
//!
//! [[cell]]
//! variant = "three_group_sum"      # three_group_contrast, two_sample
//! distribution = "normal"          # gamma_shifted
//! p = 40
//! sizes = [90, 100, 100]
//! v0 = 0.4
//! epsilon = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]   # or a single number
//! # optional: coefficients, base_means, alpha, replications, seed
//! ```
//!
//! A cell with a list of `ε` values expands into one cell per value.

use std::path::{Path, PathBuf};

use hdlin_core::{Distribution, ScenarioConfig, ScenarioVariant};
use serde::Deserialize;

use crate::baseline::Baseline;
use crate::error::{HarnessError, Result};
use crate::experiment::{default_threads, ExperimentConfig};
use crate::output::Format;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    threads: Option<usize>,
    out: Option<PathBuf>,
    formats: Option<Vec<Format>>,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default = "default_replications")]
    replications: usize,
    #[serde(default, rename = "baseline")]
    baselines: Vec<Baseline>,
    #[serde(default, rename = "cell")]
    cells: Vec<RawCell>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Epsilons {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    variant: ScenarioVariant,
    distribution: Distribution,
    p: usize,
    sizes: Vec<usize>,
    v0: f64,
    epsilon: Epsilons,
    coefficients: Option<Vec<f64>>,
    base_means: Option<Vec<f64>>,
    alpha: Option<f64>,
    replications: Option<usize>,
    seed: Option<u64>,
}

fn default_alpha() -> f64 {
    0.05
}

fn default_replications() -> usize {
    10_000
}

pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    let fail = |message: String| HarnessError::Config {
        path: path.to_path_buf(),
        message,
    };
    let raw: RawConfig = toml::from_str(text).map_err(|e| fail(e.to_string()))?;
    if raw.cells.is_empty() {
        return Err(fail("no [[cell]] entries".into()));
    }
    let mut names: Vec<&str> = vec![crate::cell::PRIMARY_METHOD];
    for b in &raw.baselines {
        if names.contains(&b.name.as_str()) {
            return Err(fail(format!("duplicate method name '{}'", b.name)));
        }
        names.push(&b.name);
    }
    let mut cells = Vec::new();
    for (i, c) in raw.cells.into_iter().enumerate() {
        let epsilons = match c.epsilon {
            Epsilons::One(e) => vec![e],
            Epsilons::Many(v) => v,
        };
        if epsilons.is_empty() {
            return Err(fail(format!("cell {}: empty epsilon list", i + 1)));
        }
        for epsilon in epsilons {
            let cell = ScenarioConfig {
                variant: c.variant,
                distribution: c.distribution,
                p: c.p,
                sizes: c.sizes.clone(),
                coefficients: c.coefficients.clone().unwrap_or_else(|| c.variant.default_coefficients()),
                base_means: c.base_means.clone().unwrap_or_else(|| c.variant.default_base_means()),
                epsilon,
                v0: c.v0,
                replications: c.replications.unwrap_or(raw.replications),
                seed: c.seed.unwrap_or(raw.seed),
                alpha: c.alpha.unwrap_or(raw.alpha),
            };
            cell.validate().map_err(|e| fail(format!("cell {}: {e}", i + 1)))?;
            cells.push(cell);
        }
    }
    Ok(ExperimentConfig {
        cells,
        out: raw.out.unwrap_or_else(|| PathBuf::from("results")),
        formats: raw.formats.unwrap_or_else(|| Format::ALL.to_vec()),
        threads: raw.threads.unwrap_or_else(default_threads),
        baselines: raw.baselines,
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::io(format!("reading {}", path.display()), e))?;
    parse_config(&text, path)
}
