use std::path::PathBuf;

use hdlin_core::ScenarioConfig;

use crate::baseline::Baseline;
use crate::cell::{cell_label, run_cell, CellOutcome};
use crate::error::{HarnessError, Result};
use crate::output::Format;
use crate::seed::{cell_key, cell_seed};
use crate::summary::SummaryTable;

/// A grid of cells plus where and how to write the results.
///
/// Each cell's `seed` is the user-level seed for that cell (the global seed
/// unless overridden); the stream seed is derived from it and the cell key.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub cells: Vec<ScenarioConfig>,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub threads: usize,
    pub baselines: Vec<Baseline>,
}

impl ExperimentConfig {
    pub fn new(cells: Vec<ScenarioConfig>) -> Self {
        Self {
            cells,
            out: PathBuf::from("results"),
            formats: Format::ALL.to_vec(),
            threads: default_threads(),
            baselines: Vec::new(),
        }
    }
}

pub fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// The cell as run: `seed` replaced by the derived stream seed.
pub fn resolve_cell(cell: &ScenarioConfig) -> ScenarioConfig {
    ScenarioConfig {
        seed: cell_seed(cell.seed, &cell_key(cell)),
        ..cell.clone()
    }
}

/// Evaluates every cell in order on a pool of `config.threads` workers.
pub fn run_outcomes(config: &ExperimentConfig) -> Result<Vec<CellOutcome>> {
    if config.cells.is_empty() {
        return Err(HarnessError::Usage("experiment has no cells".into()));
    }
    if config.threads == 0 {
        return Err(HarnessError::Usage("threads must be at least 1".into()));
    }
    for cell in &config.cells {
        cell.validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| HarnessError::Usage(format!("cannot start thread pool: {e}")))?;
    pool.install(|| {
        let total = config.cells.len();
        config
            .cells
            .iter()
            .enumerate()
            .map(|(i, cell)| {
                log::info!("cell {}/{total}: {}", i + 1, cell_label(cell));
                run_cell(&resolve_cell(cell), &config.baselines, false)
            })
            .collect()
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<SummaryTable> {
    Ok(SummaryTable::from_outcomes(&run_outcomes(config)?))
}
