use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use hdlin_core::testkit::{test_behrens_fisher, test_linear_hypothesis, TestOptions};
use hdlin_core::{RandomStream, Scenario, ScenarioConfig, ScenarioVariant};
use rayon::prelude::*;
use serde::Serialize;

use crate::baseline::Baseline;
use crate::error::{HarnessError, Result};

/// Name of the corrected test in summaries.
pub const PRIMARY_METHOD: &str = "t_ours";

const PROGRESS_INTERVAL: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodRate {
    pub method: String,
    pub rejections: u64,
    pub reps: u64,
    pub rate: f64,
    pub se: f64,
}

impl MethodRate {
    pub fn new(method: &str, rejections: u64, reps: u64) -> Self {
        let rate = rejections as f64 / reps as f64;
        Self {
            method: method.to_string(),
            rejections,
            reps,
            rate,
            se: monte_carlo_se(rate, reps),
        }
    }
}

/// `√(r(1−r)/R)`.
pub fn monte_carlo_se(rate: f64, reps: u64) -> f64 {
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub config: ScenarioConfig,
    /// The corrected test first, then baselines in configuration order.
    pub methods: Vec<MethodRate>,
    /// Decisions per replication, in the same method order, when requested.
    pub per_replication: Option<Vec<Vec<bool>>>,
}

impl CellOutcome {
    pub fn primary(&self) -> &MethodRate {
        &self.methods[0]
    }
}

pub fn cell_label(cell: &ScenarioConfig) -> String {
    let sizes: Vec<String> = cell.sizes.iter().map(|n| n.to_string()).collect();
    format!(
        "{}/{}/p={}/n=({})/v0={}/eps={}",
        cell.variant,
        cell.distribution,
        cell.p,
        sizes.join(","),
        cell.v0,
        cell.epsilon
    )
}

struct Progress {
    label: String,
    total: u64,
    done: AtomicU64,
    last: Mutex<Instant>,
}

impl Progress {
    fn tick(&self) {
        let done = self.done.fetch_add(1, Ordering::Relaxed) + 1;
        if let Ok(mut last) = self.last.try_lock() {
            if last.elapsed() >= PROGRESS_INTERVAL {
                *last = Instant::now();
                log::info!("{}: {done}/{} replications", self.label, self.total);
            }
        }
    }
}

/// Data and decisions for one replication, keyed by the replication stream.
pub fn run_replication(
    scenario: &Scenario,
    baselines: &[Baseline],
    stream: RandomStream,
) -> Result<Vec<bool>> {
    let groups = scenario.sample(stream)?;
    let opts = TestOptions {
        alpha: scenario.config.alpha,
        ..TestOptions::default()
    };
    let primary = match scenario.config.variant {
        ScenarioVariant::TwoSample => test_behrens_fisher(&groups[0], &groups[1], &opts)?,
        _ => test_linear_hypothesis(&groups, &scenario.hypothesis, &opts)?,
    };
    let mut decisions = Vec::with_capacity(1 + baselines.len());
    decisions.push(primary.reject);
    for b in baselines {
        decisions.push(b.decide(&groups, scenario.config.alpha)?);
    }
    Ok(decisions)
}

/// Runs every replication of a cell on the current rayon pool.
///
/// `cell.seed` is the cell seed; replication `r` uses the stream
/// `RandomStream::new(cell.seed).substream(r)`, so the outcome does not
/// depend on the number of threads.
pub fn run_cell(cell: &ScenarioConfig, baselines: &[Baseline], keep_replications: bool) -> Result<CellOutcome> {
    let label = cell_label(cell);
    let scenario = Scenario::new(cell.clone())?;
    let root = RandomStream::new(cell.seed);
    let reps = cell.replications as u64;
    let progress = Progress {
        label: label.clone(),
        total: reps,
        done: AtomicU64::new(0),
        last: Mutex::new(Instant::now()),
    };
    let outcomes: Vec<Result<Vec<bool>>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let out = run_replication(&scenario, baselines, root.substream(r));
            progress.tick();
            out
        })
        .collect();

    let mut decisions = Vec::with_capacity(outcomes.len());
    for (r, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(d) => decisions.push(d),
            Err(source) => {
                return Err(HarnessError::Replication {
                    cell: label,
                    replication: r as u64,
                    seed: root.substream(r as u64).key(),
                    source: Box::new(source),
                })
            }
        }
    }
    let names = std::iter::once(PRIMARY_METHOD).chain(baselines.iter().map(|b| b.name.as_str()));
    let methods = names
        .enumerate()
        .map(|(m, name)| {
            let rejections = decisions.iter().filter(|d| d[m]).count() as u64;
            MethodRate::new(name, rejections, reps)
        })
        .collect();
    log::debug!("{label}: done");
    Ok(CellOutcome {
        config: cell.clone(),
        methods,
        per_replication: keep_replications.then_some(decisions),
    })
}
