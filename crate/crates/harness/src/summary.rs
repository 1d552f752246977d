use serde::Serialize;

use crate::cell::CellOutcome;

/// One (cell, method) line of a summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub variant: String,
    pub distribution: String,
    pub p: usize,
    pub sizes: Vec<usize>,
    pub v0: f64,
    pub epsilon: f64,
    pub method: String,
    pub rejections: u64,
    pub reps: u64,
    pub rate: f64,
    pub se: f64,
}

impl SummaryRow {
    /// Rows sharing a block differ only in `ε` and method.
    pub fn block_key(&self) -> (String, String, usize, Vec<usize>, u64) {
        (
            self.variant.clone(),
            self.distribution.clone(),
            self.p,
            self.sizes.clone(),
            self.v0.to_bits(),
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn from_outcomes(outcomes: &[CellOutcome]) -> Self {
        let rows = outcomes
            .iter()
            .flat_map(|o| {
                o.methods.iter().map(move |m| SummaryRow {
                    variant: o.config.variant.to_string(),
                    distribution: o.config.distribution.to_string(),
                    p: o.config.p,
                    sizes: o.config.sizes.clone(),
                    v0: o.config.v0,
                    epsilon: o.config.epsilon,
                    method: m.method.clone(),
                    rejections: m.rejections,
                    reps: m.reps,
                    rate: m.rate,
                    se: m.se,
                })
            })
            .collect();
        Self { rows }
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows grouped by block, in first-appearance order.
    pub fn blocks(&self) -> Vec<Vec<&SummaryRow>> {
        let mut keys = Vec::new();
        let mut blocks: Vec<Vec<&SummaryRow>> = Vec::new();
        for row in &self.rows {
            let key = row.block_key();
            match keys.iter().position(|k| *k == key) {
                Some(i) => blocks[i].push(row),
                None => {
                    keys.push(key);
                    blocks.push(vec![row]);
                }
            }
        }
        blocks
    }
}
