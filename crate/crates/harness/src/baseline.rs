//! External comparison tests.
//!
//! A baseline is any executable invoked once per replication as
//!
//! ```text
//! <command> <args...> <alpha> <group1.csv> <group2.csv> [...]
//! ```
//!
//! Each CSV holds one observation per row with no header. The first
//! whitespace-separated token on stdout decides: `1`, `true` or `reject`
//! rejects, `0`, `false` or `accept` does not. A non-zero exit status or any
//! other answer is an error.

use std::process::Command;

use hdlin_core::GroupSample;
use serde::Deserialize;

use crate::error::{HarnessError, Result};
use crate::input::write_matrix;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Baseline {
    pub name: String,
    pub command: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl Baseline {
    pub fn decide(&self, groups: &[GroupSample], alpha: f64) -> Result<bool> {
        let fail = |message: String| HarnessError::Baseline {
            name: self.name.clone(),
            message,
        };
        let dir = tempfile::tempdir().map_err(|e| HarnessError::io("creating temporary directory", e))?;
        let mut paths = Vec::with_capacity(groups.len());
        for (i, g) in groups.iter().enumerate() {
            let path = dir.path().join(format!("group{}.csv", i + 1));
            write_matrix(&path, g.data())?;
            paths.push(path);
        }
        let output = Command::new(&self.command)
            .args(&self.args)
            .arg(format!("{alpha}"))
            .args(&paths)
            .output()
            .map_err(|e| fail(format!("cannot run '{}': {e}", self.command)))?;
        if !output.status.success() {
            return Err(fail(format!(
                "exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        match stdout.split_whitespace().next() {
            Some("1" | "true" | "reject") => Ok(true),
            Some("0" | "false" | "accept") => Ok(false),
            other => Err(fail(format!("unrecognized answer {other:?}"))),
        }
    }
}
