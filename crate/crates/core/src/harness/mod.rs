//! Dataset generation, solver evaluation and reporting.

mod evaluate;
mod generate;
mod inspect;
pub mod metrics;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use evaluate::{
    run_evaluate, BenchmarkReport, EvaluateConfig, EvaluateSettings, RecordResult, Skip, SolverSummary, TimingStats,
};
pub use generate::{meta_path, run_generate, DatasetMeta, GenerateConfig};
pub use inspect::{inspect, DatasetStats};
pub use metrics::{average_cost_ratio, cost_accuracy_rate, DEFAULT_THRESHOLD};

use crate::error::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Oracle,
    Ao,
    Re,
    Mcmf,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [SolverKind::Oracle, SolverKind::Ao, SolverKind::Re, SolverKind::Mcmf];
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Oracle => "oracle",
            SolverKind::Ao => "ao",
            SolverKind::Re => "re",
            SolverKind::Mcmf => "mcmf",
        })
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver {s:?} (expected oracle, ao, re or mcmf)")))
    }
}

/// Solver knobs shared by generation and evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub enumeration_cap: f64,
    pub max_rounds: usize,
    pub candidates: usize,
    pub y_quanta: usize,
    pub weight_grid: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        use crate::solve::*;
        Self {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            max_rounds: DEFAULT_MAX_ROUNDS,
            candidates: DEFAULT_CANDIDATES,
            y_quanta: DEFAULT_Y_QUANTA,
            weight_grid: DEFAULT_WEIGHT_GRID,
        }
    }
}

/// Runs one solver; the flag reports a degraded MCMF fallback.
pub fn run_solver(
    kind: SolverKind,
    instance: &crate::Instance,
    params: &SolverParams,
    seed: u64,
) -> Result<(crate::Solution, bool)> {
    use crate::solve::*;
    Ok(match kind {
        SolverKind::Oracle => (solve_bruteforce(instance, params.enumeration_cap)?, false),
        SolverKind::Ao => (solve_alternating(instance, params.max_rounds)?, false),
        SolverKind::Re => (solve_random(instance, params.candidates, seed)?, false),
        SolverKind::Mcmf => {
            let out = solve_mcmf(instance, params.y_quanta, params.weight_grid)?;
            (out.solution, out.degraded)
        }
    })
}

/// Writes `bytes` to `path` through a sibling temporary file.
fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = partial_path(path);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn partial_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_names_round_trip() {
        for k in SolverKind::ALL {
            assert_eq!(k.to_string().parse::<SolverKind>().unwrap(), k);
        }
        assert!(matches!("sqp".parse::<SolverKind>(), Err(Error::Config(_))));
    }
}
