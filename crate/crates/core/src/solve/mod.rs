//! Objective and constraint evaluation, the inner allocation, and the solvers.

mod alloc;
mod alternating;
mod flow;
mod mcmf;
mod oracle;
mod random;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use alloc::{inner_allocation, inner_cost};
pub use alternating::{solve_alternating, DEFAULT_MAX_ROUNDS};
pub use flow::MinCostFlow;
pub use mcmf::{solve_mcmf, McmfOutcome, DEFAULT_WEIGHT_GRID, DEFAULT_Y_QUANTA};
pub use oracle::{assignment_count, find_feasible_assignment, solve_bruteforce, DEFAULT_ENUMERATION_CAP};
pub use random::{solve_random, DEFAULT_CANDIDATES};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::scalar::Scalar;

/// Per-edge offloading bits and allocation ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution<T> {
    pub x: Vec<u8>,
    pub y: Vec<T>,
}

impl<T: Scalar> Solution<T> {
    pub fn all_local(k: usize) -> Self {
        Self {
            x: vec![0; k],
            y: vec![T::zero(); k],
        }
    }

    /// The chosen edge of each user ordinal, `None` for local execution.
    /// Only meaningful for solutions satisfying C3.
    pub fn assignment(&self, instance: &ProblemInstance<T>) -> Assignment {
        (0..instance.num_users())
            .map(|u| instance.user_edges(u).iter().copied().find(|&k| self.x[k] == 1))
            .collect()
    }
}

/// Chosen edge per user ordinal; `None` means local execution.
pub type Assignment = Vec<Option<usize>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum ObjectiveMode {
    /// Each user contributes its local cost once, or the cost of its selected edges.
    #[default]
    #[serde(rename = "per_user")]
    PerUser,
    /// Sum over every edge, exactly as the edge-indexed objective is written.
    #[serde(rename = "literal")]
    LiteralEdgeSum,
}

impl std::str::FromStr for ObjectiveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_user" => Ok(ObjectiveMode::PerUser),
            "literal" | "literal_edge_sum" => Ok(ObjectiveMode::LiteralEdgeSum),
            _ => Err(Error::Config(format!("unknown objective mode {s:?}"))),
        }
    }
}

fn check_lengths<T: Scalar>(instance: &ProblemInstance<T>, sol: &Solution<T>) -> Result<()> {
    let k = instance.num_edges();
    if sol.x.len() != k || sol.y.len() != k {
        return Err(Error::Structural(format!(
            "solution has {} offloading bits and {} ratios for {k} edges",
            sol.x.len(),
            sol.y.len()
        )));
    }
    Ok(())
}

/// Offload term `J^tr + J^exe / y`, with `+inf` when no compute is granted.
fn offload_cost<T: Scalar>(instance: &ProblemInstance<T>, k: usize, y: T) -> T {
    let f = &instance.edges()[k].feature;
    if y > T::zero() {
        f.j_tr + f.j_exe / y
    } else {
        T::infinity()
    }
}

pub fn evaluate_objective<T: Scalar>(
    instance: &ProblemInstance<T>,
    sol: &Solution<T>,
    mode: ObjectiveMode,
) -> Result<T> {
    check_lengths(instance, sol)?;
    let total = match mode {
        ObjectiveMode::LiteralEdgeSum => (0..instance.num_edges())
            .map(|k| {
                if sol.x[k] == 1 {
                    offload_cost(instance, k, sol.y[k])
                } else {
                    instance.edges()[k].feature.j_loc
                }
            })
            .sum(),
        ObjectiveMode::PerUser => (0..instance.num_users())
            .map(|u| {
                let mut selected = instance.user_edges(u).iter().filter(|&&k| sol.x[k] == 1).peekable();
                if selected.peek().is_none() {
                    instance.local_cost(u)
                } else {
                    selected.map(|&k| offload_cost(instance, k, sol.y[k])).sum()
                }
            })
            .sum(),
    };
    Ok(total)
}

/// Result of checking C1-C5. Each field holds the first violating index, if any:
/// edge index for C1/C2, user node index for C3/C5, server index for C4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConstraintReport {
    pub c1: Option<usize>,
    pub c2: Option<usize>,
    pub c3: Option<usize>,
    pub c4: Option<usize>,
    pub c5: Option<usize>,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.violations().all(|(_, v)| v.is_none())
    }

    fn violations(&self) -> impl Iterator<Item = (&'static str, Option<usize>)> {
        [
            ("C1", self.c1),
            ("C2", self.c2),
            ("C3", self.c3),
            ("C4", self.c4),
            ("C5", self.c5),
        ]
        .into_iter()
    }
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return f.write_str("all constraints satisfied");
        }
        let failed: Vec<String> = self
            .violations()
            .filter_map(|(name, v)| v.map(|i| format!("{name} at {i}")))
            .collect();
        write!(f, "violated: {}", failed.join(", "))
    }
}

/// Absolute slack on the per-server capacity sum.
pub const CAPACITY_TOL: f64 = 1e-9;
/// Relative slack on the deadline share `y >= mu`.
pub const SHARE_RTOL: f64 = 1e-9;

pub fn check_constraints<T: Scalar>(instance: &ProblemInstance<T>, sol: &Solution<T>) -> Result<ConstraintReport> {
    check_lengths(instance, sol)?;
    let mut report = ConstraintReport {
        c1: sol.x.iter().position(|&b| b > 1),
        c2: sol.y.iter().position(|&y| !(y >= T::zero() && y <= T::one())),
        ..Default::default()
    };
    let share_floor = |k: usize| instance.edges()[k].feature.mu * (T::one() - T::of(SHARE_RTOL));
    for u in 0..instance.num_users() {
        let edges = instance.user_edges(u);
        let chosen: Vec<usize> = edges.iter().copied().filter(|&k| sol.x[k] == 1).collect();
        let node = instance.user_node(u);
        if chosen.len() > 1 && report.c3.is_none() {
            report.c3 = Some(node);
        }
        let deadline_ok = if chosen.is_empty() {
            instance.local_feasible(u)
        } else {
            chosen
                .iter()
                .all(|&k| instance.offload_feasible(k) && sol.y[k] >= share_floor(k))
        };
        if !deadline_ok && report.c5.is_none() {
            report.c5 = Some(node);
        }
    }
    for s in 0..instance.num_servers() {
        let load: T = instance
            .server_edges(s)
            .iter()
            .filter(|&&k| sol.x[k] == 1)
            .map(|&k| sol.y[k])
            .sum();
        if load > T::one() + T::of(CAPACITY_TOL) {
            report.c4 = Some(s);
            break;
        }
    }
    Ok(report)
}

/// Turns an assignment into a solution with the optimal allocation on every server.
pub fn allocate<T: Scalar>(instance: &ProblemInstance<T>, assignment: &[Option<usize>]) -> Result<Solution<T>> {
    let mut sol = Solution::all_local(instance.num_edges());
    let mut per_server: Vec<Vec<usize>> = vec![Vec::new(); instance.num_servers()];
    for &k in assignment.iter().flatten() {
        sol.x[k] = 1;
        per_server[instance.edges()[k].server].push(k);
    }
    for ks in per_server.iter().filter(|ks| !ks.is_empty()) {
        let loads: Vec<(T, T)> = ks
            .iter()
            .map(|&k| (instance.edges()[k].feature.j_exe, instance.edges()[k].feature.mu))
            .collect();
        for (&k, y) in ks.iter().zip(inner_allocation(&loads)?) {
            sol.y[k] = y;
        }
    }
    Ok(sol)
}

/// Options a user may take without violating C5: `None` (local) and deadline-feasible edges.
pub(crate) fn feasible_options<T: Scalar>(instance: &ProblemInstance<T>, u: usize) -> Vec<Option<usize>> {
    let mut opts = Vec::new();
    if instance.local_feasible(u) {
        opts.push(None);
    }
    opts.extend(
        instance
            .user_edges(u)
            .iter()
            .copied()
            .filter(|&k| instance.offload_feasible(k))
            .map(Some),
    );
    opts
}
