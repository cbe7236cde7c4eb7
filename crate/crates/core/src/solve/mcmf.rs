//! Min-cost-flow labeler for instances too large for the oracle.
//!
//! Each user sends one unit of flow either to a local sink or through a
//! `(server, level)` node, where level `q` stands for the ratio `q / Q`. A
//! level node admits at most `floor(Q / q)` users, which bounds how much of a
//! server a single level can claim. The cross-level budget `sum q <= Q` is not
//! a flow constraint, so it is priced in: every variant adds a per-server
//! price `pi_s * q / Q` to the level arcs and moves the prices along the
//! capacity violation of the previous decode. Each decoded assignment is
//! repaired if needed, its ratios re-solved exactly, and the cheapest is kept.

use std::cmp::Ordering;

use super::flow::MinCostFlow;
use super::{allocate, evaluate_objective, find_feasible_assignment, Assignment, ObjectiveMode, Solution};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::scalar::Scalar;
use crate::solve::CAPACITY_TOL;

pub const DEFAULT_Y_QUANTA: usize = 10;
pub const DEFAULT_WEIGHT_GRID: usize = 8;

/// Integer cost resolution relative to the most expensive arc.
const COST_RESOLUTION: f64 = 1e6;
const FALLBACK_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct McmfOutcome<T> {
    pub solution: Solution<T>,
    /// True when no flow variant yielded a feasible assignment and a greedy
    /// fallback was used.
    pub degraded: bool,
}

struct LevelArc {
    user: usize,
    edge: usize,
    server: usize,
    q: usize,
    base: f64,
}

struct Network {
    levels: Vec<LevelArc>,
    // (user, J^loc) for users allowed to stay local
    locals: Vec<(usize, f64)>,
}

impl Network {
    fn build<T: Scalar>(instance: &ProblemInstance<T>, quanta: usize) -> Self {
        let mut levels = Vec::new();
        let mut locals = Vec::new();
        let qf = quanta as f64;
        for u in 0..instance.num_users() {
            if instance.local_feasible(u) {
                locals.push((u, instance.local_cost(u).as_f64()));
            }
            for &k in instance.user_edges(u) {
                if !instance.offload_feasible(k) {
                    continue;
                }
                let e = &instance.edges()[k];
                let mu = e.feature.mu.as_f64();
                let (j_tr, j_exe) = (e.feature.j_tr.as_f64(), e.feature.j_exe.as_f64());
                for q in 1..=quanta {
                    if (q as f64) / qf + 1e-12 < mu {
                        continue;
                    }
                    levels.push(LevelArc {
                        user: u,
                        edge: k,
                        server: e.server,
                        q,
                        base: j_tr + j_exe * qf / q as f64,
                    });
                }
            }
        }
        Network { levels, locals }
    }

    /// Solves one priced variant. Returns the per-user choice as
    /// `(edge, q)` or `None` for local, or `None` if some user is unrouted.
    fn route(
        &self,
        users: usize,
        servers: usize,
        quanta: usize,
        prices: &[f64],
    ) -> Option<Vec<Option<(usize, usize)>>> {
        let qf = quanta as f64;
        let priced = |l: &LevelArc| l.base + prices[l.server] * l.q as f64 / qf;
        let max_cost = self
            .levels
            .iter()
            .map(priced)
            .chain(self.locals.iter().map(|l| l.1))
            .fold(0.0f64, f64::max);
        let scale = if max_cost > 0.0 {
            COST_RESOLUTION / max_cost
        } else {
            0.0
        };
        let to_int = |c: f64| (c * scale).round() as i64;

        // source, users, level nodes, local node, sink
        let level_node = |s: usize, q: usize| 1 + users + s * quanta + (q - 1);
        let local = 1 + users + servers * quanta;
        let sink = local + 1;
        let mut g = MinCostFlow::new(sink + 1);
        for u in 0..users {
            g.add_arc(0, 1 + u, 1, 0);
        }
        let local_arcs: Vec<(usize, usize)> = self
            .locals
            .iter()
            .map(|&(u, c)| (u, g.add_arc(1 + u, local, 1, to_int(c))))
            .collect();
        g.add_arc(local, sink, users as i64, 0);
        let level_arcs: Vec<usize> = self
            .levels
            .iter()
            .map(|l| g.add_arc(1 + l.user, level_node(l.server, l.q), 1, to_int(priced(l))))
            .collect();
        for s in 0..servers {
            for q in 1..=quanta {
                g.add_arc(level_node(s, q), sink, (quanta / q) as i64, 0);
            }
        }
        let (flow, _) = g.run(0, sink);
        if flow < users as i64 {
            return None;
        }
        let mut choice = vec![None; users];
        for (l, &a) in self.levels.iter().zip(&level_arcs) {
            if g.flow(a) == 1 {
                choice[l.user] = Some((l.edge, l.q));
            }
        }
        debug_assert!(local_arcs.iter().all(|&(u, a)| g.flow(a) == 0 || choice[u].is_none()));
        Some(choice)
    }
}

/// Moves users off servers whose deadline shares overflow, cheapest move first.
fn repair<T: Scalar>(instance: &ProblemInstance<T>, assignment: &mut Assignment) -> bool {
    let servers = instance.num_servers();
    let mu = |k: usize| instance.edges()[k].feature.mu;
    let option_cost = |o: Option<usize>, u: usize| match o {
        None => instance.local_cost(u),
        Some(k) => instance.edges()[k].feature.j_tr + instance.edges()[k].feature.j_exe,
    };
    loop {
        let mut load = vec![T::zero(); servers];
        for &k in assignment.iter().flatten() {
            let s = instance.edges()[k].server;
            load[s] = load[s] + mu(k);
        }
        let limit = T::one() + T::of(CAPACITY_TOL);
        let Some(over) = (0..servers).find(|&s| load[s] > limit) else {
            return true;
        };
        let mut best: Option<(T, usize, Option<usize>)> = None;
        for (u, current) in assignment.iter().enumerate() {
            let Some(k) = *current else { continue };
            if instance.edges()[k].server != over {
                continue;
            }
            let mut alternatives: Vec<Option<usize>> = Vec::new();
            if instance.local_feasible(u) {
                alternatives.push(None);
            }
            for &alt in instance.user_edges(u) {
                let s = instance.edges()[alt].server;
                if s != over && instance.offload_feasible(alt) && load[s] + mu(alt) <= limit {
                    alternatives.push(Some(alt));
                }
            }
            for alt in alternatives {
                let delta = option_cost(alt, u) - option_cost(Some(k), u);
                if best.as_ref().is_none_or(|(d, _, _)| delta < *d) {
                    best = Some((delta, u, alt));
                }
            }
        }
        match best {
            Some((_, u, alt)) => assignment[u] = alt,
            None => return false,
        }
    }
}

/// Per-user cheapest option under a running deadline-share budget, users with
/// the fewest options first.
fn greedy_assignment<T: Scalar>(instance: &ProblemInstance<T>) -> Option<Assignment> {
    let users = instance.num_users();
    let mut order: Vec<usize> = (0..users).collect();
    let count = |u: usize| instance.user_edges(u).len() + usize::from(instance.local_feasible(u));
    order.sort_by_key(|&u| (count(u), u));
    let mut load = vec![T::zero(); instance.num_servers()];
    let mut assignment = vec![None; users];
    for u in order {
        let mut pick: Option<(T, Option<usize>)> = instance.local_feasible(u).then(|| (instance.local_cost(u), None));
        for &k in instance.user_edges(u) {
            let e = &instance.edges()[k];
            if !instance.offload_feasible(k) || load[e.server] + e.feature.mu > T::one() + T::of(CAPACITY_TOL) {
                continue;
            }
            let c = e.feature.j_tr + e.feature.j_exe / (T::one() - load[e.server]).max(e.feature.mu);
            if pick.as_ref().is_none_or(|(b, _)| c < *b) {
                pick = Some((c, Some(k)));
            }
        }
        let (_, choice) = pick?;
        if let Some(k) = choice {
            let e = &instance.edges()[k];
            load[e.server] = load[e.server] + e.feature.mu;
        }
        assignment[u] = choice;
    }
    Some(assignment)
}

pub fn solve_mcmf<T: Scalar>(
    instance: &ProblemInstance<T>,
    y_quanta: usize,
    weight_grid: usize,
) -> Result<McmfOutcome<T>> {
    if y_quanta < 2 {
        return Err(Error::Config(format!("y_quanta must be at least 2, got {y_quanta}")));
    }
    if weight_grid < 1 {
        return Err(Error::Config("weight_grid must be at least 1".into()));
    }
    let users = instance.num_users();
    let servers = instance.num_servers();
    let net = Network::build(instance, y_quanta);

    // price step in units of a typical full-server execution cost
    let exe: Vec<f64> = instance
        .edges()
        .iter()
        .enumerate()
        .filter(|(k, _)| instance.offload_feasible(*k))
        .map(|(_, e)| e.feature.j_exe.as_f64())
        .collect();
    let step = if exe.is_empty() {
        0.0
    } else {
        exe.iter().sum::<f64>() / exe.len() as f64
    };

    let mut prices = vec![0.0f64; servers];
    let mut best: Option<(T, Solution<T>)> = None;
    for t in 0..weight_grid {
        let Some(choice) = net.route(users, servers, y_quanta, &prices) else {
            log::debug!("mcmf: variant {t} left users unrouted");
            break;
        };
        let mut usage = vec![0.0f64; servers];
        for &(k, q) in choice.iter().flatten() {
            usage[instance.edges()[k].server] += q as f64 / y_quanta as f64;
        }
        let mut assignment: Assignment = choice.iter().map(|c| c.map(|(k, _)| k)).collect();
        if repair(instance, &mut assignment) {
            let sol = allocate(instance, &assignment)?;
            let cost = evaluate_objective(instance, &sol, ObjectiveMode::PerUser)?;
            if best
                .as_ref()
                .is_none_or(|(b, _)| cost.partial_cmp(b) == Some(Ordering::Less))
            {
                best = Some((cost, sol));
            }
        }
        let rate = step / (t + 1) as f64;
        for s in 0..servers {
            prices[s] = (prices[s] + rate * (usage[s] - 1.0)).max(0.0);
        }
    }
    if let Some((_, solution)) = best {
        return Ok(McmfOutcome {
            solution,
            degraded: false,
        });
    }

    log::info!("mcmf: flow did not saturate, using greedy fallback");
    let assignment = greedy_assignment(instance)
        .or_else(|| find_feasible_assignment(instance, FALLBACK_BUDGET))
        .ok_or_else(|| Error::Solver("mcmf: no feasible assignment found".into()))?;
    Ok(McmfOutcome {
        solution: allocate(instance, &assignment)?,
        degraded: true,
    })
}
