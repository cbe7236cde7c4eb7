use std::cmp::Ordering;

use super::{allocate, evaluate_objective, find_feasible_assignment, inner_cost, Assignment, ObjectiveMode, Solution};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::scalar::Scalar;
use crate::solve::CAPACITY_TOL;

pub const DEFAULT_MAX_ROUNDS: usize = 20;

const FALLBACK_BUDGET: usize = 1_000_000;

/// Two-stage alternating optimization.
///
/// Stage A places users one at a time, largest local cost first. A user's
/// marginal cost for an edge is its transmission cost plus the growth of that
/// server's optimal execution cost when it joins the other users currently
/// placed there; servers only accept users whose deadline shares still fit.
/// The first pass starts from an empty network, later passes revisit every user
/// against the others' current placement. Stage B re-solves the ratios of the
/// fixed assignment with the inner allocation. Rounds stop once the relative
/// improvement drops below `1e-6`.
pub fn solve_alternating<T: Scalar>(instance: &ProblemInstance<T>, max_rounds: usize) -> Result<Solution<T>> {
    let mut order: Vec<usize> = (0..instance.num_users()).collect();
    order.sort_by(|&a, &b| {
        instance
            .local_cost(b)
            .partial_cmp(&instance.local_cost(a))
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut placement = Placement::new(instance);
    let mut assignment = match placement.sweep(&order)? {
        true => placement.assignment.clone(),
        false => {
            log::debug!("alternating: greedy pass blocked, using feasibility search");
            let a = find_feasible_assignment(instance, FALLBACK_BUDGET)
                .ok_or_else(|| Error::Solver("alternating: no feasible assignment found".into()))?;
            placement = Placement::from_assignment(instance, &a)?;
            a
        }
    };
    let mut sol = allocate(instance, &assignment)?;
    let mut cost = evaluate_objective(instance, &sol, ObjectiveMode::PerUser)?;
    for _ in 1..max_rounds.max(1) {
        placement.sweep(&order)?;
        let next = allocate(instance, &placement.assignment)?;
        let next_cost = evaluate_objective(instance, &next, ObjectiveMode::PerUser)?;
        if !(next_cost < cost) {
            break;
        }
        let improvement = (cost - next_cost) / cost;
        assignment = placement.assignment.clone();
        sol = next;
        cost = next_cost;
        if improvement < T::of(1e-6) {
            break;
        }
    }
    debug_assert_eq!(sol.assignment(instance), assignment);
    Ok(sol)
}

/// Current user placement with per-server tenant loads.
struct Placement<'a, T> {
    instance: &'a ProblemInstance<T>,
    assignment: Assignment,
    tenants: Vec<Vec<usize>>,
}

impl<'a, T: Scalar> Placement<'a, T> {
    fn new(instance: &'a ProblemInstance<T>) -> Self {
        Self {
            instance,
            assignment: vec![None; instance.num_users()],
            tenants: vec![Vec::new(); instance.num_servers()],
        }
    }

    fn from_assignment(instance: &'a ProblemInstance<T>, assignment: &[Option<usize>]) -> Result<Self> {
        let mut p = Self::new(instance);
        for (u, &choice) in assignment.iter().enumerate() {
            p.place(u, choice);
        }
        Ok(p)
    }

    fn place(&mut self, u: usize, choice: Option<usize>) {
        if let Some(k) = self.assignment[u] {
            let s = self.instance.edges()[k].server;
            self.tenants[s].retain(|&t| t != k);
        }
        if let Some(k) = choice {
            self.tenants[self.instance.edges()[k].server].push(k);
        }
        self.assignment[u] = choice;
    }

    fn loads(&self, s: usize, extra: Option<usize>) -> Vec<(T, T)> {
        let f = |k: usize| {
            (
                self.instance.edges()[k].feature.j_exe,
                self.instance.edges()[k].feature.mu,
            )
        };
        self.tenants[s].iter().copied().chain(extra).map(f).collect()
    }

    fn server_cost(loads: &[(T, T)]) -> Result<T> {
        if loads.is_empty() {
            Ok(T::zero())
        } else {
            inner_cost(loads)
        }
    }

    /// Marginal cost of `choice` for user `u` against the other users'
    /// placement, `None` if the server cannot take its deadline share.
    fn marginal(&self, u: usize, choice: Option<usize>) -> Result<Option<T>> {
        let inst = self.instance;
        let Some(k) = choice else {
            return Ok(inst.local_feasible(u).then(|| inst.local_cost(u)));
        };
        if !inst.offload_feasible(k) {
            return Ok(None);
        }
        let e = &inst.edges()[k];
        let base = self.loads(e.server, None);
        let mu_sum: T = base.iter().map(|l| l.1).sum();
        if mu_sum + e.feature.mu > T::one() + T::of(CAPACITY_TOL) {
            return Ok(None);
        }
        let grown = Self::server_cost(&self.loads(e.server, Some(k)))?;
        Ok(Some(e.feature.j_tr + grown - Self::server_cost(&base)?))
    }

    /// One stage-A pass. A user moves only for a strict gain over its current
    /// option. Returns false if some user was left without an admissible option.
    fn sweep(&mut self, order: &[usize]) -> Result<bool> {
        let inst = self.instance;
        for &u in order {
            let current = self.assignment[u];
            self.place(u, None);
            let mut best: Option<(T, Option<usize>)> = self.marginal(u, current)?.map(|c| (c, current));
            let options = std::iter::once(None).chain(inst.user_edges(u).iter().copied().map(Some));
            for choice in options {
                if let Some(c) = self.marginal(u, choice)? {
                    if best.as_ref().is_none_or(|(b, _)| c < *b) {
                        best = Some((c, choice));
                    }
                }
            }
            self.place(u, best.map_or(current, |(_, choice)| choice));
        }
        Ok(self.is_complete())
    }

    fn is_complete(&self) -> bool {
        (0..self.instance.num_users()).all(|u| self.assignment[u].is_some() || self.instance.local_feasible(u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{sample_scenario, Scale, ScenarioConfig};
    use crate::solve::testutil::{feat, handmade};
    use crate::solve::{check_constraints, solve_bruteforce};

    #[test]
    fn distinct_servers_found() {
        let inst = handmade(
            1,
            2,
            &[
                (0, 0, feat(50.0, 1.0, 2.0, true, 0.3)),
                (0, 1, feat(50.0, 1.0, 9.0, true, 0.3)),
                (1, 1, feat(40.0, 1.0, 2.0, true, 0.3)),
            ],
        );
        let oracle = solve_bruteforce(&inst, 1e6).unwrap();
        let ao = solve_alternating(&inst, DEFAULT_MAX_ROUNDS).unwrap();
        assert_eq!(ao.x, oracle.x);
        assert_eq!(ao.x, vec![1, 0, 1]);
    }

    #[test]
    fn blocked_greedy_falls_back() {
        // largest-J^loc user grabs the only server both could use
        let inst = handmade(
            1,
            2,
            &[
                (0, 0, feat(90.0, 0.0, 1.0, false, 0.6)),
                (0, 1, feat(90.0, 0.0, 5.0, false, 0.6)),
                (1, 0, feat(10.0, 0.0, 1.0, false, 0.6)),
            ],
        );
        let sol = solve_alternating(&inst, DEFAULT_MAX_ROUNDS).unwrap();
        assert!(check_constraints(&inst, &sol).unwrap().passed());
        assert_eq!(sol.x, vec![0, 1, 1]);
    }

    #[test]
    fn feasible_and_dominated_on_random() {
        let cfg = ScenarioConfig::<f64>::default();
        for seed in 0..30 {
            let inst = sample_scenario(Scale::new(2, 4, 2), &cfg, seed).unwrap();
            let ao = solve_alternating(&inst, DEFAULT_MAX_ROUNDS).unwrap();
            assert!(check_constraints(&inst, &ao).unwrap().passed());
            let a = evaluate_objective(&inst, &ao, ObjectiveMode::PerUser).unwrap();
            let o = evaluate_objective(&inst, &solve_bruteforce(&inst, 1e7).unwrap(), ObjectiveMode::PerUser).unwrap();
            assert!(o <= a + 1e-9 * a);
        }
    }
}
