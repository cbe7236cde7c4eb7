//! Exhaustive search over user-to-server assignments, and a backtracking
//! feasibility search shared by the sampler and the heuristics.

use std::cmp::Ordering;

use super::{allocate, feasible_options, inner_cost, Assignment, Solution};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::scalar::Scalar;
use crate::solve::CAPACITY_TOL;

pub const DEFAULT_ENUMERATION_CAP: f64 = 2e7;

/// Size of the raw assignment space, `prod over users of (degree + 1)`.
pub fn assignment_count<T: Scalar>(instance: &ProblemInstance<T>) -> f64 {
    (0..instance.num_users())
        .map(|u| (instance.user_edges(u).len() + 1) as f64)
        .product()
}

struct Search<'a, T> {
    instance: &'a ProblemInstance<T>,
    options: Vec<Vec<Option<usize>>>,
    loads: Vec<Vec<(T, T)>>,
    mu_sum: Vec<T>,
    current: Assignment,
    best: Option<(T, Assignment)>,
}

impl<T: Scalar> Search<'_, T> {
    fn leaf_cost(&self) -> Result<T> {
        let inst = self.instance;
        let mut cost = T::zero();
        for (u, choice) in self.current.iter().enumerate() {
            cost = cost
                + match choice {
                    None => inst.local_cost(u),
                    Some(k) => inst.edges()[*k].feature.j_tr,
                };
        }
        for loads in self.loads.iter().filter(|l| !l.is_empty()) {
            cost = cost + inner_cost(loads)?;
        }
        Ok(cost)
    }

    fn x_bits(&self, assignment: &[Option<usize>]) -> Vec<u8> {
        let mut x = vec![0u8; self.instance.num_edges()];
        for &k in assignment.iter().flatten() {
            x[k] = 1;
        }
        x
    }

    fn visit(&mut self, u: usize) -> Result<()> {
        if u == self.options.len() {
            let cost = self.leaf_cost()?;
            let better = match &self.best {
                None => true,
                Some((b, bx)) => match cost.partial_cmp(b) {
                    Some(Ordering::Less) => true,
                    Some(Ordering::Equal) => self.x_bits(&self.current) < self.x_bits(bx),
                    _ => false,
                },
            };
            if better {
                self.best = Some((cost, self.current.clone()));
            }
            return Ok(());
        }
        for i in 0..self.options[u].len() {
            let choice = self.options[u][i];
            match choice {
                None => {
                    self.current[u] = None;
                    self.visit(u + 1)?;
                }
                Some(k) => {
                    let e = &self.instance.edges()[k];
                    let s = e.server;
                    let mu = e.feature.mu;
                    if self.mu_sum[s] + mu > T::one() + T::of(CAPACITY_TOL) {
                        continue;
                    }
                    self.mu_sum[s] = self.mu_sum[s] + mu;
                    self.loads[s].push((e.feature.j_exe, mu));
                    self.current[u] = Some(k);
                    self.visit(u + 1)?;
                    self.loads[s].pop();
                    self.mu_sum[s] = self.mu_sum[s] - mu;
                }
            }
        }
        self.current[u] = None;
        Ok(())
    }
}

/// Exact minimizer of the per-user objective. Among equal-cost optima the one
/// with the lexicographically smallest offloading vector is returned.
pub fn solve_bruteforce<T: Scalar>(instance: &ProblemInstance<T>, cap: f64) -> Result<Solution<T>> {
    let evaluations = assignment_count(instance);
    if evaluations > cap {
        return Err(Error::SizeCap { evaluations, cap });
    }
    let users = instance.num_users();
    let mut search = Search {
        instance,
        options: (0..users).map(|u| feasible_options(instance, u)).collect(),
        loads: vec![Vec::new(); instance.num_servers()],
        mu_sum: vec![T::zero(); instance.num_servers()],
        current: vec![None; users],
        best: None,
    };
    search.visit(0)?;
    let (_, assignment) = search
        .best
        .ok_or_else(|| Error::InfeasibleAssignment("no assignment satisfies C3-C5".into()))?;
    allocate(instance, &assignment)
}

/// Any assignment satisfying C3-C5, found by backtracking within `node_budget`
/// search nodes. Users with fewer options are placed first.
pub fn find_feasible_assignment<T: Scalar>(instance: &ProblemInstance<T>, node_budget: usize) -> Option<Assignment> {
    let users = instance.num_users();
    let mut options: Vec<Vec<Option<usize>>> = (0..users).map(|u| feasible_options(instance, u)).collect();
    for opts in &mut options {
        let mu = |o: &Option<usize>| o.map_or(T::zero(), |k| instance.edges()[k].feature.mu);
        opts.sort_by(|a, b| mu(a).partial_cmp(&mu(b)).unwrap_or(Ordering::Equal));
    }
    let mut order: Vec<usize> = (0..users).collect();
    order.sort_by_key(|&u| (options[u].len(), u));
    if order.iter().any(|&u| options[u].is_empty()) {
        return None;
    }

    struct State<'a, T> {
        instance: &'a ProblemInstance<T>,
        options: &'a [Vec<Option<usize>>],
        order: &'a [usize],
        remaining: Vec<T>,
        assignment: Assignment,
        nodes: usize,
        budget: usize,
    }

    fn place<T: Scalar>(st: &mut State<'_, T>, depth: usize) -> Option<bool> {
        if depth == st.order.len() {
            return Some(true);
        }
        st.nodes += 1;
        if st.nodes > st.budget {
            return None;
        }
        let u = st.order[depth];
        for &choice in &st.options[u] {
            match choice {
                None => {
                    st.assignment[u] = None;
                    if place(st, depth + 1)? {
                        return Some(true);
                    }
                }
                Some(k) => {
                    let e = &st.instance.edges()[k];
                    if e.feature.mu > st.remaining[e.server] + T::of(CAPACITY_TOL) {
                        continue;
                    }
                    st.remaining[e.server] = st.remaining[e.server] - e.feature.mu;
                    st.assignment[u] = Some(k);
                    let found = place(st, depth + 1);
                    st.remaining[e.server] = st.remaining[e.server] + e.feature.mu;
                    if found? {
                        return Some(true);
                    }
                }
            }
        }
        st.assignment[u] = None;
        Some(false)
    }

    let mut st = State {
        instance,
        options: &options,
        order: &order,
        remaining: vec![T::one(); instance.num_servers()],
        assignment: vec![None; users],
        nodes: 0,
        budget: node_budget,
    };
    match place(&mut st, 0) {
        Some(true) => Some(st.assignment),
        _ => None,
    }
}
