use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::find_feasible_assignment;
use super::{evaluate_objective, feasible_options, Assignment, ObjectiveMode, Solution};
use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::scalar::Scalar;
use crate::solve::CAPACITY_TOL;

pub const DEFAULT_CANDIDATES: usize = 8;

const MAX_RETRIES: usize = 1_000;
const FIT_RETRIES: usize = 100;
const FALLBACK_BUDGET: usize = 1_000_000;

/// Random execution: best of `n_candidates` random feasible solutions.
///
/// Each user picks uniformly among its deadline-feasible options; candidates
/// whose deadline shares overload a server are dropped. Shares are drawn from
/// `[mu, 1]` and the part above `mu` is shrunk on overloaded servers. When every
/// round is dropped (large, crowded instances), users instead pick among the
/// options that still fit, and the feasibility search is the last resort.
pub fn solve_random<T: Scalar>(instance: &ProblemInstance<T>, n_candidates: usize, seed: u64) -> Result<Solution<T>> {
    if n_candidates == 0 {
        return Err(Error::Config("n_candidates must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let options: Vec<_> = (0..instance.num_users())
        .map(|u| feasible_options(instance, u))
        .collect();
    if options.iter().any(Vec::is_empty) {
        return Err(Error::Solver(
            "random: some user has no deadline-feasible option".into(),
        ));
    }
    let all_local = (0..instance.num_users()).all(|u| instance.local_feasible(u));

    for (rounds, fit_first) in [(MAX_RETRIES, false), (FIT_RETRIES, true)] {
        for _ in 0..rounds {
            let mut best: Option<(T, Solution<T>)> = None;
            for _ in 0..n_candidates {
                let Some(assignment) = random_assignment(instance, &options, fit_first, &mut rng) else {
                    continue;
                };
                let sol = draw_shares(instance, &assignment, &mut rng);
                let cost = evaluate_objective(instance, &sol, ObjectiveMode::PerUser)?;
                if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    best = Some((cost, sol));
                }
            }
            if let Some((_, sol)) = best {
                return Ok(sol);
            }
            if all_local {
                return Ok(Solution::all_local(instance.num_edges()));
            }
        }
    }
    log::debug!("random: sampling dead-ended, using the feasibility search");
    match find_feasible_assignment(instance, FALLBACK_BUDGET) {
        Some(a) => Ok(draw_shares(instance, &a, &mut rng)),
        None => Err(Error::Solver(format!(
            "random: no feasible candidate in {MAX_RETRIES} rounds of {n_candidates}"
        ))),
    }
}

fn random_assignment<T: Scalar>(
    instance: &ProblemInstance<T>,
    options: &[Vec<Option<usize>>],
    fit_first: bool,
    rng: &mut ChaCha8Rng,
) -> Option<Assignment> {
    let mut order: Vec<usize> = (0..options.len()).collect();
    if fit_first {
        order.shuffle(rng);
    }
    let mut floor = vec![0.0; instance.num_servers()];
    let mut assignment = vec![None; options.len()];
    let mut fitting = Vec::new();
    let fits = |floor: &[f64], o: Option<usize>| match o {
        None => true,
        Some(k) => {
            let e = &instance.edges()[k];
            floor[e.server] + e.feature.mu.as_f64() <= 1.0 + CAPACITY_TOL
        }
    };
    for u in order {
        fitting.clear();
        fitting.extend(options[u].iter().copied().filter(|&o| !fit_first || fits(&floor, o)));
        let pick = *fitting.choose(rng)?;
        if !fits(&floor, pick) {
            return None;
        }
        if let Some(k) = pick {
            let e = &instance.edges()[k];
            floor[e.server] += e.feature.mu.as_f64();
        }
        assignment[u] = pick;
    }
    Some(assignment)
}

fn draw_shares<T: Scalar>(instance: &ProblemInstance<T>, assignment: &Assignment, rng: &mut ChaCha8Rng) -> Solution<T> {
    let mut sol = Solution::all_local(instance.num_edges());
    for &k in assignment.iter().flatten() {
        let mu = instance.edges()[k].feature.mu.as_f64();
        sol.x[k] = 1;
        sol.y[k] = T::of(mu + (1.0 - mu) * rng.random::<f64>());
    }
    let mu = |k: usize| instance.edges()[k].feature.mu;
    for s in 0..instance.num_servers() {
        let chosen: Vec<usize> = instance
            .server_edges(s)
            .iter()
            .copied()
            .filter(|&k| sol.x[k] == 1)
            .collect();
        let total: T = chosen.iter().map(|&k| sol.y[k]).sum();
        if total <= T::one() {
            continue;
        }
        // shrink only the slack above each deadline share
        let floor: T = chosen.iter().map(|&k| mu(k)).sum();
        let slack = total - floor;
        let room = (T::one() - floor).max(T::zero());
        for &k in &chosen {
            sol.y[k] = mu(k) + (sol.y[k] - mu(k)) * room / slack;
        }
    }
    sol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{sample_scenario, Scale, ScenarioConfig};
    use crate::solve::testutil::{feat, handmade};
    use crate::solve::{check_constraints, solve_bruteforce};

    #[test]
    fn deterministic_per_seed() {
        let inst = sample_scenario(Scale::new(2, 4, 2), &ScenarioConfig::<f64>::default(), 3).unwrap();
        let a = solve_random(&inst, 1, 42).unwrap();
        let b = solve_random(&inst, 1, 42).unwrap();
        assert_eq!(a, b);
        let c = solve_random(&inst, 8, 42).unwrap();
        assert_eq!(c, solve_random(&inst, 8, 42).unwrap());
    }

    #[test]
    fn rescaling_keeps_deadline_shares() {
        let inst = handmade(
            0,
            3,
            &[
                (0, 0, feat(1.0, 0.0, 1.0, false, 0.3)),
                (1, 0, feat(1.0, 0.0, 1.0, false, 0.3)),
                (2, 0, feat(1.0, 0.0, 1.0, false, 0.3)),
            ],
        );
        for seed in 0..50 {
            let sol = solve_random(&inst, 1, seed).unwrap();
            assert!(check_constraints(&inst, &sol).unwrap().passed(), "{sol:?}");
            assert!(sol.y.iter().sum::<f64>() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn infeasible_everywhere_is_error() {
        let inst = handmade(
            0,
            2,
            &[
                (0, 0, feat(1.0, 0.0, 1.0, false, 0.7)),
                (1, 0, feat(1.0, 0.0, 1.0, false, 0.7)),
            ],
        );
        assert!(matches!(solve_random(&inst, 2, 0), Err(Error::Solver(_))));
        assert!(matches!(solve_random(&inst, 0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn feasible_and_dominated_on_random() {
        let cfg = ScenarioConfig::<f64>::default();
        for seed in 0..30 {
            let inst = sample_scenario(Scale::new(2, 4, 2), &cfg, seed).unwrap();
            let re = solve_random(&inst, DEFAULT_CANDIDATES, seed).unwrap();
            assert!(check_constraints(&inst, &re).unwrap().passed());
            let r = evaluate_objective(&inst, &re, ObjectiveMode::PerUser).unwrap();
            let o = evaluate_objective(&inst, &solve_bruteforce(&inst, 1e7).unwrap(), ObjectiveMode::PerUser).unwrap();
            assert!(o <= r + 1e-9 * r);
        }
    }
}
