//! Optimal split of one server's capacity among the tasks offloaded to it.
//!
//! Minimizes `sum c_i / y_i` subject to `sum y_i <= 1` and `y_i >= mu_i`. Without
//! the lower bounds the optimum is `y_i ∝ sqrt(c_i)`; bounds are enforced by
//! pinning violators at `mu_i` and re-splitting the remaining mass. Pinning is
//! monotone (unpinned shares only shrink as pins are added), so the loop runs at
//! most `n` times and ends at the KKT point.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solve::CAPACITY_TOL;

/// Returns the optimal ratios for `(j_exe, mu)` loads, in input order.
pub fn inner_allocation<T: Scalar>(loads: &[(T, T)]) -> Result<Vec<T>> {
    let mut mu_sum = T::zero();
    for &(c, mu) in loads {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::domain("j_exe", c.as_f64()));
        }
        if !(mu >= T::zero() && mu <= T::one()) {
            return Err(Error::domain("mu", mu.as_f64()));
        }
        mu_sum = mu_sum + mu;
    }
    if mu_sum > T::one() + T::of(CAPACITY_TOL) {
        return Err(Error::InfeasibleAssignment(format!(
            "minimum shares sum to {mu_sum} > 1"
        )));
    }

    let roots: Vec<T> = loads.iter().map(|&(c, _)| c.sqrt()).collect();
    let mut pinned = vec![false; loads.len()];
    let mut y = vec![T::zero(); loads.len()];
    loop {
        let pinned_mass: T = loads
            .iter()
            .zip(&pinned)
            .filter(|(_, &p)| p)
            .map(|(&(_, mu), _)| mu)
            .sum();
        let free_mass = (T::one() - pinned_mass).max(T::zero());
        let root_sum: T = roots.iter().zip(&pinned).filter(|(_, &p)| !p).map(|(&r, _)| r).sum();
        if root_sum == T::zero() {
            break;
        }
        let mut changed = false;
        for i in 0..loads.len() {
            if pinned[i] {
                continue;
            }
            y[i] = free_mass * roots[i] / root_sum;
            if y[i] < loads[i].1 {
                pinned[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for (i, &p) in pinned.iter().enumerate() {
        if p {
            y[i] = loads[i].1;
        }
    }
    Ok(y)
}

/// Optimal value `sum c_i / y_i` of [`inner_allocation`].
pub fn inner_cost<T: Scalar>(loads: &[(T, T)]) -> Result<T> {
    let y = inner_allocation(loads)?;
    Ok(loads.iter().zip(&y).map(|(&(c, _), &yi)| c / yi).sum())
}
