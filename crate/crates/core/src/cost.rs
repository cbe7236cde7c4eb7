//! Weighted delay/energy costs and the per-link deadline parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task<T> {
    /// Total compute demand, FLOPs.
    pub workload: T,
    /// Bits to transmit when offloaded.
    pub data_size: T,
    /// Maximum tolerable delay, seconds.
    pub deadline: T,
    /// Delay weight `w` in `[0, 1]`; energy gets `1 - w`.
    pub delay_weight: T,
}

impl<T: Scalar> Task<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("workload", self.workload),
            ("data_size", self.data_size),
            ("deadline", self.deadline),
        ] {
            if !(v > T::zero()) {
                return Err(Error::domain(name, v.as_f64()));
            }
        }
        if !(self.delay_weight >= T::zero() && self.delay_weight <= T::one()) {
            return Err(Error::domain("delay_weight", self.delay_weight.as_f64()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserCompute<T> {
    /// FLOPs/s.
    pub local_freq: T,
    pub chip_energy_factor: T,
    /// W.
    pub tx_power: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServerCompute<T> {
    /// FLOPs/s.
    pub total_freq: T,
    /// W.
    pub active_power: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostTriple<T> {
    pub delay: T,
    pub energy: T,
    pub weighted: T,
}

impl<T: Scalar> CostTriple<T> {
    fn weigh(delay: T, energy: T, w: T) -> Self {
        Self {
            delay,
            energy,
            weighted: w * delay + (T::one() - w) * energy,
        }
    }
}

pub fn local_cost<T: Scalar>(task: &Task<T>, user: &UserCompute<T>) -> CostTriple<T> {
    let delay = task.workload / user.local_freq;
    let f = user.local_freq;
    let energy = user.chip_energy_factor * f * f * f * delay;
    CostTriple::weigh(delay, energy, task.delay_weight)
}

pub fn transmission_cost<T: Scalar>(task: &Task<T>, rate: T, user: &UserCompute<T>) -> Result<CostTriple<T>> {
    if !(rate > T::zero()) {
        return Err(Error::domain("rate", rate.as_f64()));
    }
    let delay = task.data_size / rate;
    Ok(CostTriple::weigh(delay, user.tx_power * delay, task.delay_weight))
}

/// Cost of running the task with the server's whole frequency.
pub fn execution_cost<T: Scalar>(task: &Task<T>, server: &ServerCompute<T>, w: T) -> CostTriple<T> {
    let delay = task.workload / server.total_freq;
    CostTriple::weigh(delay, server.active_power * delay, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeadlineParams<T> {
    /// `lambda = 1`: local execution meets the deadline.
    pub local_feasible: bool,
    /// `mu`: smallest compute share meeting the deadline when offloaded, 0 if none does.
    pub min_share: T,
}

pub fn deadline_params<T: Scalar>(
    task: &Task<T>,
    user: &UserCompute<T>,
    rate: T,
    server: &ServerCompute<T>,
) -> Result<DeadlineParams<T>> {
    if !(rate > T::zero()) {
        return Err(Error::domain("rate", rate.as_f64()));
    }
    let local_feasible = task.workload / user.local_freq <= task.deadline;
    let t_tr = task.data_size / rate;
    let full_load = task.workload / server.total_freq;
    let min_share = if t_tr + full_load > task.deadline {
        T::zero()
    } else {
        (task.workload / ((task.deadline - t_tr) * server.total_freq)).min(T::one())
    };
    Ok(DeadlineParams {
        local_feasible,
        min_share,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn task(w: f64) -> Task<f64> {
        Task {
            workload: 4.5e9,
            data_size: 8e6,
            deadline: 2.0,
            delay_weight: w,
        }
    }

    fn user() -> UserCompute<f64> {
        UserCompute {
            local_freq: 3e6,
            chip_energy_factor: 1.2e10,
            tx_power: 0.2,
        }
    }

    fn gs() -> ServerCompute<f64> {
        ServerCompute {
            total_freq: 1.2e10,
            active_power: 120.0,
        }
    }

    #[test]
    fn local_examples() {
        let c = local_cost(&task(0.5), &user());
        assert_eq!(c.delay, 1500.0);
        let c1 = local_cost(&task(1.0), &user());
        assert_eq!(c1.weighted, c1.delay);
        let c0 = local_cost(&task(0.0), &user());
        assert_eq!(c0.weighted, c0.energy);
    }

    #[test]
    fn transmission_examples() {
        let mut t = task(0.5);
        t.data_size = 1e6;
        let c = transmission_cost(&t, 1e6, &user()).unwrap();
        assert_eq!(c.delay, 1.0);
        assert!((c.energy - 0.2).abs() < 1e-15);
        let h = transmission_cost(&t, 2e6, &user()).unwrap();
        assert_eq!(h.delay, c.delay / 2.0);
        assert_eq!(h.energy, c.energy / 2.0);

        let c = transmission_cost(&task(0.5), 7.98e7, &user()).unwrap();
        assert!((c.delay - 0.1003).abs() < 1e-4);
        assert!((c.energy - 0.02005).abs() < 1e-5);
        assert!((c.weighted - 0.0602).abs() < 1e-4);
        assert!(transmission_cost(&task(0.5), 0.0, &user()).is_err());
    }

    #[test]
    fn execution_examples() {
        let c = execution_cost(&task(0.3), &gs(), 0.3);
        assert_eq!(c.delay, 0.375);
        assert!((c.weighted - 31.6125).abs() < 1e-12);
        let fast = ServerCompute {
            total_freq: 1e300,
            active_power: 120.0,
        };
        let c = execution_cost(&task(0.3), &fast, 0.3);
        assert!(c.delay < 1e-280 && c.energy < 1e-280 && c.weighted < 1e-280);
    }

    #[test]
    fn deadline_examples() {
        // rate chosen so that transmission takes exactly 0.5 s
        let t = task(0.5);
        let d = deadline_params(&t, &user(), t.data_size / 0.5, &gs()).unwrap();
        assert!(!d.local_feasible);
        assert!((d.min_share - 0.25).abs() < 1e-12);

        // boundary: t_tr + workload / F == tau exactly
        let t = Task {
            workload: 1.5e10,
            data_size: 1.0,
            deadline: 2.0,
            delay_weight: 0.5,
        };
        let d = deadline_params(
            &t,
            &user(),
            1.0,
            &ServerCompute {
                total_freq: 1.5e10,
                active_power: 1.0,
            },
        )
        .unwrap();
        assert_eq!(d.min_share, 1.0);

        let t = task(0.5);
        let d = deadline_params(&t, &user(), t.data_size / 2.5, &gs()).unwrap();
        assert_eq!(d.min_share, 0.0);
    }

    #[test]
    fn local_feasibility_flag() {
        let mut t = task(0.5);
        t.workload = 3e6;
        t.deadline = 1.0;
        assert!(deadline_params(&t, &user(), 1e6, &gs()).unwrap().local_feasible);
        t.deadline = 0.999;
        assert!(!deadline_params(&t, &user(), 1e6, &gs()).unwrap().local_feasible);
    }

    proptest! {
        #[test]
        fn weighted_is_convex_combination(
            w in 0.0f64..=1.0,
            workload in 1e8f64..1e10,
            rate in 1e5f64..1e9,
        ) {
            let t = Task { workload, data_size: 1e7, deadline: 2.0, delay_weight: w };
            for c in [
                local_cost(&t, &user()),
                transmission_cost(&t, rate, &user()).unwrap(),
                execution_cost(&t, &gs(), w),
            ] {
                let lo = c.delay.min(c.energy);
                let hi = c.delay.max(c.energy);
                prop_assert!(c.weighted >= lo * (1.0 - 1e-12) && c.weighted <= hi * (1.0 + 1e-12));
            }
        }

        #[test]
        fn boundary_consistency(workload in 1e8f64..1e10, rate in 1e6f64..1e9, freq in 1e9f64..5e10) {
            let t = Task { workload, data_size: 1e7, deadline: 2.0, delay_weight: 0.5 };
            let server = ServerCompute { total_freq: freq, active_power: 10.0 };
            let d = deadline_params(&t, &user(), rate, &server).unwrap();
            prop_assume!(d.min_share > 0.0);
            let total = t.data_size / rate + workload / (d.min_share * freq);
            prop_assert!((total - t.deadline).abs() <= 1e-9 * t.deadline);
        }

        #[test]
        fn min_share_monotone(workload in 1e8f64..5e9, rate in 1e6f64..1e8, k in 1.01f64..3.0) {
            let t = Task { workload, data_size: 1e7, deadline: 2.0, delay_weight: 0.5 };
            let d = deadline_params(&t, &user(), rate, &gs()).unwrap();
            let faster = deadline_params(&t, &user(), rate * k, &gs()).unwrap();
            prop_assert!(faster.min_share <= d.min_share || d.min_share == 0.0);
            let big = ServerCompute { total_freq: gs().total_freq * k, ..gs() };
            let dbig = deadline_params(&t, &user(), rate, &big).unwrap();
            prop_assert!(dbig.min_share <= d.min_share || d.min_share == 0.0);
            let heavier = Task { workload: workload * k, ..t };
            let dh = deadline_params(&heavier, &user(), rate, &gs()).unwrap();
            prop_assert!(dh.min_share == 0.0 || dh.min_share >= d.min_share);
        }
    }
}
