use serde::{Deserialize, Serialize};

use super::{EdgeFeature, ProblemInstance};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Slot layout: `[flag, j_loc, j_tr, j_exe, lambda, mu]`.
pub const SLOT_WIDTH: usize = 6;

/// Dataset-level maxima used as the cost features of virtual edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyFeatures<T> {
    pub j_loc: T,
    pub j_tr: T,
    pub j_exe: T,
}

impl<T: Scalar> Default for PenaltyFeatures<T> {
    fn default() -> Self {
        Self {
            j_loc: T::zero(),
            j_tr: T::zero(),
            j_exe: T::zero(),
        }
    }
}

impl<T: Scalar> PenaltyFeatures<T> {
    /// Folds one instance's edge costs into the running maxima.
    pub fn observe(&mut self, instance: &ProblemInstance<T>) {
        for e in instance.edges() {
            self.j_loc = self.j_loc.max(e.feature.j_loc);
            self.j_tr = self.j_tr.max(e.feature.j_tr);
            self.j_exe = self.j_exe.max(e.feature.j_exe);
        }
    }

    pub fn from_instances<'a>(instances: impl IntoIterator<Item = &'a ProblemInstance<T>>) -> Self {
        let mut p = Self::default();
        for inst in instances {
            p.observe(inst);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddedUser<T> {
    /// Node index of the user.
    pub user: usize,
    /// One slot per server, ordered by server index.
    pub slots: Vec<[T; SLOT_WIDTH]>,
}

/// Fixed-width per-user edge slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaddedGraph<T> {
    pub width: usize,
    pub users: Vec<PaddedUser<T>>,
}

pub fn pad_edges<T: Scalar>(instance: &ProblemInstance<T>, penalty: &PenaltyFeatures<T>) -> PaddedGraph<T> {
    let width = instance.num_servers();
    let virtual_slot = [
        T::zero(),
        penalty.j_loc,
        penalty.j_tr,
        penalty.j_exe,
        T::zero(),
        T::zero(),
    ];
    let users = (0..instance.num_users())
        .map(|u| {
            let mut slots = vec![virtual_slot; width];
            for &k in instance.user_edges(u) {
                let e = &instance.edges()[k];
                let f = &e.feature;
                slots[e.server] = [T::one(), f.j_loc, f.j_tr, f.j_exe, f.lambda_value(), f.mu];
            }
            PaddedUser {
                user: instance.user_node(u),
                slots,
            }
        })
        .collect();
    PaddedGraph { width, users }
}

impl<T: Scalar> PaddedGraph<T> {
    /// Real edges as `(user, server, feature)`, ordered by user then server.
    pub fn real_edges(&self) -> Result<Vec<(usize, usize, EdgeFeature<T>)>> {
        let mut out = Vec::new();
        for pu in &self.users {
            if pu.slots.len() != self.width {
                return Err(Error::Structural(format!(
                    "user {} has {} slots, width is {}",
                    pu.user,
                    pu.slots.len(),
                    self.width
                )));
            }
            for (server, slot) in pu.slots.iter().enumerate() {
                if slot[0] == T::one() {
                    out.push((
                        pu.user,
                        server,
                        EdgeFeature {
                            j_loc: slot[1],
                            j_tr: slot[2],
                            j_exe: slot[3],
                            lambda: slot[4] == T::one(),
                            mu: slot[5],
                        },
                    ));
                } else if slot[0] != T::zero() {
                    return Err(Error::Structural(format!("slot flag {} is not binary", slot[0])));
                }
            }
        }
        Ok(out)
    }

    pub fn virtual_slot_count(&self) -> usize {
        self.users
            .iter()
            .flat_map(|u| u.slots.iter())
            .filter(|s| s[0] == T::zero())
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{sample_scenario, Scale, ScenarioConfig};

    #[test]
    fn padding_round_trip_and_penalties() {
        let cfg = ScenarioConfig::<f64>::default();
        let instances: Vec<_> = (0..5)
            .map(|s| sample_scenario(Scale::new(2, 4, 2), &cfg, s).unwrap())
            .collect();
        let penalty = PenaltyFeatures::from_instances(&instances);
        for inst in &instances {
            let padded = pad_edges(inst, &penalty);
            assert_eq!(padded.width, 3);
            assert!(padded.users.iter().all(|u| u.slots.len() == 3));
            assert_eq!(padded.virtual_slot_count(), 3 * inst.num_users() - inst.num_edges());
            for u in &padded.users {
                for s in u.slots.iter().filter(|s| s[0] == 0.0) {
                    assert_eq!(&s[1..], &[penalty.j_loc, penalty.j_tr, penalty.j_exe, 0.0, 0.0]);
                }
            }
            let mut original: Vec<_> = inst.edges().iter().map(|e| (e.user, e.server, e.feature)).collect();
            original.sort_by_key(|t| (t.0, t.1));
            assert_eq!(padded.real_edges().unwrap(), original);
        }
    }

    #[test]
    fn slot_counts() {
        let cfg = ScenarioConfig::<f64>::default();
        let inst = sample_scenario(Scale::new(2, 4, 2), &cfg, 1).unwrap();
        let padded = pad_edges(&inst, &PenaltyFeatures::from_instances([&inst]));
        for (u, pu) in padded.users.iter().enumerate() {
            let real = pu.slots.iter().filter(|s| s[0] == 1.0).count();
            assert_eq!(real, inst.user_edges(u).len());
            // HAP slot is always real
            assert_eq!(pu.slots[0][0], 1.0);
        }

        let mut hap_only = cfg.clone();
        hap_only.coverage_radius = 0.0;
        let inst = sample_scenario(Scale::new(2, 1, 1), &hap_only, 2).unwrap();
        let padded = pad_edges(&inst, &PenaltyFeatures::default());
        assert!(padded
            .users
            .iter()
            .all(|u| u.slots.iter().filter(|s| s[0] == 0.0).count() == 2));

        let mut full = cfg;
        full.coverage_radius = 10_000.0;
        let inst = sample_scenario(Scale::new(2, 4, 2), &full, 2).unwrap();
        assert_eq!(pad_edges(&inst, &PenaltyFeatures::default()).virtual_slot_count(), 0);
    }
}
