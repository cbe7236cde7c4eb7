//! The virtual graph: typed nodes, feasible user-to-server edges and their features.
//!
//! Node indices are laid out as `[HAP, GS_1..GS_S, AU_*, GU_*]`, so server
//! indices coincide with node indices `0..=S` and users follow.

mod padding;
mod record;
mod sample;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use padding::{pad_edges, PaddedGraph, PaddedUser, PenaltyFeatures, SLOT_WIDTH};
pub use record::{deserialize_record, serialize_record, DatasetRecord, Labeler, RecordMeta, SCHEMA_VERSION};
pub use sample::{build_virtual_graph, record_seed, sample_scenario, Scenario, ScenarioConfig, TruncatedNormal};

use crate::channel::Position3D;
use crate::cost::{ServerCompute, Task, UserCompute};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum NodeKind {
    Hap = 0,
    GroundServer = 1,
    AerialUser = 2,
    GroundUser = 3,
}

impl NodeKind {
    pub fn is_server(self) -> bool {
        matches!(self, NodeKind::Hap | NodeKind::GroundServer)
    }

    pub fn is_user(self) -> bool {
        !self.is_server()
    }
}

impl From<NodeKind> for u8 {
    fn from(k: NodeKind) -> u8 {
        k as u8
    }
}

impl TryFrom<u8> for NodeKind {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(NodeKind::Hap),
            1 => Ok(NodeKind::GroundServer),
            2 => Ok(NodeKind::AerialUser),
            3 => Ok(NodeKind::GroundUser),
            _ => Err(format!("unknown node type {v}")),
        }
    }
}

/// Scenario scale: number of ground servers, ground users and aerial users.
/// A single HAP is always present on top of the ground servers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Scale {
    pub gs: usize,
    pub gu: usize,
    pub au: usize,
}

impl Scale {
    pub const fn new(gs: usize, gu: usize, au: usize) -> Self {
        Self { gs, gu, au }
    }

    pub fn servers(&self) -> usize {
        self.gs + 1
    }

    pub fn users(&self) -> usize {
        self.gu + self.au
    }

    pub fn nodes(&self) -> usize {
        self.servers() + self.users()
    }

    /// The eight benchmark scales.
    pub const BENCHMARK: [Scale; 8] = [
        Scale::new(2, 4, 2),
        Scale::new(2, 5, 3),
        Scale::new(3, 6, 4),
        Scale::new(3, 7, 5),
        Scale::new(6, 14, 10),
        Scale::new(6, 16, 11),
        Scale::new(9, 19, 12),
        Scale::new(9, 20, 13),
    ];
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gs{}_gu{}_au{}", self.gs, self.gu, self.au)
    }
}

impl FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("scale tag {s:?} is not of the form gsX_guY_auZ"));
        let mut parts = s.split('_');
        let mut field = |prefix: &str| -> Result<usize> {
            parts
                .next()
                .and_then(|p| p.strip_prefix(prefix))
                .and_then(|n| n.parse().ok())
                .ok_or_else(bad)
        };
        let scale = Scale::new(field("gs")?, field("gu")?, field("au")?);
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(scale)
    }
}

impl Serialize for Scale {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scale {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `[theta, D, f, w]` node feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeFeature<T> {
    pub node_type: NodeKind,
    /// Bits; zero for servers.
    pub data_size: T,
    pub compute_freq: T,
    /// Zero for servers.
    pub delay_weight: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node<T> {
    pub feature: NodeFeature<T>,
    pub position: Position3D<T>,
    /// FLOPs; zero for servers.
    pub workload: T,
}

impl<T: Scalar> Node<T> {
    pub fn kind(&self) -> NodeKind {
        self.feature.node_type
    }
}

/// `[j_loc, j_tr, j_exe, lambda, mu]` edge feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFeature<T> {
    pub j_loc: T,
    pub j_tr: T,
    pub j_exe: T,
    pub lambda: bool,
    pub mu: T,
}

impl<T: Scalar> EdgeFeature<T> {
    pub fn lambda_value(&self) -> T {
        if self.lambda {
            T::one()
        } else {
            T::zero()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    /// Node index of the source user.
    pub user: usize,
    /// Node index of the destination server.
    pub server: usize,
    pub feature: EdgeFeature<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<T> {
    scale: Scale,
    nodes: Vec<Node<T>>,
    edges: Vec<Edge<T>>,
    params: ScenarioConfig<T>,
    seed: u64,
    user_edges: Vec<Vec<usize>>,
    server_edges: Vec<Vec<usize>>,
}

impl<T: Scalar> ProblemInstance<T> {
    /// Validates the graph invariants and indexes edges by endpoint.
    pub fn new(
        scale: Scale,
        nodes: Vec<Node<T>>,
        edges: Vec<Edge<T>>,
        params: ScenarioConfig<T>,
        seed: u64,
    ) -> Result<Self> {
        if nodes.len() != scale.nodes() {
            return Err(Error::Invariant(format!(
                "{} nodes for scale {scale} (expected {})",
                nodes.len(),
                scale.nodes()
            )));
        }
        for (i, n) in nodes.iter().enumerate() {
            let expected = layout_kind(&scale, i);
            if n.kind() != expected {
                return Err(Error::Invariant(format!(
                    "node {i} has type {:?}, layout requires {expected:?}",
                    n.kind()
                )));
            }
            if !(n.feature.compute_freq > T::zero()) {
                return Err(Error::Invariant(format!("node {i} has non-positive compute_freq")));
            }
        }
        if edges.is_empty() {
            return Err(Error::Invariant("instance has no edges (K = 0)".into()));
        }
        let servers = scale.servers();
        let mut user_edges = vec![Vec::new(); scale.users()];
        let mut server_edges = vec![Vec::new(); servers];
        for (k, e) in edges.iter().enumerate() {
            if e.server >= servers {
                return Err(Error::Invariant(format!(
                    "edge {k} targets non-server node {}",
                    e.server
                )));
            }
            if e.user < servers || e.user >= nodes.len() {
                return Err(Error::Invariant(format!("edge {k} starts at non-user node {}", e.user)));
            }
            let f = &e.feature;
            if !(f.j_loc >= T::zero() && f.j_tr >= T::zero() && f.j_exe > T::zero()) {
                return Err(Error::Invariant(format!("edge {k} has negative or zero cost features")));
            }
            if !(f.mu >= T::zero() && f.mu <= T::one()) {
                return Err(Error::Invariant(format!("edge {k} has mu outside [0, 1]")));
            }
            let list = &mut user_edges[e.user - servers];
            if list.iter().any(|&j: &usize| edges[j].server == e.server) {
                return Err(Error::Invariant(format!("duplicate edge ({}, {})", e.user, e.server)));
            }
            list.push(k);
            server_edges[e.server].push(k);
        }
        for (u, list) in user_edges.iter().enumerate() {
            let Some(&first) = list.first() else {
                return Err(Error::Invariant(format!("user node {} has no edges", u + servers)));
            };
            let head = &edges[first].feature;
            if list
                .iter()
                .any(|&k| edges[k].feature.j_loc != head.j_loc || edges[k].feature.lambda != head.lambda)
            {
                return Err(Error::Invariant(format!(
                    "user node {} has inconsistent local features across edges",
                    u + servers
                )));
            }
        }
        Ok(Self {
            scale,
            nodes,
            edges,
            params,
            seed,
            user_edges,
            server_edges,
        })
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn params(&self) -> &ScenarioConfig<T> {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of edges `K`.
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_servers(&self) -> usize {
        self.scale.servers()
    }

    pub fn num_users(&self) -> usize {
        self.scale.users()
    }

    /// Node index of the user with ordinal `u`.
    pub fn user_node(&self, u: usize) -> usize {
        self.num_servers() + u
    }

    /// Edge indices leaving user ordinal `u`, in instance order.
    pub fn user_edges(&self, u: usize) -> &[usize] {
        &self.user_edges[u]
    }

    /// Edge indices entering server `s`, in instance order.
    pub fn server_edges(&self, s: usize) -> &[usize] {
        &self.server_edges[s]
    }

    /// User ordinal of edge `k`'s source node.
    pub fn edge_user(&self, k: usize) -> usize {
        self.edges[k].user - self.num_servers()
    }

    /// Local execution cost of user `u` (identical on all of its edges).
    pub fn local_cost(&self, u: usize) -> T {
        self.edges[self.user_edges[u][0]].feature.j_loc
    }

    /// Whether user `u` may execute locally.
    pub fn local_feasible(&self, u: usize) -> bool {
        self.edges[self.user_edges[u][0]].feature.lambda
    }

    /// An edge may carry an offload only if some allocation meets the deadline.
    pub fn offload_feasible(&self, k: usize) -> bool {
        self.edges[k].feature.mu > T::zero()
    }

    pub fn task(&self, user_node: usize) -> Task<T> {
        let n = &self.nodes[user_node];
        Task {
            workload: n.workload,
            data_size: n.feature.data_size,
            deadline: self.params.deadline,
            delay_weight: n.feature.delay_weight,
        }
    }

    pub fn user_compute(&self, user_node: usize) -> UserCompute<T> {
        user_compute(&self.params, &self.nodes[user_node])
    }

    pub fn server_compute(&self, server: usize) -> ServerCompute<T> {
        server_compute(&self.params, self.nodes[server].kind())
    }

    /// Same instance with edges listed in a different order.
    pub fn with_edge_order(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.edges.len() {
            return Err(Error::Structural("edge permutation has wrong length".into()));
        }
        let edges = order.iter().map(|&k| self.edges[k]).collect();
        Self::new(self.scale, self.nodes.clone(), edges, self.params.clone(), self.seed)
    }
}

/// Node kind required at position `i` by the index layout.
pub(crate) fn layout_kind(scale: &Scale, i: usize) -> NodeKind {
    if i == 0 {
        NodeKind::Hap
    } else if i <= scale.gs {
        NodeKind::GroundServer
    } else if i <= scale.gs + scale.au {
        NodeKind::AerialUser
    } else {
        NodeKind::GroundUser
    }
}

pub(crate) fn user_compute<T: Scalar>(params: &ScenarioConfig<T>, node: &Node<T>) -> UserCompute<T> {
    UserCompute {
        local_freq: node.feature.compute_freq,
        chip_energy_factor: params.chip_energy_factor,
        tx_power: match node.kind() {
            NodeKind::AerialUser => params.au_tx_power,
            _ => params.gu_tx_power,
        },
    }
}

pub(crate) fn server_compute<T: Scalar>(params: &ScenarioConfig<T>, kind: NodeKind) -> ServerCompute<T> {
    match kind {
        NodeKind::Hap => ServerCompute {
            total_freq: params.hap_freq,
            active_power: params.hap_active_power,
        },
        _ => ServerCompute {
            total_freq: params.gs_freq,
            active_power: params.gs_active_power,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scale_tags_round_trip() {
        for s in Scale::BENCHMARK {
            assert_eq!(s.to_string().parse::<Scale>().unwrap(), s);
        }
        let s: Scale = "gs2_gu4_au2".parse().unwrap();
        assert_eq!((s.servers(), s.users(), s.nodes()), (3, 6, 9));
        for bad in ["gs2_gu4", "gs2_gu4_au2_x", "gx2_gu4_au2", "gs_gu4_au2", ""] {
            assert!(bad.parse::<Scale>().is_err(), "{bad}");
        }
    }

    #[test]
    fn layout() {
        let s = Scale::new(2, 4, 2);
        let kinds: Vec<_> = (0..s.nodes()).map(|i| layout_kind(&s, i) as u8).collect();
        assert_eq!(kinds, vec![0, 1, 1, 2, 2, 3, 3, 3, 3]);
    }
}
