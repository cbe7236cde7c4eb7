use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    layout_kind, server_compute, user_compute, Edge, EdgeFeature, Node, NodeFeature, NodeKind, ProblemInstance, Scale,
};
use crate::channel::{link_gain, link_rate, ChannelParams, LinkKind, Position3D};
use crate::cost::{deadline_params, execution_cost, local_cost, transmission_cost};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solve::find_feasible_assignment;

/// Normal distribution restricted to `[lo, hi]`, sampled by rejection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedNormal<T> {
    pub mean: T,
    pub std: T,
    pub lo: T,
    pub hi: T,
}

const MAX_REJECTIONS: usize = 1_000_000;

impl<T: Scalar> TruncatedNormal<T> {
    pub fn new(mean: T, std: T, lo: T, hi: T) -> Self {
        Self { mean, std, lo, hi }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.std > T::zero()) {
            return Err(Error::Config(format!(
                "truncated normal std {} must be positive",
                self.std
            )));
        }
        if !(self.lo < self.hi) {
            return Err(Error::Config(format!(
                "truncated normal window [{}, {}] is empty",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<T> {
        let normal = Normal::new(self.mean.as_f64(), self.std.as_f64()).map_err(|e| Error::Config(e.to_string()))?;
        let (lo, hi) = (self.lo.as_f64(), self.hi.as_f64());
        for _ in 0..MAX_REJECTIONS {
            let v = normal.sample(rng);
            if (lo..=hi).contains(&v) {
                return Ok(T::of(v));
            }
        }
        Err(Error::Config(format!(
            "truncated normal window [{lo}, {hi}] too far in the tail to sample"
        )))
    }
}

/// Everything needed to draw and evaluate an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig<T> {
    pub channel: ChannelParams<T>,
    /// Side of the square deployment area, m.
    pub area_side: T,
    pub hap_altitude: T,
    pub au_altitude: T,
    /// Horizontal coverage radius of each ground server, m. The HAP covers every user.
    pub coverage_radius: T,
    /// Task workload, FLOPs.
    pub workload: TruncatedNormal<T>,
    /// User device frequency, FLOPs/s.
    pub local_freq: TruncatedNormal<T>,
    pub delay_weight_range: (T, T),
    /// Compute density used to derive the transmitted bits from the workload.
    pub flops_per_bit: T,
    pub deadline: T,
    pub chip_energy_factor: T,
    pub gs_freq: T,
    pub hap_freq: T,
    pub gu_tx_power: T,
    pub au_tx_power: T,
    pub gs_active_power: T,
    pub hap_active_power: T,
    /// Whole-instance resampling budget until a feasible assignment exists.
    pub max_attempts: usize,
    /// Node budget of the backtracking feasibility search.
    pub feasibility_budget: usize,
}

impl<T: Scalar> Default for ScenarioConfig<T> {
    fn default() -> Self {
        Self {
            channel: ChannelParams::default(),
            area_side: T::of(1_000.0),
            hap_altitude: T::of(20_000.0),
            au_altitude: T::of(200.0),
            coverage_radius: T::of(500.0),
            workload: TruncatedNormal::new(T::of(4.5e9), T::of(2.5e9), T::of(1.2e9), T::of(7e9)),
            local_freq: TruncatedNormal::new(T::of(3e6), T::of(1.1e7), T::of(2e6), T::of(6.5e6)),
            delay_weight_range: (T::of(0.3), T::of(0.7)),
            flops_per_bit: T::of(500.0),
            deadline: T::of(2.0),
            chip_energy_factor: T::of(1.2e10),
            gs_freq: T::of(1.2e10),
            hap_freq: T::of(0.5e10),
            gu_tx_power: T::of(0.2),
            au_tx_power: T::of(0.15),
            gs_active_power: T::of(120.0),
            hap_active_power: T::of(30.0),
            max_attempts: 100,
            feasibility_budget: 1_000_000,
        }
    }
}

impl<T: Scalar> ScenarioConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.workload.validate()?;
        self.local_freq.validate()?;
        let positive = [
            ("area_side", self.area_side),
            ("hap_altitude", self.hap_altitude),
            ("flops_per_bit", self.flops_per_bit),
            ("deadline", self.deadline),
            ("chip_energy_factor", self.chip_energy_factor),
            ("gs_freq", self.gs_freq),
            ("hap_freq", self.hap_freq),
            ("gu_tx_power", self.gu_tx_power),
            ("au_tx_power", self.au_tx_power),
            ("gs_active_power", self.gs_active_power),
            ("hap_active_power", self.hap_active_power),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) {
                return Err(Error::Config(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.au_altitude >= T::zero() && self.coverage_radius >= T::zero()) {
            return Err(Error::Config(
                "au_altitude and coverage_radius must be non-negative".into(),
            ));
        }
        if !(self.local_freq.lo > T::zero() && self.workload.lo > T::zero()) {
            return Err(Error::Config("workload and local_freq windows must be positive".into()));
        }
        let (lo, hi) = self.delay_weight_range;
        if !(T::zero() <= lo && lo <= hi && hi <= T::one()) {
            return Err(Error::Config(format!(
                "delay weight range [{lo}, {hi}] not within [0, 1]"
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::Config("max_attempts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Raw geometry and task draws before the graph is built.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub scale: Scale,
    pub nodes: Vec<Node<T>>,
    pub params: ScenarioConfig<T>,
    pub seed: u64,
}

/// Per-record seed: a pure function of the master seed and the record index.
pub fn record_seed(master_seed: u64, index: u64) -> u64 {
    mix64(master_seed ^ mix64(index.wrapping_add(0x6a09_e667_f3bc_c909)))
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn draw_scenario<T: Scalar, R: Rng + ?Sized>(
    scale: Scale,
    params: &ScenarioConfig<T>,
    seed: u64,
    rng: &mut R,
) -> Result<Scenario<T>> {
    let side = params.area_side.as_f64();
    let ground = |rng: &mut R, z: T| {
        Position3D::new(
            T::of(rng.random_range(0.0..=side)),
            T::of(rng.random_range(0.0..=side)),
            z,
        )
    };
    let (w_lo, w_hi) = (
        params.delay_weight_range.0.as_f64(),
        params.delay_weight_range.1.as_f64(),
    );
    let mut nodes = Vec::with_capacity(scale.nodes());
    for i in 0..scale.nodes() {
        let kind = layout_kind(&scale, i);
        let node = match kind {
            NodeKind::Hap => server_node(
                params,
                kind,
                Position3D::new(
                    params.area_side / T::of(2.0),
                    params.area_side / T::of(2.0),
                    params.hap_altitude,
                ),
            ),
            NodeKind::GroundServer => server_node(params, kind, ground(rng, T::zero())),
            NodeKind::AerialUser | NodeKind::GroundUser => {
                let z = if kind == NodeKind::AerialUser {
                    params.au_altitude
                } else {
                    T::zero()
                };
                let position = ground(rng, z);
                let workload = params.workload.sample(rng)?;
                let compute_freq = params.local_freq.sample(rng)?;
                let delay_weight = T::of(rng.random_range(w_lo..=w_hi));
                Node {
                    feature: NodeFeature {
                        node_type: kind,
                        data_size: workload / params.flops_per_bit,
                        compute_freq,
                        delay_weight,
                    },
                    position,
                    workload,
                }
            }
        };
        nodes.push(node);
    }
    Ok(Scenario {
        scale,
        nodes,
        params: params.clone(),
        seed,
    })
}

fn server_node<T: Scalar>(params: &ScenarioConfig<T>, kind: NodeKind, position: Position3D<T>) -> Node<T> {
    Node {
        feature: NodeFeature {
            node_type: kind,
            data_size: T::zero(),
            compute_freq: server_compute(params, kind).total_freq,
            delay_weight: T::zero(),
        },
        position,
        workload: T::zero(),
    }
}

/// Connects every user to the HAP and to every ground server covering it, and
/// computes the edge features.
pub fn build_virtual_graph<T: Scalar>(scenario: &Scenario<T>) -> Result<ProblemInstance<T>> {
    let Scenario {
        scale,
        nodes,
        params,
        seed,
    } = scenario;
    let servers = scale.servers();
    let mut edges = Vec::new();
    for user in servers..nodes.len() {
        let un = &nodes[user];
        let task = super::Task {
            workload: un.workload,
            data_size: un.feature.data_size,
            deadline: params.deadline,
            delay_weight: un.feature.delay_weight,
        };
        task.validate()?;
        let compute = user_compute(params, un);
        let j_loc = local_cost(&task, &compute).weighted;
        for (server, sn) in nodes.iter().enumerate().take(servers) {
            let covered =
                sn.kind() == NodeKind::Hap || un.position.horizontal_distance(&sn.position) <= params.coverage_radius;
            if !covered {
                continue;
            }
            let kind = LinkKind::between(un.kind(), sn.kind())?;
            let gain = link_gain(kind, &un.position, &sn.position, &params.channel)?;
            let rate = link_rate(&params.channel, compute.tx_power, gain)?;
            let sc = server_compute(params, sn.kind());
            let deadline = deadline_params(&task, &compute, rate, &sc)?;
            edges.push(Edge {
                user,
                server,
                feature: EdgeFeature {
                    j_loc,
                    j_tr: transmission_cost(&task, rate, &compute)?.weighted,
                    j_exe: execution_cost(&task, &sc, task.delay_weight).weighted,
                    lambda: deadline.local_feasible,
                    mu: deadline.min_share,
                },
            });
        }
    }
    ProblemInstance::new(*scale, nodes.clone(), edges, params.clone(), *seed)
}

/// Draws a random instance at the given scale, resampling whole instances
/// until at least one assignment satisfies the deadline and capacity constraints.
pub fn sample_scenario<T: Scalar>(scale: Scale, params: &ScenarioConfig<T>, seed: u64) -> Result<ProblemInstance<T>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stranded_total = 0usize;
    for _ in 0..params.max_attempts {
        let scenario = draw_scenario(scale, params, seed, &mut rng)?;
        let instance = build_virtual_graph(&scenario)?;
        if find_feasible_assignment(&instance, params.feasibility_budget).is_some() {
            return Ok(instance);
        }
        stranded_total += (0..instance.num_users())
            .filter(|&u| {
                !instance.local_feasible(u) && instance.user_edges(u).iter().all(|&k| !instance.offload_feasible(k))
            })
            .count();
    }
    Err(Error::Generation {
        attempts: params.max_attempts,
        diagnostics: format!(
            "scale {scale}, seed {seed}: {stranded_total} users across all attempts had no deadline-feasible option; \
             remaining attempts failed on server capacity"
        ),
    })
}
