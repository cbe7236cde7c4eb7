//! Dataset records and their line-oriented JSON encoding.

use std::fmt;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Edge, EdgeFeature, Node, NodeFeature, NodeKind, PaddedGraph, ProblemInstance, Scale, ScenarioConfig};
use crate::channel::Position3D;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solve::{check_constraints, evaluate_objective, ObjectiveMode, Solution};

pub const SCHEMA_VERSION: u64 = 1;

/// Relative tolerance between a stored label cost and its re-evaluation.
const LABEL_COST_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Labeler {
    Oracle,
    Mcmf,
}

impl fmt::Display for Labeler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Labeler::Oracle => "oracle",
            Labeler::Mcmf => "mcmf",
        })
    }
}

impl std::str::FromStr for Labeler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "oracle" => Ok(Labeler::Oracle),
            "mcmf" => Ok(Labeler::Mcmf),
            _ => Err(Error::Config(format!(
                "unknown labeler {s:?} (expected oracle or mcmf)"
            ))),
        }
    }
}

/// Where a record came from inside its generation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub master_seed: u64,
    pub index: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord<T> {
    instance: ProblemInstance<T>,
    label: Solution<T>,
    label_cost: T,
    labeler: Labeler,
    meta: RecordMeta,
    padded: Option<PaddedGraph<T>>,
}

impl<T: Scalar> DatasetRecord<T> {
    /// Validates that the label is feasible and its stored cost matches.
    pub fn new(
        instance: ProblemInstance<T>,
        label: Solution<T>,
        label_cost: T,
        labeler: Labeler,
        meta: RecordMeta,
    ) -> Result<Self> {
        let report = check_constraints(&instance, &label)?;
        if !report.passed() {
            return Err(Error::Invariant(format!("label violates constraints: {report}")));
        }
        let cost = evaluate_objective(&instance, &label, ObjectiveMode::PerUser)?;
        let tol = T::of(LABEL_COST_RTOL) * cost.abs().max(T::min_positive_value());
        if !((cost - label_cost).abs() <= tol) {
            return Err(Error::Invariant(format!(
                "label cost {label_cost} differs from evaluated cost {cost}"
            )));
        }
        Ok(Self {
            instance,
            label,
            label_cost,
            labeler,
            meta,
            padded: None,
        })
    }

    /// Builds a record, evaluating the label cost.
    pub fn labeled(
        instance: ProblemInstance<T>,
        label: Solution<T>,
        labeler: Labeler,
        meta: RecordMeta,
    ) -> Result<Self> {
        let cost = evaluate_objective(&instance, &label, ObjectiveMode::PerUser)?;
        Self::new(instance, label, cost, labeler, meta)
    }

    pub fn with_padded(mut self, padded: PaddedGraph<T>) -> Result<Self> {
        if padded.width != self.instance.num_servers() || padded.users.len() != self.instance.num_users() {
            return Err(Error::Invariant("padded graph shape does not match instance".into()));
        }
        self.padded = Some(padded);
        Ok(self)
    }

    pub fn instance(&self) -> &ProblemInstance<T> {
        &self.instance
    }

    pub fn label(&self) -> &Solution<T> {
        &self.label
    }

    pub fn label_cost(&self) -> T {
        self.label_cost
    }

    pub fn labeler(&self) -> Labeler {
        self.labeler
    }

    pub fn meta(&self) -> RecordMeta {
        self.meta
    }

    pub fn padded(&self) -> Option<&PaddedGraph<T>> {
        self.padded.as_ref()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeWire<T> {
    #[serde(rename = "type")]
    kind: NodeKind,
    pos: [T; 3],
    data_size: T,
    workload: T,
    compute_freq: T,
    delay_weight: T,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeWire<T> {
    user: usize,
    server: usize,
    j_loc: T,
    j_tr: T,
    j_exe: T,
    lambda: u8,
    mu: T,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordWire<T> {
    schema_version: u64,
    scale_tag: Scale,
    seed: u64,
    master_seed: u64,
    index: u64,
    params: ScenarioConfig<T>,
    nodes: Vec<NodeWire<T>>,
    edges: Vec<EdgeWire<T>>,
    #[serde(default = "Option::default", skip_serializing_if = "Option::is_none")]
    padded: Option<PaddedGraph<T>>,
    label_x: Vec<u8>,
    label_y: Vec<T>,
    label_cost: T,
    labeler: Labeler,
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: u64,
}

/// Encodes a record as one line of JSON (no trailing newline).
pub fn serialize_record<T: Scalar + Serialize>(record: &DatasetRecord<T>) -> Result<Vec<u8>> {
    let inst = &record.instance;
    let wire = RecordWire {
        schema_version: SCHEMA_VERSION,
        scale_tag: inst.scale(),
        seed: inst.seed(),
        master_seed: record.meta.master_seed,
        index: record.meta.index,
        params: inst.params().clone(),
        nodes: inst
            .nodes()
            .iter()
            .map(|n| NodeWire {
                kind: n.kind(),
                pos: [n.position.x, n.position.y, n.position.z],
                data_size: n.feature.data_size,
                workload: n.workload,
                compute_freq: n.feature.compute_freq,
                delay_weight: n.feature.delay_weight,
            })
            .collect(),
        edges: inst
            .edges()
            .iter()
            .map(|e| EdgeWire {
                user: e.user,
                server: e.server,
                j_loc: e.feature.j_loc,
                j_tr: e.feature.j_tr,
                j_exe: e.feature.j_exe,
                lambda: e.feature.lambda as u8,
                mu: e.feature.mu,
            })
            .collect(),
        padded: record.padded.clone(),
        label_x: record.label.x.clone(),
        label_y: record.label.y.clone(),
        label_cost: record.label_cost,
        labeler: record.labeler,
    };
    serde_json::to_vec(&wire).map_err(|e| Error::Invariant(format!("record not encodable: {e}")))
}

fn parse_error(bytes: &[u8], e: &serde_json::Error) -> Error {
    let line_start: usize = bytes
        .split(|&b| b == b'\n')
        .take(e.line().saturating_sub(1))
        .map(|l| l.len() + 1)
        .sum();
    Error::Parse {
        offset: (line_start + e.column().saturating_sub(1)).min(bytes.len()),
        message: e.to_string(),
    }
}

pub fn deserialize_record<T: Scalar + DeserializeOwned>(bytes: &[u8]) -> Result<DatasetRecord<T>> {
    let probe: VersionProbe = serde_json::from_slice(bytes).map_err(|e| parse_error(bytes, &e))?;
    if probe.schema_version != SCHEMA_VERSION {
        return Err(Error::Version {
            found: probe.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    let wire: RecordWire<T> = serde_json::from_slice(bytes).map_err(|e| parse_error(bytes, &e))?;
    let nodes = wire
        .nodes
        .into_iter()
        .map(|n| Node {
            feature: NodeFeature {
                node_type: n.kind,
                data_size: n.data_size,
                compute_freq: n.compute_freq,
                delay_weight: n.delay_weight,
            },
            position: Position3D::new(n.pos[0], n.pos[1], n.pos[2]),
            workload: n.workload,
        })
        .collect();
    let edges = wire
        .edges
        .into_iter()
        .map(|e| {
            let lambda = match e.lambda {
                0 => false,
                1 => true,
                v => return Err(Error::Invariant(format!("edge lambda {v} is not binary"))),
            };
            Ok(Edge {
                user: e.user,
                server: e.server,
                feature: EdgeFeature {
                    j_loc: e.j_loc,
                    j_tr: e.j_tr,
                    j_exe: e.j_exe,
                    lambda,
                    mu: e.mu,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let instance = ProblemInstance::new(wire.scale_tag, nodes, edges, wire.params, wire.seed)?;
    let label = Solution {
        x: wire.label_x,
        y: wire.label_y,
    };
    let record = DatasetRecord::new(
        instance,
        label,
        wire.label_cost,
        wire.labeler,
        RecordMeta {
            master_seed: wire.master_seed,
            index: wire.index,
        },
    )?;
    match wire.padded {
        Some(p) => record.with_padded(p),
        None => Ok(record),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{pad_edges, sample_scenario, PenaltyFeatures};
    use crate::solve::solve_bruteforce;
    use proptest::prelude::*;

    fn record(seed: u64) -> DatasetRecord<f64> {
        let inst = sample_scenario(Scale::new(2, 4, 2), &ScenarioConfig::default(), seed).unwrap();
        let label = solve_bruteforce(&inst, 2e7).unwrap();
        DatasetRecord::labeled(
            inst,
            label,
            Labeler::Oracle,
            RecordMeta {
                master_seed: 9,
                index: seed,
            },
        )
        .unwrap()
    }

    #[test]
    fn round_trip_with_padding() {
        let r = record(3);
        let padded = pad_edges(r.instance(), &PenaltyFeatures::from_instances([r.instance()]));
        let r = r.with_padded(padded).unwrap();
        let bytes = serialize_record(&r).unwrap();
        assert!(!bytes.contains(&b'\n'));
        let back: DatasetRecord<f64> = deserialize_record(&bytes).unwrap();
        assert_eq!(back, r);
        assert_eq!(serialize_record(&back).unwrap(), bytes);
    }

    #[test]
    fn truncated_input_is_a_parse_error() {
        let bytes = serialize_record(&record(4)).unwrap();
        for cut in [1, bytes.len() / 3, bytes.len() - 1] {
            match deserialize_record::<f64>(&bytes[..cut]) {
                Err(Error::Parse { offset, .. }) => assert!(offset <= cut),
                other => panic!("expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn unknown_version_is_rejected() {
        let bytes = serialize_record(&record(5)).unwrap();
        let text = String::from_utf8(bytes)
            .unwrap()
            .replacen("\"schema_version\":1", "\"schema_version\":7", 1);
        assert!(matches!(
            deserialize_record::<f64>(text.as_bytes()),
            Err(Error::Version { found: 7, expected: 1 })
        ));
    }

    #[test]
    fn tampered_label_cost_is_rejected() {
        let bytes = serialize_record(&record(6)).unwrap();
        let mut v: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let c = v["label_cost"].as_f64().unwrap();
        v["label_cost"] = serde_json::json!(c * 1.01);
        let err = deserialize_record::<f64>(&serde_json::to_vec(&v).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)), "{err}");
    }

    #[test]
    fn empty_edge_set_cannot_be_built() {
        let r = record(7);
        let inst = r.instance();
        let err =
            ProblemInstance::new(inst.scale(), inst.nodes().to_vec(), vec![], inst.params().clone(), 0).unwrap_err();
        assert!(matches!(err, Error::Invariant(_)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn any_generated_record_round_trips(seed in any::<u64>()) {
            let r = record(seed);
            let back: DatasetRecord<f64> = deserialize_record(&serialize_record(&r).unwrap()).unwrap();
            prop_assert_eq!(back, r);
        }
    }
}
