use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_solver, with_suffix, write_atomically, SolverKind, SolverParams};
use crate::error::{Error, Result};
use crate::instance::{
    pad_edges, record_seed, sample_scenario, serialize_record, DatasetRecord, Labeler, PenaltyFeatures, RecordMeta,
    Scale, ScenarioConfig, SCHEMA_VERSION,
};
use crate::Record;

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateConfig {
    pub scale: Scale,
    pub count: usize,
    pub seed: u64,
    pub labeler: Labeler,
    /// Store fixed-width padded edge slots in every record.
    pub pad: bool,
    pub scenario: ScenarioConfig<f64>,
    pub solver: SolverParams,
}

impl GenerateConfig {
    pub fn new(scale: Scale, count: usize, seed: u64, labeler: Labeler) -> Self {
        Self {
            scale,
            count,
            seed,
            labeler,
            pad: false,
            scenario: ScenarioConfig::default(),
            solver: SolverParams::default(),
        }
    }

    /// Configuration that reproduces the dataset described by `meta`.
    pub fn from_meta(meta: &DatasetMeta) -> Self {
        Self {
            scale: meta.scale,
            count: meta.count,
            seed: meta.master_seed,
            labeler: meta.labeler,
            pad: meta.padded,
            scenario: meta.scenario.clone(),
            solver: meta.solver,
        }
    }
}

/// Sidecar written next to every dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub schema_version: u64,
    pub generator: String,
    pub scale: Scale,
    pub count: usize,
    pub master_seed: u64,
    pub labeler: Labeler,
    pub padded: bool,
    /// Dataset maxima of the edge costs, used as virtual-edge features.
    pub penalty: PenaltyFeatures<f64>,
    pub scenario: ScenarioConfig<f64>,
    pub solver: SolverParams,
    /// Records whose MCMF label came from the greedy fallback.
    pub degraded_labels: usize,
}

impl DatasetMeta {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let meta: DatasetMeta = serde_json::from_str(&text).map_err(|e| Error::Parse {
            offset: 0,
            message: format!("{}: {e}", path.display()),
        })?;
        if meta.schema_version != SCHEMA_VERSION {
            return Err(Error::Version {
                found: meta.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Ok(meta)
    }
}

/// Sidecar path for a dataset file: `<dataset>.meta.json`.
pub fn meta_path(dataset: &Path) -> PathBuf {
    with_suffix(dataset, ".meta.json")
}

fn label_one(cfg: &GenerateConfig, index: u64) -> Result<(Record, bool)> {
    let seed = record_seed(cfg.seed, index);
    let instance = sample_scenario(cfg.scale, &cfg.scenario, seed)?;
    let solver = match cfg.labeler {
        Labeler::Oracle => SolverKind::Oracle,
        Labeler::Mcmf => SolverKind::Mcmf,
    };
    let (label, degraded) = run_solver(solver, &instance, &cfg.solver, seed)?;
    let meta = RecordMeta {
        master_seed: cfg.seed,
        index,
    };
    Ok((DatasetRecord::labeled(instance, label, cfg.labeler, meta)?, degraded))
}

/// Generates, labels and writes `cfg.count` records to `out`, plus the
/// metadata sidecar. Nothing is left behind on failure.
pub fn run_generate(cfg: &GenerateConfig, out: &Path) -> Result<DatasetMeta> {
    cfg.scenario.validate()?;
    if cfg.labeler == Labeler::Oracle {
        // every user reaches the HAP, so the space has at least 2^users points
        let floor = 2f64.powi(cfg.scale.users() as i32);
        if floor > cfg.solver.enumeration_cap {
            return Err(Error::SizeCap {
                evaluations: floor,
                cap: cfg.solver.enumeration_cap,
            });
        }
    }
    let sidecar = meta_path(out);
    let result = generate_into(cfg, out, &sidecar);
    if result.is_err() {
        let _ = fs::remove_file(super::partial_path(out));
        let _ = fs::remove_file(super::partial_path(&sidecar));
    }
    result
}

fn generate_into(cfg: &GenerateConfig, out: &Path, sidecar: &Path) -> Result<DatasetMeta> {
    log::info!(
        "generating {} {} records labeled by {}",
        cfg.count,
        cfg.scale,
        cfg.labeler
    );
    let labeled: Vec<(Record, bool)> = (0..cfg.count as u64)
        .into_par_iter()
        .map(|i| label_one(cfg, i))
        .collect::<Result<_>>()?;
    let degraded_labels = labeled.iter().filter(|r| r.1).count();
    let mut records: Vec<Record> = labeled.into_iter().map(|r| r.0).collect();

    let penalty = PenaltyFeatures::from_instances(records.iter().map(|r| r.instance()));
    if cfg.pad {
        records = records
            .into_iter()
            .map(|r| {
                let padded = pad_edges(r.instance(), &penalty);
                r.with_padded(padded)
            })
            .collect::<Result<_>>()?;
    }

    let mut body = Vec::new();
    for r in &records {
        body.extend(serialize_record(r)?);
        body.push(b'\n');
    }
    let meta = DatasetMeta {
        schema_version: SCHEMA_VERSION,
        generator: concat!("lamec ", env!("CARGO_PKG_VERSION")).to_string(),
        scale: cfg.scale,
        count: cfg.count,
        master_seed: cfg.seed,
        labeler: cfg.labeler,
        padded: cfg.pad,
        penalty,
        scenario: cfg.scenario.clone(),
        solver: cfg.solver,
        degraded_labels,
    };
    let meta_json = serde_json::to_vec_pretty(&meta).map_err(|e| Error::Config(e.to_string()))?;
    write_atomically(out, &body)?;
    if let Err(e) = write_atomically(sidecar, &meta_json) {
        let _ = fs::remove_file(out);
        return Err(e);
    }
    if degraded_labels > 0 {
        log::warn!("{degraded_labels} labels came from the mcmf greedy fallback");
    }
    Ok(meta)
}
