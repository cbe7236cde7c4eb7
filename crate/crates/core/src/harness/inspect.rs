use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::generate::{meta_path, DatasetMeta};
use super::Skip;
use crate::error::{Error, Result};
use crate::instance::{deserialize_record, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetStats {
    pub schema_version: u64,
    pub records: usize,
    pub scales: BTreeMap<String, usize>,
    pub labelers: BTreeMap<String, usize>,
    pub padded: usize,
    pub mean_label_cost: Option<f64>,
    pub min_label_cost: Option<f64>,
    pub max_label_cost: Option<f64>,
    pub mean_degree: Option<f64>,
    pub local_feasible_users: usize,
    pub users: usize,
    pub meta: Option<DatasetMeta>,
    pub skips: Vec<Skip>,
}

pub fn inspect(dataset: &Path) -> Result<DatasetStats> {
    let bytes = fs::read(dataset).map_err(|e| Error::io(dataset, e))?;
    let sidecar = meta_path(dataset);
    let meta = if sidecar.exists() {
        Some(DatasetMeta::read(&sidecar)?)
    } else {
        None
    };
    let mut stats = DatasetStats {
        schema_version: SCHEMA_VERSION,
        records: 0,
        scales: BTreeMap::new(),
        labelers: BTreeMap::new(),
        padded: 0,
        mean_label_cost: None,
        min_label_cost: None,
        max_label_cost: None,
        mean_degree: None,
        local_feasible_users: 0,
        users: 0,
        meta,
        skips: Vec::new(),
    };
    let (mut cost_sum, mut edges) = (0.0, 0usize);
    for (i, raw) in bytes.split(|&b| b == b'\n').enumerate() {
        if raw.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let record = match deserialize_record::<f64>(raw) {
            Ok(r) => r,
            Err(e) => {
                stats.skips.push(Skip {
                    line: i + 1,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let inst = record.instance();
        stats.records += 1;
        *stats.scales.entry(inst.scale().to_string()).or_default() += 1;
        *stats.labelers.entry(record.labeler().to_string()).or_default() += 1;
        stats.padded += usize::from(record.padded().is_some());
        let c = record.label_cost();
        cost_sum += c;
        stats.min_label_cost = Some(stats.min_label_cost.map_or(c, |m: f64| m.min(c)));
        stats.max_label_cost = Some(stats.max_label_cost.map_or(c, |m: f64| m.max(c)));
        edges += inst.num_edges();
        stats.users += inst.num_users();
        stats.local_feasible_users += (0..inst.num_users()).filter(|&u| inst.local_feasible(u)).count();
    }
    if stats.records > 0 {
        stats.mean_label_cost = Some(cost_sum / stats.records as f64);
        stats.mean_degree = Some(edges as f64 / stats.users as f64);
    }
    Ok(stats)
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6}"));
        writeln!(f, "schema_version   {}", self.schema_version)?;
        writeln!(f, "records          {}", self.records)?;
        for (scale, n) in &self.scales {
            writeln!(f, "scale            {scale}: {n}")?;
        }
        for (labeler, n) in &self.labelers {
            writeln!(f, "labeler          {labeler}: {n}")?;
        }
        writeln!(f, "padded records   {}", self.padded)?;
        writeln!(
            f,
            "label cost       mean {} min {} max {}",
            opt(self.mean_label_cost),
            opt(self.min_label_cost),
            opt(self.max_label_cost)
        )?;
        writeln!(f, "mean user degree {}", opt(self.mean_degree))?;
        writeln!(
            f,
            "local-feasible   {} of {} users",
            self.local_feasible_users, self.users
        )?;
        match &self.meta {
            Some(m) => writeln!(
                f,
                "metadata         {} records of {}, seed {}, labeler {}, {}",
                m.count, m.scale, m.master_seed, m.labeler, m.generator
            )?,
            None => writeln!(f, "metadata         none")?,
        }
        for s in &self.skips {
            writeln!(f, "unreadable line  {}: {}", s.line, s.reason)?;
        }
        Ok(())
    }
}
