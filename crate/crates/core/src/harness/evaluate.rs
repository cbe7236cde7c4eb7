use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{meta_path, DatasetMeta};
use super::metrics::{average_cost_ratio, cost_accuracy_rate, DEFAULT_THRESHOLD};
use super::{run_solver, with_suffix, write_atomically, SolverKind, SolverParams, REPORT_SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::instance::{deserialize_record, record_seed};
use crate::solve::{check_constraints, evaluate_objective, ObjectiveMode};
use crate::Record;

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateConfig {
    pub dataset: PathBuf,
    pub out: PathBuf,
    pub settings: EvaluateSettings,
}

impl EvaluateConfig {
    pub fn new(dataset: impl Into<PathBuf>, solver: SolverKind, out: impl Into<PathBuf>) -> Self {
        Self {
            dataset: dataset.into(),
            out: out.into(),
            settings: EvaluateSettings {
                solver,
                threshold: DEFAULT_THRESHOLD,
                objective: ObjectiveMode::PerUser,
                seed: 0,
                params: SolverParams::default(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluateSettings {
    pub solver: SolverKind,
    pub threshold: f64,
    pub objective: ObjectiveMode,
    /// Master seed of randomized solvers; record `i` uses `record_seed(seed, i)`.
    pub seed: u64,
    pub params: SolverParams,
}

/// Outcome on one dataset record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordResult {
    pub line: usize,
    pub index: u64,
    pub predicted: f64,
    pub reference: f64,
    pub ratio: f64,
    pub feasible: bool,
    pub degraded: bool,
}

/// A dataset line that could not be read or solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skip {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub solver: SolverKind,
    pub instances: usize,
    pub evaluated: usize,
    pub skipped: usize,
    pub infeasible: usize,
    pub degraded: usize,
    pub average_cost_ratio: Option<f64>,
    pub cost_accuracy_rate: Option<f64>,
}

/// Wall-clock figures; kept apart from the metrics, which are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub total_s: f64,
    pub mean_s: f64,
    pub max_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub dataset_tag: Option<String>,
    /// Generation metadata of the dataset, enough to regenerate it.
    pub provenance: Option<DatasetMeta>,
    pub settings: EvaluateSettings,
    pub summary: SolverSummary,
    pub records: Vec<RecordResult>,
    pub skips: Vec<Skip>,
    pub timing: TimingStats,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
#[allow(clippy::large_enum_variant)]
enum ReportLine {
    Header {
        schema_version: u64,
        dataset: String,
        dataset_tag: Option<String>,
        provenance: Option<DatasetMeta>,
        settings: EvaluateSettings,
    },
    Summary(SolverSummary),
    Record(RecordResult),
    Skip(Skip),
    Timing(TimingStats),
}

impl BenchmarkReport {
    /// Line-delimited machine form. The last line holds the timing.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut lines = vec![
            ReportLine::Header {
                schema_version: REPORT_SCHEMA_VERSION,
                dataset: self.dataset.clone(),
                dataset_tag: self.dataset_tag.clone(),
                provenance: self.provenance.clone(),
                settings: self.settings,
            },
            ReportLine::Summary(self.summary.clone()),
        ];
        lines.extend(self.records.iter().cloned().map(ReportLine::Record));
        lines.extend(self.skips.iter().cloned().map(ReportLine::Skip));
        lines.push(ReportLine::Timing(self.timing.clone()));
        let mut out = String::new();
        for l in &lines {
            out.push_str(&serde_json::to_string(l).map_err(|e| Error::Config(e.to_string()))?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut header = None;
        let mut summary = None;
        let mut timing = None;
        let mut records = Vec::new();
        let mut skips = Vec::new();
        let mut offset = 0;
        for line in text.split_inclusive('\n') {
            let trimmed = line.trim_end();
            if !trimmed.is_empty() {
                let parsed: ReportLine = serde_json::from_str(trimmed).map_err(|e| Error::Parse {
                    offset,
                    message: e.to_string(),
                })?;
                match parsed {
                    ReportLine::Header {
                        schema_version,
                        dataset,
                        dataset_tag,
                        provenance,
                        settings,
                    } => {
                        if schema_version != REPORT_SCHEMA_VERSION {
                            return Err(Error::Version {
                                found: schema_version,
                                expected: REPORT_SCHEMA_VERSION,
                            });
                        }
                        header = Some((dataset, dataset_tag, provenance, settings));
                    }
                    ReportLine::Summary(s) => summary = Some(s),
                    ReportLine::Record(r) => records.push(r),
                    ReportLine::Skip(s) => skips.push(s),
                    ReportLine::Timing(t) => timing = Some(t),
                }
            }
            offset += line.len();
        }
        let missing = |what: &str| Error::Structural(format!("report has no {what} line"));
        let (dataset, dataset_tag, provenance, settings) = header.ok_or_else(|| missing("header"))?;
        Ok(Self {
            dataset,
            dataset_tag,
            provenance,
            settings,
            summary: summary.ok_or_else(|| missing("summary"))?,
            records,
            skips,
            timing: timing.ok_or_else(|| missing("timing"))?,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsonl(&text)
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let s = &self.summary;
        let fmt_opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        let mut t = String::new();
        let _ = writeln!(t, "report schema {REPORT_SCHEMA_VERSION}");
        let _ = writeln!(
            t,
            "dataset   {} ({})",
            self.dataset,
            self.dataset_tag.as_deref().unwrap_or("untagged")
        );
        let _ = writeln!(
            t,
            "objective {:?}  threshold {}  seed {}",
            self.settings.objective, self.settings.threshold, self.settings.seed
        );
        let _ = writeln!(t);
        let _ = writeln!(
            t,
            "{:<8} {:>9} {:>9} {:>7} {:>10} {:>8} {:>14} {:>14} {:>10} {:>10}",
            "solver",
            "instances",
            "evaluated",
            "skipped",
            "infeasible",
            "degraded",
            "avg_cost_ratio",
            "accuracy",
            "mean_s",
            "max_s"
        );
        let _ = writeln!(
            t,
            "{:<8} {:>9} {:>9} {:>7} {:>10} {:>8} {:>14} {:>14} {:>10.2e} {:>10.2e}",
            s.solver.to_string(),
            s.instances,
            s.evaluated,
            s.skipped,
            s.infeasible,
            s.degraded,
            fmt_opt(s.average_cost_ratio),
            fmt_opt(s.cost_accuracy_rate),
            self.timing.mean_s,
            self.timing.max_s
        );
        for skip in &self.skips {
            let _ = writeln!(t, "skipped line {}: {}", skip.line, skip.reason);
        }
        t
    }
}

enum LineOutcome {
    Done(RecordResult, f64),
    Skipped(Skip),
}

fn evaluate_record(record: &Record, line: usize, settings: &EvaluateSettings) -> Result<(RecordResult, f64)> {
    let inst = record.instance();
    let index = record.meta().index;
    let started = Instant::now();
    let (sol, degraded) = run_solver(
        settings.solver,
        inst,
        &settings.params,
        record_seed(settings.seed, index),
    )?;
    let elapsed = started.elapsed().as_secs_f64();
    let predicted = evaluate_objective(inst, &sol, settings.objective)?;
    let reference = match settings.objective {
        ObjectiveMode::PerUser => record.label_cost(),
        mode => evaluate_objective(inst, record.label(), mode)?,
    };
    let feasible = check_constraints(inst, &sol)?.passed();
    Ok((
        RecordResult {
            line,
            index,
            predicted,
            reference,
            ratio: predicted / reference,
            feasible,
            degraded,
        },
        elapsed,
    ))
}

/// Solves every record of the dataset and writes the report to `cfg.out`
/// (machine form) and `<out>.txt` (table). Unreadable or unsolvable records
/// are listed as skips; the dataset itself is only read.
pub fn run_evaluate(cfg: &EvaluateConfig) -> Result<BenchmarkReport> {
    let settings = cfg.settings;
    if !(settings.threshold > 0.0) {
        return Err(Error::Config(format!(
            "threshold {} must be positive",
            settings.threshold
        )));
    }
    let bytes = fs::read(&cfg.dataset).map_err(|e| Error::io(&cfg.dataset, e))?;
    let sidecar = meta_path(&cfg.dataset);
    let provenance = if sidecar.exists() {
        Some(DatasetMeta::read(&sidecar)?)
    } else {
        None
    };

    let lines: Vec<(usize, &[u8])> = bytes
        .split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.iter().all(u8::is_ascii_whitespace))
        .collect();
    let outcomes: Vec<LineOutcome> = lines
        .par_iter()
        .map(|&(line, raw)| {
            let result = deserialize_record::<f64>(raw).and_then(|r| evaluate_record(&r, line, &settings));
            match result {
                Ok((r, t)) => LineOutcome::Done(r, t),
                Err(e) => LineOutcome::Skipped(Skip {
                    line,
                    reason: e.to_string(),
                }),
            }
        })
        .collect();

    let mut records = Vec::new();
    let mut skips = Vec::new();
    let mut times = Vec::new();
    for o in outcomes {
        match o {
            LineOutcome::Done(r, t) => {
                records.push(r);
                times.push(t);
            }
            LineOutcome::Skipped(s) => {
                log::warn!("line {}: {}", s.line, s.reason);
                skips.push(s);
            }
        }
    }
    let predicted: Vec<f64> = records.iter().map(|r| r.predicted).collect();
    let reference: Vec<f64> = records.iter().map(|r| r.reference).collect();
    let (avg, acc) = if records.is_empty() {
        (None, None)
    } else {
        (
            Some(average_cost_ratio(&predicted, &reference)?),
            Some(cost_accuracy_rate(&predicted, &reference, settings.threshold)?),
        )
    };
    let summary = SolverSummary {
        solver: settings.solver,
        instances: lines.len(),
        evaluated: records.len(),
        skipped: skips.len(),
        infeasible: records.iter().filter(|r| !r.feasible).count(),
        degraded: records.iter().filter(|r| r.degraded).count(),
        average_cost_ratio: avg,
        cost_accuracy_rate: acc,
    };
    let total: f64 = times.iter().sum();
    let timing = TimingStats {
        total_s: total,
        mean_s: if times.is_empty() {
            0.0
        } else {
            total / times.len() as f64
        },
        max_s: times.iter().copied().fold(0.0, f64::max),
    };
    let report = BenchmarkReport {
        dataset: cfg.dataset.display().to_string(),
        dataset_tag: provenance.as_ref().map(|m| m.scale.to_string()),
        provenance,
        settings,
        summary,
        records,
        skips,
        timing,
    };
    write_atomically(&cfg.out, report.to_jsonl()?.as_bytes())?;
    write_atomically(&with_suffix(&cfg.out, ".txt"), report.to_table().as_bytes())?;
    Ok(report)
}
