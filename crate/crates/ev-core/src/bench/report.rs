//! Structured experiment reports.
//!
//! Reports serialize to JSON (the structured-text document) and to a flat
//! plot-ready CSV with columns `seed,step_or_repeat,metric,value`. Aggregates
//! are recomputable from the per-seed entries; [`ExperimentReport::validate`]
//! checks exactly that and runs on every assembly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{EvError, Result};

/// Schema version written into every report.
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Identity of the seeded generator behind all randomized stages.
pub const GENERATOR_IDENTITY: &str = "chacha8";

/// One measured value; `step` distinguishes trajectory points or repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPoint {
    pub metric: String,
    pub step: Option<u64>,
    pub value: f64,
}

/// All metrics produced under one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub seed: u64,
    pub metrics: Vec<MetricPoint>,
}

/// Mean and population standard deviation of one metric across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metric: String,
    pub step: Option<u64>,
    pub mean: f64,
    pub std: f64,
}

/// Persisted output of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub protocol: String,
    pub format_version: u32,
    pub generator: String,
    pub config: serde_json::Value,
    pub flags: Vec<String>,
    pub per_seed: Vec<SeedEntry>,
    pub aggregates: Vec<Aggregate>,
}

fn compute_aggregates(per_seed: &[SeedEntry]) -> Vec<Aggregate> {
    // Group in first-appearance order so serialization is deterministic.
    let mut keys: Vec<(String, Option<u64>)> = Vec::new();
    for entry in per_seed {
        for point in &entry.metrics {
            let key = (point.metric.clone(), point.step);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
    }
    keys.into_iter()
        .map(|(metric, step)| {
            let values: Vec<f64> = per_seed
                .iter()
                .flat_map(|e| &e.metrics)
                .filter(|p| p.metric == metric && p.step == step)
                .map(|p| p.value)
                .collect();
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            Aggregate {
                metric,
                step,
                mean,
                std: var.sqrt(),
            }
        })
        .collect()
}

impl ExperimentReport {
    /// Assembles a report, computing aggregates and verifying integrity.
    pub fn assemble(
        protocol: impl Into<String>,
        config: serde_json::Value,
        per_seed: Vec<SeedEntry>,
        flags: Vec<String>,
    ) -> Result<Self> {
        let report = ExperimentReport {
            protocol: protocol.into(),
            format_version: REPORT_FORMAT_VERSION,
            generator: GENERATOR_IDENTITY.to_string(),
            config,
            flags,
            per_seed,
            aggregates: Vec::new(),
        };
        let mut report = report;
        report.aggregates = compute_aggregates(&report.per_seed);
        report.validate()?;
        Ok(report)
    }

    /// Recomputes every aggregate from the per-seed entries and compares
    /// within 1e-12.
    pub fn validate(&self) -> Result<()> {
        let recomputed = compute_aggregates(&self.per_seed);
        if recomputed.len() != self.aggregates.len() {
            return Err(EvError::invalid("aggregate set does not match metrics"));
        }
        for (a, b) in self.aggregates.iter().zip(&recomputed) {
            if a.metric != b.metric || a.step != b.step {
                return Err(EvError::invalid(format!(
                    "aggregate key mismatch: {}/{:?} vs {}/{:?}",
                    a.metric, a.step, b.metric, b.step
                )));
            }
            if (a.mean - b.mean).abs() > 1e-12 || (a.std - b.std).abs() > 1e-12 {
                return Err(EvError::invalid(format!(
                    "aggregate {} does not recompute from per-seed entries",
                    a.metric
                )));
            }
        }
        Ok(())
    }

    /// Aggregate for a metric without a step, if present.
    pub fn aggregate(&self, metric: &str) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.metric == metric && a.step.is_none())
    }

    pub fn aggregate_at(&self, metric: &str, step: u64) -> Option<&Aggregate> {
        self.aggregates
            .iter()
            .find(|a| a.metric == metric && a.step == Some(step))
    }

    /// Flat table: `seed,step_or_repeat,metric,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,step_or_repeat,metric,value\n");
        for entry in &self.per_seed {
            for point in &entry.metrics {
                let step = point.step.map_or(String::new(), |s| s.to_string());
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    entry.seed, step, point.metric, point.value
                ));
            }
        }
        out
    }

    /// Writes `<stem>.json` and `<stem>.csv` under `dir`, returning the
    /// paths.
    pub fn write_files(&self, dir: impl AsRef<Path>, stem: &str) -> Result<Vec<std::path::PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let json_path = dir.join(format!("{stem}.json"));
        let csv_path = dir.join(format!("{stem}.csv"));
        fs::write(&json_path, serde_json::to_string_pretty(self).map_err(io_err)?)?;
        fs::write(&csv_path, self.to_csv())?;
        Ok(vec![json_path, csv_path])
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let report: ExperimentReport = serde_json::from_str(&text).map_err(io_err)?;
        report.validate()?;
        Ok(report)
    }

    /// Metrics whose names do not start with `time_`; timing is the one
    /// part of a report that legitimately varies between identical runs.
    pub fn non_timing_metrics(&self) -> Vec<(u64, &MetricPoint)> {
        self.per_seed
            .iter()
            .flat_map(|e| e.metrics.iter().map(move |m| (e.seed, m)))
            .filter(|(_, m)| !m.metric.starts_with("time_"))
            .collect()
    }
}

fn io_err(e: serde_json::Error) -> EvError {
    EvError::invalid(format!("report (de)serialization failed: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        ExperimentReport::assemble(
            "unit",
            serde_json::json!({"x": 1}),
            vec![
                SeedEntry {
                    seed: 0,
                    metrics: vec![
                        MetricPoint {
                            metric: "acc".into(),
                            step: None,
                            value: 0.5,
                        },
                        MetricPoint {
                            metric: "acc_at".into(),
                            step: Some(10),
                            value: 0.25,
                        },
                    ],
                },
                SeedEntry {
                    seed: 1,
                    metrics: vec![MetricPoint {
                        metric: "acc".into(),
                        step: None,
                        value: 0.7,
                    }],
                },
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn aggregates_recompute() {
        let report = sample();
        let acc = report.aggregate("acc").unwrap();
        assert!((acc.mean - 0.6).abs() < 1e-15);
        assert!((acc.std - 0.1).abs() < 1e-12);
        report.validate().unwrap();
    }

    #[test]
    fn tampered_aggregate_fails_validation() {
        let mut report = sample();
        report.aggregates[0].mean += 1e-6;
        assert!(report.validate().is_err());
    }

    #[test]
    fn csv_layout() {
        let report = sample();
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "seed,step_or_repeat,metric,value");
        assert_eq!(lines.next().unwrap(), "0,,acc,0.5");
        assert_eq!(lines.next().unwrap(), "0,10,acc_at,0.25");
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let report = sample();
        let paths = report.write_files(dir.path(), "r").unwrap();
        let back = ExperimentReport::from_json_file(&paths[0]).unwrap();
        assert_eq!(back, report);
    }
}
