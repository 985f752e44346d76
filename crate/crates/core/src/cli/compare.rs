//! The `compare` command: metric deltas between a baseline and a follow-up report.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{GeometricParameters, PlaqueReport};

use super::{CliError, CompareArgs};

/// Metrics compared between two reports.
const METRICS: [&str; 4] = ["volume_mm3", "area_mm2", "compactness", "max_extent_mm"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub name: String,
    pub baseline: f64,
    pub followup: f64,
    /// `followup - baseline`.
    pub delta: f64,
    /// Relative change in percent; absent when the baseline is zero.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    /// One of `both-extracted`, `plaque resolved below threshold`,
    /// `plaque appeared`, `no plaque in either`.
    pub status: String,
    pub metrics: Vec<MetricDelta>,
}

fn metric(g: &GeometricParameters, name: &str) -> f64 {
    match name {
        "volume_mm3" => g.volume_mm3,
        "area_mm2" => g.area_mm2,
        "compactness" => g.compactness,
        "max_extent_mm" => g.max_extent_mm,
        _ => unreachable!("unknown metric {name}"),
    }
}

pub fn compare_reports(baseline: &PlaqueReport, followup: &PlaqueReport) -> DeltaReport {
    match (&baseline.geometry, &followup.geometry) {
        (Some(a), Some(b)) => DeltaReport {
            status: "both-extracted".into(),
            metrics: METRICS
                .iter()
                .map(|&name| {
                    let (x, y) = (metric(a, name), metric(b, name));
                    MetricDelta {
                        name: name.into(),
                        baseline: x,
                        followup: y,
                        delta: y - x,
                        percent: (x != 0.0).then(|| 100.0 * (y - x) / x),
                    }
                })
                .collect(),
        },
        (Some(_), None) => DeltaReport { status: "plaque resolved below threshold".into(), metrics: Vec::new() },
        (None, Some(_)) => DeltaReport { status: "plaque appeared".into(), metrics: Vec::new() },
        (None, None) => DeltaReport { status: "no plaque in either".into(), metrics: Vec::new() },
    }
}

fn load(path: &Path) -> Result<PlaqueReport, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    PlaqueReport::from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub(crate) fn compare_command(args: &CompareArgs) -> Result<(), CliError> {
    let delta = compare_reports(&load(&args.baseline)?, &load(&args.followup)?);
    let json = serde_json::to_string_pretty(&delta).expect("delta serializes") + "\n";
    match &args.out {
        Some(path) => fs::write(path, json).map_err(|e| CliError::Output(format!("{}: {e}", path.display()))),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}
