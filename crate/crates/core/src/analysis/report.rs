//! The per-run report serialized as `report.json`.

use serde::{Deserialize, Serialize};

use crate::plaque::{ExtractionOutcome, ThresholdUsed};
use crate::unfold::{SolverKind, UnfoldedPatch};
use crate::volume::{IntensityVolume, VolumeGeometry};

use super::histogram::{intensity_histogram, Histogram, HistogramBin};
use super::inside::voxels_inside;
use super::{geometric_parameters, AnalysisError, GeometricParameters};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaqueStatus {
    Extracted,
    None,
}

/// Unfolding metadata recorded next to the geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfoldSummary {
    /// Outer-wall region vertices pinned at (0,0) and on the +x axis.
    pub pinned_vertices: [usize; 2],
    pub pinned_distance_mm: f64,
    pub scale: f64,
    pub conformal_energy: f64,
    pub mean_distortion: f64,
    pub max_distortion: f64,
    pub flipped_triangles: usize,
    pub cut_paths: Vec<Vec<usize>>,
    pub solver: String,
}

impl From<&UnfoldedPatch> for UnfoldSummary {
    fn from(patch: &UnfoldedPatch) -> Self {
        UnfoldSummary {
            pinned_vertices: patch.pinned.vertices,
            pinned_distance_mm: patch.pinned.distance,
            scale: patch.scale,
            conformal_energy: patch.energy,
            mean_distortion: patch.mean_distortion(),
            max_distortion: patch.max_distortion(),
            flipped_triangles: patch.flipped_triangles,
            cut_paths: patch.cut_paths.clone(),
            solver: match patch.solver {
                SolverKind::Cholesky => "cholesky",
                SolverKind::ConjugateGradient => "conjugate-gradient",
            }
            .into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaqueReport {
    pub schema_version: u32,
    pub plaque: PlaqueStatus,
    /// Absent when no plaque was extracted.
    #[serde(flatten)]
    pub geometry: Option<GeometricParameters>,
    pub threshold: ThresholdUsed,
    pub threshold_iterations: Option<usize>,
    pub repaired_fraction: Option<f64>,
    pub filled_holes: Option<usize>,
    /// Voxels whose centers lie inside the plaque mesh.
    pub inside_voxels: Option<usize>,
    /// The plaque is too small to contain any voxel center.
    pub sub_voxel: bool,
    pub histogram_bin_width: Option<f64>,
    pub histogram: Option<Vec<HistogramBin>>,
    pub unfold: Option<UnfoldSummary>,
    pub warnings: Vec<String>,
}

impl PlaqueReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, AnalysisError> {
        let report: PlaqueReport =
            serde_json::from_str(text).map_err(|e| AnalysisError::InvalidInput(format!("report: {e}")))?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(AnalysisError::InvalidInput(format!(
                "report schema version {} is not {REPORT_SCHEMA_VERSION}",
                report.schema_version
            )));
        }
        if (report.plaque == PlaqueStatus::Extracted) != report.geometry.is_some() {
            return Err(AnalysisError::InvalidInput("plaque status and geometry fields disagree".into()));
        }
        Ok(report)
    }
}

/// Assembles the report for one extraction: geometry, inside voxels and, when
/// an intensity volume is given, the histogram.
pub fn build_report(
    outcome: &ExtractionOutcome,
    label_geometry: &VolumeGeometry,
    intensity: Option<&IntensityVolume>,
    bin_width: Option<f64>,
) -> Result<(PlaqueReport, Option<Histogram>), AnalysisError> {
    let mut report = PlaqueReport {
        schema_version: REPORT_SCHEMA_VERSION,
        plaque: PlaqueStatus::None,
        geometry: None,
        threshold: outcome.threshold,
        threshold_iterations: outcome.trace.as_ref().map(|t| t.iterations()),
        repaired_fraction: None,
        filled_holes: None,
        inside_voxels: None,
        sub_voxel: false,
        histogram_bin_width: None,
        histogram: None,
        unfold: None,
        warnings: Vec::new(),
    };
    if outcome.open_loops > 0 {
        report.warnings.push(format!("{} boundary loops were closed by hole filling", outcome.open_loops));
    }
    let Some(plaque) = &outcome.plaque else {
        return Ok((report, None));
    };
    report.plaque = PlaqueStatus::Extracted;
    report.geometry = Some(geometric_parameters(plaque)?);
    report.repaired_fraction = Some(plaque.repaired_fraction);
    report.filled_holes = Some(plaque.filled_holes);

    let voxels = voxels_inside(&plaque.mesh, label_geometry);
    report.inside_voxels = Some(voxels.len());
    if voxels.is_empty() {
        report.sub_voxel = true;
        report.warnings.push("sub-voxel plaque: no voxel center lies inside the mesh".into());
    }
    let histogram = match intensity {
        Some(volume) => {
            let h = intensity_histogram(&voxels, volume, label_geometry, bin_width)?;
            if h.empty {
                report.warnings.push("empty histogram: no voxel inside the plaque".into());
            }
            report.histogram_bin_width = Some(h.bin_width);
            report.histogram = Some(h.bins.clone());
            Some(h)
        }
        None => None,
    };
    Ok((report, histogram))
}
