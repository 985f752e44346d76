//! Plaque detection on the outer wall and construction of the closed plaque
//! mesh between the two vessel-wall surfaces.

pub mod offset;
pub mod pipeline;
pub mod region;
pub mod repair;
pub mod stitch;
pub mod threshold;

pub use offset::{offset_regions, OffsetShells};
pub use pipeline::{
    extract_from_surfaces, extract_plaque, wall_surfaces, ExtractionOutcome, PipelineConfig, StageMesh, WallSurfaces,
};
pub use region::{detect_plaque_region, detect_plaque_regions, project_to_inner, regions_from_mask, PlaqueRegionPair};
pub use repair::{make_watertight, weld_vertices, PlaqueMesh};
pub use stitch::{stitch_borders, StitchResult};
pub use threshold::{
    case_specific_threshold, global_threshold, global_threshold_with, ThresholdState, ThresholdTrace, DEFAULT_K,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::MeshError;

/// Outer-region components smaller than this are discarded (mm²).
pub const MIN_REGION_AREA_MM2: f64 = 10.0;
/// Gap kept between the two shells where the wall is thinner than the shift (mm).
pub const CLAMP_EPSILON_MM: f64 = 0.01;
/// Vertices closer than this are merged by the repair stage (mm).
pub const WELD_TOLERANCE_MM: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PlaqueError {
    #[error("degenerate threshold: {0}")]
    DegenerateThreshold(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no inner-wall triangles project onto the outer plaque region")]
    NoCorrespondence,
    #[error("boundary loop with {0} vertices cannot be stitched")]
    DegenerateLoop(usize),
    #[error("repair failed: {0}")]
    RepairFailed(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<PlaqueError>,
    },
}

impl PlaqueError {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(PlaqueError) -> PlaqueError {
        move |source| PlaqueError::Stage { stage, source: Box::new(source) }
    }

    /// Stage name for stage-tagged errors.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            PlaqueError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    Global,
    CaseSpecific,
}

impl ThresholdMode {
    pub fn label(self) -> &'static str {
        match self {
            ThresholdMode::Global => "global",
            ThresholdMode::CaseSpecific => "case-specific",
        }
    }
}

/// Threshold metadata carried into the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdUsed {
    pub mode: ThresholdMode,
    pub pt: f64,
    /// `k` for case-specific runs, the σ multiplier for global runs.
    pub k: f64,
    pub half_shift: f64,
}
