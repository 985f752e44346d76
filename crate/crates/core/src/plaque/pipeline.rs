//! The full extraction: wall surfaces, distance encoding, thresholding,
//! region detection, shell construction and repair.

use serde::{Deserialize, Serialize};

use crate::mesh::{
    distance_to_mesh, laplacian_smooth, marching_cubes, Submesh, TriangleMesh, CROP_BOUNDARY, DIST_TO_INNER, VWT,
};
use crate::volume::{LabelVolume, LUMEN, WALL};

use super::threshold::{POPULATION_MEAN_VWT, POPULATION_SIGMA_MULTIPLIER, POPULATION_SIGMA_VWT};
use super::{
    case_specific_threshold, global_threshold_with, make_watertight, offset_regions,
    project_to_inner, regions_from_mask, stitch_borders, PlaqueError, PlaqueMesh, PlaqueRegionPair, ThresholdMode, ThresholdTrace,
    ThresholdUsed, CLAMP_EPSILON_MM, DEFAULT_K, MIN_REGION_AREA_MM2,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: ThresholdMode,
    pub k: f64,
    pub global_mean: f64,
    pub global_sigma: f64,
    pub global_multiplier: f64,
    pub smooth_iterations: usize,
    pub smooth_relaxation: f64,
    pub min_region_area: f64,
    pub clamp_epsilon: f64,
    /// Keep intermediate meshes in the outcome.
    pub keep_stages: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: ThresholdMode::CaseSpecific,
            k: DEFAULT_K,
            global_mean: POPULATION_MEAN_VWT,
            global_sigma: POPULATION_SIGMA_VWT,
            global_multiplier: POPULATION_SIGMA_MULTIPLIER,
            smooth_iterations: 10,
            smooth_relaxation: 0.2,
            min_region_area: MIN_REGION_AREA_MM2,
            clamp_epsilon: CLAMP_EPSILON_MM,
            keep_stages: false,
        }
    }
}

impl PipelineConfig {
    pub fn with_mode(mut self, mode: ThresholdMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<(), PlaqueError> {
        let bad = |m: &str| Err(PlaqueError::InvalidInput(m.to_string()));
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return bad("k must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.smooth_relaxation) {
            return bad("smoothing relaxation must lie in [0, 1]");
        }
        if !(self.min_region_area >= 0.0) {
            return bad("minimum region area must be >= 0");
        }
        if !(self.global_mean > 0.0 && self.global_sigma >= 0.0 && self.global_multiplier >= 0.0) {
            return bad("global threshold parameters must be positive");
        }
        if !(self.clamp_epsilon >= 0.0) {
            return bad("clamp epsilon must be >= 0");
        }
        Ok(())
    }
}

/// Smoothed inner (lumen) and outer (lumen ∪ wall) surfaces.
#[derive(Debug, Clone)]
pub struct WallSurfaces {
    pub inner: TriangleMesh,
    pub outer: TriangleMesh,
}

pub fn wall_surfaces(volume: &LabelVolume, iterations: usize, relaxation: f64) -> Result<WallSurfaces, PlaqueError> {
    let inner = marching_cubes(volume, &[LUMEN])?;
    let outer = marching_cubes(volume, &[LUMEN, WALL])?;
    Ok(WallSurfaces {
        inner: laplacian_smooth(&inner, iterations, relaxation),
        outer: laplacian_smooth(&outer, iterations, relaxation),
    })
}

/// A named intermediate mesh.
#[derive(Debug, Clone)]
pub struct StageMesh {
    pub name: &'static str,
    pub mesh: TriangleMesh,
}

#[derive(Debug, Clone)]
pub struct ExtractionOutcome {
    pub threshold: ThresholdUsed,
    /// Iteration trace over the eligible outer vertices (see `eligible`).
    pub trace: Option<ThresholdTrace>,
    /// Outer vertices that take part in thresholding; vertices on the cut
    /// ends of the vessel are left out.
    pub eligible: Vec<usize>,
    /// Outer-wall distance to the inner wall per outer vertex.
    pub outer_distances: Vec<f64>,
    /// Outer plaque region carrying the `vwt` channel.
    pub outer_region: Option<Submesh>,
    pub plaque: Option<PlaqueMesh>,
    /// Boundary loops the stitcher could not pair.
    pub open_loops: usize,
    pub stages: Vec<StageMesh>,
}

impl ExtractionOutcome {
    pub fn stage(&self, name: &str) -> Option<&TriangleMesh> {
        self.stages.iter().find(|s| s.name == name).map(|s| &s.mesh)
    }
}

/// Runs the whole pipeline on a label volume.
pub fn extract_plaque(volume: &LabelVolume, config: &PipelineConfig) -> Result<ExtractionOutcome, PlaqueError> {
    config.validate()?;
    let surfaces = wall_surfaces(volume, config.smooth_iterations, config.smooth_relaxation)
        .map_err(PlaqueError::at("surface"))?;
    extract_from_surfaces(&surfaces, config)
}

/// Runs everything after surface construction.
pub fn extract_from_surfaces(surfaces: &WallSurfaces, config: &PipelineConfig) -> Result<ExtractionOutcome, PlaqueError> {
    config.validate()?;
    let WallSurfaces { inner, outer } = surfaces;
    let mut stages = Vec::new();
    let mut keep = |name: &'static str, mesh: &TriangleMesh| {
        if config.keep_stages {
            stages.push(StageMesh { name, mesh: mesh.clone() });
        }
    };
    keep("outer", outer);

    let distances = distance_to_mesh(&outer.vertices, inner).map_err(|e| PlaqueError::at("distance")(e.into()))?;
    let mut encoded = outer.clone();
    encoded.set_attribute(DIST_TO_INNER, distances.clone())?;
    keep("outer_dist", &encoded);

    // cut ends of the vessel carry no wall-thickness information
    let eligible: Vec<usize> = match outer.attribute(CROP_BOUNDARY) {
        Some(flags) => (0..flags.len()).filter(|&v| flags[v] == 0.0).collect(),
        None => (0..distances.len()).collect(),
    };
    let eligible_distances: Vec<f64> = eligible.iter().map(|&v| distances[v]).collect();

    let (threshold, trace) = match config.mode {
        ThresholdMode::Global => {
            let pt = global_threshold_with(config.global_mean, config.global_sigma, config.global_multiplier);
            let used = ThresholdUsed {
                mode: ThresholdMode::Global,
                pt,
                k: config.global_multiplier,
                half_shift: config.global_mean / 2.0,
            };
            (used, None)
        }
        ThresholdMode::CaseSpecific => {
            let trace = case_specific_threshold(&eligible_distances, config.k).map_err(PlaqueError::at("threshold"))?;
            let last = trace.converged();
            let used =
                ThresholdUsed { mode: ThresholdMode::CaseSpecific, pt: last.pt, k: config.k, half_shift: last.mu / 2.0 };
            (used, Some(trace))
        }
    };

    let mut outcome = ExtractionOutcome {
        threshold,
        trace,
        eligible: eligible.clone(),
        outer_distances: distances.clone(),
        outer_region: None,
        plaque: None,
        open_loops: 0,
        stages: Vec::new(),
    };

    let mut vwt_outer = outer.clone();
    vwt_outer.set_attribute(VWT, distances.clone())?;
    let mut above = vec![false; distances.len()];
    for &v in &eligible {
        above[v] = distances[v] > threshold.pt;
    }
    let Some(outer_region) = regions_from_mask(&vwt_outer, &above, config.min_region_area).into_iter().next() else {
        outcome.stages = stages;
        return Ok(outcome);
    };
    keep("region_outer", &outer_region.mesh);

    let inner_region = project_to_inner(outer, &outer_region, inner).map_err(PlaqueError::at("projection"))?;
    keep("region_inner", &inner_region.mesh);

    let pair = PlaqueRegionPair { outer_region, inner_region, half_shift: threshold.half_shift };
    let shells = offset_regions(&pair, inner, outer, config.clamp_epsilon).map_err(PlaqueError::at("offset"))?;
    let mut both = shells.outer_shell.clone();
    both.append(&shells.inner_shell);
    keep("shells", &both);

    let stitched = stitch_borders(&shells.inner_shell, &shells.outer_shell).map_err(PlaqueError::at("stitch"))?;
    keep("stitched", &stitched.mesh);

    let mut plaque = make_watertight(&stitched.mesh).map_err(PlaqueError::at("repair"))?;
    plaque.threshold_used = Some(threshold);
    keep("plaque", &plaque.mesh);

    outcome.open_loops = stitched.open_loops.len();
    outcome.outer_region = Some(pair.outer_region);
    outcome.plaque = Some(plaque);
    outcome.stages = stages;
    Ok(outcome)
}
