//! Geometric plaque parameters, voxel intensities inside the plaque and the
//! per-run report.

pub mod histogram;
pub mod inside;
pub mod report;

pub use histogram::{intensity_histogram, Histogram, HistogramBin};
pub use inside::{voxels_inside, winding_number_exact, WindingTree};
pub use report::{build_report, PlaqueReport, PlaqueStatus, UnfoldSummary, REPORT_SCHEMA_VERSION};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{max_extent, mesh_area, mesh_volume, MeshError, TriangleMesh};
use crate::plaque::PlaqueMesh;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("intensity volume does not match the label volume: {0}")]
    GeometryMismatch(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Size and shape of a closed plaque mesh (mm, mm², mm³).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricParameters {
    pub volume_mm3: f64,
    pub area_mm2: f64,
    /// Diameter of the sphere with the plaque volume.
    pub d_sphere_mm: f64,
    /// Diameter of the circle with the plaque surface area.
    pub d_circle_mm: f64,
    /// 36πV²/A³; 1 for a sphere.
    pub compactness: f64,
    pub max_extent_mm: f64,
}

pub fn sphere_diameter(volume: f64) -> f64 {
    (6.0 * volume / std::f64::consts::PI).cbrt()
}

pub fn circle_diameter(area: f64) -> f64 {
    2.0 * (area / std::f64::consts::PI).sqrt()
}

pub fn compactness(volume: f64, area: f64) -> f64 {
    36.0 * std::f64::consts::PI * volume * volume / (area * area * area)
}

pub fn geometric_parameters(plaque: &PlaqueMesh) -> Result<GeometricParameters, AnalysisError> {
    mesh_parameters(&plaque.mesh)
}

/// Parameters of any closed, consistently oriented mesh.
pub fn mesh_parameters(mesh: &TriangleMesh) -> Result<GeometricParameters, AnalysisError> {
    let volume = mesh_volume(mesh)?;
    let area = mesh_area(mesh);
    Ok(GeometricParameters {
        volume_mm3: volume,
        area_mm2: area,
        d_sphere_mm: sphere_diameter(volume),
        d_circle_mm: circle_diameter(area),
        compactness: compactness(volume, area),
        max_extent_mm: max_extent(mesh),
    })
}
