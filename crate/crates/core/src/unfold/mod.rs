//! Flattening of the outer-wall plaque region into the plane and rendering of
//! the wall-thickness map.

pub mod cut;
pub mod lscm;
pub mod ordering;
pub mod render;

pub use cut::{cut_to_disk, DiskCut};
pub use lscm::{lscm_unfold, lscm_unfold_with, SolverKind, UnfoldOptions};
pub use render::{render_unfolded, viridis};

use nalgebra::{Point2, Point3};
use serde::Serialize;
use thiserror::Error;

use crate::mesh::ply::{encode_ply, PlyFormat};
use crate::mesh::{MeshError, TriangleMesh, VWT};

/// Face channel holding the per-triangle distortion in the unfolded PLY.
pub const DISTORTION: &str = "distortion";

#[derive(Debug, Error)]
pub enum UnfoldError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("topology: {0}")]
    Topology(String),
    #[error("solver failed: {reason} ({diagnostic})")]
    Solver { reason: String, diagnostic: String },
    #[error("render: {0}")]
    Render(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// The two boundary vertices held fixed during the solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinnedPair {
    /// Source-region vertex indices; the first is placed at the origin.
    pub vertices: [usize; 2],
    /// Their 3D distance, the x coordinate of the second pin before rescaling (mm).
    pub distance: f64,
}

/// A region flattened to 2D.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedPatch {
    pub vertices2d: Vec<Point2<f64>>,
    pub triangles: Vec<[usize; 3]>,
    pub vwt: Vec<f64>,
    /// Quasi-conformal ratio σ_max/σ_min of each triangle, ≥ 1.
    pub distortion: Vec<f64>,
    /// Source vertex of each 2D vertex. Vertices on a cut appear more than once.
    pub source_vertices: Vec<usize>,
    pub pinned: PinnedPair,
    /// Cuts applied to reach disk topology, as source vertex paths.
    pub cut_paths: Vec<Vec<usize>>,
    /// Residual conformal energy divided by the 3D area.
    pub energy: f64,
    /// Uniform factor applied after the solve so the 2D area equals the 3D area.
    pub scale: f64,
    pub flipped_triangles: usize,
    pub solver: SolverKind,
}

impl UnfoldedPatch {
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices2d[v]);
        0.5 * (b - a).perp(&(c - a))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn mean_distortion(&self) -> f64 {
        if self.distortion.is_empty() {
            return f64::NAN;
        }
        self.distortion.iter().sum::<f64>() / self.distortion.len() as f64
    }

    pub fn max_distortion(&self) -> f64 {
        self.distortion.iter().copied().fold(f64::NAN, f64::max)
    }

    /// The patch as a planar mesh (z = 0) carrying the wall thickness per vertex.
    pub fn to_mesh(&self) -> Result<TriangleMesh, UnfoldError> {
        let vertices = self.vertices2d.iter().map(|p| Point3::new(p.x, p.y, 0.0)).collect();
        let mut mesh = TriangleMesh::new(vertices, self.triangles.clone());
        mesh.set_attribute(VWT, self.vwt.clone())?;
        Ok(mesh)
    }

    /// PLY bytes with the `vwt` vertex channel and the `distortion` face channel.
    pub fn encode_ply(&self, format: PlyFormat) -> Result<Vec<u8>, UnfoldError> {
        let mesh = self.to_mesh()?;
        Ok(encode_ply(&mesh, &[(DISTORTION, &self.distortion)], format)?)
    }
}
