//! Least-squares conformal map with two pinned boundary vertices.

use nalgebra::{DMatrix, Matrix2, Point2, Vector2};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use serde::Serialize;

use crate::mesh::{TriangleMesh, VWT};

use super::cut::cut_to_disk;
use super::ordering::reverse_cuthill_mckee;
use super::{PinnedPair, UnfoldError, UnfoldedPatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Cholesky,
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnfoldOptions {
    /// Above this many vertices the normal equations are solved iteratively.
    pub direct_solver_limit: usize,
    /// Relative residual at which conjugate gradient stops.
    pub cg_tolerance: f64,
}

impl Default for UnfoldOptions {
    fn default() -> Self {
        UnfoldOptions { direct_solver_limit: 50_000, cg_tolerance: 1e-12 }
    }
}

/// Flattens a region carrying a `vwt` vertex channel with default options.
pub fn lscm_unfold(region: &TriangleMesh) -> Result<UnfoldedPatch, UnfoldError> {
    lscm_unfold_with(region, &UnfoldOptions::default())
}

/// Flattens `region` by minimizing the least-squares conformal energy with the
/// farthest pair of boundary vertices pinned to (0,0) and (D,0). The result is
/// then scaled uniformly about the origin so its area matches the 3D area.
pub fn lscm_unfold_with(region: &TriangleMesh, options: &UnfoldOptions) -> Result<UnfoldedPatch, UnfoldError> {
    let vwt_source = region
        .attribute(VWT)
        .ok_or_else(|| UnfoldError::InvalidInput(format!("region has no `{VWT}` vertex channel")))?
        .to_vec();
    let disk = cut_to_disk(region)?;
    let mesh = &disk.mesh;
    let n = mesh.vertices.len();

    let frames: Vec<LocalTriangle> = (0..mesh.triangles.len()).map(|t| LocalTriangle::new(mesh, t)).collect();
    if let Some(t) = frames.iter().position(|f| !(f.area > 0.0)) {
        return Err(UnfoldError::InvalidInput(format!("triangle {t} has zero area")));
    }
    let area3d: f64 = frames.iter().map(|f| f.area).sum();

    let (pin_a, pin_b, distance) = farthest_pair(mesh, &disk.boundary);
    if !(distance > 0.0) {
        return Err(UnfoldError::Solver {
            reason: "pinned vertices coincide".into(),
            diagnostic: format!("distance {distance:e}"),
        });
    }
    let mut uv = vec![Vector2::zeros(); n];
    uv[pin_b] = Vector2::new(distance, 0.0);

    // free vertices in bandwidth-reducing order, two unknowns (u, v) each
    let pinned = |v: usize| v == pin_a || v == pin_b;
    let mut adjacency = vec![Vec::new(); n];
    for tri in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            if !pinned(a) && !pinned(b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
    }
    adjacency.iter_mut().for_each(|l| {
        l.sort_unstable();
        l.dedup();
    });
    let mut slot = vec![usize::MAX; n];
    let mut free = 0;
    for v in reverse_cuthill_mckee(&adjacency) {
        if !pinned(v) {
            slot[v] = free;
            free += 1;
        }
    }

    let solver = if n > options.direct_solver_limit { SolverKind::ConjugateGradient } else { SolverKind::Cholesky };
    if free > 0 {
        let (matrix, rhs) = normal_equations(&frames, &slot, free, &uv);
        let x = match solver {
            SolverKind::Cholesky => solve_cholesky(&matrix, &rhs)?,
            SolverKind::ConjugateGradient => solve_cg(&matrix, &rhs, options.cg_tolerance)?,
        };
        for v in 0..n {
            if slot[v] != usize::MAX {
                uv[v] = Vector2::new(x[2 * slot[v]], x[2 * slot[v] + 1]);
            }
        }
        if uv.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(UnfoldError::Solver {
                reason: "solution is not finite".into(),
                diagnostic: diagonal_diagnostic(&matrix),
            });
        }
    }

    let area2d: f64 = frames.iter().map(|f| f.mapped_signed_area(&uv)).sum();
    if !(area2d > 0.0) {
        return Err(UnfoldError::Solver {
            reason: "parameterization collapsed".into(),
            diagnostic: format!("2D area {area2d:e} for 3D area {area3d:e}"),
        });
    }
    let scale = (area3d / area2d).sqrt();
    uv.iter_mut().for_each(|p| *p *= scale);

    let energy = frames.iter().map(|f| f.energy(&uv)).sum::<f64>() / area3d;
    let distortion: Vec<f64> = frames.iter().map(|f| f.distortion(&uv)).collect();
    let flipped_triangles = frames.iter().filter(|f| !(f.mapped_signed_area(&uv) > 0.0)).count();

    let (lo, hi) = (disk.source_vertices[pin_a], disk.source_vertices[pin_b]);
    Ok(UnfoldedPatch {
        vertices2d: uv.into_iter().map(Point2::from).collect(),
        triangles: mesh.triangles.clone(),
        vwt: disk.source_vertices.iter().map(|&s| vwt_source[s]).collect(),
        distortion,
        source_vertices: disk.source_vertices,
        pinned: PinnedPair { vertices: [lo, hi], distance },
        cut_paths: disk.cut_paths,
        energy,
        scale,
        flipped_triangles,
        solver,
    })
}

/// Farthest pair of loop vertices, the lower vertex index first. Near-ties
/// (relative 1e-9) keep the pair found first along the loop, so rounding
/// differences under rigid motions do not move the pins.
fn farthest_pair(mesh: &TriangleMesh, boundary: &[usize]) -> (usize, usize, f64) {
    let mut best = (boundary[0], boundary[0], 0.0);
    for (i, &a) in boundary.iter().enumerate() {
        for &b in &boundary[i + 1..] {
            let d = (mesh.vertices[a] - mesh.vertices[b]).norm_squared();
            if d > best.2 * (1.0 + 1e-9) {
                best = (a.min(b), a.max(b), d);
            }
        }
    }
    (best.0, best.1, best.2.sqrt())
}

/// A triangle in its own orthonormal frame, as complex corner coordinates.
struct LocalTriangle {
    corners: [usize; 3],
    local: [Vector2<f64>; 3],
    /// Conformality coefficients: the energy of the map is |Σ m_j U_j|².
    coeffs: [(f64, f64); 3],
    area: f64,
}

impl LocalTriangle {
    fn new(mesh: &TriangleMesh, t: usize) -> Self {
        let [p0, p1, p2] = mesh.corners(t);
        let e1 = p1 - p0;
        let e2 = p2 - p0;
        let len = e1.norm();
        let cross = e1.cross(&e2).norm();
        let local = if len > 0.0 {
            [Vector2::zeros(), Vector2::new(len, 0.0), Vector2::new(e1.dot(&e2) / len, cross / len)]
        } else {
            [Vector2::zeros(); 3]
        };
        let area = 0.5 * cross;
        // m_j = (z_{j+2} − z_{j+1}) / sqrt(8A); holomorphic maps give zero energy
        let norm = if area > 0.0 { (8.0 * area).sqrt() } else { 1.0 };
        let coeffs = [0, 1, 2].map(|j| {
            let w = local[(j + 2) % 3] - local[(j + 1) % 3];
            (w.x / norm, w.y / norm)
        });
        LocalTriangle { corners: mesh.triangles[t], local, coeffs, area }
    }

    fn energy(&self, uv: &[Vector2<f64>]) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, &(a, b)) in self.coeffs.iter().enumerate() {
            let p = uv[self.corners[j]];
            re += a * p.x - b * p.y;
            im += b * p.x + a * p.y;
        }
        re * re + im * im
    }

    fn mapped_signed_area(&self, uv: &[Vector2<f64>]) -> f64 {
        let [a, b, c] = self.corners.map(|v| uv[v]);
        0.5 * (b - a).perp(&(c - a))
    }

    fn jacobian(&self, uv: &[Vector2<f64>]) -> Option<Matrix2<f64>> {
        let [a, b, c] = self.corners.map(|v| uv[v]);
        let image = Matrix2::from_columns(&[b - a, c - a]);
        let domain = Matrix2::from_columns(&[self.local[1] - self.local[0], self.local[2] - self.local[0]]);
        domain.try_inverse().map(|inv| image * inv)
    }

    /// σ_max / σ_min of the map from the 3D triangle to its image.
    fn distortion(&self, uv: &[Vector2<f64>]) -> f64 {
        let Some(j) = self.jacobian(uv) else { return f64::INFINITY };
        let e = 0.5 * (j[(0, 0)] + j[(1, 1)]);
        let f = 0.5 * (j[(0, 0)] - j[(1, 1)]);
        let g = 0.5 * (j[(1, 0)] + j[(0, 1)]);
        let h = 0.5 * (j[(1, 0)] - j[(0, 1)]);
        let q = e.hypot(h);
        let r = f.hypot(g);
        let smaller = (q - r).abs();
        if smaller > 0.0 {
            ((q + r) / smaller).max(1.0)
        } else {
            f64::INFINITY
        }
    }
}

/// Assembles `AᵀA x = Aᵀb` for the free unknowns, with pinned positions
/// moved to the right-hand side.
fn normal_equations(
    frames: &[LocalTriangle],
    slot: &[usize],
    free: usize,
    pinned_uv: &[Vector2<f64>],
) -> (CscMatrix<f64>, Vec<f64>) {
    let mut coo = CooMatrix::new(2 * free, 2 * free);
    let mut rhs = vec![0.0; 2 * free];
    for f in frames {
        // two real rows per triangle over (u_j, v_j) of its corners
        let mut rows = [[0.0; 6]; 2];
        for (j, &(a, b)) in f.coeffs.iter().enumerate() {
            rows[0][2 * j] = a;
            rows[0][2 * j + 1] = -b;
            rows[1][2 * j] = b;
            rows[1][2 * j + 1] = a;
        }
        for row in &rows {
            for p in 0..6 {
                let vp = f.corners[p / 2];
                if slot[vp] == usize::MAX {
                    continue;
                }
                let ip = 2 * slot[vp] + p % 2;
                for q in 0..6 {
                    let value = row[p] * row[q];
                    let vq = f.corners[q / 2];
                    if slot[vq] == usize::MAX {
                        rhs[ip] -= value * pinned_uv[vq][q % 2];
                    } else {
                        coo.push(ip, 2 * slot[vq] + q % 2, value);
                    }
                }
            }
        }
    }
    (CscMatrix::from(&coo), rhs)
}

fn diagonal_diagnostic(matrix: &CscMatrix<f64>) -> String {
    let mut diag = vec![0.0f64; matrix.nrows()];
    for (i, j, v) in matrix.triplet_iter() {
        if i == j {
            diag[i] += *v;
        }
    }
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let zero = diag.iter().filter(|&&d| d <= 0.0).count();
    format!("{} unknowns, diagonal range [{min:e}, {max:e}], {zero} non-positive diagonal entries", diag.len())
}

fn solve_cholesky(matrix: &CscMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>, UnfoldError> {
    let factor = CscCholesky::factor(matrix).map_err(|e| UnfoldError::Solver {
        reason: format!("rank-deficient normal equations: {e}"),
        diagnostic: diagonal_diagnostic(matrix),
    })?;
    let b = DMatrix::from_column_slice(rhs.len(), 1, rhs);
    Ok(factor.solve(&b).column(0).iter().copied().collect())
}

fn multiply(matrix: &CscMatrix<f64>, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (col, lane) in matrix.col_iter().enumerate() {
        let xc = x[col];
        for (&row, &v) in lane.row_indices().iter().zip(lane.values()) {
            out[row] += v * xc;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradient.
fn solve_cg(matrix: &CscMatrix<f64>, rhs: &[f64], tolerance: f64) -> Result<Vec<f64>, UnfoldError> {
    let n = rhs.len();
    let mut inv_diag = vec![0.0; n];
    for (i, j, v) in matrix.triplet_iter() {
        if i == j {
            inv_diag[i] += *v;
        }
    }
    if inv_diag.iter().any(|&d| !(d > 0.0)) {
        return Err(UnfoldError::Solver {
            reason: "normal equations have a non-positive diagonal".into(),
            diagnostic: diagonal_diagnostic(matrix),
        });
    }
    inv_diag.iter_mut().for_each(|d| *d = 1.0 / *d);

    let b_norm = dot(rhs, rhs).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let max_iterations = (20 * n).max(1000);
    for _ in 0..max_iterations {
        multiply(matrix, &p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= tolerance * b_norm {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(UnfoldError::Solver {
        reason: format!("conjugate gradient did not reach tolerance {tolerance:e} in {max_iterations} iterations"),
        diagnostic: diagonal_diagnostic(matrix),
    })
}
