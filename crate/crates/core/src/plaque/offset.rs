//! Moves the two plaque regions towards each other so the closed plaque mesh
//! excludes the normal wall thickness.

use nalgebra::Point3;

use crate::mesh::{distance_to_mesh, TriangleMesh};

use super::{PlaqueError, PlaqueRegionPair};

/// The shifted regions, oriented as parts of the plaque boundary: the outer
/// shell keeps the outer wall orientation and the inner shell faces the lumen.
#[derive(Debug, Clone)]
pub struct OffsetShells {
    pub inner_shell: TriangleMesh,
    pub outer_shell: TriangleMesh,
    /// Applied displacement per shell vertex (mm).
    pub inner_shifts: Vec<f64>,
    pub outer_shifts: Vec<f64>,
}

/// Shift for a vertex whose local wall thickness is `gap`.
fn clamped_shift(half_shift: f64, gap: f64, epsilon: f64) -> f64 {
    if gap < 2.0 * half_shift {
        (0.5 * gap - epsilon).clamp(0.0, half_shift)
    } else {
        half_shift
    }
}

/// Moves outer-region vertices by `-half_shift` and inner-region vertices by
/// `+half_shift` along the area-weighted normals of the full wall surfaces.
/// Where the wall is thinner than `2·half_shift` the shift becomes
/// `gap/2 - epsilon`.
pub fn offset_regions(
    pair: &PlaqueRegionPair,
    inner: &TriangleMesh,
    outer: &TriangleMesh,
    epsilon: f64,
) -> Result<OffsetShells, PlaqueError> {
    let h = pair.half_shift;
    if !(h >= 0.0 && h.is_finite()) {
        return Err(PlaqueError::InvalidInput(format!("half shift must be >= 0, got {h}")));
    }
    let outer_gap = distance_to_mesh(&pair.outer_region.mesh.vertices, inner)?;
    let inner_gap = distance_to_mesh(&pair.inner_region.mesh.vertices, outer)?;
    let outer_normals = outer.vertex_normals();
    let inner_normals = inner.vertex_normals();

    let shift = |region: &crate::mesh::Submesh, gaps: &[f64], normals: &[nalgebra::Vector3<f64>], sign: f64| {
        let mut mesh = region.mesh.clone();
        mesh.clear_attributes();
        let shifts: Vec<f64> = gaps.iter().map(|&g| clamped_shift(h, g, epsilon)).collect();
        for (local, p) in mesh.vertices.iter_mut().enumerate() {
            let n = normals[region.vertex_map[local]];
            *p = Point3::from(p.coords + n * (sign * shifts[local]));
        }
        (mesh, shifts)
    };
    let (outer_shell, outer_shifts) = shift(&pair.outer_region, &outer_gap, &outer_normals, -1.0);
    let (mut inner_shell, inner_shifts) = shift(&pair.inner_region, &inner_gap, &inner_normals, 1.0);
    inner_shell.flip();
    Ok(OffsetShells { inner_shell, outer_shell, inner_shifts, outer_shifts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::{icosphere, planar_grid};
    use crate::mesh::Submesh;

    fn pair(inner: &TriangleMesh, outer: &TriangleMesh, half_shift: f64) -> PlaqueRegionPair {
        PlaqueRegionPair { outer_region: Submesh::whole(outer), inner_region: Submesh::whole(inner), half_shift }
    }

    #[test]
    fn zero_shift_is_identity() {
        let inner = icosphere(1.0, 2);
        let outer = icosphere(1.4, 2);
        let shells = offset_regions(&pair(&inner, &outer, 0.0), &inner, &outer, 0.01).unwrap();
        let p = pair(&inner, &outer, 0.0);
        for (local, v) in shells.outer_shell.vertices.iter().enumerate() {
            assert_eq!(*v, outer.vertices[p.outer_region.vertex_map[local]]);
        }
        for (local, v) in shells.inner_shell.vertices.iter().enumerate() {
            assert_eq!(*v, inner.vertices[p.inner_region.vertex_map[local]]);
        }
        let mut flipped = p.inner_region.mesh.clone();
        flipped.flip();
        assert_eq!(shells.inner_shell.triangles, flipped.triangles);
    }

    #[test]
    fn concentric_spheres_meet_halfway() {
        let inner = icosphere(1.0, 4);
        let outer = icosphere(1.4, 4);
        let shells = offset_regions(&pair(&inner, &outer, 0.1), &inner, &outer, 0.01).unwrap();
        for p in &shells.outer_shell.vertices {
            assert!((p.coords.norm() - 1.3).abs() < 0.013);
        }
        for p in &shells.inner_shell.vertices {
            assert!((p.coords.norm() - 1.1).abs() < 0.011);
        }
    }

    #[test]
    fn tapered_wall_is_clamped_without_flips() {
        // flat wall whose thickness tapers from 1.5 mm in the middle to 0.1 mm at the rim
        let n = 20;
        let inner = planar_grid(n, 10.0);
        let mut outer = planar_grid(n, 10.0);
        for p in &mut outer.vertices {
            let r = ((p.x - 5.0).abs()).max((p.y - 5.0).abs()) / 5.0;
            p.z = 0.1 + 1.4 * (1.0 - r);
        }
        let h = 0.49;
        let shells = offset_regions(&pair(&inner, &outer, h), &inner, &outer, 0.01).unwrap();
        assert!(shells.outer_shifts.iter().any(|&s| s < h));
        assert!(shells.outer_shifts.iter().all(|&s| (0.0..=h).contains(&s)));
        for t in 0..outer.triangles.len() {
            assert!(shells.outer_shell.triangle_cross(t).dot(&outer.triangle_cross(t)) > 0.0);
            assert!(shells.inner_shell.triangle_cross(t).z < 0.0);
        }
        // the shells never cross
        for (v, p) in shells.outer_shell.vertices.iter().enumerate() {
            assert!(p.z > shells.inner_shell.vertices[v].z);
        }
    }

    #[test]
    fn clamp_rule() {
        assert_eq!(clamped_shift(0.49, 2.0, 0.01), 0.49);
        assert!((clamped_shift(0.49, 0.5, 0.01) - 0.24).abs() < 1e-15);
        assert_eq!(clamped_shift(0.49, 0.01, 0.01), 0.0);
    }
}
