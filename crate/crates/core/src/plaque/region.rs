//! Plaque regions on the outer wall and their counterpart on the inner wall.

use std::collections::HashSet;

use crate::mesh::topology::triangle_components;
use crate::mesh::{Submesh, TriangleBvh, TriangleMesh};

use super::PlaqueError;

/// Matching plaque regions on both wall surfaces.
#[derive(Debug, Clone)]
pub struct PlaqueRegionPair {
    pub outer_region: Submesh,
    pub inner_region: Submesh,
    /// How far each region is moved towards the other (mm).
    pub half_shift: f64,
}

/// All components of above-threshold triangles with area at least `min_area`,
/// largest first. A triangle qualifies when all three vertices have
/// `distances[v] > pt`.
pub fn detect_plaque_regions(outer: &TriangleMesh, distances: &[f64], pt: f64, min_area: f64) -> Vec<Submesh> {
    assert_eq!(distances.len(), outer.vertices.len(), "one distance per outer vertex");
    let above: Vec<bool> = distances.iter().map(|&d| d > pt).collect();
    regions_from_mask(outer, &above, min_area)
}

/// Like [`detect_plaque_regions`] but with the per-vertex plaque mask given.
pub fn regions_from_mask(outer: &TriangleMesh, above: &[bool], min_area: f64) -> Vec<Submesh> {
    let mut regions: Vec<Submesh> = triangle_components(outer, |t| outer.triangles[t].iter().all(|&v| above[v]))
        .iter()
        .map(|tris| Submesh::extract(outer, tris))
        .filter(|s| s.area() >= min_area)
        .collect();
    // stable sort keeps the lowest-triangle-index order among equal areas
    regions.sort_by(|a, b| b.area().total_cmp(&a.area()));
    regions
}

/// Largest qualifying plaque region, or `None` when nothing survives filtering.
pub fn detect_plaque_region(outer: &TriangleMesh, distances: &[f64], pt: f64, min_area: f64) -> Option<Submesh> {
    detect_plaque_regions(outer, distances, pt, min_area).into_iter().next()
}

/// Largest inner-wall component whose vertices all have their closest outer
/// wall point inside `outer_region`.
pub fn project_to_inner(
    outer: &TriangleMesh,
    outer_region: &Submesh,
    inner: &TriangleMesh,
) -> Result<Submesh, PlaqueError> {
    if outer_region.mesh.is_empty() {
        return Err(PlaqueError::InvalidInput("outer plaque region is empty".into()));
    }
    let bvh = TriangleBvh::new(outer)?;
    let region: HashSet<usize> = outer_region.triangle_map.iter().copied().collect();
    let hits = bvh.closest_many(&inner.vertices);
    let inside: Vec<bool> = hits.iter().map(|h| region.contains(&h.triangle)).collect();
    let best = triangle_components(inner, |t| inner.triangles[t].iter().all(|&v| inside[v]))
        .iter()
        .map(|tris| Submesh::extract(inner, tris))
        .fold(None::<Submesh>, |best, s| match best {
            Some(b) if b.area() >= s.area() => Some(b),
            _ => Some(s),
        });
    best.ok_or(PlaqueError::NoCorrespondence)
}
