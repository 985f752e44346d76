//! Uniform (umbrella) Laplacian smoothing.

use nalgebra::{Point3, Vector3};

use super::TriangleMesh;

/// One-ring neighbors of every vertex, sorted and deduplicated.
pub fn vertex_neighbors(mesh: &TriangleMesh) -> Vec<Vec<usize>> {
    let mut neighbors = vec![Vec::new(); mesh.vertices.len()];
    for tri in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
    }
    for n in &mut neighbors {
        n.sort_unstable();
        n.dedup();
    }
    neighbors
}

/// Moves every vertex by `relaxation * (neighbor centroid - vertex)` per
/// iteration, updating all vertices simultaneously. Connectivity and
/// attributes are left untouched.
pub fn laplacian_smooth(mesh: &TriangleMesh, iterations: usize, relaxation: f64) -> TriangleMesh {
    assert!((0.0..=1.0).contains(&relaxation), "relaxation must lie in [0, 1]");
    let mut out = mesh.clone();
    if iterations == 0 || relaxation == 0.0 {
        return out;
    }
    let neighbors = vertex_neighbors(mesh);
    let mut next = out.vertices.clone();
    for _ in 0..iterations {
        for (v, ring) in neighbors.iter().enumerate() {
            if ring.is_empty() {
                continue;
            }
            let sum: Vector3<f64> = ring.iter().map(|&n| out.vertices[n].coords).sum();
            let centroid = Point3::from(sum / ring.len() as f64);
            next[v] = out.vertices[v] + (centroid - out.vertices[v]) * relaxation;
        }
        std::mem::swap(&mut out.vertices, &mut next);
    }
    out
}
