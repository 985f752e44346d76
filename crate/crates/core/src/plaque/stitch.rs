//! Joins the two shells along their boundary loops with triangle bands.

use nalgebra::Point3;

use crate::mesh::{boundary_loops, TriangleMesh};

use super::PlaqueError;

#[derive(Debug, Clone)]
pub struct StitchResult {
    /// Outer shell vertices first, then the inner shell, then the bands.
    pub mesh: TriangleMesh,
    pub stitched_pairs: usize,
    /// Loops (in output vertex indices) left open for the repair stage.
    pub open_loops: Vec<Vec<usize>>,
    /// Bands discarded because all their triangles had zero area.
    pub rejected_bands: usize,
}

impl StitchResult {
    pub fn has_open_loops(&self) -> bool {
        !self.open_loops.is_empty()
    }
}

fn centroid(mesh: &TriangleMesh, cycle: &[usize]) -> Point3<f64> {
    let sum = cycle.iter().fold(nalgebra::Vector3::zeros(), |acc, &v| acc + mesh.vertices[v].coords);
    Point3::from(sum / cycle.len() as f64)
}

/// Pairs every outer loop with an inner loop by increasing centroid distance
/// and zips each pair with a band of short new edges. Loops without a partner stay open. Two closed shells
/// are returned side by side.
pub fn stitch_borders(inner_shell: &TriangleMesh, outer_shell: &TriangleMesh) -> Result<StitchResult, PlaqueError> {
    let outer_loops = boundary_loops(outer_shell)?;
    let inner_loops = boundary_loops(inner_shell)?;
    if let Some(l) = outer_loops.iter().chain(&inner_loops).find(|l| l.len() < 3) {
        return Err(PlaqueError::DegenerateLoop(l.len()));
    }

    let mut mesh = outer_shell.clone();
    mesh.clear_attributes();
    let mut inner = inner_shell.clone();
    inner.clear_attributes();
    let offset = mesh.append(&inner);
    let outer_loops: Vec<Vec<usize>> = outer_loops;
    let inner_loops: Vec<Vec<usize>> =
        inner_loops.into_iter().map(|l| l.into_iter().map(|v| v + offset).collect()).collect();

    let outer_centroids: Vec<Point3<f64>> = outer_loops.iter().map(|l| centroid(&mesh, l)).collect();
    let inner_centroids: Vec<Point3<f64>> = inner_loops.iter().map(|l| centroid(&mesh, l)).collect();
    let mut candidates = Vec::with_capacity(outer_loops.len() * inner_loops.len());
    for (i, a) in outer_centroids.iter().enumerate() {
        for (j, b) in inner_centroids.iter().enumerate() {
            candidates.push(((a - b).norm(), i, j));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut outer_used = vec![false; outer_loops.len()];
    let mut inner_used = vec![false; inner_loops.len()];
    let mut stitched_pairs = 0;
    let mut rejected_bands = 0;
    for (_, i, j) in candidates {
        if outer_used[i] || inner_used[j] {
            continue;
        }
        outer_used[i] = true;
        inner_used[j] = true;
        let band = zip_loops(&mesh.vertices, &outer_loops[i], &inner_loops[j]);
        let max_area = band.iter().map(|t| triangle_area(&mesh.vertices, t)).fold(0.0, f64::max);
        if max_area <= f64::EPSILON * loop_scale(&mesh.vertices, &outer_loops[i]) {
            rejected_bands += 1;
            outer_used[i] = false;
            inner_used[j] = false;
            continue;
        }
        mesh.triangles.extend(band);
        stitched_pairs += 1;
    }

    let open_loops = outer_loops
        .into_iter()
        .zip(outer_used)
        .chain(inner_loops.into_iter().zip(inner_used))
        .filter(|(_, used)| !used)
        .map(|(l, _)| l)
        .collect();
    Ok(StitchResult { mesh, stitched_pairs, open_loops, rejected_bands })
}

fn triangle_area(vertices: &[Point3<f64>], t: &[usize; 3]) -> f64 {
    let [a, b, c] = t.map(|i| vertices[i]);
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Squared perimeter of a loop, the reference for "zero area".
fn loop_scale(vertices: &[Point3<f64>], cycle: &[usize]) -> f64 {
    let perimeter: f64 =
        (0..cycle.len()).map(|i| (vertices[cycle[(i + 1) % cycle.len()]] - vertices[cycle[i]]).norm()).sum();
    perimeter * perimeter
}

/// Triangle band between an outer loop `a` and an inner loop `b`.
///
/// Both loops follow the edge direction of their own shells, so `b` is walked
/// backwards to run alongside `a`. Starting at the closest vertex pair, the
/// band minimizes the summed length of its new edges over all monotone
/// walks along the two loops.
pub(crate) fn zip_loops(vertices: &[Point3<f64>], a: &[usize], b: &[usize]) -> Vec<[usize; 3]> {
    let b_rev: Vec<usize> = b.iter().rev().copied().collect();
    let (na, nb) = (a.len(), b_rev.len());

    let mut start = (0, 0, f64::INFINITY);
    for (i, &va) in a.iter().enumerate() {
        for (j, &vb) in b_rev.iter().enumerate() {
            let d = (vertices[va] - vertices[vb]).norm_squared();
            if d < start.2 * (1.0 - 1e-9) {
                start = (i, j, d);
            }
        }
    }
    let (i0, j0, _) = start;
    let av = |i: usize| a[(i0 + i) % na];
    let bv = |j: usize| b_rev[(j0 + j) % nb];
    let dist = |i: usize, j: usize| (vertices[av(i)] - vertices[bv(j)]).norm();

    // cost[i][j]: cheapest band reaching diagonal (a_i, b_j); came_from_a records the last step
    let w = nb + 1;
    let mut cost = vec![f64::INFINITY; (na + 1) * w];
    let mut came_from_a = vec![false; (na + 1) * w];
    cost[0] = 0.0;
    for i in 0..=na {
        for j in 0..=nb {
            if i == 0 && j == 0 {
                continue;
            }
            let via_a = if i > 0 { cost[(i - 1) * w + j] } else { f64::INFINITY };
            let via_b = if j > 0 { cost[i * w + j - 1] } else { f64::INFINITY };
            // near-ties go to `a` so the choice survives uniform scaling
            let from_a = j == 0 || (i > 0 && via_a <= via_b + 1e-9 * via_a.max(via_b));
            came_from_a[i * w + j] = from_a;
            cost[i * w + j] = if from_a { via_a } else { via_b } + dist(i, j);
        }
    }

    let mut band = Vec::with_capacity(na + nb);
    let (mut i, mut j) = (na, nb);
    while i > 0 || j > 0 {
        if came_from_a[i * w + j] {
            band.push([av(i), av(i - 1), bv(j)]);
            i -= 1;
        } else {
            band.push([bv(j - 1), bv(j), av(i)]);
            j -= 1;
        }
    }
    band.reverse();
    band
}
