//! Topology checks and cutting of multiply-bounded regions into a disk.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use crate::mesh::topology::{edge_triangles, triangle_components};
use crate::mesh::{boundary_loops, euler_characteristic, is_consistently_oriented, TriangleMesh};

use super::UnfoldError;

/// A disk-topology copy of a region.
#[derive(Debug, Clone)]
pub struct DiskCut {
    pub mesh: TriangleMesh,
    /// Source vertex of each vertex of `mesh`.
    pub source_vertices: Vec<usize>,
    /// Vertex paths (source indices) along which the region was cut.
    pub cut_paths: Vec<Vec<usize>>,
    /// The single boundary loop of `mesh`.
    pub boundary: Vec<usize>,
}

/// Checks that `region` is a connected, orientable, open surface of genus 0
/// and cuts it along shortest boundary-to-boundary edge paths until one
/// boundary loop remains.
pub fn cut_to_disk(region: &TriangleMesh) -> Result<DiskCut, UnfoldError> {
    region.validate()?;
    if region.triangles.is_empty() {
        return Err(UnfoldError::InvalidInput("region has no triangles".into()));
    }
    let mut referenced = vec![false; region.vertices.len()];
    region.triangles.iter().flatten().for_each(|&v| referenced[v] = true);
    if let Some(v) = referenced.iter().position(|r| !r) {
        return Err(UnfoldError::InvalidInput(format!("vertex {v} is not used by any triangle")));
    }
    let components = triangle_components(region, |_| true).len();
    if components != 1 {
        return Err(UnfoldError::Topology(format!("region has {components} connected components")));
    }
    let mut loops = boundary_loops(region).map_err(|e| UnfoldError::Topology(e.to_string()))?;
    if loops.is_empty() {
        return Err(UnfoldError::Topology("region is closed (no boundary loop)".into()));
    }
    if !is_consistently_oriented(region) {
        return Err(UnfoldError::Topology("region is not consistently oriented".into()));
    }
    let chi = euler_characteristic(region);
    let genus2 = 2 - loops.len() as i64 - chi;
    if genus2 != 0 {
        return Err(UnfoldError::Topology(format!(
            "region has genus {} with {} boundary loops",
            genus2 as f64 / 2.0,
            loops.len()
        )));
    }

    let mut mesh = region.clone();
    mesh.clear_attributes();
    let mut source_vertices: Vec<usize> = (0..mesh.vertices.len()).collect();
    let mut cut_paths = Vec::new();
    while loops.len() > 1 {
        let path = shortest_cut(&mesh, &loops)?;
        cut_paths.push(path.iter().map(|&v| source_vertices[v]).collect());
        split_along(&mut mesh, &mut source_vertices, &path);
        loops = boundary_loops(&mesh).map_err(|e| UnfoldError::Topology(e.to_string()))?;
    }
    let boundary = loops.pop().expect("one loop remains");
    Ok(DiskCut { mesh, source_vertices, cut_paths, boundary })
}

/// Shortest edge path from the longest loop to any other loop whose interior
/// vertices and edges avoid the boundary.
fn shortest_cut(mesh: &TriangleMesh, loops: &[Vec<usize>]) -> Result<Vec<usize>, UnfoldError> {
    let source = (0..loops.len()).max_by_key(|&l| (loops[l].len(), Reverse(l))).expect("loops is non-empty");
    let mut loop_of = vec![usize::MAX; mesh.vertices.len()];
    for (l, cycle) in loops.iter().enumerate() {
        for &v in cycle {
            loop_of[v] = l;
        }
    }
    let edges = edge_triangles(mesh);
    let mut neighbors = vec![Vec::new(); mesh.vertices.len()];
    for (&(a, b), tris) in &edges {
        if tris.len() == 2 {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
    }
    neighbors.iter_mut().for_each(|n| n.sort_unstable());

    let mut dist = vec![f64::INFINITY; mesh.vertices.len()];
    let mut prev = vec![usize::MAX; mesh.vertices.len()];
    let mut heap = BinaryHeap::new();
    for &v in &loops[source] {
        dist[v] = 0.0;
        heap.push(Reverse((Dist(0.0), v)));
    }
    while let Some(Reverse((Dist(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if loop_of[u] != usize::MAX && loop_of[u] != source {
            let mut path = vec![u];
            let mut v = u;
            while prev[v] != usize::MAX {
                v = prev[v];
                path.push(v);
            }
            path.reverse();
            return Ok(path);
        }
        for &w in &neighbors[u] {
            if loop_of[w] == source {
                continue;
            }
            let nd = d + (mesh.vertices[w] - mesh.vertices[u]).norm();
            if nd < dist[w] {
                dist[w] = nd;
                prev[w] = u;
                heap.push(Reverse((Dist(nd), w)));
            }
        }
    }
    Err(UnfoldError::Topology("no interior path joins the boundary loops".into()))
}

/// Duplicates the vertices of `path` so that the triangles on either side of
/// the path no longer share them.
fn split_along(mesh: &mut TriangleMesh, source_vertices: &mut Vec<usize>, path: &[usize]) {
    let cut: HashSet<(usize, usize)> = path.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))).collect();
    let on_path: HashSet<usize> = path.iter().copied().collect();
    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for &v in tri {
            if on_path.contains(&v) {
                incident.entry(v).or_default().push(t);
            }
        }
    }
    for &v in path {
        let fan = &incident[&v];
        // union triangles of the fan that meet across an uncut edge through v
        let mut group: Vec<usize> = (0..fan.len()).collect();
        fn root(group: &mut [usize], mut i: usize) -> usize {
            while group[i] != i {
                group[i] = group[group[i]];
                i = group[i];
            }
            i
        }
        let mut by_edge: HashMap<usize, Vec<usize>> = HashMap::new();
        for (slot, &t) in fan.iter().enumerate() {
            for &w in &mesh.triangles[t] {
                if w != v && !cut.contains(&(v.min(w), v.max(w))) {
                    by_edge.entry(w).or_default().push(slot);
                }
            }
        }
        let mut shared: Vec<_> = by_edge.into_values().filter(|s| s.len() == 2).collect();
        shared.sort_unstable();
        for s in shared {
            let (a, b) = (root(&mut group, s[0]), root(&mut group, s[1]));
            group[a.max(b)] = a.min(b);
        }
        // the group holding the first fan triangle keeps v, the others get copies
        let mut copies: HashMap<usize, usize> = HashMap::new();
        let keep = root(&mut group, 0);
        for slot in 0..fan.len() {
            let r = root(&mut group, slot);
            if r == keep {
                continue;
            }
            let copy = *copies.entry(r).or_insert_with(|| {
                mesh.vertices.push(mesh.vertices[v]);
                source_vertices.push(source_vertices[v]);
                mesh.vertices.len() - 1
            });
            let t = fan[slot];
            for corner in mesh.triangles[t].iter_mut() {
                if *corner == v {
                    *corner = copy;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::{icosphere, open_cylinder, planar_grid};
    use crate::mesh::topology::find_non_manifold_edge;
    use nalgebra::Point3;

    fn annulus(inner: f64, outer: f64, around: usize) -> TriangleMesh {
        let mut vertices = Vec::new();
        for r in [inner, outer] {
            for i in 0..around {
                let a = std::f64::consts::TAU * i as f64 / around as f64;
                vertices.push(Point3::new(r * a.cos(), r * a.sin(), 0.0));
            }
        }
        let mut triangles = Vec::new();
        for i in 0..around {
            let j = (i + 1) % around;
            triangles.push([i, around + i, around + j]);
            triangles.push([i, around + j, j]);
        }
        TriangleMesh::new(vertices, triangles)
    }

    #[test]
    fn disk_is_left_alone() {
        let grid = planar_grid(5, 1.0);
        let cut = cut_to_disk(&grid).unwrap();
        assert!(cut.cut_paths.is_empty());
        assert_eq!(cut.mesh.triangles, grid.triangles);
        assert_eq!(cut.boundary.len(), 20);
    }

    #[test]
    fn annulus_is_cut_once() {
        let ring = annulus(1.0, 2.0, 24);
        let cut = cut_to_disk(&ring).unwrap();
        assert_eq!(cut.cut_paths.len(), 1);
        // the shortest cut is one radial edge
        assert_eq!(cut.cut_paths[0].len(), 2);
        assert_eq!(cut.mesh.vertices.len(), 48 + 2);
        assert_eq!(euler_characteristic(&cut.mesh), 1);
        assert!(find_non_manifold_edge(&cut.mesh).is_none());
        assert_eq!(cut.boundary.len(), 24 + 24 + 2);
    }

    #[test]
    fn tube_cut_runs_along_its_length() {
        let tube = open_cylinder(1.0, 3.0, 16, 6);
        let cut = cut_to_disk(&tube).unwrap();
        assert_eq!(cut.cut_paths.len(), 1);
        assert_eq!(cut.cut_paths[0].len(), 7);
        assert_eq!(euler_characteristic(&cut.mesh), 1);
        for (v, &s) in cut.source_vertices.iter().enumerate() {
            assert_eq!(cut.mesh.vertices[v], tube.vertices[s]);
        }
    }

    #[test]
    fn closed_and_disconnected_regions_are_rejected() {
        assert!(matches!(cut_to_disk(&icosphere(1.0, 1)), Err(UnfoldError::Topology(_))));
        let mut two = planar_grid(2, 1.0);
        let mut other = planar_grid(2, 1.0);
        other.translate(nalgebra::Vector3::new(5.0, 0.0, 0.0));
        two.append(&other);
        assert!(matches!(cut_to_disk(&two), Err(UnfoldError::Topology(_))));
    }

    #[test]
    fn handle_is_rejected() {
        // torus with a disk removed: one boundary loop, genus 1
        let (n, m) = (12, 8);
        let mut vertices = Vec::new();
        for i in 0..n {
            for j in 0..m {
                let (u, v) = (std::f64::consts::TAU * i as f64 / n as f64, std::f64::consts::TAU * j as f64 / m as f64);
                let r = 3.0 + v.cos();
                vertices.push(Point3::new(r * u.cos(), r * u.sin(), v.sin()));
            }
        }
        let idx = |i: usize, j: usize| (i % n) * m + (j % m);
        let mut triangles = Vec::new();
        for i in 0..n {
            for j in 0..m {
                if i == 0 && j == 0 {
                    continue;
                }
                triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
                triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
            }
        }
        let torus = TriangleMesh::new(vertices, triangles);
        let err = cut_to_disk(&torus).unwrap_err();
        assert!(err.to_string().contains("genus 1"), "{err}");
    }
}
