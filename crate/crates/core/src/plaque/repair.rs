//! Turns the stitched shells into a closed, consistently oriented mesh.

use std::collections::{HashMap, HashSet, VecDeque};

use nalgebra::{Point3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::mesh::topology::{edge_triangles, find_non_manifold_edge, is_closed, is_consistently_oriented};
use crate::mesh::{boundary_loops, mesh_area, signed_volume, MeshError, TriangleMesh};

use super::{PlaqueError, ThresholdUsed, WELD_TOLERANCE_MM};

/// Closed plaque surface with repair bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaqueMesh {
    #[serde(skip)]
    pub mesh: TriangleMesh,
    /// Area added by hole filling divided by the total area.
    pub repaired_fraction: f64,
    pub filled_holes: usize,
    pub threshold_used: Option<ThresholdUsed>,
}

/// Merges vertices closer than `tolerance`, keeping the first of each
/// cluster, then drops triangles that collapse or duplicate another triangle.
pub fn weld_vertices(mesh: &TriangleMesh, tolerance: f64) -> TriangleMesh {
    let cell = tolerance.max(f64::MIN_POSITIVE);
    let key = |p: &Point3<f64>| [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64];
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut remap = vec![0usize; mesh.vertices.len()];
    let mut kept: Vec<usize> = Vec::new();
    for (v, p) in mesh.vertices.iter().enumerate() {
        let k = key(p);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        for &r in list {
                            if (mesh.vertices[kept[r]] - p).norm() <= tolerance {
                                found = Some(r);
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        remap[v] = found.unwrap_or_else(|| {
            kept.push(v);
            grid.entry(k).or_default().push(kept.len() - 1);
            kept.len() - 1
        });
    }

    let mut seen: HashMap<[usize; 3], usize> = HashMap::new();
    let mut triangles: Vec<Option<[usize; 3]>> = Vec::new();
    for tri in &mesh.triangles {
        let t = tri.map(|v| remap[v]);
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            continue;
        }
        let mut sorted = t;
        sorted.sort_unstable();
        match seen.get(&sorted) {
            // a repeated face with the same orientation is a duplicate; with the
            // opposite orientation the pair forms a zero-volume sheet
            Some(&prev) => {
                if let Some(p) = triangles[prev] {
                    if !same_orientation(p, t) {
                        triangles[prev] = None;
                    }
                }
            }
            None => {
                seen.insert(sorted, triangles.len());
                triangles.push(Some(t));
            }
        }
    }
    let triangles: Vec<[usize; 3]> = triangles.into_iter().flatten().collect();
    // drop unreferenced vertices without reordering the rest
    let mut used = vec![false; kept.len()];
    triangles.iter().flatten().for_each(|&v| used[v] = true);
    let mut index = vec![usize::MAX; kept.len()];
    let mut vertices = Vec::new();
    for (r, &v) in kept.iter().enumerate() {
        if used[r] {
            index[r] = vertices.len();
            vertices.push(mesh.vertices[v]);
        }
    }
    TriangleMesh::new(vertices, triangles.iter().map(|t| t.map(|v| index[v])).collect())
}

fn same_orientation(a: [usize; 3], b: [usize; 3]) -> bool {
    (0..3).any(|r| a == [b[r], b[(r + 1) % 3], b[(r + 2) % 3]])
}

/// Makes adjacent triangles traverse shared edges in opposite directions,
/// keeping the orientation of the lowest triangle in each component.
fn orient_consistently(mesh: &mut TriangleMesh) -> Result<(), PlaqueError> {
    if let Some((a, b, n)) = find_non_manifold_edge(mesh) {
        return Err(PlaqueError::RepairFailed(format!("non-manifold edge ({a}, {b}) with {n} triangles")));
    }
    let edges = edge_triangles(mesh);
    let n = mesh.triangles.len();
    let mut state: Vec<Option<bool>> = vec![None; n]; // Some(flipped)
    for seed in 0..n {
        if state[seed].is_some() {
            continue;
        }
        state[seed] = Some(false);
        let mut queue = VecDeque::from([seed]);
        while let Some(t) = queue.pop_front() {
            let tri = oriented(mesh.triangles[t], state[t].unwrap());
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                for &u in &edges[&(a.min(b), a.max(b))] {
                    if u == t {
                        continue;
                    }
                    let raw = mesh.triangles[u];
                    // neighbor must contain b -> a
                    let needs_flip = (0..3).any(|k| raw[k] == a && raw[(k + 1) % 3] == b);
                    match state[u] {
                        None => {
                            state[u] = Some(needs_flip);
                            queue.push_back(u);
                        }
                        Some(f) if f != needs_flip => {
                            return Err(PlaqueError::RepairFailed("mesh is not orientable".into()));
                        }
                        Some(_) => {}
                    }
                }
            }
        }
    }
    for (tri, s) in mesh.triangles.iter_mut().zip(state) {
        *tri = oriented(*tri, s.unwrap());
    }
    Ok(())
}

fn oriented(t: [usize; 3], flip: bool) -> [usize; 3] {
    if flip {
        [t[0], t[2], t[1]]
    } else {
        t
    }
}

/// Triangulates a hole by ear clipping in the loop's best-fit plane. The
/// polygon is the loop reversed, so the patch matches the surrounding
/// orientation. Returns `None` when no ear can be found.
fn ear_clip(vertices: &[Point3<f64>], polygon: &[usize]) -> Option<Vec<[usize; 3]>> {
    let n = polygon.len();
    let mut normal = Vector3::zeros();
    for i in 0..n {
        let (p, q) = (vertices[polygon[i]], vertices[polygon[(i + 1) % n]]);
        normal += Vector3::new((p.y - q.y) * (p.z + q.z), (p.z - q.z) * (p.x + q.x), (p.x - q.x) * (p.y + q.y));
    }
    let normal = normal.try_normalize(0.0)?;
    let helper = if normal.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = normal.cross(&helper).normalize();
    let w = normal.cross(&u);
    let flat: Vec<Vector2<f64>> =
        polygon.iter().map(|&v| Vector2::new(vertices[v].coords.dot(&u), vertices[v].coords.dot(&w))).collect();
    let cross = |a: usize, b: usize, c: usize| {
        let (ab, ac) = (flat[b] - flat[a], flat[c] - flat[a]);
        ab.x * ac.y - ab.y * ac.x
    };

    let mut remaining: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n - 2);
    while remaining.len() > 3 {
        let m = remaining.len();
        let ear = (0..m).find(|&k| {
            let (a, b, c) = (remaining[(k + m - 1) % m], remaining[k], remaining[(k + 1) % m]);
            if cross(a, b, c) <= 0.0 {
                return false;
            }
            remaining.iter().all(|&p| {
                p == a || p == b || p == c || polygon[p] == polygon[a] || polygon[p] == polygon[b] || polygon[p] == polygon[c]
                    || !(cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0)
            })
        })?;
        let (a, b, c) = (remaining[(ear + m - 1) % m], remaining[ear], remaining[(ear + 1) % m]);
        out.push([polygon[a], polygon[b], polygon[c]]);
        remaining.remove(ear);
    }
    out.push([polygon[remaining[0]], polygon[remaining[1]], polygon[remaining[2]]]);
    // pinched loops visit a vertex twice and can yield collapsed triangles
    if out.iter().any(|t| t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
        return None;
    }
    Some(out)
}

fn patch_area(vertices: &[Point3<f64>], patch: &[[usize; 3]]) -> f64 {
    patch
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|i| vertices[i]);
            0.5 * (b - a).cross(&(c - a)).norm()
        })
        .sum()
}

/// Closes every boundary loop with the smaller of a centroid fan and an
/// ear-clipped patch, welding near-duplicate vertices first. Returns the
/// added area.
fn fill_holes(mesh: &mut TriangleMesh) -> Result<(usize, f64), PlaqueError> {
    let loops = boundary_loops(mesh)?;
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for tri in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            edges.insert((a.min(b), a.max(b)));
        }
    }
    let mut added = 0.0;
    let mut holes = 0;
    for cycle in loops {
        if cycle.len() < 3 {
            return Err(PlaqueError::RepairFailed(format!("boundary chain of {} vertices", cycle.len())));
        }
        holes += 1;
        let polygon: Vec<usize> = cycle.iter().rev().copied().collect();
        let ear = ear_clip(&mesh.vertices, &polygon).filter(|patch| {
            // reject patches whose diagonals duplicate an existing edge
            let boundary: HashSet<(usize, usize)> = (0..polygon.len())
                .map(|i| {
                    let (a, b) = (polygon[i], polygon[(i + 1) % polygon.len()]);
                    (a.min(b), a.max(b))
                })
                .collect();
            patch.iter().all(|t| {
                (0..3).all(|e| {
                    let (a, b) = (t[e], t[(e + 1) % 3]);
                    let key = (a.min(b), a.max(b));
                    boundary.contains(&key) || !edges.contains(&key)
                })
            })
        });
        let center = Point3::from(
            polygon.iter().fold(Vector3::zeros(), |acc, &v| acc + mesh.vertices[v].coords) / polygon.len() as f64,
        );
        let c = mesh.vertices.len();
        let fan: Vec<[usize; 3]> =
            (0..polygon.len()).map(|i| [polygon[i], polygon[(i + 1) % polygon.len()], c]).collect();
        let mut with_center = mesh.vertices.clone();
        with_center.push(center);
        let fan_area = patch_area(&with_center, &fan);
        let patch = match ear {
            Some(ear) if patch_area(&mesh.vertices, &ear) <= fan_area => ear,
            _ => {
                mesh.vertices.push(center);
                fan
            }
        };
        added += patch_area(&mesh.vertices, &patch);
        for t in &patch {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        mesh.triangles.extend(patch);
    }
    Ok((holes, added))
}

/// Welds, orients and hole-fills `mesh`, then flips it as a whole if it
/// encloses negative volume.
pub fn make_watertight(mesh: &TriangleMesh) -> Result<PlaqueMesh, PlaqueError> {
    if mesh.is_empty() {
        return Err(PlaqueError::Mesh(MeshError::Empty));
    }
    let mut out = weld_vertices(mesh, WELD_TOLERANCE_MM);
    orient_consistently(&mut out)?;
    let (filled_holes, added) = fill_holes(&mut out)?;
    if find_non_manifold_edge(&out).is_some() || !is_closed(&out) || !is_consistently_oriented(&out) {
        return Err(PlaqueError::RepairFailed("hole filling did not close the mesh".into()));
    }
    if signed_volume(&out) < 0.0 {
        out.flip();
    }
    if signed_volume(&out) <= 0.0 {
        return Err(PlaqueError::RepairFailed("repaired mesh encloses no volume".into()));
    }
    let total = mesh_area(&out);
    let repaired_fraction = if total > 0.0 { (added / total).clamp(0.0, 1.0) } else { 0.0 };
    Ok(PlaqueMesh { mesh: out, repaired_fraction, filled_holes, threshold_used: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::{icosphere, open_cylinder, unit_cube};
    use crate::mesh::topology::euler_characteristic;
    use crate::mesh::mesh_volume;

    #[test]
    fn watertight_input_is_unchanged() {
        let sphere = icosphere(1.0, 3);
        let out = make_watertight(&sphere).unwrap();
        assert_eq!(out.mesh, sphere);
        assert_eq!(out.repaired_fraction, 0.0);
        assert_eq!(out.filled_holes, 0);
    }

    #[test]
    fn single_missing_triangle_is_restored() {
        let sphere = icosphere(1.0, 3);
        let mut holed = sphere.clone();
        holed.triangles.remove(17);
        let out = make_watertight(&holed).unwrap();
        assert_eq!(euler_characteristic(&out.mesh), 2);
        let v0 = mesh_volume(&sphere).unwrap();
        assert!((mesh_volume(&out.mesh).unwrap() - v0).abs() / v0 < 1e-3);
        assert_eq!(out.filled_holes, 1);
        assert!(out.repaired_fraction > 0.0 && out.repaired_fraction < 0.01);
    }

    #[test]
    fn three_holes_of_sizes_3_5_8() {
        let sphere = icosphere(2.0, 3);
        let nv = sphere.vertices.len();
        let star = |v: usize| -> Vec<usize> {
            (0..sphere.triangles.len()).filter(|&t| sphere.triangles[t].contains(&v)).collect()
        };
        let nearest = |dir: Vector3<f64>, ok: &dyn Fn(usize) -> bool| {
            (0..nv).filter(|&v| ok(v)).max_by(|&a, &b| {
                sphere.vertices[a].coords.dot(&dir).total_cmp(&sphere.vertices[b].coords.dot(&dir))
            })
            .unwrap()
        };
        let mut drop: HashSet<usize> = HashSet::new();
        // one triangle near +z
        let top = nearest(Vector3::z(), &|_| true);
        drop.insert(star(top)[0]);
        // the five triangles around an icosahedron corner
        drop.extend(star(3));
        // the stars of two adjacent valence-6 vertices near -x
        let u = nearest(Vector3::new(-1.0, 0.3, -0.5), &|v| star(v).len() == 6);
        let w = star(u)
            .iter()
            .flat_map(|&t| sphere.triangles[t])
            .find(|&v| v != u && star(v).len() == 6)
            .unwrap();
        drop.extend(star(u));
        drop.extend(star(w));
        let holed = TriangleMesh::new(
            sphere.vertices.clone(),
            (0..sphere.triangles.len()).filter(|t| !drop.contains(t)).map(|t| sphere.triangles[t]).collect(),
        );
        let mut sizes: Vec<usize> = boundary_loops(&holed).unwrap().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![3, 5, 8]);
        let out = make_watertight(&holed).unwrap();
        assert!(boundary_loops(&out.mesh).unwrap().is_empty());
        assert!(is_consistently_oriented(&out.mesh));
        assert_eq!(out.filled_holes, 3);
        assert!(signed_volume(&out.mesh) > 0.0);
    }

    #[test]
    fn inverted_cube_is_flipped_outward() {
        let cube = unit_cube().flipped();
        let out = make_watertight(&cube).unwrap();
        assert!((signed_volume(&out.mesh) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn open_tube_gets_two_caps() {
        let tube = open_cylinder(1.0, 3.0, 24, 6);
        let out = make_watertight(&tube).unwrap();
        assert_eq!(out.filled_holes, 2);
        let expected = std::f64::consts::PI * 3.0 * (24.0 / std::f64::consts::TAU * (std::f64::consts::TAU / 24.0).sin());
        assert!((mesh_volume(&out.mesh).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn welding_merges_duplicates_and_drops_sheets() {
        let mut cube = unit_cube();
        let copy = unit_cube();
        cube.append(&copy.clone().flipped());
        let welded = weld_vertices(&cube, 1e-6);
        assert!(welded.triangles.is_empty());

        let mut split = unit_cube();
        let extra = split.vertices[0] + Vector3::new(1e-8, 0.0, 0.0);
        split.vertices.push(extra);
        split.triangles[0][0] = 8;
        let welded = weld_vertices(&split, 1e-6);
        assert_eq!(welded.vertices.len(), 8);
        assert!(is_closed(&welded));
    }

    #[test]
    fn mobius_strip_is_not_orientable() {
        let n = 12;
        let mut vertices = Vec::new();
        for i in 0..n {
            let a = std::f64::consts::TAU * i as f64 / n as f64;
            for s in [-0.3, 0.3] {
                let (c, d) = ((a / 2.0).cos() * s, (a / 2.0).sin() * s);
                vertices.push(Point3::new((1.0 + c) * a.cos(), (1.0 + c) * a.sin(), d));
            }
        }
        let mut triangles = Vec::new();
        for i in 0..n {
            let (a0, a1) = (2 * i, 2 * i + 1);
            let (b0, b1) = if i + 1 < n { (2 * i + 2, 2 * i + 3) } else { (1, 0) };
            triangles.push([a0, b0, b1]);
            triangles.push([a0, b1, a1]);
        }
        let strip = TriangleMesh::new(vertices, triangles);
        assert!(matches!(make_watertight(&strip), Err(PlaqueError::RepairFailed(_))));
    }
}
