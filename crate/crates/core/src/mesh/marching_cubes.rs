//! Table-driven marching cubes on binary label indicators.
//!
//! The indicator is sampled at voxel centers and contoured at 0.5, so every
//! vertex sits at an edge midpoint. The case table is generated from one rule
//! applied per cube face: on an ambiguous face (diagonal corners equal) the two
//! inside corners are separated. Because the rule only looks at the face, the
//! two cubes sharing a face always agree, which makes the output crack-free.
//! Each cube contributes one disk per closed contour loop on its surface, so
//! every output edge is shared by exactly two triangles.

use std::collections::HashMap;
use std::sync::OnceLock;

use nalgebra::{Point3, Vector3};

use super::{MeshError, TriangleMesh, CROP_BOUNDARY};
use crate::volume::LabelVolume;

/// Cube edges as (corner, axis); the other end is `corner | (1 << axis)`.
/// Corner `c` sits at `(c & 1, (c >> 1) & 1, (c >> 2) & 1)`.
const EDGES: [(u8, u8); 12] = [
    (0, 0),
    (2, 0),
    (4, 0),
    (6, 0),
    (0, 1),
    (1, 1),
    (4, 1),
    (5, 1),
    (0, 2),
    (1, 2),
    (2, 2),
    (3, 2),
];

fn corner_position(c: u8) -> Vector3<f64> {
    Vector3::new((c & 1) as f64, ((c >> 1) & 1) as f64, ((c >> 2) & 1) as f64)
}

fn edge_between(a: u8, b: u8) -> u8 {
    let (lo, hi) = (a.min(b), a.max(b));
    let axis = (hi ^ lo).trailing_zeros() as u8;
    EDGES.iter().position(|&(c, ax)| c == lo && ax == axis).expect("adjacent corners") as u8
}

fn edge_midpoint(e: u8) -> Vector3<f64> {
    let (c, axis) = EDGES[e as usize];
    let mut p = corner_position(c);
    p[axis as usize] += 0.5;
    p
}

/// Corners of each face, counter-clockwise seen from outside the cube.
fn faces() -> [[u8; 4]; 6] {
    let mut out = [[0u8; 4]; 6];
    for axis in 0..3u8 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2u8 {
            let corner = |du: u8, dv: u8| (side << axis) | (du << u) | (dv << v);
            // (u, v) order winds around +axis
            let mut quad = [corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1)];
            if side == 0 {
                quad.reverse();
            }
            out[(2 * axis + side) as usize] = quad;
        }
    }
    out
}

/// Triangulation of one corner configuration. Triangle entries below 12 are
/// cube edges; `12 + n` is the center of contour loop `n`.
#[derive(Debug, Clone, Default)]
struct Case {
    loops: Vec<Vec<u8>>,
    triangles: Vec<[u8; 3]>,
}

const LOOP_CENTER: u8 = 12;

fn case_table() -> &'static [Case; 256] {
    static TABLE: OnceLock<[Case; 256]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|config| triangulate_case(config as u8)))
}

fn triangulate_case(config: u8) -> Case {
    let inside = |c: u8| config & (1 << c) != 0;
    // directed contour segments: positive region on the left seen from outside
    let mut next_of: HashMap<u8, u8> = HashMap::new();
    for quad in faces() {
        for i in 0..4 {
            let (prev, cur) = (quad[(i + 3) % 4], quad[i]);
            // `cur` starts a maximal inside run when its predecessor is outside
            if !inside(cur) || inside(prev) {
                continue;
            }
            let mut end = i;
            while inside(quad[(end + 1) % 4]) {
                end = (end + 1) % 4;
            }
            let exit = edge_between(quad[end], quad[(end + 1) % 4]);
            let entry = edge_between(prev, cur);
            next_of.insert(exit, entry);
        }
    }

    let mut case = Case::default();
    let mut starts: Vec<u8> = next_of.keys().copied().collect();
    starts.sort_unstable();
    let mut visited = [false; 12];
    for start in starts {
        if visited[start as usize] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut e = start;
        while !visited[e as usize] {
            visited[e as usize] = true;
            cycle.push(e);
            e = next_of[&e];
        }
        // the isosurface disk is bounded by the reversed contour
        cycle.reverse();
        let tris = fan_triangulate(&cycle).unwrap_or_else(|| {
            let center = LOOP_CENTER + case.loops.len() as u8;
            (0..cycle.len()).map(|k| [center, cycle[k], cycle[(k + 1) % cycle.len()]]).collect()
        });
        case.triangles.extend(tris);
        case.loops.push(cycle);
    }
    case
}

/// Cube faces an edge lies on, as (axis, side).
fn edge_faces(e: u8) -> [(u8, u8); 2] {
    let (c, axis) = EDGES[e as usize];
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    [(u, (c >> u) & 1), (v, (c >> v) & 1)]
}

fn share_face(a: u8, b: u8) -> bool {
    let (fa, fb) = (edge_faces(a), edge_faces(b));
    fa.iter().any(|f| fb.contains(f))
}

/// Minimum-area fan whose diagonals never lie in a cube face. A diagonal in a
/// face would also be produced by the neighboring cube and break manifoldness.
fn fan_triangulate(cycle: &[u8]) -> Option<Vec<[u8; 3]>> {
    let n = cycle.len();
    let area = |tris: &[[u8; 3]]| -> f64 {
        tris.iter()
            .map(|t| {
                let (a, b, c) = (edge_midpoint(t[0]), edge_midpoint(t[1]), edge_midpoint(t[2]));
                (b - a).cross(&(c - a)).norm()
            })
            .sum()
    };
    let mut best: Option<(f64, Vec<[u8; 3]>)> = None;
    for root in 0..n {
        let diagonals_ok = (2..n - 1).all(|k| !share_face(cycle[root], cycle[(root + k) % n]));
        if !diagonals_ok {
            continue;
        }
        let fan: Vec<[u8; 3]> = (1..n - 1).map(|k| [cycle[root], cycle[(root + k) % n], cycle[(root + k + 1) % n]]).collect();
        let a = area(&fan);
        if best.as_ref().is_none_or(|(b, _)| a < b - 1e-12) {
            best = Some((a, fan));
        }
    }
    best.map(|(_, f)| f)
}

/// Closed, outward oriented isosurface of the indicator of `label_set`.
/// The volume is implicitly padded by one background voxel on every side;
/// vertices generated against that padding are flagged in `crop_boundary`.
pub fn marching_cubes(volume: &LabelVolume, label_set: &[u8]) -> Result<TriangleMesh, MeshError> {
    let g = volume.geometry();
    let [nx, ny, nz] = g.dims;
    let mut member = [false; 256];
    for &l in label_set {
        member[l as usize] = true;
    }
    let indicator: Vec<bool> = volume.labels().iter().map(|&l| member[l as usize]).collect();

    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut count = 0usize;
    for (idx, &on) in indicator.iter().enumerate() {
        if on {
            count += 1;
            let ijk = g.unravel(idx);
            for a in 0..3 {
                lo[a] = lo[a].min(ijk[a]);
                hi[a] = hi[a].max(ijk[a]);
            }
        }
    }
    if count == 0 {
        return Err(MeshError::EmptySurface("empty"));
    }
    if count == indicator.len() {
        return Err(MeshError::EmptySurface("full"));
    }

    let at = |i: isize, j: isize, k: isize| -> bool {
        if i < 0 || j < 0 || k < 0 || i >= nx as isize || j >= ny as isize || k >= nz as isize {
            false
        } else {
            indicator[g.linear_index(i as usize, j as usize, k as usize)]
        }
    };
    let (px, py) = (nx as isize + 2, ny as isize + 2);
    let table = case_table();
    let mut vertex_of: HashMap<usize, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();

    for k in lo[2] as isize - 1..=hi[2] as isize {
        for j in lo[1] as isize - 1..=hi[1] as isize {
            for i in lo[0] as isize - 1..=hi[0] as isize {
                let mut config = 0u8;
                for c in 0..8u8 {
                    let (dx, dy, dz) = ((c & 1) as isize, ((c >> 1) & 1) as isize, ((c >> 2) & 1) as isize);
                    if at(i + dx, j + dy, k + dz) {
                        config |= 1 << c;
                    }
                }
                if config == 0 || config == 255 {
                    continue;
                }
                let case = &table[config as usize];
                let mut centers = [usize::MAX; 4];
                for (n, cycle) in case.loops.iter().enumerate() {
                    if case.triangles.iter().any(|t| t.contains(&(LOOP_CENTER + n as u8))) {
                        let mean = cycle.iter().map(|&e| edge_midpoint(e)).sum::<Vector3<f64>>() / cycle.len() as f64;
                        vertices.push(Point3::new(
                            g.origin[0] + (i as f64 + mean.x) * g.spacing[0],
                            g.origin[1] + (j as f64 + mean.y) * g.spacing[1],
                            g.origin[2] + (k as f64 + mean.z) * g.spacing[2],
                        ));
                        centers[n] = vertices.len() - 1;
                    }
                }
                for tri in &case.triangles {
                    let ids = tri.map(|e| {
                        if e >= LOOP_CENTER {
                            return centers[(e - LOOP_CENTER) as usize];
                        }
                        let (c, axis) = EDGES[e as usize];
                        let (gi, gj, gk) =
                            (i + (c & 1) as isize, j + ((c >> 1) & 1) as isize, k + ((c >> 2) & 1) as isize);
                        let key = (((gi + 1) + px * ((gj + 1) + py * (gk + 1))) as usize) * 3 + axis as usize;
                        *vertex_of.entry(key).or_insert_with(|| {
                            let mut p = [gi as f64, gj as f64, gk as f64];
                            p[axis as usize] += 0.5;
                            vertices.push(Point3::new(
                                g.origin[0] + p[0] * g.spacing[0],
                                g.origin[1] + p[1] * g.spacing[1],
                                g.origin[2] + p[2] * g.spacing[2],
                            ));
                            vertices.len() - 1
                        })
                    });
                    triangles.push(ids);
                }
            }
        }
    }
    // vertices outside the voxel-center box were produced by the padding layer
    let grid_lo = Point3::new(g.origin[0], g.origin[1], g.origin[2]);
    let grid_hi = Point3::new(
        g.origin[0] + (nx - 1) as f64 * g.spacing[0],
        g.origin[1] + (ny - 1) as f64 * g.spacing[1],
        g.origin[2] + (nz - 1) as f64 * g.spacing[2],
    );
    let tol = 1e-9 * g.spacing.iter().fold(0.0f64, |a, &b| a.max(b));
    let crop: Vec<f64> = vertices
        .iter()
        .map(|p| {
            let outside = (0..3).any(|a| p[a] < grid_lo[a] - tol || p[a] > grid_hi[a] + tol);
            if outside {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut mesh = TriangleMesh::new(vertices, triangles);
    mesh.set_attribute(CROP_BOUNDARY, crop)?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::super::measure::{mesh_area, mesh_volume};
    use super::super::topology::{boundary_loops, euler_characteristic, is_consistently_oriented, triangle_components};
    use super::*;
    use crate::volume::{VolumeGeometry, LUMEN, WALL};
    use std::f64::consts::PI;

    fn volume_from(dims: [usize; 3], spacing: [f64; 3], f: impl Fn(usize, usize, usize) -> u8) -> LabelVolume {
        let g = VolumeGeometry::new(dims, spacing, [0.0; 3]).unwrap();
        let mut labels = vec![0u8; g.voxel_count()];
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    labels[g.linear_index(i, j, k)] = f(i, j, k);
                }
            }
        }
        LabelVolume::new(g, labels).unwrap()
    }

    #[test]
    fn every_case_is_closed_within_the_cube_surface() {
        // each contour edge of a case is used by exactly one triangle
        let table = case_table();
        for (config, case) in table.iter().enumerate() {
            let pop = (config as u8).count_ones();
            assert_eq!(case.triangles.is_empty(), pop == 0 || pop == 8, "case {config}");
            assert!(case.loops.len() <= 4);
            let mut uses: HashMap<(u8, u8), i32> = HashMap::new();
            for t in &case.triangles {
                for e in 0..3 {
                    let (a, b) = (t[e], t[(e + 1) % 3]);
                    *uses.entry((a.min(b), a.max(b))).or_default() += if a < b { 1 } else { -1 };
                }
            }
            // interior edges cancel, contour edges remain once
            let contour: usize = case.loops.iter().map(Vec::len).sum();
            assert_eq!(uses.values().filter(|&&u| u != 0).count(), contour, "case {config}");
        }
    }

    #[test]
    fn single_voxel_is_an_octahedron() {
        // eight cubes each cut off one corner: six vertices at half-voxel
        // offsets along the axes, enclosing (4/3)·(1/2)³ = 1/6 voxel volume
        let spacing = [0.5, 0.7, 1.1];
        let vol = volume_from([3, 3, 3], spacing, |i, j, k| if (i, j, k) == (1, 1, 1) { LUMEN } else { 0 });
        let mesh = marching_cubes(&vol, &[LUMEN]).unwrap();
        assert_eq!(mesh.vertex_count(), 6);
        assert_eq!(mesh.triangle_count(), 8);
        assert_eq!(euler_characteristic(&mesh), 2);
        let expected = spacing.iter().product::<f64>() / 6.0;
        assert!((mesh_volume(&mesh).unwrap() - expected).abs() < 1e-12);
        assert!(crate::mesh::signed_volume(&mesh) > 0.0, "outward orientation");
    }

    #[test]
    fn empty_and_full_indicators_fail() {
        let vol = volume_from([4, 4, 4], [1.0; 3], |_, _, _| 0);
        assert!(matches!(marching_cubes(&vol, &[LUMEN]), Err(MeshError::EmptySurface("empty"))));
        let vol = volume_from([4, 4, 4], [1.0; 3], |_, _, _| WALL);
        assert!(matches!(marching_cubes(&vol, &[WALL]), Err(MeshError::EmptySurface("full"))));
    }

    #[test]
    fn ball_volume_matches_analytic() {
        let r = 10.0;
        let n = 25;
        let c = (n - 1) as f64 / 2.0;
        let vol = volume_from([n, n, n], [1.0; 3], |i, j, k| {
            let d = ((i as f64 - c).powi(2) + (j as f64 - c).powi(2) + (k as f64 - c).powi(2)).sqrt();
            if d <= r {
                LUMEN
            } else {
                0
            }
        });
        let mesh = marching_cubes(&vol, &[LUMEN]).unwrap();
        let v = mesh_volume(&mesh).unwrap();
        let expected = 4.0 / 3.0 * PI * r.powi(3);
        assert!((v / expected - 1.0).abs() < 0.02, "volume {v} vs {expected}");
        assert!(boundary_loops(&mesh).unwrap().is_empty());
        assert!(is_consistently_oriented(&mesh));
        assert_eq!(euler_characteristic(&mesh), 2);
        assert!(mesh_area(&mesh) > 0.0);
    }

    #[test]
    fn random_blobs_are_watertight_manifolds() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let flags: Vec<bool> = (0..7 * 6 * 5).map(|_| rng.random_bool(0.45)).collect();
            let vol = volume_from([7, 6, 5], [1.0, 0.5, 2.0], |i, j, k| if flags[i + 7 * (j + 6 * k)] { WALL } else { 0 });
            let mesh = marching_cubes(&vol, &[WALL]).unwrap();
            mesh.validate().unwrap();
            assert!(boundary_loops(&mesh).unwrap().is_empty());
            assert!(is_consistently_oriented(&mesh));
            // every component encloses positive volume
            for comp in triangle_components(&mesh, |_| true) {
                let sub = crate::mesh::Submesh::extract(&mesh, &comp);
                assert!(crate::mesh::signed_volume(&sub.mesh) > 0.0);
            }
        }
    }

    #[test]
    fn surface_touching_the_border_is_closed_by_padding() {
        let vol = volume_from([4, 4, 4], [1.0; 3], |i, _, _| if i < 2 { LUMEN } else { 0 });
        let mesh = marching_cubes(&vol, &[LUMEN]).unwrap();
        assert!(boundary_loops(&mesh).unwrap().is_empty());
        assert_eq!(euler_characteristic(&mesh), 2);
    }
}
