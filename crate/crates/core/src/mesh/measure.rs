//! Area, enclosed volume and vertex-set diameter.

use nalgebra::Point3;

use super::topology::{boundary_edge_count, is_consistently_oriented};
use super::{MeshError, TriangleMesh};

/// Vertex count above which the diameter uses the pruned pair search.
const BRUTE_FORCE_EXTENT_LIMIT: usize = 2000;
const EXTENT_LEAF_SIZE: usize = 16;

pub fn mesh_area(mesh: &TriangleMesh) -> f64 {
    (0..mesh.triangles.len()).map(|t| mesh.triangle_area(t)).sum()
}

/// Divergence-theorem sum of signed tetrahedra against the origin. Positive for
/// closed, outward oriented meshes. Terms are taken relative to the first
/// vertex to limit cancellation far from the origin.
pub fn signed_volume(mesh: &TriangleMesh) -> f64 {
    let Some(anchor) = mesh.vertices.first() else {
        return 0.0;
    };
    mesh.triangles
        .iter()
        .map(|&[a, b, c]| {
            let (pa, pb, pc) = (mesh.vertices[a] - anchor, mesh.vertices[b] - anchor, mesh.vertices[c] - anchor);
            pa.dot(&pb.cross(&pc))
        })
        .sum::<f64>()
        / 6.0
}

/// Enclosed volume of a closed, consistently oriented mesh.
pub fn mesh_volume(mesh: &TriangleMesh) -> Result<f64, MeshError> {
    if mesh.is_empty() {
        return Err(MeshError::Empty);
    }
    let open = boundary_edge_count(mesh);
    if open > 0 || !is_consistently_oriented(mesh) {
        return Err(MeshError::NotWatertight(open));
    }
    Ok(signed_volume(mesh).abs())
}

/// Largest distance between any two vertices.
pub fn max_extent(mesh: &TriangleMesh) -> f64 {
    if mesh.vertices.len() <= BRUTE_FORCE_EXTENT_LIMIT {
        max_extent_brute_force(&mesh.vertices)
    } else {
        diameter_pruned(&mesh.vertices)
    }
}

pub fn max_extent_brute_force(points: &[Point3<f64>]) -> f64 {
    let mut best = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.max((p - q).norm_squared());
        }
    }
    best.sqrt()
}

struct ExtentNode {
    lo: Point3<f64>,
    hi: Point3<f64>,
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// Exact diameter by branch and bound over a box tree: node pairs whose
/// farthest-box distance cannot beat the current best are skipped.
pub fn diameter_pruned(points: &[Point3<f64>]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut nodes = Vec::new();
    build_extent_tree(points, &mut order, 0, points.len(), &mut nodes);

    // seed the bound with a double sweep from the first point
    let far = |from: &Point3<f64>| {
        points
            .iter()
            .enumerate()
            .max_by(|a, b| (a.1 - from).norm_squared().total_cmp(&(b.1 - from).norm_squared()))
            .map(|(i, _)| i)
            .unwrap()
    };
    let a = far(&points[0]);
    let b = far(&points[a]);
    let mut best = (points[a] - points[b]).norm_squared();

    let mut stack = vec![(0usize, 0usize)];
    while let Some((i, j)) = stack.pop() {
        let (ni, nj) = (&nodes[i], &nodes[j]);
        let mut bound = 0.0;
        for k in 0..3 {
            let d = (ni.hi[k] - nj.lo[k]).abs().max((nj.hi[k] - ni.lo[k]).abs());
            bound += d * d;
        }
        if bound <= best {
            continue;
        }
        match (ni.children, nj.children) {
            (None, None) => {
                for &p in &order[ni.start..ni.end] {
                    for &q in &order[nj.start..nj.end] {
                        best = best.max((points[p] - points[q]).norm_squared());
                    }
                }
            }
            _ if i == j => {
                let (l, r) = ni.children.unwrap();
                stack.extend([(l, l), (l, r), (r, r)]);
            }
            (Some((l, r)), None) => stack.extend([(l, j), (r, j)]),
            (None, Some((l, r))) => stack.extend([(i, l), (i, r)]),
            (Some((l, r)), Some(_)) if ni.end - ni.start >= nj.end - nj.start => stack.extend([(l, j), (r, j)]),
            (Some(_), Some((l, r))) => stack.extend([(i, l), (i, r)]),
        }
    }
    best.sqrt()
}

fn build_extent_tree(
    points: &[Point3<f64>],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<ExtentNode>,
) -> usize {
    let slice = &mut order[start..end];
    let first = points[slice[0]];
    let (lo, hi) = slice.iter().fold((first, first), |(lo, hi), &i| (lo.inf(&points[i]), hi.sup(&points[i])));
    let id = nodes.len();
    nodes.push(ExtentNode { lo, hi, start, end, children: None });
    if end - start > EXTENT_LEAF_SIZE {
        let extent = hi - lo;
        let axis = extent.imax();
        let mid = (end - start) / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
        let l = build_extent_tree(points, order, start, start + mid, nodes);
        let r = build_extent_tree(points, order, start + mid, end, nodes);
        nodes[id].children = Some((l, r));
    }
    id
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;
    use nalgebra::Vector3;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_cube_measures() {
        let cube = unit_cube();
        assert!((mesh_area(&cube) - 6.0).abs() < 1e-15);
        assert!((mesh_volume(&cube).unwrap() - 1.0).abs() < 1e-15);
        assert!((max_extent(&cube) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn icosphere_converges_to_sphere() {
        let s = icosphere(1.0, 4);
        let v = mesh_volume(&s).unwrap();
        let a = mesh_area(&s);
        assert!((v / (4.0 * PI / 3.0) - 1.0).abs() < 5e-3, "volume {v}");
        assert!((a / (4.0 * PI) - 1.0).abs() < 5e-3, "area {a}");
    }

    #[test]
    fn open_mesh_volume_is_rejected() {
        let tri = TriangleMesh::new(
            vec![Point3::origin(), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        );
        assert!(matches!(mesh_volume(&tri), Err(MeshError::NotWatertight(3))));
    }

    #[test]
    fn volume_is_translation_invariant() {
        let s = icosphere(2.0, 2);
        let v0 = mesh_volume(&s).unwrap();
        let mut moved = s.clone();
        moved.translate(Vector3::new(1234.5, -987.25, 42.0));
        assert!((mesh_volume(&moved).unwrap() / v0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pruned_diameter_on_large_sphere() {
        let s = icosphere(3.0, 4);
        assert!(s.vertices.len() > BRUTE_FORCE_EXTENT_LIMIT);
        assert_eq!(max_extent(&s), max_extent_brute_force(&s.vertices));
    }

    proptest! {
        #[test]
        fn pruned_diameter_matches_brute_force(
            pts in proptest::collection::vec((-50.0f64..50.0, -5.0f64..5.0, -20.0f64..20.0), 2..400)
        ) {
            let points: Vec<Point3<f64>> = pts.into_iter().map(|(x, y, z)| Point3::new(x, y, z)).collect();
            prop_assert_eq!(diameter_pruned(&points), max_extent_brute_force(&points));
        }

        #[test]
        fn random_translation_keeps_volume(dx in -1e3f64..1e3, dy in -1e3f64..1e3, dz in -1e3f64..1e3) {
            let s = icosphere(1.5, 2);
            let v0 = mesh_volume(&s).unwrap();
            let mut moved = s;
            moved.translate(Vector3::new(dx, dy, dz));
            prop_assert!((mesh_volume(&moved).unwrap() / v0 - 1.0).abs() < 1e-9);
        }
    }
}
