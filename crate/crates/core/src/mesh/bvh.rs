//! Bounding volume hierarchy over triangles for exact closest-point queries.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use super::{MeshError, TriangleMesh};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestHit {
    pub distance: f64,
    pub triangle: usize,
    pub point: Point3<f64>,
}

#[derive(Debug, Clone)]
struct Node {
    lo: Point3<f64>,
    hi: Point3<f64>,
    /// Leaf: range into `order`; inner: child node indices.
    kind: NodeKind,
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

/// Static BVH built once per target mesh; queries are read-only and thread-safe.
#[derive(Debug, Clone)]
pub struct TriangleBvh {
    triangles: Vec<[Point3<f64>; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl TriangleBvh {
    pub fn new(mesh: &TriangleMesh) -> Result<Self, MeshError> {
        if mesh.triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let triangles: Vec<[Point3<f64>; 3]> = (0..mesh.triangles.len()).map(|t| mesh.corners(t)).collect();
        let centroids: Vec<Point3<f64>> =
            triangles.iter().map(|[a, b, c]| Point3::from((a.coords + b.coords + c.coords) / 3.0)).collect();
        let mut order: Vec<usize> = (0..triangles.len()).collect();
        let mut nodes = Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1);
        build(&triangles, &centroids, &mut order, 0, triangles.len(), &mut nodes);
        Ok(Self { triangles, order, nodes })
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Closest point on the triangle set. Ties resolve to the lower triangle index.
    pub fn closest(&self, p: &Point3<f64>) -> ClosestHit {
        let mut best_sq = f64::INFINITY;
        let mut best_tri = usize::MAX;
        let mut best_point = *p;
        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if box_distance_sq(&node.lo, &node.hi, p) > best_sq {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, end } => {
                    for &t in &self.order[start..end] {
                        let [a, b, c] = &self.triangles[t];
                        let q = closest_point_on_triangle(p, a, b, c);
                        let d = (q - p).norm_squared();
                        if d < best_sq || (d == best_sq && t < best_tri) {
                            best_sq = d;
                            best_tri = t;
                            best_point = q;
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    let dl = box_distance_sq(&self.nodes[left].lo, &self.nodes[left].hi, p);
                    let dr = box_distance_sq(&self.nodes[right].lo, &self.nodes[right].hi, p);
                    // nearer child popped first
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        ClosestHit { distance: best_sq.sqrt(), triangle: best_tri, point: best_point }
    }

    /// Closest hits for many points, evaluated in parallel; output order matches input.
    pub fn closest_many(&self, points: &[Point3<f64>]) -> Vec<ClosestHit> {
        points.par_iter().map(|p| self.closest(p)).collect()
    }
}

/// Unsigned distance from each query point to the nearest triangle of `target`.
pub fn distance_to_mesh(points: &[Point3<f64>], target: &TriangleMesh) -> Result<Vec<f64>, MeshError> {
    let bvh = TriangleBvh::new(target)?;
    Ok(bvh.closest_many(points).into_iter().map(|h| h.distance).collect())
}

fn build(
    triangles: &[[Point3<f64>; 3]],
    centroids: &[Point3<f64>],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let slice = &mut order[start..end];
    let mut lo = Point3::from(Vector3::repeat(f64::INFINITY));
    let mut hi = Point3::from(Vector3::repeat(f64::NEG_INFINITY));
    let mut clo = lo;
    let mut chi = hi;
    for &t in slice.iter() {
        for v in &triangles[t] {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        clo = clo.inf(&centroids[t]);
        chi = chi.sup(&centroids[t]);
    }
    let id = nodes.len();
    nodes.push(Node { lo, hi, kind: NodeKind::Leaf { start, end } });
    if end - start > LEAF_SIZE {
        let axis = (chi - clo).imax();
        let mid = (end - start) / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
        });
        let left = build(triangles, centroids, order, start, start + mid, nodes);
        let right = build(triangles, centroids, order, start + mid, end, nodes);
        nodes[id].kind = NodeKind::Inner { left, right };
    }
    id
}

#[inline]
fn box_distance_sq(lo: &Point3<f64>, hi: &Point3<f64>, p: &Point3<f64>) -> f64 {
    let mut d = 0.0;
    for k in 0..3 {
        let v = if p[k] < lo[k] {
            lo[k] - p[k]
        } else if p[k] > hi[k] {
            p[k] - hi[k]
        } else {
            0.0
        };
        d += v * v;
    }
    d
}

/// Closest point on triangle `abc` by Voronoi-region classification.
pub fn closest_point_on_triangle(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn on_surface_point_has_zero_distance() {
        let s = icosphere(1.0, 2);
        let d = distance_to_mesh(&s.vertices[..10], &s).unwrap();
        assert!(d.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cube_center_is_half_unit_away() {
        let d = distance_to_mesh(&[Point3::origin()], &unit_cube()).unwrap();
        assert!((d[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_target_is_an_error() {
        assert!(matches!(distance_to_mesh(&[Point3::origin()], &TriangleMesh::default()), Err(MeshError::Empty)));
    }

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = (Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0));
        let q = |x: f64, y: f64, z: f64| closest_point_on_triangle(&Point3::new(x, y, z), &a, &b, &c);
        assert_eq!(q(-1.0, -1.0, 0.0), a);
        assert_eq!(q(2.0, -0.5, 0.0), b);
        assert_eq!(q(-0.1, 3.0, 1.0), c);
        assert_eq!(q(0.5, -1.0, 0.0), Point3::new(0.5, 0.0, 0.0));
        assert_eq!(q(0.25, 0.25, 5.0), Point3::new(0.25, 0.25, 0.0));
        let e = q(1.0, 1.0, 0.0);
        assert!((e - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }
}
