//! Inside/outside classification of voxel centers by generalized winding number.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::mesh::TriangleMesh;
use crate::volume::VolumeGeometry;

const LEAF_SIZE: usize = 8;
/// Nodes farther than this many radii from the query use the dipole term.
const FAR_FIELD_RATIO: f64 = 3.0;

/// Signed solid angle of triangle `abc` seen from `q`, divided by 4π.
pub fn triangle_winding(q: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    let (a, b, c) = (a - q, b - q, c - q);
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let numerator = a.dot(&b.cross(&c));
    let denominator = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
    2.0 * numerator.atan2(denominator) / (4.0 * std::f64::consts::PI)
}

/// Exact generalized winding number: the sum over all triangles.
pub fn winding_number_exact(mesh: &TriangleMesh, q: &Point3<f64>) -> f64 {
    (0..mesh.triangles.len())
        .map(|t| {
            let [a, b, c] = mesh.corners(t);
            triangle_winding(q, &a, &b, &c)
        })
        .sum()
}

struct Node {
    lo: Point3<f64>,
    hi: Point3<f64>,
    /// Area-weighted centroid and the radius of a ball around it holding all corners.
    center: Point3<f64>,
    radius: f64,
    /// Sum of the triangle vector areas.
    vector_area: Vector3<f64>,
    /// Leaf: triangle range; inner: the two children.
    start: usize,
    end: usize,
    children: Option<[usize; 2]>,
}

/// Tree over the triangles of a closed mesh answering winding-number queries:
/// exact near the query, dipole-approximated for distant clusters.
pub struct WindingTree<'a> {
    mesh: &'a TriangleMesh,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> WindingTree<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Self {
        let mut order: Vec<usize> = (0..mesh.triangles.len()).collect();
        let centroids: Vec<Point3<f64>> = (0..mesh.triangles.len())
            .map(|t| {
                let [a, b, c] = mesh.corners(t);
                Point3::from((a.coords + b.coords + c.coords) / 3.0)
            })
            .collect();
        let mut tree = WindingTree { mesh, order: Vec::new(), nodes: Vec::new() };
        if !order.is_empty() {
            let n = order.len();
            tree.build(&mut order, &centroids, 0, n);
        }
        tree.order = order;
        tree
    }

    fn build(&mut self, order: &mut [usize], centroids: &[Point3<f64>], start: usize, end: usize) -> usize {
        let slice = &mut order[start..end];
        let mut lo = Point3::from(Vector3::repeat(f64::INFINITY));
        let mut hi = Point3::from(Vector3::repeat(f64::NEG_INFINITY));
        let mut vector_area = Vector3::zeros();
        let mut weighted = Vector3::zeros();
        let mut area = 0.0;
        for &t in slice.iter() {
            for p in self.mesh.corners(t) {
                lo = lo.inf(&p);
                hi = hi.sup(&p);
            }
            let cross = self.mesh.triangle_cross(t);
            vector_area += 0.5 * cross;
            let a = 0.5 * cross.norm();
            weighted += centroids[t].coords * a;
            area += a;
        }
        let center = if area > 0.0 { Point3::from(weighted / area) } else { nalgebra::center(&lo, &hi) };
        let radius = slice
            .iter()
            .flat_map(|&t| self.mesh.corners(t))
            .map(|p| (p - center).norm())
            .fold(0.0, f64::max);
        let id = self.nodes.len();
        self.nodes.push(Node { lo, hi, center, radius, vector_area, start, end, children: None });
        if end - start > LEAF_SIZE {
            let extent = hi - lo;
            let axis = extent.imax();
            slice.sort_by(|&a, &b| centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b)));
            let mid = start + (end - start) / 2;
            let left = self.build(order, centroids, start, mid);
            let right = self.build(order, centroids, mid, end);
            self.nodes[id].children = Some([left, right]);
        }
        id
    }

    pub fn winding_number(&self, q: &Point3<f64>) -> f64 {
        if self.nodes.is_empty() {
            return 0.0;
        }
        let mut total = 0.0;
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let inside_box = (0..3).all(|k| q[k] >= node.lo[k] && q[k] <= node.hi[k]);
            let offset = node.center - q;
            let distance = offset.norm();
            if !inside_box && distance > FAR_FIELD_RATIO * node.radius {
                total += node.vector_area.dot(&offset) / (4.0 * std::f64::consts::PI * distance.powi(3));
                continue;
            }
            match node.children {
                Some([l, r]) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => {
                    for &t in &self.order[node.start..node.end] {
                        let [a, b, c] = self.mesh.corners(t);
                        total += triangle_winding(q, &a, &b, &c);
                    }
                }
            }
        }
        total
    }
}

/// Linear indices of voxels whose centers lie strictly inside the closed
/// mesh (winding number > 0.5), in increasing order. Only voxels within the
/// mesh bounding box padded by one voxel are tested.
pub fn voxels_inside(mesh: &TriangleMesh, geometry: &VolumeGeometry) -> Vec<usize> {
    let Some((lo, hi)) = mesh.bounding_box() else {
        return Vec::new();
    };
    let mut ranges = [(0usize, 0usize); 3];
    for axis in 0..3 {
        let (s, o, n) = (geometry.spacing[axis], geometry.origin[axis], geometry.dims[axis]);
        let first = ((lo[axis] - o) / s).floor() - 1.0;
        let last = ((hi[axis] - o) / s).ceil() + 1.0;
        let clamp = |x: f64| x.clamp(0.0, n as f64) as usize;
        ranges[axis] = (clamp(first), clamp(last + 1.0));
        if ranges[axis].0 >= ranges[axis].1 {
            return Vec::new();
        }
    }
    let tree = WindingTree::new(mesh);
    let (nx, ny) = (ranges[0].1 - ranges[0].0, ranges[1].1 - ranges[1].0);
    let nz = ranges[2].1 - ranges[2].0;
    let mut inside: Vec<usize> = (0..nx * ny * nz)
        .into_par_iter()
        .filter_map(|local| {
            let i = ranges[0].0 + local % nx;
            let j = ranges[1].0 + (local / nx) % ny;
            let k = ranges[2].0 + local / (nx * ny);
            let q = geometry.voxel_center(i, j, k);
            (tree.winding_number(&q) > 0.5).then(|| geometry.linear_index(i, j, k))
        })
        .collect();
    inside.sort_unstable();
    inside
}
