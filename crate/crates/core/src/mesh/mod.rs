//! Indexed triangle meshes in world millimeters and the queries the plaque
//! pipeline needs: topology, closest-point distance, measures, isosurfaces.

pub mod bvh;
pub mod marching_cubes;
pub mod measure;
pub mod ply;
pub mod smooth;
pub mod topology;

pub use bvh::{distance_to_mesh, ClosestHit, TriangleBvh};
pub use marching_cubes::marching_cubes;
pub use measure::{max_extent, max_extent_brute_force, mesh_area, mesh_volume, signed_volume};
pub use smooth::laplacian_smooth;
pub use topology::{boundary_loops, connected_components, euler_characteristic, is_consistently_oriented, Submesh};

use std::collections::BTreeMap;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

/// Per-vertex channel holding the distance from the outer wall to the inner wall.
pub const DIST_TO_INNER: &str = "dist_to_inner";
/// Per-vertex wall thickness channel.
pub const VWT: &str = "vwt";
/// Per-vertex flag (1.0) for isosurface vertices created against the padding
/// outside the volume, i.e. where the vessel is cut by the volume border.
pub const CROP_BOUNDARY: &str = "crop_boundary";

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh is empty")]
    Empty,
    #[error("isosurface is empty: the indicator region is {0}")]
    EmptySurface(&'static str),
    #[error("mesh is not watertight ({0} boundary edges)")]
    NotWatertight(usize),
    #[error("non-manifold edge ({0}, {1}) shared by {2} triangles")]
    NonManifoldEdge(usize, usize, usize),
    #[error("triangle {triangle} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange { triangle: usize, index: usize, count: usize },
    #[error("triangle {0} repeats a vertex index")]
    DegenerateTriangle(usize),
    #[error("attribute `{name}` has {len} values for {count} vertices")]
    AttributeLength { name: String, len: usize, count: usize },
    #[error("ply: {0}")]
    Ply(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3<f64>>,
    pub triangles: Vec<[usize; 3]>,
    attributes: BTreeMap<String, Vec<f64>>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3<f64>>, triangles: Vec<[usize; 3]>) -> Self {
        Self { vertices, triangles, attributes: BTreeMap::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Checks index bounds, degenerate triangles and attribute lengths.
    pub fn validate(&self) -> Result<(), MeshError> {
        let count = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= count) {
                return Err(MeshError::IndexOutOfRange { triangle: t, index, count });
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateTriangle(t));
            }
        }
        for (name, values) in &self.attributes {
            if values.len() != count {
                return Err(MeshError::AttributeLength { name: name.clone(), len: values.len(), count });
            }
        }
        Ok(())
    }

    pub fn set_attribute(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<(), MeshError> {
        let name = name.into();
        if values.len() != self.vertices.len() {
            return Err(MeshError::AttributeLength { name, len: values.len(), count: self.vertices.len() });
        }
        self.attributes.insert(name, values);
        Ok(())
    }

    pub fn attribute(&self, name: &str) -> Option<&[f64]> {
        self.attributes.get(name).map(Vec::as_slice)
    }

    pub fn attributes(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.attributes.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn remove_attribute(&mut self, name: &str) -> Option<Vec<f64>> {
        self.attributes.remove(name)
    }

    pub fn clear_attributes(&mut self) {
        self.attributes.clear();
    }

    #[inline]
    pub fn corners(&self, t: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Cross product of the triangle edges (length = twice the area).
    #[inline]
    pub fn triangle_cross(&self, t: usize) -> Vector3<f64> {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    #[inline]
    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.triangle_cross(t).norm()
    }

    /// Area-weighted vertex normals, normalized; zero for isolated vertices.
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut normals = vec![Vector3::zeros(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let n = self.triangle_cross(t);
            for &v in tri {
                normals[v] += n;
            }
        }
        for n in &mut normals {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        normals
    }

    /// Reverses the orientation of every triangle.
    pub fn flip(&mut self) {
        for tri in &mut self.triangles {
            tri.swap(1, 2);
        }
    }

    pub fn flipped(mut self) -> Self {
        self.flip();
        self
    }

    pub fn translate(&mut self, offset: Vector3<f64>) {
        for v in &mut self.vertices {
            *v += offset;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.vertices {
            v.coords *= factor;
        }
    }

    /// Appends `other`, returning the index offset of its vertices. Attributes
    /// present in both meshes are concatenated; the rest are dropped.
    pub fn append(&mut self, other: &TriangleMesh) -> usize {
        let offset = self.vertices.len();
        let keep: Vec<String> =
            self.attributes.keys().filter(|k| other.attributes.contains_key(*k)).cloned().collect();
        self.attributes.retain(|k, _| keep.contains(k));
        for (name, values) in &mut self.attributes {
            values.extend_from_slice(&other.attributes[name]);
        }
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
        offset
    }

    /// Drops vertices not referenced by any triangle; returns the old index of each kept vertex.
    pub fn compact(&mut self) -> Vec<usize> {
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut kept = Vec::new();
        for tri in &mut self.triangles {
            for v in tri.iter_mut() {
                if remap[*v] == usize::MAX {
                    remap[*v] = kept.len();
                    kept.push(*v);
                }
                *v = remap[*v];
            }
        }
        self.vertices = kept.iter().map(|&i| self.vertices[i]).collect();
        for values in self.attributes.values_mut() {
            *values = kept.iter().map(|&i| values[i]).collect();
        }
        kept
    }

    pub fn bounding_box(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = *self.vertices.first()?;
        Some(self.vertices.iter().fold((first, first), |(lo, hi), v| (lo.inf(v), hi.sup(v))))
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    //! Shared test meshes.

    use super::TriangleMesh;
    use nalgebra::{Point3, Vector3};
    use std::collections::HashMap;

    /// Axis-aligned unit cube centered at the origin, outward oriented.
    pub fn unit_cube() -> TriangleMesh {
        let vertices = (0..8)
            .map(|i| {
                Point3::new(
                    if i & 1 == 0 { -0.5 } else { 0.5 },
                    if i & 2 == 0 { -0.5 } else { 0.5 },
                    if i & 4 == 0 { -0.5 } else { 0.5 },
                )
            })
            .collect();
        let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
        let triangles = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
        TriangleMesh::new(vertices, triangles)
    }

    /// Subdivided icosahedron projected onto a sphere of the given radius.
    pub fn icosphere(radius: f64, subdivisions: usize) -> TriangleMesh {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vector3<f64>> = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ]
        .iter()
        .map(|p| Vector3::new(p[0], p[1], p[2]).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
            let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vector3<f64>>| {
                let key = (a.min(b), a.max(b));
                *midpoints.entry(key).or_insert_with(|| {
                    vertices.push(((vertices[a] + vertices[b]) * 0.5).normalize());
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        TriangleMesh::new(vertices.into_iter().map(|v| Point3::from(v * radius)).collect(), faces)
    }

    /// Open cylinder (no caps) around the z axis.
    pub fn open_cylinder(radius: f64, height: f64, around: usize, along: usize) -> TriangleMesh {
        let mut vertices = Vec::new();
        for j in 0..=along {
            for i in 0..around {
                let a = std::f64::consts::TAU * i as f64 / around as f64;
                vertices.push(Point3::new(radius * a.cos(), radius * a.sin(), height * j as f64 / along as f64));
            }
        }
        let mut triangles = Vec::new();
        for j in 0..along {
            for i in 0..around {
                let a = j * around + i;
                let b = j * around + (i + 1) % around;
                let c = a + around;
                let d = b + around;
                triangles.push([a, b, d]);
                triangles.push([a, d, c]);
            }
        }
        TriangleMesh::new(vertices, triangles)
    }

    /// Regular planar grid in the z = 0 plane with `n × n` quads.
    pub fn planar_grid(n: usize, size: f64) -> TriangleMesh {
        let h = size / n as f64;
        let mut vertices = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Point3::new(i as f64 * h, j as f64 * h, 0.0));
            }
        }
        let mut triangles = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let a = j * (n + 1) + i;
                triangles.push([a, a + 1, a + n + 2]);
                triangles.push([a, a + n + 2, a + n + 1]);
            }
        }
        TriangleMesh::new(vertices, triangles)
    }
}
