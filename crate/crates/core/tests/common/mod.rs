//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::{Point3, Vector3};
use plaquemesh::mesh::TriangleMesh;
use plaquemesh::volume::{Bump, PhantomSpec};

/// Cube `[0,1]³` with outward-facing triangles.
pub fn unit_cube() -> TriangleMesh {
    let vertices = (0..8)
        .map(|i| Point3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let quads = [[0, 2, 3, 1], [4, 5, 7, 6], [0, 1, 5, 4], [2, 6, 7, 3], [0, 4, 6, 2], [1, 3, 7, 5]];
    let triangles = quads.iter().flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]).collect();
    TriangleMesh::new(vertices, triangles)
}

/// Latitude-longitude sphere, outward oriented.
pub fn uv_sphere(center: Point3<f64>, radius: f64, rings: usize, segments: usize) -> TriangleMesh {
    let mut vertices = vec![center + Vector3::z() * radius];
    for r in 1..rings {
        let polar = PI * r as f64 / rings as f64;
        for s in 0..segments {
            let az = 2.0 * PI * s as f64 / segments as f64;
            vertices.push(center + radius * Vector3::new(polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()));
        }
    }
    vertices.push(center - Vector3::z() * radius);
    let south = vertices.len() - 1;
    let ring = |r: usize, s: usize| 1 + (r - 1) * segments + s % segments;
    let mut triangles = Vec::new();
    for s in 0..segments {
        triangles.push([0, ring(1, s), ring(1, s + 1)]);
        triangles.push([south, ring(rings - 1, s + 1), ring(rings - 1, s)]);
    }
    for r in 1..rings - 1 {
        for s in 0..segments {
            let (a, b, c, d) = (ring(r, s), ring(r, s + 1), ring(r + 1, s), ring(r + 1, s + 1));
            triangles.push([a, c, d]);
            triangles.push([a, d, b]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Flat square grid in the z = 0 plane with `n × n` cells.
pub fn planar_grid(n: usize, size: f64) -> TriangleMesh {
    let h = size / n as f64;
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point3::new(i as f64 * h, j as f64 * h, 0.0));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}

/// Half of a cylinder of the given radius along z.
pub fn half_cylinder(radius: f64, height: f64, around: usize, along: usize) -> TriangleMesh {
    let mut vertices = Vec::new();
    for j in 0..=along {
        for i in 0..=around {
            let a = PI * i as f64 / around as f64;
            vertices.push(Point3::new(radius * a.cos(), radius * a.sin(), height * j as f64 / along as f64));
        }
    }
    let id = |i: usize, j: usize| j * (around + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..along {
        for i in 0..around {
            triangles.push([id(i, j), id(i + 1, j + 1), id(i + 1, j)]);
            triangles.push([id(i, j), id(i, j + 1), id(i + 1, j + 1)]);
        }
    }
    TriangleMesh::new(vertices, triangles)
}

fn segment_distance(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Point-triangle distance: plane projection when it falls inside, else the nearest edge.
pub fn triangle_distance(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    let n = (b - a).cross(&(c - a));
    let nn = n.norm_squared();
    if nn > 0.0 {
        let q = p - n * ((p - a).dot(&n) / nn);
        let inside = [(a, b), (b, c), (c, a)].iter().all(|(u, v)| (*v - *u).cross(&(q - *u)).dot(&n) >= 0.0);
        if inside {
            return (p - q).norm();
        }
    }
    segment_distance(p, a, b).min(segment_distance(p, b, c)).min(segment_distance(p, c, a))
}

pub fn brute_force_distance(mesh: &TriangleMesh, p: &Point3<f64>) -> f64 {
    mesh.triangles
        .iter()
        .map(|t| triangle_distance(p, &mesh.vertices[t[0]], &mesh.vertices[t[1]], &mesh.vertices[t[2]]))
        .fold(f64::INFINITY, f64::min)
}

/// Inside test by counting crossings along a fixed skew ray.
pub fn ray_parity_inside(mesh: &TriangleMesh, q: &Point3<f64>) -> bool {
    let dir = Vector3::new(0.5772156649, 0.3183098862, 0.7548776662).normalize();
    let mut crossings = 0;
    for t in &mesh.triangles {
        let (a, b, c) = (mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
        let (e1, e2) = (b - a, c - a);
        let p = dir.cross(&e2);
        let det = e1.dot(&p);
        if det.abs() < 1e-14 {
            continue;
        }
        let s = q - a;
        let u = s.dot(&p) / det;
        let qv = s.cross(&e1);
        let v = dir.dot(&qv) / det;
        if u < 0.0 || v < 0.0 || u + v > 1.0 {
            continue;
        }
        if e2.dot(&qv) / det > 0.0 {
            crossings += 1;
        }
    }
    crossings % 2 == 1
}

/// Straight tube, lumen radius 3, wall 1, length 40, one Gaussian bump of the given height.
pub fn bump_phantom(voxel: f64, amplitude: f64) -> PhantomSpec {
    PhantomSpec::straight(3.0, 1.0, 40.0, voxel).with_bump(Bump::gaussian(20.0, 0.0, amplitude, 4.0, 0.6))
}
