//! Edge incidence, boundary loops and predicate-filtered components.

use std::collections::HashMap;

use super::{MeshError, TriangleMesh};

#[inline]
fn undirected(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Triangles incident to each undirected edge, in triangle order.
pub fn edge_triangles(mesh: &TriangleMesh) -> HashMap<(usize, usize), Vec<usize>> {
    let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(mesh.triangles.len() * 3 / 2);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for e in 0..3 {
            map.entry(undirected(tri[e], tri[(e + 1) % 3])).or_default().push(t);
        }
    }
    map
}

/// First edge (in triangle order) shared by three or more triangles.
pub fn find_non_manifold_edge(mesh: &TriangleMesh) -> Option<(usize, usize, usize)> {
    let edges = edge_triangles(mesh);
    for tri in &mesh.triangles {
        for e in 0..3 {
            let key = undirected(tri[e], tri[(e + 1) % 3]);
            let n = edges[&key].len();
            if n > 2 {
                return Some((key.0, key.1, n));
            }
        }
    }
    None
}

pub fn unique_edge_count(mesh: &TriangleMesh) -> usize {
    edge_triangles(mesh).len()
}

/// V − E + F over referenced vertices.
pub fn euler_characteristic(mesh: &TriangleMesh) -> i64 {
    let mut used = vec![false; mesh.vertices.len()];
    for tri in &mesh.triangles {
        for &v in tri {
            used[v] = true;
        }
    }
    let v = used.iter().filter(|&&u| u).count() as i64;
    v - unique_edge_count(mesh) as i64 + mesh.triangles.len() as i64
}

/// True when no directed edge appears twice, i.e. neighbors agree on orientation.
pub fn is_consistently_oriented(mesh: &TriangleMesh) -> bool {
    let mut seen = std::collections::HashSet::with_capacity(mesh.triangles.len() * 3);
    mesh.triangles.iter().all(|tri| (0..3).all(|e| seen.insert((tri[e], tri[(e + 1) % 3]))))
}

/// Number of edges with exactly one incident triangle.
pub fn boundary_edge_count(mesh: &TriangleMesh) -> usize {
    edge_triangles(mesh).values().filter(|t| t.len() == 1).count()
}

pub fn is_closed(mesh: &TriangleMesh) -> bool {
    !mesh.is_empty() && boundary_edge_count(mesh) == 0
}

/// Closed cycles of boundary edges. Each loop follows the direction the edges
/// have in their triangles, so loops are oriented consistently with the mesh.
pub fn boundary_loops(mesh: &TriangleMesh) -> Result<Vec<Vec<usize>>, MeshError> {
    if let Some((a, b, n)) = find_non_manifold_edge(mesh) {
        return Err(MeshError::NonManifoldEdge(a, b, n));
    }
    let edges = edge_triangles(mesh);
    let mut half_edges = Vec::new();
    for tri in &mesh.triangles {
        for e in 0..3 {
            let (a, b) = (tri[e], tri[(e + 1) % 3]);
            if edges[&undirected(a, b)].len() == 1 {
                half_edges.push((a, b));
            }
        }
    }
    let mut outgoing: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, &(a, _)) in half_edges.iter().enumerate() {
        outgoing.entry(a).or_default().push(i);
    }
    let mut used = vec![false; half_edges.len()];
    let mut loops = Vec::new();
    for start in 0..half_edges.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let origin = half_edges[start].0;
        let mut cycle = vec![origin];
        let mut current = half_edges[start].1;
        while current != origin {
            cycle.push(current);
            let next = outgoing
                .get(&current)
                .and_then(|list| list.iter().copied().find(|&h| !used[h]));
            match next {
                Some(h) => {
                    used[h] = true;
                    current = half_edges[h].1;
                }
                // inconsistently oriented neighborhood; the chain cannot close
                None => break,
            }
        }
        loops.push(cycle);
    }
    Ok(loops)
}

/// Groups triangles into edge-connected components.
pub fn triangle_components(mesh: &TriangleMesh, keep: impl Fn(usize) -> bool) -> Vec<Vec<usize>> {
    let n = mesh.triangles.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let kept: Vec<bool> = (0..n).map(&keep).collect();
    let mut first_on_edge: HashMap<(usize, usize), usize> = HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if !kept[t] {
            continue;
        }
        for e in 0..3 {
            let key = undirected(tri[e], tri[(e + 1) % 3]);
            match first_on_edge.get(&key) {
                Some(&other) => {
                    let (ra, rb) = (find(&mut parent, t), find(&mut parent, other));
                    if ra != rb {
                        // smaller root wins so labels are order-independent
                        let (lo, hi) = (ra.min(rb), ra.max(rb));
                        parent[hi] = lo;
                    }
                }
                None => {
                    first_on_edge.insert(key, t);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for t in 0..n {
        if !kept[t] {
            continue;
        }
        let root = find(&mut parent, t);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(t);
    }
    groups
}

/// A piece of a larger mesh with maps back to the source indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Submesh {
    pub mesh: TriangleMesh,
    /// Source vertex index of each local vertex.
    pub vertex_map: Vec<usize>,
    /// Source triangle index of each local triangle.
    pub triangle_map: Vec<usize>,
}

impl Submesh {
    /// Extracts the given triangles, copying attributes.
    pub fn extract(source: &TriangleMesh, triangles: &[usize]) -> Self {
        let mut local = HashMap::new();
        let mut vertex_map = Vec::new();
        let tris = triangles
            .iter()
            .map(|&t| {
                source.triangles[t].map(|v| {
                    *local.entry(v).or_insert_with(|| {
                        vertex_map.push(v);
                        vertex_map.len() - 1
                    })
                })
            })
            .collect();
        let mut mesh = TriangleMesh::new(vertex_map.iter().map(|&v| source.vertices[v]).collect(), tris);
        for (name, values) in source.attributes() {
            mesh.set_attribute(name, vertex_map.iter().map(|&v| values[v]).collect())
                .expect("lengths match by construction");
        }
        Self { mesh, vertex_map, triangle_map: triangles.to_vec() }
    }

    pub fn whole(source: &TriangleMesh) -> Self {
        let all: Vec<usize> = (0..source.triangles.len()).collect();
        Self::extract(source, &all)
    }

    pub fn area(&self) -> f64 {
        super::mesh_area(&self.mesh)
    }
}

/// Maximal edge-connected sets of triangles whose three vertices all satisfy
/// `predicate`, ordered by their lowest source triangle index.
pub fn connected_components(mesh: &TriangleMesh, predicate: impl Fn(usize) -> bool) -> Vec<Submesh> {
    let ok: Vec<bool> = (0..mesh.vertices.len()).map(predicate).collect();
    triangle_components(mesh, |t| mesh.triangles[t].iter().all(|&v| ok[v]))
        .iter()
        .map(|tris| Submesh::extract(mesh, tris))
        .collect()
}
