//! Bandwidth-reducing node ordering for the sparse normal equations.

use std::collections::VecDeque;

/// Reverse Cuthill–McKee ordering of an undirected graph given as sorted,
/// duplicate-free neighbor lists. Returns `order` with `order[k]` the node
/// placed at position `k`.
pub fn reverse_cuthill_mckee(adjacency: &[Vec<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let degree = |v: usize| adjacency[v].len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree(v), v));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = peripheral_node(adjacency, seed);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = adjacency[u].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree(w), w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Breadth-first levels from `root`: the last level and the eccentricity.
fn last_level(adjacency: &[Vec<usize>], root: usize) -> (Vec<usize>, usize) {
    let mut depth = vec![usize::MAX; adjacency.len()];
    depth[root] = 0;
    let mut frontier = vec![root];
    let mut level = 0;
    loop {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in &adjacency[u] {
                if depth[w] == usize::MAX {
                    depth[w] = level + 1;
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return (frontier, level);
        }
        frontier = next;
        level += 1;
    }
}

/// George–Liu search for a node of (near) maximal eccentricity.
fn peripheral_node(adjacency: &[Vec<usize>], seed: usize) -> usize {
    let mut root = seed;
    let (mut last, mut ecc) = last_level(adjacency, root);
    loop {
        let candidate = *last.iter().min_by_key(|&&v| (adjacency[v].len(), v)).expect("level is non-empty");
        let (cand_last, cand_ecc) = last_level(adjacency, candidate);
        if cand_ecc <= ecc {
            return root;
        }
        root = candidate;
        last = cand_last;
        ecc = cand_ecc;
    }
}

/// Largest |position(u) − position(v)| over all edges under `order`.
pub fn bandwidth(adjacency: &[Vec<usize>], order: &[usize]) -> usize {
    let mut position = vec![0; order.len()];
    for (k, &v) in order.iter().enumerate() {
        position[v] = k;
    }
    adjacency
        .iter()
        .enumerate()
        .flat_map(|(u, list)| list.iter().map(move |&w| (u, w)))
        .map(|(u, w)| position[u].abs_diff(position[w]))
        .max()
        .unwrap_or(0)
}
