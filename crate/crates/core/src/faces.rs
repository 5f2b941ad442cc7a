//! Roof polygon generation: extract the bounded faces of a straight-line
//! planar graph of vectorized edges.
//!
//! Implementation is half-edge face walking: incident edges are sorted by
//! angle at every vertex and each directed edge continues with the next
//! edge clockwise around its head. Bounded faces come out counter-clockwise;
//! the single clockwise face per connected component is the unbounded one
//! and is discarded. Dangling edges (bridges and trees) bound no face and
//! are pruned first.

use crate::geom::{ring_area, ring_is_simple, segments_cross};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FaceError {
    #[error("edges {0:?} and {1:?} properly cross; not a planar embedding")]
    CrossingEdges((usize, usize), (usize, usize)),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("self loop at vertex {0}")]
    SelfLoop(usize),
}

/// An undirected straight-line planar graph.
///
/// Vertex positions use world orientation (y up), so counter-clockwise
/// rings have positive signed area.
#[derive(Debug, Clone, Default)]
pub struct PlanarGraph {
    pub vertices: Vec<(f64, f64)>,
    pub adjacency: Vec<(usize, usize)>,
}

/// A simple, counter-clockwise roof polygon over graph vertex indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoofPolygon {
    pub ring: Vec<usize>,
    pub instance_id: u32,
}

impl RoofPolygon {
    pub fn positions(&self, vertices: &[(f64, f64)]) -> Vec<(f64, f64)> {
        self.ring.iter().map(|&i| vertices[i]).collect()
    }
}

/// True iff the ring is simple, counter-clockwise and has positive area.
pub fn validate_polygon(p: &RoofPolygon, vertices: &[(f64, f64)]) -> bool {
    let ring = p.positions(vertices);
    ring.len() >= 3 && ring_is_simple(&ring) && ring_area(&ring) > 0.0
}

/// Extract the bounded faces of the planar subdivision induced by `g`.
pub fn extract_faces(g: &PlanarGraph, instance_id: u32) -> Result<Vec<RoofPolygon>, FaceError> {
    let n = g.vertices.len();
    let mut seen = std::collections::HashSet::new();
    for &(a, b) in &g.adjacency {
        if a == b {
            return Err(FaceError::SelfLoop(a));
        }
        let key = (a.min(b), a.max(b));
        if !seen.insert(key) {
            return Err(FaceError::DuplicateEdge(key.0, key.1));
        }
    }
    // Reject properly crossing edges up front: the walk would silently
    // produce garbage faces otherwise.
    for (i, &(a, b)) in g.adjacency.iter().enumerate() {
        for &(c, d) in &g.adjacency[i + 1..] {
            if a == c || a == d || b == c || b == d {
                continue;
            }
            if segments_cross(g.vertices[a], g.vertices[b], g.vertices[c], g.vertices[d]) {
                return Err(FaceError::CrossingEdges((a, b), (c, d)));
            }
        }
    }

    // Prune every edge that lies on no cycle (dangling chains and
    // bridges): such edges bound no face.
    let alive = non_bridge_edges(n, &g.adjacency);

    // Half edges: for each remaining undirected edge, two directed twins.
    let edges: Vec<(usize, usize)> = g
        .adjacency
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|(&e, _)| e)
        .collect();
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); n]; // half-edge ids
    let mut half: Vec<(usize, usize)> = Vec::with_capacity(edges.len() * 2);
    for &(a, b) in &edges {
        half.push((a, b));
        half.push((b, a));
        out_edges[a].push(half.len() - 2);
        out_edges[b].push(half.len() - 1);
    }
    // Sort outgoing half-edges counter-clockwise by angle; collinear
    // duplicates are impossible, collinear distinct directions differ by pi.
    for (v, list) in out_edges.iter_mut().enumerate() {
        let pos = g.vertices[v];
        list.sort_by(|&x, &y| {
            let ax = angle_of(pos, g.vertices[half[x].1]);
            let ay = angle_of(pos, g.vertices[half[y].1]);
            ax.partial_cmp(&ay)
                .unwrap()
                .then_with(|| half[x].1.cmp(&half[y].1))
        });
    }
    // next(u -> v) = the half-edge out of v immediately clockwise of v -> u.
    let mut next = vec![usize::MAX; half.len()];
    for (he, &(u, v)) in half.iter().enumerate() {
        let twin = he ^ 1;
        let list = &out_edges[v];
        let idx = list.iter().position(|&x| x == twin).expect("twin present");
        let prev_ccw = list[(idx + list.len() - 1) % list.len()];
        next[he] = prev_ccw;
        let _ = u;
    }
    // Walk faces.
    let mut visited = vec![false; half.len()];
    let mut faces = Vec::new();
    for start in 0..half.len() {
        if visited[start] {
            continue;
        }
        let mut ring = Vec::new();
        let mut he = start;
        loop {
            visited[he] = true;
            ring.push(half[he].0);
            he = next[he];
            if he == start {
                break;
            }
        }
        // A walked ring can be pinched: it revisits a vertex where two
        // cycles touch (e.g. a hole meeting the outline at one corner).
        // Split such rings at repeated vertices; each simple part with
        // positive area is a valid polygon, negative parts belong to the
        // surrounding region and are dropped.
        let mut parts = Vec::new();
        split_at_repeats(ring, &mut parts);
        for part in parts {
            let positions: Vec<(f64, f64)> = part.iter().map(|&i| g.vertices[i]).collect();
            if part.len() >= 3 && ring_area(&positions) > 0.0 && ring_is_simple(&positions) {
                faces.push(RoofPolygon {
                    ring: part,
                    instance_id,
                });
            }
        }
    }
    // Canonical order: rotate each ring to start at its smallest vertex,
    // then sort faces lexicographically.
    for f in faces.iter_mut() {
        let min_pos = f
            .ring
            .iter()
            .enumerate()
            .min_by_key(|&(_, &v)| v)
            .map(|(i, _)| i)
            .unwrap();
        f.ring.rotate_left(min_pos);
    }
    faces.sort_by(|a, b| a.ring.cmp(&b.ring));
    Ok(faces)
}

/// Split a closed ring that revisits vertices into vertex-disjoint simple
/// loops. The first repeated vertex pinches off the sub-ring between its
/// two occurrences; both pieces are processed recursively.
fn split_at_repeats(ring: Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let mut first_pos = std::collections::HashMap::new();
    for (j, &v) in ring.iter().enumerate() {
        if let Some(&i) = first_pos.get(&v) {
            let inner: Vec<usize> = ring[i..j].to_vec();
            let mut rest: Vec<usize> = ring[..i].to_vec();
            rest.extend_from_slice(&ring[j..]);
            split_at_repeats(inner, out);
            split_at_repeats(rest, out);
            return;
        }
        first_pos.insert(v, j);
    }
    out.push(ring);
}

fn angle_of(from: (f64, f64), to: (f64, f64)) -> f64 {
    (to.1 - from.1).atan2(to.0 - from.0)
}

/// Mark the edges that lie on at least one cycle (Tarjan bridge finding,
/// iterative).
fn non_bridge_edges(n: usize, adjacency: &[(usize, usize)]) -> Vec<bool> {
    let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (neighbor, edge id)
    for (ei, &(a, b)) in adjacency.iter().enumerate() {
        incident[a].push((b, ei));
        incident[b].push((a, ei));
    }
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![usize::MAX; n];
    let mut keep = vec![true; adjacency.len()];
    let mut timer = 0usize;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // Stack entries: (vertex, incoming edge id, next incident index).
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(top) = stack.last_mut() {
            let (v, in_edge) = (top.0, top.1);
            if top.2 < incident[v].len() {
                let (to, ei) = incident[v][top.2];
                top.2 += 1;
                if ei == in_edge {
                    continue;
                }
                if disc[to] == usize::MAX {
                    disc[to] = timer;
                    low[to] = timer;
                    timer += 1;
                    stack.push((to, ei, 0));
                } else {
                    low[v] = low[v].min(disc[to]);
                }
            } else {
                stack.pop();
                if let Some(parent) = stack.last() {
                    let p = parent.0;
                    low[p] = low[p].min(low[v]);
                    if low[v] > disc[p] {
                        keep[in_edge] = false;
                    }
                }
            }
        }
    }
    keep
}
