//! Roof edge vectorization: decide which corner pairs of a building form
//! straight edges.
//!
//! Two conditions are evaluated in parallel for every same-instance corner
//! pair and combined with OR:
//!
//! 1. the mean edge probability inside a thin line buffer along the pair
//!    clears a threshold (tolerates holes in the detected edge);
//! 2. the two corners fall into the same connected component of the
//!    thresholded pixels inside a wider rectangle buffer (tolerates
//!    slightly curved edges).
//!
//! A redundancy filter then drops any pair whose rectangle buffer strictly
//! contains a third selected corner of the same instance.

use crate::components::label_components;
use crate::geom::project_on_segment;
use crate::nms::CornerSet;
use crate::raster::Raster;
use rayon::prelude::*;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy)]
pub struct EdgeParams {
    /// Line buffer width in pixels (condition 1).
    pub line_width: f64,
    /// Rectangle buffer width in pixels (condition 2 and redundancy filter).
    pub rect_width: f64,
    /// Mean-probability threshold for condition 1.
    pub tau_mean: f32,
    /// Binarization threshold for condition 2.
    pub tau_bin: f32,
    /// Chebyshev radius for snapping corners onto foreground pixels.
    pub snap_radius: usize,
}

impl Default for EdgeParams {
    fn default() -> Self {
        Self {
            line_width: 3.0,
            rect_width: 7.0,
            tau_mean: 0.5,
            tau_bin: 0.5,
            snap_radius: 2,
        }
    }
}

/// A corner pair with the outcome of both edge conditions.
#[derive(Debug, Clone, Copy)]
pub struct EdgeCandidate {
    pub a: usize,
    pub b: usize,
    pub mean_prob: f32,
    pub cond_line: bool,
    pub cond_ccl: bool,
    pub accepted: bool,
}

/// An accepted undirected edge between two corners of one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub instance_id: u32,
}

/// Accepted edges, deduplicated, `a < b`, sorted by `(instance_id, a, b)`.
#[derive(Debug, Clone, Default)]
pub struct EdgeSet {
    pub edges: Vec<Edge>,
}

impl EdgeSet {
    pub fn per_instance(&self) -> BTreeMap<u32, Vec<(usize, usize)>> {
        let mut map: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
        for e in &self.edges {
            map.entry(e.instance_id).or_default().push((e.a, e.b));
        }
        map
    }
}

/// Visit every pixel whose center lies within perpendicular distance
/// `width / 2` of the segment and within its extent (capped ends).
/// `p`, `q` are `(row, col)` positions.
fn for_each_buffer_pixel(
    dims: (usize, usize),
    p: (f64, f64),
    q: (f64, f64),
    width: f64,
    mut f: impl FnMut(usize, usize),
) {
    let (h, w) = dims;
    let a = (p.1, p.0); // (x, y) = (col, row)
    let b = (q.1, q.0);
    let pad = width / 2.0 + 1.0;
    let r0 = ((p.0.min(q.0) - pad).floor().max(0.0)) as usize;
    let r1 = ((p.0.max(q.0) + pad).ceil().min(h as f64 - 1.0)) as usize;
    let c0 = ((p.1.min(q.1) - pad).floor().max(0.0)) as usize;
    let c1 = ((p.1.max(q.1) + pad).ceil().min(w as f64 - 1.0)) as usize;
    for row in r0..=r1 {
        for col in c0..=c1 {
            let (perp, t) = project_on_segment((col as f64, row as f64), a, b);
            if perp <= width / 2.0 && (0.0..=1.0).contains(&t) {
                f(row, col);
            }
        }
    }
}

/// Mean edge probability over the line buffer between `p` and `q`
/// (`(row, col)` positions). Nodata pixels are skipped; an empty buffer
/// yields 0.
pub fn line_buffer_mean(edge_prob: &Raster, p: (f64, f64), q: (f64, f64), width: f64) -> f32 {
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for_each_buffer_pixel((edge_prob.height, edge_prob.width), p, q, width, |r, c| {
        let v = edge_prob.get(r, c);
        if v != edge_prob.nodata {
            sum += v as f64;
            count += 1;
        }
    });
    if count == 0 {
        0.0
    } else {
        (sum / count as f64) as f32
    }
}

/// Condition 2: threshold the rectangle buffer between `p` and `q`, label
/// its connected components, snap both corners to the nearest foreground
/// pixel within `snap_radius`, and test whether both land in the same
/// component.
pub fn rect_buffer_connected(
    edge_prob: &Raster,
    p: (f64, f64),
    q: (f64, f64),
    width: f64,
    threshold: f32,
    snap_radius: usize,
) -> bool {
    let pad = width / 2.0 + 1.0 + snap_radius as f64;
    let r0 = ((p.0.min(q.0) - pad).floor().max(0.0)) as usize;
    let r1 = ((p.0.max(q.0) + pad).ceil().min(edge_prob.height as f64 - 1.0)) as usize;
    let c0 = ((p.1.min(q.1) - pad).floor().max(0.0)) as usize;
    let c1 = ((p.1.max(q.1) + pad).ceil().min(edge_prob.width as f64 - 1.0)) as usize;
    let (lw, lh) = (c1 - c0 + 1, r1 - r0 + 1);
    let mut mask = Raster::filled(lw, lh, 0.0);
    for_each_buffer_pixel((edge_prob.height, edge_prob.width), p, q, width, |r, c| {
        let v = edge_prob.get(r, c);
        if v != edge_prob.nodata && v > threshold {
            mask.set(r - r0, c - c0, 1.0);
        }
    });
    let labels = label_components(&mask, 0.5);
    let snap = |pt: (f64, f64)| -> Option<u32> {
        let pr = pt.0.round() as i64 - r0 as i64;
        let pc = pt.1.round() as i64 - c0 as i64;
        for radius in 0..=snap_radius as i64 {
            let mut best: Option<(i64, i64)> = None;
            for dr in -radius..=radius {
                for dc in -radius..=radius {
                    if dr.abs().max(dc.abs()) != radius {
                        continue;
                    }
                    let (nr, nc) = (pr + dr, pc + dc);
                    if nr < 0 || nc < 0 || nr >= lh as i64 || nc >= lw as i64 {
                        continue;
                    }
                    if labels.get(nr as usize, nc as usize) != 0
                        && best.map_or(true, |b| (nr, nc) < b)
                    {
                        best = Some((nr, nc));
                    }
                }
            }
            if let Some((nr, nc)) = best {
                return Some(labels.get(nr as usize, nc as usize));
            }
        }
        None
    };
    match (snap(p), snap(q)) {
        (Some(a), Some(b)) => a == b,
        _ => false,
    }
}

/// True if corner `c` lies strictly inside the rectangle buffer of the
/// segment `p`-`q` (boundary does not count).
fn strictly_inside_rect(c: (f64, f64), p: (f64, f64), q: (f64, f64), width: f64) -> bool {
    let (perp, t) = project_on_segment((c.1, c.0), (p.1, p.0), (q.1, q.0));
    perp < width / 2.0 && t > 0.0 && t < 1.0
}

/// Drop pairs whose rectangle buffer strictly contains a third selected
/// corner of the same instance; the pair's own endpoints are exempt.
pub fn redundancy_filter(
    candidates: &[Edge],
    corners: &CornerSet,
    width: f64,
) -> EdgeSet {
    let mut edges: Vec<Edge> = candidates
        .iter()
        .copied()
        .filter(|e| {
            let p = corner_pos(corners, e.a);
            let q = corner_pos(corners, e.b);
            !corners.corners.iter().enumerate().any(|(k, c)| {
                k != e.a
                    && k != e.b
                    && c.instance_id == e.instance_id
                    && strictly_inside_rect((c.row as f64, c.col as f64), p, q, width)
            })
        })
        .collect();
    edges.sort_by_key(|e| (e.instance_id, e.a, e.b));
    edges.dedup();
    EdgeSet { edges }
}

fn corner_pos(corners: &CornerSet, i: usize) -> (f64, f64) {
    let c = &corners.corners[i];
    (c.row as f64, c.col as f64)
}

/// Evaluate both conditions for one corner pair.
pub fn evaluate_pair(
    edge_prob: &Raster,
    corners: &CornerSet,
    a: usize,
    b: usize,
    params: &EdgeParams,
) -> EdgeCandidate {
    let p = corner_pos(corners, a);
    let q = corner_pos(corners, b);
    let mean_prob = line_buffer_mean(edge_prob, p, q, params.line_width);
    let cond_line = mean_prob >= params.tau_mean;
    let cond_ccl = rect_buffer_connected(
            edge_prob,
            p,
            q,
            params.rect_width,
            params.tau_bin,
            params.snap_radius,
        );
    EdgeCandidate {
        a,
        b,
        mean_prob,
        cond_line,
        cond_ccl,
        accepted: cond_line || cond_ccl,
    }
}

/// Full edge vectorization: per-instance pair evaluation followed by the
/// redundancy filter. Output is deterministic and grouped by instance.
pub fn vectorize_edges(
    edge_prob: &Raster,
    corners: &CornerSet,
    params: &EdgeParams,
) -> EdgeSet {
    let mut by_instance: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, c) in corners.corners.iter().enumerate() {
        if c.instance_id != 0 {
            by_instance.entry(c.instance_id).or_default().push(i);
        }
    }
    let groups: Vec<(u32, Vec<usize>)> = by_instance.into_iter().collect();
    let mut accepted: Vec<Edge> = groups
        .par_iter()
        .flat_map_iter(|(instance_id, members)| {
            let mut local = Vec::new();
            for i in 0..members.len() {
                for j in i + 1..members.len() {
                    let cand =
                        evaluate_pair(edge_prob, corners, members[i], members[j], params);
                    if cand.accepted {
                        local.push(Edge {
                            a: cand.a,
                            b: cand.b,
                            instance_id: *instance_id,
                        });
                    }
                }
            }
            local
        })
        .collect();
    accepted.sort_by_key(|e| (e.instance_id, e.a, e.b));
    redundancy_filter(&accepted, corners, params.rect_width)
}
