//! Shared brute-force oracles and random input generators for the stage
//! property tests and the acceptance suite.

use lod2vec::components::label_components;
use lod2vec::faces::{extract_faces, PlanarGraph, RoofPolygon};
use lod2vec::geom::{
    interior_point, locate_point, point_on_segment, ring_area, segments_cross, PointLocation,
};
use lod2vec::model::footprint_union;
use lod2vec::nms::nms_select;
use lod2vec::raster::{window_extremum, ExtremumMode, Raster, Window};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

// ---------------------------------------------------------------------------
// NMS oracle: a literal, independent re-implementation of the sequential
// suppression contract.

fn nms_oracle(prob: &Raster, half: usize, min_prob: f32) -> Vec<(usize, usize, f32)> {
    let mut buf: Vec<Vec<f32>> = (0..prob.height)
        .map(|r| (0..prob.width).map(|c| prob.get(r, c)).collect())
        .collect();
    for row in 0..prob.height {
        for col in 0..prob.width {
            let p = buf[row][col];
            if p == prob.nodata || p < min_prob {
                continue;
            }
            let mut survived = true;
            'neighbors: for nr in row as i64 - half as i64..=row as i64 + half as i64 {
                for nc in col as i64 - half as i64..=col as i64 + half as i64 {
                    if nr < 0
                        || nc < 0
                        || nr as usize >= prob.height
                        || nc as usize >= prob.width
                        || (nr as usize, nc as usize) == (row, col)
                    {
                        continue;
                    }
                    let q = buf[nr as usize][nc as usize];
                    if q == prob.nodata {
                        continue;
                    }
                    if q > buf[row][col] {
                        survived = false;
                        break 'neighbors;
                    }
                    buf[nr as usize][nc as usize] = 0.0;
                }
            }
            if !survived {
                buf[row][col] = 0.0;
            }
        }
    }
    let mut out = Vec::new();
    for row in 0..prob.height {
        for col in 0..prob.width {
            let p = buf[row][col];
            if p != prob.nodata && p >= min_prob {
                out.push((row, col, p));
            }
        }
    }
    out
}

pub fn check_nms_oracle(cases: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4e4d53);
    for case in 0..cases {
        let w = rng.gen_range(1..24);
        let h = rng.gen_range(1..24);
        // Quantized probabilities force plenty of ties.
        let vals: Vec<f32> = (0..w * h)
            .map(|_| {
                if rng.gen_bool(0.05) {
                    lod2vec::raster::DEFAULT_NODATA
                } else {
                    rng.gen_range(0..=5) as f32 / 5.0
                }
            })
            .collect();
        let r = Raster::from_values(w, h, vals);
        let half = rng.gen_range(0..4);
        let min_prob = rng.gen_range(0.1..0.9);
        let got: Vec<(usize, usize, f32)> = nms_select(&r, half, min_prob)
            .corners
            .iter()
            .map(|c| (c.row, c.col, c.prob))
            .collect();
        let want = nms_oracle(&r, half, min_prob);
        assert_eq!(got, want, "case {case}: {w}x{h} half={half} min={min_prob}");
    }
}

// ---------------------------------------------------------------------------
// CCL oracle: row-major flood fill with first-encounter dense labels.

fn flood_fill_oracle(prob: &Raster, threshold: f32) -> (Vec<u32>, u32) {
    let (w, h) = (prob.width, prob.height);
    let fg = |r: usize, c: usize| {
        let v = prob.get(r, c);
        v != prob.nodata && v > threshold
    };
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    for row in 0..h {
        for col in 0..w {
            if !fg(row, col) || labels[row * w + col] != 0 {
                continue;
            }
            next += 1;
            let mut queue = vec![(row, col)];
            labels[row * w + col] = next;
            while let Some((r, c)) = queue.pop() {
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                        if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                            continue;
                        }
                        let (nr, nc) = (nr as usize, nc as usize);
                        if fg(nr, nc) && labels[nr * w + nc] == 0 {
                            labels[nr * w + nc] = next;
                            queue.push((nr, nc));
                        }
                    }
                }
            }
        }
    }
    (labels, next)
}

pub fn check_ccl_oracle(cases: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x43434c);
    for case in 0..cases {
        let w = rng.gen_range(1..=64);
        let h = rng.gen_range(1..=64);
        let density = rng.gen_range(0.2..0.8);
        let vals: Vec<f32> = (0..w * h)
            .map(|_| if rng.gen_bool(density) { 1.0 } else { 0.0 })
            .collect();
        let r = Raster::from_values(w, h, vals);
        let got = label_components(&r, 0.5);
        let (labels, n) = flood_fill_oracle(&r, 0.5);
        assert_eq!(got.n_components, n, "case {case}");
        assert_eq!(got.labels, labels, "case {case}: {w}x{h}");
    }
}

// ---------------------------------------------------------------------------
// Face extraction oracle: enumerate all simple cycles, then keep only the
// minimal ones per connected component (no smaller cycle inside).

pub fn random_planar_graph(rng: &mut ChaCha8Rng) -> PlanarGraph {
    let n = rng.gen_range(3..=8);
    let mut vertices: Vec<(f64, f64)> = Vec::new();
    while vertices.len() < n {
        let p = (rng.gen_range(0.0..12.0), rng.gen_range(0.0..12.0));
        if vertices
            .iter()
            .all(|&q| (p.0 - q.0).hypot(p.1 - q.1) > 1.0)
        {
            vertices.push(p);
        }
    }
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    pairs.shuffle(rng);
    let target = rng.gen_range(n.saturating_sub(1)..=2 * n);
    let mut adjacency: Vec<(usize, usize)> = Vec::new();
    for (a, b) in pairs {
        if adjacency.len() >= target {
            break;
        }
        let crosses = adjacency
            .iter()
            .any(|&(c, d)| segments_cross(vertices[a], vertices[b], vertices[c], vertices[d]));
        let through_vertex = (0..n)
            .filter(|&k| k != a && k != b)
            .any(|k| point_on_segment(vertices[k], vertices[a], vertices[b], 0.05));
        if !crosses && !through_vertex {
            adjacency.push((a, b));
        }
    }
    PlanarGraph {
        vertices,
        adjacency,
    }
}

fn enumerate_simple_cycles(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut cycles = Vec::new();
    // Cycles are rooted at their smallest vertex and deduplicated by
    // requiring the second vertex to be smaller than the last.
    fn dfs(
        adj: &[Vec<usize>],
        start: usize,
        path: &mut Vec<usize>,
        on_path: &mut Vec<bool>,
        cycles: &mut Vec<Vec<usize>>,
    ) {
        let v = *path.last().unwrap();
        for &next in &adj[v] {
            if next == start && path.len() >= 3 {
                if path[1] < *path.last().unwrap() {
                    cycles.push(path.clone());
                }
            } else if next > start && !on_path[next] {
                path.push(next);
                on_path[next] = true;
                dfs(adj, start, path, on_path, cycles);
                on_path[next] = false;
                path.pop();
            }
        }
    }
    for start in 0..n {
        let mut path = vec![start];
        let mut on_path = vec![false; n];
        on_path[start] = true;
        dfs(&adj, start, &mut path, &mut on_path, &mut cycles);
    }
    cycles
}

fn faces_oracle(g: &PlanarGraph) -> Vec<Vec<usize>> {
    let n = g.vertices.len();
    let cycles = enumerate_simple_cycles(n, &g.adjacency);
    let edge_sets: Vec<std::collections::HashSet<(usize, usize)>> = cycles
        .iter()
        .map(|c| {
            let k = c.len();
            (0..k)
                .map(|i| {
                    let (a, b) = (c[i], c[(i + 1) % k]);
                    (a.min(b), a.max(b))
                })
                .collect()
        })
        .collect();
    let rings: Vec<Vec<(f64, f64)>> = cycles
        .iter()
        .map(|c| c.iter().map(|&v| g.vertices[v]).collect())
        .collect();
    let areas: Vec<f64> = rings.iter().map(|r| ring_area(r).abs()).collect();
    let probes: Vec<(f64, f64)> = rings.iter().map(|r| interior_point(r)).collect();
    let mut kept = Vec::new();
    for i in 0..cycles.len() {
        // A non-face cycle always has a strictly smaller cycle inside it
        // that shares one of its edges (the face just inside any boundary
        // edge). A cycle nested inside another without touching its edges
        // (connected only through a vertex, a bridge, or not at all) does
        // not disqualify the outer one: both bound faces.
        let minimal = !(0..cycles.len()).any(|j| {
            j != i
                && areas[j] < areas[i]
                && !edge_sets[i].is_disjoint(&edge_sets[j])
                && locate_point(probes[j], &rings[i]) == PointLocation::Inside
        });
        if minimal {
            let mut ring = cycles[i].clone();
            if ring_area(&rings[i]) < 0.0 {
                ring.reverse();
            }
            kept.push(canonical_ring(ring));
        }
    }
    kept.sort();
    kept
}

fn canonical_ring(mut ring: Vec<usize>) -> Vec<usize> {
    let min_pos = ring
        .iter()
        .enumerate()
        .min_by_key(|&(_, &v)| v)
        .map(|(i, _)| i)
        .unwrap();
    ring.rotate_left(min_pos);
    ring
}

pub fn check_faces_oracle(cases: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x464143);
    for case in 0..cases {
        let g = random_planar_graph(&mut rng);
        let got: Vec<Vec<usize>> = extract_faces(&g, 1)
            .unwrap_or_else(|e| panic!("case {case}: unexpected {e} in {g:?}"))
            .into_iter()
            .map(|f| f.ring)
            .collect();
        let want = faces_oracle(&g);
        assert_eq!(got, want, "case {case}: {g:?}");
    }
}

// ---------------------------------------------------------------------------
// Window extremum oracle.

pub fn check_window_oracle(cases: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x57494e);
    for case in 0..cases {
        let w = rng.gen_range(1..20);
        let h = rng.gen_range(1..20);
        let vals: Vec<f32> = (0..w * h)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    lod2vec::raster::DEFAULT_NODATA
                } else {
                    rng.gen_range(-50.0..50.0)
                }
            })
            .collect();
        let r = Raster::from_values(w, h, vals);
        let row = rng.gen_range(0..h);
        let col = rng.gen_range(0..w);
        let half = rng.gen_range(0..6);
        for mode in [ExtremumMode::Max, ExtremumMode::Min] {
            let got = window_extremum(&r, Window::new(row, col, half), mode).unwrap();
            let mut best: Option<f32> = None;
            for rr in 0..h {
                for cc in 0..w {
                    let within = (rr as i64 - row as i64).abs() <= half as i64
                        && (cc as i64 - col as i64).abs() <= half as i64;
                    let v = r.get(rr, cc);
                    if !within || v == r.nodata {
                        continue;
                    }
                    best = Some(match (best, mode) {
                        (None, _) => v,
                        (Some(b), ExtremumMode::Max) => b.max(v),
                        (Some(b), ExtremumMode::Min) => b.min(v),
                    });
                }
            }
            let want = best.unwrap_or(r.nodata);
            assert_eq!(got.to_bits(), want.to_bits(), "case {case}");
        }
    }
}

// ---------------------------------------------------------------------------
// Footprint union oracle: the union boundary of a polyomino of unit-cell
// roofs is exactly the multiset of cell edges used an odd number of times.

pub fn check_footprint_oracle(cases: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x465550);
    for case in 0..cases {
        let size = rng.gen_range(1..=20);
        let cells = random_polyomino(&mut rng, size);
        // Shared vertex index space over the grid corners.
        let mut vid: BTreeMap<(i64, i64), usize> = BTreeMap::new();
        let mut vertices: Vec<(f64, f64)> = Vec::new();
        let mut corner = |vertices: &mut Vec<(f64, f64)>, p: (i64, i64)| -> usize {
            *vid.entry(p).or_insert_with(|| {
                vertices.push((p.0 as f64, p.1 as f64));
                vertices.len() - 1
            })
        };
        let mut roofs = Vec::new();
        let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &(x, y) in &cells {
            let ring = vec![
                corner(&mut vertices, (x, y)),
                corner(&mut vertices, (x + 1, y)),
                corner(&mut vertices, (x + 1, y + 1)),
                corner(&mut vertices, (x, y + 1)),
            ];
            for i in 0..4 {
                let (a, b) = (ring[i], ring[(i + 1) % 4]);
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
            roofs.push(RoofPolygon {
                ring,
                instance_id: 1,
            });
        }
        let expected: Vec<(usize, usize)> = edge_count
            .iter()
            .filter(|&(_, &c)| c % 2 == 1)
            .map(|(&e, _)| e)
            .collect();
        let fp = footprint_union(&roofs, &vertices)
            .unwrap_or_else(|e| panic!("case {case}: {e}"));
        let mut got: Vec<(usize, usize)> = fp
            .rings
            .iter()
            .flat_map(|r| {
                let n = r.ring.len();
                (0..n).map(move |i| {
                    let (a, b) = (r.ring[i], r.ring[(i + 1) % n]);
                    (a.min(b), a.max(b))
                })
            })
            .collect();
        got.sort_unstable();
        assert_eq!(got, expected, "case {case}: cells {cells:?}");
    }
}

fn random_polyomino(rng: &mut ChaCha8Rng, size: usize) -> Vec<(i64, i64)> {
    let mut cells = vec![(0i64, 0i64)];
    while cells.len() < size {
        let &(x, y) = cells.choose(rng).unwrap();
        let (dx, dy) = *[(1, 0), (-1, 0), (0, 1), (0, -1)].choose(rng).unwrap();
        let cand = (x + dx, y + dy);
        if !cells.contains(&cand) {
            cells.push(cand);
        }
    }
    cells.sort_unstable();
    cells
}
