//! 8-connectivity connected-component labeling via two-pass union-find,
//! plus assignment of corners to building instances.

use crate::nms::{Corner, CornerSet};
use crate::raster::Raster;

/// Per-pixel component labels; 0 = background, foreground labels are
/// dense `1..=n_components` in first-encounter row-major order.
#[derive(Debug, Clone)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    pub n_components: u32,
}

impl LabelMap {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }
}

struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new() -> Self {
        Self {
            parent: Vec::new(),
            rank: Vec::new(),
        }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        self.rank.push(0);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (ra, rb) = if self.rank[ra as usize] < self.rank[rb as usize] {
            (rb, ra)
        } else {
            (ra, rb)
        };
        self.parent[rb as usize] = ra;
        if self.rank[ra as usize] == self.rank[rb as usize] {
            self.rank[ra as usize] += 1;
        }
    }
}

/// Label the 8-connected components of `{pixels with value > threshold}`.
/// Nodata pixels are background.
pub fn label_components(prob: &Raster, threshold: f32) -> LabelMap {
    let (w, h) = (prob.width, prob.height);
    let fg = |row: usize, col: usize| {
        let v = prob.get(row, col);
        v != prob.nodata && v > threshold
    };
    let mut provisional = vec![0u32; w * h];
    let mut uf = UnionFind::new();
    // First pass: scan the four already-visited neighbors.
    for row in 0..h {
        for col in 0..w {
            if !fg(row, col) {
                continue;
            }
            let mut label = None;
            let neighbors: [(i64, i64); 4] = [
                (row as i64 - 1, col as i64 - 1),
                (row as i64 - 1, col as i64),
                (row as i64 - 1, col as i64 + 1),
                (row as i64, col as i64 - 1),
            ];
            for (nr, nc) in neighbors {
                if nr < 0 || nc < 0 || nc >= w as i64 {
                    continue;
                }
                let np = provisional[nr as usize * w + nc as usize];
                if np != 0 {
                    match label {
                        None => label = Some(np),
                        Some(l) => uf.union(l - 1, np - 1),
                    }
                }
            }
            provisional[row * w + col] = match label {
                Some(l) => l,
                None => uf.make() + 1,
            };
        }
    }
    // Second pass: resolve roots and relabel densely in first-encounter order.
    let mut root_to_final = vec![0u32; uf.parent.len()];
    let mut next = 0u32;
    let mut labels = vec![0u32; w * h];
    for i in 0..w * h {
        let p = provisional[i];
        if p == 0 {
            continue;
        }
        let root = uf.find(p - 1) as usize;
        if root_to_final[root] == 0 {
            next += 1;
            root_to_final[root] = next;
        }
        labels[i] = root_to_final[root];
    }
    LabelMap {
        width: w,
        height: h,
        labels,
        n_components: next,
    }
}

/// Give every corner the label of the nearest labeled pixel within
/// Chebyshev distance `search_radius`; ties at equal distance go to the
/// smallest label. Corners with nothing in range keep `instance_id` 0.
pub fn assign_corners_to_instances(
    corners: &CornerSet,
    instances: &LabelMap,
    search_radius: usize,
) -> CornerSet {
    let assigned = corners
        .corners
        .iter()
        .map(|c| {
            let mut instance_id = 0;
            'rings: for radius in 0..=search_radius as i64 {
                let mut best: Option<u32> = None;
                let (r, c0) = (c.row as i64, c.col as i64);
                for dr in -radius..=radius {
                    for dc in -radius..=radius {
                        if dr.abs().max(dc.abs()) != radius {
                            continue;
                        }
                        let (nr, nc) = (r + dr, c0 + dc);
                        if nr < 0
                            || nc < 0
                            || nr >= instances.height as i64
                            || nc >= instances.width as i64
                        {
                            continue;
                        }
                        let l = instances.get(nr as usize, nc as usize);
                        if l != 0 {
                            best = Some(best.map_or(l, |b: u32| b.min(l)));
                        }
                    }
                }
                if let Some(l) = best {
                    instance_id = l;
                    break 'rings;
                }
            }
            Corner {
                instance_id,
                ..*c
            }
        })
        .collect();
    CornerSet { corners: assigned }
}
