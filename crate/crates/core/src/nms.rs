//! Corner point selection: windowed non-maximum suppression on a corner
//! probability raster.
//!
//! Suppression runs sequentially in row-major order on a mutable copy, so
//! ties between equal neighbors are won by the earlier pixel and the output
//! is fully deterministic.

use crate::raster::Raster;
use serde::{Deserialize, Serialize};

/// A selected corner pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Corner {
    pub row: usize,
    pub col: usize,
    pub prob: f32,
    /// Building instance label, 0 = unassigned.
    pub instance_id: u32,
}

/// Corners sorted by `(row, col)`, pairwise separated by Chebyshev
/// distance greater than the NMS window half-size.
#[derive(Debug, Clone, Default)]
pub struct CornerSet {
    pub corners: Vec<Corner>,
}

impl CornerSet {
    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }
}

/// Select isolated best corner candidates.
///
/// Every pixel with probability at least `min_prob` is visited in row-major
/// order; window neighbors not exceeding the candidate are zeroed, and the
/// candidate itself is zeroed as soon as a strictly larger neighbor is seen.
/// Pixels that keep a value of at least `min_prob` form the result.
pub fn nms_select(corner_prob: &Raster, half: usize, min_prob: f32) -> CornerSet {
    let mut buf = corner_prob.values.clone();
    let (w, h) = (corner_prob.width, corner_prob.height);
    let nodata = corner_prob.nodata;
    for row in 0..h {
        for col in 0..w {
            let center = row * w + col;
            let p = buf[center];
            if p == nodata || p < min_prob {
                continue;
            }
            let r0 = row.saturating_sub(half);
            let c0 = col.saturating_sub(half);
            let r1 = (row + half).min(h - 1);
            let c1 = (col + half).min(w - 1);
            'scan: for nr in r0..=r1 {
                for nc in c0..=c1 {
                    let ni = nr * w + nc;
                    if ni == center {
                        continue;
                    }
                    let q = buf[ni];
                    if q == nodata {
                        continue;
                    }
                    if q <= buf[center] {
                        buf[ni] = 0.0;
                    } else {
                        buf[center] = 0.0;
                        break 'scan;
                    }
                }
            }
        }
    }
    let mut corners = Vec::new();
    for row in 0..h {
        for col in 0..w {
            let p = buf[row * w + col];
            if p != nodata && p >= min_prob {
                corners.push(Corner {
                    row,
                    col,
                    prob: p,
                    instance_id: 0,
                });
            }
        }
    }
    CornerSet { corners }
}
