//! Terrain processing: nDSM generation via grayscale morphological opening,
//! per-pixel surface normals, and normal-angle comparison of height rasters.
//!
//! The opening uses a square structuring element and the van Herk/Gil-Werman
//! sliding-window extremum, so the cost per pass is O(pixels) regardless of
//! the element size.

use crate::raster::Raster;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TerrainError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("raster too small for normals: {0}x{1} (need at least 3x3)")]
    TooSmall(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pass {
    Min,
    Max,
}

/// 1D sliding extremum with window `2 * half + 1`, clipped at the borders.
/// Three scans over the data independent of `half`.
fn sliding_extremum_1d(src: &[f32], half: usize, pass: Pass, out: &mut [f32]) {
    let n = src.len();
    debug_assert_eq!(out.len(), n);
    let k = 2 * half + 1;
    let ident = match pass {
        Pass::Min => f32::INFINITY,
        Pass::Max => f32::NEG_INFINITY,
    };
    let comb = |a: f32, b: f32| match pass {
        Pass::Min => a.min(b),
        Pass::Max => a.max(b),
    };
    // Pad with the identity so every window has exactly k samples, then
    // pad to a block multiple.
    let mut padded = vec![ident; ((n + 2 * half + k - 1) / k) * k];
    padded[half..half + n].copy_from_slice(src);
    let m = padded.len();
    let mut fwd = vec![ident; m];
    let mut bwd = vec![ident; m];
    for j in 0..m {
        fwd[j] = if j % k == 0 {
            padded[j]
        } else {
            comb(fwd[j - 1], padded[j])
        };
    }
    for j in (0..m).rev() {
        bwd[j] = if j % k == k - 1 || j == m - 1 {
            padded[j]
        } else {
            comb(bwd[j + 1], padded[j])
        };
    }
    for i in 0..n {
        // Window [i, i + 2*half] in padded coordinates.
        out[i] = comb(bwd[i], fwd[i + 2 * half]);
    }
}

/// Columns processed per block in the vertical pass. Blocking keeps the
/// gather/scatter sequential in memory (32 parallel streams instead of a
/// full-image-stride walk), so large rasters scale linearly instead of
/// paying a cache miss per pixel.
const COL_BLOCK: usize = 32;

fn filter_2d(values: &[f32], width: usize, height: usize, half: usize, pass: Pass) -> Vec<f32> {
    let mut tmp = vec![0.0f32; width * height];
    let mut out = vec![0.0f32; width * height];
    let mut line_out = vec![0.0f32; width.max(height)];
    for r in 0..height {
        sliding_extremum_1d(
            &values[r * width..(r + 1) * width],
            half,
            pass,
            &mut line_out[..width],
        );
        tmp[r * width..(r + 1) * width].copy_from_slice(&line_out[..width]);
    }
    let mut colbuf = vec![0.0f32; COL_BLOCK * height];
    for c0 in (0..width).step_by(COL_BLOCK) {
        let bw = COL_BLOCK.min(width - c0);
        for r in 0..height {
            let row = &tmp[r * width + c0..r * width + c0 + bw];
            for (j, &v) in row.iter().enumerate() {
                colbuf[j * height + r] = v;
            }
        }
        for j in 0..bw {
            sliding_extremum_1d(
                &colbuf[j * height..(j + 1) * height],
                half,
                pass,
                &mut line_out[..height],
            );
            colbuf[j * height..(j + 1) * height].copy_from_slice(&line_out[..height]);
        }
        for r in 0..height {
            let row = &mut out[r * width + c0..r * width + c0 + bw];
            for (j, v) in row.iter_mut().enumerate() {
                *v = colbuf[j * height + r];
            }
        }
    }
    out
}

/// Grayscale opening (erosion then dilation) with a square structuring
/// element of side `2 * se_half + 1`. Nodata pixels are skipped and stay
/// nodata in the output.
pub fn grayscale_opening(r: &Raster, se_half: usize) -> Raster {
    let mut work: Vec<f32> = r
        .values
        .iter()
        .map(|&v| if v == r.nodata { f32::INFINITY } else { v })
        .collect();
    work = filter_2d(&work, r.width, r.height, se_half, Pass::Min);
    // All-nodata erosion windows become +inf; neutralize them for the max pass.
    for v in work.iter_mut() {
        if *v == f32::INFINITY {
            *v = f32::NEG_INFINITY;
        }
    }
    work = filter_2d(&work, r.width, r.height, se_half, Pass::Max);
    let mut out = r.clone();
    for (i, v) in work.into_iter().enumerate() {
        out.values[i] = if r.values[i] == r.nodata || !v.is_finite() {
            r.nodata
        } else {
            v
        };
    }
    out
}

/// nDSM = DSM minus its morphological opening, clamped below at zero.
/// The opening acts as a ground estimate; buildings narrower than the
/// structuring element are removed from it entirely, so their full height
/// survives in the difference.
pub fn generate_ndsm(dsm: &Raster, se_half: usize) -> Raster {
    let opened = grayscale_opening(dsm, se_half);
    let mut out = dsm.clone();
    for i in 0..out.values.len() {
        if dsm.values[i] == dsm.nodata || opened.values[i] == dsm.nodata {
            out.values[i] = dsm.nodata;
        } else {
            out.values[i] = (dsm.values[i] - opened.values[i]).max(0.0);
        }
    }
    out
}

/// Per-pixel unit surface normals, upward-oriented (`nz >= 0`).
#[derive(Debug, Clone)]
pub struct NormalField {
    pub width: usize,
    pub height: usize,
    /// `None` where the input is nodata.
    pub normals: Vec<Option<[f64; 3]>>,
}

impl NormalField {
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<[f64; 3]> {
        self.normals[row * self.width + col]
    }
}

/// Normals from height gradients: `normalize(-dz/dx, -dz/dy, 1)` with
/// central differences in meters, one-sided at borders and next to nodata.
/// World y points north (up in the image), i.e. opposite to the row axis.
pub fn compute_normals(dsm: &Raster, pixel_size: f32) -> Result<NormalField, TerrainError> {
    if dsm.width < 3 || dsm.height < 3 {
        return Err(TerrainError::TooSmall(dsm.width, dsm.height));
    }
    let ps = pixel_size as f64;
    let mut normals = vec![None; dsm.width * dsm.height];
    let valid = |r: i64, c: i64| dsm.in_bounds(r, c) && !dsm.is_nodata(r as usize, c as usize);
    for r in 0..dsm.height as i64 {
        for c in 0..dsm.width as i64 {
            if !valid(r, c) {
                continue;
            }
            let z = |r: i64, c: i64| dsm.get(r as usize, c as usize) as f64;
            let diff = |va: bool, vb: bool, a: (i64, i64), b: (i64, i64)| -> f64 {
                match (va, vb) {
                    (true, true) => (z(a.0, a.1) - z(b.0, b.1)) / (2.0 * ps),
                    (true, false) => (z(a.0, a.1) - z(r, c)) / ps,
                    (false, true) => (z(r, c) - z(b.0, b.1)) / ps,
                    (false, false) => 0.0,
                }
            };
            let dzdx = diff(valid(r, c + 1), valid(r, c - 1), (r, c + 1), (r, c - 1));
            // Row axis points south; world y is its negation.
            let dzdrow = diff(valid(r + 1, c), valid(r - 1, c), (r + 1, c), (r - 1, c));
            let dzdy = -dzdrow;
            let len = (dzdx * dzdx + dzdy * dzdy + 1.0).sqrt();
            normals[(r as usize) * dsm.width + c as usize] =
                Some([-dzdx / len, -dzdy / len, 1.0 / len]);
        }
    }
    Ok(NormalField {
        width: dsm.width,
        height: dsm.height,
        normals,
    })
}

#[derive(Debug, Clone)]
pub struct NormalAngleStats {
    pub mean_deg: f64,
    pub median_deg: f64,
    /// Per-pixel angles in degrees; nodata where either input is nodata.
    pub angles: Raster,
}

/// Per-pixel angles between the surface normals of two height rasters.
pub fn normal_angle_stats(a: &Raster, b: &Raster) -> Result<NormalAngleStats, TerrainError> {
    if !a.same_dims(b) {
        return Err(TerrainError::DimensionMismatch(
            a.width, a.height, b.width, b.height,
        ));
    }
    let na = compute_normals(a, a.pixel_size)?;
    let nb = compute_normals(b, b.pixel_size)?;
    let mut angles = Raster::new(a.width, a.height, a.pixel_size, a.nodata);
    let mut valid = Vec::new();
    for i in 0..a.values.len() {
        match (na.normals[i], nb.normals[i]) {
            (Some(u), Some(v)) => {
                let dot = (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]).clamp(-1.0, 1.0);
                let deg = dot.acos().to_degrees();
                angles.values[i] = deg as f32;
                valid.push(deg);
            }
            _ => angles.values[i] = a.nodata,
        }
    }
    let (mean, median) = if valid.is_empty() {
        (0.0, 0.0)
    } else {
        let mean = valid.iter().sum::<f64>() / valid.len() as f64;
        (mean, crate::metrics::median(&mut valid))
    };
    Ok(NormalAngleStats {
        mean_deg: mean,
        median_deg: median,
        angles,
    })
}
