//! Quality metrics: height residual statistics (MAE, RMSE, NMAD),
//! per-plane orientation error from total-least-squares plane fits, and
//! instance recall via greedy IoU matching of footprints.

use crate::components::LabelMap;
use crate::geom::{locate_point, ring_area, PointLocation};
use crate::raster::Raster;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("raster dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("no valid samples")]
    EmptySample,
    #[error("degenerate point set; plane fit is underdetermined")]
    DegeneratePlane,
}

/// Median of a sample; the slice is reordered.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Normalized median absolute deviation, a robust spread estimate scaled
/// to match the standard deviation for normal data.
pub fn nmad(residuals: &[f64]) -> f64 {
    let mut r = residuals.to_vec();
    let med = median(&mut r);
    let mut dev: Vec<f64> = residuals.iter().map(|&x| (x - med).abs()).collect();
    1.4826 * median(&mut dev)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HeightErrorStats {
    pub mae: f64,
    pub rmse: f64,
    pub nmad: f64,
    pub n: usize,
}

/// Residual statistics of `pred - truth` over pixels valid in both rasters
/// (and, if given, where `mask` > 0.5).
pub fn height_error_stats(
    pred: &Raster,
    truth: &Raster,
    mask: Option<&Raster>,
) -> Result<HeightErrorStats, MetricsError> {
    check_dims(pred, truth)?;
    if let Some(m) = mask {
        check_dims(pred, m)?;
    }
    let mut residuals = Vec::new();
    for row in 0..pred.height {
        for col in 0..pred.width {
            let p = pred.get(row, col);
            let t = truth.get(row, col);
            if p == pred.nodata || t == truth.nodata {
                continue;
            }
            if let Some(m) = mask {
                let mv = m.get(row, col);
                if mv == m.nodata || mv <= 0.5 {
                    continue;
                }
            }
            residuals.push(p as f64 - t as f64);
        }
    }
    if residuals.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let n = residuals.len();
    let mae = residuals.iter().map(|r| r.abs()).sum::<f64>() / n as f64;
    let rmse = (residuals.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    Ok(HeightErrorStats {
        mae,
        rmse,
        nmad: nmad(&residuals),
        n,
    })
}

fn check_dims(a: &Raster, b: &Raster) -> Result<(), MetricsError> {
    if a.width != b.width || a.height != b.height {
        return Err(MetricsError::DimensionMismatch(
            a.width, a.height, b.width, b.height,
        ));
    }
    Ok(())
}

/// Total-least-squares plane fit: the unit normal (oriented with
/// non-negative z) of the plane minimizing orthogonal distances.
pub fn fit_plane(points: &[[f64; 3]]) -> Result<[f64; 3], MetricsError> {
    if points.len() < 3 {
        return Err(MetricsError::DegeneratePlane);
    }
    let n = points.len() as f64;
    let mut centroid = [0.0; 3];
    for p in points {
        for k in 0..3 {
            centroid[k] += p[k] / n;
        }
    }
    let mut cov = nalgebra::Matrix3::<f64>::zeros();
    for p in points {
        let d = nalgebra::Vector3::new(
            p[0] - centroid[0],
            p[1] - centroid[1],
            p[2] - centroid[2],
        );
        cov += d * d.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut idx: Vec<usize> = (0..3).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    // Collinear (or coincident) points: the two smallest eigenvalues both
    // vanish and the normal direction is arbitrary.
    let scale = eig.eigenvalues[idx[2]].abs().max(1e-30);
    if eig.eigenvalues[idx[1]] / scale < 1e-12 {
        return Err(MetricsError::DegeneratePlane);
    }
    let v = eig.eigenvectors.column(idx[0]);
    let mut normal = [v[0], v[1], v[2]];
    let len = (normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]).sqrt();
    for k in 0..3 {
        normal[k] /= len;
    }
    if normal[2] < 0.0 {
        for k in 0..3 {
            normal[k] = -normal[k];
        }
    }
    Ok(normal)
}

/// Angle between two unit normals, in degrees.
pub fn normal_angle_deg(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dot = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
    dot.acos().to_degrees()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrientationStats {
    pub min_deg: f64,
    pub max_deg: f64,
    pub mean_deg: f64,
    pub sigma_deg: f64,
    /// `(plane_label, angle_deg)`, ascending by label. Planes with too few
    /// valid pixels or degenerate fits are skipped.
    pub per_plane: Vec<(u32, f64)>,
}

/// Orientation error per roof-plane mask: fit a plane to predicted and
/// truth heights inside each labeled region and measure the normal angle.
pub fn orientation_error(
    pred: &Raster,
    truth: &Raster,
    planes: &LabelMap,
) -> Result<OrientationStats, MetricsError> {
    check_dims(pred, truth)?;
    if pred.width != planes.width || pred.height != planes.height {
        return Err(MetricsError::DimensionMismatch(
            pred.width,
            pred.height,
            planes.width,
            planes.height,
        ));
    }
    let ps = pred.pixel_size as f64;
    let mut per_plane = Vec::new();
    for label in 1..=planes.n_components {
        let mut pts_pred = Vec::new();
        let mut pts_truth = Vec::new();
        for row in 0..pred.height {
            for col in 0..pred.width {
                if planes.get(row, col) != label {
                    continue;
                }
                let p = pred.get(row, col);
                let t = truth.get(row, col);
                if p == pred.nodata || t == truth.nodata {
                    continue;
                }
                let (x, y) = (col as f64 * ps, -(row as f64) * ps);
                pts_pred.push([x, y, p as f64]);
                pts_truth.push([x, y, t as f64]);
            }
        }
        let (Ok(np), Ok(nt)) = (fit_plane(&pts_pred), fit_plane(&pts_truth)) else {
            continue;
        };
        per_plane.push((label, normal_angle_deg(np, nt)));
    }
    if per_plane.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    let angles: Vec<f64> = per_plane.iter().map(|&(_, a)| a).collect();
    let n = angles.len() as f64;
    let mean = angles.iter().sum::<f64>() / n;
    let var = angles.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
    Ok(OrientationStats {
        min_deg: angles.iter().copied().fold(f64::INFINITY, f64::min),
        max_deg: angles.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_deg: mean,
        sigma_deg: var.sqrt(),
        per_plane,
    })
}

/// Intersection-over-union of two simple polygons in world meters.
///
/// Areas are exact (shoelace); the intersection is estimated by sampling
/// the overlapping bounding box on a grid of pitch `step`.
pub fn polygon_iou(a: &[(f64, f64)], b: &[(f64, f64)], step: f64) -> f64 {
    let area_a = ring_area(a).abs();
    let area_b = ring_area(b).abs();
    if area_a == 0.0 || area_b == 0.0 {
        return 0.0;
    }
    let bbox = |ring: &[(f64, f64)]| {
        let xs = ring.iter().map(|p| p.0);
        let ys = ring.iter().map(|p| p.1);
        (
            xs.clone().fold(f64::INFINITY, f64::min),
            xs.fold(f64::NEG_INFINITY, f64::max),
            ys.clone().fold(f64::INFINITY, f64::min),
            ys.fold(f64::NEG_INFINITY, f64::max),
        )
    };
    let (ax0, ax1, ay0, ay1) = bbox(a);
    let (bx0, bx1, by0, by1) = bbox(b);
    let (x0, x1) = (ax0.max(bx0), ax1.min(bx1));
    let (y0, y1) = (ay0.max(by0), ay1.min(by1));
    if x0 >= x1 || y0 >= y1 {
        return 0.0;
    }
    let nx = ((x1 - x0) / step).ceil() as usize;
    let ny = ((y1 - y0) / step).ceil() as usize;
    let mut hits = 0usize;
    for iy in 0..ny {
        for ix in 0..nx {
            let p = (x0 + (ix as f64 + 0.5) * step, y0 + (iy as f64 + 0.5) * step);
            if locate_point(p, a) != PointLocation::Outside
                && locate_point(p, b) != PointLocation::Outside
            {
                hits += 1;
            }
        }
    }
    let inter = hits as f64 * step * step;
    let union = (area_a + area_b - inter).max(inter);
    inter / union
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecallStats {
    pub n_truth: usize,
    pub n_pred: usize,
    pub matched: usize,
    pub recall: f64,
    /// `(pred_index, truth_index, iou)` of accepted matches.
    pub pairs: Vec<(usize, usize, f64)>,
}

/// One-to-one greedy matching: candidate pairs with IoU at or above the
/// threshold are accepted best-first.
pub fn instance_recall(
    pred: &[Vec<(f64, f64)>],
    truth: &[Vec<(f64, f64)>],
    iou_threshold: f64,
    step: f64,
) -> RecallStats {
    let mut candidates = Vec::new();
    for (pi, p) in pred.iter().enumerate() {
        for (ti, t) in truth.iter().enumerate() {
            let iou = polygon_iou(p, t, step);
            if iou >= iou_threshold {
                candidates.push((pi, ti, iou));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .unwrap()
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut pred_used = vec![false; pred.len()];
    let mut truth_used = vec![false; truth.len()];
    let mut pairs = Vec::new();
    for (pi, ti, iou) in candidates {
        if pred_used[pi] || truth_used[ti] {
            continue;
        }
        pred_used[pi] = true;
        truth_used[ti] = true;
        pairs.push((pi, ti, iou));
    }
    let matched = pairs.len();
    RecallStats {
        n_truth: truth.len(),
        n_pred: pred.len(),
        matched,
        recall: if truth.is_empty() {
            1.0
        } else {
            matched as f64 / truth.len() as f64
        },
        pairs,
    }
}
