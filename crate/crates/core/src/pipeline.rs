//! End-to-end vectorization pipeline: nDSM generation, corner selection,
//! instance labeling, edge vectorization, face extraction and 3D model
//! assembly, with per-stage timing and per-building drop reasons.

use crate::components::{assign_corners_to_instances, label_components};
use crate::edges::{vectorize_edges, EdgeParams, EdgeSet};
use crate::faces::{extract_faces, PlanarGraph};
use crate::geom::{locate_point, PointLocation};
use crate::model::{assign_heights, build_model, footprint_union, BuildingModel3D};
use crate::nms::{nms_select, CornerSet};
use crate::raster::{Raster, RasterError};
use crate::terrain::generate_ndsm;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input dimension mismatch: {0} is {1}x{2}, expected {3}x{4}")]
    DimensionMismatch(&'static str, usize, usize, usize, usize),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// All tunables of the vectorization pipeline. Every field has a default,
/// so a TOML config may set any subset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Structuring-element half size for the nDSM opening, pixels.
    pub ndsm_se_half: usize,
    /// Corner NMS window half size, pixels.
    pub nms_half: usize,
    /// Minimum corner probability.
    pub corner_min_prob: f32,
    /// Line buffer width for the mean-probability edge test, pixels.
    pub line_width: f64,
    /// Rectangle buffer width for connectivity and redundancy, pixels.
    pub rect_width: f64,
    /// Mean-probability threshold for the line buffer test.
    pub tau_mean: f32,
    /// Binarization threshold for edge pixels and building masks.
    pub tau_bin: f32,
    /// Half size of the corner height window, pixels.
    pub height_window_half: usize,
    /// Minimum nDSM height for the fallback building mask, meters.
    pub min_building_height: f32,
    /// IoU threshold for instance matching in evaluation.
    pub iou_threshold: f64,
    /// Report roof and wall heights above sea level instead of above ground.
    pub absolute_heights: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            ndsm_se_half: 100,
            nms_half: 2,
            corner_min_prob: 0.5,
            line_width: 3.0,
            rect_width: 7.0,
            tau_mean: 0.5,
            tau_bin: 0.5,
            height_window_half: 2,
            min_building_height: 2.0,
            iou_threshold: 0.5,
            absolute_heights: false,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn edge_params(&self) -> EdgeParams {
        EdgeParams {
            line_width: self.line_width,
            rect_width: self.rect_width,
            tau_mean: self.tau_mean,
            tau_bin: self.tau_bin,
            snap_radius: self.nms_half,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DroppedBuilding {
    pub instance_id: u32,
    pub reason: String,
}

/// Machine-readable summary of one pipeline run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub n_corners: usize,
    pub n_instances: u32,
    pub n_edges: usize,
    pub n_buildings: usize,
    pub dropped: Vec<DroppedBuilding>,
    pub warnings: Vec<String>,
    /// Wall-clock stage durations; excluded from determinism comparisons.
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Debug)]
pub struct VectorizeOutput {
    pub ndsm: Raster,
    pub corners: CornerSet,
    pub edges: EdgeSet,
    pub models: Vec<BuildingModel3D>,
    pub report: RunReport,
}

/// Run the full vectorization.
///
/// `building_prob` is the building instance probability; when absent, the
/// mask is derived by thresholding the nDSM at `min_building_height`.
pub fn run_vectorize(
    dsm: &Raster,
    edge_prob: &Raster,
    corner_prob: &Raster,
    building_prob: Option<&Raster>,
    config: &PipelineConfig,
) -> Result<VectorizeOutput, PipelineError> {
    check_dims("edge_prob", edge_prob, dsm)?;
    check_dims("corner_prob", corner_prob, dsm)?;
    if let Some(b) = building_prob {
        check_dims("building_prob", b, dsm)?;
    }
    dsm.validate()?;
    edge_prob.validate()?;
    corner_prob.validate()?;

    let mut timings: BTreeMap<String, f64> = BTreeMap::new();
    let mut timed = |key: &str, start: Instant| {
        timings.insert(key.to_string(), start.elapsed().as_secs_f64() * 1e3);
    };

    let t = Instant::now();
    let ndsm = generate_ndsm(dsm, config.ndsm_se_half);
    timed("ndsm", t);

    let t = Instant::now();
    let corners = nms_select(corner_prob, config.nms_half, config.corner_min_prob);
    timed("nms", t);

    let t = Instant::now();
    let mask;
    let instances = match building_prob {
        Some(b) => label_components(b, config.tau_bin),
        None => {
            mask = ndsm.clone();
            label_components(&mask, config.min_building_height)
        }
    };
    let corners = assign_corners_to_instances(&corners, &instances, config.nms_half);
    timed("instances", t);

    let t = Instant::now();
    let edges = vectorize_edges(edge_prob, &corners, &config.edge_params());
    timed("edges", t);

    let t = Instant::now();
    let per_instance = edges.per_instance();
    let ps = dsm.pixel_size as f64;
    let results: Vec<Result<BuildingModel3D, DroppedBuilding>> = per_instance
        .par_iter()
        .map(|(&instance_id, pairs)| {
            reconstruct_building(instance_id, pairs, &corners, &ndsm, dsm, config, ps)
        })
        .collect();
    let mut models = Vec::new();
    let mut dropped = Vec::new();
    let mut warnings = Vec::new();
    for r in results {
        match r {
            Ok(m) => {
                warnings.extend(m.warnings.iter().cloned());
                models.push(m);
            }
            Err(d) => {
                warnings.push(format!(
                    "building {}: dropped ({})",
                    d.instance_id, d.reason
                ));
                dropped.push(d);
            }
        }
    }
    // Instances without any accepted edge are dropped too.
    let mut with_corners: Vec<u32> = corners
        .corners
        .iter()
        .map(|c| c.instance_id)
        .filter(|&id| id != 0)
        .collect();
    with_corners.sort_unstable();
    with_corners.dedup();
    for id in with_corners {
        if !per_instance.contains_key(&id) {
            dropped.push(DroppedBuilding {
                instance_id: id,
                reason: "no accepted edges".to_string(),
            });
        }
    }
    dropped.sort_by_key(|d| d.instance_id);
    timed("model", t);

    let report = RunReport {
        schema: 1,
        n_corners: corners.len(),
        n_instances: instances.n_components,
        n_edges: edges.edges.len(),
        n_buildings: models.len(),
        dropped,
        warnings,
        timings_ms: timings,
    };
    Ok(VectorizeOutput {
        ndsm,
        corners,
        edges,
        models,
        report,
    })
}

#[allow(clippy::too_many_arguments)]
fn reconstruct_building(
    instance_id: u32,
    pairs: &[(usize, usize)],
    corners: &CornerSet,
    ndsm: &Raster,
    dsm: &Raster,
    config: &PipelineConfig,
    pixel_size: f64,
) -> Result<BuildingModel3D, DroppedBuilding> {
    let drop = |reason: String| DroppedBuilding {
        instance_id,
        reason,
    };
    // Local vertex space over the corners referenced by this instance.
    let mut used: Vec<usize> = pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    used.sort_unstable();
    used.dedup();
    if used.len() < 3 {
        return Err(drop(format!("only {} connected corners", used.len())));
    }
    let local: BTreeMap<usize, usize> = used.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let positions: Vec<(f64, f64)> = used
        .iter()
        .map(|&g| {
            let c = &corners.corners[g];
            (c.col as f64 * pixel_size, -(c.row as f64) * pixel_size)
        })
        .collect();
    let graph = PlanarGraph {
        vertices: positions.clone(),
        adjacency: pairs.iter().map(|&(a, b)| (local[&a], local[&b])).collect(),
    };
    let roofs = extract_faces(&graph, instance_id).map_err(|e| drop(e.to_string()))?;
    if roofs.is_empty() {
        return Err(drop("no closed roof faces".to_string()));
    }
    let footprint = footprint_union(&roofs, &positions).map_err(|e| drop(e.to_string()))?;
    let pixels: Vec<(usize, usize)> = used
        .iter()
        .map(|&g| (corners.corners[g].row, corners.corners[g].col))
        .collect();
    let heights =
        assign_heights(ndsm, &pixels, config.height_window_half).map_err(|e| drop(e.to_string()))?;
    let mut model = build_model(instance_id, &roofs, &footprint, &positions, &heights);
    if config.absolute_heights {
        let offset = ground_elevation(dsm, ndsm, &model.footprint, pixel_size)
            .ok_or_else(|| drop("no valid ground elevation under footprint".to_string()))?;
        for v in model.vertices.iter_mut() {
            v[2] += offset;
        }
    }
    Ok(model)
}

/// Median ground elevation (DSM minus nDSM) over the footprint pixels.
fn ground_elevation(
    dsm: &Raster,
    ndsm: &Raster,
    footprint: &[Vec<(f64, f64)>],
    pixel_size: f64,
) -> Option<f64> {
    let mut samples = Vec::new();
    for ring in footprint {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for &(x, y) in ring {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let c0 = (x0 / pixel_size).floor().max(0.0) as usize;
        let c1 = ((x1 / pixel_size).ceil() as usize).min(dsm.width - 1);
        let r0 = ((-y1 / pixel_size).floor().max(0.0)) as usize;
        let r1 = (((-y0 / pixel_size).ceil()) as usize).min(dsm.height - 1);
        for row in r0..=r1 {
            for col in c0..=c1 {
                let p = (col as f64 * pixel_size, -(row as f64) * pixel_size);
                if locate_point(p, ring) == PointLocation::Outside {
                    continue;
                }
                let d = dsm.get(row, col);
                let n = ndsm.get(row, col);
                if d != dsm.nodata && n != ndsm.nodata {
                    samples.push((d - n) as f64);
                }
            }
        }
    }
    if samples.is_empty() {
        None
    } else {
        Some(crate::metrics::median(&mut samples))
    }
}

fn check_dims(name: &'static str, r: &Raster, reference: &Raster) -> Result<(), PipelineError> {
    if !r.same_dims(reference) {
        return Err(PipelineError::DimensionMismatch(
            name,
            r.width,
            r.height,
            reference.width,
            reference.height,
        ));
    }
    Ok(())
}
