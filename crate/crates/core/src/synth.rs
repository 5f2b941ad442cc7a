//! Synthetic scene generation for end-to-end testing: seeded random
//! layouts of flat and gable buildings, rasterized into the same DSM /
//! edge probability / corner probability inputs the pipeline consumes,
//! plus seeded degradation (noise, edge dropout, corner jitter).

use crate::components::LabelMap;
use crate::geom::{locate_point, project_on_segment, supercover_line, PointLocation};
use crate::raster::Raster;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoofKind {
    Flat,
    Gable,
}

/// Ground-truth description of one building.
///
/// `outline` is the footprint ring in pixel coordinates `(row, col)`;
/// for gable roofs it includes the two ridge endpoints, which sit on the
/// short sides. Corners are integer pixels: the rounded positions are the
/// truth, so a noiseless scene can be inverted exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BuildingTruth {
    pub id: u32,
    pub kind: RoofKind,
    pub outline: Vec<(i64, i64)>,
    /// Ridge endpoints `(row, col)` for gable roofs.
    pub ridge: Option<((i64, i64), (i64, i64))>,
    pub eave_m: f32,
    pub ridge_m: f32,
}

impl BuildingTruth {
    /// All corner pixels, including ridge endpoints.
    pub fn corners(&self) -> &[(i64, i64)] {
        &self.outline
    }

    /// Footprint ring in world meters.
    pub fn footprint_world(&self, pixel_size: f64) -> Vec<(f64, f64)> {
        self.outline
            .iter()
            .map(|&(r, c)| (c as f64 * pixel_size, -(r as f64) * pixel_size))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneTruth {
    pub width: usize,
    pub height: usize,
    pub pixel_size: f32,
    pub buildings: Vec<BuildingTruth>,
}

impl SceneTruth {
    pub fn footprints_world(&self) -> Vec<Vec<(f64, f64)>> {
        self.buildings
            .iter()
            .map(|b| b.footprint_world(self.pixel_size as f64))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SceneParams {
    pub width: usize,
    pub height: usize,
    pub pixel_size: f32,
    pub n_buildings: (usize, usize),
    /// Footprint short side, pixels.
    pub width_px: (i64, i64),
    /// Footprint long side, pixels; the ridge runs along it.
    pub length_px: (i64, i64),
    /// Minimum distance from the raster border, pixels.
    pub margin_px: i64,
    /// Minimum bounding-box gap between buildings, pixels.
    pub separation_px: i64,
    pub eave_m: (f32, f32),
    /// Ridge height above the eave for gable roofs.
    pub ridge_rise_m: (f32, f32),
    pub gable_fraction: f64,
    /// Rotation granularity in degrees.
    pub rotation_step_deg: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            width: 1024,
            height: 1024,
            pixel_size: 0.5,
            n_buildings: (10, 50),
            width_px: (24, 40),
            length_px: (32, 64),
            margin_px: 8,
            separation_px: 14,
            eave_m: (6.0, 18.0),
            ridge_rise_m: (2.0, 6.0),
            gable_fraction: 0.7,
            rotation_step_deg: 15.0,
        }
    }
}

/// Generate a seeded random scene by rejection placement. Buildings that
/// cannot be placed after a bounded number of attempts are skipped, so the
/// result can have fewer buildings than requested.
pub fn generate_scene(params: &SceneParams, seed: u64) -> SceneTruth {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_target = rng.gen_range(params.n_buildings.0..=params.n_buildings.1);
    let n_steps = (360.0 / params.rotation_step_deg).round() as i64;
    let mut buildings: Vec<BuildingTruth> = Vec::new();
    let mut bboxes: Vec<(i64, i64, i64, i64)> = Vec::new(); // r0, r1, c0, c1
    let mut attempts = 0usize;
    let max_attempts = 200 * n_target;
    while buildings.len() < n_target && attempts < max_attempts {
        attempts += 1;
        let w = rng.gen_range(params.width_px.0..=params.width_px.1);
        let l = rng.gen_range(params.length_px.0..=params.length_px.1).max(w);
        let theta = (rng.gen_range(0..n_steps) as f64 * params.rotation_step_deg).to_radians();
        let half_diag = ((w * w + l * l) as f64).sqrt() / 2.0;
        let lo = params.margin_px as f64 + half_diag + 1.0;
        let hi_r = params.height as f64 - 1.0 - lo;
        let hi_c = params.width as f64 - 1.0 - lo;
        if hi_r <= lo || hi_c <= lo {
            break;
        }
        let center = (rng.gen_range(lo..hi_r), rng.gen_range(lo..hi_c));
        let gable = rng.gen_bool(params.gable_fraction);
        let eave = rng.gen_range(params.eave_m.0..params.eave_m.1);
        let rise = rng.gen_range(params.ridge_rise_m.0..params.ridge_rise_m.1);
        let Some(b) = place_building(
            buildings.len() as u32 + 1,
            center,
            theta,
            w as f64 / 2.0,
            l as f64 / 2.0,
            gable,
            eave,
            eave + rise,
        ) else {
            continue;
        };
        let bbox = outline_bbox(&b.outline);
        if bbox.0 < params.margin_px
            || bbox.2 < params.margin_px
            || bbox.1 >= params.height as i64 - params.margin_px
            || bbox.3 >= params.width as i64 - params.margin_px
        {
            continue;
        }
        let sep = params.separation_px;
        let clear = bboxes.iter().all(|&(r0, r1, c0, c1)| {
            bbox.0 > r1 + sep || r0 > bbox.1 + sep || bbox.2 > c1 + sep || c0 > bbox.3 + sep
        });
        if !clear {
            continue;
        }
        bboxes.push(bbox);
        buildings.push(b);
    }
    SceneTruth {
        width: params.width,
        height: params.height,
        pixel_size: params.pixel_size,
        buildings,
    }
}

fn outline_bbox(outline: &[(i64, i64)]) -> (i64, i64, i64, i64) {
    let rs = outline.iter().map(|p| p.0);
    let cs = outline.iter().map(|p| p.1);
    (
        rs.clone().min().unwrap(),
        rs.max().unwrap(),
        cs.clone().min().unwrap(),
        cs.max().unwrap(),
    )
}

fn place_building(
    id: u32,
    center: (f64, f64), // (row, col)
    theta: f64,
    half_w: f64,
    half_l: f64,
    gable: bool,
    eave_m: f32,
    ridge_m: f32,
) -> Option<BuildingTruth> {
    // u: along the long axis, v: along the short axis, in (row, col) space.
    let u = (theta.sin(), theta.cos());
    let v = (theta.cos(), -theta.sin());
    let at = |su: f64, sv: f64| -> (i64, i64) {
        let r = center.0 + su * half_l * u.0 + sv * half_w * v.0;
        let c = center.1 + su * half_l * u.1 + sv * half_w * v.1;
        (r.round() as i64, c.round() as i64)
    };
    let a = at(-1.0, -1.0);
    let b = at(1.0, -1.0);
    let c = at(1.0, 1.0);
    let d = at(-1.0, 1.0);
    if gable {
        let r2 = at(1.0, 0.0);
        let r1 = at(-1.0, 0.0);
        // Counter-clockwise in world coordinates (y up = north).
        let outline = vec![a, r1, d, c, r2, b];
        if !distinct(&outline) {
            return None;
        }
        Some(BuildingTruth {
            id,
            kind: RoofKind::Gable,
            outline,
            ridge: Some((r1, r2)),
            eave_m,
            ridge_m,
        })
    } else {
        let outline = vec![a, d, c, b];
        if !distinct(&outline) {
            return None;
        }
        Some(BuildingTruth {
            id,
            kind: RoofKind::Flat,
            outline,
            ridge: None,
            eave_m: ridge_m.min(eave_m),
            ridge_m: ridge_m.min(eave_m),
        })
    }
}

fn distinct(points: &[(i64, i64)]) -> bool {
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).all(|w| w[0] != w[1])
}

#[derive(Debug, Clone)]
pub struct RasterizeParams {
    /// Odd pixel thickness of rasterized edge lines.
    pub edge_thickness: i64,
    pub ground_m: f32,
    /// Optional height quantization step in meters (e.g. 0.25).
    pub quantize_m: Option<f32>,
}

impl Default for RasterizeParams {
    fn default() -> Self {
        Self {
            edge_thickness: 3,
            ground_m: 0.0,
            quantize_m: None,
        }
    }
}

/// The rasterized inputs for a scene, plus truth labelings for metrics.
#[derive(Debug, Clone)]
pub struct SceneRasters {
    pub dsm: Raster,
    pub edge_prob: Raster,
    pub corner_prob: Raster,
    /// 1.0 inside a building footprint, 0.0 elsewhere.
    pub instance_prob: Raster,
    /// One label per roof plane (two for gables, one for flat roofs).
    pub plane_labels: LabelMap,
}

pub fn rasterize_truth(scene: &SceneTruth, params: &RasterizeParams) -> SceneRasters {
    let (w, h) = (scene.width, scene.height);
    let mut dsm = Raster::filled(w, h, params.ground_m);
    let mut edge_prob = Raster::filled(w, h, 0.0);
    let mut corner_prob = Raster::filled(w, h, 0.0);
    let mut instance_prob = Raster::filled(w, h, 0.0);
    let mut plane_labels = vec![0u32; w * h];
    let mut next_plane = 0u32;
    dsm.pixel_size = scene.pixel_size;
    edge_prob.pixel_size = scene.pixel_size;
    corner_prob.pixel_size = scene.pixel_size;
    instance_prob.pixel_size = scene.pixel_size;
    for b in &scene.buildings {
        // Surface heights and instance mask over the footprint bbox.
        let ring: Vec<(f64, f64)> = b.outline.iter().map(|&(r, c)| (c as f64, r as f64)).collect();
        let (r0, r1, c0, c1) = outline_bbox(&b.outline);
        let plane_base = next_plane;
        match b.kind {
            RoofKind::Flat => next_plane += 1,
            RoofKind::Gable => next_plane += 2,
        }
        for row in r0.max(0)..=r1.min(h as i64 - 1) {
            for col in c0.max(0)..=c1.min(w as i64 - 1) {
                let p = (col as f64, row as f64);
                if locate_point(p, &ring) == PointLocation::Outside {
                    continue;
                }
                let z = roof_height(b, p, scene.pixel_size as f64);
                dsm.set(row as usize, col as usize, params.ground_m + z);
                instance_prob.set(row as usize, col as usize, 1.0);
                let plane = match b.ridge {
                    None => plane_base + 1,
                    Some((p1, p2)) => {
                        let a = (p1.1 as f64, p1.0 as f64);
                        let bb = (p2.1 as f64, p2.0 as f64);
                        let side = crate::geom::cross(a, bb, p);
                        if side >= 0.0 {
                            plane_base + 1
                        } else {
                            plane_base + 2
                        }
                    }
                };
                plane_labels[row as usize * w + col as usize] = plane;
            }
        }
        // Edges: outline segments plus the ridge, as thick supercover lines.
        let mut segments: Vec<((i64, i64), (i64, i64))> = Vec::new();
        let n = b.outline.len();
        for i in 0..n {
            segments.push((b.outline[i], b.outline[(i + 1) % n]));
        }
        if let Some((p1, p2)) = b.ridge {
            segments.push((p1, p2));
        }
        let pad = params.edge_thickness / 2;
        for (p, q) in segments {
            for (pr, pc) in supercover_line(p, q) {
                for dr in -pad..=pad {
                    for dc in -pad..=pad {
                        let (nr, nc) = (pr + dr, pc + dc);
                        if nr >= 0 && nc >= 0 && nr < h as i64 && nc < w as i64 {
                            edge_prob.set(nr as usize, nc as usize, 1.0);
                        }
                    }
                }
            }
        }
        for &(r, c) in b.corners() {
            if r >= 0 && c >= 0 && r < h as i64 && c < w as i64 {
                corner_prob.set(r as usize, c as usize, 1.0);
            }
        }
    }
    if let Some(q) = params.quantize_m {
        for v in dsm.values.iter_mut() {
            if *v != dsm.nodata {
                *v = (*v / q).round() * q;
            }
        }
    }
    SceneRasters {
        dsm,
        edge_prob,
        corner_prob,
        instance_prob,
        plane_labels: LabelMap {
            width: w,
            height: h,
            labels: plane_labels,
            n_components: next_plane,
        },
    }
}

/// Roof surface height above ground at pixel point `p = (x=col, y=row)`.
fn roof_height(b: &BuildingTruth, p: (f64, f64), pixel_size: f64) -> f32 {
    match b.ridge {
        None => b.eave_m,
        Some((p1, p2)) => {
            let a = (p1.1 as f64, p1.0 as f64);
            let bb = (p2.1 as f64, p2.0 as f64);
            let (dist_px, _) = project_on_segment(p, a, bb);
            // Half-width: eave corner distance from the ridge line.
            let corner = (b.outline[0].1 as f64, b.outline[0].0 as f64);
            let (half_w_px, _) = project_on_segment(corner, a, bb);
            if half_w_px <= 0.0 {
                return b.ridge_m;
            }
            let d_m = dist_px * pixel_size;
            let half_m = half_w_px * pixel_size;
            let z = b.ridge_m as f64
                - (b.ridge_m - b.eave_m) as f64 * (d_m / half_m).clamp(0.0, 1.0);
            z as f32
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DegradeParams {
    pub dsm_noise_sigma_m: f32,
    /// Per-pixel probability of zeroing an edge pixel.
    pub edge_dropout: f64,
    /// Maximum per-axis corner displacement in pixels.
    pub corner_jitter_px: i64,
}

/// Seeded degradation of rasterized inputs; the truth is left untouched.
pub fn degrade(rasters: &SceneRasters, params: &DegradeParams, seed: u64) -> SceneRasters {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = rasters.clone();
    if params.dsm_noise_sigma_m > 0.0 {
        let normal = rand_distr::Normal::new(0.0f64, params.dsm_noise_sigma_m as f64).unwrap();
        for v in out.dsm.values.iter_mut() {
            if *v != out.dsm.nodata {
                *v += rng.sample(normal) as f32;
            }
        }
    }
    if params.edge_dropout > 0.0 {
        for v in out.edge_prob.values.iter_mut() {
            if *v > 0.0 && rng.gen_bool(params.edge_dropout) {
                *v = 0.0;
            }
        }
    }
    if params.corner_jitter_px > 0 {
        let (w, h) = (out.corner_prob.width, out.corner_prob.height);
        let j = params.corner_jitter_px;
        let mut jittered = Raster::filled(w, h, 0.0);
        jittered.pixel_size = out.corner_prob.pixel_size;
        for row in 0..h {
            for col in 0..w {
                let p = out.corner_prob.get(row, col);
                if p <= 0.0 {
                    continue;
                }
                let nr = row as i64 + rng.gen_range(-j..=j);
                let nc = col as i64 + rng.gen_range(-j..=j);
                let nr = nr.clamp(0, h as i64 - 1) as usize;
                let nc = nc.clamp(0, w as i64 - 1) as usize;
                if p > jittered.get(nr, nc) {
                    jittered.set(nr, nc, p);
                }
            }
        }
        out.corner_prob = jittered;
    }
    out
}
