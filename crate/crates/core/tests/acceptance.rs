//! Acceptance gate: one test per release criterion. Every test prints a
//! single `ACCEPTANCE <n>: PASS/FAIL — <detail>` line (visible with
//! `cargo test --test acceptance -- --nocapture`) and then asserts, so a
//! red criterion fails the suite.

mod common;

use lod2vec::metrics::{
    fit_plane, height_error_stats, instance_recall, nmad, normal_angle_deg,
};
use lod2vec::model::{euler_characteristic, is_closed_mesh, BuildingModel3D};
use lod2vec::pipeline::{run_vectorize, PipelineConfig};
use lod2vec::raster::{window_extremum, ExtremumMode, Raster, Window};
use lod2vec::synth::{
    degrade, generate_scene, rasterize_truth, BuildingTruth, DegradeParams, RasterizeParams,
    RoofKind, SceneParams, SceneTruth,
};
use lod2vec::terrain::generate_ndsm;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;
use std::time::Instant;

const N_SCENES: u64 = 100;
const IOU_STEP: f64 = 0.125; // quarter of the 0.5 m pixel size

/// Serializes the CPU-heavy criteria (1/6 shared run, 2, 7) so the timed
/// ones are not skewed by other tests saturating the cores.
static HEAVY: std::sync::Mutex<()> = std::sync::Mutex::new(());

fn heavy_guard() -> std::sync::MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion}: {verdict} — {detail}");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

// ---------------------------------------------------------------------------
// Shared noiseless 100-scene run, used by criteria 1 and 6.

struct NoiselessSummary {
    n_truth: usize,
    n_matched: usize,
    /// Largest distance from a truth corner to the nearest predicted
    /// vertex of its matched building, in pixels.
    max_vertex_err_px: f64,
    /// Roof vertices whose height differs from the 5x5 DSM window max.
    /// The scenes have flat ground at 0 and buildings far smaller than
    /// the opening window, so the nDSM equals the DSM bit for bit and the
    /// DSM is an independent reference for the roof heights.
    roof_z_mismatches: usize,
    n_roof_vertices: usize,
    elapsed_secs: f64,
    n_models: usize,
    n_open_meshes: usize,
    n_bad_euler: usize,
}

fn noiseless_summary() -> &'static NoiselessSummary {
    static SUMMARY: OnceLock<NoiselessSummary> = OnceLock::new();
    SUMMARY.get_or_init(run_noiseless_scenes)
}

fn scene_params() -> SceneParams {
    SceneParams {
        n_buildings: (10, 50),
        ..Default::default()
    }
}

fn run_noiseless_scenes() -> NoiselessSummary {
    let _guard = heavy_guard();
    let config = PipelineConfig::default();
    let mut s = NoiselessSummary {
        n_truth: 0,
        n_matched: 0,
        max_vertex_err_px: 0.0,
        roof_z_mismatches: 0,
        n_roof_vertices: 0,
        elapsed_secs: 0.0,
        n_models: 0,
        n_open_meshes: 0,
        n_bad_euler: 0,
    };
    for seed in 0..N_SCENES {
        // Time scene construction and the pipeline itself; the metric
        // evaluation below is test bookkeeping, not pipeline work.
        let start = Instant::now();
        let scene = generate_scene(&scene_params(), seed);
        let rasters = rasterize_truth(&scene, &RasterizeParams::default());
        let out = run_vectorize(
            &rasters.dsm,
            &rasters.edge_prob,
            &rasters.corner_prob,
            Some(&rasters.instance_prob),
            &config,
        )
        .expect("pipeline run");
        s.elapsed_secs += start.elapsed().as_secs_f64();
        let ps = rasters.dsm.pixel_size as f64;
        let truth = scene.footprints_world();
        let pred: Vec<Vec<(f64, f64)>> = out
            .models
            .iter()
            .map(|m| m.footprint[0].clone())
            .collect();
        let recall = instance_recall(&pred, &truth, config.iou_threshold, IOU_STEP);
        s.n_truth += recall.n_truth;
        s.n_matched += recall.matched;
        for &(pi, ti, _) in &recall.pairs {
            let err = max_corner_error_px(&out.models[pi], &scene.buildings[ti], ps);
            s.max_vertex_err_px = s.max_vertex_err_px.max(err);
        }
        for m in &out.models {
            let (n, bad) = roof_z_check(m, &rasters.dsm, ps);
            s.n_roof_vertices += n;
            s.roof_z_mismatches += bad;
            s.n_models += 1;
            if !is_closed_mesh(m) {
                s.n_open_meshes += 1;
            }
            if euler_characteristic(m) != 2 {
                s.n_bad_euler += 1;
            }
        }
    }
    s
}

/// Largest distance (pixels) from any truth corner to the nearest vertex
/// of the predicted model.
fn max_corner_error_px(model: &BuildingModel3D, truth: &BuildingTruth, ps: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for &(r, c) in truth.corners() {
        let t = (c as f64 * ps, -(r as f64) * ps);
        let best = model
            .vertices
            .iter()
            .map(|v| ((v[0] - t.0).powi(2) + (v[1] - t.1).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(best);
    }
    worst / ps
}

/// Count roof vertices whose height is not exactly the 5x5 DSM window max
/// at the vertex pixel.
fn roof_z_check(model: &BuildingModel3D, dsm: &Raster, ps: f64) -> (usize, usize) {
    let mut checked = 0;
    let mut bad = 0;
    let mut seen = std::collections::HashSet::new();
    for face in &model.roof_faces {
        for &vi in face {
            if !seen.insert(vi) {
                continue;
            }
            let v = model.vertices[vi];
            let col = (v[0] / ps).round() as usize;
            let row = (-v[1] / ps).round() as usize;
            let want = window_extremum(dsm, Window::new(row, col, 2), ExtremumMode::Max)
                .expect("vertex inside raster");
            checked += 1;
            if v[2] as f32 != want {
                bad += 1;
            }
        }
    }
    (checked, bad)
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_1_noiseless_scenes_recovered_exactly() {
    let s = noiseless_summary();
    let recall = s.n_matched as f64 / s.n_truth as f64;
    let pass = recall >= 0.99
        && s.max_vertex_err_px <= 1.0
        && s.roof_z_mismatches == 0
        && s.elapsed_secs < 60.0;
    report(
        1,
        pass,
        &format!(
            "{} scenes: recall {:.4} ({}/{}), max vertex error {:.3} px, \
             {}/{} roof heights off the 5x5 DSM window max, {:.1} s total",
            N_SCENES,
            recall,
            s.n_matched,
            s.n_truth,
            s.max_vertex_err_px,
            s.roof_z_mismatches,
            s.n_roof_vertices,
            s.elapsed_secs
        ),
    );
}

#[test]
fn criterion_2_degraded_scenes_keep_high_recall() {
    let _guard = heavy_guard();
    let config = PipelineConfig::default();
    let degrade_params = DegradeParams {
        dsm_noise_sigma_m: 0.5,
        edge_dropout: 0.2,
        corner_jitter_px: 1,
    };
    let mut n_truth = 0;
    let mut n_matched = 0;
    for seed in 0..N_SCENES {
        let scene = generate_scene(&scene_params(), seed);
        let clean = rasterize_truth(&scene, &RasterizeParams::default());
        let rasters = degrade(&clean, &degrade_params, seed.wrapping_add(1));
        let out = run_vectorize(
            &rasters.dsm,
            &rasters.edge_prob,
            &rasters.corner_prob,
            Some(&rasters.instance_prob),
            &config,
        )
        .expect("pipeline run");
        let truth = scene.footprints_world();
        let pred: Vec<Vec<(f64, f64)>> = out
            .models
            .iter()
            .map(|m| m.footprint[0].clone())
            .collect();
        let recall = instance_recall(&pred, &truth, config.iou_threshold, IOU_STEP);
        n_truth += recall.n_truth;
        n_matched += recall.matched;
    }
    let recall = n_matched as f64 / n_truth as f64;
    report(
        2,
        recall >= 0.90,
        &format!(
            "{} degraded scenes (sigma 0.5 m, 20% edge dropout, 1 px jitter): \
             recall {:.4} ({}/{})",
            N_SCENES, recall, n_matched, n_truth
        ),
    );
}

/// Axis-aligned gable in a 256x256 scene: ridge 15 m, eave 11 m, half
/// width 24 px = 12 m at 0.5 m pixels.
fn reference_gable() -> SceneTruth {
    SceneTruth {
        width: 256,
        height: 256,
        pixel_size: 0.5,
        buildings: vec![BuildingTruth {
            id: 1,
            kind: RoofKind::Gable,
            outline: vec![
                (20, 8),
                (220, 8),
                (220, 32),
                (220, 56),
                (20, 56),
                (20, 32),
            ],
            ridge: Some(((20, 32), (220, 32))),
            eave_m: 11.0,
            ridge_m: 15.0,
        }],
    }
}

#[test]
fn criterion_3_gable_heights_with_quantized_dsm() {
    let scene = reference_gable();
    let rasters = rasterize_truth(
        &scene,
        &RasterizeParams {
            quantize_m: Some(0.25),
            ..Default::default()
        },
    );
    let out = run_vectorize(
        &rasters.dsm,
        &rasters.edge_prob,
        &rasters.corner_prob,
        Some(&rasters.instance_prob),
        &PipelineConfig::default(),
    )
    .expect("pipeline run");
    assert_eq!(out.models.len(), 1, "expected one building");
    let ridge = out.models[0].ridge_m();
    let eave = out.models[0].eave_m();
    let pass = (ridge - 15.0).abs() <= 0.5 && (eave - 11.0).abs() <= 0.5 && eave >= 11.0 - 1e-6;
    report(
        3,
        pass,
        &format!(
            "0.25 m quantized DSM: ridge {ridge:.3} m (truth 15), eave {eave:.3} m \
             (truth 11, bias {:+.3} m)",
            eave - 11.0
        ),
    );
}

#[test]
fn criterion_4_stage_oracles() {
    let checks: [(&str, fn(usize)); 5] = [
        ("nms", common::check_nms_oracle),
        ("ccl", common::check_ccl_oracle),
        ("faces", common::check_faces_oracle),
        ("window", common::check_window_oracle),
        ("footprint", common::check_footprint_oracle),
    ];
    let mut failed = Vec::new();
    for (name, check) in checks {
        if std::panic::catch_unwind(move || check(1000)).is_err() {
            failed.push(name);
        }
    }
    report(
        4,
        failed.is_empty(),
        &format!(
            "nms, ccl, faces, window, footprint oracles at 1000 cases each; failed: {:?}",
            failed
        ),
    );
}

#[test]
fn criterion_5_metric_sanity() {
    let mut details = Vec::new();
    let mut pass = true;

    // NMAD of 100k unit Gaussian samples is 1 within 2%.
    let mut rng = ChaCha8Rng::seed_from_u64(0x4e4d4144);
    let normal = rand_distr::Normal::new(0.0f64, 1.0).unwrap();
    let samples: Vec<f64> = (0..100_000).map(|_| rng.sample(normal)).collect();
    let got = nmad(&samples);
    pass &= (got - 1.0).abs() <= 0.02;
    details.push(format!("nmad(N(0,1)) = {got:.4}"));

    // RMSE >= MAE on random residual sets.
    let mut violations = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..64);
        let pred: Vec<f32> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let truth: Vec<f32> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let s = height_error_stats(
            &Raster::from_values(n, 1, pred),
            &Raster::from_values(n, 1, truth),
            None,
        )
        .unwrap();
        if s.rmse < s.mae - 1e-12 {
            violations += 1;
        }
    }
    pass &= violations == 0;
    details.push(format!("rmse<mae violations {violations}/1000"));

    // A 45 degree plane against a horizontal one.
    let mut tilted = Vec::new();
    let mut flat = Vec::new();
    for i in 0..20 {
        for j in 0..20 {
            let (x, y) = (i as f64 * 0.5, j as f64 * 0.5);
            tilted.push([x, y, x]);
            flat.push([x, y, 0.0]);
        }
    }
    let angle = normal_angle_deg(fit_plane(&tilted).unwrap(), fit_plane(&flat).unwrap());
    pass &= (angle - 45.0).abs() <= 1e-6;
    details.push(format!("45 deg pair: {angle:.9} deg"));

    // Pitch of a rasterized gable plane: rise 4 m over 12 m half width.
    let rasters = rasterize_truth(&reference_gable(), &RasterizeParams::default());
    let ps = rasters.dsm.pixel_size as f64;
    let mut points = Vec::new();
    for row in 0..rasters.dsm.height {
        for col in 0..rasters.dsm.width {
            if rasters.plane_labels.get(row, col) == 1 {
                points.push([
                    col as f64 * ps,
                    -(row as f64) * ps,
                    rasters.dsm.get(row, col) as f64,
                ]);
            }
        }
    }
    let pitch = normal_angle_deg(fit_plane(&points).unwrap(), [0.0, 0.0, 1.0]);
    let want = (4.0f64 / 12.0).atan().to_degrees();
    pass &= (pitch - want).abs() <= 0.5;
    details.push(format!("gable pitch {pitch:.3} deg (truth {want:.3})"));

    report(5, pass, &details.join("; "));
}

#[test]
fn criterion_6_meshes_are_closed_two_manifolds() {
    let s = noiseless_summary();
    let pass = s.n_models > 0 && s.n_open_meshes == 0 && s.n_bad_euler == 0;
    report(
        6,
        pass,
        &format!(
            "{} models: {} open meshes, {} with Euler characteristic != 2",
            s.n_models, s.n_open_meshes, s.n_bad_euler
        ),
    );
}

#[test]
fn criterion_7_runtime_and_ndsm_scaling() {
    let _guard = heavy_guard();
    // Full single-threaded vectorization of a large dense scene.
    let params = SceneParams {
        width: 2048,
        height: 2048,
        n_buildings: (200, 200),
        ..Default::default()
    };
    let scene = generate_scene(&params, 4242);
    let rasters = rasterize_truth(&scene, &RasterizeParams::default());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let start = Instant::now();
    let out = pool
        .install(|| {
            run_vectorize(
                &rasters.dsm,
                &rasters.edge_prob,
                &rasters.corner_prob,
                Some(&rasters.instance_prob),
                &PipelineConfig::default(),
            )
        })
        .expect("pipeline run");
    let big_secs = start.elapsed().as_secs_f64();

    // nDSM cost grows linearly with pixel count: 2048^2 vs 1024^2 ~= 4x.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut random_dsm = |n: usize| {
        Raster::from_values(n, n, (0..n * n).map(|_| rng.gen_range(0.0..30.0)).collect())
    };
    let small = random_dsm(1024);
    let large = random_dsm(2048);
    // Interleave the two sizes and take the best of five, so transient
    // load hits both measurements alike.
    let sample = |dsm: &Raster| {
        let t = Instant::now();
        std::hint::black_box(generate_ndsm(std::hint::black_box(dsm), 100));
        t.elapsed().as_secs_f64()
    };
    let (mut t_small, mut t_large) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..5 {
        t_small = t_small.min(sample(&small));
        t_large = t_large.min(sample(&large));
    }
    let ratio = t_large / t_small;

    let pass = big_secs < 10.0 && (ratio - 4.0).abs() <= 0.5;
    report(
        7,
        pass,
        &format!(
            "2048x2048 with {} buildings: {:.2} s single-threaded ({} models); \
             nDSM 2048^2/1024^2 time ratio {:.2} ({:.0} ms / {:.0} ms)",
            scene.buildings.len(),
            big_secs,
            out.models.len(),
            ratio,
            t_large * 1e3,
            t_small * 1e3
        ),
    );
}

#[test]
fn criterion_8_outputs_are_deterministic() {
    let exe = env!("CARGO_BIN_EXE_lod2vec");
    let dir = tempfile::tempdir().unwrap();
    let scene_dir = dir.path().join("scene");
    let run = |args: &[&str]| {
        let status = std::process::Command::new(exe)
            .args(args)
            .status()
            .expect("spawn lod2vec");
        assert!(status.success(), "lod2vec {args:?} failed");
    };
    run(&[
        "synth",
        "--seed",
        "11",
        "--out-dir",
        scene_dir.to_str().unwrap(),
        "--width",
        "512",
        "--height",
        "512",
        "--min-buildings",
        "6",
        "--max-buildings",
        "10",
    ]);
    let vectorize = |out: &std::path::Path, threads: &str| {
        run(&[
            "--threads",
            threads,
            "vectorize",
            "--dsm",
            scene_dir.join("dsm.f32").to_str().unwrap(),
            "--edges",
            scene_dir.join("edges.f32").to_str().unwrap(),
            "--corners",
            scene_dir.join("corners.f32").to_str().unwrap(),
            "--instances",
            scene_dir.join("instances.f32").to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ]);
    };
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    vectorize(&a, "1");
    vectorize(&b, "1");
    vectorize(&c, "4");
    let mut mismatches = Vec::new();
    for name in ["model.obj", "footprints.geojson", "ndsm.f32"] {
        let bytes_a = std::fs::read(a.join(name)).unwrap();
        for other in [&b, &c] {
            if std::fs::read(other.join(name)).unwrap() != bytes_a {
                mismatches.push(format!("{name} ({})", other.display()));
            }
        }
    }
    // Reports are compared with the wall-clock timings stripped.
    let report_of = |d: &std::path::Path| {
        let mut v: serde_json::Value =
            serde_json::from_slice(&std::fs::read(d.join("report.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timings_ms");
        v
    };
    let ra = report_of(&a);
    for other in [&b, &c] {
        if report_of(other) != ra {
            mismatches.push(format!("report.json ({})", other.display()));
        }
    }
    report(
        8,
        mismatches.is_empty(),
        &format!(
            "two single-threaded runs and one 4-thread run compared byte for byte; \
             mismatches: {:?}",
            mismatches
        ),
    );
}
