//! Command-line interface: `vectorize`, `ndsm`, `synth` and `metrics`
//! subcommands over the library pipeline.
//!
//! Exit codes: 0 on success, 2 for input problems (unreadable or malformed
//! rasters, bad config, mismatched dimensions), 1 for internal failures.

use crate::metrics::height_error_stats;
use crate::model::{export_geojson, export_obj};
use crate::pipeline::{run_vectorize, PipelineConfig, PipelineError};
use crate::raster::{format_for_path, load_raster, save_raster, Raster};
use crate::synth::{
    degrade, generate_scene, rasterize_truth, DegradeParams, RasterizeParams, SceneParams,
};
use crate::terrain::generate_ndsm;
use clap::{Args, Parser, Subcommand};
use std::fs;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser)]
#[command(
    name = "lod2vec",
    about = "LoD-2 building vectorization from DSM and edge/corner probability rasters",
    version
)]
pub struct Cli {
    /// Worker thread count (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run the full vectorization pipeline and write OBJ/GeoJSON models.
    Vectorize(VectorizeArgs),
    /// Generate an nDSM from a DSM via morphological opening.
    Ndsm(NdsmArgs),
    /// Generate a synthetic scene with ground truth.
    Synth(SynthArgs),
    /// Compare a predicted height raster against a reference.
    Metrics(MetricsArgs),
}

#[derive(Args)]
pub struct VectorizeArgs {
    /// Refined DSM raster.
    #[arg(long)]
    pub dsm: PathBuf,
    /// Edge probability raster.
    #[arg(long)]
    pub edges: PathBuf,
    /// Corner probability raster.
    #[arg(long)]
    pub corners: PathBuf,
    /// Building instance probability raster; derived from the nDSM if omitted.
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// TOML pipeline configuration; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub nms_half: Option<usize>,
    #[arg(long)]
    pub corner_min_prob: Option<f32>,
    #[arg(long)]
    pub tau_mean: Option<f32>,
    #[arg(long)]
    pub tau_bin: Option<f32>,
    #[arg(long)]
    pub line_width: Option<f64>,
    #[arg(long)]
    pub rect_width: Option<f64>,
    #[arg(long)]
    pub ndsm_se_half: Option<usize>,
    #[arg(long)]
    pub height_window_half: Option<usize>,
    /// Report heights above sea level instead of above ground.
    #[arg(long)]
    pub absolute_heights: bool,
}

#[derive(Args)]
pub struct NdsmArgs {
    #[arg(long)]
    pub dsm: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub se_half: usize,
}

#[derive(Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 1024)]
    pub width: usize,
    #[arg(long, default_value_t = 1024)]
    pub height: usize,
    #[arg(long, default_value_t = 10)]
    pub min_buildings: usize,
    #[arg(long, default_value_t = 50)]
    pub max_buildings: usize,
    #[arg(long, default_value_t = 3)]
    pub edge_thickness: i64,
    /// Quantize DSM heights to this step in meters.
    #[arg(long)]
    pub quantize: Option<f32>,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sigma: f32,
    #[arg(long, default_value_t = 0.0)]
    pub edge_dropout: f64,
    #[arg(long, default_value_t = 0)]
    pub corner_jitter: i64,
}

#[derive(Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    /// Binary mask raster restricting the comparison.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Output JSON path; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version requests are not errors.
            let code = if e.exit_code() == 0 { EXIT_OK } else { EXIT_INPUT };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        // Ignore failure: the global pool may already exist in tests.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let result = match cli.command {
        Command::Vectorize(args) => cmd_vectorize(args),
        Command::Ndsm(args) => cmd_ndsm(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Metrics(args) => cmd_metrics(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Internal(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Internal(m) => write!(f, "{m}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

fn read_raster(path: &Path) -> Result<Raster, CliError> {
    load_raster(path, format_for_path(path)).map_err(|e| CliError::Input(e.to_string()))
}

fn write_raster(r: &Raster, path: &Path) -> Result<(), CliError> {
    save_raster(r, path, format_for_path(path)).map_err(|e| CliError::Internal(e.to_string()))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn cmd_vectorize(args: VectorizeArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            PipelineConfig::from_toml(&text)
                .map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))?
        }
        None => PipelineConfig::default(),
    };
    macro_rules! override_opt {
        ($($field:ident),*) => {
            $(if let Some(v) = args.$field { config.$field = v; })*
        };
    }
    override_opt!(
        nms_half,
        corner_min_prob,
        tau_mean,
        tau_bin,
        line_width,
        rect_width,
        ndsm_se_half,
        height_window_half
    );
    if args.absolute_heights {
        config.absolute_heights = true;
    }
    let dsm = read_raster(&args.dsm)?;
    let edges = read_raster(&args.edges)?;
    let corners = read_raster(&args.corners)?;
    let instances = args.instances.as_deref().map(read_raster).transpose()?;
    let out = run_vectorize(&dsm, &edges, &corners, instances.as_ref(), &config).map_err(
        |e| match e {
            PipelineError::DimensionMismatch(..) | PipelineError::Raster(_) => {
                CliError::Input(e.to_string())
            }
        },
    )?;
    ensure_dir(&args.out_dir)?;
    write_text(&args.out_dir.join("model.obj"), &export_obj(&out.models))?;
    write_text(
        &args.out_dir.join("footprints.geojson"),
        &export_geojson(&out.models),
    )?;
    write_raster(&out.ndsm, &args.out_dir.join("ndsm.f32"))?;
    let report = serde_json::to_string_pretty(&out.report)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_text(&args.out_dir.join("report.json"), &report)?;
    for w in &out.report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn cmd_ndsm(args: NdsmArgs) -> Result<(), CliError> {
    let dsm = read_raster(&args.dsm)?;
    dsm.validate().map_err(|e| CliError::Input(e.to_string()))?;
    let ndsm = generate_ndsm(&dsm, args.se_half);
    write_raster(&ndsm, &args.out)
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    if args.min_buildings > args.max_buildings {
        return Err(CliError::Input(
            "min-buildings must not exceed max-buildings".to_string(),
        ));
    }
    let params = SceneParams {
        width: args.width,
        height: args.height,
        n_buildings: (args.min_buildings, args.max_buildings),
        ..Default::default()
    };
    let scene = generate_scene(&params, args.seed);
    let rasters = rasterize_truth(
        &scene,
        &RasterizeParams {
            edge_thickness: args.edge_thickness,
            quantize_m: args.quantize,
            ..Default::default()
        },
    );
    let rasters = degrade(
        &rasters,
        &DegradeParams {
            dsm_noise_sigma_m: args.noise_sigma,
            edge_dropout: args.edge_dropout,
            corner_jitter_px: args.corner_jitter,
        },
        args.seed.wrapping_add(1),
    );
    ensure_dir(&args.out_dir)?;
    write_raster(&rasters.dsm, &args.out_dir.join("dsm.f32"))?;
    write_raster(&rasters.edge_prob, &args.out_dir.join("edges.f32"))?;
    write_raster(&rasters.corner_prob, &args.out_dir.join("corners.f32"))?;
    write_raster(&rasters.instance_prob, &args.out_dir.join("instances.f32"))?;
    let truth =
        serde_json::to_string_pretty(&scene).map_err(|e| CliError::Internal(e.to_string()))?;
    write_text(&args.out_dir.join("truth.json"), &truth)
}

fn cmd_metrics(args: MetricsArgs) -> Result<(), CliError> {
    let pred = read_raster(&args.pred)?;
    let truth = read_raster(&args.truth)?;
    let mask = args.mask.as_deref().map(read_raster).transpose()?;
    let stats = height_error_stats(&pred, &truth, mask.as_ref())
        .map_err(|e| CliError::Input(e.to_string()))?;
    let text =
        serde_json::to_string_pretty(&stats).map_err(|e| CliError::Internal(e.to_string()))?;
    match &args.out {
        Some(path) => write_text(path, &text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
