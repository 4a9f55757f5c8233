//! Command-line front end: format conversion, estimation with a full JSON
//! report, and phantom generation.
//!
//! Exit codes are a stable contract: 0 success, 2 usage/config/parse
//! errors, 3 I/O errors, 4 pipeline errors. stdout carries machine-
//! readable JSON only; all prose goes to stderr.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use bodymetrics::io as bmio;
use bodymetrics::metrics::{run_pipeline, AxisMode, PipelineConfig, PipelineInput};
use bodymetrics::phantom::{
    make_humanoid, render_depth, sample_surface, HumanoidPose, PhantomScene, Pose, ShapeKind,
    Solid,
};
use bodymetrics::{CameraIntrinsics, Error as BmError, PointCloud};

use report::{build_report, InputInfo};

/// 848x480 depth geometry used when rendering phantoms.
const DEFAULT_INTRINSICS: CameraIntrinsics = CameraIntrinsics {
    fx: 425.0,
    fy: 425.0,
    cx: 424.0,
    cy: 240.0,
    width: 848,
    height: 480,
    depth_scale: 0.001,
};

#[derive(Parser)]
#[command(name = "bodymetrics", version, about = "Body volume, height and weight from 3D depth data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert between depth frames and PLY point clouds.
    Convert(ConvertArgs),
    /// Run the estimation pipeline and emit a JSON report.
    Estimate(EstimateArgs),
    /// Generate synthetic phantoms with analytic ground truth.
    Phantom(PhantomArgs),
}

#[derive(Args)]
struct ConvertArgs {
    /// Input file: .ply, .pgm or .raw (depth needs --intrinsics).
    #[arg(long)]
    input: PathBuf,
    /// Intrinsics JSON for depth input.
    #[arg(long)]
    intrinsics: Option<PathBuf>,
    /// Output PLY path.
    #[arg(long)]
    output: PathBuf,
    /// Output PLY encoding.
    #[arg(long, value_enum, default_value_t = PlyFormat::Binary)]
    format: PlyFormat,
    /// Keep only depths in [band-lo, band-hi] meters when back-projecting.
    #[arg(long, default_value_t = 0.0)]
    band_lo: f64,
    #[arg(long, default_value_t = f64::INFINITY)]
    band_hi: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlyFormat {
    Ascii,
    Binary,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input file: .ply, .pgm or .raw (depth needs --intrinsics).
    #[arg(long)]
    input: PathBuf,
    /// Intrinsics JSON for depth input.
    #[arg(long)]
    intrinsics: Option<PathBuf>,
    /// Pipeline configuration JSON; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    json: Option<PathBuf>,

    #[arg(long)]
    band_lo: Option<f64>,
    #[arg(long)]
    band_hi: Option<f64>,
    /// Remove the dominant support plane (bed/floor).
    #[arg(long, overrides_with = "no_ransac")]
    ransac: bool,
    #[arg(long, overrides_with = "ransac")]
    no_ransac: bool,
    #[arg(long)]
    ransac_thresh: Option<f64>,
    #[arg(long)]
    ransac_iters: Option<usize>,
    /// Mirror the cloud about the support plane (requires ransac).
    #[arg(long, overrides_with = "no_mirror")]
    mirror: bool,
    #[arg(long, overrides_with = "mirror")]
    no_mirror: bool,
    #[arg(long)]
    sor_k: Option<usize>,
    #[arg(long)]
    sor_alpha: Option<f64>,
    /// Voxel size in meters (0 disables downsampling).
    #[arg(long)]
    voxel: Option<f64>,
    #[arg(long, value_enum)]
    axis: Option<AxisArg>,
    #[arg(long)]
    slabs: Option<usize>,
    #[arg(long)]
    min_slab_points: Option<usize>,
    /// Percentile trimmed from each end of the height projections.
    #[arg(long)]
    trim: Option<f64>,
    /// Body density in kg/m^3.
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Pca,
    X,
    Y,
    Z,
}

impl From<AxisArg> for AxisMode {
    fn from(a: AxisArg) -> AxisMode {
        match a {
            AxisArg::Pca => AxisMode::Pca,
            AxisArg::X => AxisMode::X,
            AxisArg::Y => AxisMode::Y,
            AxisArg::Z => AxisMode::Z,
        }
    }
}

#[derive(Args)]
struct PhantomArgs {
    #[arg(long, value_enum, default_value_t = ShapeArg::Humanoid)]
    shape: ShapeArg,
    /// Phantom height in meters (humanoid).
    #[arg(long, default_value_t = 1.75)]
    height: f64,
    /// Cross-section scale factor (humanoid).
    #[arg(long, default_value_t = 1.0)]
    build: f64,
    #[arg(long, value_enum, default_value_t = PoseArg::ArmsDown)]
    pose: PoseArg,
    /// Shape dimensions "a,b,c" in meters: ellipsoid semi-axes, box edge
    /// lengths, or capsule "radius,cylinder-length".
    #[arg(long)]
    dims: Option<String>,
    /// Surface sampling density in points per square meter.
    #[arg(long, default_value_t = 20_000.0)]
    points_per_m2: f64,
    /// Isotropic Gaussian noise added to sampled points, in meters.
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add a support patch "half_x,half_y" through the solid centers.
    #[arg(long)]
    bed: Option<String>,
    /// Write a sampled cloud here (PLY).
    #[arg(long)]
    cloud_out: Option<PathBuf>,
    /// Render a depth frame here (16-bit PGM).
    #[arg(long)]
    depth_out: Option<PathBuf>,
    /// Where to write the intrinsics JSON that goes with --depth-out.
    #[arg(long)]
    intrinsics_out: Option<PathBuf>,
    /// Camera distance for rendering, in meters.
    #[arg(long, default_value_t = 2.0)]
    camera_distance: f64,
    /// Per-pixel Gaussian depth noise for rendering, in meters.
    #[arg(long, default_value_t = 0.003)]
    depth_noise_sigma: f64,
    /// Write ground truth JSON here.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Humanoid,
    Ellipsoid,
    Capsule,
    Box,
}

#[derive(Clone, Copy, ValueEnum)]
enum PoseArg {
    ArmsDown,
    ArmsOut,
}

/// Failure modes mapped onto the exit-code contract.
enum CliError {
    /// Bad usage, unreadable/unparseable inputs, bad configuration.
    Usage(String),
    /// Output-side I/O failures.
    Io(String),
    /// A pipeline stage failed on valid input.
    Pipeline(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Pipeline(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Pipeline(m) => m,
        }
    }
}

/// Classifies an input-side library error (reading/parsing) as usage.
fn input_err(path: &Path, err: BmError) -> CliError {
    CliError::Usage(format!("cannot read {}: {err}", path.display()))
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Convert(args) => cmd_convert(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Phantom(args) => cmd_phantom(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

/// BODYMETRICS_THREADS caps internal parallelism; 0 or unset means auto.
fn configure_threads() {
    if let Ok(v) = std::env::var("BODYMETRICS_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

enum LoadedInput {
    Cloud(PointCloud),
    Frame(Box<bodymetrics::DepthFrame>),
}

fn input_kind(path: &Path) -> Result<&'static str, CliError> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("ply") => Ok("ply"),
        Some("pgm") => Ok("pgm"),
        Some("raw") => Ok("raw"),
        _ => Err(CliError::Usage(format!(
            "cannot tell the format of {} (expected .ply, .pgm or .raw)",
            path.display()
        ))),
    }
}

fn load_input(path: &Path, intrinsics: Option<&Path>) -> Result<LoadedInput, CliError> {
    match input_kind(path)? {
        "ply" => {
            let cloud = bmio::read_ply(path).map_err(|e| input_err(path, e))?;
            let cloud = match path.file_stem().and_then(|s| s.to_str()) {
                Some(stem) => cloud.with_frame_id(stem),
                None => cloud,
            };
            Ok(LoadedInput::Cloud(cloud))
        }
        _ => {
            let intr = intrinsics.ok_or_else(|| {
                CliError::Usage(format!(
                    "depth input {} needs --intrinsics",
                    path.display()
                ))
            })?;
            let frame = bmio::read_depth(path, intr).map_err(|e| match e {
                // parse errors already carry the offending path
                BmError::Parse { .. } => CliError::Usage(e.to_string()),
                BmError::Io(ioe) => {
                    // name whichever of the two files is unreadable
                    let missing = if fs::metadata(intr).is_err() { intr } else { path };
                    CliError::Usage(format!("cannot read {}: {ioe}", missing.display()))
                }
                other => input_err(path, other),
            })?;
            Ok(LoadedInput::Frame(Box::new(frame)))
        }
    }
}

/// Writes bytes atomically: temp file in the same directory, then rename.
fn write_atomic(path: &Path, write: impl FnOnce(&Path) -> bodymetrics::Result<()>) -> Result<(), CliError> {
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    let io_err = |e: &dyn std::fmt::Display| {
        CliError::Io(format!("cannot write {}: {e}", path.display()))
    };
    write(&tmp).map_err(|e| io_err(&e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(&e)
    })?;
    Ok(())
}

fn cmd_convert(args: ConvertArgs) -> Result<(), CliError> {
    let cloud = match load_input(&args.input, args.intrinsics.as_deref())? {
        LoadedInput::Cloud(c) => c,
        LoadedInput::Frame(frame) => {
            if args.band_lo < 0.0 || args.band_lo.is_nan() || args.band_hi <= args.band_lo {
                return Err(CliError::Usage(format!(
                    "band must satisfy 0 <= lo < hi, got [{}, {}]",
                    args.band_lo, args.band_hi
                )));
            }
            frame
                .to_cloud(args.band_lo, args.band_hi)
                .map_err(|e| input_err(&args.input, e))?
        }
    };
    let binary = args.format == PlyFormat::Binary;
    write_atomic(&args.output, |tmp| bmio::write_ply(&cloud, tmp, binary))?;
    eprintln!(
        "wrote {} points to {}",
        cloud.len(),
        args.output.display()
    );
    Ok(())
}

fn merge_config(args: &EstimateArgs) -> Result<PipelineConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Usage(format!("cannot read {}: {e}", path.display()))
            })?;
            serde_json::from_str::<PipelineConfig>(&text).map_err(|e| {
                CliError::Usage(format!("bad config {}: {e}", path.display()))
            })?
        }
        None => PipelineConfig::default(),
    };

    if let Some(v) = args.band_lo {
        config.band_lo = v;
    }
    if let Some(v) = args.band_hi {
        config.band_hi = v;
    }
    if args.ransac {
        config.ransac = true;
    }
    if args.no_ransac {
        config.ransac = false;
    }
    if let Some(v) = args.ransac_thresh {
        config.ransac_thresh = v;
    }
    if let Some(v) = args.ransac_iters {
        config.ransac_iterations = v;
    }
    if args.mirror {
        config.mirror = true;
    }
    if args.no_mirror {
        config.mirror = false;
    }
    if let Some(v) = args.sor_k {
        config.sor_k = v;
    }
    if let Some(v) = args.sor_alpha {
        config.sor_alpha = v;
    }
    if let Some(v) = args.voxel {
        config.voxel = v;
    }
    if let Some(v) = args.axis {
        config.axis = v.into();
    }
    if let Some(v) = args.slabs {
        config.n_slabs = v;
    }
    if let Some(v) = args.min_slab_points {
        config.min_slab_points = v;
    }
    if let Some(v) = args.trim {
        config.trim = v;
    }
    if let Some(v) = args.density {
        config.density = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }

    config
        .validate()
        .map_err(|e| CliError::Usage(format!("bad configuration: {e}")))?;
    Ok(config)
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), CliError> {
    let config = merge_config(&args)?;

    let bytes = fs::read(&args.input).map_err(|e| {
        CliError::Usage(format!("cannot read {}: {e}", args.input.display()))
    })?;
    let sha256 = hex_digest(&bytes);
    drop(bytes);

    let kind = input_kind(&args.input)?;
    let input = match load_input(&args.input, args.intrinsics.as_deref())? {
        LoadedInput::Cloud(c) => PipelineInput::Cloud(c),
        LoadedInput::Frame(f) => PipelineInput::Frame(*f),
    };

    let run = run_pipeline(input, &config).map_err(|e| CliError::Pipeline(e.to_string()))?;
    let estimate = run.estimate;

    eprintln!(
        "volume: {:.3} L ({:.6} m^3) over {} slabs ({} skipped)",
        estimate.volume * 1000.0,
        estimate.volume,
        estimate.volume_report.slab_count,
        estimate.volume_report.skipped_slabs,
    );
    eprintln!("height: {:.1} cm", estimate.height * 100.0);
    eprintln!(
        "weight: {:.2} kg (density {} kg/m^3)",
        estimate.weight, estimate.density_used
    );

    let report = build_report(
        InputInfo {
            path: args.input.display().to_string(),
            kind: kind.to_string(),
            sha256,
        },
        &config,
        estimate,
        &run.stages,
    );
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Io(format!("cannot serialize report: {e}")))?;

    match &args.json {
        Some(path) => {
            write_atomic(path, |tmp| {
                fs::write(tmp, json.as_bytes()).map_err(BmError::from)
            })?;
            eprintln!("report written to {}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn parse_dims(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    let parts: Result<Vec<f64>, _> = text.split(',').map(|p| p.trim().parse::<f64>()).collect();
    parts.map_err(|_| CliError::Usage(format!("bad {what} '{text}': expected comma-separated numbers")))
}

fn build_scene(args: &PhantomArgs) -> Result<PhantomScene, CliError> {
    let axis_y = bodymetrics::Point3::new(0.0, 1.0, 0.0);
    let usage = |e: BmError| CliError::Usage(e.to_string());
    let mut scene = match args.shape {
        ShapeArg::Humanoid => {
            let pose = match args.pose {
                PoseArg::ArmsDown => HumanoidPose::ArmsDown,
                PoseArg::ArmsOut => HumanoidPose::ArmsOut,
            };
            make_humanoid(args.height, args.build, pose).map_err(usage)?
        }
        ShapeArg::Ellipsoid | ShapeArg::Capsule | ShapeArg::Box => {
            let dims = args.dims.as_deref().ok_or_else(|| {
                CliError::Usage("--dims is required for non-humanoid shapes".into())
            })?;
            let d = parse_dims(dims, "--dims")?;
            let kind = match args.shape {
                ShapeArg::Ellipsoid => {
                    if d.len() != 3 {
                        return Err(CliError::Usage("ellipsoid needs --dims a,b,c".into()));
                    }
                    ShapeKind::Ellipsoid {
                        a: d[0],
                        b: d[1],
                        c: d[2],
                    }
                }
                ShapeArg::Capsule => {
                    if d.len() != 2 {
                        return Err(CliError::Usage(
                            "capsule needs --dims radius,cylinder-length".into(),
                        ));
                    }
                    ShapeKind::Capsule {
                        radius: d[0],
                        length: d[1],
                    }
                }
                ShapeArg::Box => {
                    if d.len() != 3 {
                        return Err(CliError::Usage("box needs --dims x,y,z".into()));
                    }
                    ShapeKind::Box {
                        x: d[0],
                        y: d[1],
                        z: d[2],
                    }
                }
                ShapeArg::Humanoid => unreachable!(),
            };
            let solid = Solid::new(kind, Pose::identity()).map_err(usage)?;
            PhantomScene::single(solid, axis_y)
        }
    };
    if let Some(bed) = &args.bed {
        let d = parse_dims(bed, "--bed")?;
        if d.len() != 2 || d.iter().any(|&v| v <= 0.0 || v.is_nan()) {
            return Err(CliError::Usage("--bed needs positive half_x,half_y".into()));
        }
        scene = scene.with_bed(d[0], d[1]);
    }
    Ok(scene)
}

fn cmd_phantom(args: PhantomArgs) -> Result<(), CliError> {
    if args.points_per_m2 <= 0.0 || args.points_per_m2.is_nan() {
        return Err(CliError::Usage(format!(
            "--points-per-m2 must be positive, got {}",
            args.points_per_m2
        )));
    }
    if args.noise_sigma < 0.0 || args.depth_noise_sigma < 0.0 {
        return Err(CliError::Usage("noise sigmas must be non-negative".into()));
    }
    let scene = build_scene(&args)?;

    if args.cloud_out.is_none() && args.depth_out.is_none() && args.truth_out.is_none() {
        return Err(CliError::Usage(
            "nothing to do: pass --cloud-out, --depth-out and/or --truth-out".into(),
        ));
    }

    if let Some(path) = &args.cloud_out {
        let cloud = sample_surface(&scene, args.points_per_m2, args.noise_sigma, args.seed);
        write_atomic(path, |tmp| bmio::write_ply(&cloud, tmp, true))?;
        eprintln!("cloud: {} points -> {}", cloud.len(), path.display());
    }

    if let Some(path) = &args.depth_out {
        if args.camera_distance <= 0.0 || args.camera_distance.is_nan() {
            return Err(CliError::Usage(format!(
                "--camera-distance must be positive, got {}",
                args.camera_distance
            )));
        }
        let pose = Pose::translate(0.0, 0.0, args.camera_distance);
        let frame = render_depth(
            &scene,
            &DEFAULT_INTRINSICS,
            &pose,
            args.seed,
            args.depth_noise_sigma,
        )
        .map_err(|e| CliError::Usage(e.to_string()))?;
        write_atomic(path, |tmp| bmio::write_depth(&frame, tmp))?;
        eprintln!("depth frame -> {}", path.display());
        if let Some(ipath) = &args.intrinsics_out {
            write_atomic(ipath, |tmp| bmio::write_intrinsics(&DEFAULT_INTRINSICS, tmp))?;
            eprintln!("intrinsics -> {}", ipath.display());
        }
    }

    if let Some(path) = &args.truth_out {
        let truth = serde_json::json!({
            "volume_m3": scene.ground_truth.volume,
            "height_m": scene.ground_truth.height,
            "seed": args.seed,
            "sampling": {
                "points_per_m2": args.points_per_m2,
                "noise_sigma": args.noise_sigma,
                "depth_noise_sigma": args.depth_noise_sigma,
                "camera_distance": args.camera_distance,
            },
            "scene": scene,
        });
        let json = serde_json::to_string_pretty(&truth)
            .map_err(|e| CliError::Io(format!("cannot serialize ground truth: {e}")))?;
        write_atomic(path, |tmp| {
            fs::write(tmp, json.as_bytes()).map_err(BmError::from)
        })?;
        eprintln!("ground truth -> {}", path.display());
    }
    Ok(())
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write;
        let _ = write!(out, "{b:02x}");
    }
    out
}
