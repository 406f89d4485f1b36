use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use labelfuse::pipeline::{cmd_eval, cmd_fuse, cmd_render, cmd_synth, ConfigBuilder, RenderOptions, SynthOptions};
use labelfuse::synth::{NoiseModel, SceneKind};
use labelfuse::{Error, Result};

/// Multi-view label fusion on texel-subdivided meshes.
#[derive(Parser, Debug)]
#[command(name = "labelfuse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fuse per-frame predictions onto the mesh and render them back.
    Fuse(FuseArgs),
    /// Compare a directory of label PNGs against ground truth.
    Eval(EvalArgs),
    /// Write a synthetic scene directory.
    Synth(SynthArgs),
    /// Render a stored texture into trajectory frames.
    Render(RenderArgs),
}

/// Every flag overrides the config key of the same name.
#[derive(Args, Debug)]
struct FuseArgs {
    /// key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Triangle mesh (PLY or OBJ).
    #[arg(long)]
    mesh: Option<String>,
    /// Camera trajectory file.
    #[arg(long)]
    trajectory: Option<String>,
    /// Directory of <frame_id>.smpb files.
    #[arg(long)]
    predictions: Option<String>,
    /// Directory of <frame_id>.png ground-truth labels.
    #[arg(long)]
    gt: Option<String>,
    /// Output directory.
    #[arg(long)]
    output: Option<String>,
    /// Class colors for the exported mesh.
    #[arg(long)]
    palette: Option<String>,
    /// Texel density (0 = one texel per triangle).
    #[arg(long)]
    gamma: Option<String>,
    /// maxsum, sum or mul.
    #[arg(long)]
    aggregator: Option<String>,
    /// pixels_iid, images_iid or blend(alpha).
    #[arg(long = "weight_mode", alias = "weight-mode")]
    weight_mode: Option<String>,
    /// Fraction of frames fused, evenly spaced.
    #[arg(long = "frame_fraction", alias = "frame-fraction")]
    frame_fraction: Option<String>,
    /// Class count; inferred from the first prediction when absent.
    #[arg(long)]
    classes: Option<String>,
    /// Comma-separated classes excluded from evaluation.
    #[arg(long)]
    ignore: Option<String>,
    /// network or unknown.
    #[arg(long)]
    fallback: Option<String>,
    /// Fixed accumulation order (true or false).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    deterministic: Option<String>,
    /// Bytes, optionally suffixed K, M or G.
    #[arg(long = "memory_budget", alias = "memory-budget")]
    memory_budget: Option<String>,
}

impl FuseArgs {
    fn overrides(&self) -> [(&'static str, &Option<String>); 15] {
        [
            ("mesh", &self.mesh),
            ("trajectory", &self.trajectory),
            ("predictions", &self.predictions),
            ("gt", &self.gt),
            ("output", &self.output),
            ("palette", &self.palette),
            ("gamma", &self.gamma),
            ("aggregator", &self.aggregator),
            ("weight_mode", &self.weight_mode),
            ("frame_fraction", &self.frame_fraction),
            ("classes", &self.classes),
            ("ignore", &self.ignore),
            ("fallback", &self.fallback),
            ("deterministic", &self.deterministic),
            ("memory_budget", &self.memory_budget),
        ]
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Directory of predicted label PNGs.
    #[arg(long)]
    pred: PathBuf,
    /// Directory of ground-truth label PNGs with the same names.
    #[arg(long)]
    gt: PathBuf,
    /// Comma-separated classes excluded from evaluation.
    #[arg(long, value_delimiter = ',')]
    ignore: Vec<u16>,
    /// Class count; max label + 1 when absent.
    #[arg(long)]
    classes: Option<usize>,
    /// Write the report as JSON here as well.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// cube, room or checker_sphere.
    #[arg(long, default_value = "cube")]
    scene: String,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
    /// Class count (scene default when absent).
    #[arg(long)]
    classes: Option<usize>,
    /// Room grid size or icosphere level.
    #[arg(long)]
    tessellation: Option<u32>,
    /// Number of orbit frames.
    #[arg(long)]
    frames: Option<usize>,
    /// Orbit radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Inclination of the orbit plane in degrees.
    #[arg(long)]
    tilt: Option<f64>,
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    height: Option<u32>,
    /// Focal length in pixels.
    #[arg(long)]
    focal: Option<f64>,
    /// flip or dirichlet.
    #[arg(long, default_value = "flip")]
    noise: String,
    /// Flip noise: probability of a wrong label.
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    /// Flip noise: probability mass on the chosen label.
    #[arg(long, default_value_t = 0.8)]
    confidence: f64,
    /// Dirichlet noise: concentration on the true class.
    #[arg(long, default_value_t = 5.0)]
    kappa: f64,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// SMTX file written by `fuse`.
    #[arg(long)]
    texture: PathBuf,
    /// Mesh the texture was fused on.
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    trajectory: PathBuf,
    /// Output directory.
    #[arg(long)]
    output: PathBuf,
    /// Comma-separated frame ids; all frames when absent.
    #[arg(long, value_delimiter = ',')]
    frames: Option<Vec<u32>>,
    /// Also write triangle, texel and depth debug PNGs.
    #[arg(long = "debug_ids", alias = "debug-ids")]
    debug_ids: bool,
}

fn fuse(args: FuseArgs) -> Result<()> {
    let mut builder = ConfigBuilder::new();
    if let Some(path) = &args.config {
        builder.apply_file(path)?;
    }
    for (key, value) in args.overrides() {
        if let Some(v) = value {
            builder.set(key, v)?;
        }
    }
    let cfg = builder.build()?;
    let out = cmd_fuse(&cfg)?;
    println!("wrote {} and {} label images", out.texture_path.display(), out.frames_rendered);
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let report = cmd_eval(&args.pred, &args.gt, &args.ignore, args.classes)?;
    print!("{}", report.to_key_value());
    if let Some(path) = &args.json {
        std::fs::write(path, report.to_json()).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let kind: SceneKind = args.scene.parse()?;
    let mut opts = SynthOptions::new(kind, args.output);
    opts.classes = args.classes.unwrap_or(opts.classes);
    opts.tessellation = args.tessellation.unwrap_or(opts.tessellation);
    opts.frames = args.frames.unwrap_or(opts.frames);
    opts.radius = args.radius.unwrap_or(opts.radius);
    opts.tilt_deg = args.tilt.unwrap_or(opts.tilt_deg);
    opts.width = args.width.unwrap_or(opts.width);
    opts.height = args.height.unwrap_or(opts.height);
    opts.focal = args.focal.unwrap_or(opts.focal);
    opts.noise = match args.noise.as_str() {
        "flip" => NoiseModel::flip(args.epsilon, args.confidence, args.seed),
        "dirichlet" => NoiseModel::dirichlet(args.kappa, args.seed),
        other => return Err(Error::Config(format!("unknown noise model {other:?} (expected flip or dirichlet)"))),
    };
    let s = cmd_synth(&opts)?;
    println!(
        "wrote {} scene to {}: {} triangles, {} frames, {} classes, network accuracy {:.4}",
        kind,
        opts.output.display(),
        s.triangles,
        s.frames,
        s.classes,
        s.network_accuracy
    );
    Ok(())
}

fn render(args: RenderArgs) -> Result<()> {
    let n = cmd_render(&RenderOptions {
        texture: args.texture,
        mesh: args.mesh,
        trajectory: args.trajectory,
        output: args.output.clone(),
        frames: args.frames,
        debug_ids: args.debug_ids,
    })?;
    println!("rendered {n} frames into {}", args.output.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fuse(a) => fuse(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
        Command::Render(a) => render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
