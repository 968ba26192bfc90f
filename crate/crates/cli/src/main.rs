use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use urbanforge::config::{load_config, RunConfig};
use urbanforge::pipeline;
use urbanforge::{Error, Vec3};

#[derive(Parser)]
#[command(name = "urbanforge", version, about = "Urban layout to textured 3D scene pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration file (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Override the output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scene instruction.
    #[arg(long)]
    instruction: Option<String>,
    /// Fail instead of falling back when a remote endpoint is down.
    #[arg(long)]
    strict_endpoints: bool,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = load_config(&self.config)?;
        if let Some(out) = &self.out_dir {
            cfg.out_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.seed_generated = false;
        }
        if let Some(instruction) = &self.instruction {
            cfg.instruction = instruction.clone();
        }
        if self.strict_endpoints {
            cfg.strict_endpoints = true;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse the layout source into layout.json.
    Ingest(ConfigArgs),
    /// Draft per-asset design descriptions into brief.json.
    Design(ConfigArgs),
    /// Generate, back-project and inpaint every asset texture.
    Texture(ConfigArgs),
    /// Reassemble, refine and export the scene (OBJ/MTL/PNG + manifest).
    Assemble(ConfigArgs),
    /// Voxelize the scene, plan a path with RRT and record the trajectory.
    Navigate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Start position, comma separated meters: x,y,z
        #[arg(long, value_parser = parse_vec3)]
        start: Vec3,
        /// Goal position, comma separated meters: x,y,z
        #[arg(long, value_parser = parse_vec3)]
        goal: Vec3,
        /// Voxel size in meters.
        #[arg(long, default_value_t = 1.0)]
        resolution: f64,
        /// Observation spacing along the path in meters.
        #[arg(long, default_value_t = 2.0)]
        stride: f64,
    },
    /// Render evaluation frames and compute HI/FID/KID/DE/PS.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Precomputed reference feature file for FID/KID.
        #[arg(long)]
        reference_features: Option<PathBuf>,
        /// Directory of reference PNG images for FID/KID.
        #[arg(long)]
        reference_images: Option<PathBuf>,
        /// Directory of predicted depth maps for DE.
        #[arg(long)]
        pred_depth: Option<PathBuf>,
        /// Number of frames to render.
        #[arg(long)]
        frames: Option<usize>,
    },
    /// Run the whole pipeline: ingest, design, texture, assemble, export.
    Pipeline(ConfigArgs),
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected x,y,z".into());
    }
    let mut v = [0.0f64; 3];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|e| format!("bad coordinate `{part}`: {e}"))?;
    }
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest(args) => {
            let cfg = args.load()?;
            let layout = pipeline::run_ingest(&cfg)?;
            println!(
                "ingested {} elements ({} warnings) -> {}",
                layout.elements.len(),
                layout.warnings.len(),
                cfg.out_dir.join("layout.json").display()
            );
        }
        Command::Design(args) => {
            let cfg = args.load()?;
            let (_, plan, brief) = pipeline::run_design(&cfg)?;
            println!(
                "designed {} assets (+ground) -> {}",
                plan.assets.len(),
                cfg.out_dir.join("brief.json").display()
            );
            let _ = brief;
        }
        Command::Texture(args) => {
            let cfg = args.load()?;
            let (_, _, textured) = pipeline::run_texture(&cfg)?;
            println!(
                "textured {} assets -> {}",
                textured.len(),
                cfg.out_dir.join("textures").display()
            );
        }
        Command::Assemble(args) => {
            let cfg = args.load()?;
            let (manifest, bundle) = pipeline::run_assemble(&cfg)?;
            println!(
                "exported {} files (refine round {}) -> {}",
                bundle.files.len(),
                manifest.refine_round,
                bundle.root.display()
            );
        }
        Command::Navigate { config, start, goal, resolution, stride } => {
            let cfg = config.load()?;
            let summary = pipeline::run_navigate(&cfg, start, goal, resolution, stride)?;
            println!(
                "path found in {} iterations, {} waypoints, {} observations -> {}",
                summary.iterations_used,
                summary.waypoints.len(),
                summary.observations,
                cfg.out_dir.join("nav").display()
            );
        }
        Command::Evaluate { config, reference_features, reference_images, pred_depth, frames } => {
            let cfg = config.load()?;
            let args = pipeline::EvaluateArgs {
                reference_features,
                reference_images,
                predicted_depth: pred_depth,
                frames,
            };
            let reports = pipeline::run_evaluate(&cfg, &args)?;
            for r in &reports {
                println!("{} = {:.6} (samples {:?})", r.metric, r.value, r.sample_counts);
            }
            println!("report -> {}", cfg.out_dir.join("metrics.toml").display());
        }
        Command::Pipeline(args) => {
            let cfg = args.load()?;
            let bundle = pipeline::run_pipeline(&cfg)?;
            println!("pipeline complete: {} files -> {}", bundle.files.len(), bundle.root.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
