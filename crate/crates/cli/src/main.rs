mod commands;
mod scene_arg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Register explicit garment templates to implicit scene fields.
#[derive(Debug, Parser)]
#[command(name = "reef", version, about)]
struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// More log output on stderr (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a synthetic scene and write its fields, meshes and heatmaps.
    Gen(GenArgs),
    /// Fit a garment template to a scene.
    Fit(FitArgs),
    /// Compare a mesh against a scene's ground-truth garment.
    Eval(EvalArgs),
    /// Extract a mesh from one of a scene's fields with marching cubes.
    Extract(ExtractArgs),
    /// Run every ablation mode on several scenes.
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Fit configuration file (TOML, or JSON).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a config value, e.g. `--set shape.max_iterations=50`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Bundled scene name or recipe JSON path.
    #[arg(long)]
    scene: String,
    #[arg(long)]
    out: PathBuf,
    /// Replaces the recipe's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Fine grid resolution along the tallest axis; the coarse grid
    /// follows at a quarter of it.
    #[arg(long)]
    resolution: Option<usize>,
    /// Skip writing heatmap images.
    #[arg(long)]
    no_heatmaps: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StageSwitch {
    Init,
    Boundary,
    Probe,
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Scene directory, manifest, recipe JSON or bundled scene name.
    #[arg(long)]
    scene: String,
    /// Garment category name or template OBJ (annotation next to it as
    /// `.json`). Defaults to the scene's first garment.
    #[arg(long)]
    template: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Turn off a pipeline stage (repeatable).
    #[arg(long, value_enum)]
    disable: Vec<StageSwitch>,
    /// Also write the posed (M_p) and boundary-aligned (M_l) meshes.
    #[arg(long)]
    keep_stages: bool,
    /// Seed of the evaluation surface sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Surface samples per mesh for the reported Chamfer distance.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    /// Attach a collar to the neckline and write `M_o_collar.obj`.
    #[arg(long)]
    collar: Option<String>,
    /// Grid resolution when the scene is built from a recipe.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    scene: String,
    /// Mesh to evaluate.
    #[arg(long)]
    mesh: PathBuf,
    /// Template the mesh was fitted from; enables the boundary metric and
    /// picks the ground-truth garment.
    #[arg(long)]
    template: Option<String>,
    /// Ground-truth garment label (upper or lower).
    #[arg(long)]
    label: Option<String>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Debug, Args)]
struct ExtractArgs {
    #[arg(long)]
    scene: String,
    /// `target`, `coarse`, `body_tsdf`, `semantic:<label>` or
    /// `boundary:<type>`.
    #[arg(long)]
    field: String,
    /// Marching cubes nodes along the longest axis.
    #[arg(long, default_value_t = 128)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AblateArgs {
    /// Scenes to run (repeatable); the bundled scenes when absent.
    #[arg(long)]
    scene: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    #[arg(long)]
    resolution: Option<usize>,
}

/// Exit statuses of the command-line contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    NotConverged,
}

const EXIT_INVALID: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

/// The error chain joined by `: `, dropping causes the message already
/// spells out.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads {n}: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    }
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Fit(a) => commands::fit(a),
        Command::Eval(a) => commands::eval(a),
        Command::Extract(a) => commands::extract(a),
        Command::Ablate(a) => commands::ablate(a),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(EXIT_NOT_CONVERGED),
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(EXIT_INVALID)
        }
    }
}
