mod commands;
mod report;
mod source;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "measquant",
    version,
    about = "Quantize probability measures with attraction-repulsion energies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimize the particle energy against a target and write the points.
    Quantize(QuantizeArgs),
    /// Quantize a grayscale image; dark pixels attract points.
    Dither(DitherArgs),
    /// Print V, W, E, the symmetrized and the Fourier energy of a point set.
    Energy(EnergyArgs),
    /// Equal-mass tiling of a grid density.
    Tile(TileArgs),
    /// Discrete total variation of a point set.
    Tv(TvArgs),
    /// TV-regularized fit of a 1D grid density, swept over several λ.
    Gridsolve(GridsolveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TvChoice {
    None,
    Kernel,
    Pointdiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    Triangular,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitChoice {
    /// Tiling centroids of a grid target (seeded box samples for a point target).
    Tiling,
    /// Seeded random samples.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleChoice {
    Center,
    Centroid,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SolverArgs {
    /// Attraction exponent in [1, 2].
    #[arg(long, default_value_t = 1.5)]
    pub qa: f64,
    /// Repulsion exponent in [1, 2].
    #[arg(long, default_value_t = 1.5)]
    pub qr: f64,
    /// TV weight; 0 disables the penalty.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = TvChoice::Kernel)]
    pub tv: TvChoice,
    /// Kernel bandwidth; defaults to N^(-1/(2d+1)).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_enum, default_value_t = KernelChoice::Triangular)]
    pub kernel: KernelChoice,
    /// Smoothing ε of |s| ≈ √(s² + ε²) in the TV penalty.
    #[arg(long)]
    pub smoothing: Option<f64>,
    #[arg(long, value_enum, default_value_t = InitChoice::Tiling)]
    pub init: InitChoice,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    /// Plain gradient descent instead of L-BFGS.
    #[arg(long)]
    pub gradient_descent: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct QuantizeArgs {
    /// Target: builtin:<name>, points:<list>, an image .pgm or a points .csv.
    #[arg(long)]
    pub omega: String,
    /// Number of points.
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Also compute the Fourier energy for 2D targets (always done in 1D).
    #[arg(long)]
    pub fourier: bool,
    /// Record wall-clock time in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct DitherArgs {
    /// Grayscale image (PGM, plain or raw).
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Upscaling factor of the preview image.
    #[arg(long, default_value_t = 4)]
    pub preview_scale: usize,
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct EnergyArgs {
    /// Points CSV file, or an inline list such as 0,0.5,1 or 0,0;1,1.
    #[arg(long)]
    pub points: String,
    /// Target, as for quantize.
    #[arg(long)]
    pub omega: String,
    #[arg(long, default_value_t = 1.5)]
    pub qa: f64,
    #[arg(long, default_value_t = 1.5)]
    pub qr: f64,
    /// Also compute the Fourier energy for 2D input.
    #[arg(long)]
    pub fourier: bool,
    /// Print the JSON report instead of the table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct TileArgs {
    /// Grid target: builtin:<name> or an image .pgm.
    #[arg(long)]
    pub omega: String,
    #[arg(long)]
    pub n: usize,
    /// Tile CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write one point per tile to this CSV.
    #[arg(long)]
    pub points_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RuleChoice::Center)]
    pub rule: RuleChoice,
}

#[derive(Args, Debug, Serialize)]
pub struct TvArgs {
    /// Points CSV file or inline list.
    #[arg(long)]
    pub points: String,
    #[arg(long, value_enum, default_value_t = TvChoice::Kernel)]
    pub method: TvChoice,
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_enum, default_value_t = KernelChoice::Triangular)]
    pub kernel: KernelChoice,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct GridsolveArgs {
    /// 1D grid datum, e.g. builtin:spike or builtin:block-noise:3.
    #[arg(long, default_value = "builtin:spike")]
    pub omega: String,
    #[arg(long, default_value_t = 1.5)]
    pub q: f64,
    /// Comma-separated TV weights, solved concurrently.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub lambda: Vec<f64>,
    /// Clean density to report L1/L2 distances against.
    #[arg(long)]
    pub reference: Option<String>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Smoothed TV with this ε instead of the exact proximal map.
    #[arg(long)]
    pub smoothing: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub residual_tol: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long)]
    pub timing: bool,
}

/// Outcome of a command that ran to completion.
pub enum Status {
    Done,
    NotConverged,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Quantize(a) => commands::quantize(&a),
        Command::Dither(a) => commands::dither(&a),
        Command::Energy(a) => commands::energy(&a),
        Command::Tile(a) => commands::tile(&a),
        Command::Tv(a) => commands::tv(&a),
        Command::Gridsolve(a) => commands::gridsolve(&a),
    };
    match result {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
