//! File formats, lineage checks and the `coldstart` command line on top of
//! `coldstart-core`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod figures;
pub mod format;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "coldstart", version, about = "Consistent LSTM initialization on the Brusselator", args_override_self = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Seed for every random choice of the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `key = value` file of flags; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate Brusselator trajectories into a dataset directory.
    GenerateData(GenerateData),
    /// Train the LSTM on a dataset.
    TrainLstm(TrainLstm),
    /// Roll a trained LSTM out over one trajectory file.
    Rollout(Rollout),
    /// Fit a diffusion map to the delay windows of the training split.
    FitManifold(FitManifold),
    /// Diffusion-map coordinates of a new window.
    Restrict(Restrict),
    /// Fit geometric harmonics from reduced coordinates to mature states.
    FitGh(FitGh),
    /// Infer a consistent internal state from a short window.
    Coldstart(Coldstart),
    /// Impute a hidden observable from sporadic measurements.
    Impute(Impute),
    /// Compare warmup and cold-start initialization on the test split.
    CompareInit(CompareInit),
    /// Train the latent dynamical model on reduced coordinates.
    TrainLatent(TrainLatent),
    /// Iterate a trained latent model.
    RolloutLatent(RolloutLatent),
    /// Synchronization error of the forced hidden equation.
    SyncDemo(SyncDemoArgs),
    /// Write plot data for every figure into one directory.
    ReproduceFigures(ReproduceFigures),
}

#[derive(Debug, Args)]
pub struct GenerateData {
    #[arg(long, default_value_t = 400)]
    pub n_train: usize,
    #[arg(long, default_value_t = 50)]
    pub n_val: usize,
    #[arg(long, default_value_t = 50)]
    pub n_test: usize,
}

#[derive(Debug, Args)]
pub struct TrainLstm {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    #[arg(long, default_value_t = 5e-3)]
    pub lr: f64,
    /// Epochs without improvement before the learning rate halves.
    #[arg(long, default_value_t = 25)]
    pub patience: usize,
    /// Optional CSV of per-epoch losses.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Rollout {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub traj: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub warmup: usize,
}

#[derive(Debug, Args)]
pub struct FitManifold {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub window_len: usize,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = 10)]
    pub n_eig: usize,
    /// Kernel bandwidth; defaults to a multiple of the median squared distance.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = coldstart_core::manifold::DEFAULT_EPSILON_SCALE)]
    pub epsilon_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    /// Largest number of windows fitted; larger sets are subsampled.
    #[arg(long, default_value_t = 6000)]
    pub max_points: usize,
    /// Residual threshold for keeping a coordinate.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct Restrict {
    #[arg(long)]
    pub dmap: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub window: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct FitGh {
    #[arg(long)]
    pub dmap: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset the map and the model were built from.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub maturity: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    #[arg(long)]
    pub epsilon_star: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub epsilon_scale: f64,
    #[arg(long, default_value_t = 1500)]
    pub max_points: usize,
}

#[derive(Debug, Args)]
pub struct Coldstart {
    #[arg(long)]
    pub dmap: PathBuf,
    #[arg(long)]
    pub gh: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub window: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct Impute {
    #[arg(long)]
    pub dmap: PathBuf,
    /// CSV with window columns followed by the measured value.
    #[arg(long)]
    pub measurements: PathBuf,
    /// CSV with window columns only.
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
}

#[derive(Debug, Args)]
pub struct Artifacts {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dmap: PathBuf,
    #[arg(long)]
    pub gh: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareInit {
    #[command(flatten)]
    pub artifacts: Artifacts,
    #[arg(long, value_delimiter = ',', default_values_t = [50, 25, 5, 0])]
    pub warmups: Vec<usize>,
    /// First sample of the observation window of every strategy.
    #[arg(long, default_value_t = 0)]
    pub window_start: usize,
}

#[derive(Debug, Args)]
pub struct TrainLatent {
    #[arg(long)]
    pub dmap: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 128)]
    pub batch: usize,
    #[arg(long, default_value_t = 5e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 25)]
    pub patience: usize,
}

#[derive(Debug, Args)]
pub struct RolloutLatent {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub phi0: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub horizon: usize,
}

#[derive(Debug, Args)]
pub struct SyncDemoArgs {
    /// Trajectory CSV with a `v` column.
    #[arg(long)]
    pub traj: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub v_nn0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 2.1)]
    pub b: f64,
}

#[derive(Debug, Args)]
pub struct ReproduceFigures {
    #[command(flatten)]
    pub artifacts: Artifacts,
    /// Latent model; its figure is skipped when absent.
    #[arg(long)]
    pub latent: Option<PathBuf>,
}

fn subcommand_names() -> Vec<String> {
    Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect()
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run_from_args(args: Vec<OsString>) -> i32 {
    let args = match config::expand_args(args, &subcommand_names()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match commands::run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
