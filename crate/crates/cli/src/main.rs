mod commands;
mod settings;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Budget-constrained bid optimisation for real-time bidding.
///
/// Every flag can also be given in a key=value file passed with --config,
/// using the flag name with underscores (e.g. `episode_len = 1000`).
/// Flags on the command line take precedence over the file.
#[derive(Parser)]
#[command(name = "rlb", version)]
struct Cli {
    /// Key=value file supplying defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic train/test log pair.
    Generate(GenerateArgs),
    /// Clean raw logs: drop malformed lines and cap prices.
    Prepare(PrepareArgs),
    /// Train the CTR model and record campaign statistics.
    TrainCtr(TrainCtrArgs),
    /// Fit the market price distribution.
    FitLandscape(FitLandscapeArgs),
    /// Solve the value table for one episode length and budget.
    SolveDp(SolveDpArgs),
    /// Fit the value-differential network on a sub-grid.
    TrainNn(TrainNnArgs),
    /// Replay the test log for each strategy and budget level.
    Evaluate(EvaluateArgs),
    /// Summarise evaluation CSVs into RLB-over-Lin improvements.
    Report(ReportArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub train_records: Option<usize>,
    #[arg(long)]
    pub test_records: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args)]
pub struct PrepareArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Prices above this are capped.
    #[arg(long)]
    pub delta_max: Option<u32>,
}

#[derive(Args)]
pub struct TrainCtrArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Optional held-out log for an AUC report.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    /// `ftrl` or `sgd`.
    #[arg(long)]
    pub optimizer: Option<String>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep each non-click with this probability.
    #[arg(long)]
    pub negative_sampling: Option<f64>,
    #[arg(long)]
    pub delta_max: Option<u32>,
}

#[derive(Args)]
pub struct FitLandscapeArgs {
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[arg(long)]
    pub delta_max: Option<u32>,
    /// Pseudo-count added to every price bucket.
    #[arg(long)]
    pub laplace: Option<f64>,
}

#[derive(Args)]
pub struct SolveDpArgs {
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[arg(long)]
    pub episode_len: Option<usize>,
    /// Budget as a fraction of the training CPM times the episode length (`1/8` or `0.125`).
    #[arg(long)]
    pub c0: Option<String>,
    /// Explicit budget; overrides --c0.
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub max_memory_mb: Option<usize>,
    /// Also write value.txt.
    #[arg(long)]
    pub text: bool,
    /// Also write diff.bin.
    #[arg(long)]
    pub diff: bool,
}

#[derive(Args)]
pub struct TrainNnArgs {
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[arg(long)]
    pub t0: Option<usize>,
    /// Defaults to half the training CPM times T0.
    #[arg(long)]
    pub b0: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub train_cells: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_memory_mb: Option<usize>,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Training log, used to tune Lin's base bid.
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub episode_len: Option<usize>,
    /// Comma-separated budget levels, e.g. `1/32,1/16,1/8,1/4,1/2`.
    #[arg(long)]
    pub c0: Option<String>,
    /// Comma-separated subset of ssmdp,mcpc,lin,rlb,rlb_nn,rlb_nn_seg,rlb_nn_mapd,rlb_nn_mapa.
    #[arg(long)]
    pub strategies: Option<String>,
    /// Label for the campaign column; defaults to the model directory name.
    #[arg(long)]
    pub campaign: Option<String>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fixed Lin base bid instead of tuning.
    #[arg(long)]
    pub lin_b0: Option<u32>,
    /// Mcpc cost-per-click; defaults to the training eCPC.
    #[arg(long)]
    pub cpc: Option<f64>,
    /// Sub-grid used by the network strategies; defaults to the network's own.
    #[arg(long)]
    pub t0: Option<usize>,
    #[arg(long)]
    pub b0: Option<u64>,
    /// `table` (exact sub-grid table) or `nn` for the mapped-action strategy.
    #[arg(long)]
    pub mapa_delegate: Option<String>,
    #[arg(long)]
    pub max_memory_mb: Option<usize>,
}

#[derive(Args)]
pub struct ReportArgs {
    /// Evaluation CSVs, comma-separated.
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let s = settings::Settings::load(cli.config.as_deref())?;
    match cli.cmd {
        Cmd::Generate(a) => commands::generate(&s, a),
        Cmd::Prepare(a) => commands::prepare(&s, a),
        Cmd::TrainCtr(a) => commands::train_ctr(&s, a),
        Cmd::FitLandscape(a) => commands::fit_landscape(&s, a),
        Cmd::SolveDp(a) => commands::solve_dp(&s, a),
        Cmd::TrainNn(a) => commands::train_nn(&s, a),
        Cmd::Evaluate(a) => commands::evaluate(&s, a),
        Cmd::Report(a) => commands::report(&s, a),
    }
}
