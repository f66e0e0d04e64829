use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use marxbench_core::features::BlockSet;
use marxbench_core::models::ModelFamily;
use marxbench_core::YearMonth;

#[derive(Debug, Parser)]
#[command(name = "marxbench", version, about = "Pseudo-out-of-sample macroeconomic forecasting benchmark")]
pub struct Cli {
    /// More log output (-v debug, -vv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download a FRED-MD vintage into a local checksummed cache.
    Fetch(FetchArgs),
    /// Check a FRED-MD file for missing cells, tcode problems and date gaps.
    Validate(ValidateArgs),
    /// Run an experiment into a new store, then write the report.
    Run(RunArgs),
    /// Continue an interrupted run; refuses if the config changed.
    Resume(RunArgs),
    /// Compute tables and figure data from a store.
    Report(ReportArgs),
    /// Run the built-in numerical checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Vintage month (YYYY-MM); the current file when omitted.
    #[arg(long)]
    pub vintage: Option<YearMonth>,
    /// Cache directory.
    #[arg(long, default_value = "data")]
    pub cache: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// FRED-MD CSV file.
    #[arg(long, env = "MARXBENCH_DATA")]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment config (flat TOML).
    #[arg(long, default_value = "configs/full.toml")]
    pub config: PathBuf,
    /// FRED-MD CSV file; falls back to the config's `data` key.
    #[arg(long, env = "MARXBENCH_DATA", conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Use the seeded synthetic panel instead of a data file.
    #[arg(long)]
    pub synthetic: bool,
    /// Output directory for the store, CSV export and report.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, env = "MARXBENCH_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Benchmark specification for the report, e.g. FM or AR.
    #[arg(long, default_value = "FM")]
    pub benchmark: String,
    /// Restrict targets (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub targets: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<ModelFamily>>,
    #[arg(long, value_delimiter = ',')]
    pub featuresets: Option<Vec<BlockSet>>,
    /// Print the grid and cell counts without fitting anything.
    #[arg(long)]
    pub dry_run: bool,
    /// Skip the report after the run.
    #[arg(long)]
    pub no_report: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Store file, or a run directory holding `forecasts.jsonl`.
    #[arg(long)]
    pub store: PathBuf,
    /// Report directory; defaults to `report/` next to the store.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "FM")]
    pub benchmark: String,
    /// Bootstrap replicates of the model confidence set.
    #[arg(long, default_value_t = 5000)]
    pub mcs_reps: usize,
    /// Level of the model confidence set.
    #[arg(long, default_value_t = 0.10)]
    pub mcs_alpha: f64,
    /// Small-sample correction of the Diebold-Mariano test.
    #[arg(long)]
    pub harvey: bool,
    /// Fluctuation-test window in months.
    #[arg(long, default_value_t = 136)]
    pub gr_window: usize,
}
