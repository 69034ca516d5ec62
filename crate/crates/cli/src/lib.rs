//! Batch front end: simulate shot files, analyse measured or simulated
//! records, run pump sweeps, conditional selections and mode-number fits.

pub mod commands;
pub mod config;
pub mod failure;
pub mod io;
pub mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ExperimentConfig, CONFIG_ENV};
pub use failure::{Failure, Outcome};

#[derive(Debug, Parser)]
#[command(
    name = "twinbeam",
    version,
    about = "Twin-beam photodetection simulator and estimator"
)]
pub struct Cli {
    /// JSON experiment config. Without one the built-in operating point is used.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Run on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate shot and dark files.
    Simulate(SimulateArgs),
    /// Noise reduction, correlation and Fano report for a shot file.
    Analyze(AnalyzeArgs),
    /// Noise reduction against pump intensity.
    Sweep(SweepArgs),
    /// Idler statistics conditioned on a signal window.
    Conditional(ConditionalArgs),
    /// Mode number from the measured correlation.
    Fit(FitArgs),
}

/// Overrides of model fields from the config.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub mu: Option<u32>,
    #[arg(long)]
    pub nbar: Option<f64>,
    /// Efficiency of both arms.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Electronic noise r.m.s. of both arms, electrons.
    #[arg(long)]
    pub dark_sigma: Option<f64>,
    #[arg(long)]
    pub shots: Option<usize>,
    #[arg(long)]
    pub dark_shots: Option<usize>,
}

/// Overrides of analysis options from the config.
#[derive(Debug, Clone, Default, Args)]
pub struct AnalysisArgs {
    /// Skip dark-noise subtraction.
    #[arg(long)]
    pub uncorrected: bool,
    #[arg(long)]
    pub j_max: Option<usize>,
    #[arg(long)]
    pub bin_width: Option<f64>,
    #[arg(long)]
    pub batches: Option<usize>,
    /// Efficiency used for the `1 - eta` floor.
    #[arg(long)]
    pub eta: Option<f64>,
}

/// Input shot files.
#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Shot file (`shot,m_s,m_i`).
    #[arg(long = "shots")]
    pub shots: PathBuf,
    /// Dark-run file in the same format.
    #[arg(long)]
    pub dark: Option<PathBuf>,
    /// Values are in microvolts; convert with the configured gains.
    #[arg(long)]
    pub microvolts: bool,
    /// Also subtract the dark run's signal-idler covariance.
    #[arg(long, requires = "dark")]
    pub dark_covariance: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: u64,
    /// Shot file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Dark file; defaults to the shot file name with a `_dark` suffix.
    #[arg(long)]
    pub dark_out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// JSON report; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the correlation profile as CSV (`j,gamma`).
    #[arg(long)]
    pub gamma_csv: Option<PathBuf>,
    /// Write the difference histogram as CSV (`d,count,probability`).
    #[arg(long)]
    pub pd_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub seed: u64,
    /// Pump intensities, comma separated; overrides the config grid.
    #[arg(long, value_delimiter = ',')]
    pub intensities: Option<Vec<f64>>,
    /// CSV table; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Skip dark-noise subtraction.
    #[arg(long)]
    pub uncorrected: bool,
}

#[derive(Debug, Args)]
pub struct ConditionalArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Closed window on the signal count.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub window: Option<Vec<f64>>,
    /// Tail window retaining this fraction of shots.
    #[arg(long, conflicts_with = "window")]
    pub success: Option<f64>,
    /// Upper quantile of the tail window.
    #[arg(long, default_value_t = 0.99, requires = "success")]
    pub upper_quantile: f64,
    /// JSON report; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Conditional idler histogram as CSV (`m_i,count,probability`).
    #[arg(long)]
    pub hist_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// JSON result; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: &Cli) -> Outcome<()> {
    let mut config = ExperimentConfig::load(cli.config.as_deref())?;
    let exec = if cli.sequential {
        twinbeam::Exec::Sequential
    } else {
        twinbeam::Exec::default()
    };
    match &cli.command {
        Command::Simulate(args) => commands::simulate(&mut config, args, exec),
        Command::Analyze(args) => commands::analyze(&mut config, args, exec),
        Command::Sweep(args) => commands::sweep(&mut config, args, exec),
        Command::Conditional(args) => commands::conditional(&mut config, args, exec),
        Command::Fit(args) => commands::fit(&mut config, args, exec),
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        super::Cli::command().debug_assert();
    }
}
