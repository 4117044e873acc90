use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use gazeline_cli::commands::{cmd_evaluate, cmd_simulate, cmd_track, SimulateSpec};
use gazeline_cli::config::{FilterKind, OutputFormat, Overrides, RunConfig};
use gazeline_core::{SimConfig, SimMode};
use std::path::PathBuf;

/// Reading-progression tracking from noisy eye-gaze traces.
#[derive(Parser)]
#[command(name = "gazeline", version, about)]
struct Cli {
    /// JSON config file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Tracking filter.
    #[arg(long, global = true, value_enum)]
    filter: Option<FilterKind>,
    /// Output format for summaries and tables.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labeled gaze corpus.
    Simulate(SimulateOpts),
    /// Track one gaze CSV; write per-sample output, print a summary.
    Track {
        /// Gaze CSV to track.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Per-sample output CSV.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Track every labeled CSV in a directory and tabulate accuracy.
    Evaluate {
        /// Directory of labeled gaze CSVs.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Directory for the accuracy table and per-page series.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Saccadic reading with line returns and labels.
    Reading,
    /// Draws from the filter's linear-Gaussian model (unlabeled).
    LinearGaussian,
}

#[derive(Args)]
struct SimulateOpts {
    /// Directory that receives page_NNN.csv files.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Number of pages; page seeds derive from the master seed.
    #[arg(long, default_value_t = 1)]
    pages: usize,
    /// Lines per page.
    #[arg(long, default_value_t = 25)]
    lines: usize,
    /// Mean reading time per line, seconds.
    #[arg(long, default_value_t = 10.0)]
    seconds_per_line: f64,
    /// Master RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Reading)]
    mode: ModeArg,
    /// Horizontal measurement noise std, page widths (defaults to the
    /// model's sigma_x).
    #[arg(long)]
    sigma_x: Option<f64>,
    /// Vertical measurement noise std, page heights (defaults to the
    /// model's sigma_y).
    #[arg(long)]
    sigma_y: Option<f64>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let mut overrides = Overrides {
        filter: cli.filter,
        format: cli.format,
        ..Overrides::default()
    };
    match cli.command {
        Command::Simulate(opts) => {
            overrides.output = opts.output.clone();
            let run = RunConfig::assemble(cli.config.as_deref(), &overrides)?;
            let sim = SimConfig {
                n_lines: opts.lines,
                seconds_per_line: opts.seconds_per_line,
                sigma_x: opts.sigma_x.unwrap_or(run.model.sigma_x),
                sigma_y: opts.sigma_y.unwrap_or(run.model.sigma_y),
                delta_t: run.model.delta_t,
                seed: opts.seed,
                mode: match opts.mode {
                    ModeArg::Reading => SimMode::Reading,
                    ModeArg::LinearGaussian => SimMode::LinearGaussian,
                },
                ..SimConfig::default()
            };
            cmd_simulate(
                &run,
                &SimulateSpec {
                    pages: opts.pages,
                    sim,
                },
            )
        }
        Command::Track { input, output } => {
            overrides.input = input;
            overrides.output = output;
            let run = RunConfig::assemble(cli.config.as_deref(), &overrides)?;
            cmd_track(&run)
        }
        Command::Evaluate { input, output } => {
            overrides.input = input;
            overrides.output = output;
            let run = RunConfig::assemble(cli.config.as_deref(), &overrides)?;
            cmd_evaluate(&run)
        }
    }
}
