mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::{Overrides, RunConfig};
use error::CliError;

/// Sequential two-photon excitation of a quantum-dot cascade: closed-form
/// model, Monte Carlo time tags and correlation analysis.
#[derive(Debug, Parser)]
#[command(name = "seqtpe", version, arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    /// Output file (directory for `report`); standard output when omitted
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Branch weights, mean photon number and mode-resolved g2
    Analytic {
        /// Sweep the pulse delay from 0 to this value [ps] instead of one row
        #[arg(long, value_name = "PS")]
        sweep_to: Option<f64>,
        /// Sweep step [ps]
        #[arg(long, value_name = "PS", default_value_t = 10.0)]
        sweep_step: f64,
    },
    /// Mutual information of every bipartition of the four modes [bits]
    MutualInfo,
    /// Simulate a time-tag stream
    Simulate,
    /// Analyze tag files
    Analyze {
        #[command(subcommand)]
        what: AnalyzeCommand,
    },
    /// Two-copy interference at a balanced beamsplitter
    Hom {
        #[command(subcommand)]
        what: HomCommand,
    },
    /// Figure data for the whole protocol plus a manifest
    Report,
}

#[derive(Debug, Subcommand)]
enum AnalyzeCommand {
    /// Arrival-time histogram folded on the rep period
    Hist {
        input: PathBuf,
        /// Channel label (B, X) or comma-separated channel numbers
        #[arg(long, default_value = "B")]
        channels: String,
        /// Also fit an exponentially modified Gaussian and write it here
        #[arg(long, value_name = "PATH")]
        fit_out: Option<PathBuf>,
        /// Hold the Gaussian width fixed during the fit [ps]
        #[arg(long, value_name = "PS")]
        fix_sigma: Option<f64>,
    },
    /// Two-time correlation map
    Map {
        input: PathBuf,
        /// Row channels: label or comma-separated channel numbers
        #[arg(long, default_value = "B")]
        a: String,
        /// Column channels: label or comma-separated channel numbers
        #[arg(long, default_value = "X")]
        b: String,
        /// Pair each tag with tags this many cycles later instead of the same cycle
        #[arg(long, value_name = "N")]
        displaced: Option<u64>,
    },
    /// Quadrant-normalized g2 for B-X, B-B and X-X
    Quadrants {
        input: PathBuf,
        /// Arrival time of the first pulse [ps]; header pulse offset, else an EMG fit
        #[arg(long, value_name = "PS")]
        t0: Option<f64>,
    },
    /// Two-pulse over single-pulse emission per energy
    Mu {
        /// Single-pulse reference tag file
        #[arg(long, value_name = "PATH")]
        single: PathBuf,
        /// Two-pulse tag files, pulse delay read from each header
        #[arg(required = true)]
        double: Vec<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum HomCommand {
    /// Closed-form g2 versus phase
    Analytic {
        /// Number of phase points over [0, pi]
        #[arg(long, default_value_t = 17)]
        points: usize,
    },
    /// Closed form next to the brute-force eight-mode Fock computation
    Oracle {
        #[arg(long, default_value_t = 17)]
        points: usize,
    },
    /// Synthesize a two-output tag stream
    Synthesize,
    /// Sliding-window g2 series from a two-output tag file
    Analyze {
        input: PathBuf,
        /// Write mean, spread and pooled values here as well
        #[arg(long, value_name = "PATH")]
        summary_out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&cli.overrides)?;
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    let ov = &cli.overrides;
    match cli.command {
        Command::Analytic {
            sweep_to,
            sweep_step,
        } => commands::analytic(&cfg, sweep_to, sweep_step),
        Command::MutualInfo => commands::mutual_info(&cfg),
        Command::Simulate => commands::simulate(&cfg),
        Command::Analyze { what } => match what {
            AnalyzeCommand::Hist {
                input,
                channels,
                fit_out,
                fix_sigma,
            } => commands::analyze_hist(&cfg, &input, &channels, fit_out.as_deref(), fix_sigma),
            AnalyzeCommand::Map {
                input,
                a,
                b,
                displaced,
            } => commands::analyze_map(&cfg, &input, &a, &b, displaced),
            AnalyzeCommand::Quadrants { input, t0 } => {
                commands::analyze_quadrants(&cfg, &input, t0, ov.dt)
            }
            AnalyzeCommand::Mu { single, double } => commands::analyze_mu(&cfg, &single, &double),
        },
        Command::Hom { what } => match what {
            HomCommand::Analytic { points } => commands::hom_table(&cfg, points, false),
            HomCommand::Oracle { points } => commands::hom_table(&cfg, points, true),
            HomCommand::Synthesize => commands::hom_synthesize(&cfg),
            HomCommand::Analyze { input, summary_out } => {
                commands::hom_analyze(&cfg, &input, summary_out.as_deref())
            }
        },
        Command::Report => report::run(&cfg),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                _ => {
                    eprint!("{}", e.render());
                    1
                }
            };
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("seqtpe: {e}");
        std::process::exit(e.exit_code());
    }
}
