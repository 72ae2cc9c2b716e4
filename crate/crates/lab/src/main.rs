use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pnr_lab::commands::{self, Context, Outcome};
use pnr_lab::config::{AnalyzeConfig, PriorChoice, WeightingChoice};
use pnr_lab::LabError;

/// Simulate, fit and analyze photon-number-resolving detector spectra.
#[derive(Debug, Parser)]
#[command(name = "pnr-lab", version)]
struct Cli {
    /// Seed for simulations, replacing the one in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Print nothing but errors and requested JSON.
    #[arg(long, global = true)]
    quiet: bool,
    /// Simulation threads (0 = all cores). Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate pulses.csv and histogram.csv from a detector model.
    Simulate { config: PathBuf },
    /// Fit a histogram; writes fit_report.json and fit_curve.csv.
    Fit {
        histogram: PathBuf,
        /// Fit settings; defaults to a free fit with automatic peak count.
        config: Option<PathBuf>,
    },
    /// Decision thresholds, error rates and noise figures of a fit report.
    Analyze {
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = PriorChoice::Equal)]
        priors: PriorChoice,
        #[arg(long, value_enum, default_value_t = WeightingChoice::Precision)]
        variance_weighting: WeightingChoice,
    },
    /// Quantum efficiency of a calibration measurement, printed as JSON.
    Qe { config: PathBuf },
    /// Simulate, fit and analyze in one go.
    Pipeline { config: PathBuf },
}

fn report(outcome: &Outcome, quiet: bool) {
    if quiet {
        return;
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    println!("wrote {}", outcome.outputs.join(", "));
}

fn run(cli: Cli) -> Result<(), LabError> {
    let ctx = Context {
        out_dir: cli.out_dir,
        seed: cli.seed,
        threads: cli.threads,
    };
    let outcome = match cli.command {
        Command::Simulate { config } => commands::simulate(&ctx, &config)?,
        Command::Fit { histogram, config } => commands::fit(&ctx, &histogram, config.as_deref())?,
        Command::Analyze {
            report,
            priors,
            variance_weighting,
        } => {
            let options = AnalyzeConfig {
                priors,
                variance_weighting,
            };
            commands::analyze(&ctx, &report, &options)?
        }
        Command::Qe { config } => {
            let e = commands::qe(&config)?;
            let json = serde_json::to_string_pretty(&e).expect("efficiency serializes");
            println!("{json}");
            if e.calibration_suspect && !cli.quiet {
                eprintln!(
                    "warning: raw efficiency {:.4} is outside [0, 1.05]; check the calibration",
                    e.raw
                );
            }
            return Ok(());
        }
        Command::Pipeline { config } => commands::pipeline(&ctx, &config)?,
    };
    report(&outcome, cli.quiet);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pnr-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
