//! The subcommands, independent of argument parsing.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pnr_core::fit::{fit_spectrum, FitReport};
use pnr_core::noise::{measured_efficiency, Efficiency, EfficiencyInput};
use pnr_core::simulate::Simulation;
use pnr_core::Histogram;
use serde::Serialize;

use crate::analysis::{analyze as analyze_peaks, check_peaks, Analysis};
use crate::config::{load_json, AnalyzeConfig, FitConfigFile, PipelineConfig, SimulateConfig};
use crate::error::{LabError, Result};
use crate::formats::{read_histogram, write_histogram, write_pulses};
use crate::manifest::RunManifest;
use crate::parallel;
use crate::report::{write_fit_curve, write_json, FitReportFile};

pub const PULSES_FILE: &str = "pulses.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const FIT_REPORT_FILE: &str = "fit_report.json";
pub const FIT_CURVE_FILE: &str = "fit_curve.csv";
pub const ANALYSIS_FILE: &str = "analysis.json";
pub const ERRORS_FILE: &str = "errors_vs_n.csv";
pub const VARIANCE_FILE: &str = "variance_vs_n.csv";
pub const CONFUSION_FILE: &str = "confusion.csv";

/// Settings shared by every command.
#[derive(Debug, Clone)]
pub struct Context {
    pub out_dir: PathBuf,
    /// Replaces the seed of any simulation config.
    pub seed: Option<u64>,
    /// Simulation threads; 0 lets the pool decide.
    pub threads: usize,
}

/// What a successful command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
    /// One human-readable line per stage.
    pub summary: Vec<String>,
}

/// Tracks written files and the manifest of one command.
struct Run {
    command: &'static str,
    started: Instant,
    out_dir: PathBuf,
    outputs: Vec<String>,
    summary: Vec<String>,
}

impl Run {
    fn start(command: &'static str, ctx: &Context) -> Result<Run> {
        fs::create_dir_all(&ctx.out_dir).map_err(|e| LabError::io(&ctx.out_dir, e))?;
        Ok(Run {
            command,
            started: Instant::now(),
            out_dir: ctx.out_dir.clone(),
            outputs: Vec::new(),
            summary: Vec::new(),
        })
    }

    /// Path for `name` in the output directory, recorded as an output.
    fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out_dir.join(name)
    }

    fn finish(self, config: &impl Serialize, seed: Option<u64>) -> Result<Outcome> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            config: serde_json::to_value(config).unwrap_or_default(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs.clone(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        manifest.write(&self.out_dir)?;
        Ok(Outcome {
            outputs: self.outputs,
            summary: self.summary,
        })
    }
}

fn load_simulate(path: &Path, ctx: &Context) -> Result<SimulateConfig> {
    let mut cfg: SimulateConfig = load_json(path)?;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn simulate_stage(run: &mut Run, cfg: &SimulateConfig, source: &Path, threads: usize) -> Result<Simulation> {
    let core = cfg.to_core();
    core.validate().map_err(|e| LabError::input(source, e.to_string()))?;
    let sim = parallel::simulate(&core, threads)?;
    write_pulses(&run.output(PULSES_FILE), &sim.records)?;
    write_histogram(&run.output(HISTOGRAM_FILE), &sim.histogram)?;
    run.summary.push(format!(
        "simulated {} pulses (seed {}) into {} bins",
        cfg.n_pulses,
        cfg.seed,
        sim.histogram.n_bins()
    ));
    Ok(sim)
}

/// Fit `hist` and write the report and curve. Non-convergence is reported
/// by the caller after the manifest is written.
fn fit_stage(run: &mut Run, hist: &Histogram, cfg: &FitConfigFile, source: &Path) -> Result<FitReport> {
    let core = cfg.to_core().map_err(|e| LabError::input(source, e.to_string()))?;
    let report = fit_spectrum(hist, &core)?;
    write_json(&run.output(FIT_REPORT_FILE), &FitReportFile::from(&report))?;
    write_fit_curve(&run.output(FIT_CURVE_FILE), &report.model, hist)?;
    run.summary.push(format!(
        "{} fit, {} peaks: x0 {:.3}, delta {:.3}, objective {:.4}, {} after {} iterations",
        report.model.kind().as_str(),
        report.model.n_peaks(),
        report.model.x0(),
        report.model.spacing(),
        report.objective,
        if report.converged { "converged" } else { "NOT converged" },
        report.iterations
    ));
    Ok(report)
}

fn analyze_stage(run: &mut Run, report: &FitReportFile, options: &AnalyzeConfig, source: &Path) -> Result<Analysis> {
    check_peaks(source, &report.peaks)?;
    let analysis = analyze_peaks(&report.peaks, options).map_err(|e| LabError::input(source, e.to_string()))?;
    write_json(&run.output(ANALYSIS_FILE), &analysis)?;
    analysis.write_errors_vs_n(&run.output(ERRORS_FILE))?;
    analysis.write_variance_vs_n(&run.output(VARIANCE_FILE))?;
    analysis.write_confusion(&run.output(CONFUSION_FILE))?;
    let noise = analysis.noise_report();
    run.summary.push(format!(
        "F = {:.4}, sigma_M^2 = {:.1}, sigma_0^2 = {:.1}, total error {:.2}%, 1 vs >=2 error {:.2}%",
        noise.enf,
        noise.sigma_m_sq,
        noise.sigma_0_sq,
        100.0 * analysis.total_error,
        100.0 * analysis.one_vs_many_error
    ));
    Ok(analysis)
}

pub fn simulate(ctx: &Context, config_path: &Path) -> Result<Outcome> {
    let cfg = load_simulate(config_path, ctx)?;
    let mut run = Run::start("simulate", ctx)?;
    simulate_stage(&mut run, &cfg, config_path, ctx.threads)?;
    run.finish(&cfg, Some(cfg.seed))
}

pub fn fit(ctx: &Context, histogram_path: &Path, config_path: Option<&Path>) -> Result<Outcome> {
    let cfg = match config_path {
        Some(p) => load_json(p)?,
        None => FitConfigFile::default(),
    };
    let hist = read_histogram(histogram_path)?;
    let mut run = Run::start("fit", ctx)?;
    let source = config_path.unwrap_or(histogram_path);
    let report = fit_stage(&mut run, &hist, &cfg, source)?;
    let outcome = run.finish(&cfg, None)?;
    if report.converged {
        Ok(outcome)
    } else {
        Err(LabError::NotConverged {
            iterations: report.iterations,
        })
    }
}

pub fn analyze(ctx: &Context, report_path: &Path, options: &AnalyzeConfig) -> Result<Outcome> {
    let report: FitReportFile = load_json(report_path)?;
    let mut run = Run::start("analyze", ctx)?;
    analyze_stage(&mut run, &report, options, report_path)?;
    run.finish(options, None)
}

/// Flux, raw and intrinsic efficiency of a calibration measurement.
pub fn qe(config_path: &Path) -> Result<Efficiency> {
    let input: EfficiencyInput = load_json(config_path)?;
    measured_efficiency(&input).map_err(|e| LabError::input(config_path, e.to_string()))
}

/// Simulate, fit and analyze in one output directory.
pub fn pipeline(ctx: &Context, config_path: &Path) -> Result<Outcome> {
    let mut cfg: PipelineConfig = load_json(config_path)?;
    if let Some(seed) = ctx.seed {
        cfg.simulate.seed = seed;
    }
    let mut run = Run::start("pipeline", ctx)?;
    let sim = simulate_stage(&mut run, &cfg.simulate, config_path, ctx.threads)?;
    let report = fit_stage(&mut run, &sim.histogram, &cfg.fit, config_path)?;
    if !report.converged {
        run.finish(&cfg, Some(cfg.simulate.seed))?;
        return Err(LabError::NotConverged {
            iterations: report.iterations,
        });
    }
    let file = FitReportFile::from(&report);
    analyze_stage(&mut run, &file, &cfg.analyze, config_path)?;
    run.finish(&cfg, Some(cfg.simulate.seed))
}
