//! Constrained Gaussian-mixture fits of pulse-area histograms.
//!
//! The objective is `Σ_b w_b (c_b − N·p_b)²` with `w_b = 1/max(c_b, 1)`,
//! where `p_b` is the mixture probability of bin `b` computed from CDF
//! differences and `N` is the number of pulses behind the histogram.

pub mod init;
pub mod lm;
mod spectrum;

use alloc::vec::Vec;

pub use init::{init_guess, prominent_maxima};
use lm::{LeastSquares, LmSettings};
use spectrum::{Layout, SpectrumProblem};

use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::mixture::{ConstraintKind, MixtureModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakCount {
    /// Prominent maxima plus two, cut back to the peaks the fitted data
    /// supports.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub n_peaks: PeakCount,
    pub constraint: ConstraintKind,
    pub max_iterations: usize,
    /// Relative objective decrease below which the iteration stops.
    pub tolerance: f64,
    /// Replaces [`init_guess`] when set; its peak count wins over `n_peaks`.
    pub init: Option<MixtureModel>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            n_peaks: PeakCount::Auto,
            constraint: ConstraintKind::FreeWeightsFreeSigmas,
            max_iterations: 500,
            tolerance: 1e-9,
            init: None,
        }
    }
}

impl FitConfig {
    pub fn with_constraint(constraint: ConstraintKind, n_peaks: PeakCount) -> Self {
        FitConfig {
            constraint,
            n_peaks,
            ..FitConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitWarning {
    /// The normal matrix at the solution is (nearly) singular: more peaks
    /// than the spectrum resolves, or peaks without data.
    RankDeficient { min_pivot: f64 },
    /// Fewer than three peaks: the quadratic ladder term is not identifiable
    /// and was held at its initial value.
    SaturationFixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub model: MixtureModel,
    /// Final weighted sum of squared residuals.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<FitWarning>,
    /// Objective at the start and after each accepted step.
    pub objective_trace: Vec<f64>,
}

impl FitReport {
    /// `(mean, std_dev, weight)` of each peak.
    pub fn per_peak(&self) -> Vec<(f64, f64, f64)> {
        self.model
            .peaks()
            .iter()
            .map(|p| (p.mean, p.std_dev, p.weight))
            .collect()
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.warnings
            .iter()
            .any(|w| matches!(w, FitWarning::RankDeficient { .. }))
    }
}

/// Pivot ratio below which the solution is flagged as rank deficient.
const RANK_TOLERANCE: f64 = 1e-10;

/// Expected pulse count below which an automatically added tail peak is
/// considered unsupported by the data.
const MIN_PEAK_PULSES: f64 = 5.0;

/// Expected counts per bin for `model` against `hist`'s binning: the total
/// and one row per peak.
pub fn expected_counts(model: &MixtureModel, hist: &Histogram) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = hist.total_pulses() as f64;
    let edges = hist.edges();
    let per_peak: Vec<Vec<f64>> = model
        .peaks()
        .iter()
        .map(|p| {
            edges
                .windows(2)
                .map(|w| n * p.weight * p.mass_between(w[0], w[1]))
                .collect()
        })
        .collect();
    let total = (0..hist.n_bins())
        .map(|b| per_peak.iter().map(|row| row[b]).sum())
        .collect();
    (total, per_peak)
}

/// Weighted objective of an arbitrary model against `hist`.
pub fn objective(model: &MixtureModel, hist: &Histogram) -> f64 {
    let (expected, _) = expected_counts(model, hist);
    hist.counts()
        .iter()
        .zip(expected)
        .map(|(&c, e)| {
            let r = c as f64 - e;
            r * r / c.max(1) as f64
        })
        .sum()
}

fn run_stage(
    hist: &Histogram,
    start: &MixtureModel,
    kind: ConstraintKind,
    settings: &LmSettings,
) -> Result<(FitReport, usize)> {
    let k = start.n_peaks();
    let layout = Layout {
        kind,
        k,
        fit_sat: k >= 3,
    };
    let n_params = layout.n_params();
    if hist.n_bins() < 4 * n_params {
        return Err(Error::InsufficientData {
            needed: 4 * n_params,
            found: hist.n_bins(),
            what: "histogram bins",
        });
    }
    let problem = SpectrumProblem::new(layout, hist, start.sat());
    let p0 = layout.encode(start);
    let out = lm::minimize(&problem, &p0, settings);
    let model = problem.model(&out.params)?;

    let mut warnings = Vec::new();
    if !layout.fit_sat {
        warnings.push(FitWarning::SaturationFixed);
    }
    let pivot = lm::conditioning(&problem, &out.params);
    if pivot < RANK_TOLERANCE {
        warnings.push(FitWarning::RankDeficient { min_pivot: pivot });
    }
    debug_assert_eq!(problem.n_residuals(), hist.n_bins());
    Ok((
        FitReport {
            model,
            objective: out.objective,
            iterations: out.iterations,
            converged: out.converged,
            warnings,
            objective_trace: out.trace,
        },
        n_params,
    ))
}

/// Common width scale `2^k`, `k ∈ [−12, 3]`, that minimises the objective
/// of the initial guess. The weighted objective penalises a too-wide peak
/// spilling into empty bins more than it rewards covering the data, so a
/// start far too wide for sharp data would drift away from it.
fn rescale_widths(hist: &Histogram, start: &MixtureModel) -> Result<MixtureModel> {
    let sigmas = start.sigmas();
    let weights = start.weights();
    let mut best = (objective(start, hist), start.clone());
    for k in -12..=3 {
        if k == 0 {
            continue;
        }
        let f = libm::ldexp(1.0, k);
        let scaled: Vec<f64> = sigmas.iter().map(|s| s * f).collect();
        let m = MixtureModel::free(start.x0(), start.spacing(), start.sat(), &scaled, &weights)?;
        let obj = objective(&m, hist);
        if obj < best.0 {
            best = (obj, m);
        }
    }
    Ok(best.1)
}

/// Whether the data supports every peak of `model`: each holds at least
/// [`MIN_PEAK_PULSES`] pulses, each but the last (which absorbs the
/// unmodelled tail) is narrower than the peak spacing, and adjacent peaks
/// have a density crossing between their means. Unsupported peaks are
/// components with arbitrary widths that would otherwise leak into every
/// later analysis.
fn all_supported(model: &MixtureModel, n: f64) -> bool {
    let peaks = model.peaks();
    let interior = &peaks[..peaks.len() - 1];
    peaks.iter().all(|p| n * p.weight >= MIN_PEAK_PULSES)
        && interior.iter().all(|p| p.std_dev < model.spacing())
        && peaks
            .windows(2)
            .all(|w| crate::discriminate::threshold(w[0].mean, w[0].std_dev, w[1].mean, w[1].std_dev).is_ok())
}

/// Free fit of `hist` with an automatic peak count. Starting from the
/// prominent maxima plus two, up to two more peaks are tried (room for the
/// tail), then fewer, down to three; the first fit the data fully supports
/// wins, the first one tried when none does. Each candidate is fitted under
/// the linear variance law first and then with free widths.
fn fit_auto(hist: &Histogram, settings: &LmSettings) -> Result<FitReport> {
    let n = hist.total_pulses() as f64;
    let k0 = init_guess(hist, PeakCount::Auto)?.n_peaks();
    let candidates = [k0, k0 + 1, k0 + 2].into_iter().chain((3..k0).rev());
    let mut spent = 0;
    let mut first = None;
    for k in candidates {
        let start = rescale_widths(hist, &init_guess(hist, PeakCount::Fixed(k))?)?;
        let fitted = run_stage(hist, &start, ConstraintKind::LinearVariance, settings).and_then(|(law, _)| {
            let (report, _) = run_stage(hist, &law.model, ConstraintKind::FreeWeightsFreeSigmas, settings)?;
            Ok((law.iterations, report))
        });
        let (law_iterations, mut report) = match fitted {
            Ok(r) => r,
            // too many parameters for the histogram: try fewer peaks
            Err(Error::InsufficientData { .. }) if k > k0 => continue,
            Err(e) => return Err(e),
        };
        spent += law_iterations + report.iterations;
        report.iterations = spent;
        if all_supported(&report.model, n) {
            return Ok(report);
        }
        first.get_or_insert(report);
    }
    let mut report = first.expect("k0 is always tried");
    report.iterations = spent;
    Ok(report)
}

/// Fit `hist` under `cfg.constraint`.
///
/// Without an explicit initial model, constrained regimes are started from
/// a free fit so that the constrained iteration begins near the data.
/// Running out of iterations is not an error: the report comes back with
/// `converged == false`.
pub fn fit_spectrum(hist: &Histogram, cfg: &FitConfig) -> Result<FitReport> {
    if !(cfg.tolerance > 0.0) {
        return Err(Error::Domain {
            name: "tolerance",
            value: cfg.tolerance,
            expected: "> 0",
        });
    }
    if cfg.max_iterations == 0 {
        return Err(Error::Domain {
            name: "max_iterations",
            value: 0.0,
            expected: ">= 1",
        });
    }
    if hist.in_range() == 0 {
        return Err(Error::InvalidHistogram("histogram is empty"));
    }
    let settings = LmSettings {
        max_iterations: cfg.max_iterations,
        tolerance: cfg.tolerance,
        ..LmSettings::default()
    };
    let (start, staged) = match &cfg.init {
        Some(m) => (m.clone(), false),
        None => (rescale_widths(hist, &init_guess(hist, cfg.n_peaks)?)?, true),
    };
    if start.n_peaks() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: start.n_peaks(),
            what: "peaks",
        });
    }
    let auto = staged && cfg.n_peaks == PeakCount::Auto;
    if auto && cfg.constraint == ConstraintKind::FreeWeightsFreeSigmas {
        return fit_auto(hist, &settings);
    }
    if !staged || cfg.constraint == ConstraintKind::FreeWeightsFreeSigmas {
        return run_stage(hist, &start, cfg.constraint, &settings).map(|(r, _)| r);
    }

    let free = if auto {
        fit_auto(hist, &settings)?
    } else {
        run_stage(hist, &start, ConstraintKind::FreeWeightsFreeSigmas, &settings)?.0
    };
    let remaining = LmSettings {
        max_iterations: settings.max_iterations.saturating_sub(free.iterations).max(1),
        ..settings
    };
    let (mut report, _) = run_stage(hist, &free.model, cfg.constraint, &remaining)?;
    report.iterations += free.iterations;
    Ok(report)
}
