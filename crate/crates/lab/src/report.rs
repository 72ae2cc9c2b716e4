//! Fit results on disk: the JSON report and the per-bin fit curve.

use std::path::Path;

use pnr_core::fit::{expected_counts, FitReport, FitWarning};
use pnr_core::{ConstraintKind, GaussianPeak, Histogram, MixtureModel};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::formats::{csv_io, csv_writer, finish, num};

/// JSON form of a fit. Also accepted as hand-written input to `analyze`,
/// in which case the peak means need not follow a ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReportFile {
    pub constraint: ConstraintKind,
    pub x0: f64,
    pub delta: f64,
    pub sat: f64,
    pub peaks: Vec<GaussianPeak>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn describe(w: &FitWarning) -> String {
    match w {
        FitWarning::RankDeficient { min_pivot } => {
            format!("rank deficient normal matrix (pivot ratio {min_pivot:.3e})")
        }
        FitWarning::SaturationFixed => "fewer than three peaks: saturation coefficient held fixed".to_string(),
    }
}

impl From<&FitReport> for FitReportFile {
    fn from(r: &FitReport) -> Self {
        FitReportFile {
            constraint: r.model.kind(),
            x0: r.model.x0(),
            delta: r.model.spacing(),
            sat: r.model.sat(),
            peaks: r.model.peaks().to_vec(),
            mu: r.model.poisson_mu(),
            objective: r.objective,
            converged: r.converged,
            iterations: r.iterations,
            warnings: r.warnings.iter().map(describe).collect(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| LabError::input(path, format!("cannot serialize: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}

/// `bin_center, data, peak_0 … peak_{K−1}, model`: the data, each peak's
/// expected counts and their sum.
pub fn write_fit_curve(path: &Path, model: &MixtureModel, hist: &Histogram) -> Result<()> {
    let (total, per_peak) = expected_counts(model, hist);
    let mut w = csv_writer(path)?;
    let io = |e| csv_io(path, e);
    let mut header = vec!["bin_center".to_string(), "data".to_string()];
    header.extend((0..per_peak.len()).map(|i| format!("peak_{i}")));
    header.push("model".to_string());
    w.write_record(&header).map_err(io)?;
    for (k, center) in hist.centers().enumerate() {
        let mut row = vec![num(center), hist.counts()[k].to_string()];
        row.extend(per_peak.iter().map(|p| num(p[k])));
        row.push(num(total[k]));
        w.write_record(&row).map_err(io)?;
    }
    finish(path, w)
}
