//! Discrimination and noise figures of a fitted peak set.

use std::path::Path;

use pnr_core::discriminate::{
    build_scheme_for_peaks, confusion_for_peaks, one_vs_many_error_for_peaks, ConfusionMatrix, DecisionScheme, Priors,
};
use pnr_core::noise::{variance_law_weighted, MaxPhotonNumber, NoiseReport, VarianceWeighting};
use pnr_core::GaussianPeak;
use serde::{Serialize, Serializer};

use crate::config::{AnalyzeConfig, PriorChoice, WeightingChoice};
use crate::error::{LabError, Result};
use crate::formats::{csv_io, csv_writer, finish, num};

fn serialize_n_max<S: Serializer>(n: &MaxPhotonNumber, s: S) -> Result<S::Ok, S::Error> {
    match n {
        MaxPhotonNumber::Finite(v) => s.serialize_f64(*v),
        MaxPhotonNumber::Unbounded => s.serialize_str("unbounded"),
    }
}

/// JSON form of [`NoiseReport`].
#[derive(Debug, Clone, Serialize)]
pub struct NoiseSection {
    pub sigma_m_sq: f64,
    pub sigma_0_sq: f64,
    pub enf: f64,
    #[serde(serialize_with = "serialize_n_max")]
    pub n_max: MaxPhotonNumber,
    pub regression_residual: f64,
    pub electronic_var: f64,
    pub spacing: f64,
    pub weighting: WeightingChoice,
}

impl NoiseSection {
    fn new(r: &NoiseReport, weighting: WeightingChoice) -> Self {
        NoiseSection {
            sigma_m_sq: r.sigma_m_sq,
            sigma_0_sq: r.sigma_0_sq,
            enf: r.enf,
            n_max: r.n_max,
            regression_residual: r.regression_residual,
            electronic_var: r.electronic_var,
            spacing: r.spacing,
            weighting,
        }
    }
}

/// Everything `analyze` computes from one peak set.
#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub priors: PriorChoice,
    pub scheme: DecisionScheme,
    pub confusion: ConfusionMatrix,
    /// Prior-weighted probability of assigning the wrong photon number.
    pub total_error: f64,
    /// Misclassification between one photon and two or more.
    pub one_vs_many_error: f64,
    pub noise: NoiseSection,
    #[serde(skip)]
    peaks: Vec<GaussianPeak>,
    #[serde(skip)]
    report: NoiseReport,
}

/// Peaks must be indexed `0..K` in order with `K ≥ 3`.
pub fn analyze(peaks: &[GaussianPeak], options: &AnalyzeConfig) -> pnr_core::Result<Analysis> {
    if peaks.len() < 3 {
        return Err(pnr_core::Error::InsufficientData {
            needed: 3,
            found: peaks.len(),
            what: "peaks",
        });
    }
    let priors = Priors::from(options.priors);
    let scheme = build_scheme_for_peaks(peaks, &priors)?;
    let confusion = confusion_for_peaks(peaks, &priors)?;
    let one_vs_many_error = one_vs_many_error_for_peaks(peaks, &scheme.priors)?;
    let weighting = VarianceWeighting::from(options.variance_weighting);
    let report = variance_law_weighted(peaks, weighting)?;
    Ok(Analysis {
        priors: options.priors,
        total_error: confusion.total_error(),
        scheme,
        confusion,
        one_vs_many_error,
        noise: NoiseSection::new(&report, options.variance_weighting),
        peaks: peaks.to_vec(),
        report,
    })
}

impl Analysis {
    pub fn noise_report(&self) -> &NoiseReport {
        &self.report
    }

    /// `n, error_probability, region_lower, region_upper`.
    pub fn write_errors_vs_n(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        let io = |e| csv_io(path, e);
        w.write_record(["n", "error_probability", "region_lower", "region_upper"])
            .map_err(io)?;
        for (n, e) in self.scheme.error_per_number.iter().enumerate() {
            let (lo, hi) = self.scheme.region(n);
            w.write_record([n.to_string(), num(*e), num(lo), num(hi)]).map_err(io)?;
        }
        finish(path, w)
    }

    /// `n, variance, law_variance, std_dev`: fitted variance of each peak
    /// next to the regression line.
    pub fn write_variance_vs_n(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        let io = |e| csv_io(path, e);
        w.write_record(["n", "variance", "law_variance", "std_dev"])
            .map_err(io)?;
        let r = &self.report;
        for p in &self.peaks {
            let law = if p.index == 0 {
                r.electronic_var
            } else {
                r.electronic_var + r.sigma_0_sq + p.index as f64 * r.sigma_m_sq
            };
            w.write_record([
                p.index.to_string(),
                num(p.std_dev * p.std_dev),
                num(law),
                num(p.std_dev),
            ])
            .map_err(io)?;
        }
        finish(path, w)
    }

    /// Row `i` holds `P(decide j | true i)` in column `decided_j`.
    pub fn write_confusion(&self, path: &Path) -> Result<()> {
        let mut w = csv_writer(path)?;
        let io = |e| csv_io(path, e);
        let k = self.confusion.matrix.len();
        let mut header = vec!["true".to_string()];
        header.extend((0..k).map(|j| format!("decided_{j}")));
        w.write_record(&header).map_err(io)?;
        for (i, row) in self.confusion.matrix.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().copied().map(num));
            w.write_record(&rec).map_err(io)?;
        }
        finish(path, w)
    }
}

/// Peak indices must run 0, 1, 2, ... in order.
pub fn check_peaks(path: &Path, peaks: &[GaussianPeak]) -> Result<()> {
    for (k, p) in peaks.iter().enumerate() {
        if p.index != k {
            return Err(LabError::input(
                path,
                format!("peak {k} has index {}; peaks must be listed as 0, 1, 2, ...", p.index),
            ));
        }
    }
    Ok(())
}
