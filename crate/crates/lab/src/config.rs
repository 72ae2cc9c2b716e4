//! JSON configuration files and their conversion into core types.
//!
//! Fields that accept a keyword or a number (`"auto"` or `12.5`,
//! `"infinite"` or `64`) go through `serde_json::Value` so that a bad value
//! is reported with its line and column like any other parse error.

use std::fs;
use std::num::NonZeroU64;
use std::path::Path;

use pnr_core::fit::{FitConfig, PeakCount};
use pnr_core::noise::VarianceWeighting;
use pnr_core::simulate::{BinWidth, SimConfig};
use pnr_core::{CellCount, ConstraintKind, DetectorModel, MixtureModel};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, Result};

/// Read and parse a JSON file. Syntax and schema errors become
/// [`LabError::Input`] carrying serde's line/column diagnostic.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| LabError::input(path, e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub struct CellSpec(pub CellCount);

impl TryFrom<Value> for CellSpec {
    type Error = String;

    fn try_from(v: Value) -> Result<Self, String> {
        match &v {
            Value::String(s) if s == "infinite" => Ok(CellSpec(CellCount::Infinite)),
            Value::Number(n) => n
                .as_u64()
                .and_then(NonZeroU64::new)
                .map(|c| CellSpec(CellCount::Finite(c)))
                .ok_or_else(|| format!("cell_count must be a positive integer, got {n}")),
            _ => Err(format!(
                "cell_count must be \"infinite\" or a positive integer, got {v}"
            )),
        }
    }
}

impl From<CellSpec> for Value {
    fn from(c: CellSpec) -> Value {
        match c.0 {
            CellCount::Infinite => Value::from("infinite"),
            CellCount::Finite(n) => Value::from(n.get()),
        }
    }
}

impl Default for CellSpec {
    fn default() -> Self {
        CellSpec(CellCount::Infinite)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub struct BinWidthSpec(pub BinWidth);

impl TryFrom<Value> for BinWidthSpec {
    type Error = String;

    fn try_from(v: Value) -> Result<Self, String> {
        match &v {
            Value::String(s) if s == "auto" => Ok(BinWidthSpec(BinWidth::Auto)),
            Value::Number(n) => match n.as_f64() {
                Some(w) if w > 0.0 && w.is_finite() => Ok(BinWidthSpec(BinWidth::Fixed(w))),
                _ => Err(format!("bin_width must be > 0, got {n}")),
            },
            _ => Err(format!("bin_width must be \"auto\" or a number, got {v}")),
        }
    }
}

impl From<BinWidthSpec> for Value {
    fn from(b: BinWidthSpec) -> Value {
        match b.0 {
            BinWidth::Auto => Value::from("auto"),
            BinWidth::Fixed(w) => Value::from(w),
        }
    }
}

impl Default for BinWidthSpec {
    fn default() -> Self {
        BinWidthSpec(BinWidth::Auto)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub struct PeakCountSpec(pub PeakCount);

impl TryFrom<Value> for PeakCountSpec {
    type Error = String;

    fn try_from(v: Value) -> Result<Self, String> {
        match &v {
            Value::String(s) if s == "auto" => Ok(PeakCountSpec(PeakCount::Auto)),
            Value::Number(n) => match n.as_u64() {
                Some(k) if k >= 1 => Ok(PeakCountSpec(PeakCount::Fixed(k as usize))),
                _ => Err(format!("n_peaks must be a positive integer, got {n}")),
            },
            _ => Err(format!("n_peaks must be \"auto\" or an integer, got {v}")),
        }
    }
}

impl From<PeakCountSpec> for Value {
    fn from(p: PeakCountSpec) -> Value {
        match p.0 {
            PeakCount::Auto => Value::from("auto"),
            PeakCount::Fixed(k) => Value::from(k),
        }
    }
}

impl Default for PeakCountSpec {
    fn default() -> Self {
        PeakCountSpec(PeakCount::Auto)
    }
}

/// JSON form of [`DetectorModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub mean_photon_number: f64,
    pub quantum_efficiency: f64,
    pub gain_per_photon: f64,
    pub mult_noise_var: f64,
    pub electronic_noise_var: f64,
    pub extra_per_photon_var: f64,
    #[serde(default)]
    pub area_offset: f64,
    #[serde(default)]
    pub saturation_coeff: f64,
    #[serde(default)]
    pub dark_rate_per_gate: f64,
    #[serde(default)]
    pub cell_count: CellSpec,
}

impl From<&DetectorConfig> for DetectorModel {
    fn from(c: &DetectorConfig) -> Self {
        DetectorModel {
            mean_photon_number: c.mean_photon_number,
            quantum_efficiency: c.quantum_efficiency,
            gain_per_photon: c.gain_per_photon,
            mult_noise_var: c.mult_noise_var,
            electronic_noise_var: c.electronic_noise_var,
            extra_per_photon_var: c.extra_per_photon_var,
            area_offset: c.area_offset,
            saturation_coeff: c.saturation_coeff,
            dark_rate_per_gate: c.dark_rate_per_gate,
            cell_count: c.cell_count.0,
        }
    }
}

/// Input of `pnr-lab simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: DetectorConfig,
    pub n_pulses: u64,
    pub seed: u64,
    #[serde(default)]
    pub bin_width: BinWidthSpec,
}

impl SimulateConfig {
    pub fn to_core(&self) -> SimConfig {
        SimConfig {
            model: DetectorModel::from(&self.model),
            n_pulses: self.n_pulses,
            seed: self.seed,
            bin_width: self.bin_width.0,
        }
    }
}

/// Explicit starting point for a fit. With `mu` the start has Poisson
/// weights; otherwise `weights` (uniform when absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitConfig {
    pub x0: f64,
    pub delta: f64,
    #[serde(default)]
    pub sat: f64,
    pub sigmas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl InitConfig {
    pub fn to_model(&self) -> pnr_core::Result<MixtureModel> {
        if let Some(mu) = self.mu {
            return MixtureModel::poisson(self.x0, self.delta, self.sat, &self.sigmas, mu);
        }
        let k = self.sigmas.len();
        let uniform = vec![1.0 / k.max(1) as f64; k];
        let weights = self.weights.as_deref().unwrap_or(&uniform);
        MixtureModel::free(self.x0, self.delta, self.sat, &self.sigmas, weights)
    }
}

fn default_constraint() -> ConstraintKind {
    ConstraintKind::FreeWeightsFreeSigmas
}

fn default_max_iterations() -> usize {
    FitConfig::default().max_iterations
}

fn default_tolerance() -> f64 {
    FitConfig::default().tolerance
}

/// Input of `pnr-lab fit`. Every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfigFile {
    #[serde(default = "default_constraint")]
    pub constraint: ConstraintKind,
    #[serde(default)]
    pub n_peaks: PeakCountSpec,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitConfig>,
}

impl Default for FitConfigFile {
    fn default() -> Self {
        FitConfigFile {
            constraint: default_constraint(),
            n_peaks: PeakCountSpec::default(),
            max_iterations: default_max_iterations(),
            tolerance: default_tolerance(),
            init: None,
        }
    }
}

impl FitConfigFile {
    pub fn to_core(&self) -> pnr_core::Result<FitConfig> {
        Ok(FitConfig {
            n_peaks: self.n_peaks.0,
            constraint: self.constraint,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            init: self.init.as_ref().map(InitConfig::to_model).transpose()?,
        })
    }
}

/// Prior photon-number distribution used to place decision thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PriorChoice {
    /// Every modelled photon number equally likely.
    #[default]
    Equal,
    /// The fitted peak weights.
    FromWeights,
}

impl From<PriorChoice> for pnr_core::discriminate::Priors {
    fn from(p: PriorChoice) -> Self {
        match p {
            PriorChoice::Equal => pnr_core::discriminate::Priors::Equal,
            PriorChoice::FromWeights => pnr_core::discriminate::Priors::FromWeights,
        }
    }
}

/// Weighting of the variance-law regression, as a command-line value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WeightingChoice {
    Uniform,
    /// Inverse sampling variance of each fitted variance.
    #[default]
    Precision,
}

impl From<WeightingChoice> for VarianceWeighting {
    fn from(w: WeightingChoice) -> Self {
        match w {
            WeightingChoice::Uniform => VarianceWeighting::Uniform,
            WeightingChoice::Precision => VarianceWeighting::Precision,
        }
    }
}

/// Options of the analysis stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    #[serde(default)]
    pub priors: PriorChoice,
    #[serde(default)]
    pub variance_weighting: WeightingChoice,
}

/// Input of `pnr-lab pipeline`: one section per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub fit: FitConfigFile,
    #[serde(default)]
    pub analyze: AnalyzeConfig,
}
