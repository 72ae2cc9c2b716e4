//! Detector figures of merit: quantum efficiency from a calibrated flux,
//! the variance law of the peak ladder, the excess noise factor and the
//! largest resolvable photon number.

use alloc::vec::Vec;

use crate::error::{finite, Error, Result};
use crate::linalg::SquareMatrix;
use crate::linear::linear_fit;
use crate::mixture::GaussianPeak;

/// Planck constant, J·s (exact SI value).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Raw efficiencies outside `[0, RAW_SUSPECT_MAX]` are flagged.
pub const RAW_SUSPECT_MAX: f64 = 1.05;

/// Photons per second carried by `power` watts at `wavelength` metres.
pub fn photon_flux(wavelength: f64, power: f64) -> Result<f64> {
    finite("wavelength", wavelength)?;
    finite("power", power)?;
    if wavelength <= 0.0 {
        return Err(Error::Domain {
            name: "wavelength",
            value: wavelength,
            expected: "> 0",
        });
    }
    if power < 0.0 {
        return Err(Error::Domain {
            name: "power",
            value: power,
            expected: ">= 0",
        });
    }
    Ok(wavelength * power / (PLANCK * SPEED_OF_LIGHT))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EfficiencyInput {
    /// Metres.
    pub wavelength: f64,
    /// Watts, measured before the attenuators.
    pub power: f64,
    /// Combined transmission of the neutral-density filters.
    pub nd_transmission: f64,
    /// Detector count rate with light, 1/s.
    pub counts: f64,
    /// Count rate with the beam blocked, 1/s.
    pub dark_counts: f64,
    /// Transmissions of optical elements in front of the active area.
    #[cfg_attr(feature = "serde", serde(default))]
    pub loss_factors: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Efficiency {
    /// Photons per second before attenuation.
    pub photon_flux: f64,
    pub raw: f64,
    /// `raw` with the optical losses divided out.
    pub intrinsic: f64,
    /// Raw efficiency outside `[0, 1.05]`.
    pub calibration_suspect: bool,
}

/// `intrinsic = raw / Π loss_factors`.
pub fn correct_for_losses(raw: f64, loss_factors: &[f64]) -> Result<f64> {
    let mut product = 1.0;
    for &f in loss_factors {
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::Domain {
                name: "loss_factor",
                value: f,
                expected: "in (0, 1]",
            });
        }
        product *= f;
    }
    Ok(raw / product)
}

/// `raw = (N_c − N_d)/(α·N)` with `N` from [`photon_flux`], then loss corrected.
pub fn measured_efficiency(input: &EfficiencyInput) -> Result<Efficiency> {
    finite("counts", input.counts)?;
    finite("dark_counts", input.dark_counts)?;
    let t = input.nd_transmission;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain {
            name: "nd_transmission",
            value: t,
            expected: "in (0, 1]",
        });
    }
    let flux = photon_flux(input.wavelength, input.power)?;
    if !(flux > 0.0) {
        return Err(Error::ZeroFlux);
    }
    let raw = (input.counts - input.dark_counts) / (t * flux);
    let intrinsic = correct_for_losses(raw, &input.loss_factors)?;
    Ok(Efficiency {
        photon_flux: flux,
        raw,
        intrinsic,
        calibration_suspect: !(0.0..=RAW_SUSPECT_MAX).contains(&raw),
    })
}

/// `F = ⟨M²⟩/⟨M⟩² = 1 + σ_M²/Δ²` with the gain expressed in area units.
pub fn excess_noise_factor(mult_var: f64, spacing: f64) -> f64 {
    1.0 + mult_var / (spacing * spacing)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaxPhotonNumber {
    Finite(f64),
    /// Noise-free multiplication.
    Unbounded,
}

impl MaxPhotonNumber {
    pub fn value(self) -> f64 {
        match self {
            MaxPhotonNumber::Finite(v) => v,
            MaxPhotonNumber::Unbounded => f64::INFINITY,
        }
    }
}

/// Photon number at which the accumulated multiplication noise equals the
/// peak spacing: `1/(F − 1)`.
pub fn n_max(enf: f64) -> Result<MaxPhotonNumber> {
    finite("enf", enf)?;
    if enf < 1.0 {
        return Err(Error::Domain {
            name: "enf",
            value: enf,
            expected: ">= 1",
        });
    }
    if enf == 1.0 {
        Ok(MaxPhotonNumber::Unbounded)
    } else {
        Ok(MaxPhotonNumber::Finite(1.0 / (enf - 1.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseReport {
    /// Slope of the variance law, the per-photon multiplication variance.
    pub sigma_m_sq: f64,
    /// Intercept of the variance law, additive variance while firing.
    pub sigma_0_sq: f64,
    pub enf: f64,
    /// `1/(F−1)`; [`MaxPhotonNumber::Unbounded`] when `F ≤ 1`.
    pub n_max: MaxPhotonNumber,
    pub regression_residual: f64,
    /// Variance of the zero-photon peak that was subtracted.
    pub electronic_var: f64,
    /// Linear term `Δ` of the quadratic ladder through the peak means.
    pub spacing: f64,
}

/// Least-squares `Δ` of `x_i = x₀ + iΔ − i²α` through the peak means. For
/// a fitted mixture the means lie on the ladder and this is the fitted `Δ`;
/// unlike the mean adjacent spacing it does not absorb the curvature `α`.
fn ladder_spacing(peaks: &[GaussianPeak]) -> Result<f64> {
    let mut normal = SquareMatrix::zeros(3);
    let mut rhs = [0.0; 3];
    for p in peaks {
        let i = p.index as f64;
        let basis = [1.0, i, i * i];
        for r in 0..3 {
            rhs[r] += basis[r] * p.mean;
            for c in 0..3 {
                normal.add(r, c, basis[r] * basis[c]);
            }
        }
    }
    if normal.cholesky().is_none() {
        return Err(Error::DegenerateDesign);
    }
    Ok(normal.cholesky_solve(&rhs)[1])
}

/// How the points of the variance-law regression are weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum VarianceWeighting {
    /// Every peak counts the same.
    #[default]
    Uniform,
    /// Each peak is weighted by the inverse sampling variance of its fitted
    /// variance, `wᵢ/σᵢ⁴` up to a constant. Sparsely populated or very broad
    /// peaks (typically the last peak of a fit that absorbs the unmodelled
    /// tail) then barely move the line.
    Precision,
}

/// Regress `σᵢ² − σ₀²(peak 0)` on `i` over the peaks with `i ≥ 1`.
pub fn variance_law(peaks: &[GaussianPeak]) -> Result<NoiseReport> {
    variance_law_weighted(peaks, VarianceWeighting::Uniform)
}

/// [`variance_law`] with a choice of regression weights.
pub fn variance_law_weighted(peaks: &[GaussianPeak], weighting: VarianceWeighting) -> Result<NoiseReport> {
    if peaks.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            found: peaks.len(),
            what: "peaks",
        });
    }
    let mut sorted = peaks.to_vec();
    sorted.sort_by_key(|p| p.index);
    if sorted[0].index != 0 {
        return Err(Error::InvalidModel("variance law needs the zero-photon peak"));
    }
    let electronic_var = sorted[0].std_dev * sorted[0].std_dev;
    let points: Vec<(f64, f64)> = sorted[1..]
        .iter()
        .map(|p| (p.index as f64, p.std_dev * p.std_dev - electronic_var))
        .collect();
    let line = match weighting {
        VarianceWeighting::Uniform => linear_fit(&points, None)?,
        VarianceWeighting::Precision => {
            let weights: Vec<f64> = sorted[1..]
                .iter()
                .map(|p| {
                    let var = p.std_dev * p.std_dev;
                    p.weight / (var * var)
                })
                .collect();
            linear_fit(&points, Some(&weights))?
        }
    };
    let spacing = ladder_spacing(&sorted)?;
    let enf = excess_noise_factor(line.slope, spacing);
    let n_max = if enf > 1.0 {
        MaxPhotonNumber::Finite(1.0 / (enf - 1.0))
    } else {
        MaxPhotonNumber::Unbounded
    };
    Ok(NoiseReport {
        sigma_m_sq: line.slope,
        sigma_0_sq: line.intercept,
        enf,
        n_max,
        regression_residual: line.residual,
        electronic_var,
        spacing,
    })
}
