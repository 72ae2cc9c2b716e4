//! Constrained Gaussian mixtures over the photon-number ladder.
//!
//! Peak means are never free: they are always recomputed from
//! `(x0, spacing, sat)` through [`ladder_mean`]. The constraint regime
//! decides which further structure the weights and widths obey.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gauss;

/// Mean of peak `i`: `x0 + i·spacing − i²·sat`.
#[inline]
pub fn ladder_mean(x0: f64, spacing: f64, sat: f64, i: usize) -> f64 {
    let k = i as f64;
    x0 + k * spacing - k * k * sat
}

/// Poisson probabilities `e^{−μ}μⁱ/i!` for `i < k`, renormalised to sum to 1.
pub fn truncated_poisson(mu: f64, k: usize) -> Vec<f64> {
    let ln_mu = libm::log(mu);
    let mut w: Vec<f64> = (0..k)
        .map(|i| {
            let x = i as f64;
            libm::exp(x * ln_mu - mu - libm::lgamma(x + 1.0))
        })
        .collect();
    if mu == 0.0 {
        w.iter_mut().for_each(|v| *v = 0.0);
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ConstraintKind {
    #[cfg_attr(feature = "serde", serde(rename = "FREE_WEIGHTS_FREE_SIGMAS"))]
    FreeWeightsFreeSigmas,
    #[cfg_attr(feature = "serde", serde(rename = "POISSON_WEIGHTS"))]
    PoissonWeights,
    #[cfg_attr(feature = "serde", serde(rename = "LINEAR_VARIANCE"))]
    LinearVariance,
}

impl ConstraintKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintKind::FreeWeightsFreeSigmas => "FREE_WEIGHTS_FREE_SIGMAS",
            ConstraintKind::PoissonWeights => "POISSON_WEIGHTS",
            ConstraintKind::LinearVariance => "LINEAR_VARIANCE",
        }
    }
}

/// Constraint regime together with the parameters that generate the
/// constrained quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    FreeWeightsFreeSigmas,
    /// `weightᵢ ∝ e^{−μ}μⁱ/i!`, renormalised over the modelled peaks.
    PoissonWeights {
        mu: f64,
    },
    /// `σᵢ² = elec_var + [i>0]·extra_var + i·mult_var`.
    LinearVariance {
        elec_var: f64,
        extra_var: f64,
        mult_var: f64,
    },
}

impl Constraint {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            Constraint::FreeWeightsFreeSigmas => ConstraintKind::FreeWeightsFreeSigmas,
            Constraint::PoissonWeights { .. } => ConstraintKind::PoissonWeights,
            Constraint::LinearVariance { .. } => ConstraintKind::LinearVariance,
        }
    }
}

/// One photon-number peak.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GaussianPeak {
    #[cfg_attr(feature = "serde", serde(rename = "i"))]
    pub index: usize,
    pub mean: f64,
    #[cfg_attr(feature = "serde", serde(rename = "std"))]
    pub std_dev: f64,
    pub weight: f64,
}

impl GaussianPeak {
    /// Probability mass of this peak (unit normalised) in `(lo, hi]`.
    #[inline]
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        gauss::std_interval((lo - self.mean) / self.std_dev, (hi - self.mean) / self.std_dev)
    }

    #[inline]
    pub fn density(&self, x: f64) -> f64 {
        gauss::std_pdf((x - self.mean) / self.std_dev) / self.std_dev
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    x0: f64,
    spacing: f64,
    sat: f64,
    constraint: Constraint,
    peaks: Vec<GaussianPeak>,
}

fn check_ladder(x0: f64, spacing: f64, sat: f64, k: usize) -> Result<()> {
    for (name, v) in [("x0", x0), ("spacing", spacing), ("sat", sat)] {
        crate::error::finite(name, v)?;
    }
    if k == 0 {
        return Err(Error::InvalidModel("a mixture needs at least one peak"));
    }
    Ok(())
}

fn check_sigmas(sigmas: &[f64]) -> Result<()> {
    if sigmas.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidModel("peak widths must be positive and finite"));
    }
    Ok(())
}

fn normalised(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidModel("weights must be non-negative and finite"));
    }
    let s: f64 = weights.iter().sum();
    if !(s > 0.0) {
        return Err(Error::InvalidModel("weights must not all be zero"));
    }
    Ok(weights.iter().map(|w| w / s).collect())
}

impl MixtureModel {
    fn assemble(x0: f64, spacing: f64, sat: f64, constraint: Constraint, sigmas: &[f64], weights: &[f64]) -> Self {
        let peaks = sigmas
            .iter()
            .zip(weights)
            .enumerate()
            .map(|(i, (&std_dev, &weight))| GaussianPeak {
                index: i,
                mean: ladder_mean(x0, spacing, sat, i),
                std_dev,
                weight,
            })
            .collect();
        MixtureModel {
            x0,
            spacing,
            sat,
            constraint,
            peaks,
        }
    }

    /// Independent widths and weights. Weights are renormalised to sum to 1.
    pub fn free(x0: f64, spacing: f64, sat: f64, sigmas: &[f64], weights: &[f64]) -> Result<Self> {
        check_ladder(x0, spacing, sat, sigmas.len())?;
        check_sigmas(sigmas)?;
        if weights.len() != sigmas.len() {
            return Err(Error::InvalidModel("one weight per peak is required"));
        }
        let w = normalised(weights)?;
        Ok(Self::assemble(
            x0,
            spacing,
            sat,
            Constraint::FreeWeightsFreeSigmas,
            sigmas,
            &w,
        ))
    }

    /// Independent widths, weights following a Poisson law of mean `mu`.
    pub fn poisson(x0: f64, spacing: f64, sat: f64, sigmas: &[f64], mu: f64) -> Result<Self> {
        check_ladder(x0, spacing, sat, sigmas.len())?;
        check_sigmas(sigmas)?;
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::Domain {
                name: "mu",
                value: mu,
                expected: "finite and >= 0",
            });
        }
        let w = truncated_poisson(mu, sigmas.len());
        Ok(Self::assemble(
            x0,
            spacing,
            sat,
            Constraint::PoissonWeights { mu },
            sigmas,
            &w,
        ))
    }

    /// Widths generated by the linear variance law; free weights.
    pub fn linear_variance(
        x0: f64,
        spacing: f64,
        sat: f64,
        elec_var: f64,
        extra_var: f64,
        mult_var: f64,
        weights: &[f64],
    ) -> Result<Self> {
        check_ladder(x0, spacing, sat, weights.len())?;
        for (name, v) in [("elec_var", elec_var), ("extra_var", extra_var), ("mult_var", mult_var)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain {
                    name,
                    value: v,
                    expected: "finite and >= 0",
                });
            }
        }
        let sigmas: Vec<f64> = (0..weights.len())
            .map(|i| libm::sqrt(linear_variance_at(i, elec_var, extra_var, mult_var)))
            .collect();
        check_sigmas(&sigmas)?;
        let w = normalised(weights)?;
        let constraint = Constraint::LinearVariance {
            elec_var,
            extra_var,
            mult_var,
        };
        Ok(Self::assemble(x0, spacing, sat, constraint, &sigmas, &w))
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn sat(&self) -> f64 {
        self.sat
    }

    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn kind(&self) -> ConstraintKind {
        self.constraint.kind()
    }

    pub fn poisson_mu(&self) -> Option<f64> {
        match self.constraint {
            Constraint::PoissonWeights { mu } => Some(mu),
            _ => None,
        }
    }

    pub fn peaks(&self) -> &[GaussianPeak] {
        &self.peaks
    }

    pub fn n_peaks(&self) -> usize {
        self.peaks.len()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.std_dev).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.weight).collect()
    }

    /// Weighted mixture density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        self.peaks.iter().map(|p| p.weight * p.density(x)).sum()
    }

    /// Mixture probability of `(lo, hi]`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        self.peaks.iter().map(|p| p.weight * p.mass_between(lo, hi)).sum()
    }

    /// Largest deviation of a stored mean from the ladder; zero by construction.
    pub fn ladder_violation(&self) -> f64 {
        self.peaks
            .iter()
            .map(|p| libm::fabs(p.mean - ladder_mean(self.x0, self.spacing, self.sat, p.index)))
            .fold(0.0, f64::max)
    }
}

#[inline]
pub(crate) fn linear_variance_at(i: usize, elec: f64, extra: f64, mult: f64) -> f64 {
    let extra = if i > 0 { extra } else { 0.0 };
    elec + extra + i as f64 * mult
}
