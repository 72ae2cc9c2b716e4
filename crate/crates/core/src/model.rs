//! Parametric description of source, detector and electronics.

use core::num::NonZeroU64;

use crate::error::{Error, Result};

/// Granularity of the active area for the dead-spot saturation model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CellCount {
    /// Every detection is independent; no saturation.
    #[default]
    Infinite,
    /// Each detection disables one of this many cells for the rest of the
    /// pulse; later detections landing on a dead cell are lost.
    Finite(NonZeroU64),
}

/// Source, detector and readout parameters. Areas are in arbitrary ADC
/// units; only ratios such as the excess noise factor are physical.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorModel {
    /// Poisson mean of incident photons per pulse.
    pub mean_photon_number: f64,
    pub quantum_efficiency: f64,
    /// Mean area added by one detected photon.
    pub gain_per_photon: f64,
    /// Per-photon area variance from multiplication noise.
    pub mult_noise_var: f64,
    /// Variance of the zero-photon peak.
    pub electronic_noise_var: f64,
    /// Extra variance present whenever at least one photon fires.
    pub extra_per_photon_var: f64,
    /// Constant added by the integrator.
    pub area_offset: f64,
    /// Quadratic correction to the peak ladder, `x_d = x₀ + dΔ − d²α`.
    pub saturation_coeff: f64,
    pub dark_rate_per_gate: f64,
    pub cell_count: CellCount,
}

impl DetectorModel {
    /// Ideal detector: unit efficiency, no noise of any kind, no dark counts.
    pub fn ideal(mean_photon_number: f64, gain_per_photon: f64) -> Self {
        DetectorModel {
            mean_photon_number,
            quantum_efficiency: 1.0,
            gain_per_photon,
            mult_noise_var: 0.0,
            electronic_noise_var: 0.0,
            extra_per_photon_var: 0.0,
            area_offset: 0.0,
            saturation_coeff: 0.0,
            dark_rate_per_gate: 0.0,
            cell_count: CellCount::Infinite,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mean_photon_number", self.mean_photon_number),
            ("quantum_efficiency", self.quantum_efficiency),
            ("gain_per_photon", self.gain_per_photon),
            ("mult_noise_var", self.mult_noise_var),
            ("electronic_noise_var", self.electronic_noise_var),
            ("extra_per_photon_var", self.extra_per_photon_var),
            ("area_offset", self.area_offset),
            ("saturation_coeff", self.saturation_coeff),
            ("dark_rate_per_gate", self.dark_rate_per_gate),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        let non_negative = [
            ("mean_photon_number", self.mean_photon_number),
            ("mult_noise_var", self.mult_noise_var),
            ("electronic_noise_var", self.electronic_noise_var),
            ("extra_per_photon_var", self.extra_per_photon_var),
            ("dark_rate_per_gate", self.dark_rate_per_gate),
        ];
        for (name, value) in non_negative {
            if value < 0.0 {
                return Err(Error::Domain {
                    name,
                    value,
                    expected: ">= 0",
                });
            }
        }
        if !(0.0..=1.0).contains(&self.quantum_efficiency) {
            return Err(Error::Domain {
                name: "quantum_efficiency",
                value: self.quantum_efficiency,
                expected: "in [0, 1]",
            });
        }
        if self.gain_per_photon <= 0.0 {
            return Err(Error::Domain {
                name: "gain_per_photon",
                value: self.gain_per_photon,
                expected: "> 0",
            });
        }
        Ok(())
    }

    /// Mean detected count per pulse ignoring saturation, `ημ + dark`.
    pub fn mean_detected(&self) -> f64 {
        self.quantum_efficiency * self.mean_photon_number + self.dark_rate_per_gate
    }

    /// Mean area of pulses with exactly `d` surviving detections.
    pub fn ladder_mean(&self, d: u64) -> f64 {
        crate::mixture::ladder_mean(
            self.area_offset,
            self.gain_per_photon,
            self.saturation_coeff,
            d as usize,
        )
    }

    /// Area variance of pulses with exactly `d` surviving detections.
    pub fn ladder_variance(&self, d: u64) -> f64 {
        let extra = if d > 0 { self.extra_per_photon_var } else { 0.0 };
        self.electronic_noise_var + extra + d as f64 * self.mult_noise_var
    }
}
