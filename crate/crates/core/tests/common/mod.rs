//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use core::num::NonZeroU64;

use pnr_core::{CellCount, DetectorModel, GaussianPeak};

/// Fitted peak centres and widths of the reference spectrum.
pub const TABLE_MEANS: [f64; 7] = [0.0, 135.0, 275.0, 416.0, 561.0, 709.0, 859.0];
pub const TABLE_STDS: [f64; 7] = [10.6, 24.8, 31.7, 35.3, 39.0, 42.2, 44.5];
/// Published error percentages for the reference spectrum.
pub const TABLE_ERRORS_PERCENT: [f64; 7] = [0.01, 1.1, 3.4, 6.1, 8.5, 10.6, 11.3];

pub const SIGMA_M_SQ: f64 = 276.0;
pub const SIGMA_0_SQ: f64 = 246.0;
pub const SIGMA_ELEC_SQ: f64 = 10.6 * 10.6;
/// Ladder parameters that reproduce `TABLE_MEANS` within one area unit.
pub const SPACING: f64 = 134.3;
pub const SAT: f64 = -1.5;

/// Reference peaks with equal weights.
pub fn table_peaks() -> Vec<GaussianPeak> {
    (0..7)
        .map(|i| GaussianPeak {
            index: i,
            mean: TABLE_MEANS[i],
            std_dev: TABLE_STDS[i],
            weight: 1.0 / 7.0,
        })
        .collect()
}

/// Detector reproducing the reference spectrum, with `mean_detected`
/// detected photons per pulse before any cell saturation.
pub fn table_model(mean_detected: f64, cells: Option<u64>) -> DetectorModel {
    DetectorModel {
        mean_photon_number: mean_detected / 0.85,
        quantum_efficiency: 0.85,
        gain_per_photon: SPACING,
        mult_noise_var: SIGMA_M_SQ,
        electronic_noise_var: SIGMA_ELEC_SQ,
        extra_per_photon_var: SIGMA_0_SQ,
        area_offset: 0.0,
        saturation_coeff: SAT,
        dark_rate_per_gate: 0.0,
        cell_count: match cells {
            None => CellCount::Infinite,
            Some(c) => CellCount::Finite(NonZeroU64::new(c).unwrap()),
        },
    }
}

/// Exact per-photon-number peaks of `model` for `d = 0..k`, equal weights.
pub fn model_peaks(model: &DetectorModel, k: usize) -> Vec<GaussianPeak> {
    (0..k)
        .map(|d| GaussianPeak {
            index: d,
            mean: model.ladder_mean(d as u64),
            std_dev: model.ladder_variance(d as u64).sqrt(),
            weight: 1.0 / k as f64,
        })
        .collect()
}
