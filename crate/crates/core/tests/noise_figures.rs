//! Efficiency calibration, excess noise factor and the variance law.

mod common;

use pnr_core::fit::{fit_spectrum, FitConfig, PeakCount};
use pnr_core::noise::{
    correct_for_losses, excess_noise_factor, measured_efficiency, n_max, photon_flux, variance_law,
    variance_law_weighted, EfficiencyInput, MaxPhotonNumber, VarianceWeighting, PLANCK, SPEED_OF_LIGHT,
};
use pnr_core::simulate::{run, BinWidth, SimConfig};
use pnr_core::{ConstraintKind, GaussianPeak};
use proptest::prelude::*;

const GREEN: f64 = 543e-9;

fn input(power: f64, transmission: f64, signal: f64, dark: f64) -> EfficiencyInput {
    EfficiencyInput {
        wavelength: GREEN,
        power,
        nd_transmission: transmission,
        counts: signal + dark,
        dark_counts: dark,
        loss_factors: vec![0.93, 0.99],
    }
}

#[test]
fn photon_flux_examples() {
    assert_eq!(photon_flux(GREEN, 0.0).unwrap(), 0.0);
    let one = photon_flux(GREEN, 3.658e-19).unwrap();
    assert!((one - 1.0).abs() < 1e-3, "{one}");
    let big = photon_flux(GREEN, 1e-9).unwrap();
    assert!((big / 2.733e9 - 1.0).abs() < 1e-3, "{big}");
}

#[test]
fn efficiency_examples() {
    // Power giving exactly 20 000 photons/s after a unit-transmission filter.
    let power = 20_000.0 * PLANCK * SPEED_OF_LIGHT / GREEN;
    let e = measured_efficiency(&input(power, 1.0, 17_000.0, 400.0)).unwrap();
    assert!((e.raw - 0.85).abs() < 1e-12);
    assert!((e.intrinsic - 0.923).abs() < 1e-3, "{}", e.intrinsic);
    assert!(!e.calibration_suspect);

    let dark_only = measured_efficiency(&input(power, 1.0, 0.0, 400.0)).unwrap();
    assert_eq!(dark_only.raw, 0.0);

    assert!((correct_for_losses(0.85, &[0.93, 0.99]).unwrap() - 0.923).abs() < 1e-3);
}

#[test]
fn excess_noise_and_resolvable_photons() {
    let f = excess_noise_factor(276.0, 135.0);
    assert!((f - 1.0151).abs() < 5e-5, "{f}");
    assert_eq!(format!("{f:.3}"), "1.015");
    let n = n_max(f).unwrap().value();
    assert!((n - 66.0).abs() < 3.0, "{n}");
    assert_eq!(n_max(2.0).unwrap(), MaxPhotonNumber::Finite(1.0));
    assert!((n_max(1.2).unwrap().value() - 5.0).abs() < 1e-9);
    assert!((n_max(1.03).unwrap().value() - 33.3).abs() < 0.1);
    assert_eq!(n_max(1.0).unwrap(), MaxPhotonNumber::Unbounded);
}

#[test]
fn reference_widths_give_the_panel_regression() {
    let r = variance_law(&common::table_peaks()).unwrap();
    assert!((r.sigma_m_sq - 269.0).abs() < 1.0, "{}", r.sigma_m_sq);
    assert!((r.sigma_0_sq - 303.0).abs() < 1.5, "{}", r.sigma_0_sq);
}

#[test]
fn exact_law_is_recovered_exactly() {
    let peaks: Vec<GaussianPeak> = (0..8)
        .map(|i| GaussianPeak {
            index: i,
            mean: 450.0 + 135.0 * i as f64,
            std_dev: (112.36 + if i > 0 { 246.0 + 276.0 * i as f64 } else { 0.0 }).sqrt(),
            weight: 0.125,
        })
        .collect();
    for weighting in [VarianceWeighting::Uniform, VarianceWeighting::Precision] {
        let r = variance_law_weighted(&peaks, weighting).unwrap();
        assert!((r.sigma_m_sq - 276.0).abs() < 1e-9);
        assert!((r.sigma_0_sq - 246.0).abs() < 1e-9);
        assert!(r.regression_residual.abs() < 1e-12);
        assert!((r.enf - excess_noise_factor(276.0, 135.0)).abs() < 1e-15);
    }
}

#[test]
fn simulate_fit_regress_recovers_the_generator() {
    let model = common::table_model(3.0, None);
    let enf = excess_noise_factor(common::SIGMA_M_SQ, common::SPACING);
    for seed in [1, 2, 3] {
        let hist = run(&SimConfig {
            model: model.clone(),
            n_pulses: 100_000,
            seed,
            bin_width: BinWidth::Auto,
        })
        .unwrap()
        .histogram;
        let fit = fit_spectrum(
            &hist,
            &FitConfig::with_constraint(ConstraintKind::FreeWeightsFreeSigmas, PeakCount::Auto),
        )
        .unwrap();
        let r = variance_law_weighted(fit.model.peaks(), VarianceWeighting::Precision).unwrap();
        assert!(
            (r.sigma_m_sq / common::SIGMA_M_SQ - 1.0).abs() < 0.15,
            "seed {seed}: {}",
            r.sigma_m_sq
        );
        assert!(
            (r.sigma_0_sq / common::SIGMA_0_SQ - 1.0).abs() < 0.15,
            "seed {seed}: {}",
            r.sigma_0_sq
        );
        assert!((r.enf - enf).abs() < 0.003, "seed {seed}: {}", r.enf);
    }
}

proptest! {
    #[test]
    fn n_max_inverts_the_unit_excess(k in 1u32..10_000) {
        let n = n_max(1.0 + 1.0 / k as f64).unwrap().value();
        // `1 + 1/k` is rounded, which perturbs `1/k` by up to `k` ulps.
        prop_assert!((n / k as f64 - 1.0).abs() < 1e-15 * k as f64);
    }

    #[test]
    fn flux_is_linear_in_power(p in 0.0f64..1e-6, c in 0.0f64..1e3) {
        let a = photon_flux(GREEN, p * c).unwrap();
        let b = c * photon_flux(GREEN, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn raw_efficiency_is_a_ratio(signal in 1.0f64..1e5, dark in 0.0f64..1e3, c in 0.01f64..100.0) {
        let power = 1e-12;
        let a = measured_efficiency(&input(power, 1e-3, signal, dark)).unwrap();
        let b = measured_efficiency(&input(power * c, 1e-3, signal * c, dark * c)).unwrap();
        prop_assert!((a.raw - b.raw).abs() <= 1e-12 * a.raw.abs());
    }
}
