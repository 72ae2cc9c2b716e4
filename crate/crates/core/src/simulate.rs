//! Monte Carlo generation of pulse areas.
//!
//! An `n`-photon pulse is the sum of `n` independent single-photon pulses.
//! Each pulse draws from its own Philox substream keyed by the seed and
//! indexed by the pulse number, so any partition of the pulse range across
//! workers reproduces the serial output exactly.

use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::histogram::Histogram;
use crate::model::{CellCount, DetectorModel};
use crate::rng::Philox;

/// Upper bound on pulses held in memory by one run.
pub const MAX_PULSES: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinWidth {
    /// One twelfth of the per-photon gain.
    Auto,
    Fixed(f64),
}

impl BinWidth {
    pub fn resolve(self, model: &DetectorModel) -> f64 {
        match self {
            BinWidth::Auto => model.gain_per_photon / 12.0,
            BinWidth::Fixed(w) => w,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub model: DetectorModel,
    pub n_pulses: u64,
    pub seed: u64,
    pub bin_width: BinWidth,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_pulses == 0 {
            return Err(Error::Domain {
                name: "n_pulses",
                value: 0.0,
                expected: ">= 1",
            });
        }
        if self.n_pulses > MAX_PULSES {
            return Err(Error::Capacity {
                requested: self.n_pulses,
                limit: MAX_PULSES,
            });
        }
        let w = self.bin_width.resolve(&self.model);
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::Domain {
                name: "bin_width",
                value: w,
                expected: "> 0",
            });
        }
        Ok(())
    }
}

/// Ground truth and observable for one gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseRecord {
    pub true_incident: u64,
    /// Detections that produced a gain pulse, dark events included.
    pub true_detected: u64,
    pub area: f64,
}

/// The substream used for pulse number `index`.
pub fn pulse_stream(seed: u64, index: u64) -> Philox {
    Philox::new(seed, index)
}

/// Draw one pulse. The model must already be validated.
///
/// With `d` surviving detections the `k`-th gain term has mean
/// `Δ − (2k−1)α`, which sums to the ladder mean `x₀ + dΔ − d²α`.
pub fn sample_pulse(model: &DetectorModel, rng: &mut Philox) -> PulseRecord {
    let incident = rng.poisson(model.mean_photon_number);
    let mut fired = 0u64;
    for _ in 0..incident {
        if rng.bernoulli(model.quantum_efficiency) {
            fired += 1;
        }
    }
    fired += rng.poisson(model.dark_rate_per_gate);

    let detected = match model.cell_count {
        CellCount::Infinite => fired,
        CellCount::Finite(cells) => {
            let cells = cells.get();
            let mut dead: Vec<u64> = Vec::new();
            for _ in 0..fired {
                let c = rng.below(cells);
                if !dead.contains(&c) {
                    dead.push(c);
                }
            }
            dead.len() as u64
        }
    };

    let mut area = model.area_offset;
    for k in 1..=detected {
        let mean = model.gain_per_photon - (2 * k - 1) as f64 * model.saturation_coeff;
        area += rng.normal(mean, model.mult_noise_var);
    }
    let noise_var = if detected > 0 {
        model.electronic_noise_var + model.extra_per_photon_var
    } else {
        model.electronic_noise_var
    };
    area += rng.normal(0.0, noise_var);

    PulseRecord {
        true_incident: incident,
        true_detected: detected,
        area,
    }
}

/// Append pulses `range` of the run seeded by `seed` to `out`.
pub fn simulate_range(model: &DetectorModel, seed: u64, range: Range<u64>, out: &mut Vec<PulseRecord>) {
    out.extend(range.map(|i| sample_pulse(model, &mut pulse_stream(seed, i))));
}

/// Records and their histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub records: Vec<PulseRecord>,
    pub histogram: Histogram,
}

/// Histogram of record areas at the configured resolution.
pub fn histogram_of(records: &[PulseRecord], width: f64) -> Result<Histogram> {
    Histogram::covering(records.iter().map(|r| r.area), width)
}

/// Run a whole simulation serially.
pub fn run(config: &SimConfig) -> Result<Simulation> {
    config.validate()?;
    let mut records = Vec::new();
    records
        .try_reserve_exact(config.n_pulses as usize)
        .map_err(|_| Error::Capacity {
            requested: config.n_pulses,
            limit: MAX_PULSES,
        })?;
    simulate_range(&config.model, config.seed, 0..config.n_pulses, &mut records);
    let histogram = histogram_of(&records, config.bin_width.resolve(&config.model))?;
    Ok(Simulation { records, histogram })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::num::NonZeroU64;

    fn model() -> DetectorModel {
        DetectorModel {
            mean_photon_number: 4.0,
            quantum_efficiency: 0.85,
            gain_per_photon: 135.0,
            mult_noise_var: 276.0,
            electronic_noise_var: 112.36,
            extra_per_photon_var: 246.0,
            area_offset: 450.0,
            saturation_coeff: 0.0,
            dark_rate_per_gate: 0.0,
            cell_count: CellCount::Infinite,
        }
    }

    #[test]
    fn noise_free_pulses_form_a_lattice() {
        let m = DetectorModel {
            area_offset: 17.0,
            ..DetectorModel::ideal(3.0, 100.0)
        };
        let mut out = Vec::new();
        simulate_range(&m, 9, 0..2000, &mut out);
        for r in &out {
            assert_eq!(r.true_detected, r.true_incident);
            assert_eq!(r.area, 17.0 + 100.0 * r.true_detected as f64);
        }
    }

    #[test]
    fn zero_light_gives_pedestal_only() {
        let m = DetectorModel {
            mean_photon_number: 0.0,
            ..model()
        };
        let mut out = Vec::new();
        simulate_range(&m, 1, 0..20_000, &mut out);
        assert!(out.iter().all(|r| r.true_detected == 0));
        let mean = out.iter().map(|r| r.area).sum::<f64>() / out.len() as f64;
        // standard error is 10.6/√20000 ≈ 0.075
        assert!((mean - 450.0).abs() < 0.4, "{mean}");
    }

    #[test]
    fn partition_does_not_change_output() {
        let m = model();
        let mut whole = Vec::new();
        simulate_range(&m, 42, 0..1000, &mut whole);
        let mut parts = Vec::new();
        simulate_range(&m, 42, 0..333, &mut parts);
        simulate_range(&m, 42, 333..1000, &mut parts);
        assert_eq!(whole, parts);
    }

    #[test]
    fn finite_cells_cap_detections() {
        let m = DetectorModel {
            mean_photon_number: 20.0,
            cell_count: CellCount::Finite(NonZeroU64::new(10).unwrap()),
            ..model()
        };
        let mut out = Vec::new();
        simulate_range(&m, 3, 0..500, &mut out);
        assert!(out.iter().all(|r| r.true_detected <= 10));
        let mean = out.iter().map(|r| r.true_detected as f64).sum::<f64>() / 500.0;
        assert!(mean < 10.0);
    }

    #[test]
    fn run_validates_and_bins() {
        let cfg = SimConfig {
            model: model(),
            n_pulses: 5000,
            seed: 1,
            bin_width: BinWidth::Auto,
        };
        let sim = run(&cfg).unwrap();
        assert_eq!(sim.records.len(), 5000);
        assert_eq!(sim.histogram.in_range(), 5000);
        let (lo, hi) = sim.histogram.bin(0);
        assert!((hi - lo - 135.0 / 12.0).abs() < 1e-9);

        let too_many = SimConfig {
            n_pulses: MAX_PULSES + 1,
            ..cfg.clone()
        };
        assert!(matches!(run(&too_many), Err(Error::Capacity { .. })));
        let none = SimConfig { n_pulses: 0, ..cfg };
        assert!(run(&none).is_err());
    }
}
