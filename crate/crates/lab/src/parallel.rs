//! Multi-threaded simulation. Every pulse draws from its own counter-based
//! stream, and the indexed parallel collect keeps pulse order, so the output
//! does not depend on the number of threads.

use pnr_core::simulate::{histogram_of, pulse_stream, sample_pulse, PulseRecord, SimConfig, Simulation, MAX_PULSES};
use rayon::prelude::*;

/// Same output as `pnr_core::simulate::run`, on `threads` threads
/// (0 lets rayon decide).
pub fn simulate(config: &SimConfig, threads: usize) -> pnr_core::Result<Simulation> {
    config.validate()?;
    let n = config.n_pulses;
    let mut records: Vec<PulseRecord> = Vec::new();
    records
        .try_reserve_exact(n as usize)
        .map_err(|_| pnr_core::Error::Capacity {
            requested: n,
            limit: MAX_PULSES,
        })?;
    let mut generate = || {
        records.par_extend(
            (0..n)
                .into_par_iter()
                .map(|i| sample_pulse(&config.model, &mut pulse_stream(config.seed, i))),
        )
    };
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(generate),
        // No dedicated pool available: the global one gives identical output.
        Err(_) => generate(),
    }
    let histogram = histogram_of(&records, config.bin_width.resolve(&config.model))?;
    Ok(Simulation { records, histogram })
}
