//! Experiments on simulated photon-number-resolving detector spectra:
//! configuration files, CSV and JSON formats, multi-threaded simulation and
//! the `pnr-lab` command implementations.

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod parallel;
pub mod report;

pub use error::{LabError, Result};
