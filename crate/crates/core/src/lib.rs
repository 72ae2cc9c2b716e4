//! Numerical core for photon-number-resolving detector studies.
//!
//! A pulse from a VLPC-type detector is reduced to a single number, its
//! integrated area. This crate models the distribution of that number
//! (a ladder of Gaussian peaks, one per detected photon count), simulates
//! it, fits measured spectra with constrained Gaussian mixtures, turns a
//! fitted mixture into photon-number decision rules, and extracts detector
//! figures of merit.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallel
//! execution and the command-line front end live in `pnr-lab`.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod discriminate;
mod error;
pub mod fit;
pub mod gauss;
pub mod histogram;
pub mod linalg;
pub mod linear;
pub mod mixture;
pub mod model;
pub mod noise;
pub mod rng;
pub mod simulate;

pub use error::{Error, Result};
pub use histogram::Histogram;
pub use mixture::{Constraint, ConstraintKind, GaussianPeak, MixtureModel};
pub use model::{CellCount, DetectorModel};
