//! Differentially private heavy hitters over sliding windows.
//!
//! The crate is `no_std` with `alloc`. It contains the streaming sketches
//! (AMS, CountSketch, Misra-Gries), the sliding-window machinery (smooth
//! histograms and additive window counters), the Laplace mechanism with its
//! sensitivity bounds, the one-shot L2 and L1 heavy-hitter algorithms, the
//! continual-release L1 algorithm, and brute-force oracles used to check all
//! of them.
//!
//! Items are `u32` identifiers in `1..=n`. Every randomized structure is a
//! pure function of its inputs and a `u64` seed.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod continual;
pub mod dp;
mod error;
pub mod hash;
pub mod hh;
mod math;
pub mod oracle;
pub mod sketch;
pub mod window;

pub use error::{Error, Result};

/// Non-fatal conditions detected while deriving parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Warning {
    /// `epsilon` is below the floor at which the L2 guarantees are stated.
    EpsilonBelowFloor { epsilon: f64, floor: f64 },
    /// The accuracy constants are scaled by `kappa != 1`, so the nominal
    /// epsilon no longer holds.
    RelaxedConstants { kappa: f64 },
    /// A derived sketch is very large; an explicit shape is probably wanted.
    LargeSketch { what: &'static str, counters: u64 },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Warning::EpsilonBelowFloor { epsilon, floor } => {
                write!(f, "epsilon {epsilon} is below {floor:.4e}, where the L2 guarantees start to hold")
            }
            Warning::RelaxedConstants { kappa } => {
                write!(f, "accuracy constants scaled by kappa = {kappa}; the nominal epsilon no longer holds")
            }
            Warning::LargeSketch { what, counters } => {
                write!(f, "{what} needs {counters} counters per instance")
            }
        }
    }
}
