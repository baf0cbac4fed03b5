//! Simulation and pulse-optimization toolkit for single-atom transport,
//! merging, and collisional two-qubit gates in an optical lattice
//! manipulated by movable optical tweezers.

pub mod bandmap;
pub mod budget;
pub mod config;
pub mod controls;
pub mod dynamics;
pub mod error;
pub mod gates;
pub mod harmonic;
pub mod potentials;
pub mod scenarios;
pub mod search;
pub mod transport;
pub mod units;

pub use error::{Error, Result};
