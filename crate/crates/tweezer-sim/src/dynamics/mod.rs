//! Spatial grids, stationary states, Bloch bands, and time-dependent
//! Schrödinger propagation with excitation and fidelity observables.

pub mod bloch;
pub mod eigen;
pub mod grid;
pub mod propagate;
pub mod tridiagonal;
pub mod wavefunction;

pub use bloch::{bloch_bands, tunneling_rate, BlochBands};
pub use eigen::{stationary_states, stationary_states_from_samples, EigenSet, EigenState};
pub use grid::Grid;
pub use propagate::{
    default_time_step, kinetic_energy, potential_energy, propagate, total_energy, Frame,
    Propagation, PropagationOptions,
};
pub use wavefunction::WaveFunction;
