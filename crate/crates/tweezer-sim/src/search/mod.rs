//! Pulse-shape search: a deterministic downhill-simplex optimizer, drivers
//! that shape transport and merge ramps against infidelity objectives, and
//! plain-text result persistence for resumable scans.

mod persist;
mod pulses;
mod simplex;

pub use persist::{
    append_block, find_block, parse_blocks, read_blocks, render_blocks, write_blocks, RecordBlock,
};
pub use pulses::{
    optimize_bandmap, optimize_transport, MergeOptimization, ResolutionCheck,
    TransportOptimization, DEPTH_STEP, PENALTY_BASE, POSITION_STEP,
};
pub use simplex::{nelder_mead, Cost, OptimizationResult, SimplexOptions};
