//! Brownian increments and Euler–Maruyama particle flows with common noise.

mod brownian;
mod flow;

pub use brownian::{make_brownian, BrownianBundle};
pub(crate) use flow::{invert_sorted, SliceSampler};
pub use flow::{
    evolve_flow, interp_drift, invert_flow, particle_margin, seed_particles, FlowViolation,
    ParticleEnsemble,
};
