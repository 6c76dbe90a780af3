//! Simulation and verification toolkit for stochastic mean-field
//! perturbations of scalar conservation laws.
//!
//! A viscous conservation law `m_t + f(m)_x = (ε²/2) m_xx` is solved on a
//! grid; its solution drives a common-noise particle flow whose pushforward
//! of the initial density reproduces `m` in the mean. The crate also
//! measures how these objects approach the inviscid entropy solution as
//! `ε → 0`.

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod filippov;
pub mod model;
pub mod pde;
pub mod quadrature;
pub mod sde;
pub mod transport;

pub use error::{Error, Result};
