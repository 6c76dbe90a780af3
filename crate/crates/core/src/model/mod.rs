//! Grids, flux models, initial data, fields and run configuration.

pub mod config;
pub mod field;
pub mod flux;
pub mod grid;
pub mod initial;
pub mod test_function;

pub use config::ExperimentConfig;
pub use field::SpaceTimeField;
pub use flux::{burgers_flux, drift_a, drift_a_k, FluxKind, FluxModel};
pub use grid::{make_grid, Grid1D};
pub use initial::{InitialData, InitialKind, InitialSpec};
pub use test_function::TestFunction;
