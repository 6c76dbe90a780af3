//! Deterministic solvers for the viscous and inviscid conservation laws.

mod duhamel;
mod riemann;
mod viscous;

pub use duhamel::{duhamel_solve, duhamel_solve_with, DuhamelOptions};
pub use riemann::{
    exact_riemann, exact_riemann_at, exact_riemann_field, riemann_window_integral,
    solve_entropy_reference, solve_entropy_reference_with_dt,
};
pub use viscous::solve_viscous;

use crate::error::{Error, Result};
use crate::model::{FluxModel, Grid1D};

/// Default cap on the number of stored time slices.
pub const DEFAULT_MAX_SLICES: usize = 2000;

/// Explicit scheme settings: upwind advection, central diffusion, forward Euler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdeScheme {
    pub cfl_safety: f64,
    /// Store every `k`-th step; `None` picks a stride keeping at most
    /// [`DEFAULT_MAX_SLICES`] slices.
    pub store_stride: Option<usize>,
    /// Largest tolerated drift of the first interior nodes away from the
    /// boundary data.
    pub boundary_tolerance: f64,
}

impl Default for PdeScheme {
    fn default() -> Self {
        Self {
            cfl_safety: 0.4,
            store_stride: None,
            boundary_tolerance: 1e-4,
        }
    }
}

impl PdeScheme {
    pub fn with_safety(cfl_safety: f64) -> Self {
        Self {
            cfl_safety,
            ..Self::default()
        }
    }

    fn stride_for(&self, n_steps: usize) -> usize {
        self.store_stride
            .unwrap_or_else(|| n_steps.div_ceil(DEFAULT_MAX_SLICES))
            .max(1)
    }
}

/// Stable explicit time step before fitting it to a horizon.
pub fn cfl_timestep(
    grid: &Grid1D,
    flux: &FluxModel,
    epsilon: f64,
    sup_norm: f64,
    cfl_safety: f64,
) -> Result<f64> {
    if !(cfl_safety > 0.0 && cfl_safety <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "cfl_safety must lie in (0, 1], got {cfl_safety}"
        )));
    }
    let dx = grid.dx();
    let speed = flux.max_speed_on(-sup_norm, sup_norm);
    let advective = if speed > 0.0 { dx / speed } else { f64::INFINITY };
    let diffusive = if epsilon > 0.0 {
        dx * dx / (epsilon * epsilon)
    } else {
        f64::INFINITY
    };
    let dt = advective.min(diffusive);
    if !dt.is_finite() {
        return Err(Error::DegenerateTimeStep);
    }
    Ok(cfl_safety * dt)
}

/// Shrinks `dt` so that a whole number of steps reaches `horizon` exactly.
pub fn fit_to_horizon(horizon: f64, dt: f64) -> (usize, f64) {
    let n = ((horizon / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    (n, horizon / n as f64)
}

fn check_horizon(final_time: f64) -> Result<()> {
    if final_time > 0.0 && final_time.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "final time must be positive, got {final_time}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{burgers_flux, make_grid, FluxKind};

    fn grid_dx_001() -> Grid1D {
        make_grid(6.0, 1201).unwrap()
    }

    #[test]
    fn cfl_examples() {
        let g = grid_dx_001();
        let f = burgers_flux();
        let dt = cfl_timestep(&g, &f, 0.0, 1.0, 0.5).unwrap();
        assert!((dt - 0.005).abs() < 1e-15);
        let dt = cfl_timestep(&g, &f, 1.0, 1.0, 0.5).unwrap();
        assert!((dt - 0.00005).abs() < 1e-15);
        let zero = FluxModel::new(FluxKind::Linear { speed: 0.0 });
        assert!(matches!(
            cfl_timestep(&g, &zero, 0.0, 1.0, 0.5),
            Err(Error::DegenerateTimeStep)
        ));
        assert!(cfl_timestep(&g, &f, 1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn horizon_fitting_rounds_down() {
        let (n, dt) = fit_to_horizon(1.0, 0.003);
        assert_eq!(n, 334);
        assert!(dt <= 0.003 && (dt * n as f64 - 1.0).abs() < 1e-14);
        assert_eq!(fit_to_horizon(1.0, 0.25).0, 4);
        assert_eq!(fit_to_horizon(0.1, 5.0).0, 1);
    }
}
