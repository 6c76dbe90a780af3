use crate::error::{Error, Result};
use crate::model::{FluxModel, Grid1D, InitialData, SpaceTimeField};

use super::{cfl_timestep, check_horizon, fit_to_horizon, PdeScheme};

/// Solves `m_t + f(m)_x = (ε²/2) m_xx` on `[-L, L]` with Dirichlet data
/// taken from `u_in` at the endpoints.
pub fn solve_viscous(
    grid: &Grid1D,
    flux: &FluxModel,
    epsilon: f64,
    u_in: &InitialData,
    final_time: f64,
    scheme: &PdeScheme,
) -> Result<SpaceTimeField> {
    check_horizon(final_time)?;
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be >= 0, got {epsilon}"
        )));
    }
    let n = grid.n_points();
    let dx = grid.dx();
    let sup = u_in.sup_norm();
    let raw = cfl_timestep(grid, flux, epsilon, sup, scheme.cfl_safety)?;
    let (n_steps, dt) = fit_to_horizon(final_time, raw);
    let stride = scheme.stride_for(n_steps);

    let mut u = u_in.cell_sample(grid);
    let left = u[0];
    let right = u[n - 1];
    let lambda = dt / dx;
    let mu = 0.5 * epsilon * epsilon * dt / (dx * dx);

    let mut times = vec![0.0];
    let mut values = u.clone();
    let mut fluxes = vec![0.0; n - 1];
    let mut next = u.clone();

    for step in 1..=n_steps {
        for (i, fl) in fluxes.iter_mut().enumerate() {
            *fl = flux.upwind_flux(u[i], u[i + 1]);
        }
        for i in 1..n - 1 {
            next[i] = u[i] - lambda * (fluxes[i] - fluxes[i - 1])
                + mu * (u[i + 1] - 2.0 * u[i] + u[i - 1]);
        }
        std::mem::swap(&mut u, &mut next);
        let t = if step == n_steps {
            final_time
        } else {
            step as f64 * dt
        };

        if !(u[1].is_finite() && u[n / 2].is_finite() && u[n - 2].is_finite()) {
            return Err(Error::Instability { time: t });
        }
        for (side, dev) in [("left", (u[1] - left).abs()), ("right", (u[n - 2] - right).abs())] {
            if dev > scheme.boundary_tolerance {
                return Err(Error::BoundaryContamination {
                    side,
                    time: t,
                    deviation: dev,
                });
            }
        }

        if step % stride == 0 || step == n_steps {
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::Instability { time: t });
            }
            times.push(t);
            values.extend_from_slice(&u);
        }
    }
    SpaceTimeField::new(grid.clone(), times, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{burgers_flux, make_grid, FluxKind};
    use proptest::prelude::*;

    fn l1(grid: &Grid1D, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
        grid.integrate(&d)
    }

    #[test]
    fn constants_are_exact() {
        let g = make_grid(4.0, 81).unwrap();
        let m = solve_viscous(
            &g,
            &burgers_flux(),
            0.7,
            &InitialData::constant(0.3),
            0.5,
            &PdeScheme::default(),
        )
        .unwrap();
        assert!(m.values().iter().all(|v| (v - 0.3).abs() < 1e-14));
    }

    #[test]
    fn inviscid_stationary_shock() {
        let g = make_grid(6.0, 601).unwrap();
        let m = solve_viscous(
            &g,
            &burgers_flux(),
            0.0,
            &InitialData::compressive(),
            1.0,
            &PdeScheme::default(),
        )
        .unwrap();
        let u0 = InitialData::compressive().sample(&g);
        for (i, (a, b)) in m.last_row().iter().zip(&u0).enumerate() {
            if g.x(i).abs() > 3.0 * g.dx() {
                assert!((a - b).abs() < 1e-12, "x = {}", g.x(i));
            }
        }
    }

    #[test]
    fn steady_viscous_profile() {
        // m = -tanh(x / ε²) solves m m_x = (ε²/2) m_xx
        let eps: f64 = 0.5;
        let g = make_grid(6.0, 2401).unwrap();
        let m = solve_viscous(
            &g,
            &burgers_flux(),
            eps,
            &InitialData::compressive(),
            3.0,
            &PdeScheme::default(),
        )
        .unwrap();
        let err = g
            .nodes()
            .iter()
            .zip(m.last_row())
            .filter(|(x, _)| x.abs() < 5.0)
            .map(|(x, v)| (v + (x / (eps * eps)).tanh()).abs())
            .fold(0.0, f64::max);
        assert!(err < 0.02, "max error {err}");
    }

    #[test]
    fn boundary_rows_pinned_and_contamination_detected() {
        let g = make_grid(2.0, 81).unwrap();
        let u = InitialData::expansive();
        let scheme = PdeScheme::default();
        let m = solve_viscous(&g, &burgers_flux(), 0.3, &u, 0.5, &scheme).unwrap();
        for (_, row) in m.rows() {
            assert_eq!(row[0], -1.0);
            assert_eq!(row[80], 1.0);
        }
        let err = solve_viscous(&g, &burgers_flux(), 0.3, &u, 3.0, &scheme).unwrap_err();
        assert!(matches!(err, Error::BoundaryContamination { .. }), "{err}");
    }

    #[test]
    fn refinement_halves_error() {
        let f = burgers_flux();
        let u = InitialData::expansive();
        let scheme = PdeScheme::default();
        let solve = |n: usize| {
            let g = make_grid(4.0, n).unwrap();
            let m = solve_viscous(&g, &f, 0.3, &u, 1.0, &scheme).unwrap();
            (g, m.last_row().to_vec())
        };
        let (g1, a) = solve(101);
        let (g2, b) = solve(201);
        let (_, c) = solve(401);
        let b_on_1: Vec<f64> = b.iter().step_by(2).copied().collect();
        let c_on_1: Vec<f64> = c.iter().step_by(4).copied().collect();
        let coarse = l1(&g1, &a, &b_on_1);
        let fine = l1(&g1, &b_on_1, &c_on_1);
        assert!(coarse / fine >= 1.5, "{coarse} / {fine}");
        assert_eq!(g2.n_points(), 201);
    }

    #[test]
    fn heat_equation_matches_error_function() {
        let zero = FluxModel::new(FluxKind::Linear { speed: 0.0 });
        let g = make_grid(6.0, 601).unwrap();
        let eps = 0.8;
        let t = 0.5;
        let m = solve_viscous(&g, &zero, eps, &InitialData::compressive(), t, &PdeScheme::default())
            .unwrap();
        let s = eps * t.sqrt();
        let err = g
            .nodes()
            .iter()
            .zip(m.last_row())
            .map(|(x, v)| (v - (2.0 * crate::quadrature::normal_cdf(-x / s) - 1.0)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn maximum_principle_and_monotonicity(
            left in -1.5f64..1.5,
            right in -1.5f64..1.5,
            eps in 0.0f64..1.0,
        ) {
            let g = make_grid(5.0, 101).unwrap();
            let u = InitialData::riemann(left, right, 0.0);
            let scheme = PdeScheme { boundary_tolerance: f64::INFINITY, ..PdeScheme::default() };
            let m = solve_viscous(&g, &burgers_flux(), eps, &u, 0.5, &scheme).unwrap();
            prop_assert!(m.max_abs() <= u.sup_norm() + 1e-10);
            let sign = (right - left).signum();
            for (_, row) in m.rows() {
                for w in row.windows(2) {
                    prop_assert!(sign * (w[1] - w[0]) >= -1e-12);
                }
            }
        }
    }
}
