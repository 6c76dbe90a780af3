use crate::error::{Error, Result};
use crate::model::{FluxModel, Grid1D, InitialData, SpaceTimeField, TestFunction};
use crate::quadrature;

use super::{check_horizon, fit_to_horizon, DEFAULT_MAX_SLICES};

fn require_convex(flux: &FluxModel, lo: f64, hi: f64) -> Result<()> {
    if flux.f_second_min_on(lo, hi) > 0.0 {
        Ok(())
    } else {
        Err(Error::NotConvex(flux.name()))
    }
}

/// Entropy solution of the Riemann problem with the jump at the origin.
pub fn exact_riemann(flux: &FluxModel, left: f64, right: f64, x: f64, t: f64) -> Result<f64> {
    exact_riemann_at(flux, left, right, 0.0, x, t)
}

/// Entropy solution of the Riemann problem with the jump at `jump`.
pub fn exact_riemann_at(
    flux: &FluxModel,
    left: f64,
    right: f64,
    jump: f64,
    x: f64,
    t: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Riemann solution needs t > 0, got {t}"
        )));
    }
    if left == right {
        return Ok(left);
    }
    require_convex(flux, left.min(right), left.max(right))?;
    let xi = (x - jump) / t;
    Ok(if left > right {
        let s = (flux.f(left) - flux.f(right)) / (left - right);
        if xi < s {
            left
        } else {
            right
        }
    } else if xi <= flux.f_prime(left) {
        left
    } else if xi >= flux.f_prime(right) {
        right
    } else {
        flux.f_prime_inverse(xi, left, right)
    })
}

/// Samples the exact solution for Riemann initial data on `grid` at `times`.
pub fn exact_riemann_field(
    flux: &FluxModel,
    u_in: &InitialData,
    grid: &Grid1D,
    times: &[f64],
) -> Result<SpaceTimeField> {
    let (left, right, jump) = u_in
        .as_riemann()
        .ok_or_else(|| Error::InvalidArgument("initial data is not a Riemann step".into()))?;
    let mut values = Vec::with_capacity(times.len() * grid.n_points());
    for &t in times {
        for &x in grid.nodes() {
            values.push(if t > 0.0 {
                exact_riemann_at(flux, left, right, jump, x, t)?
            } else {
                u_in.eval(x)
            });
        }
    }
    SpaceTimeField::new(grid.clone(), times.to_vec(), values)
}

/// `∫_a^b θ(x) u(x, t) dx` for the exact Riemann solution `u`.
pub fn riemann_window_integral(
    flux: &FluxModel,
    (left, right, jump): (f64, f64, f64),
    t: f64,
    theta: TestFunction,
    a: f64,
    b: f64,
) -> Result<f64> {
    let piece = |lo: f64, hi: f64, value: f64| {
        let (lo, hi) = (lo.max(a), hi.min(b));
        if hi > lo {
            value * theta.integral(lo, hi)
        } else {
            0.0
        }
    };
    if t <= 0.0 || left == right {
        return Ok(piece(f64::NEG_INFINITY, jump, left) + piece(jump, f64::INFINITY, right));
    }
    require_convex(flux, left.min(right), left.max(right))?;
    if left > right {
        let s = (flux.f(left) - flux.f(right)) / (left - right);
        let front = jump + s * t;
        return Ok(piece(f64::NEG_INFINITY, front, left) + piece(front, f64::INFINITY, right));
    }
    let head = jump + flux.f_prime(left) * t;
    let tail = jump + flux.f_prime(right) * t;
    let (lo, hi) = (head.max(a), tail.min(b));
    let fan = if hi > lo {
        quadrature::integrate(
            |x| theta.eval(x) * flux.f_prime_inverse((x - jump) / t, left, right),
            lo,
            hi,
            16,
        )
    } else {
        0.0
    };
    Ok(piece(f64::NEG_INFINITY, head, left) + fan + piece(tail, f64::INFINITY, right))
}

/// Godunov approximation of the entropy solution with an automatic step.
pub fn solve_entropy_reference(
    grid: &Grid1D,
    flux: &FluxModel,
    u_in: &InitialData,
    final_time: f64,
) -> Result<SpaceTimeField> {
    let sup = u_in.sup_norm();
    let speed = flux.max_speed_on(-sup, sup);
    if speed == 0.0 {
        check_horizon(final_time)?;
        let row = u_in.cell_sample(grid);
        let values = [row.clone(), row].concat();
        return SpaceTimeField::new(grid.clone(), vec![0.0, final_time], values);
    }
    let (n_steps, dt) = fit_to_horizon(final_time, 0.4 * grid.dx() / speed);
    let stride = n_steps.div_ceil(DEFAULT_MAX_SLICES).max(1);
    solve_entropy_reference_with_dt(grid, flux, u_in, final_time, dt, stride)
}

/// Godunov scheme with a caller-chosen step, storing every `stride`-th step.
pub fn solve_entropy_reference_with_dt(
    grid: &Grid1D,
    flux: &FluxModel,
    u_in: &InitialData,
    final_time: f64,
    dt: f64,
    stride: usize,
) -> Result<SpaceTimeField> {
    check_horizon(final_time)?;
    let sup = u_in.sup_norm();
    if !flux.is_strictly_convex_on(sup.max(f64::MIN_POSITIVE)) {
        return Err(Error::NotConvex(flux.name()));
    }
    let dx = grid.dx();
    let speed = flux.max_speed_on(-sup, sup);
    let bound = if speed > 0.0 { dx / speed } else { f64::INFINITY };
    if !(dt > 0.0) || dt > bound {
        return Err(Error::CflViolation { dt, bound });
    }
    let (n_steps, dt) = fit_to_horizon(final_time, dt);
    let stride = stride.max(1);

    let n = grid.n_points();
    let lambda = dt / dx;
    let mut u = u_in.cell_sample(grid);
    let mut next = u.clone();
    let mut fluxes = vec![0.0; n - 1];
    let mut times = vec![0.0];
    let mut values = u.clone();
    for step in 1..=n_steps {
        for (i, fl) in fluxes.iter_mut().enumerate() {
            *fl = flux.godunov_flux(u[i], u[i + 1]);
        }
        for i in 1..n - 1 {
            next[i] = u[i] - lambda * (fluxes[i] - fluxes[i - 1]);
        }
        std::mem::swap(&mut u, &mut next);
        if step % stride == 0 || step == n_steps {
            let t = if step == n_steps {
                final_time
            } else {
                step as f64 * dt
            };
            if u.iter().any(|v| !v.is_finite()) {
                return Err(Error::Instability { time: t });
            }
            times.push(t);
            values.extend_from_slice(&u);
        }
    }
    SpaceTimeField::new(grid.clone(), times, values)
}
