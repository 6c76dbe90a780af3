use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FluxModel, Grid1D, InitialData, SpaceTimeField};
use crate::quadrature::{normal_cdf, normal_cdf_integral};

use super::check_horizon;

/// Settings for the mild-solution fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuhamelOptions {
    pub n_picard: usize,
    /// Uniform time nodes including `t = 0`; `None` uses about 200 per unit time.
    pub time_nodes: Option<usize>,
    /// Stop once successive iterates differ by less than this in max norm.
    pub tolerance: f64,
    /// Kernel truncation in standard deviations.
    pub truncation: f64,
}

impl Default for DuhamelOptions {
    fn default() -> Self {
        Self {
            n_picard: 40,
            time_nodes: None,
            tolerance: 1e-11,
            truncation: 8.0,
        }
    }
}

/// Convolution weights for one kernel width, indexed by node offset.
struct KernelRow {
    lo: isize,
    /// `(∂K * g)(x_i) = Σ_j D_j grad[i - j - lo]` over cell slopes `D_j`.
    grad: Vec<f64>,
    /// Cell contributions to `(K * g)(x_i)` inside the window.
    heat: Vec<f64>,
}

impl KernelRow {
    fn new(sigma: f64, dx: f64, truncation: f64) -> Self {
        if sigma == 0.0 {
            return Self {
                lo: 0,
                grad: vec![0.5, 0.5],
                heat: vec![0.0, dx],
            };
        }
        let w = (truncation * sigma / dx).ceil() as isize + 1;
        let lo = -w;
        let mut grad = Vec::with_capacity((2 * w + 2) as usize);
        let mut heat = Vec::with_capacity((2 * w + 2) as usize);
        for n in lo..=w + 1 {
            let (a, b) = (n as f64 * dx / sigma, (n - 1) as f64 * dx / sigma);
            grad.push(normal_cdf(a) - normal_cdf(b));
            heat.push(sigma * (normal_cdf_integral(a) - normal_cdf_integral(b)));
        }
        Self { lo, grad, heat }
    }

    fn hi(&self) -> isize {
        self.lo + self.grad.len() as isize - 1
    }

    /// Adds `scale · (∂K * g)` at every node, given the cell slopes of `g`.
    fn add_gradient(&self, slopes: &[f64], scale: f64, out: &mut [f64]) {
        let cells = slopes.len() as isize;
        for (i, o) in out.iter_mut().enumerate() {
            let i = i as isize;
            let j_lo = (i - self.hi()).max(0);
            let j_hi = (i - self.lo).min(cells - 1);
            let mut s = 0.0;
            for j in j_lo..=j_hi {
                s += slopes[j as usize] * self.grad[(i - j - self.lo) as usize];
            }
            *o += scale * s;
        }
    }

    /// `(K * g)(x_i)` for nodal data `g`, extended by constants.
    fn heat(&self, g: &[f64], slopes: &[f64]) -> Vec<f64> {
        let cells = slopes.len() as isize;
        (0..g.len() as isize)
            .map(|i| {
                // cells fully left of the window contribute their whole increment
                let j_lo = (i - self.hi()).clamp(0, cells);
                let j_hi = (i - self.lo).min(cells - 1);
                let mut s = g[j_lo as usize];
                for j in j_lo..=j_hi {
                    s += slopes[j as usize] * self.heat[(i - j - self.lo) as usize];
                }
                s
            })
            .collect()
    }
}

fn slopes(values: &[f64], dx: f64) -> Vec<f64> {
    values.windows(2).map(|w| (w[1] - w[0]) / dx).collect()
}

/// Mild solution `m = K_t * u_in - ∫_0^t ∂_x K_{t-s} * f(m(s)) ds` by Picard
/// iteration with default settings and at most `n_picard` sweeps.
pub fn duhamel_solve(
    grid: &Grid1D,
    flux: &FluxModel,
    epsilon: f64,
    u_in: &InitialData,
    final_time: f64,
    n_picard: usize,
) -> Result<SpaceTimeField> {
    let opts = DuhamelOptions {
        n_picard,
        ..DuhamelOptions::default()
    };
    duhamel_solve_with(grid, flux, epsilon, u_in, final_time, &opts)
}

/// Mild solution with explicit settings.
///
/// Convolutions are exact for the piecewise-linear interpolant of the grid
/// data; the time integral uses the trapezoid rule on uniform nodes.
pub fn duhamel_solve_with(
    grid: &Grid1D,
    flux: &FluxModel,
    epsilon: f64,
    u_in: &InitialData,
    final_time: f64,
    opts: &DuhamelOptions,
) -> Result<SpaceTimeField> {
    check_horizon(final_time)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "the heat-kernel representation needs epsilon > 0, got {epsilon}"
        )));
    }
    let n_steps = opts
        .time_nodes
        .unwrap_or_else(|| (200.0 * final_time).ceil() as usize + 1)
        .max(2)
        - 1;
    let dt = final_time / n_steps as f64;
    let dx = grid.dx();
    let times: Vec<f64> = (0..=n_steps).map(|k| k as f64 * dt).collect();
    let kernels: Vec<KernelRow> = times
        .iter()
        .map(|&tau| KernelRow::new(epsilon * tau.sqrt(), dx, opts.truncation))
        .collect();

    let g0 = u_in.cell_sample(grid);
    let d0 = slopes(&g0, dx);
    let free: Vec<Vec<f64>> = kernels.par_iter().map(|k| k.heat(&g0, &d0)).collect();

    let mut current = free.clone();
    let mut previous_distance = f64::INFINITY;
    let mut growth = 0;
    for iteration in 1..=opts.n_picard {
        let flux_slopes: Vec<Vec<f64>> = current
            .iter()
            .map(|m| {
                let fm: Vec<f64> = m.iter().map(|&v| flux.f(v)).collect();
                slopes(&fm, dx)
            })
            .collect();
        let next: Vec<Vec<f64>> = (0..=n_steps)
            .into_par_iter()
            .map(|k| {
                let mut m = free[k].clone();
                if k == 0 {
                    return m;
                }
                for (q, d) in flux_slopes.iter().enumerate().take(k + 1) {
                    let w = if q == 0 || q == k { 0.5 * dt } else { dt };
                    kernels[k - q].add_gradient(d, -w, &mut m);
                }
                m
            })
            .collect();

        let distance = next
            .iter()
            .zip(&current)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        current = next;
        if !distance.is_finite() {
            return Err(Error::NonContraction {
                iteration,
                distance,
            });
        }
        if distance <= opts.tolerance {
            break;
        }
        growth = if distance > previous_distance { growth + 1 } else { 0 };
        if growth >= 3 {
            return Err(Error::NonContraction {
                iteration,
                distance,
            });
        }
        previous_distance = distance;
    }
    SpaceTimeField::new(grid.clone(), times, current.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{burgers_flux, make_grid, FluxKind};
    use crate::pde::{solve_viscous, PdeScheme};

    #[test]
    fn kernel_weights_conserve_mass() {
        let row = KernelRow::new(0.3, 0.05, 8.0);
        assert!((row.grad.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let point = KernelRow::new(0.0, 0.05, 8.0);
        assert_eq!(point.grad, vec![0.5, 0.5]);
    }

    #[test]
    fn zero_flux_is_heat_flow() {
        let g = make_grid(6.0, 241).unwrap();
        let zero = FluxModel::new(FluxKind::Linear { speed: 0.0 });
        let eps = 0.7;
        let m = duhamel_solve(&g, &zero, eps, &InitialData::compressive(), 0.5, 5).unwrap();
        let s = eps * 0.5f64.sqrt();
        for (x, v) in g.nodes().iter().zip(m.last_row()) {
            // heat flow of the ramp joining the nodes -dx, 0, dx
            let h = g.dx();
            let up = normal_cdf_integral((h - x) / s) - normal_cdf_integral((-h - x) / s);
            let exact = s * up / h - 1.0;
            assert!((v - exact).abs() < 5e-4, "{x}: {v} vs {exact}");
        }
    }

    #[test]
    fn heat_of_linear_data_is_exact() {
        let g = make_grid(3.0, 61).unwrap();
        let u = InitialData::analytic(|x| 0.5 * x.clamp(-1.0, 1.0), &g);
        let zero = FluxModel::new(FluxKind::Linear { speed: 0.0 });
        let m = duhamel_solve(&g, &zero, 0.5, &u, 0.2, 1).unwrap();
        // away from the kinks the heat flow leaves linear data unchanged
        assert!((m.last_row()[30] - 0.0).abs() < 1e-14);
        assert!((m.last_row()[0] + 0.5).abs() < 1e-14);
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = make_grid(2.0, 41).unwrap();
        let m = duhamel_solve(&g, &burgers_flux(), 1.0, &InitialData::constant(0.6), 0.2, 5)
            .unwrap();
        assert!(m.values().iter().all(|v| (v - 0.6).abs() < 1e-13));
    }

    #[test]
    fn agrees_with_finite_differences() {
        let g = make_grid(6.0, 301).unwrap();
        let f = burgers_flux();
        let u = InitialData::compressive();
        let mild = duhamel_solve(&g, &f, 1.0, &u, 0.25, 40).unwrap();
        let fd = solve_viscous(&g, &f, 1.0, &u, 0.25, &PdeScheme::default()).unwrap();
        let d: Vec<f64> = mild
            .last_row()
            .iter()
            .zip(fd.last_row())
            .map(|(a, b)| (a - b).abs())
            .collect();
        let dist = g.integrate(&d);
        assert!(dist < 0.01 * 12.0, "{dist}");
    }

    #[test]
    fn rejects_zero_noise() {
        let g = make_grid(2.0, 41).unwrap();
        assert!(duhamel_solve(&g, &burgers_flux(), 0.0, &InitialData::compressive(), 0.2, 5).is_err());
    }

    #[test]
    fn divergent_iteration_reported() {
        let g = make_grid(6.0, 121).unwrap();
        let steep = FluxModel::new(FluxKind::Cubic);
        let u = InitialData::riemann(6.0, -6.0, 0.0);
        let opts = DuhamelOptions {
            time_nodes: Some(20),
            ..DuhamelOptions::default()
        };
        let err = duhamel_solve_with(&g, &steep, 0.2, &u, 2.0, &opts).unwrap_err();
        assert!(matches!(err, Error::NonContraction { .. }), "{err}");
    }
}
