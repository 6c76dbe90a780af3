//! Stochastic solutions rebuilt from particle flows: the pushforward
//! density of the mean-field flow, the composition solution of the
//! Lagrangian-averaged flow, and the shifted representation of the entropy
//! solution.

use std::io::Write;

use crate::error::{Error, Result};
use crate::filippov::filippov_solve;
use crate::model::{FluxModel, Grid1D, InitialData, SpaceTimeField, TestFunction};
use crate::sde::{invert_sorted, ParticleEnsemble};

/// Pushforward of `u_in` by a particle map at one time.
///
/// Each carrier holds the mass of the labels it represents; merged
/// particles share one carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySample {
    pub time: f64,
    /// Index of the first particle represented by each carrier.
    pub particle_ids: Vec<usize>,
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
    pub masses: Vec<f64>,
    pub total_mass: f64,
}

/// Trapezoid weights of a sorted label sequence.
fn label_weights(labels: &[f64]) -> Vec<f64> {
    let n = labels.len();
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|p| {
            let lo = labels[p.saturating_sub(1)];
            let hi = labels[(p + 1).min(n - 1)];
            0.5 * (hi - lo)
        })
        .collect()
}

/// Average of `u_in` over the trapezoid cell of each label.
fn label_values(u_in: &InitialData, labels: &[f64]) -> Vec<f64> {
    let n = labels.len();
    if n == 1 {
        return vec![u_in.eval(labels[0])];
    }
    (0..n)
        .map(|p| {
            let lo = if p == 0 { labels[0] } else { 0.5 * (labels[p - 1] + labels[p]) };
            let hi = if p == n - 1 { labels[n - 1] } else { 0.5 * (labels[p] + labels[p + 1]) };
            u_in.cell_average(lo, hi)
        })
        .collect()
}

/// Dual cell `[left, right]` of each point of a non-decreasing sequence;
/// end cells are mirrored.
fn dual_cells(xs: &[f64]) -> Vec<(f64, f64)> {
    let n = xs.len();
    if n == 1 {
        return vec![(xs[0], xs[0])];
    }
    (0..n)
        .map(|p| {
            let left = if p == 0 {
                xs[0] - 0.5 * (xs[1] - xs[0])
            } else {
                0.5 * (xs[p - 1] + xs[p])
            };
            let right = if p == n - 1 {
                xs[n - 1] + 0.5 * (xs[n - 1] - xs[n - 2])
            } else {
                0.5 * (xs[p] + xs[p + 1])
            };
            (left, right)
        })
        .collect()
}

/// `Σ_p m_p θ(X_p) |cell_p ∩ [a, b]| / |cell_p|`.
fn windowed_sum(positions: &[f64], masses: &[f64], theta: Option<TestFunction>, a: f64, b: f64) -> f64 {
    let cells = dual_cells(positions);
    positions
        .iter()
        .zip(masses)
        .zip(cells)
        .map(|((&x, &m), (lo, hi))| {
            let frac = if hi > lo {
                ((hi.min(b) - lo.max(a)) / (hi - lo)).clamp(0.0, 1.0)
            } else if (a..=b).contains(&x) {
                1.0
            } else {
                0.0
            };
            m * theta.map_or(1.0, |th| th.eval(x)) * frac
        })
        .sum()
}

impl DensitySample {
    pub fn n_carriers(&self) -> usize {
        self.positions.len()
    }

    /// `∫_a^b θ u dx` with carrier masses split over their dual cells.
    pub fn window_integral(&self, theta: TestFunction, a: f64, b: f64) -> f64 {
        windowed_sum(&self.positions, &self.masses, Some(theta), a, b)
    }

    /// Mass inside `[a, b]`.
    pub fn window_mass(&self, a: f64, b: f64) -> f64 {
        windowed_sum(&self.positions, &self.masses, None, a, b)
    }

    /// `Σ_p θ(X_p) m_p` over all carriers.
    pub fn weak_form(&self, theta: TestFunction) -> f64 {
        self.positions
            .iter()
            .zip(&self.masses)
            .map(|(&x, &m)| theta.eval(x) * m)
            .sum()
    }

    pub fn resampled(&self, grid: &Grid1D) -> Vec<f64> {
        resample_to_grid(self, grid)
    }

    pub fn write_carriers_csv<W: Write>(&self, mut out: W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(out, "t,particle_id,position,value")?;
        }
        for ((id, x), v) in self.particle_ids.iter().zip(&self.positions).zip(&self.values) {
            writeln!(out, "{},{id},{x},{v}", self.time)?;
        }
        Ok(())
    }
}

/// Density of `(X_t)_# u_in` at recorded time `j` from particle spacing
/// ratios.
///
/// With noise the map must be strictly increasing. Without noise
/// coincident particles are merged: their masses add and the displayed
/// density divides by at least a tenth of the label spacing.
pub fn pushforward_density(
    u_in: &InitialData,
    ensemble: &ParticleEnsemble,
    j: usize,
) -> Result<DensitySample> {
    let labels = ensemble.initial_positions();
    let xs = ensemble.positions(j);
    let time = ensemble.times()[j];
    let n = labels.len();
    let weights = label_weights(labels);
    let label_value = label_values(u_in, labels);
    let label_mass: Vec<f64> = label_value.iter().zip(&weights).map(|(v, w)| v * w).collect();

    if n == 1 {
        return Ok(DensitySample {
            time,
            particle_ids: vec![0],
            positions: xs.to_vec(),
            values: label_value.clone(),
            masses: label_mass.clone(),
            total_mass: label_mass[0],
        });
    }

    let strict = xs.windows(2).all(|w| w[1] > w[0]);
    if strict {
        let values: Vec<f64> = (0..n)
            .map(|p| {
                let (a, b) = (p.saturating_sub(1), (p + 1).min(n - 1));
                label_value[p] * (labels[b] - labels[a]) / (xs[b] - xs[a])
            })
            .collect();
        let total_mass = (0..n)
            .map(|p| {
                let (a, b) = (p.saturating_sub(1), (p + 1).min(n - 1));
                values[p] * 0.5 * (xs[b] - xs[a])
            })
            .sum();
        return Ok(DensitySample {
            time,
            particle_ids: (0..n).collect(),
            positions: xs.to_vec(),
            values,
            masses: label_mass,
            total_mass,
        });
    }

    if ensemble.epsilon() > 0.0 || ensemble.first_decrease(j).is_some() {
        let p = xs.windows(2).position(|w| w[1] <= w[0]).unwrap_or(0);
        return Err(Error::Monotonicity {
            time_index: j,
            left: p,
            right: p + 1,
        });
    }

    let mut ids = Vec::new();
    let mut positions = Vec::new();
    let mut masses = Vec::new();
    for p in 0..n {
        if positions.last() == Some(&xs[p]) {
            *masses.last_mut().expect("non-empty") += label_mass[p];
        } else {
            ids.push(p);
            positions.push(xs[p]);
            masses.push(label_mass[p]);
        }
    }
    let floor = 0.1 * (labels[n - 1] - labels[0]) / (n - 1) as f64;
    let cells = dual_cells(&positions);
    let values = masses
        .iter()
        .zip(&cells)
        .map(|(m, (lo, hi))| m / (hi - lo).max(floor))
        .collect();
    let total_mass = masses.iter().sum();
    Ok(DensitySample {
        time,
        particle_ids: ids,
        positions,
        values,
        masses,
        total_mass,
    })
}

/// Piecewise-linear interpolation of carrier values onto `grid`, constant
/// outside the carrier hull.
pub fn resample_to_grid(sample: &DensitySample, grid: &Grid1D) -> Vec<f64> {
    let xs = &sample.positions;
    let vs = &sample.values;
    let n = xs.len();
    let cells = dual_cells(xs);
    let (lo, hi) = (cells[0].0, cells[n - 1].1);
    let h = 0.5 * grid.dx();
    let nodes = grid.nodes();
    let (first, last) = (nodes[0], nodes[nodes.len() - 1]);
    nodes
        .iter()
        .map(|&x| {
            let (a, b) = ((x - h).max(first), (x + h).min(last));
            let outside = (lo.min(b) - a).max(0.0) * vs[0] + (b - hi.max(a)).max(0.0) * vs[n - 1];
            (sample.window_mass(a, b) + outside) / (b - a)
        })
        .collect()
}

/// `v(x_i) = u_in(Y_0(x_i))`, the initial datum evaluated at the backward
/// label of every grid node.
pub fn compose_solution(
    u_in: &InitialData,
    ensemble_y: &ParticleEnsemble,
    j: usize,
    grid: &Grid1D,
) -> Result<Vec<f64>> {
    if let Some(p) = ensemble_y.first_decrease(j) {
        return Err(Error::Monotonicity {
            time_index: j,
            left: p,
            right: p + 1,
        });
    }
    let xs = ensemble_y.positions(j);
    let labels = ensemble_y.initial_positions();
    Ok(grid
        .nodes()
        .iter()
        .map(|&x| u_in.eval(invert_sorted(xs, labels, x)))
        .collect())
}

/// `∫_{-L}^{L} θ u(t)` through `u(t) = k + (X^k_t)_#(u_in − k)`, where `X^k`
/// follows the Filippov flow of `a_k(u, k)` started from the nodes of
/// `labels` at time zero.
#[allow(clippy::too_many_arguments)]
pub fn representation_k(
    u_in: &InitialData,
    flux: &FluxModel,
    k: f64,
    entropy: &SpaceTimeField,
    t: f64,
    theta: TestFunction,
    labels: &[f64],
    dt: f64,
) -> Result<f64> {
    let half = entropy.grid().half_length();
    let background = k * theta.integral(-half, half);
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("representation needs t > 0, got {t}")));
    }
    if labels.len() < 2 {
        return Err(Error::InvalidArgument("need at least two labels".into()));
    }
    let weights = label_weights(labels);
    let mut positions = Vec::with_capacity(labels.len());
    let mut masses = Vec::with_capacity(labels.len());
    for (&x, &w) in labels.iter().zip(&weights) {
        let excess = u_in.eval(x) - k;
        let end = if excess == 0.0 {
            x
        } else {
            filippov_solve(entropy, flux, k, x, 0.0, t, dt)?.final_position()
        };
        positions.push(end);
        masses.push(excess * w);
    }
    // Filippov paths never cross, but rounding can leave equal neighbours out of order
    for p in 1..positions.len() {
        if positions[p] < positions[p - 1] {
            positions[p] = positions[p - 1];
        }
    }
    Ok(background + windowed_sum(&positions, &masses, Some(theta), -half, half))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{burgers_flux, make_grid};
    use crate::pde::{riemann_window_integral, solve_entropy_reference, solve_viscous, PdeScheme};
    use crate::sde::{evolve_flow, make_brownian, particle_margin, seed_particles};
    use proptest::prelude::*;

    fn linear_flow(labels: &[f64], map: impl Fn(f64) -> f64) -> ParticleEnsemble {
        let target: Vec<f64> = labels.iter().map(|&x| map(x)).collect();
        ParticleEnsemble::from_parts(labels.to_vec(), vec![0.0, 1.0], [labels.to_vec(), target].concat(), 0.1)
            .unwrap()
    }

    #[test]
    fn identity_and_dilation() {
        let labels = seed_particles(2.0, 41, 0.0).unwrap();
        let u = InitialData::riemann(1.0, -1.0, 0.05);
        let id = linear_flow(&labels, |x| x);
        let s = pushforward_density(&u, &id, 1).unwrap();
        for (v, x) in s.values.iter().zip(&labels) {
            let dx = labels[1] - labels[0];
            if (x - 0.05).abs() > dx {
                assert_eq!(*v, u.eval(*x));
            }
        }
        assert!((s.total_mass - (2.05 - 1.95)).abs() < 1e-12);
        let one = InitialData::constant(1.0);
        let dil = linear_flow(&labels, |x| 2.0 * x);
        let s = pushforward_density(&one, &dil, 1).unwrap();
        assert!(s.values.iter().all(|v| (v - 0.5).abs() < 1e-12));
        assert!((s.total_mass - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_particle_keeps_its_mass() {
        let e = linear_flow(&[0.0], |x| x + 0.3);
        let s = pushforward_density(&InitialData::constant(2.0), &e, 1).unwrap();
        assert_eq!(s.n_carriers(), 1);
        assert_eq!(s.total_mass, 2.0);
        assert_eq!(s.positions, vec![0.3]);
    }

    #[test]
    fn shock_piles_opposite_signs() {
        let f = burgers_flux();
        let g = make_grid(6.0, 301).unwrap();
        let u = InitialData::compressive();
        let eps = 1.0 / 3.0;
        let m = solve_viscous(&g, &f, eps, &u, 1.0, &PdeScheme::default()).unwrap();
        let labels = seed_particles(6.0, 1001, particle_margin(&f, 1.0, eps, 1.0)).unwrap();
        let b = make_brownian(1, 0, 1000, 1e-3).unwrap();
        let e = evolve_flow(&m, |v| f.drift_a(v), &labels, eps, &b, 100).unwrap();
        let s = pushforward_density(&u, &e, e.n_times() - 1).unwrap();
        let peak = s.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let trough = s.values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(peak > 1.1 && trough < -1.1, "{peak} {trough}");
        let ip = s.values.iter().position(|&v| v == peak).unwrap();
        let it = s.values.iter().position(|&v| v == trough).unwrap();
        assert!(s.positions[ip] < s.positions[it]);
        assert!(s.total_mass.abs() <= 1e-8 * 2.0 * labels[labels.len() - 1]);
    }

    #[test]
    fn merged_carriers_add_mass() {
        let labels = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let e = ParticleEnsemble::from_parts(
            labels.to_vec(),
            vec![0.0, 1.0],
            [labels.to_vec(), vec![-1.0, 0.0, 0.0, 0.0, 1.0]].concat(),
            0.0,
        )
        .unwrap();
        let u = InitialData::constant(1.0);
        let s = pushforward_density(&u, &e, 1).unwrap();
        assert_eq!(s.positions, vec![-1.0, 0.0, 1.0]);
        assert_eq!(s.masses, vec![0.25, 1.5, 0.25]);
        assert_eq!(s.particle_ids, vec![0, 1, 4]);
        assert_eq!(s.total_mass, 2.0);
        let noisy = ParticleEnsemble::from_parts(
            labels.to_vec(),
            vec![0.0, 1.0],
            [labels.to_vec(), vec![-1.0, 0.0, 0.0, 0.0, 1.0]].concat(),
            0.5,
        )
        .unwrap();
        assert!(matches!(pushforward_density(&u, &noisy, 1), Err(Error::Monotonicity { .. })));
    }

    #[test]
    fn resampling_examples() {
        let g = make_grid(2.0, 5).unwrap();
        let flat = DensitySample {
            time: 0.0,
            particle_ids: vec![0, 1, 2, 3, 4, 5, 6, 7],
            positions: vec![-1.75, -1.25, -0.75, -0.25, 0.25, 0.75, 1.25, 1.75],
            values: vec![3.0; 8],
            masses: vec![1.5; 8],
            total_mass: 12.0,
        };
        for v in resample_to_grid(&flat, &g) {
            assert!((v - 3.0).abs() < 1e-14, "{v}");
        }
        let narrow = DensitySample {
            positions: vec![-0.5, 0.5],
            values: vec![2.0, 4.0],
            particle_ids: vec![0, 1],
            masses: vec![2.0, 4.0],
            ..flat
        };
        assert_eq!(resample_to_grid(&narrow, &g), vec![2.0, 2.0, 3.0, 4.0, 4.0]);
    }

    #[test]
    fn composition_examples() {
        let g = make_grid(3.0, 61).unwrap();
        let labels = seed_particles(3.0, 121, 1.0).unwrap();
        let u = InitialData::riemann(-1.0, 1.0, 0.0);
        let id = linear_flow(&labels, |x| x);
        let v = compose_solution(&u, &id, 1, &g).unwrap();
        assert_eq!(v, u.sample(&g));
        let shift = linear_flow(&labels, |x| x + 0.5);
        let v = compose_solution(&u, &shift, 1, &g).unwrap();
        for (x, vi) in g.nodes().iter().zip(&v) {
            assert_eq!(*vi, u.eval(x - 0.5), "{x}");
        }
    }

    #[test]
    fn composition_stays_two_valued_on_expansive_data() {
        let f = burgers_flux();
        let g = make_grid(6.0, 301).unwrap();
        let u = InitialData::expansive();
        let m = solve_viscous(&g, &f, 1.0 / 3.0, &u, 1.0, &PdeScheme::default()).unwrap();
        let labels = seed_particles(6.0, 1001, particle_margin(&f, 1.0, 1.0 / 3.0, 1.0)).unwrap();
        let b = make_brownian(8, 3, 1000, 1e-3).unwrap();
        let y = evolve_flow(&m, |v| v, &labels, 1.0 / 3.0, &b, 100).unwrap();
        let v = compose_solution(&u, &y, y.n_times() - 1, &g).unwrap();
        assert!(v.iter().all(|x| x.abs() <= 1.0));
        let intermediate = v.iter().filter(|x| x.abs() < 0.999).count();
        assert!(intermediate <= 1, "{intermediate}");
    }

    #[test]
    fn representation_is_independent_of_shift() {
        let f = burgers_flux();
        let g = make_grid(6.0, 301).unwrap();
        let u = InitialData::compressive();
        let entropy = solve_entropy_reference(&g, &f, &u, 1.0).unwrap();
        let labels = seed_particles(6.0, 301, 1.0).unwrap();
        let dt = 2e-3;
        for theta in TestFunction::DEFAULTS {
            let exact = riemann_window_integral(&f, (1.0, -1.0, 0.0), 1.0, theta, -6.0, 6.0).unwrap();
            let r0 = representation_k(&u, &f, 0.0, &entropy, 1.0, theta, &labels, dt).unwrap();
            let r5 = representation_k(&u, &f, 0.5, &entropy, 1.0, theta, &labels, dt).unwrap();
            let tol = 2.0 * (g.dx() + dt);
            assert!((r0 - exact).abs() < tol, "{theta}: {r0} vs {exact}");
            assert!((r0 - r5).abs() < tol, "{theta}: {r0} vs {r5}");
        }
        let flat = InitialData::constant(0.5);
        let entropy = solve_entropy_reference(&g, &f, &flat, 1.0).unwrap();
        let r = representation_k(&flat, &f, 0.5, &entropy, 1.0, TestFunction::Gauss, &labels, dt).unwrap();
        assert_eq!(r, 0.5 * TestFunction::Gauss.integral(-6.0, 6.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn mass_and_weak_form(seed in any::<u64>(), eps in 0.2f64..1.2) {
            let f = burgers_flux();
            let g = make_grid(6.0, 121).unwrap();
            let u = InitialData::compressive();
            let m = solve_viscous(&g, &f, eps, &u, 0.5, &PdeScheme::default()).unwrap();
            let labels = seed_particles(6.0, 241, particle_margin(&f, 1.0, eps, 0.5)).unwrap();
            let b = make_brownian(seed, 0, 200, 2.5e-3).unwrap();
            let e = evolve_flow(&m, |v| f.drift_a(v), &labels, eps, &b, 50).unwrap();
            let l1: f64 = labels.iter().zip(label_weights(&labels)).map(|(&x, w)| (u.eval(x) * w).abs()).sum();
            for j in 0..e.n_times() {
                let s = pushforward_density(&u, &e, j).unwrap();
                let mass: f64 = label_values(&u, &labels).iter().zip(label_weights(&labels)).map(|(v, w)| v * w).sum();
                prop_assert!((s.total_mass - mass).abs() <= 1e-8 * l1);
                let r = s.resampled(&g);
                let inside = g.dx() * (r.iter().sum::<f64>() - 0.5 * (r[0] + r[r.len() - 1]));
                let cells = dual_cells(&s.positions);
                let k = s.n_carriers() - 1;
                let tails = (cells[0].0 + 6.0) * s.values[0] + (6.0 - cells[k].1) * s.values[k];
                prop_assert!((inside - s.total_mass - tails).abs() <= 1e-9 * l1, "{inside} {} {tails}", s.total_mass);
                for theta in TestFunction::DEFAULTS {
                    let direct: f64 = label_values(&u, &labels)
                        .iter()
                        .zip(label_weights(&labels))
                        .zip(e.positions(j))
                        .map(|((v, w), &xt)| theta.eval(xt) * v * w)
                        .sum();
                    prop_assert!((s.weak_form(theta) - direct).abs() <= 1e-10 * l1);
                }
            }
        }

        #[test]
        fn composition_range_contained(seed in any::<u64>()) {
            let g = make_grid(4.0, 81).unwrap();
            let m = SpaceTimeField::from_fn(g.clone(), vec![0.0, 1.0], |x, _| (x / 0.7).tanh()).unwrap();
            let labels = seed_particles(4.0, 161, 3.0).unwrap();
            let b = make_brownian(seed, 2, 100, 0.01).unwrap();
            let y = evolve_flow(&m, |v| v, &labels, 0.5, &b, 100).unwrap();
            let u = InitialData::riemann(-0.5, 2.0, 0.3);
            let v = compose_solution(&u, &y, 1, &g).unwrap();
            prop_assert!(v.iter().all(|x| (-0.5..=2.0).contains(x)));
        }
    }
}
