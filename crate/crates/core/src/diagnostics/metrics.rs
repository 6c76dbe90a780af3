use crate::error::{Error, Result};
use crate::model::{FluxModel, Grid1D, SpaceTimeField, TestFunction};
use crate::pde::riemann_window_integral;
use crate::transport::DensitySample;

/// The limit solution `u` against which weak-* errors are measured.
#[derive(Debug, Clone, Copy)]
pub enum WeakReference<'a> {
    /// A sampled field; integrals use the trapezoid rule on its grid.
    Field(&'a SpaceTimeField),
    /// The exact solution of a Riemann problem, integrated in closed form.
    Riemann {
        flux: FluxModel,
        left: f64,
        right: f64,
        jump: f64,
    },
}

impl WeakReference<'_> {
    /// `∫_a^b θ u(·, t) dx`.
    pub fn integral(&self, theta: TestFunction, t: f64, a: f64, b: f64) -> Result<f64> {
        match *self {
            WeakReference::Field(field) => {
                let j = field.nearest_slice(t);
                if (field.times()[j] - t).abs() > 1e-9 * t.abs().max(1.0) {
                    return Err(Error::MismatchedTimes(format!(
                        "reference has no slice at t = {t} (nearest {})",
                        field.times()[j]
                    )));
                }
                let grid = field.grid();
                let vals: Vec<f64> = grid
                    .nodes()
                    .iter()
                    .zip(field.row(j))
                    .map(|(&x, &u)| if (a..=b).contains(&x) { theta.eval(x) * u } else { 0.0 })
                    .collect();
                Ok(grid.integrate(&vals))
            }
            WeakReference::Riemann {
                flux,
                left,
                right,
                jump,
            } => riemann_window_integral(&flux, (left, right, jump), t, theta, a, b),
        }
    }
}

/// `sup_t |∫_{-L}^{L} θ (u^ε_t − u_t) dx|` for one sample's time series.
pub fn weak_star_statistic(
    series: &[DensitySample],
    reference: &WeakReference,
    theta: TestFunction,
    half_length: f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in series {
        let approx = s.window_integral(theta, -half_length, half_length);
        let exact = reference.integral(theta, s.time, -half_length, half_length)?;
        worst = worst.max((approx - exact).abs());
    }
    Ok(worst)
}

/// Monte Carlo mean of `statistic^p`, without taking the root.
pub fn moment(statistics: &[f64], p: f64) -> f64 {
    if statistics.is_empty() {
        return 0.0;
    }
    statistics.iter().map(|s| s.powf(p)).sum::<f64>() / statistics.len() as f64
}

/// `E[sup_t |∫θ(u^ε − u)|^p]` over the given samples.
pub fn weak_star_error(
    samples: &[Vec<DensitySample>],
    reference: &WeakReference,
    theta: TestFunction,
    p: f64,
    half_length: f64,
) -> Result<f64> {
    let stats = samples
        .iter()
        .map(|series| weak_star_statistic(series, reference, theta, half_length))
        .collect::<Result<Vec<_>>>()?;
    Ok(moment(&stats, p))
}

/// Running per-node sums for the Monte Carlo mean and its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanAccumulator {
    count: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl MeanAccumulator {
    pub fn new(n_points: usize) -> Self {
        Self {
            count: 0,
            sum: vec![0.0; n_points],
            sum_sq: vec![0.0; n_points],
        }
    }

    pub fn push(&mut self, values: &[f64]) {
        self.count += 1;
        for ((s, q), v) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(values) {
            *s += v;
            *q += v * v;
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count.max(1) as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Sample standard deviation per node (zero for a single sample).
    pub fn std_dev(&self) -> Vec<f64> {
        let n = self.count as f64;
        if self.count < 2 {
            return vec![0.0; self.sum.len()];
        }
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, q)| ((q - s * s / n) / (n - 1.0)).max(0.0).sqrt())
            .collect()
    }

    pub fn std_error(&self) -> Vec<f64> {
        let root = (self.count.max(1) as f64).sqrt();
        self.std_dev().into_iter().map(|s| s / root).collect()
    }
}

/// Agreement of the Monte Carlo mean with the deterministic profile.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanConsistency {
    /// `‖mean − m‖₁` on the grid.
    pub l1_distance: f64,
    /// `‖standard error‖₁`, the statistical part of the distance.
    pub statistical_error: f64,
    /// Share of interior nodes with `|mean − m| ≤ standard error`.
    pub band_fraction: f64,
    pub n_samples: usize,
}

/// Compares the sample mean of grid-resampled `u^ε` with `m^ε` at the
/// final time.
pub fn mean_consistency(acc: &MeanAccumulator, m_eps: &[f64], grid: &Grid1D) -> MeanConsistency {
    let mean = acc.mean();
    let se = acc.std_error();
    let diff: Vec<f64> = mean.iter().zip(m_eps).map(|(a, b)| (a - b).abs()).collect();
    let n = grid.n_points();
    let inside = (1..n - 1).filter(|&i| diff[i] <= se[i] + 1e-12).count();
    MeanConsistency {
        l1_distance: grid.integrate(&diff),
        statistical_error: grid.integrate(&se),
        band_fraction: inside as f64 / (n - 2) as f64,
        n_samples: acc.count(),
    }
}

/// `‖a − b‖₁` by the trapezoid rule.
pub fn l1_distance(grid: &Grid1D, a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect();
    grid.integrate(&d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{burgers_flux, make_grid, InitialData};
    use crate::pde::exact_riemann_field;
    use crate::sde::{seed_particles, ParticleEnsemble};
    use crate::transport::pushforward_density;

    fn identity_series(u: &InitialData, labels: &[f64], times: &[f64]) -> Vec<DensitySample> {
        let positions = times.iter().flat_map(|_| labels.iter().copied()).collect();
        let e = ParticleEnsemble::from_parts(labels.to_vec(), times.to_vec(), positions, 0.5).unwrap();
        (0..times.len()).map(|j| pushforward_density(u, &e, j).unwrap()).collect()
    }

    #[test]
    fn identical_inputs_have_zero_error() {
        let f = burgers_flux();
        let u = InitialData::riemann(1.0, -1.0, 0.0);
        let labels = seed_particles(6.0, 1201, 0.5).unwrap();
        let series = identity_series(&u, &labels, &[0.0]);
        let reference = WeakReference::Riemann {
            flux: f,
            left: 1.0,
            right: -1.0,
            jump: 0.0,
        };
        for theta in TestFunction::DEFAULTS {
            let e = weak_star_error(&[series.clone(), series.clone()], &reference, theta, 1.0, 6.0).unwrap();
            assert!(e < 1e-3, "{theta}: {e}");
        }
    }

    #[test]
    fn odd_perturbation_invisible_to_even_theta() {
        let g = make_grid(6.0, 601).unwrap();
        let times = [0.0, 0.5];
        let base = SpaceTimeField::from_fn(g.clone(), times.to_vec(), |x, _| (-x * x).exp()).unwrap();
        let u = InitialData::analytic(|x| (-x * x).exp() + 0.3 * x * (-x * x).exp(), &g);
        let series = identity_series(&u, g.nodes(), &times);
        let e = weak_star_error(&[series], &WeakReference::Field(&base), TestFunction::Gauss, 2.0, 6.0).unwrap();
        assert!(e < 1e-8, "{e}");
    }

    #[test]
    fn field_reference_needs_matching_times() {
        let g = make_grid(2.0, 21).unwrap();
        let f = burgers_flux();
        let field = exact_riemann_field(&f, &InitialData::compressive(), &g, &[0.0, 1.0]).unwrap();
        let r = WeakReference::Field(&field);
        assert!(r.integral(TestFunction::Gauss, 1.0, -2.0, 2.0).is_ok());
        assert!(matches!(
            r.integral(TestFunction::Gauss, 0.7, -2.0, 2.0),
            Err(Error::MismatchedTimes(_))
        ));
    }

    #[test]
    fn jensen_between_moments() {
        let stats = [0.1, 0.4, 0.05, 0.3, 0.0];
        assert!(moment(&stats, 2.0) >= moment(&stats, 1.0).powi(2));
        assert_eq!(moment(&[], 1.0), 0.0);
    }

    #[test]
    fn accumulator_statistics() {
        let mut acc = MeanAccumulator::new(2);
        for v in [[1.0, 0.0], [3.0, 0.0], [5.0, 0.0]] {
            acc.push(&v);
        }
        assert_eq!(acc.mean(), vec![3.0, 0.0]);
        assert_eq!(acc.std_dev(), vec![2.0, 0.0]);
        assert!((acc.std_error()[0] - 2.0 / 3f64.sqrt()).abs() < 1e-15);
        let g = make_grid(1.0, 3).unwrap();
        let mut single = MeanAccumulator::new(3);
        single.push(&[0.0, 0.5, 1.0]);
        let mc = mean_consistency(&single, &[0.0, 0.25, 1.0], &g);
        assert!((mc.l1_distance - 0.25).abs() < 1e-15);
        assert_eq!(mc.statistical_error, 0.0);
        assert_eq!(mc.band_fraction, 0.0);
    }
}
