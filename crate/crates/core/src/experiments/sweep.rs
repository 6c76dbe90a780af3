use crate::diagnostics::{
    l1_distance, mean_consistency, moment, oleinik_check, weak_star_statistic, ConvergenceReport, MeanAccumulator,
    MeanConsistency, PathErrorRow, ReportRow, WeakReference,
};
use crate::error::{Error, Result};
use crate::filippov::{filippov_solve, FilippovPath};
use crate::model::{ExperimentConfig, SpaceTimeField};
use crate::sde::{evolve_flow, make_brownian};
use crate::transport::pushforward_density;

use super::{entropy_on_times, MeanFieldSetup, Orchestrator};

/// Per-ensemble statistics reduced in sample order.
#[derive(Debug, Clone)]
pub struct EnsembleSummary {
    /// `sup_t |∫θ(u^ε − u)|` per test function, one entry per sample.
    pub weak_statistics: Vec<Vec<f64>>,
    /// Final-time `u^ε` on the grid.
    pub final_density: MeanAccumulator,
    /// Largest relative carrier mass defect seen.
    pub mass_defect: f64,
    /// `E[sup_t |X^ε_t(x₀) − X_t(x₀)|]` per probe.
    pub path_errors: Vec<f64>,
}

struct SampleStats {
    weak: Vec<f64>,
    final_density: Vec<f64>,
    mass_defect: f64,
    path_sup: Vec<f64>,
}

/// Limit objects an ensemble is compared against.
pub(crate) struct Limits {
    pub entropy: SpaceTimeField,
    pub paths: Vec<FilippovPath>,
}

impl Limits {
    pub(crate) fn new(config: &ExperimentConfig, probes: &[f64]) -> Result<Self> {
        let grid = config.grid()?;
        let initial = config.initial.build();
        let n = config.n_time_steps;
        let dt = config.sde_dt();
        let times: Vec<f64> = (0..=n).map(|j| if j == n { config.final_time } else { j as f64 * dt }).collect();
        let entropy = entropy_on_times(&grid, &config.flux, &initial, config.final_time, &times)?;
        let paths = probes
            .iter()
            .map(|&x0| filippov_solve(&entropy, &config.flux, 0.0, x0, 0.0, config.final_time, dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { entropy, paths })
    }

    fn weak_reference(&self, setup: &MeanFieldSetup) -> WeakReference<'_> {
        match setup.initial.as_riemann() {
            Some((left, right, jump)) => WeakReference::Riemann {
                flux: setup.flux,
                left,
                right,
                jump,
            },
            None => WeakReference::Field(&self.entropy),
        }
    }
}

impl Orchestrator {
    /// Runs `n_mc` samples of the mean-field flow and reduces the
    /// statistics the sweep needs.
    pub(crate) fn ensemble(
        &self,
        setup: &MeanFieldSetup,
        n_mc: usize,
        probes: &[f64],
        limits: &Limits,
    ) -> Result<EnsembleSummary> {
        let cfg = &setup.config;
        let thetas = &cfg.test_functions;
        let reference = limits.weak_reference(setup);
        let flux = setup.flux;
        let eps = setup.epsilon();
        let half_length = cfg.half_length;
        let stats = self.map_samples(n_mc, |index| {
            let bundle = make_brownian(cfg.seed, index, cfg.n_time_steps, cfg.sde_dt())?;
            let flow = evolve_flow(&setup.field, |v| flux.drift_a(v), &setup.labels, eps, &bundle, cfg.record_stride)?;
            let densities = (0..flow.n_times())
                .map(|j| pushforward_density(&setup.initial, &flow, j))
                .collect::<Result<Vec<_>>>()?;
            let weak = thetas
                .iter()
                .map(|&th| weak_star_statistic(&densities, &reference, th, half_length))
                .collect::<Result<Vec<_>>>()?;
            let mass_defect = densities
                .iter()
                .map(|d| {
                    let carried: f64 = d.masses.iter().sum();
                    let scale: f64 = d.masses.iter().map(|m| m.abs()).sum();
                    if scale > 0.0 { (d.total_mass - carried).abs() / scale } else { 0.0 }
                })
                .fold(0.0, f64::max);
            let final_density = densities.last().expect("at least one slice").resampled(&setup.grid);
            if probes.is_empty() {
                return Ok(SampleStats {
                    weak,
                    final_density,
                    mass_defect,
                    path_sup: Vec::new(),
                });
            }
            let probe_flow = evolve_flow(&setup.field, |v| flux.drift_a(v), probes, eps, &bundle, 1)?;
            let path_sup = limits
                .paths
                .iter()
                .enumerate()
                .map(|(p, path)| {
                    (0..probe_flow.n_times())
                        .map(|j| (probe_flow.positions(j)[p] - path.position_at(probe_flow.times()[j])).abs())
                        .fold(0.0, f64::max)
                })
                .collect();
            Ok(SampleStats {
                weak,
                final_density,
                mass_defect,
                path_sup,
            })
        })?;

        let mut weak_statistics = vec![Vec::with_capacity(n_mc); thetas.len()];
        let mut final_density = MeanAccumulator::new(setup.grid.n_points());
        let mut mass_defect = 0.0f64;
        let mut path_errors = vec![0.0; probes.len()];
        for s in &stats {
            for (acc, w) in weak_statistics.iter_mut().zip(&s.weak) {
                acc.push(*w);
            }
            final_density.push(&s.final_density);
            mass_defect = mass_defect.max(s.mass_defect);
            for (acc, e) in path_errors.iter_mut().zip(&s.path_sup) {
                *acc += e;
            }
        }
        for e in &mut path_errors {
            *e /= n_mc.max(1) as f64;
        }
        Ok(EnsembleSummary {
            weak_statistics,
            final_density,
            mass_defect,
            path_errors,
        })
    }

    /// Zero-noise sweep: one report row per `(ε, θ, p)` and one path row per
    /// `(ε, probe)`.
    pub fn run_zero_noise_sweep(&self, config: &ExperimentConfig, epsilons: &[f64]) -> Result<ConvergenceReport> {
        if epsilons.is_empty() {
            return Err(Error::InvalidArgument("sweep needs at least one epsilon".into()));
        }
        if epsilons.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
            return Err(Error::InvalidArgument(format!("sweep epsilons must be positive, got {epsilons:?}")));
        }
        if epsilons.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument(format!("sweep epsilons must be non-increasing, got {epsilons:?}")));
        }
        let limits = Limits::new(config, &config.probes)?;
        let mut report = ConvergenceReport::default();
        for &eps in epsilons {
            let cfg = ExperimentConfig {
                epsilon: eps,
                ..config.clone()
            };
            let setup = self.prepare(&cfg)?;
            let summary = self.ensemble(&setup, cfg.n_mc, &cfg.probes, &limits)?;
            let l1_mean_field = l1_distance(&setup.grid, setup.field.last_row(), limits.entropy.last_row());
            let consistency = mean_consistency(&summary.final_density, setup.field.last_row(), &setup.grid);
            let oleinik_margin = match oleinik_check(&setup.field, &setup.flux, 0.1) {
                Ok(rows) => rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
                Err(Error::NotConvex(_)) => f64::NAN,
                Err(e) => return Err(e),
            };
            for (k, &theta) in cfg.test_functions.iter().enumerate() {
                for &p in &cfg.p_moment {
                    report.rows.push(ReportRow {
                        epsilon: eps,
                        theta,
                        p,
                        weak_star_error: moment(&summary.weak_statistics[k], p),
                        l1_mean_field,
                        mean_consistency: consistency.l1_distance,
                        oleinik_margin,
                        mass_defect: summary.mass_defect,
                        n_mc: cfg.n_mc,
                    });
                }
            }
            for (&x0, &path_error) in cfg.probes.iter().zip(&summary.path_errors) {
                report.paths.push(PathErrorRow {
                    epsilon: eps,
                    x0,
                    path_error,
                });
            }
        }
        Ok(report)
    }

    /// Monte Carlo mean of `u^ε(T)` against `m^ε(T)` with `n_mc` samples.
    pub fn mean_consistency_study(&self, config: &ExperimentConfig, n_mc: usize) -> Result<(MeanConsistency, MeanAccumulator, SpaceTimeField)> {
        let setup = self.prepare(config)?;
        let limits = Limits::new(config, &[])?;
        let summary = self.ensemble(&setup, n_mc, &[], &limits)?;
        let mc = mean_consistency(&summary.final_density, setup.field.last_row(), &setup.grid);
        Ok((mc, summary.final_density, setup.field))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TestFunction;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            n_x: 121,
            n_paths: 241,
            n_time_steps: 200,
            n_mc: 6,
            half_length: 4.0,
            record_stride: 20,
            probes: vec![0.5],
            test_functions: vec![TestFunction::Gauss],
            ..ExperimentConfig::desk()
        }
    }

    #[test]
    fn report_is_thread_independent() {
        let cfg = tiny();
        let a = Orchestrator::new(Some(1)).unwrap().run_zero_noise_sweep(&cfg, &[1.0, 0.5]).unwrap();
        let b = Orchestrator::new(Some(4)).unwrap().run_zero_noise_sweep(&cfg, &[1.0, 0.5]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2 * cfg.p_moment.len());
        assert_eq!(a.paths.len(), 2);
        for r in &a.rows {
            assert!(r.mass_defect < 1e-8, "{}", r.mass_defect);
            assert_eq!(r.n_mc, 6);
        }
    }

    #[test]
    fn repeated_epsilon_gives_identical_rows() {
        let orch = Orchestrator::new(Some(2)).unwrap();
        let r = orch.run_zero_noise_sweep(&tiny(), &[0.5, 0.5]).unwrap();
        let n = r.rows.len() / 2;
        assert_eq!(r.rows[..n], r.rows[n..]);
        assert_eq!(r.paths[0].path_error, r.paths[1].path_error);
        assert_eq!(orch.pde_solves(), 2);
    }

    #[test]
    fn sweep_rejects_bad_epsilons() {
        let orch = Orchestrator::new(Some(1)).unwrap();
        assert!(orch.run_zero_noise_sweep(&tiny(), &[]).is_err());
        assert!(orch.run_zero_noise_sweep(&tiny(), &[0.5, 1.0]).is_err());
        assert!(orch.run_zero_noise_sweep(&tiny(), &[1.0, 0.0]).is_err());
    }
}
