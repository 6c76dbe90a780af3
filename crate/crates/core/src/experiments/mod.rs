//! Monte Carlo orchestration and the named experiment suite.
//!
//! Every sample shares one deterministic PDE solve per `(ε, config)` and
//! draws its own Brownian path from `(seed, sample_index)`. Samples run on a
//! private thread pool and are reduced in index order, so outputs never
//! depend on the worker count.

mod figures;
mod manifest;
mod sweep;
mod verify;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{ExperimentConfig, FluxModel, Grid1D, InitialData, SpaceTimeField};
use crate::pde::{exact_riemann_field, solve_entropy_reference, solve_viscous, PdeScheme};
use crate::sde::{evolve_flow, make_brownian, particle_margin, seed_particles, ParticleEnsemble, SliceSampler};
use crate::transport::{compose_solution, pushforward_density, DensitySample};

pub use figures::FIGURE_EPSILONS;
pub use manifest::RunManifest;
pub use verify::{
    heat_kernel_drift, holder_refinement, lemma51_for, verify_suite, CheckOutcome, HeatKernelDrift,
    HolderRefinement, VerifyReport,
};

/// Deterministic inputs shared by every sample at one noise level.
#[derive(Debug, Clone)]
pub struct MeanFieldSetup {
    pub config: ExperimentConfig,
    pub grid: Grid1D,
    pub flux: FluxModel,
    pub initial: InitialData,
    /// The viscous mean-field solution `m^ε`.
    pub field: SpaceTimeField,
    pub labels: Vec<f64>,
}

impl MeanFieldSetup {
    pub fn epsilon(&self) -> f64 {
        self.config.epsilon
    }

    /// Times at which flows record positions.
    pub fn record_times(&self) -> Vec<f64> {
        let dt = self.config.sde_dt();
        let n = self.config.n_time_steps;
        let stride = self.config.record_stride.max(1);
        (0..=n)
            .filter(|j| j % stride == 0 || *j == n)
            .map(|j| if j == n { self.config.final_time } else { j as f64 * dt })
            .collect()
    }
}

/// One Monte Carlo sample: both flows and the solutions built from them.
#[derive(Debug, Clone)]
pub struct SampleRun {
    pub sample_index: u64,
    /// Mean-field flow driven by `a(m^ε)`.
    pub flow_x: ParticleEnsemble,
    /// Lagrangian-averaged flow driven by `m^ε`.
    pub flow_y: ParticleEnsemble,
    /// `u^ε` at every recorded time.
    pub densities: Vec<DensitySample>,
    /// `v^ε` on the grid at every recorded time.
    pub compositions: Vec<Vec<f64>>,
}

pub fn run_sample(setup: &MeanFieldSetup, sample_index: u64) -> Result<SampleRun> {
    let cfg = &setup.config;
    let bundle = make_brownian(cfg.seed, sample_index, cfg.n_time_steps, cfg.sde_dt())?;
    let flux = setup.flux;
    let eps = setup.epsilon();
    let flow_x = evolve_flow(&setup.field, |v| flux.drift_a(v), &setup.labels, eps, &bundle, cfg.record_stride)?;
    let flow_y = evolve_flow(&setup.field, |v| v, &setup.labels, eps, &bundle, cfg.record_stride)?;
    let densities = (0..flow_x.n_times())
        .map(|j| pushforward_density(&setup.initial, &flow_x, j))
        .collect::<Result<Vec<_>>>()?;
    let compositions = (0..flow_y.n_times())
        .map(|j| compose_solution(&setup.initial, &flow_y, j, &setup.grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleRun {
        sample_index,
        flow_x,
        flow_y,
        densities,
        compositions,
    })
}

/// Entropy solution sampled on `grid` at `times`: exact for Riemann data,
/// a Godunov reference interpolated in time otherwise.
pub fn entropy_on_times(
    grid: &Grid1D,
    flux: &FluxModel,
    initial: &InitialData,
    final_time: f64,
    times: &[f64],
) -> Result<SpaceTimeField> {
    if initial.as_riemann().is_some() {
        return exact_riemann_field(flux, initial, grid, times);
    }
    let reference = solve_entropy_reference(grid, flux, initial, final_time)?;
    let mut values = Vec::with_capacity(times.len() * grid.n_points());
    for &t in times {
        let s = SliceSampler::new(&reference, t)?;
        values.extend(grid.nodes().iter().map(|&x| s.at(x)));
    }
    SpaceTimeField::new(grid.clone(), times.to_vec(), values)
}

/// Owns the worker pool and counts PDE solves.
pub struct Orchestrator {
    pool: rayon::ThreadPool,
    pde_solves: AtomicUsize,
}

impl std::fmt::Debug for Orchestrator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Orchestrator")
            .field("threads", &self.pool.current_num_threads())
            .field("pde_solves", &self.pde_solves())
            .finish()
    }
}

impl Orchestrator {
    /// `threads = None` uses every available core.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            if n == 0 {
                return Err(Error::InvalidArgument("thread count must be positive".into()));
            }
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
        Ok(Self {
            pool,
            pde_solves: AtomicUsize::new(0),
        })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// Number of viscous solves performed so far.
    pub fn pde_solves(&self) -> usize {
        self.pde_solves.load(Ordering::Relaxed)
    }

    /// Solves for `m^ε` once and seeds the particle labels.
    pub fn prepare(&self, config: &ExperimentConfig) -> Result<MeanFieldSetup> {
        config.validate()?;
        let grid = config.grid()?;
        let flux = config.flux;
        let initial = config.initial.build();
        let scheme = PdeScheme::with_safety(config.cfl_safety);
        let field = solve_viscous(&grid, &flux, config.epsilon, &initial, config.final_time, &scheme)?;
        self.pde_solves.fetch_add(1, Ordering::Relaxed);
        let margin = particle_margin(&flux, initial.sup_norm(), config.epsilon, config.final_time);
        let labels = seed_particles(config.half_length, config.n_paths, margin)?;
        Ok(MeanFieldSetup {
            config: config.clone(),
            grid,
            flux,
            initial,
            field,
            labels,
        })
    }

    /// Runs `f` for samples `0..n` in parallel and returns results in index
    /// order.
    pub fn map_samples<T, F>(&self, n: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64) -> Result<T> + Sync,
    {
        self.pool
            .install(|| (0..n as u64).into_par_iter().map(&f).collect::<Result<Vec<T>>>())
    }
}

pub(crate) fn write_file<F>(dir: &Path, name: &str, body: F) -> Result<PathBuf>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut out = BufWriter::new(file);
    body(&mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            n_x: 121,
            n_paths: 121,
            n_time_steps: 200,
            n_mc: 8,
            half_length: 4.0,
            record_stride: 20,
            ..ExperimentConfig::desk()
        }
    }

    #[test]
    fn samples_are_reproducible() {
        let orch = Orchestrator::new(Some(2)).unwrap();
        let setup = orch.prepare(&tiny()).unwrap();
        let a = run_sample(&setup, 3).unwrap();
        let b = run_sample(&setup, 3).unwrap();
        assert_eq!(a.densities, b.densities);
        assert_eq!(a.compositions, b.compositions);
        let c = run_sample(&setup, 4).unwrap();
        assert_ne!(a.flow_x.final_positions(), c.flow_x.final_positions());
        assert_eq!(a.densities.len(), setup.record_times().len());
        assert_eq!(a.flow_x.times(), setup.record_times().as_slice());
        assert_eq!(orch.pde_solves(), 1);
    }

    #[test]
    fn single_particle_run_keeps_point_mass() {
        let orch = Orchestrator::new(Some(1)).unwrap();
        let setup = orch
            .prepare(&ExperimentConfig {
                n_paths: 1,
                ..tiny()
            })
            .unwrap();
        assert_eq!(setup.labels.len(), 1);
        let run = run_sample(&setup, 0).unwrap();
        let mass0 = run.densities[0].total_mass;
        for d in &run.densities {
            assert_eq!(d.total_mass, mass0);
            assert_eq!(d.n_carriers(), 1);
        }
    }

    #[test]
    fn map_samples_is_ordered() {
        let orch = Orchestrator::new(Some(3)).unwrap();
        let v = orch.map_samples(50, |i| Ok(i * 2)).unwrap();
        assert_eq!(v, (0..50).map(|i| i * 2).collect::<Vec<_>>());
        assert!(Orchestrator::new(Some(0)).is_err());
    }

    #[test]
    fn noiseless_flow_follows_filippov_paths() {
        let orch = Orchestrator::new(Some(1)).unwrap();
        let cfg = ExperimentConfig {
            epsilon: 0.0,
            n_x: 401,
            n_time_steps: 1000,
            ..tiny()
        };
        let setup = orch.prepare(&cfg).unwrap();
        let run = run_sample(&setup, 0).unwrap();
        let times: Vec<f64> = (0..=cfg.n_time_steps).map(|j| j as f64 * cfg.sde_dt()).collect();
        let entropy = entropy_on_times(&setup.grid, &setup.flux, &setup.initial, 1.0, &times).unwrap();
        let tol = 4.0 * (setup.grid.dx() + cfg.sde_dt());
        for (p, &x0) in setup.labels.iter().enumerate().step_by(10) {
            let path = crate::filippov::filippov_solve(&entropy, &setup.flux, 0.0, x0, 0.0, 1.0, cfg.sde_dt()).unwrap();
            let err = (run.flow_x.final_positions()[p] - path.final_position()).abs();
            assert!(err < tol, "x0 = {x0}: {err}");
        }
    }
}
