use std::io::Write;
use std::path::Path;
use std::time::Instant;

use crate::diagnostics::MeanAccumulator;
use crate::error::{Error, Result};
use crate::model::{ExperimentConfig, InitialSpec, SpaceTimeField};

use super::{create_dir, entropy_on_times, run_sample, write_file, Orchestrator, RunManifest};

/// Noise levels of the reference figure bundles.
pub const FIGURE_EPSILONS: [f64; 2] = [1.0, 1.0 / 3.0];

/// Noise levels in `epsilons` outside the reference set.
pub(crate) fn extra_epsilons(epsilons: &[f64]) -> Vec<f64> {
    epsilons
        .iter()
        .copied()
        .filter(|e| !FIGURE_EPSILONS.iter().any(|p| (p - e).abs() < 1e-12))
        .collect()
}

/// File-name tag for a noise level, e.g. `eps0333`.
pub(crate) fn eps_tag(eps: f64) -> String {
    format!("eps{:04}", (eps * 1000.0).round() as i64)
}

fn write_composition<W: Write>(out: &mut W, times: &[f64], nodes: &[f64], rows: &[Vec<f64>]) -> std::io::Result<()> {
    writeln!(out, "t,x,v_eps")?;
    for (t, row) in times.iter().zip(rows) {
        for (x, v) in nodes.iter().zip(row) {
            writeln!(out, "{t},{x},{v}")?;
        }
    }
    Ok(())
}

/// Field restricted to the slices nearest `times`.
fn on_times(field: &SpaceTimeField, times: &[f64]) -> Result<SpaceTimeField> {
    let values = times
        .iter()
        .flat_map(|&t| field.row(field.nearest_slice(t)).iter().copied())
        .collect();
    SpaceTimeField::new(field.grid().clone(), times.to_vec(), values)
}

impl Orchestrator {
    /// Emits the CSV bundle behind figure `n` into `out_dir` and returns its
    /// manifest.
    ///
    /// Figures 1 and 4 show the mean-field solution `u^ε` with the flow `X`;
    /// figures 2 and 5 the Lagrangian-averaged `v^ε` with the flow `Y`, for
    /// the compressive and expansive data respectively. Figure 3 compares the
    /// Monte Carlo mean of `u^ε` with `m^ε`.
    pub fn run_figure(
        &self,
        n: u32,
        config: &ExperimentConfig,
        epsilons: &[f64],
        out_dir: &Path,
    ) -> Result<RunManifest> {
        let start = Instant::now();
        let initial = match n {
            1..=3 => InitialSpec::Compressive,
            4 | 5 => InitialSpec::Expansive,
            other => return Err(Error::UnknownFigure(other)),
        };
        create_dir(out_dir)?;
        let base = ExperimentConfig {
            initial,
            ..config.clone()
        };
        let mut manifest = RunManifest::new(format!("figure{n}"), &base);
        if n == 3 {
            self.figure_mean(&base, out_dir, &mut manifest)?;
            manifest.extra_epsilons = extra_epsilons(&[base.epsilon]);
        } else {
            let mean_field = matches!(n, 1 | 4);
            for &eps in epsilons {
                self.figure_panel(&base, eps, mean_field, out_dir, &mut manifest)?;
            }
            manifest.extra_epsilons = extra_epsilons(epsilons);
            manifest.note("brownian", format!("seed {} sample 0", base.seed));
        }
        manifest.wall_time = start.elapsed();
        let path = manifest.write(out_dir)?;
        manifest.add("manifest", "self", path);
        Ok(manifest)
    }

    fn figure_panel(
        &self,
        base: &ExperimentConfig,
        eps: f64,
        mean_field: bool,
        dir: &Path,
        manifest: &mut RunManifest,
    ) -> Result<()> {
        let cfg = ExperimentConfig {
            epsilon: eps,
            ..base.clone()
        };
        let setup = self.prepare(&cfg)?;
        let run = run_sample(&setup, 0)?;
        let times = setup.record_times();
        let tag = eps_tag(eps);
        let m = on_times(&setup.field, &times)?;
        let entropy = entropy_on_times(&setup.grid, &setup.flux, &setup.initial, cfg.final_time, &times)?;
        let drift_values = m
            .values()
            .iter()
            .map(|&v| if mean_field { setup.flux.drift_a(v).abs() } else { v.abs() })
            .collect();
        let drift = SpaceTimeField::new(setup.grid.clone(), times.clone(), drift_values)?;
        let particle_stride = (setup.labels.len() / 60).max(1);

        let path = write_file(dir, &format!("m_{tag}.csv"), |w| m.write_csv(w))?;
        manifest.add("pde_field", &tag, path);
        let path = write_file(dir, &format!("entropy_{tag}.csv"), |w| entropy.write_csv(w))?;
        manifest.add("figure_data", &format!("entropy_{tag}"), path);
        let path = write_file(dir, &format!("drift_{tag}.csv"), |w| drift.write_csv(w))?;
        manifest.add("figure_data", &format!("drift_{tag}"), path);
        if mean_field {
            let path = write_file(dir, &format!("flow_x_{tag}.csv"), |w| run.flow_x.write_csv(w, particle_stride))?;
            manifest.add("flow_paths", &tag, path);
            let path = write_file(dir, &format!("density_{tag}.csv"), |w| {
                for (j, d) in run.densities.iter().enumerate() {
                    d.write_carriers_csv(&mut *w, j == 0)?;
                }
                Ok(())
            })?;
            manifest.add("density", &tag, path);
        } else {
            let path = write_file(dir, &format!("flow_y_{tag}.csv"), |w| run.flow_y.write_csv(w, particle_stride))?;
            manifest.add("flow_paths", &tag, path);
            let path = write_file(dir, &format!("composition_{tag}.csv"), |w| {
                write_composition(w, &times, setup.grid.nodes(), &run.compositions)
            })?;
            manifest.add("density", &tag, path);
        }
        Ok(())
    }

    fn figure_mean(&self, cfg: &ExperimentConfig, dir: &Path, manifest: &mut RunManifest) -> Result<()> {
        let (mc, acc, field) = self.mean_consistency_study(cfg, cfg.n_mc)?;
        let tag = eps_tag(cfg.epsilon);
        let path = write_file(dir, &format!("mean_{tag}.csv"), |w| write_mean(w, &acc, &field))?;
        manifest.add("figure_data", &format!("mean_{tag}"), path);
        manifest.note("mean_l1_distance", mc.l1_distance);
        manifest.note("mean_band_fraction", mc.band_fraction);
        manifest.note("n_mc", mc.n_samples);
        Ok(())
    }
}

fn write_mean<W: Write>(out: &mut W, acc: &MeanAccumulator, field: &SpaceTimeField) -> std::io::Result<()> {
    writeln!(out, "x,mean,std,m_eps")?;
    let mean = acc.mean();
    let std = acc.std_dev();
    for (((x, a), s), m) in field.grid().nodes().iter().zip(&mean).zip(&std).zip(field.last_row()) {
        writeln!(out, "{x},{a},{s},{m}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            n_x: 121,
            n_paths: 121,
            n_time_steps: 200,
            n_mc: 4,
            half_length: 6.0,
            record_stride: 50,
            ..ExperimentConfig::desk()
        }
    }

    #[test]
    fn tags_and_figure_values() {
        assert_eq!(eps_tag(1.0 / 3.0), "eps0333");
        assert_eq!(eps_tag(1.0), "eps1000");
        assert_eq!(extra_epsilons(&[1.0, 0.5, 1.0 / 3.0, 0.25]), vec![0.5, 0.25]);
    }

    #[test]
    fn every_figure_emits_its_roles() {
        let dir = tempfile::tempdir().unwrap();
        let orch = Orchestrator::new(Some(2)).unwrap();
        for n in 1..=5 {
            let sub = dir.path().join(format!("fig{n}"));
            let m = orch.run_figure(n, &tiny(), &FIGURE_EPSILONS, &sub).unwrap();
            for (_, _, p) in &m.outputs {
                assert!(std::fs::metadata(p).unwrap().len() > 0, "{}", p.display());
            }
            let roles: &[&str] = if n == 3 {
                &["figure_data"]
            } else {
                &["pde_field", "flow_paths", "density", "figure_data"]
            };
            for role in roles {
                assert!(!m.outputs_with_role(role).is_empty(), "figure {n} lacks {role}");
            }
        }
        let text = std::fs::read_to_string(dir.path().join("fig3/mean_eps1000.csv")).unwrap();
        assert_eq!(text.lines().next(), Some("x,mean,std,m_eps"));
        assert_eq!(text.lines().count(), 1 + 121);
        let comp = std::fs::read_to_string(dir.path().join("fig2/composition_eps0333.csv")).unwrap();
        assert_eq!(comp.lines().next(), Some("t,x,v_eps"));
        assert!(matches!(
            orch.run_figure(6, &tiny(), &FIGURE_EPSILONS, dir.path()),
            Err(Error::UnknownFigure(6))
        ));
    }

    #[test]
    fn figures_one_and_two_share_their_noise() {
        let orch = Orchestrator::new(Some(1)).unwrap();
        let setup = orch.prepare(&ExperimentConfig { epsilon: 1.0 / 3.0, ..tiny() }).unwrap();
        let run = run_sample(&setup, 0).unwrap();
        let stride = (setup.labels.len() / 60).max(1);
        let p = (0..setup.labels.len()).step_by(stride).next_back().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let last_position = |name: &str| -> f64 {
            let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
            text.lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap()
        };
        orch.run_figure(1, &tiny(), &[1.0 / 3.0], dir.path()).unwrap();
        orch.run_figure(2, &tiny(), &[1.0 / 3.0], dir.path()).unwrap();
        assert_eq!(last_position("flow_x_eps0333.csv"), run.flow_x.final_positions()[p]);
        assert_eq!(last_position("flow_y_eps0333.csv"), run.flow_y.final_positions()[p]);
    }
}
