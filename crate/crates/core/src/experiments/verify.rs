use std::path::Path;

use crate::diagnostics::{
    heat_kernel_check, holder_bound_check, max_principle_check, oleinik_check, HeatKernelReport, HolderReport,
};
use crate::error::{Error, Result};
use crate::filippov::{drift_field, lemma51_check, Lemma51Report};
use crate::model::{ExperimentConfig, FluxModel, Grid1D, InitialData};
use crate::pde::{solve_viscous, PdeScheme};

use super::{entropy_on_times, write_file};

/// Fitted heat-kernel constants at two interlaced `h` lists.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernelDrift {
    pub base: HeatKernelReport,
    pub halved: HeatKernelReport,
    pub kernel_drift: f64,
    pub gradient_drift: f64,
}

/// Compares fitted constants on `h = σ 2^k`, `k = -6..=6`, with those on
/// the same list halved.
pub fn heat_kernel_drift(epsilon: f64, t: f64, beta: f64) -> Result<HeatKernelDrift> {
    let sigma = epsilon * t.sqrt();
    let hs: Vec<f64> = (-6..=6).map(|k| sigma * 2f64.powi(k)).collect();
    let half: Vec<f64> = hs.iter().map(|h| 0.5 * h).collect();
    let base = heat_kernel_check(epsilon, t, beta, &hs)?;
    let halved = heat_kernel_check(epsilon, t, beta, &half)?;
    let drift = |a: f64, b: f64| (a - b).abs() / a.max(b);
    Ok(HeatKernelDrift {
        kernel_drift: drift(base.kernel_constant(), halved.kernel_constant()),
        gradient_drift: drift(base.gradient_constant(), halved.gradient_constant()),
        base,
        halved,
    })
}

/// Fitted Hölder constant on a grid and on its refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderRefinement {
    pub coarse: HolderReport,
    pub fine: HolderReport,
    pub drift: f64,
}

pub fn holder_refinement(
    grid: &Grid1D,
    flux: &FluxModel,
    epsilon: f64,
    initial: &InitialData,
    final_time: f64,
    beta: f64,
) -> Result<HolderRefinement> {
    let scheme = PdeScheme::default();
    let coarse_field = solve_viscous(grid, flux, epsilon, initial, final_time, &scheme)?;
    let fine_field = solve_viscous(&grid.refined(), flux, epsilon, initial, final_time, &scheme)?;
    let coarse = holder_bound_check(&coarse_field, initial, flux, beta, 0.05)?;
    let fine = holder_bound_check(&fine_field, initial, flux, beta, 0.05)?;
    let (a, b) = (coarse.constant(), fine.constant());
    let drift = if a.max(b) > 0.0 { (a - b).abs() / a.max(b) } else { 0.0 };
    Ok(HolderRefinement { coarse, fine, drift })
}

/// Largest slope of the drift `a` on `[-m, m]`.
fn drift_slope(flux: &FluxModel, m: f64) -> f64 {
    let h = 1e-6 * m.max(1.0);
    (0..=200)
        .map(|i| -m + 2.0 * m * i as f64 / 200.0)
        .map(|v| (flux.drift_a(v + h) - flux.drift_a(v - h)) / (2.0 * h))
        .fold(0.0, f64::max)
}

/// Hull-distance audit of `a(m^ε)` against `a(u)` on slices `t ≥ t_min`.
///
/// The one-sided Lipschitz bound is `max a' / (t min f'')`, the radius the
/// drift range divided by that bound at the final time, and the tolerance
/// one grid cell.
pub fn lemma51_for(
    grid: &Grid1D,
    flux: &FluxModel,
    epsilon: f64,
    initial: &InitialData,
    final_time: f64,
    t_min: f64,
) -> Result<Lemma51Report> {
    let sup = initial.sup_norm();
    let curvature = flux.f_second_min_on(-sup, sup);
    if !(curvature > 0.0) {
        return Err(Error::NotConvex(format!("{} on [-{sup}, {sup}]", flux.name())));
    }
    let m = solve_viscous(grid, flux, epsilon, initial, final_time, &PdeScheme::default())?;
    let entropy = entropy_on_times(grid, flux, initial, final_time, m.times())?;
    let b_approx = drift_field(&m, flux, 0.0);
    let b_limit = drift_field(&entropy, flux, 0.0);
    let slope = drift_slope(flux, sup);
    let osl = move |t: f64| slope / (t * curvature);
    let range = b_limit.values().iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - b_limit.values().iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let radius = (range / osl(final_time)).max(grid.dx());
    lemma51_check(&b_approx, &b_limit, osl, radius, t_min, grid.dx())
}

/// One named verification and whether it held.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.outcomes.push(CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn lines(&self) -> String {
        self.outcomes
            .iter()
            .map(|o| format!("{} {}: {}\n", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail))
            .collect()
    }
}

/// Runs every analytic diagnostic on the configured problem and writes
/// `lemma51.csv` and `verify.txt` into `out_dir` when given.
pub fn verify_suite(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<VerifyReport> {
    config.validate()?;
    let grid = config.grid()?;
    let flux = config.flux;
    let initial = config.initial.build();
    let eps = config.epsilon;
    let t_end = config.final_time;
    let mut report = VerifyReport::default();

    let m = solve_viscous(&grid, &flux, eps, &initial, t_end, &PdeScheme::with_safety(config.cfl_safety))?;
    let margin = max_principle_check(&m, &initial);
    report.push("max_principle", margin <= 1e-10, format!("max|m| - |u_in| = {margin:e}"));

    match oleinik_check(&m, &flux, 0.1) {
        Ok(rows) => {
            let worst = rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
            report.push(
                "oleinik",
                worst >= -5.0 * grid.dx(),
                format!("min margin {worst:.4e} over {} slices", rows.len()),
            );
        }
        Err(Error::NotConvex(msg)) => report.push("oleinik", true, format!("skipped: {msg}")),
        Err(e) => return Err(e),
    }

    if eps > 0.0 {
        let h = holder_refinement(&grid, &flux, eps, &initial, t_end, 0.9)?;
        report.push(
            "holder",
            h.drift < 0.2,
            format!(
                "beta 0.9, constant {:.4} -> {:.4} under refinement ({:.1}%)",
                h.coarse.constant(),
                h.fine.constant(),
                100.0 * h.drift
            ),
        );

        for t in [0.1, 1.0] {
            let hk = heat_kernel_drift(eps, t, 0.5)?;
            let sigma = eps * f64::sqrt(t);
            let anchor = (2.0 / std::f64::consts::PI).sqrt() / sigma;
            let mass_err = (hk.base.mass - 1.0).abs();
            let anchor_err = (hk.base.gradient_l1 / anchor - 1.0).abs();
            let ok = mass_err <= 1e-12 && anchor_err <= 1e-8 && hk.kernel_drift < 0.2 && hk.gradient_drift < 0.2;
            report.push(
                &format!("heat_kernel(t={t})"),
                ok,
                format!(
                    "mass err {mass_err:.1e}, anchor err {anchor_err:.1e}, drift {:.1}% / {:.1}%",
                    100.0 * hk.kernel_drift,
                    100.0 * hk.gradient_drift
                ),
            );
        }

        match lemma51_for(&grid, &flux, eps, &initial, t_end, 0.1) {
            Ok(l) => {
                report.push(
                    "lemma51",
                    l.passed(),
                    format!(
                        "max ratio {:.4} over {} slices, {} one-sided Lipschitz violations",
                        l.max_ratio(),
                        l.rows.len(),
                        l.osl_violations.len()
                    ),
                );
                if let Some(dir) = out_dir {
                    write_file(dir, "lemma51.csv", |w| l.write_csv(w))?;
                }
            }
            Err(Error::NotConvex(msg)) => report.push("lemma51", true, format!("skipped: {msg}")),
            Err(e) => return Err(e),
        }
    }

    if let Some(dir) = out_dir {
        let text = report.lines();
        write_file(dir, "verify.txt", |w| std::io::Write::write_all(w, text.as_bytes()))?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{burgers_flux, make_grid};

    #[test]
    fn heat_constants_are_stable() {
        for eps in [1.0, 0.5] {
            for t in [0.1, 1.0] {
                let d = heat_kernel_drift(eps, t, 0.5).unwrap();
                assert!(d.kernel_drift < 0.2 && d.gradient_drift < 0.2, "{d:?}");
            }
        }
    }

    #[test]
    fn lemma51_holds_for_burgers_shock() {
        let g = make_grid(6.0, 301).unwrap();
        let r = lemma51_for(&g, &burgers_flux(), 1.0, &InitialData::compressive(), 1.0, 0.1).unwrap();
        assert!(r.passed(), "max ratio {}", r.max_ratio());
        assert!(!r.rows.is_empty());
    }

    #[test]
    fn desk_suite_passes() {
        let cfg = ExperimentConfig {
            epsilon: 0.5,
            ..ExperimentConfig::desk()
        };
        let dir = tempfile::tempdir().unwrap();
        let r = verify_suite(&cfg, Some(dir.path())).unwrap();
        assert!(r.passed(), "{}", r.lines());
        assert!(dir.path().join("lemma51.csv").exists());
        assert_eq!(r.lines().lines().count(), r.outcomes.len());
    }
}
