//! Error functionals, consistency checks and the convergence report.

mod bounds;
mod metrics;

use std::io::Write;

pub use bounds::{
    heat_kernel_check, holder_bound_check, max_principle_check, oleinik_check, HeatKernelReport, HeatKernelRow,
    HolderReport, HolderRow,
};
pub use metrics::{
    l1_distance, mean_consistency, moment, weak_star_error, weak_star_statistic, MeanAccumulator, MeanConsistency,
    WeakReference,
};

use crate::model::TestFunction;

/// One `(ε, θ, p)` row of a zero-noise sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub epsilon: f64,
    pub theta: TestFunction,
    pub p: f64,
    pub weak_star_error: f64,
    pub l1_mean_field: f64,
    pub mean_consistency: f64,
    pub oleinik_margin: f64,
    pub mass_defect: f64,
    pub n_mc: usize,
}

/// Endpoint distance between the zero-temperature limit of the Y flow and
/// the Filippov path from the same label.
#[derive(Debug, Clone, PartialEq)]
pub struct PathErrorRow {
    pub epsilon: f64,
    pub x0: f64,
    pub path_error: f64,
}

/// Everything a sweep measures, in deterministic row order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    pub paths: Vec<PathErrorRow>,
}

pub const REPORT_HEADER: &str =
    "epsilon,theta,p,weak_star_error,l1_mean_field,mean_consistency,oleinik_margin,mass_defect,n_mc";

impl ConvergenceReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{REPORT_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.epsilon,
                r.theta,
                r.p,
                r.weak_star_error,
                r.l1_mean_field,
                r.mean_consistency,
                r.oleinik_margin,
                r.mass_defect,
                r.n_mc
            )?;
        }
        Ok(())
    }

    pub fn write_paths_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "epsilon,x0,path_error")?;
        for r in &self.paths {
            writeln!(out, "{},{},{}", r.epsilon, r.x0, r.path_error)?;
        }
        Ok(())
    }

    /// Rows for one `(θ, p)` pair ordered by decreasing ε.
    pub fn series(&self, theta: TestFunction, p: f64) -> Vec<&ReportRow> {
        let mut v: Vec<&ReportRow> = self.rows.iter().filter(|r| r.theta == theta && r.p == p).collect();
        v.sort_by(|a, b| b.epsilon.total_cmp(&a.epsilon));
        v
    }

    /// Least-squares slope of `log error` against `log ε` for one series.
    pub fn observed_order(&self, theta: TestFunction, p: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .series(theta, p)
            .iter()
            .filter(|r| r.epsilon > 0.0 && r.weak_star_error > 0.0)
            .map(|r| (r.epsilon.ln(), r.weak_star_error.ln()))
            .collect();
        fit_slope(&pts)
    }

    /// Fixed-width text table for terminals.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{:>8} {:>8} {:>4} {:>12} {:>12} {:>12} {:>10} {:>10} {:>6}\n",
            "epsilon", "theta", "p", "weak*", "l1(m,u)", "mean-cons", "oleinik", "mass", "n_mc"
        );
        for r in &self.rows {
            s.push_str(&format!(
                "{:>8.4} {:>8} {:>4} {:>12.4e} {:>12.4e} {:>12.4e} {:>10.3e} {:>10.2e} {:>6}\n",
                r.epsilon,
                r.theta.name(),
                r.p,
                r.weak_star_error,
                r.l1_mean_field,
                r.mean_consistency,
                r.oleinik_margin,
                r.mass_defect,
                r.n_mc
            ));
        }
        s
    }
}

pub(crate) fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
