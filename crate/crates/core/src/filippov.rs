//! Local essential envelopes, the hull distance between drifts, and a
//! one-dimensional Filippov integrator for one-sided Lipschitz drifts.
//!
//! On sampled data the essential range over a ball is the set of node
//! values inside it, so the convex hull is the interval between their
//! minimum and maximum.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{FluxModel, Grid1D, SpaceTimeField};
use crate::sde::SliceSampler;

fn window(grid: &Grid1D, x: f64, radius: f64) -> Result<(usize, usize)> {
    let n = grid.n_points() as isize;
    let dx = grid.dx();
    let slack = 1e-9;
    let lo = (((x - radius + grid.half_length()) / dx) - slack).ceil() as isize;
    let hi = (((x + radius + grid.half_length()) / dx) + slack).floor() as isize;
    let (lo, hi) = (lo.max(0), hi.min(n - 1));
    if lo > hi || !(radius >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "no grid node within {radius} of {x}"
        )));
    }
    Ok((lo as usize, hi as usize))
}

fn row_envelope(grid: &Grid1D, row: &[f64], x: f64, radius: f64) -> Result<(f64, f64)> {
    let (lo, hi) = window(grid, x, radius)?;
    Ok(row[lo..=hi]
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v))))
}

/// `[essinf, esssup]` of `field` over `B_R(x)` at the slice nearest `t`.
pub fn local_envelope(field: &SpaceTimeField, x: f64, t: f64, radius: f64) -> Result<(f64, f64)> {
    let j = field.nearest_slice(t);
    row_envelope(field.grid(), field.row(j), x, radius)
}

pub fn local_esssup(field: &SpaceTimeField, x: f64, t: f64, radius: f64) -> Result<f64> {
    local_envelope(field, x, t, radius).map(|e| e.1)
}

pub fn local_essinf(field: &SpaceTimeField, x: f64, t: f64, radius: f64) -> Result<f64> {
    local_envelope(field, x, t, radius).map(|e| e.0)
}

#[inline]
fn distance_to_interval(v: f64, (lo, hi): (f64, f64)) -> f64 {
    (lo - v).max(v - hi).max(0.0)
}

/// `sup_x dist(b_approx(x, t), K_R[b_limit](x, t))` over the nodes of
/// `b_approx`.
pub fn d_r_distance(
    b_approx: &SpaceTimeField,
    b_limit: &SpaceTimeField,
    radius: f64,
    t: f64,
) -> Result<f64> {
    let approx = b_approx.row(b_approx.nearest_slice(t));
    d_r_distance_row(b_approx.grid(), approx, b_limit, radius, t)
}

/// Largest forward difference quotient of one sampled profile.
pub fn osl_of_row(row: &[f64], dx: f64) -> f64 {
    row.windows(2)
        .map(|w| (w[1] - w[0]) / dx)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Discrete one-sided Lipschitz seminorm at the slice nearest `t`.
pub fn osl_seminorm(field: &SpaceTimeField, t: f64) -> f64 {
    osl_of_row(field.row(field.nearest_slice(t)), field.grid().dx())
}

/// A Filippov path sampled at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct FilippovPath {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// `sup |b|` over the drift field, the path's Lipschitz constant.
    pub speed_bound: f64,
}

impl FilippovPath {
    pub fn final_position(&self) -> f64 {
        *self.positions.last().expect("paths are never empty")
    }

    /// First time the path comes within half a step's travel of `target`.
    pub fn hit_time(&self, target: f64) -> Option<f64> {
        let dt = self.times.get(1).map_or(0.0, |t1| t1 - self.times[0]);
        let tol = 0.5 * self.speed_bound * dt + 1e-12;
        self.times
            .iter()
            .zip(&self.positions)
            .find(|(_, x)| (*x - target).abs() <= tol)
            .map(|(t, _)| *t)
    }

    /// Position at time `t` by linear interpolation between steps.
    pub fn position_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.positions[0];
        }
        if k >= self.times.len() {
            return self.final_position();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        (1.0 - w) * self.positions[k - 1] + w * self.positions[k]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,x")?;
        for (t, x) in self.times.iter().zip(&self.positions) {
            writeln!(out, "{t},{x}")?;
        }
        Ok(())
    }
}

/// Drift `a_k(u(x, t), k)` sampled on the grid of an entropy solution.
pub fn drift_field(u: &SpaceTimeField, flux: &FluxModel, k: f64) -> SpaceTimeField {
    let values = u.values().iter().map(|&v| flux.drift_a_k(v, k)).collect();
    SpaceTimeField::new(u.grid().clone(), u.times().to_vec(), values).expect("same shape")
}

/// Integrates `dX/dt ∈ K[a_k(u, k)](X, t)` from `X_s = x0` to `T` by
/// explicit Euler with step at most `dt`.
///
/// The velocity is zero whenever the drift envelope over
/// `max(dx, sup|b| dt)` contains zero, and the point value otherwise.
#[allow(clippy::too_many_arguments)]
pub fn filippov_solve(
    entropy: &SpaceTimeField,
    flux: &FluxModel,
    k: f64,
    x0: f64,
    start: f64,
    end: f64,
    dt: f64,
) -> Result<FilippovPath> {
    if !(end > start) || !(dt > 0.0) || !x0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Filippov path needs start < end and dt > 0 (start {start}, end {end}, dt {dt}, x0 {x0})"
        )));
    }
    let b = drift_field(entropy, flux, k);
    let speed_bound = b.max_abs();
    let n_steps = ((end - start) / dt * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = (end - start) / n_steps as f64;
    let radius = entropy.grid().dx().max(speed_bound * h);

    let mut x = x0;
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut positions = Vec::with_capacity(n_steps + 1);
    times.push(start);
    positions.push(x);
    for step in 0..n_steps {
        let t = start + step as f64 * h;
        let j = b.nearest_slice(t);
        // the drift is constant beyond the grid
        let probe = x.clamp(-b.grid().half_length(), b.grid().half_length());
        let (lo, hi) = row_envelope(b.grid(), b.row(j), probe, radius)?;
        let v = if lo <= 0.0 && 0.0 <= hi {
            0.0
        } else {
            flux.drift_a_k(SliceSampler::new(entropy, t)?.at(x), k)
        };
        x += v * h;
        times.push(if step + 1 == n_steps { end } else { t + h });
        positions.push(x);
    }
    Ok(FilippovPath {
        times,
        positions,
        speed_bound,
    })
}

/// One row of the hull-distance bound audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma51Row {
    pub t: f64,
    pub d_r: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma51Report {
    pub rows: Vec<Lemma51Row>,
    /// Slice times where `b_approx` exceeded its one-sided Lipschitz bound.
    pub osl_violations: Vec<f64>,
    pub tolerance: f64,
}

impl Lemma51Report {
    pub fn max_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.osl_violations.is_empty() && self.rows.iter().all(|r| r.d_r <= r.bound + self.tolerance)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,d_R,bound,ratio")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.t, r.d_r, r.bound, r.ratio)?;
        }
        Ok(())
    }
}

/// Checks `d_R(b_approx; b_limit)(t) ≤ sqrt(2 L(t) ‖b_approx(t) − b_limit(t)‖₁)`
/// on every slice of `b_approx` with `t ≥ t_min`.
///
/// Slices whose one-sided Lipschitz seminorm exceeds `osl_bound(t)` by more
/// than `tolerance` are reported instead of tested.
pub fn lemma51_check<L: Fn(f64) -> f64>(
    b_approx: &SpaceTimeField,
    b_limit: &SpaceTimeField,
    osl_bound: L,
    radius: f64,
    t_min: f64,
    tolerance: f64,
) -> Result<Lemma51Report> {
    let grid = b_approx.grid();
    let mut rows = Vec::new();
    let mut osl_violations = Vec::new();
    for (j, &t) in b_approx.times().iter().enumerate() {
        if t < t_min {
            continue;
        }
        let row = b_approx.row(j);
        let lip = osl_bound(t);
        if osl_of_row(row, grid.dx()) > lip + tolerance {
            osl_violations.push(t);
            continue;
        }
        let limit = SliceSampler::new(b_limit, t)?;
        let diff: Vec<f64> = grid
            .nodes()
            .iter()
            .zip(row)
            .map(|(&x, &v)| (v - limit.at(x)).abs())
            .collect();
        let l1 = grid.integrate(&diff);
        let d_r = d_r_distance_row(grid, row, b_limit, radius, t)?;
        let bound = (2.0 * lip * l1).sqrt();
        let ratio = if bound > 0.0 {
            d_r / bound
        } else if d_r <= tolerance {
            0.0
        } else {
            f64::INFINITY
        };
        rows.push(Lemma51Row { t, d_r, bound, ratio });
    }
    Ok(Lemma51Report {
        rows,
        osl_violations,
        tolerance,
    })
}

fn d_r_distance_row(
    grid: &Grid1D,
    row: &[f64],
    b_limit: &SpaceTimeField,
    radius: f64,
    t: f64,
) -> Result<f64> {
    let limit = b_limit.row(b_limit.nearest_slice(t));
    let mut worst = 0.0f64;
    for (&x, &v) in grid.nodes().iter().zip(row) {
        worst = worst.max(distance_to_interval(v, row_envelope(b_limit.grid(), limit, x, radius)?));
    }
    Ok(worst)
}
