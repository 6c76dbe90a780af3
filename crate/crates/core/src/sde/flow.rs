use std::io::Write;

use crate::error::{Error, Result};
use crate::model::{FluxModel, SpaceTimeField};

use super::BrownianBundle;

/// Bilinear interpolation of `field` at `(x, t)`; `x` is clamped to the grid.
pub fn interp_drift(field: &SpaceTimeField, x: f64, t: f64) -> Result<f64> {
    Ok(SliceSampler::new(field, t)?.at(x))
}

/// Spatial interpolant of a field frozen at one time.
pub(crate) struct SliceSampler<'a> {
    field: &'a SpaceTimeField,
    lower: &'a [f64],
    upper: &'a [f64],
    weight: f64,
}

impl<'a> SliceSampler<'a> {
    pub(crate) fn new(field: &'a SpaceTimeField, t: f64) -> Result<Self> {
        let (j, weight) = field.bracket(t)?;
        let upper = if j + 1 < field.n_times() { j + 1 } else { j };
        Ok(Self {
            field,
            lower: field.row(j),
            upper: field.row(upper),
            weight,
        })
    }

    #[inline]
    pub(crate) fn at(&self, x: f64) -> f64 {
        let (i, w) = self.field.grid().locate(x);
        let lo = (1.0 - w) * self.lower[i] + w * self.lower[i + 1];
        if self.weight == 0.0 {
            return lo;
        }
        let hi = (1.0 - w) * self.upper[i] + w * self.upper[i + 1];
        (1.0 - self.weight) * lo + self.weight * hi
    }
}

/// Distance particles seeded outside `[-L, L]` must cover to stay outside
/// the window: the largest drift times the horizon plus six noise
/// standard deviations.
pub fn particle_margin(flux: &FluxModel, sup_norm: f64, epsilon: f64, horizon: f64) -> f64 {
    let mean_field = (0..=64)
        .map(|i| -sup_norm + 2.0 * sup_norm * i as f64 / 64.0)
        .map(|u| flux.drift_a(u).abs())
        .fold(sup_norm, f64::max);
    mean_field * horizon + 6.0 * epsilon * horizon.sqrt()
}

/// Uniform labels with `n` of them spanning `[-L, L]`, continued with the
/// same spacing through `margin` on both sides.
pub fn seed_particles(half_length: f64, n: usize, margin: f64) -> Result<Vec<f64>> {
    if n == 0 || !(half_length > 0.0) || !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cannot seed {n} particles on [-{half_length}, {half_length}] with margin {margin}"
        )));
    }
    if n == 1 {
        return Ok(vec![0.0]);
    }
    let spacing = 2.0 * half_length / (n - 1) as f64;
    let extra = (margin / spacing).ceil() as i64;
    Ok((-extra..(n as i64 + extra))
        .map(|k| -half_length + k as f64 * spacing)
        .collect())
}

/// A pair of neighbouring particles found out of order after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowViolation {
    pub step: usize,
    pub left: usize,
}

/// Forward flow sampled at the recorded times.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    initial: Vec<f64>,
    times: Vec<f64>,
    positions: Vec<f64>,
    epsilon: f64,
    violations: Vec<FlowViolation>,
}

const MAX_RECORDED_VIOLATIONS: usize = 64;

impl ParticleEnsemble {
    /// Assembles an ensemble from labels and time-major positions.
    pub fn from_parts(
        initial: Vec<f64>,
        times: Vec<f64>,
        positions: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self> {
        if initial.is_empty() || times.is_empty() || positions.len() != initial.len() * times.len() {
            return Err(Error::InvalidArgument(format!(
                "{} positions do not fill {} particles at {} times",
                positions.len(),
                initial.len(),
                times.len()
            )));
        }
        Ok(Self {
            initial,
            times,
            positions,
            epsilon,
            violations: Vec::new(),
        })
    }

    pub fn initial_positions(&self) -> &[f64] {
        &self.initial
    }

    pub fn n_particles(&self) -> usize {
        self.initial.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn positions(&self, j: usize) -> &[f64] {
        let n = self.initial.len();
        &self.positions[j * n..(j + 1) * n]
    }

    pub fn final_positions(&self) -> &[f64] {
        self.positions(self.times.len() - 1)
    }

    /// Ordering violations seen during integration (at most 64 are kept).
    pub fn violations(&self) -> &[FlowViolation] {
        &self.violations
    }

    pub fn is_monotone(&self) -> bool {
        self.violations.is_empty()
    }

    /// First index `p` with `X_j(x_{p+1}) < X_j(x_p)`, if any.
    pub fn first_decrease(&self, j: usize) -> Option<usize> {
        self.positions(j).windows(2).position(|w| w[1] < w[0])
    }

    /// Writes `t,particle_id,position` for every `stride`-th particle.
    pub fn write_csv<W: Write>(&self, mut out: W, stride: usize) -> std::io::Result<()> {
        writeln!(out, "t,particle_id,position")?;
        for (j, &t) in self.times.iter().enumerate() {
            for (p, x) in self.positions(j).iter().enumerate().step_by(stride.max(1)) {
                writeln!(out, "{t},{p},{x}")?;
            }
        }
        Ok(())
    }
}

/// Pool-adjacent-violators: replaces decreasing runs by their mean.
fn merge_collisions(x: &mut [f64]) {
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(x.len());
    for &v in x.iter() {
        let mut sum = v;
        let mut count = 1;
        while let Some(&(s, c)) = blocks.last() {
            if s / c as f64 > sum / count as f64 {
                sum += s;
                count += c;
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push((sum, count));
    }
    let mut k = 0;
    for (s, c) in blocks {
        let mean = s / c as f64;
        x[k..k + c].fill(mean);
        k += c;
    }
}

/// Euler–Maruyama integration of `dX = g(m(X, t)) dt + ε dW` for all
/// particles, sharing one Brownian increment per step.
///
/// With `ε = 0` colliding particles are merged; with `ε > 0` ordering
/// violations are only recorded.
pub fn evolve_flow<G>(
    drift_field: &SpaceTimeField,
    drift_transform: G,
    initial: &[f64],
    epsilon: f64,
    bundle: &BrownianBundle,
    record_stride: usize,
) -> Result<ParticleEnsemble>
where
    G: Fn(f64) -> f64,
{
    let horizon = drift_field.final_time();
    if (bundle.horizon() - horizon).abs() > 1e-9 * horizon.max(1.0) || drift_field.times()[0] != 0.0 {
        return Err(Error::MismatchedTimes(format!(
            "Brownian horizon {} vs drift field on [{}, {horizon}]",
            bundle.horizon(),
            drift_field.times()[0]
        )));
    }
    if initial.is_empty() {
        return Err(Error::InvalidArgument("no particles to evolve".into()));
    }
    let stride = record_stride.max(1);
    let n_steps = bundle.n_steps();
    let dt = bundle.dt();
    let mut x = initial.to_vec();
    let mut times = vec![0.0];
    let mut positions = x.clone();
    let mut violations = Vec::new();

    for (step, &dw) in bundle.increments().iter().enumerate() {
        let t = (step as f64 * dt).min(horizon);
        let sampler = SliceSampler::new(drift_field, t)?;
        let kick = epsilon * dw;
        for xp in x.iter_mut() {
            *xp += drift_transform(sampler.at(*xp)) * dt + kick;
        }
        let done = step + 1;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Instability {
                time: done as f64 * dt,
            });
        }
        if epsilon == 0.0 {
            if x.windows(2).any(|w| w[1] < w[0]) {
                merge_collisions(&mut x);
            }
        } else if violations.len() < MAX_RECORDED_VIOLATIONS {
            if let Some(left) = x.windows(2).position(|w| w[1] <= w[0]) {
                violations.push(FlowViolation { step: done, left });
            }
        }
        if done % stride == 0 || done == n_steps {
            times.push(if done == n_steps { horizon } else { done as f64 * dt });
            positions.extend_from_slice(&x);
        }
    }
    Ok(ParticleEnsemble {
        initial: initial.to_vec(),
        times,
        positions,
        epsilon,
        violations,
    })
}

/// Label whose forward image at recorded time `j` is `query`, by
/// piecewise-linear inversion of the monotone particle map.
pub fn invert_flow(ensemble: &ParticleEnsemble, j: usize, query: f64) -> Result<f64> {
    let xs = ensemble.positions(j);
    if let Some(p) = ensemble.first_decrease(j) {
        return Err(Error::Monotonicity {
            time_index: j,
            left: p,
            right: p + 1,
        });
    }
    Ok(invert_sorted(xs, ensemble.initial_positions(), query))
}

/// Inversion against positions already known to be non-decreasing.
pub(crate) fn invert_sorted(xs: &[f64], labels: &[f64], query: f64) -> f64 {
    let n = xs.len();
    if query <= xs[0] {
        return labels[0];
    }
    if query >= xs[n - 1] {
        return labels[n - 1];
    }
    let k = xs.partition_point(|&v| v < query);
    if xs[k] == query {
        return labels[k];
    }
    let (a, b) = (xs[k - 1], xs[k]);
    let w = (query - a) / (b - a);
    (1.0 - w) * labels[k - 1] + w * labels[k]
}
