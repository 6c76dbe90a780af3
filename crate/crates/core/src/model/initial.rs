use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::grid::Grid1D;

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum InitialKind {
    /// `left` for `x < jump`, `right` otherwise.
    Riemann { left: f64, right: f64, jump: f64 },
    /// Node values, linearly interpolated and extended by constants.
    Sampled { grid: Grid1D, values: Vec<f64> },
    Analytic(Profile),
}

#[derive(Clone)]
pub struct InitialData {
    kind: InitialKind,
    sup_norm: f64,
}

impl InitialData {
    pub fn riemann(left: f64, right: f64, jump: f64) -> Self {
        Self {
            kind: InitialKind::Riemann { left, right, jump },
            sup_norm: left.abs().max(right.abs()),
        }
    }

    /// `1` for `x < 0`, `-1` otherwise: a stationary Burgers shock.
    pub fn compressive() -> Self {
        Self::riemann(1.0, -1.0, 0.0)
    }

    /// `-1` for `x < 0`, `1` otherwise: a centred Burgers rarefaction.
    pub fn expansive() -> Self {
        Self::riemann(-1.0, 1.0, 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::riemann(c, c, 0.0)
    }

    pub fn sampled(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.n_points()
            )));
        }
        let sup_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self {
            kind: InitialKind::Sampled { grid, values },
            sup_norm,
        })
    }

    /// The sup norm is taken over the nodes of `grid`.
    pub fn analytic(profile: impl Fn(f64) -> f64 + Send + Sync + 'static, grid: &Grid1D) -> Self {
        let sup_norm = grid
            .nodes()
            .iter()
            .fold(0.0f64, |m, &x| m.max(profile(x).abs()));
        Self {
            kind: InitialKind::Analytic(Arc::new(profile)),
            sup_norm,
        }
    }

    pub fn kind(&self) -> &InitialKind {
        &self.kind
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            InitialKind::Riemann { left, right, jump } => {
                if x < *jump {
                    *left
                } else {
                    *right
                }
            }
            InitialKind::Sampled { grid, values } => {
                let (i, w) = grid.locate(x);
                (1.0 - w) * values[i] + w * values[i + 1]
            }
            InitialKind::Analytic(p) => p(x),
        }
    }

    /// Mean of the datum over `[a, b]`; exact for Riemann data, Simpson's
    /// rule otherwise.
    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return self.eval(a);
        }
        match self.kind {
            InitialKind::Riemann { left, right, .. } if left == right => left,
            InitialKind::Riemann { left, right, jump } => {
                let split = jump.clamp(a, b);
                (left * (split - a) + right * (b - split)) / (b - a)
            }
            _ => (self.eval(a) + 4.0 * self.eval(0.5 * (a + b)) + self.eval(b)) / 6.0,
        }
    }

    pub fn sample(&self, grid: &Grid1D) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.eval(x)).collect()
    }

    /// Node values for a finite-volume start: Riemann data is averaged over
    /// each node's dual cell, so a node on the jump takes the mean state.
    pub fn cell_sample(&self, grid: &Grid1D) -> Vec<f64> {
        match self.kind {
            InitialKind::Riemann { .. } => {
                let h = 0.5 * grid.dx();
                let (lo, hi) = (grid.nodes()[0], grid.nodes()[grid.n_points() - 1]);
                grid.nodes()
                    .iter()
                    .map(|&x| self.cell_average((x - h).max(lo), (x + h).min(hi)))
                    .collect()
            }
            _ => self.sample(grid),
        }
    }

    pub fn as_riemann(&self) -> Option<(f64, f64, f64)> {
        match self.kind {
            InitialKind::Riemann { left, right, jump } => Some((left, right, jump)),
            _ => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, InitialKind::Riemann { left, right, .. } if left == right)
    }
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            InitialKind::Riemann { left, right, jump } => f
                .debug_struct("Riemann")
                .field("left", left)
                .field("right", right)
                .field("jump", jump)
                .finish(),
            InitialKind::Sampled { values, .. } => {
                f.debug_struct("Sampled").field("n", &values.len()).finish()
            }
            InitialKind::Analytic(_) => f.write_str("Analytic"),
        }
    }
}

/// Textual description of initial data used in configuration files.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Compressive,
    Expansive,
    Riemann { left: f64, right: f64, jump: f64 },
    Constant(f64),
}

impl InitialSpec {
    pub fn build(&self) -> InitialData {
        match *self {
            InitialSpec::Compressive => InitialData::compressive(),
            InitialSpec::Expansive => InitialData::expansive(),
            InitialSpec::Riemann { left, right, jump } => InitialData::riemann(left, right, jump),
            InitialSpec::Constant(c) => InitialData::constant(c),
        }
    }
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialSpec::Compressive => write!(f, "compressive"),
            InitialSpec::Expansive => write!(f, "expansive"),
            InitialSpec::Riemann { left, right, jump } => {
                write!(f, "riemann:{left},{right},{jump}")
            }
            InitialSpec::Constant(c) => write!(f, "constant:{c}"),
        }
    }
}

impl FromStr for InitialSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("bad initial data `{s}`"));
        match s {
            "compressive" => return Ok(InitialSpec::Compressive),
            "expansive" => return Ok(InitialSpec::Expansive),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("riemann:") {
            let parts: Vec<f64> = rest
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            return match parts[..] {
                [left, right] => Ok(InitialSpec::Riemann {
                    left,
                    right,
                    jump: 0.0,
                }),
                [left, right, jump] => Ok(InitialSpec::Riemann { left, right, jump }),
                _ => Err(bad()),
            };
        }
        if let Some(rest) = s.strip_prefix("constant:") {
            return rest
                .trim()
                .parse()
                .map(InitialSpec::Constant)
                .map_err(|_| bad());
        }
        Err(bad())
    }
}
