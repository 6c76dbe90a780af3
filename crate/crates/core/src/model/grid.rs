use crate::error::{Error, Result};

/// Uniform node-centred grid on `[-L, L]`, both endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    half_length: f64,
    dx: f64,
    nodes: Vec<f64>,
}

impl Grid1D {
    pub fn new(half_length: f64, n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {n_points}"
            )));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive, got {half_length}"
            )));
        }
        let dx = 2.0 * half_length / (n_points - 1) as f64;
        let last = n_points - 1;
        let nodes = (0..n_points)
            .map(|i| {
                // pin the endpoints exactly
                if i == last {
                    half_length
                } else {
                    -half_length + i as f64 * dx
                }
            })
            .collect();
        Ok(Self {
            half_length,
            dx,
            nodes,
        })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_points(&self) -> usize {
        self.nodes.len()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn x(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Index of the node closest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let s = ((x + self.half_length) / self.dx).round();
        if s <= 0.0 {
            0
        } else {
            (s as usize).min(self.n_points() - 1)
        }
    }

    /// Cell containing `x` as `(i, w)` with `x = (1 - w) x_i + w x_{i+1}`.
    /// Points outside the grid are clamped to the end cells with `w` in `{0, 1}`.
    pub(crate) fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.n_points();
        let s = (x + self.half_length) / self.dx;
        if !(s > 0.0) {
            return (0, 0.0);
        }
        if s >= (n - 1) as f64 {
            return (n - 2, 1.0);
        }
        let i = (s.floor() as usize).min(n - 2);
        (i, s - i as f64)
    }

    /// Trapezoid weights for integration over the whole grid.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.n_points();
        let mut w = vec![self.dx; n];
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
        w
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_points());
        let n = values.len();
        let inner: f64 = values[1..n - 1].iter().sum();
        self.dx * (inner + 0.5 * (values[0] + values[n - 1]))
    }

    /// Refined grid with the same extent and half the spacing.
    pub fn refined(&self) -> Self {
        Self::new(self.half_length, 2 * self.n_points() - 1).expect("refining a valid grid")
    }
}

pub fn make_grid(half_length: f64, n_points: usize) -> Result<Grid1D> {
    Grid1D::new(half_length, n_points)
}
