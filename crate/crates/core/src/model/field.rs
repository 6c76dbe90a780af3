use std::io::Write;

use crate::error::{Error, Result};
use crate::model::grid::Grid1D;

/// Time-stacked solution on a fixed grid, `values[j][i]` at `(x_i, t_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: Grid1D,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SpaceTimeField {
    pub fn new(grid: Grid1D, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidArgument("field without time slices".into()));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument(
                "field time stamps must be strictly increasing".into(),
            ));
        }
        if values.len() != times.len() * grid.n_points() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} slices of {} points",
                values.len(),
                times.len(),
                grid.n_points()
            )));
        }
        Ok(Self {
            grid,
            times,
            values,
        })
    }

    /// Builds a field by evaluating `f(x, t)` at every node and time.
    pub fn from_fn(grid: Grid1D, times: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(times.len() * grid.n_points());
        for &t in &times {
            values.extend(grid.nodes().iter().map(|&x| f(x, t)));
        }
        Self::new(grid, times, values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.grid.n_points();
        &self.values[j * n..(j + 1) * n]
    }

    pub fn last_row(&self) -> &[f64] {
        self.row(self.n_times() - 1)
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.times
            .iter()
            .copied()
            .zip(self.values.chunks_exact(self.grid.n_points()))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Index of the stored slice nearest to `t`.
    pub fn nearest_slice(&self, t: f64) -> usize {
        let k = self.times.partition_point(|&s| s < t);
        if k == 0 {
            0
        } else if k == self.times.len() {
            k - 1
        } else if (self.times[k] - t) < (t - self.times[k - 1]) {
            k
        } else {
            k - 1
        }
    }

    /// Bracketing slices `(j, w)` with `t = (1 - w) t_j + w t_{j+1}`.
    pub(crate) fn bracket(&self, t: f64) -> Result<(usize, f64)> {
        let n = self.times.len();
        let (start, end) = (self.times[0], self.times[n - 1]);
        let slack = 1e-12 * end.abs().max(1.0);
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::TimeOutOfRange { time: t, start, end });
        }
        if n == 1 {
            return Ok((0, 0.0));
        }
        let k = self.times.partition_point(|&s| s <= t);
        let j = k.clamp(1, n - 1) - 1;
        let w = ((t - self.times[j]) / (self.times[j + 1] - self.times[j])).clamp(0.0, 1.0);
        Ok((j, w))
    }

    /// New field keeping only slices whose index is a multiple of `stride`
    /// plus the final one.
    pub fn thinned(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let n = self.n_times();
        let keep: Vec<usize> = (0..n)
            .filter(|j| j % stride == 0 || *j == n - 1)
            .collect();
        let times = keep.iter().map(|&j| self.times[j]).collect();
        let values = keep.iter().flat_map(|&j| self.row(j).iter().copied()).collect();
        Self::new(self.grid.clone(), times, values).expect("subset of a valid field")
    }

    /// Writes `t,x,value` rows in time-major order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,x,value")?;
        for (t, row) in self.rows() {
            for (x, v) in self.grid.nodes().iter().zip(row) {
                writeln!(out, "{t},{x},{v}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> SpaceTimeField {
        let g = Grid1D::new(1.0, 3).unwrap();
        SpaceTimeField::from_fn(g, vec![0.0, 0.5, 1.0], |x, t| x + 10.0 * t).unwrap()
    }

    #[test]
    fn rows_and_slices() {
        let f = field();
        assert_eq!(f.row(1), &[4.0, 5.0, 6.0]);
        assert_eq!(f.nearest_slice(0.7), 1);
        assert_eq!(f.nearest_slice(0.8), 2);
        assert_eq!(f.nearest_slice(-3.0), 0);
        assert_eq!(f.bracket(0.75).unwrap(), (1, 0.5));
        assert_eq!(f.bracket(1.0).unwrap(), (1, 1.0));
        assert!(f.bracket(1.5).is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        let g = Grid1D::new(1.0, 3).unwrap();
        assert!(SpaceTimeField::new(g.clone(), vec![0.0], vec![1.0; 2]).is_err());
        assert!(SpaceTimeField::new(g, vec![0.0, 0.0], vec![1.0; 6]).is_err());
    }

    #[test]
    fn csv_is_time_major() {
        let mut buf = Vec::new();
        field().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,value");
        assert_eq!(lines[1], "0,-1,-1");
        assert_eq!(lines[4], "0.5,-1,4");
        assert_eq!(lines.len(), 10);
    }

    #[test]
    fn thinning_keeps_last() {
        let g = Grid1D::new(1.0, 3).unwrap();
        let times: Vec<f64> = (0..6).map(|j| j as f64).collect();
        let f = SpaceTimeField::from_fn(g, times, |_, t| t).unwrap();
        let t = f.thinned(4);
        assert_eq!(t.times(), &[0.0, 4.0, 5.0]);
    }
}
