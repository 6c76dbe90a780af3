use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// Brownian increments of one Monte Carlo sample.
///
/// Increment `j` is a pure function of `(seed, sample_index, j)`: the
/// generator is a ChaCha stream selected by `sample_index`, and step `j`
/// reads words `2j` and `2j + 1` of it.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianBundle {
    seed: u64,
    sample_index: u64,
    dt: f64,
    increments: Vec<f64>,
}

/// Maps 53 random bits to the open interval `(0, 1)`.
#[inline]
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal quantile via the complementary inverse error function.
#[inline]
pub(crate) fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

pub fn make_brownian(seed: u64, sample_index: u64, n_steps: usize, dt: f64) -> Result<BrownianBundle> {
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be positive".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(sample_index);
    let scale = dt.sqrt();
    let increments = (0..n_steps)
        .map(|_| scale * normal_quantile(open_unit(rng.next_u64())))
        .collect();
    Ok(BrownianBundle {
        seed,
        sample_index,
        dt,
        increments,
    })
}

impl BrownianBundle {
    /// A bundle of zero increments, for noiseless runs.
    pub fn quiet(n_steps: usize, dt: f64) -> Self {
        Self {
            seed: 0,
            sample_index: 0,
            dt,
            increments: vec![0.0; n_steps],
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_index(&self) -> u64 {
        self.sample_index
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.increments.len() as f64
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `W(t_j)` for `j = 0..=n_steps`.
    pub fn path(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.increments.len() + 1);
        w.push(0.0);
        let mut acc = 0.0;
        for dw in &self.increments {
            acc += dw;
            w.push(acc);
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn determinism_and_independence() {
        let a = make_brownian(7, 0, 4000, 2.5e-4).unwrap();
        let b = make_brownian(7, 0, 4000, 2.5e-4).unwrap();
        assert_eq!(a, b);
        let c = make_brownian(7, 1, 4000, 2.5e-4).unwrap();
        let (x, y) = (a.increments(), c.increments());
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let cov: f64 = x.iter().zip(y).map(|(p, q)| (p - mx) * (q - my)).sum();
        let vx: f64 = x.iter().map(|p| (p - mx).powi(2)).sum();
        let vy: f64 = y.iter().map(|q| (q - my).powi(2)).sum();
        assert!((cov / (vx * vy).sqrt()).abs() < 0.1);
        assert!(make_brownian(7, 0, 0, 0.1).is_err());
        assert!(make_brownian(7, 0, 10, 0.0).is_err());
    }

    #[test]
    fn prefix_is_stable_under_length() {
        let short = make_brownian(3, 5, 10, 0.01).unwrap();
        let long = make_brownian(3, 5, 100, 0.01).unwrap();
        assert_eq!(short.increments(), &long.increments()[..10]);
    }

    #[test]
    fn moments_of_increments() {
        let dt = 1e-3;
        let b = make_brownian(11, 3, 100_000, dt).unwrap();
        let n = b.n_steps() as f64;
        let mean = b.increments().iter().sum::<f64>() / n;
        let var = b.increments().iter().map(|x| x * x).sum::<f64>() / n;
        assert!(mean.abs() < 5.0 * (dt / n).sqrt());
        assert!((var / dt - 1.0).abs() < 0.02);
        let w = b.path();
        assert_eq!(w.len(), 100_001);
        assert!((w[100_000] - mean * n).abs() < 1e-9);
    }

    #[test]
    fn quantile_matches_reference_values() {
        assert!(normal_quantile(0.5).abs() < 1e-15);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
        assert!((normal_quantile(1e-10) + 6.361340902404056).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn sample_mean_within_five_sigma(seed in any::<u64>(), sample in 0u64..1000) {
            let dt = 2.5e-4;
            let n = 4000;
            let b = make_brownian(seed, sample, n, dt).unwrap();
            let mean = b.increments().iter().sum::<f64>() / n as f64;
            prop_assert!(mean.abs() <= 5.0 * (dt / n as f64).sqrt());
        }
    }
}
