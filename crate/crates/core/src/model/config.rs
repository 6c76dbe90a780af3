//! Run configuration and its flat `key = value` text format.
//!
//! Recognised keys (defaults are the full-scale production values):
//!
//! | key              | meaning                                   | default          |
//! |------------------|-------------------------------------------|------------------|
//! | `epsilon`        | noise amplitude                           | `1`              |
//! | `final_time`     | final time `T`                            | `1`              |
//! | `half_length`    | domain half length `L`                    | `6`              |
//! | `n_x`            | PDE grid points                           | `1201`           |
//! | `n_paths`        | particles seeded on `[-L, L]`             | `4001`           |
//! | `n_time_steps`   | Euler–Maruyama steps                      | `4000`           |
//! | `n_mc`           | Monte Carlo samples                       | `5000`           |
//! | `seed`           | 64-bit master seed                        | `20250101`       |
//! | `flux`           | `burgers`, `zero`, `cubic`, `linear:c`    | `burgers`        |
//! | `initial`        | `compressive`, `expansive`, `riemann:l,r[,x0]`, `constant:c` | `compressive` |
//! | `test_functions` | comma list of `gauss`, `lorentz`, `tanh`  | all three        |
//! | `p_moment`       | comma list of moments `p >= 1`            | `1,2`            |
//! | `cfl_safety`     | PDE CFL safety factor in `(0, 1]`         | `0.4`            |
//! | `epsilons`       | comma list for zero-noise sweeps          | `1,0.5,0.25`     |
//! | `probes`         | comma list of path-convergence probes     | `-1,-0.5,0.5,1`  |
//! | `record_stride`  | SDE steps between recorded time slices    | `10`             |

use std::fmt::Write as _;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::flux::FluxModel;
use crate::model::grid::Grid1D;
use crate::model::initial::InitialSpec;
use crate::model::test_function::TestFunction;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub epsilon: f64,
    pub final_time: f64,
    pub half_length: f64,
    pub n_x: usize,
    pub n_paths: usize,
    pub n_time_steps: usize,
    pub n_mc: usize,
    pub seed: u64,
    pub flux: FluxModel,
    pub initial: InitialSpec,
    pub test_functions: Vec<TestFunction>,
    pub p_moment: Vec<f64>,
    pub cfl_safety: f64,
    pub epsilons: Vec<f64>,
    pub probes: Vec<f64>,
    pub record_stride: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            final_time: 1.0,
            half_length: 6.0,
            n_x: 1201,
            n_paths: 4001,
            n_time_steps: 4000,
            n_mc: 5000,
            seed: 20250101,
            flux: FluxModel::from_str("burgers").expect("builtin"),
            initial: InitialSpec::Compressive,
            test_functions: TestFunction::DEFAULTS.to_vec(),
            p_moment: vec![1.0, 2.0],
            cfl_safety: 0.4,
            epsilons: vec![1.0, 0.5, 0.25],
            probes: vec![-1.0, -0.5, 0.5, 1.0],
            record_stride: 10,
        }
    }
}

const KEYS: &[&str] = &[
    "epsilon",
    "final_time",
    "half_length",
    "n_x",
    "n_paths",
    "n_time_steps",
    "n_mc",
    "seed",
    "flux",
    "initial",
    "test_functions",
    "p_moment",
    "cfl_safety",
    "epsilons",
    "probes",
    "record_stride",
];

impl ExperimentConfig {
    /// Scaled-down counts used by default on the command line and in CI.
    pub fn desk() -> Self {
        Self {
            n_x: 301,
            n_paths: 1001,
            n_time_steps: 1000,
            n_mc: 200,
            ..Self::default()
        }
    }

    /// Parses a configuration on top of the full-scale defaults.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_base(text, Self::default())
    }

    pub fn parse_with_base(text: &str, base: Self) -> Result<Self> {
        let mut cfg = base;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| match e {
                    Error::UnknownConfigKey { key, .. } => Error::UnknownConfigKey {
                        line: line_no,
                        key,
                    },
                    other => Error::Config {
                        line: line_no,
                        message: other.to_string(),
                    },
                })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::InvalidArgument(format!("`{key}`: cannot parse `{v}`")))
        }
        fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
            v.split(',').map(|p| num(key, p.trim())).collect()
        }
        match key {
            "epsilon" => self.epsilon = num(key, value)?,
            "final_time" => self.final_time = num(key, value)?,
            "half_length" => self.half_length = num(key, value)?,
            "n_x" => self.n_x = num(key, value)?,
            "n_paths" => self.n_paths = num(key, value)?,
            "n_time_steps" => self.n_time_steps = num(key, value)?,
            "n_mc" => self.n_mc = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "flux" => self.flux = value.parse()?,
            "initial" => self.initial = value.parse()?,
            "test_functions" => {
                self.test_functions = value
                    .split(',')
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "p_moment" => self.p_moment = list(key, value)?,
            "cfl_safety" => self.cfl_safety = num(key, value)?,
            "epsilons" => self.epsilons = list(key, value)?,
            "probes" => self.probes = list(key, value)?,
            "record_stride" => self.record_stride = num(key, value)?,
            _ => {
                return Err(Error::UnknownConfigKey {
                    line: 0,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(m));
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return fail(format!("final_time must be > 0, got {}", self.final_time));
        }
        if self.n_x < 3 {
            return fail(format!("n_x must be >= 3, got {}", self.n_x));
        }
        for (name, v) in [
            ("n_paths", self.n_paths),
            ("n_time_steps", self.n_time_steps),
            ("n_mc", self.n_mc),
            ("record_stride", self.record_stride),
        ] {
            if v == 0 {
                return fail(format!("{name} must be positive"));
            }
        }
        if !(self.half_length > 0.0) {
            return fail(format!("half_length must be > 0, got {}", self.half_length));
        }
        if self.p_moment.is_empty() || self.p_moment.iter().any(|&p| !(p >= 1.0)) {
            return fail("p_moment entries must be >= 1".into());
        }
        if self.test_functions.is_empty() {
            return fail("at least one test function is required".into());
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return fail(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety));
        }
        if self.epsilons.iter().any(|&e| !(e >= 0.0)) {
            return fail("epsilons must be >= 0".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(self.half_length, self.n_x)
    }

    pub fn sde_dt(&self) -> f64 {
        self.final_time / self.n_time_steps as f64
    }

    /// Canonical text form; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        fn join<T: std::fmt::Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        let mut s = String::new();
        for key in KEYS {
            let value = match *key {
                "epsilon" => self.epsilon.to_string(),
                "final_time" => self.final_time.to_string(),
                "half_length" => self.half_length.to_string(),
                "n_x" => self.n_x.to_string(),
                "n_paths" => self.n_paths.to_string(),
                "n_time_steps" => self.n_time_steps.to_string(),
                "n_mc" => self.n_mc.to_string(),
                "seed" => self.seed.to_string(),
                "flux" => self.flux.to_string(),
                "initial" => self.initial.to_string(),
                "test_functions" => join(&self.test_functions),
                "p_moment" => join(&self.p_moment),
                "cfl_safety" => self.cfl_safety.to_string(),
                "epsilons" => join(&self.epsilons),
                "probes" => join(&self.probes),
                "record_stride" => self.record_stride.to_string(),
                _ => unreachable!(),
            };
            let _ = writeln!(s, "{key} = {value}");
        }
        s
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn config_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}
