use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Relative threshold below which the difference quotients `a` and `a_k`
/// switch to their analytic limit `f'(k)`.
pub const REMOVABLE_SINGULARITY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FluxKind {
    /// `f(u) = u^2 / 2`
    Burgers,
    /// `f(u) = c u`; `c = 0` gives the heat equation for the viscous problem.
    Linear { speed: f64 },
    /// `f(u) = u^3 / 3`, registered but not convex on symmetric ranges.
    Cubic,
}

/// Scalar flux together with the derivative data the schemes need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxModel {
    kind: FluxKind,
}

impl FluxModel {
    pub fn new(kind: FluxKind) -> Self {
        Self { kind }
    }

    pub fn kind(&self) -> FluxKind {
        self.kind
    }

    pub fn name(&self) -> String {
        self.to_string()
    }

    #[inline]
    pub fn f(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Burgers => 0.5 * u * u,
            FluxKind::Linear { speed } => speed * u,
            FluxKind::Cubic => u * u * u / 3.0,
        }
    }

    #[inline]
    pub fn f_prime(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Burgers => u,
            FluxKind::Linear { speed } => speed,
            FluxKind::Cubic => u * u,
        }
    }

    #[inline]
    pub fn f_double_prime(&self, u: f64) -> f64 {
        match self.kind {
            FluxKind::Burgers => 1.0,
            FluxKind::Linear { .. } => 0.0,
            FluxKind::Cubic => 2.0 * u,
        }
    }

    /// Strict convexity on the symmetric working range `[-m, m]`.
    pub fn is_strictly_convex_on(&self, m: f64) -> bool {
        self.f_second_min_on(-m, m) > 0.0
    }

    /// Strict convexity on all of the real line.
    pub fn is_strictly_convex(&self) -> bool {
        matches!(self.kind, FluxKind::Burgers)
    }

    pub fn f_second_min_on(&self, lo: f64, hi: f64) -> f64 {
        match self.kind {
            FluxKind::Burgers => 1.0,
            FluxKind::Linear { .. } => 0.0,
            FluxKind::Cubic => 2.0 * lo.min(hi),
        }
    }

    /// `max |f'(u)|` over `u` in `[lo, hi]`.
    pub fn max_speed_on(&self, lo: f64, hi: f64) -> f64 {
        match self.kind {
            FluxKind::Burgers => lo.abs().max(hi.abs()),
            FluxKind::Linear { speed } => speed.abs(),
            FluxKind::Cubic => (lo * lo).max(hi * hi),
        }
    }

    /// Lipschitz constant of `f` on `[-m, m]`.
    pub fn lipschitz_on(&self, m: f64) -> f64 {
        self.max_speed_on(-m, m)
    }

    /// Engquist–Osher interface flux: the part of `f` carried by
    /// right-going characteristics comes from the left state and vice versa.
    #[inline]
    pub fn upwind_flux(&self, left: f64, right: f64) -> f64 {
        match self.kind {
            FluxKind::Burgers => {
                let l = left.max(0.0);
                let r = right.min(0.0);
                0.5 * (l * l + r * r)
            }
            FluxKind::Linear { speed } => {
                if speed >= 0.0 {
                    speed * left
                } else {
                    speed * right
                }
            }
            FluxKind::Cubic => left * left * left / 3.0,
        }
    }

    /// Exact Riemann-problem flux at the interface (Godunov).
    #[inline]
    pub fn godunov_flux(&self, left: f64, right: f64) -> f64 {
        match self.kind {
            FluxKind::Burgers => {
                if left <= right {
                    let u = 0.0f64.clamp(left, right);
                    self.f(u)
                } else {
                    self.f(left).max(self.f(right))
                }
            }
            FluxKind::Linear { speed } => {
                if speed >= 0.0 {
                    speed * left
                } else {
                    speed * right
                }
            }
            FluxKind::Cubic => self.f(left),
        }
    }

    /// Solves `f'(u) = speed` for `u` in `[lo, hi]` where `f'` is increasing.
    pub(crate) fn f_prime_inverse(&self, speed: f64, lo: f64, hi: f64) -> f64 {
        if let FluxKind::Burgers = self.kind {
            return speed.clamp(lo, hi);
        }
        let (mut a, mut b) = (lo, hi);
        if self.f_prime(a) >= speed {
            return a;
        }
        if self.f_prime(b) <= speed {
            return b;
        }
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if self.f_prime(mid) < speed {
                a = mid;
            } else {
                b = mid;
            }
            if b - a <= f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
                break;
            }
        }
        0.5 * (a + b)
    }

    pub fn drift_a(&self, v: f64) -> f64 {
        drift_a(self, v)
    }

    pub fn drift_a_k(&self, v: f64, k: f64) -> f64 {
        drift_a_k(self, v, k)
    }

    /// `sup |a_k(u)|` for `u` in `[-m, m]`, used to bound Filippov velocities.
    pub fn max_drift_on(&self, m: f64, k: f64) -> f64 {
        // a_k is monotone for convex f; sampling also covers the non-convex kinds
        let samples = 257;
        (0..samples)
            .map(|i| -m + 2.0 * m * i as f64 / (samples - 1) as f64)
            .map(|u| self.drift_a_k(u, k).abs())
            .fold(0.0, f64::max)
            .max(self.drift_a_k(-m, k).abs())
            .max(self.drift_a_k(m, k).abs())
    }
}

impl fmt::Display for FluxModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FluxKind::Burgers => write!(f, "burgers"),
            FluxKind::Linear { speed } if speed == 0.0 => write!(f, "zero"),
            FluxKind::Linear { speed } => write!(f, "linear:{speed}"),
            FluxKind::Cubic => write!(f, "cubic"),
        }
    }
}

impl FromStr for FluxModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let kind = match s {
            "burgers" => FluxKind::Burgers,
            "zero" | "heat" => FluxKind::Linear { speed: 0.0 },
            "cubic" => FluxKind::Cubic,
            _ => {
                if let Some(c) = s.strip_prefix("linear:") {
                    let speed = c.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidArgument(format!("bad linear flux speed `{c}`"))
                    })?;
                    FluxKind::Linear { speed }
                } else {
                    return Err(Error::InvalidArgument(format!("unknown flux `{s}`")));
                }
            }
        };
        Ok(Self::new(kind))
    }
}

pub fn burgers_flux() -> FluxModel {
    FluxModel::new(FluxKind::Burgers)
}

/// `a(v) = (f(v) - f(0)) / v`, continuously extended by `f'(0)` at `v = 0`.
pub fn drift_a(flux: &FluxModel, v: f64) -> f64 {
    drift_a_k(flux, v, 0.0)
}

/// `a_k(v) = (f(v) - f(k)) / (v - k)`, continuously extended by `f'(k)` at `v = k`.
pub fn drift_a_k(flux: &FluxModel, v: f64, k: f64) -> f64 {
    let d = v - k;
    if d.abs() < REMOVABLE_SINGULARITY_THRESHOLD * k.abs().max(1.0) {
        return flux.f_prime(k);
    }
    match flux.kind {
        // closed-form secants avoid cancellation near the threshold
        FluxKind::Burgers => 0.5 * (v + k),
        FluxKind::Linear { speed } => speed,
        FluxKind::Cubic => (v * v + v * k + k * k) / 3.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn burgers_values() {
        let f = burgers_flux();
        assert_eq!(f.f(2.0), 2.0);
        assert_eq!(f.f_prime(-1.0), -1.0);
        assert_eq!(f.f_second_min_on(-1.0, 1.0), 1.0);
        assert!(f.is_strictly_convex());
    }

    #[test]
    fn drift_examples() {
        let f = burgers_flux();
        assert_eq!(drift_a(&f, 2.0), 1.0);
        assert_eq!(drift_a(&f, 0.0), 0.0);
        assert_eq!(drift_a(&f, -1.0), -0.5);
        assert_eq!(drift_a_k(&f, 1.0, -1.0), 0.0);
        assert_eq!(drift_a_k(&f, 0.7, 0.7), 0.7);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["burgers", "zero", "cubic", "linear:0.5"] {
            let f: FluxModel = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("foo".parse::<FluxModel>().is_err());
    }

    #[test]
    fn cubic_not_convex_on_symmetric_range() {
        let f: FluxModel = "cubic".parse().unwrap();
        assert!(!f.is_strictly_convex_on(1.0));
        assert!(!f.is_strictly_convex());
    }

    #[test]
    fn godunov_and_upwind_consistency() {
        for flux in [burgers_flux(), "cubic".parse().unwrap(), "linear:-0.3".parse().unwrap()] {
            for u in [-1.5, -0.2, 0.0, 0.4, 2.0] {
                assert!((flux.upwind_flux(u, u) - flux.f(u)).abs() < 1e-15);
                assert!((flux.godunov_flux(u, u) - flux.f(u)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn f_prime_inverse_cubic() {
        let f: FluxModel = "cubic".parse().unwrap();
        let u = f.f_prime_inverse(0.25, 0.0, 2.0);
        assert!((u - 0.5).abs() < 1e-12);
    }

    fn fluxes() -> impl Strategy<Value = FluxModel> {
        prop_oneof![
            Just(burgers_flux()),
            Just(FluxModel::new(FluxKind::Cubic)),
            (-2.0f64..2.0).prop_map(|speed| FluxModel::new(FluxKind::Linear { speed })),
        ]
    }

    proptest! {
        #[test]
        fn derivative_finite_difference(flux in fluxes(), u in -3.0f64..3.0) {
            let h = 1e-4;
            let fd = (flux.f(u + h) - flux.f(u - h)) / (2.0 * h);
            prop_assert!((fd - flux.f_prime(u)).abs() <= 1e-6);
            let fd2 = (flux.f_prime(u + h) - flux.f_prime(u - h)) / (2.0 * h);
            prop_assert!((fd2 - flux.f_double_prime(u)).abs() <= 1e-6);
        }

        #[test]
        fn closed_form_secants(flux in fluxes(), v in -3.0f64..3.0, k in -3.0f64..3.0) {
            prop_assume!((v - k).abs() > 1e-3);
            let generic = (flux.f(v) - flux.f(k)) / (v - k);
            prop_assert!((drift_a_k(&flux, v, k) - generic).abs() <= 1e-10);
        }

        #[test]
        fn drift_k_zero_is_drift(flux in fluxes(), v in -3.0f64..3.0) {
            prop_assert_eq!(drift_a_k(&flux, v, 0.0), drift_a(&flux, v));
        }

        #[test]
        fn drift_k_continuous_at_k(flux in fluxes(), k in -2.0f64..2.0, h in 1e-6f64..1e-2) {
            // |a_k(k ± h) - f'(k)| <= sup|f''| h / 2
            let c = 2.0 * (k.abs() + h) + 1.0;
            prop_assert!((drift_a_k(&flux, k + h, k) - flux.f_prime(k)).abs() <= c * h);
            prop_assert!((drift_a_k(&flux, k - h, k) - flux.f_prime(k)).abs() <= c * h);
        }

        #[test]
        fn convex_secants_nondecreasing(k in -2.0f64..2.0, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let flux = burgers_flux();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(drift_a_k(&flux, lo, k) <= drift_a_k(&flux, hi, k) + 1e-15);
        }

        #[test]
        fn convexity_sign(u in -3.0f64..3.0) {
            let flux = burgers_flux();
            prop_assert!(flux.f(u) - flux.f(0.0) - u * flux.f_prime(0.0) >= 0.0);
        }
    }
}
