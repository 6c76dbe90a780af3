use crate::error::{Error, Result};
use crate::model::{FluxModel, InitialData, SpaceTimeField};
use crate::quadrature;

/// `max |m| − ‖u_in‖∞`; non-positive when the maximum principle holds.
pub fn max_principle_check(field: &SpaceTimeField, u_in: &InitialData) -> f64 {
    field.max_abs() - u_in.sup_norm()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderRow {
    pub t: f64,
    pub h: f64,
    pub increment: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    pub beta: f64,
    pub rows: Vec<HolderRow>,
}

impl HolderReport {
    /// The smallest constant consistent with every row.
    pub fn constant(&self) -> f64 {
        self.rows.iter().map(|r| r.ratio).fold(0.0, f64::max)
    }
}

/// Spatial Hölder quotients of `m` against the smoothing rate
/// `|h|^β (t^{-β/2} + Lip(f) t^{(1-β)/2})` on shifts of 1, 2, 4 and 8 cells.
pub fn holder_bound_check(
    field: &SpaceTimeField,
    u_in: &InitialData,
    flux: &FluxModel,
    beta: f64,
    t_min: f64,
) -> Result<HolderReport> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::InvalidArgument(format!("beta must lie in (0, 1), got {beta}")));
    }
    let lip = flux.lipschitz_on(u_in.sup_norm());
    let dx = field.grid().dx();
    let mut rows = Vec::new();
    for (t, row) in field.rows() {
        if t < t_min || t <= 0.0 {
            continue;
        }
        let rate = t.powf(-beta / 2.0) + lip * t.powf((1.0 - beta) / 2.0);
        for shift in [1usize, 2, 4, 8] {
            if shift >= row.len() {
                break;
            }
            let h = shift as f64 * dx;
            let increment = row
                .iter()
                .zip(&row[shift..])
                .map(|(a, b)| (b - a).abs())
                .fold(0.0, f64::max);
            rows.push(HolderRow {
                t,
                h,
                increment,
                ratio: increment / (h.powf(beta) * rate),
            });
        }
    }
    Ok(HolderReport { beta, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernelRow {
    pub h: f64,
    /// `‖K(· + h) − K‖₁`.
    pub kernel_increment: f64,
    /// `‖∂K(· + h) − ∂K‖₁`.
    pub gradient_increment: f64,
    /// `kernel_increment · σ^β / h^β` with `σ = ε√t`.
    pub kernel_ratio: f64,
    /// `gradient_increment · σ^{1+β} / h^β`.
    pub gradient_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatKernelReport {
    pub epsilon: f64,
    pub t: f64,
    pub beta: f64,
    /// `∫K`, which should be one.
    pub mass: f64,
    /// `‖∂K‖₁`, which should be `√(2/π) / σ`.
    pub gradient_l1: f64,
    pub rows: Vec<HeatKernelRow>,
}

impl HeatKernelReport {
    pub fn kernel_constant(&self) -> f64 {
        self.rows.iter().map(|r| r.kernel_ratio).fold(0.0, f64::max)
    }

    pub fn gradient_constant(&self) -> f64 {
        self.rows.iter().map(|r| r.gradient_ratio).fold(0.0, f64::max)
    }
}

/// Integrates `|g|` over `[a, b]`, splitting at sign changes and comparing
/// two panel counts; `feature` is the length scale panels must resolve.
fn abs_integral<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, scale: f64, feature: f64) -> Result<f64> {
    const SCAN: usize = 4000;
    let step = (b - a) / SCAN as f64;
    let mut cuts = vec![a];
    let mut prev = g(a);
    for k in 1..=SCAN {
        let x = if k == SCAN { b } else { a + k as f64 * step };
        let cur = g(x);
        if cur == 0.0 {
            if k < SCAN {
                cuts.push(x);
            }
            continue;
        }
        if prev * cur < 0.0 && cuts.last() != Some(&(x - step)) {
            let (mut lo, mut hi) = (x - step, x);
            let sign_lo = prev.signum();
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if g(mid).signum() == sign_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
        prev = cur;
    }
    cuts.push(b);
    let mut coarse = 0.0;
    let mut fine = 0.0;
    for w in cuts.windows(2) {
        let panels = ((w[1] - w[0]) / feature).ceil().max(1.0) as usize;
        coarse += quadrature::integrate(&g, w[0], w[1], 2 * panels).abs();
        fine += quadrature::integrate(&g, w[0], w[1], 8 * panels).abs();
    }
    if (coarse - fine).abs() > 1e-9 * scale.max(fine) {
        return Err(Error::Quadrature(format!(
            "|g| integral did not settle on [{a}, {b}]: {coarse} vs {fine}"
        )));
    }
    Ok(fine)
}

/// Numerical `L¹` norms of heat-kernel increments at `σ = ε√t`.
pub fn heat_kernel_check(epsilon: f64, t: f64, beta: f64, h_list: &[f64]) -> Result<HeatKernelReport> {
    if !(epsilon > 0.0 && t > 0.0) {
        return Err(Error::InvalidArgument("heat kernel needs epsilon > 0 and t > 0".into()));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidArgument(format!("beta must lie in (0, 1], got {beta}")));
    }
    let sigma = epsilon * t.sqrt();
    let kernel = |x: f64| quadrature::normal_pdf(x / sigma) / sigma;
    let grad = |x: f64| -x / (sigma * sigma) * kernel(x);
    let reach = 12.0 * sigma;
    let mass = quadrature::integrate(kernel, -reach, reach, 16);
    let gradient_l1 = abs_integral(grad, -reach, reach, 1.0 / sigma, sigma)?;
    let rows = h_list
        .iter()
        .map(|&h| {
            let (a, b) = (-reach - h.abs(), reach + h.abs());
            let kernel_increment = abs_integral(|x| kernel(x + h) - kernel(x), a, b, 1.0, sigma)?;
            let gradient_increment = abs_integral(|x| grad(x + h) - grad(x), a, b, 1.0 / sigma, sigma)?;
            let hb = h.abs().powf(beta);
            Ok(HeatKernelRow {
                h,
                kernel_increment,
                gradient_increment,
                kernel_ratio: kernel_increment * sigma.powf(beta) / hb,
                gradient_ratio: gradient_increment * sigma.powf(1.0 + beta) / hb,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HeatKernelReport {
        epsilon,
        t,
        beta,
        mass,
        gradient_l1,
        rows,
    })
}

/// `(t, 1/(t · min f'') − osl(m(·, t)))` per slice with `t ≥ t_min`.
///
/// Negative margins mean the one-sided Lipschitz bound is violated.
pub fn oleinik_check(field: &SpaceTimeField, flux: &FluxModel, t_min: f64) -> Result<Vec<(f64, f64)>> {
    let dx = field.grid().dx();
    let mut out = Vec::new();
    for (t, row) in field.rows() {
        if t < t_min || t <= 0.0 {
            continue;
        }
        let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let curvature = flux.f_second_min_on(lo, hi);
        if curvature <= 0.0 {
            return Err(Error::NotConvex(format!(
                "{} has min f'' = {curvature} on [{lo}, {hi}]",
                flux.name()
            )));
        }
        let osl = crate::filippov::osl_of_row(row, dx);
        out.push((t, 1.0 / (t * curvature) - osl));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{burgers_flux, make_grid, FluxKind};
    use crate::pde::{exact_riemann_field, solve_viscous, PdeScheme};
    use crate::quadrature::normal_cdf;

    #[test]
    fn heat_kernel_anchors() {
        for eps in [1.0, 0.5, 0.25] {
            for t in [0.1, 0.5, 1.0] {
                let sigma = eps * f64::sqrt(t);
                let hs = [0.1 * sigma, 0.5 * sigma, sigma, 3.0 * sigma];
                let r = heat_kernel_check(eps, t, 1.0, &hs).unwrap();
                assert!((r.mass - 1.0).abs() < 1e-12);
                let anchor = (2.0 / std::f64::consts::PI).sqrt() / sigma;
                assert!((r.gradient_l1 / anchor - 1.0).abs() < 1e-6, "{eps} {t}");
                for row in &r.rows {
                    let exact = 2.0 * (2.0 * normal_cdf(row.h / (2.0 * sigma)) - 1.0);
                    assert!((row.kernel_increment - exact).abs() < 1e-9);
                    if row.h <= sigma {
                        assert!(row.kernel_ratio / anchor / sigma <= 1.0 + 1e-6);
                    }
                }
            }
        }
    }

    #[test]
    fn heat_kernel_rejects_bad_input() {
        assert!(heat_kernel_check(0.0, 1.0, 0.5, &[0.1]).is_err());
        assert!(heat_kernel_check(1.0, 1.0, 1.5, &[0.1]).is_err());
    }

    #[test]
    fn holder_constant_is_zero_for_constants() {
        let g = make_grid(3.0, 61).unwrap();
        let u = InitialData::constant(0.7);
        let field = solve_viscous(&g, &burgers_flux(), 0.5, &u, 0.5, &PdeScheme::default()).unwrap();
        let r = holder_bound_check(&field, &u, &burgers_flux(), 0.5, 0.05).unwrap();
        assert!(!r.rows.is_empty());
        assert_eq!(r.constant(), 0.0);
        assert!(holder_bound_check(&field, &u, &burgers_flux(), 1.0, 0.05).is_err());
        assert!(max_principle_check(&field, &u).abs() < 1e-12);
    }

    #[test]
    fn oleinik_on_rarefaction_and_shock() {
        let g = make_grid(4.0, 401).unwrap();
        let f = burgers_flux();
        let times = [0.0, 0.5, 1.0];
        let fan = exact_riemann_field(&f, &InitialData::expansive(), &g, &times).unwrap();
        for (t, margin) in oleinik_check(&fan, &f, 0.1).unwrap() {
            assert!(margin > -5.0 * g.dx(), "t={t}: {margin}");
            assert!(margin < 0.1, "fan slope should saturate the bound");
        }
        let shock = exact_riemann_field(&f, &InitialData::compressive(), &g, &times).unwrap();
        let m = oleinik_check(&shock, &f, 0.1).unwrap();
        assert_eq!(m.len(), 2);
        assert!((m[0].1 - 2.0).abs() < 1e-12);
        let cubic = FluxModel::new(FluxKind::Cubic);
        assert!(matches!(oleinik_check(&shock, &cubic, 0.1), Err(Error::NotConvex(_))));
    }
}
