//! Admissible interaction kernels and the audit of their structural
//! assumptions: integrability of `min{|x|², 1}·K` and the fractional lower
//! bound `K(x) ≥ θ|x|^{-(n+2s)}`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::quadrature;

/// Kernel evaluation callback for the `Custom` family.
pub type KernelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Built-in kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Fractional,
    Custom,
}

/// Default radius up to which tails are integrated before power-law
/// extrapolation takes over.
pub const DEFAULT_RADIUS_CAP: f64 = 1e8;
/// Tolerance on `k2_worst_ratio ≥ 1`.
pub const K2_TOLERANCE: f64 = 1e-9;
/// Values of the (K1) integral above this are reported as non-integrable.
pub const K1_VALUE_CAP: f64 = 1e12;

/// An even, positive interaction kernel `K(z)`, `z ≠ 0`.
#[derive(Clone)]
pub struct Kernel {
    family: KernelFamily,
    s: f64,
    theta: f64,
    dim: usize,
    custom: Option<KernelFn>,
    singular_coefficient: f64,
    radius_cap: f64,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("family", &self.family)
            .field("s", &self.s)
            .field("theta", &self.theta)
            .field("dim", &self.dim)
            .field("singular_coefficient", &self.singular_coefficient)
            .finish()
    }
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return invalid(format!("fractional order s = {s} must lie in (0, 1)"));
    }
    Ok(())
}

/// `K(z) = |z|^{-(n+2s)}` with `θ = 1`.
pub fn make_fractional_kernel(s: f64, n: usize) -> Result<Kernel> {
    Kernel::fractional(s, n)
}

impl Kernel {
    /// The fractional kernel `|z|^{-(n+2s)}`; `θ = 1` is the equality case of
    /// the lower bound.
    pub fn fractional(s: f64, n: usize) -> Result<Self> {
        check_order(s)?;
        if n == 0 {
            return invalid("dimension must be positive");
        }
        Ok(Self {
            family: KernelFamily::Fractional,
            s,
            theta: 1.0,
            dim: n,
            custom: None,
            singular_coefficient: 1.0,
            radius_cap: DEFAULT_RADIUS_CAP,
        })
    }

    /// Fractional kernel with a declared lower-bound constant `θ`. Any
    /// `θ ≤ 1` is valid for this family; larger values fail the audit.
    pub fn fractional_with_theta(s: f64, n: usize, theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return invalid(format!("theta = {theta} must be positive"));
        }
        let mut k = Self::fractional(s, n)?;
        k.theta = theta;
        Ok(k)
    }

    /// A user kernel on the line with declared `(s, θ)`. The audit checks the
    /// declaration; it does not infer it.
    ///
    /// The coefficient `c` of the leading singularity `c|z|^{-(1+2s)}`, used by
    /// the singular quadrature, is estimated as `K(ε)ε^{1+2s}` at `ε = 1e-8`
    /// unless set with [`Kernel::with_singular_coefficient`].
    pub fn custom<F>(s: f64, theta: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_order(s)?;
        if !(theta > 0.0 && theta.is_finite()) {
            return invalid(format!("theta = {theta} must be positive"));
        }
        let eps = 1e-8_f64;
        let c = f(eps) * eps.powf(1.0 + 2.0 * s);
        if !(c.is_finite() && c >= 0.0) {
            return invalid(format!("kernel leading coefficient estimate {c} is not a finite nonnegative value"));
        }
        Ok(Self {
            family: KernelFamily::Custom,
            s,
            theta,
            dim: 1,
            custom: Some(Arc::new(f)),
            singular_coefficient: c,
            radius_cap: DEFAULT_RADIUS_CAP,
        })
    }

    pub fn with_singular_coefficient(mut self, c: f64) -> Self {
        self.singular_coefficient = c;
        self
    }

    pub fn with_radius_cap(mut self, cap: f64) -> Self {
        self.radius_cap = cap;
        self
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Fractional order `s`.
    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn singular_coefficient(&self) -> f64 {
        self.singular_coefficient
    }

    pub fn radius_cap(&self) -> f64 {
        self.radius_cap
    }

    /// Exponent `n + 2s` of the reference power law.
    pub fn exponent(&self) -> f64 {
        self.dim as f64 + 2.0 * self.s
    }

    pub fn evaluate(&self, z: f64) -> f64 {
        match &self.custom {
            None => z.abs().powf(-self.exponent()),
            Some(f) => f(z),
        }
    }

    /// Leading singular part `c|z|^{-(1+2s)}` subtracted in near-field
    /// quadrature.
    pub(crate) fn remainder(&self, z: f64) -> f64 {
        match &self.custom {
            None => 0.0,
            Some(f) => f(z) - self.singular_coefficient * z.abs().powf(-(1.0 + 2.0 * self.s)),
        }
    }

    /// One-sided tail `∫_d^∞ K(r) dr` for `d > 0` (line kernels).
    pub fn tail_integral(&self, d: f64) -> Result<f64> {
        if !(d > 0.0) {
            return Err(Error::InvalidParameter(format!("tail distance {d} must be positive")));
        }
        match &self.custom {
            None => Ok(d.powf(-2.0 * self.s) / (2.0 * self.s)),
            Some(f) => {
                let f = f.clone();
                let cap = self.radius_cap.max(2.0 * d);
                let head = log_integral(|r| f(r), d, cap, 1e-13)?;
                let tail = power_tail(|r| f(r), cap)?;
                Ok(head + tail)
            }
        }
    }
}

/// `∫_lo^hi g(r) dr` through `r = e^u`, turning power laws into exponentials.
fn log_integral<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let r = quadrature::adaptive(
        |u: f64| {
            let r = u.exp();
            g(r) * r
        },
        lo.ln(),
        hi.ln(),
        0.0,
        tol,
        4000,
    )?;
    Ok(r.value)
}

/// Extrapolated `∫_cap^∞ g`, assuming `g(r) ≈ C r^{-p}` beyond `cap`.
/// Returns `+∞` when the fitted decay is not integrable.
fn power_tail<G: Fn(f64) -> f64>(g: G, cap: f64) -> Result<f64> {
    let g1 = g(cap);
    let g0 = g(0.5 * cap);
    if g1 == 0.0 {
        return Ok(0.0);
    }
    if !(g1 > 0.0 && g0 > 0.0) {
        return Err(Error::AuditInconclusive(format!("kernel is not positive near the radius cap {cap:e}")));
    }
    let p = (g0 / g1).ln() / 2f64.ln();
    if p <= 1.0 + 1e-6 {
        return Ok(f64::INFINITY);
    }
    Ok(g1 * cap / (p - 1.0))
}

/// Area of the unit sphere in `ℝⁿ` (`2` for `n = 1`).
pub fn unit_sphere_area(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * unit_sphere_area(n - 2),
    }
}

/// Outcome of [`audit_kernel`].
#[derive(Debug, Clone, Serialize)]
pub struct KernelAudit {
    /// `∫ min{|x|², 1} K(x) dx`, `+∞` when the tail is not integrable.
    pub k1_integral: f64,
    pub k1_holds: bool,
    pub k2_holds: bool,
    /// `min K(x)|x|^{n+2s}/θ` over the sampled radii.
    pub k2_worst_ratio: f64,
    /// Radius achieving the worst ratio.
    pub k2_worst_radius: f64,
}

/// Checks integrability of `min{|x|²,1}K` by quadrature split at `|x| = 1`
/// (log-substituted, with power-law extrapolation below `1/cap` and above
/// `cap`) and the lower bound `K ≥ θ|x|^{-(n+2s)}` at `sample_count`
/// log-spaced radii in `[1e-6, 1e6]`, both signs.
pub fn audit_kernel(k: &Kernel, quad_tol: f64, sample_count: usize) -> Result<KernelAudit> {
    if !(quad_tol > 0.0) {
        return invalid(format!("quad_tol = {quad_tol} must be positive"));
    }
    if sample_count < 16 {
        return invalid(format!("sample_count = {sample_count} must be at least 16"));
    }
    let n = k.dim as i32;
    let area = unit_sphere_area(k.dim);
    let cap = k.radius_cap;

    let inner_integrand = |r: f64| r.powi(n + 1) * k.evaluate(r);
    let outer_integrand = |r: f64| r.powi(n - 1) * k.evaluate(r);

    let inconclusive = |e: Error| match e {
        Error::Numeric(msg) => Error::AuditInconclusive(msg),
        other => other,
    };

    // Inner part ∫_0^1 r^{n+1} K: quadrature on [1/cap, 1] plus the power-law
    // piece below 1/cap.
    let r_min = 1.0 / cap;
    let inner_head = log_integral(inner_integrand, r_min, 1.0, quad_tol).map_err(inconclusive)?;
    let inner_tail = {
        let g1 = inner_integrand(r_min);
        let g2 = inner_integrand(2.0 * r_min);
        if g1 <= 0.0 || g2 <= 0.0 {
            0.0
        } else {
            let p = (g2 / g1).ln() / 2f64.ln();
            if p <= -1.0 + 1e-6 {
                f64::INFINITY
            } else {
                g1 * r_min / (p + 1.0)
            }
        }
    };
    let outer_head = log_integral(outer_integrand, 1.0, cap, quad_tol).map_err(inconclusive)?;
    let outer_tail = power_tail(outer_integrand, cap)?;

    let k1_integral = area * (inner_head + inner_tail + outer_head + outer_tail);
    let k1_holds = k1_integral.is_finite() && k1_integral < K1_VALUE_CAP;

    let (lo, hi) = (1e-6_f64.ln(), 1e6_f64.ln());
    let mut worst = f64::INFINITY;
    let mut worst_r = f64::NAN;
    for i in 0..sample_count {
        let r = (lo + (hi - lo) * i as f64 / (sample_count - 1) as f64).exp();
        for z in [r, -r] {
            let ratio = k.evaluate(z) * r.powf(k.exponent()) / k.theta;
            if ratio < worst || worst_r.is_nan() {
                worst = ratio;
                worst_r = r;
            }
        }
    }
    Ok(KernelAudit {
        k1_integral,
        k1_holds,
        k2_holds: worst >= 1.0 - K2_TOLERANCE,
        k2_worst_ratio: worst,
        k2_worst_radius: worst_r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_values() {
        let k = make_fractional_kernel(0.5, 1).unwrap();
        assert_eq!(k.evaluate(2.0), 0.25);
        assert_eq!(k.evaluate(-2.0), k.evaluate(2.0));
        let k = make_fractional_kernel(0.25, 1).unwrap();
        assert!((k.evaluate(0.5) - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(k.theta(), 1.0);
        assert_eq!(k.family(), KernelFamily::Fractional);
    }

    #[test]
    fn order_outside_unit_interval_is_rejected() {
        for s in [0.0, 1.0, 1.5, -0.2, f64::NAN] {
            assert!(matches!(make_fractional_kernel(s, 1), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn fractional_k1_integral_closed_form() {
        let k = make_fractional_kernel(0.5, 1).unwrap();
        let a = audit_kernel(&k, 1e-12, 64).unwrap();
        assert!((a.k1_integral - 4.0).abs() < 1e-9, "{}", a.k1_integral);
        assert!(a.k1_holds && a.k2_holds);
        assert!((a.k2_worst_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_tail_breaks_integrability() {
        let k = Kernel::custom(0.5, 1.0, |z: f64| z.abs().powi(-2) + 1.0).unwrap();
        let a = audit_kernel(&k, 1e-10, 32).unwrap();
        assert!(!a.k1_holds);
        assert!(a.k2_holds);
    }

    #[test]
    fn k2_flags_undershooting_kernels() {
        let k = Kernel::custom(0.5, 1.0, |z: f64| 0.5 * z.abs().powi(-2)).unwrap();
        let a = audit_kernel(&k, 1e-10, 32).unwrap();
        assert!(!a.k2_holds);
        assert!((a.k2_worst_ratio - 0.5).abs() < 1e-12);
        assert!(a.k1_holds);
    }

    #[test]
    fn audit_preconditions() {
        let k = make_fractional_kernel(0.5, 1).unwrap();
        assert!(audit_kernel(&k, 0.0, 32).is_err());
        assert!(audit_kernel(&k, 1e-10, 8).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert_eq!(unit_sphere_area(1), 2.0);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-15);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn custom_tail_matches_closed_form() {
        let s = 0.3;
        let frac = make_fractional_kernel(s, 1).unwrap();
        let custom = Kernel::custom(s, 1.0, move |z: f64| z.abs().powf(-1.0 - 2.0 * s)).unwrap();
        for d in [0.01, 0.5, 1.0, 3.0] {
            let a = frac.tail_integral(d).unwrap();
            let b = custom.tail_integral(d).unwrap();
            assert!(((a - b) / a).abs() < 1e-10, "d {d}: {a} vs {b}");
        }
        assert!((custom.singular_coefficient() - 1.0).abs() < 1e-12);
    }
}
