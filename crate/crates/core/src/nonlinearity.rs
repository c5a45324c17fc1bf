//! Right-hand sides `f(x, t)` with their primitives, the linear growth bound
//! `|f(x,t)| ≤ a(x) + b|t|`, asymptotic slopes and the slope-gap condition
//! used for uniqueness.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature;
use crate::spectral::Spectrum;

/// Margin by which slopes must clear an eigenvalue.
pub const GAP_MARGIN: f64 = 1e-9;

pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type PointwiseFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A function of `x ∈ Ω`.
#[derive(Clone)]
pub enum Profile {
    Constant(f64),
    /// Coefficients in ascending powers of `x`.
    Polynomial(Vec<f64>),
    /// Piecewise-linear interpolation of samples (clamped outside).
    Nodal {
        x: Vec<f64>,
        values: Vec<f64>,
    },
    Custom(ProfileFn),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Constant(v) => write!(f, "Constant({v})"),
            Profile::Polynomial(c) => write!(f, "Polynomial({c:?})"),
            Profile::Nodal { x, values } => {
                write!(f, "Nodal({} samples, x0 = {:?}, v0 = {:?})", x.len(), x.first(), values.first())
            }
            Profile::Custom(_) => write!(f, "Custom(<fn>)"),
        }
    }
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Constant(v) => *v,
            Profile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci),
            Profile::Nodal { x: xs, values } => {
                if x <= xs[0] {
                    return values[0];
                }
                let last = xs.len() - 1;
                if x >= xs[last] {
                    return values[last];
                }
                let i = xs.partition_point(|&xi| xi <= x) - 1;
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                values[i] * (1.0 - t) + values[i + 1] * t
            }
            Profile::Custom(f) => f(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Profile::Constant(v) => Some(*v),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Constant(v) if !v.is_finite() => invalid("constant profile must be finite"),
            Profile::Polynomial(c) if c.is_empty() || c.iter().any(|v| !v.is_finite()) => {
                invalid("polynomial profile needs at least one finite coefficient")
            }
            Profile::Nodal { x, values } => {
                if x.len() < 2 || x.len() != values.len() {
                    return invalid("nodal profile needs at least two samples and matching lengths");
                }
                if x.windows(2).any(|w| !(w[0] < w[1])) {
                    return invalid("nodal profile abscissae must be strictly increasing");
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return invalid("nodal profile values must be finite");
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `(inf, sup)` over the given sample points (exact for constants).
    pub fn range(&self, xs: &[f64]) -> Option<(f64, f64)> {
        if let Profile::Constant(v) = self {
            return Some((*v, *v));
        }
        if xs.is_empty() {
            return None;
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &x in xs {
            let v = self.eval(x);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Some((lo, hi))
    }
}

/// Right-hand side family.
#[derive(Clone)]
pub enum Family {
    /// `m t + g(x)`.
    Affine { m: f64 },
    /// `m t + δ arctan t + g(x)`.
    Saturating { m: f64, delta: f64 },
    /// `m t + c sin t + g(x)`.
    BoundedPerturbation { m: f64, c: f64 },
    /// User-supplied `f`, optional `∂f/∂t` and primitive.
    Custom { f: PointwiseFn, dfdt: Option<PointwiseFn>, primitive: Option<PointwiseFn> },
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Affine { m } => write!(f, "Affine {{ m: {m} }}"),
            Family::Saturating { m, delta } => write!(f, "Saturating {{ m: {m}, delta: {delta} }}"),
            Family::BoundedPerturbation { m, c } => write!(f, "BoundedPerturbation {{ m: {m}, c: {c} }}"),
            Family::Custom { .. } => write!(f, "Custom"),
        }
    }
}

/// A right-hand side together with its declared hypotheses data.
#[derive(Debug, Clone)]
pub struct NonlinearitySpec {
    pub family: Family,
    /// Source term `g(x)` (built-in families only).
    pub source: Profile,
    /// Growth offset `a(x) ≥ 0`.
    pub growth_a: Profile,
    /// Growth slope `b ≥ 0`.
    pub growth_b: f64,
    pub alpha_lower: Profile,
    pub alpha_upper: Profile,
    /// Declared interval containing all difference quotients in `t`.
    pub slope_range: Option<(f64, f64)>,
}

fn abs_profile(p: &Profile, extra: f64) -> Profile {
    match p {
        Profile::Constant(v) => Profile::Constant(v.abs() + extra),
        other => {
            let inner = other.clone();
            Profile::Custom(Arc::new(move |x| inner.eval(x).abs() + extra))
        }
    }
}

impl NonlinearitySpec {
    fn builtin(family: Family, m: f64, perturbation_bound: f64, slopes: (f64, f64), g: Profile) -> Result<Self> {
        if !m.is_finite() {
            return invalid("slope m must be finite");
        }
        g.validate()?;
        Ok(Self {
            family,
            growth_a: abs_profile(&g, perturbation_bound),
            growth_b: m.abs(),
            source: g,
            alpha_lower: Profile::Constant(m),
            alpha_upper: Profile::Constant(m),
            slope_range: Some(slopes),
        })
    }

    pub fn affine(m: f64, g: Profile) -> Result<Self> {
        Self::builtin(Family::Affine { m }, m, 0.0, (m, m), g)
    }

    pub fn saturating(m: f64, delta: f64, g: Profile) -> Result<Self> {
        if !delta.is_finite() {
            return invalid("delta must be finite");
        }
        let slopes = (m + delta.min(0.0), m + delta.max(0.0));
        Self::builtin(Family::Saturating { m, delta }, m, delta.abs() * FRAC_PI_2, slopes, g)
    }

    pub fn bounded_perturbation(m: f64, c: f64, g: Profile) -> Result<Self> {
        if !c.is_finite() {
            return invalid("c must be finite");
        }
        Self::builtin(Family::BoundedPerturbation { m, c }, m, c.abs(), (m - c.abs(), m + c.abs()), g)
    }

    /// A user nonlinearity. Growth data and asymptotic slopes must be declared;
    /// the slope range is optional (needed only for the uniqueness check).
    pub fn custom<F>(f: F, growth_a: Profile, growth_b: f64, alpha_lower: Profile, alpha_upper: Profile) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            family: Family::Custom { f: Arc::new(f), dfdt: None, primitive: None },
            source: Profile::Constant(0.0),
            growth_a,
            growth_b,
            alpha_lower,
            alpha_upper,
            slope_range: None,
        }
    }

    pub fn with_derivative<F>(mut self, df: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if let Family::Custom { dfdt, .. } = &mut self.family {
            *dfdt = Some(Arc::new(df));
        }
        self
    }

    pub fn with_primitive<F>(mut self, big_f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if let Family::Custom { primitive, .. } = &mut self.family {
            *primitive = Some(Arc::new(big_f));
        }
        self
    }

    pub fn with_slope_range(mut self, lo: f64, hi: f64) -> Self {
        self.slope_range = Some((lo.min(hi), lo.max(hi)));
        self
    }

    /// Overrides the derived growth data.
    pub fn with_growth(mut self, a: Profile, b: f64) -> Self {
        self.growth_a = a;
        self.growth_b = b;
        self
    }

    /// The linear slope `m` of built-in families.
    pub fn linear_slope(&self) -> Option<f64> {
        match self.family {
            Family::Affine { m } | Family::Saturating { m, .. } | Family::BoundedPerturbation { m, .. } => Some(m),
            Family::Custom { .. } => None,
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self.family, Family::Affine { .. })
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Affine { .. } => "affine",
            Family::Saturating { .. } => "saturating",
            Family::BoundedPerturbation { .. } => "bounded_perturbation",
            Family::Custom { .. } => "custom",
        }
    }

    pub fn f(&self, x: f64, t: f64) -> f64 {
        match &self.family {
            Family::Affine { m } => m * t + self.source.eval(x),
            Family::Saturating { m, delta } => m * t + delta * t.atan() + self.source.eval(x),
            Family::BoundedPerturbation { m, c } => m * t + c * t.sin() + self.source.eval(x),
            Family::Custom { f, .. } => f(x, t),
        }
    }

    /// `∂f/∂t` (central differences for custom families without a derivative).
    pub fn dfdt(&self, x: f64, t: f64) -> f64 {
        match &self.family {
            Family::Affine { m } => *m,
            Family::Saturating { m, delta } => m + delta / (1.0 + t * t),
            Family::BoundedPerturbation { m, c } => m + c * t.cos(),
            Family::Custom { f, dfdt, .. } => match dfdt {
                Some(d) => d(x, t),
                None => {
                    let eps = 1e-6 * (1.0 + t.abs());
                    (f(x, t + eps) - f(x, t - eps)) / (2.0 * eps)
                }
            },
        }
    }

    /// `F(x, t) = ∫_0^t f(x, τ) dτ`.
    pub fn primitive(&self, x: f64, t: f64) -> Result<f64> {
        Ok(match &self.family {
            Family::Affine { m } => 0.5 * m * t * t + self.source.eval(x) * t,
            Family::Saturating { m, delta } => {
                0.5 * m * t * t + delta * (t * t.atan() - 0.5 * t.mul_add(t, 1.0).ln()) + self.source.eval(x) * t
            }
            Family::BoundedPerturbation { m, c } => 0.5 * m * t * t + c * (1.0 - t.cos()) + self.source.eval(x) * t,
            Family::Custom { f, primitive, .. } => match primitive {
                Some(p) => p(x, t),
                None => {
                    if t == 0.0 {
                        return Ok(0.0);
                    }
                    let (lo, hi, sign) = if t > 0.0 { (0.0, t, 1.0) } else { (t, 0.0, -1.0) };
                    sign * quadrature::adaptive(|tau| f(x, tau), lo, hi, 1e-14, 1e-12, 2000)?.value
                }
            },
        })
    }
}

/// `f(x, t)`.
pub fn eval_f(spec: &NonlinearitySpec, x: f64, t: f64) -> f64 {
    spec.f(x, t)
}

/// `F(x, t)`.
pub fn eval_big_f(spec: &NonlinearitySpec, x: f64, t: f64) -> Result<f64> {
    spec.primitive(x, t)
}

/// Sample grid for [`audit_growth`]: `x` over Ω, `t` over `[−T_max, T_max]`.
#[derive(Debug, Clone)]
pub struct GrowthGrid {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
}

impl GrowthGrid {
    /// `nx` uniform points inside `(a, b)`; `t` combines a linear grid on
    /// `[−10, 10]` with `nt` log-spaced magnitudes up to `t_max`, both signs.
    pub fn new(a: f64, b: f64, nx: usize, t_max: f64, nt: usize) -> Result<Self> {
        if !(t_max >= 1e4) {
            return invalid(format!("T_max = {t_max} must be at least 1e4"));
        }
        if nx == 0 || !(a < b) {
            return invalid("growth grid needs nx ≥ 1 and a < b");
        }
        let xs = (0..nx).map(|i| a + (b - a) * (i as f64 + 0.5) / nx as f64).collect();
        let mut ts: Vec<f64> = (-200..=200).map(|i| i as f64 * 0.05).collect();
        let nt = nt.max(2);
        for i in 0..nt {
            let r = (1f64.ln() + (t_max.ln() - 1f64.ln()) * i as f64 / (nt - 1) as f64).exp();
            ts.push(r);
            ts.push(-r);
        }
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        Ok(Self { xs, ts })
    }

    pub fn default_for(a: f64, b: f64) -> Self {
        Self::new(a, b, 33, 1e6, 120).expect("default grid parameters are valid")
    }
}

/// Outcome of [`audit_growth`].
#[derive(Debug, Clone, Serialize)]
pub struct GrowthAudit {
    /// `min (a(x) + b|t| − |f(x,t)|)` over the grid.
    pub worst_slack: f64,
    pub worst_x: f64,
    pub worst_t: f64,
    pub passed: bool,
}

/// Checks `|f(x,t)| ≤ a(x) + b|t|` on the grid (pass iff slack ≥ −1e-9).
pub fn audit_growth(spec: &NonlinearitySpec, grid: &GrowthGrid) -> GrowthAudit {
    let mut worst = f64::INFINITY;
    let (mut wx, mut wt) = (f64::NAN, f64::NAN);
    for &x in &grid.xs {
        let a = spec.growth_a.eval(x);
        for &t in &grid.ts {
            let slack = a + spec.growth_b * t.abs() - spec.f(x, t).abs();
            // relative rounding allowance at large |t|
            let slack = slack + 4.0 * f64::EPSILON * (spec.growth_b * t.abs());
            if slack < worst {
                worst = slack;
                wx = x;
                wt = t;
            }
        }
    }
    GrowthAudit { worst_slack: worst, worst_x: wx, worst_t: wt, passed: worst >= -1e-9 && spec.growth_b >= 0.0 }
}

/// Cross-check of declared asymptotic slopes against `f(x,t)/t` at
/// `|t| = 1e6`.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeAudit {
    pub max_deviation: f64,
    pub passed: bool,
}

pub fn audit_asymptotic_slopes(spec: &NonlinearitySpec, xs: &[f64]) -> SlopeAudit {
    let t = 1e6;
    let mut dev = 0.0_f64;
    for &x in xs {
        let lo = spec.alpha_lower.eval(x);
        let hi = spec.alpha_upper.eval(x);
        for tt in [t, -t] {
            let q = spec.f(x, tt) / tt;
            let d = if q < lo {
                lo - q
            } else if q > hi {
                q - hi
            } else {
                0.0
            };
            dev = dev.max(d);
        }
    }
    SlopeAudit { max_deviation: dev, passed: dev <= 1e-3 }
}

/// Which existence case applies.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum CaseClassification {
    /// `sup ᾱ < λ₁`.
    Coercive,
    /// `λ_k < inf α̲ ≤ sup ᾱ < λ_{k+1}`.
    Gap {
        k: usize,
    },
    Unsupported {
        reason: String,
    },
}

impl CaseClassification {
    pub fn is_supported(&self) -> bool {
        !matches!(self, CaseClassification::Unsupported { .. })
    }
}

/// Sup/inf of the declared asymptotic slopes over the spectrum's sample set.
pub fn slope_bounds(spec: &NonlinearitySpec, spectrum: &Spectrum) -> Option<(f64, f64)> {
    let xs = spectrum.sample_points();
    let lo = spec.alpha_lower.range(xs)?.0;
    let hi = spec.alpha_upper.range(xs)?.1;
    Some((lo, hi))
}

/// Locates `[inf α̲, sup ᾱ]` relative to the computed eigenvalues.
pub fn classify(spec: &NonlinearitySpec, spectrum: &Spectrum) -> CaseClassification {
    let Some((lo, hi)) = slope_bounds(spec, spectrum) else {
        return CaseClassification::Unsupported {
            reason: "x-dependent slopes need sample points; operator has no mesh".into(),
        };
    };
    if lo > hi {
        return CaseClassification::Unsupported { reason: format!("declared inf α̲ = {lo} exceeds sup ᾱ = {hi}") };
    }
    let lam = spectrum.eigenvalues();
    if hi < lam[0] - GAP_MARGIN {
        return CaseClassification::Coercive;
    }
    for k in 1..lam.len() {
        if lam[k - 1] + GAP_MARGIN < lo && hi < lam[k] - GAP_MARGIN {
            return CaseClassification::Gap { k };
        }
    }
    if let Some(j) = lam.iter().position(|&l| l >= lo - GAP_MARGIN && l <= hi + GAP_MARGIN) {
        return CaseClassification::Unsupported {
            reason: format!("asymptotic slopes [{lo}, {hi}] straddle λ_{} = {} (resonance)", j + 1, lam[j]),
        };
    }
    CaseClassification::Unsupported {
        reason: format!("asymptotic slopes [{lo}, {hi}] exceed the computed spectrum (λ_max = {})", lam[lam.len() - 1]),
    }
}

/// Outcome of [`check_f2_gap`].
#[derive(Debug, Clone, Serialize)]
pub struct GapCheck {
    pub k: usize,
    pub lambda_k: f64,
    pub lambda_k1: f64,
    pub slope_range: (f64, f64),
    pub passed: bool,
}

/// Checks that every difference quotient of `f` in `t` lies in
/// `(λ_k + 1e-9, λ_{k+1} − 1e-9)`.
pub fn check_f2_gap(spec: &NonlinearitySpec, spectrum: &Spectrum, k: usize) -> Result<GapCheck> {
    if k == 0 || k >= spectrum.len() {
        return invalid(format!("gap index k = {k} must satisfy 1 ≤ k < {}", spectrum.len()));
    }
    let (lo, hi) =
        spec.slope_range.ok_or_else(|| Error::Unauditable("custom nonlinearity has no declared slope range".into()))?;
    let lk = spectrum.lambda(k);
    let lk1 = spectrum.lambda(k + 1);
    Ok(GapCheck {
        k,
        lambda_k: lk,
        lambda_k1: lk1,
        slope_range: (lo, hi),
        passed: lo > lk + GAP_MARGIN && hi < lk1 - GAP_MARGIN,
    })
}

/// JSON form of a [`Profile`] (custom closures are not serializable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Constant { value: f64 },
    Polynomial { coefficients: Vec<f64> },
    Nodal { x: Vec<f64>, values: Vec<f64> },
}

impl From<&ProfileConfig> for Profile {
    fn from(p: &ProfileConfig) -> Self {
        match p {
            ProfileConfig::Constant { value } => Profile::Constant(*value),
            ProfileConfig::Polynomial { coefficients } => Profile::Polynomial(coefficients.clone()),
            ProfileConfig::Nodal { x, values } => Profile::Nodal { x: x.clone(), values: values.clone() },
        }
    }
}
