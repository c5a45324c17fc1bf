//! Quadrature rules shared by assembly, audits and nonlinear terms.
//!
//! * Gauss–Legendre on `[0, 1]` (Newton iteration on Legendre polynomials).
//! * Gauss–Jacobi on `[0, 1]` for weights `σ^β`, `β > -1` (Golub–Welsch).
//! * Graded Gauss for integrands with an algebraic endpoint singularity at 0.
//! * Globally adaptive Gauss–Kronrod (G7/K15) on finite intervals.

use std::collections::BinaryHeap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Nodes and weights of a rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Applies the rule to `f` on `[lo, hi]` (affine map of the unit rule).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, lo: f64, hi: f64, mut f: F) -> f64 {
        let len = hi - lo;
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(lo + len * x)).sum::<f64>() * len
    }
}

/// Gauss–Legendre rule with `order` points mapped to `[0, 1]`.
pub fn gauss_legendre(order: usize) -> Rule {
    assert!(order >= 1, "Gauss–Legendre order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = ((i as f64 + 0.75) / (n as f64 + 0.5) * PI).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Jacobi rule for `∫_0^1 σ^β g(σ) dσ`, exact for polynomial `g` of
/// degree `< 2 order`.
pub fn gauss_jacobi(order: usize, beta: f64) -> Result<Rule> {
    if order == 0 {
        return Err(Error::InvalidParameter("Gauss–Jacobi order must be positive".into()));
    }
    if beta <= -1.0 || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!("Gauss–Jacobi exponent {beta} must exceed -1")));
    }
    // Jacobi matrix for weight (1+x)^β on [-1, 1] (α = 0).
    let alpha = 0.0_f64;
    let n = order;
    let mut jm = DMatrix::<f64>::zeros(n, n);
    let ab = alpha + beta;
    for i in 0..n {
        let k = i as f64;
        let diag = if i == 0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0))
        };
        jm[(i, i)] = diag;
        if i + 1 < n {
            let m = k + 1.0;
            let off2 = if i == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab))
            } else {
                4.0 * m * (m + alpha) * (m + beta) * (m + ab)
                    / ((2.0 * m + ab).powi(2) * (2.0 * m + ab + 1.0) * (2.0 * m + ab - 1.0))
            };
            let off = off2.sqrt();
            jm[(i, i + 1)] = off;
            jm[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::try_new(jm, 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("Golub–Welsch eigensolve did not converge".into()))?;
    // ∫_{-1}^{1} (1+x)^β dx = 2^{β+1}/(β+1); mapping to σ = (1+x)/2 gives a
    // total factor 2^{-β-1}, hence total mass 1/(β+1).
    let mu0 = 1.0 / (beta + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eig.eigenvalues[i];
            let v0 = eig.eigenvectors[(0, i)];
            (0.5 * (1.0 + x), mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(Rule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() })
}

/// Integrates `f` over `[0, 1]` where `f` may have an integrable algebraic
/// singularity at 0. Uses the substitution `σ = τ^grading` followed by a
/// composite Gauss–Legendre rule on geometrically shrinking panels.
pub fn graded_gauss<F: FnMut(f64) -> f64>(rule: &Rule, grading: f64, panels: usize, mut f: F) -> f64 {
    let q = grading.max(1.0);
    let ratio = 0.25_f64;
    let mut total = 0.0;
    let mut hi = 1.0;
    for p in 0..panels {
        let lo = if p + 1 == panels { 0.0 } else { hi * ratio };
        total += rule.integrate(lo, hi, |tau| {
            if tau <= 0.0 {
                return 0.0;
            }
            let sigma = tau.powf(q);
            f(sigma) * q * tau.powf(q - 1.0)
        });
        hi = lo;
    }
    total
}

// G7/K15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    for j in 0..7 {
        let dx = hl * XGK[j];
        let s = f(c - dx) + f(c + dx);
        resk += WGK[j] * s;
        if j % 2 == 1 {
            resg += WG[j / 2] * s;
        }
    }
    (resk * hl, ((resk - resg) * hl).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Adaptive {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

/// Globally adaptive G7/K15 quadrature on `[a, b]`.
///
/// Stops once the summed error estimate is below `max(abs_tol, rel_tol·|I|)`;
/// fails with [`Error::Numeric`] when `max_panels` is exhausted first.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Adaptive> {
    if a == b {
        return Ok(Adaptive { value: 0.0, error: 0.0, panels: 0 });
    }
    let (v, e) = kronrod15(&mut f, a, b);
    if !v.is_finite() {
        return Err(Error::Numeric(format!("non-finite integrand on [{a}, {b}]")));
    }
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value: v, err: e });
    let mut total = v;
    let mut total_err = e;
    let mut count = 1;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if count >= max_panels {
            return Err(Error::Numeric(format!(
                "adaptive quadrature on [{a}, {b}] exceeded {max_panels} panels (error estimate {total_err:e})"
            )));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (v1, e1) = kronrod15(&mut f, worst.a, mid);
        let (v2, e2) = kronrod15(&mut f, mid, worst.b);
        if !(v1.is_finite() && v2.is_finite()) {
            return Err(Error::Numeric(format!("non-finite integrand on [{}, {}]", worst.a, worst.b)));
        }
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, err: e2 });
        count += 1;
    }
    // Re-sum to shed accumulated cancellation from the running totals.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.err).sum();
    Ok(Adaptive { value, error, panels: count })
}
