//! Uniform 1-D mesh, zero-extended hat basis and assembly of the discrete
//! bilinear form
//!
//! ```text
//! a(u, v) = ∫∫_Q (u(x) − u(y))(v(x) − v(y)) K(x − y) dx dy
//!         = ∫_Ω∫_Ω (…) dx dy + 2 ∫_Ω u v κ dx,     κ(x) = ∫_{∁Ω} K(x − y) dy.
//! ```
//!
//! On a uniform mesh every ordered element pair `(E, E + d)` produces the same
//! local matrix, so only one local integral per offset `d` is computed. Each
//! local integral is reduced to one dimension in the relative coordinate
//! `t = ξ − η` (the `ξ` integral of the polynomial basis product is done
//! exactly). Pairs that touch (`|d| ≤ 1`) have an algebraic singularity at an
//! endpoint in `t`: the leading part `c|z|^{-(1+2s)}` is integrated with a
//! Gauss–Jacobi rule carrying the weight `σ^{1-2s}` (exact for the fractional
//! kernel), and the remainder `K − c|z|^{-(1+2s)}` with graded Gauss whose
//! grading exponent is `2/(2 − 2s)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::kernel::{audit_kernel, Kernel};
use crate::quadrature::{gauss_jacobi, gauss_legendre, graded_gauss, Rule};

/// Uniform partition of `Ω = (a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    a: f64,
    b: f64,
    nodes: Vec<f64>,
}

pub fn build_uniform_mesh(a: f64, b: f64, n_elements: usize) -> Result<Mesh> {
    Mesh::uniform(a, b, n_elements)
}

impl Mesh {
    pub fn uniform(a: f64, b: f64, n_elements: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return invalid(format!("domain endpoints must satisfy a < b (got a = {a}, b = {b})"));
        }
        if n_elements < 2 {
            return invalid(format!("n_elements = {n_elements} must be at least 2"));
        }
        let h = (b - a) / n_elements as f64;
        let mut nodes: Vec<f64> = (0..=n_elements).map(|i| a + h * i as f64).collect();
        nodes[n_elements] = b;
        Ok(Self { a, b, nodes })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn h(&self) -> f64 {
        (self.b - self.a) / self.n_elements() as f64
    }

    /// All nodes `a = x₀ < … < x_N = b`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of degrees of freedom (`N − 1`; boundary values are pinned to 0).
    pub fn interior_count(&self) -> usize {
        self.n_elements() - 1
    }

    pub fn interior_nodes(&self) -> &[f64] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    /// Degree of freedom attached to global node `node`, if any.
    pub fn dof(&self, node: usize) -> Option<usize> {
        if node == 0 || node >= self.n_elements() {
            None
        } else {
            Some(node - 1)
        }
    }

    /// Hat function of degree of freedom `i` evaluated at `x` (zero outside Ω).
    pub fn hat(&self, i: usize, x: f64) -> f64 {
        let h = self.h();
        let center = self.nodes[i + 1];
        (1.0 - (x - center).abs() / h).max(0.0)
    }

    /// Piecewise-linear interpolant of coefficient vector `u` at `x`.
    pub fn interpolate(&self, u: &DVector<f64>, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            return 0.0;
        }
        let h = self.h();
        let pos = (x - self.a) / h;
        let e = (pos.floor() as usize).min(self.n_elements() - 1);
        let xi = pos - e as f64;
        let left = self.dof(e).map_or(0.0, |i| u[i]);
        let right = self.dof(e + 1).map_or(0.0, |i| u[i]);
        left * (1.0 - xi) + right * xi
    }

    /// Interior nodes together with the Gauss points of every element: the
    /// sample set on which pointwise (a.e.) conditions are checked.
    pub fn sample_points(&self, quad_order: usize) -> Vec<f64> {
        let rule = gauss_legendre(quad_order);
        let h = self.h();
        let mut pts: Vec<f64> = self.interior_nodes().to_vec();
        for e in 0..self.n_elements() {
            let x0 = self.nodes[e];
            pts.extend(rule.nodes.iter().map(|xi| x0 + h * xi));
        }
        pts.sort_by(f64::total_cmp);
        pts
    }
}

/// `κ(x) = ∫_{∁Ω} K(x − y) dy` for `x` strictly inside Ω.
pub fn tail_weight(mesh: &Mesh, k: &Kernel, x: f64) -> Result<f64> {
    if !(x > mesh.a && x < mesh.b) {
        return Err(Error::SingularEvaluation { x, a: mesh.a, b: mesh.b });
    }
    Ok(k.tail_integral(x - mesh.a)? + k.tail_integral(mesh.b - x)?)
}

/// Quadrature controls for [`assemble`].
#[derive(Debug, Clone)]
pub struct AssemblyOptions {
    pub quad_order: usize,
    pub assembly_tol: f64,
    /// Assemble even when the kernel audit fails.
    pub skip_audit: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { quad_order: 8, assembly_tol: 1e-8, skip_audit: false }
    }
}

impl AssemblyOptions {
    pub fn with_order(quad_order: usize) -> Self {
        Self { quad_order, ..Self::default() }
    }
}

/// Discrete forms of the weak formulation on the interior hat basis.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    mesh: Option<Mesh>,
    /// `A[i][j] = a(φ_i, φ_j)`.
    pub stiffness: DMatrix<f64>,
    /// `M[i][j] = ∫_Ω φ_i φ_j`.
    pub mass: DMatrix<f64>,
    /// `κ` at the interior nodes.
    pub tail: DVector<f64>,
    pub quad_order: usize,
    pub assembly_tol: f64,
    /// Largest per-entry quadrature error estimate.
    pub error_estimate: f64,
}

impl AssembledOperator {
    /// Wraps explicit matrices (no mesh attached). Nonlinear terms need a
    /// mesh; linear algebra on `A` and `M` does not.
    pub fn from_matrices(stiffness: DMatrix<f64>, mass: DMatrix<f64>) -> Result<Self> {
        let m = stiffness.nrows();
        if stiffness.ncols() != m || mass.nrows() != m || mass.ncols() != m || m == 0 {
            return invalid("stiffness and mass must be square matrices of the same nonzero size");
        }
        if stiffness != stiffness.transpose() || mass != mass.transpose() {
            return invalid("stiffness and mass must be symmetric");
        }
        Ok(Self {
            mesh: None,
            stiffness,
            mass,
            tail: DVector::zeros(0),
            quad_order: 8,
            assembly_tol: 0.0,
            error_estimate: 0.0,
        })
    }

    pub fn mesh(&self) -> Option<&Mesh> {
        self.mesh.as_ref()
    }

    pub(crate) fn require_mesh(&self) -> Result<&Mesh> {
        self.mesh
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("operation needs an operator assembled on a mesh".into()))
    }

    pub fn dim(&self) -> usize {
        self.stiffness.nrows()
    }

    fn check_dim(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.dim() {
            return invalid(format!(
                "coefficient vector has length {}, operator has {} degrees of freedom",
                u.len(),
                self.dim()
            ));
        }
        Ok(())
    }

    /// `uᵀ A v`.
    pub fn energy(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.stiffness * v))
    }

    /// `uᵀ M v`.
    pub fn l2_inner(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.mass * v))
    }

    /// `‖u‖_Z = √(uᵀAu)`.
    pub fn norm_z(&self, u: &DVector<f64>) -> Result<f64> {
        self.check_dim(u)?;
        Ok(self.energy(u, u).max(0.0).sqrt())
    }

    /// `‖u‖_{L²} = √(uᵀMu)`.
    pub fn norm_l2(&self, u: &DVector<f64>) -> Result<f64> {
        self.check_dim(u)?;
        Ok(self.l2_inner(u, u).max(0.0).sqrt())
    }

    /// `‖u‖_X = √(uᵀMu + uᵀAu)`.
    pub fn norm_x(&self, u: &DVector<f64>) -> Result<f64> {
        self.check_dim(u)?;
        Ok((self.l2_inner(u, u) + self.energy(u, u)).max(0.0).sqrt())
    }

    /// `ℓ_i = ∫_Ω g φ_i` by per-element Gauss quadrature.
    pub fn load_vector<G: Fn(f64) -> f64>(&self, g: G) -> Result<DVector<f64>> {
        let mesh = self.require_mesh()?;
        let rule = gauss_legendre(self.quad_order.max(2));
        let h = mesh.h();
        let mut out = DVector::zeros(self.dim());
        for e in 0..mesh.n_elements() {
            let x0 = mesh.nodes[e];
            for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
                let gx = g(x0 + h * xi) * w * h;
                if let Some(i) = mesh.dof(e) {
                    out[i] += gx * (1.0 - xi);
                }
                if let Some(i) = mesh.dof(e + 1) {
                    out[i] += gx * xi;
                }
            }
        }
        Ok(out)
    }

    /// `∫_Ω w(x) φ_i φ_j dx` by per-element Gauss quadrature.
    pub fn weighted_mass<W: Fn(f64) -> f64>(&self, w: W) -> Result<DMatrix<f64>> {
        let mesh = self.require_mesh()?;
        let rule = gauss_legendre(self.quad_order.max(2));
        let h = mesh.h();
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for e in 0..mesh.n_elements() {
            let x0 = mesh.nodes[e];
            let dofs = [mesh.dof(e), mesh.dof(e + 1)];
            for (xi, wt) in rule.nodes.iter().zip(&rule.weights) {
                let psi = [1.0 - xi, *xi];
                let scale = w(x0 + h * xi) * wt * h;
                for p in 0..2 {
                    for q in 0..2 {
                        if let (Some(i), Some(j)) = (dofs[p], dofs[q]) {
                            out[(i, j)] += scale * psi[p] * psi[q];
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Exact P1 mass matrix on the interior hats.
fn mass_matrix(mesh: &Mesh) -> DMatrix<f64> {
    let m = mesh.interior_count();
    let h = mesh.h();
    DMatrix::from_fn(m, m, |i, j| match i.abs_diff(j) {
        0 => 2.0 * h / 3.0,
        1 => h / 6.0,
        _ => 0.0,
    })
}

/// Relative node offsets (w.r.t. the left node of `E`) touched by the pair
/// `(E, E + d)`.
fn local_nodes(d: i64) -> Vec<i64> {
    let mut v = vec![0, 1, d, d + 1];
    v.sort_unstable();
    v.dedup();
    v
}

/// `w_p(ξ, η) = φ_p(x) − φ_p(y)` for `x = x_E + hξ`, `y = x_{E+d} + hη`.
fn difference_values(nodes: &[i64], d: i64, xi: f64, eta: f64, out: &mut [f64]) {
    for (p, &r) in nodes.iter().enumerate() {
        let mut w = 0.0;
        if r == 0 {
            w += 1.0 - xi;
        } else if r == 1 {
            w += xi;
        }
        if r == d {
            w -= 1.0 - eta;
        } else if r == d + 1 {
            w -= eta;
        }
        out[p] = w;
    }
}

/// `Q_pq(t) = ∫_{ξ: ξ, ξ−t ∈ [0,1]} w_p w_q dξ` (exact: degree 2 in ξ).
fn inner_products(nodes: &[i64], d: i64, t: f64, rule3: &Rule, out: &mut [f64]) {
    let n = nodes.len();
    out.iter_mut().for_each(|v| *v = 0.0);
    let lo = t.max(0.0);
    let hi = (1.0 + t).min(1.0);
    if hi <= lo {
        return;
    }
    let len = hi - lo;
    let mut w = [0.0; 4];
    for (x, wt) in rule3.nodes.iter().zip(&rule3.weights) {
        let xi = lo + len * x;
        difference_values(nodes, d, xi, xi - t, &mut w);
        for p in 0..n {
            for q in p..n {
                out[p * n + q] += wt * len * w[p] * w[q];
            }
        }
    }
}

struct PairRules {
    legendre: Rule,
    jacobi: Rule,
    graded: Rule,
}

impl PairRules {
    fn new(order: usize, s: f64) -> Result<Self> {
        Ok(Self {
            legendre: gauss_legendre(order),
            jacobi: gauss_jacobi(order, 1.0 - 2.0 * s)?,
            graded: gauss_legendre(order),
        })
    }
}

/// Splits `[lo, hi]` so that no panel is longer than half its distance to a
/// singular point lying `dist` outside the interval.
fn panels(lo: f64, hi: f64, dist: f64) -> Vec<(f64, f64)> {
    let count = ((hi - lo) / (0.5 * dist)).ceil().max(1.0) as usize;
    let w = (hi - lo) / count as f64;
    (0..count).map(|i| (lo + w * i as f64, lo + w * (i + 1) as f64)).collect()
}

/// Local matrix (upper triangle, row-major in `nodes`) of the Ω×Ω double
/// integral for offset `d`.
fn pair_matrix(k: &Kernel, h: f64, d: i64, rules: &PairRules) -> Vec<f64> {
    let nodes = local_nodes(d);
    let n = nodes.len();
    let mut acc = vec![0.0; n * n];
    let mut q = vec![0.0; n * n];
    let rule3 = gauss_legendre(3);
    let s = k.order();
    let c = k.singular_coefficient();
    let custom = matches!(k.family(), crate::kernel::KernelFamily::Custom);

    for (lo, hi) in [(-1.0_f64, 0.0_f64), (0.0, 1.0)] {
        let df = d as f64;
        let singular_at = if df == lo {
            Some(1.0)
        } else if df == hi {
            Some(-1.0)
        } else {
            None
        };
        match singular_at {
            None => {
                let dist = (df - lo).abs().min((df - hi).abs());
                for (plo, phi) in panels(lo, hi, dist) {
                    for (x, wt) in rules.legendre.nodes.iter().zip(&rules.legendre.weights) {
                        let t = plo + (phi - plo) * x;
                        inner_products(&nodes, d, t, &rule3, &mut q);
                        let kv = k.evaluate(h * (t - df)) * wt * (phi - plo) * h * h;
                        for (a, b) in acc.iter_mut().zip(&q) {
                            *a += kv * b;
                        }
                    }
                }
            }
            Some(dir) => {
                // t = d + dir·σ, σ ∈ [0, 1]; Q(σ)/σ² is a polynomial.
                let lead = c * h.powf(1.0 - 2.0 * s);
                for (sig, wt) in rules.jacobi.nodes.iter().zip(&rules.jacobi.weights) {
                    let t = df + dir * sig;
                    inner_products(&nodes, d, t, &rule3, &mut q);
                    let scale = lead * wt / (sig * sig);
                    for (a, b) in acc.iter_mut().zip(&q) {
                        *a += scale * b;
                    }
                }
                if custom {
                    let grading = 2.0 / (2.0 - 2.0 * s);
                    let mut rem = vec![0.0; n * n];
                    for idx in 0..n * n {
                        let (p, qq) = (idx / n, idx % n);
                        if qq < p {
                            continue;
                        }
                        rem[idx] = graded_gauss(&rules.graded, grading, 6, |sig| {
                            let t = df + dir * sig;
                            let mut buf = vec![0.0; n * n];
                            inner_products(&nodes, d, t, &rule3, &mut buf);
                            k.remainder(h * dir * sig) * buf[idx]
                        });
                    }
                    for (a, b) in acc.iter_mut().zip(&rem) {
                        *a += h * h * b;
                    }
                }
            }
        }
    }
    acc
}

/// `2∫_E ψ_p ψ_q κ` on element `e` for the local nodes `(e, e+1)`
/// (upper triangle as `[00, 01, 11]`).
fn tail_element(k: &Kernel, mesh: &Mesh, e: usize, legendre: &Rule, jacobi: &Rule, graded: &Rule) -> Result<[f64; 3]> {
    let n = mesh.n_elements();
    let h = mesh.h();
    let s = k.order();
    let c = k.singular_coefficient();
    let mut out = [0.0; 3];
    let products = |xi: f64| [(1.0 - xi) * (1.0 - xi), (1.0 - xi) * xi, xi * xi];
    let is_custom = matches!(k.family(), crate::kernel::KernelFamily::Custom);

    // Left tail: distance to a is h(e + ξ).
    if e == 0 {
        // Only node 1 is a dof here; ψ₁² = ξ². κ_L(hξ) = c(hξ)^{-2s}/(2s) + rest.
        let lead: f64 = jacobi.weights.iter().sum::<f64>() * c * h.powf(-2.0 * s) / (2.0 * s);
        out[2] += 2.0 * h * lead;
        if is_custom {
            let mut err = None;
            let rest = graded_gauss(graded, 1.0, 6, |xi| {
                if xi <= 0.0 {
                    return 0.0;
                }
                match k.tail_integral(h * xi) {
                    Ok(v) => xi * xi * (v - c * (h * xi).powf(-2.0 * s) / (2.0 * s)),
                    Err(er) => {
                        err = Some(er);
                        0.0
                    }
                }
            });
            if let Some(er) = err {
                return Err(er);
            }
            out[2] += 2.0 * h * rest;
        }
    } else {
        for (plo, phi) in panels(0.0, 1.0, e as f64) {
            for (x, w) in legendre.nodes.iter().zip(&legendre.weights) {
                let xi = plo + (phi - plo) * x;
                let kv = k.tail_integral(h * (e as f64 + xi))?;
                let pr = products(xi);
                for j in 0..3 {
                    out[j] += 2.0 * h * w * (phi - plo) * kv * pr[j];
                }
            }
        }
    }

    // Right tail: distance to b is h(N − e − ξ).
    if e == n - 1 {
        // Only node e is a dof; ψ₀² = (1−ξ)², singular at ξ = 1.
        let lead: f64 = jacobi.weights.iter().sum::<f64>() * c * h.powf(-2.0 * s) / (2.0 * s);
        out[0] += 2.0 * h * lead;
        if is_custom {
            let mut err = None;
            let rest = graded_gauss(graded, 1.0, 6, |r| {
                if r <= 0.0 {
                    return 0.0;
                }
                match k.tail_integral(h * r) {
                    Ok(v) => r * r * (v - c * (h * r).powf(-2.0 * s) / (2.0 * s)),
                    Err(er) => {
                        err = Some(er);
                        0.0
                    }
                }
            });
            if let Some(er) = err {
                return Err(er);
            }
            out[0] += 2.0 * h * rest;
        }
    } else {
        for (plo, phi) in panels(0.0, 1.0, (n - e - 1) as f64) {
            for (x, w) in legendre.nodes.iter().zip(&legendre.weights) {
                let xi = plo + (phi - plo) * x;
                let kv = k.tail_integral(h * (n as f64 - e as f64 - xi))?;
                let pr = products(xi);
                for j in 0..3 {
                    out[j] += 2.0 * h * w * (phi - plo) * kv * pr[j];
                }
            }
        }
    }
    Ok(out)
}

/// Local Ω×Ω matrices for every offset together with their error estimates
/// (difference between rules of order `q` and `q + 4`).
struct OffsetTable {
    n_elements: usize,
    values: Vec<Vec<f64>>,
    errors: Vec<Vec<f64>>,
}

impl OffsetTable {
    fn build(k: &Kernel, mesh: &Mesh, order: usize) -> Result<Self> {
        let n = mesh.n_elements();
        let h = mesh.h();
        let coarse = PairRules::new(order, k.order())?;
        let fine = PairRules::new(order + 4, k.order())?;
        let mut values = Vec::with_capacity(2 * n - 1);
        let mut errors = Vec::with_capacity(2 * n - 1);
        for d in -(n as i64 - 1)..=(n as i64 - 1) {
            let lo = pair_matrix(k, h, d, &coarse);
            let hi = pair_matrix(k, h, d, &fine);
            errors.push(lo.iter().zip(&hi).map(|(a, b)| (a - b).abs()).collect());
            values.push(hi);
        }
        Ok(Self { n_elements: n, values, errors })
    }

    fn get(&self, d: i64) -> (&[f64], &[f64]) {
        let idx = (d + self.n_elements as i64 - 1) as usize;
        (&self.values[idx], &self.errors[idx])
    }
}

/// Assembles stiffness, mass and tail weights for kernel `k` on `mesh`.
///
/// Fails with [`Error::KernelRejected`] when the kernel audit does not pass
/// (unless `skip_audit`), and with [`Error::AssemblyAccuracy`] when the
/// estimated quadrature error of some entry exceeds `assembly_tol`.
pub fn assemble(mesh: &Mesh, k: &Kernel, opts: &AssemblyOptions) -> Result<AssembledOperator> {
    if opts.quad_order < 3 {
        return invalid(format!("quad_order = {} must be at least 3", opts.quad_order));
    }
    if !(opts.assembly_tol > 0.0) {
        return invalid(format!("assembly_tol = {} must be positive", opts.assembly_tol));
    }
    if k.dim() != 1 {
        return invalid(format!("discretization is one-dimensional; kernel has n = {}", k.dim()));
    }
    if !opts.skip_audit {
        let audit = audit_kernel(k, 1e-10, 64)?;
        if !(audit.k1_holds && audit.k2_holds) {
            return Err(Error::KernelRejected(format!(
                "k1_holds = {} (integral {}), k2_holds = {} (worst ratio {})",
                audit.k1_holds, audit.k1_integral, audit.k2_holds, audit.k2_worst_ratio
            )));
        }
    }

    let n = mesh.n_elements();
    let m = mesh.interior_count();
    let table = OffsetTable::build(k, mesh, opts.quad_order)?;

    let mut stiffness = DMatrix::<f64>::zeros(m, m);
    let mut err = DMatrix::<f64>::zeros(m, m);

    // Fixed enumeration order (offset, then element) keeps the result
    // bit-reproducible.
    for d in -(n as i64 - 1)..=(n as i64 - 1) {
        let nodes = local_nodes(d);
        let ln = nodes.len();
        let (vals, errs) = table.get(d);
        let e_lo = 0.max(-d) as usize;
        let e_hi = (n as i64).min(n as i64 - d) as usize;
        for e in e_lo..e_hi {
            for p in 0..ln {
                let Some(i) = mesh.dof((e as i64 + nodes[p]) as usize) else { continue };
                for q in p..ln {
                    let Some(j) = mesh.dof((e as i64 + nodes[q]) as usize) else { continue };
                    let (r, c) = if i <= j { (i, j) } else { (j, i) };
                    let v = vals[p * ln + q];
                    let ev = errs[p * ln + q];
                    stiffness[(r, c)] += v;
                    err[(r, c)] += ev;
                }
            }
        }
    }

    // Tail term 2∫ φ_i φ_j κ.
    let s = k.order();
    let lg = gauss_legendre(opts.quad_order);
    let lg_fine = gauss_legendre(opts.quad_order + 4);
    let jac = gauss_jacobi(opts.quad_order, 2.0 - 2.0 * s)?;
    let jac_fine = gauss_jacobi(opts.quad_order + 4, 2.0 - 2.0 * s)?;
    for e in 0..n {
        let lo = tail_element(k, mesh, e, &lg, &jac, &lg)?;
        let hi = tail_element(k, mesh, e, &lg_fine, &jac_fine, &lg_fine)?;
        let dofs = [mesh.dof(e), mesh.dof(e + 1)];
        let slots = [(0usize, 0usize, 0usize), (0, 1, 1), (1, 1, 2)];
        for (p, q, idx) in slots {
            if let (Some(i), Some(j)) = (dofs[p], dofs[q]) {
                let (r, c) = if i <= j { (i, j) } else { (j, i) };
                stiffness[(r, c)] += hi[idx];
                err[(r, c)] += (hi[idx] - lo[idx]).abs();
            }
        }
    }

    // Mirror the upper triangle.
    for i in 0..m {
        for j in 0..i {
            stiffness[(i, j)] = stiffness[(j, i)];
            err[(i, j)] = err[(j, i)];
        }
    }

    let (mut worst, mut wr, mut wc) = (0.0_f64, 0, 0);
    for j in 0..m {
        for i in 0..=j {
            if err[(i, j)] > worst {
                worst = err[(i, j)];
                wr = i;
                wc = j;
            }
        }
    }
    if worst > opts.assembly_tol {
        return Err(Error::AssemblyAccuracy { row: wr, col: wc, estimate: worst, tol: opts.assembly_tol });
    }

    let tail = DVector::from_iterator(
        m,
        mesh.interior_nodes().iter().map(|&x| tail_weight(mesh, k, x)).collect::<Result<Vec<_>>>()?,
    );

    Ok(AssembledOperator {
        mesh: Some(mesh.clone()),
        stiffness,
        mass: mass_matrix(mesh),
        tail,
        quad_order: opts.quad_order,
        assembly_tol: opts.assembly_tol,
        error_estimate: worst,
    })
}

/// Same as [`AssembledOperator::norm_z`].
pub fn norm_z(op: &AssembledOperator, u: &DVector<f64>) -> Result<f64> {
    op.norm_z(u)
}

/// Same as [`AssembledOperator::norm_x`].
pub fn norm_x(op: &AssembledOperator, u: &DVector<f64>) -> Result<f64> {
    op.norm_x(u)
}

/// Same as [`AssembledOperator::norm_l2`].
pub fn norm_l2(op: &AssembledOperator, u: &DVector<f64>) -> Result<f64> {
    op.norm_l2(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::make_fractional_kernel;

    #[test]
    fn uniform_mesh_nodes() {
        let m = build_uniform_mesh(-1.0, 1.0, 4).unwrap();
        assert_eq!(m.nodes(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(m.interior_count(), 3);
        let m = build_uniform_mesh(0.0, 1.0, 2).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(m.interior_count(), 1);
    }

    #[test]
    fn mesh_preconditions() {
        assert!(matches!(build_uniform_mesh(1.0, -1.0, 4), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_uniform_mesh(0.0, 1.0, 1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn hats_vanish_on_boundary_and_outside() {
        let m = build_uniform_mesh(-1.0, 1.0, 8).unwrap();
        for i in 0..m.interior_count() {
            assert_eq!(m.hat(i, -1.0), 0.0);
            assert_eq!(m.hat(i, 1.0), 0.0);
            assert_eq!(m.hat(i, 1.7), 0.0);
            assert_eq!(m.hat(i, m.interior_nodes()[i]), 1.0);
        }
    }

    #[test]
    fn tail_weight_closed_form_and_symmetry() {
        let mesh = build_uniform_mesh(-1.0, 1.0, 4).unwrap();
        let k = make_fractional_kernel(0.5, 1).unwrap();
        assert!((tail_weight(&mesh, &k, 0.0).unwrap() - 2.0).abs() < 1e-15);
        let k = make_fractional_kernel(0.3, 1).unwrap();
        for x in [0.1, 0.5, 0.9] {
            assert_eq!(tail_weight(&mesh, &k, x).unwrap(), tail_weight(&mesh, &k, -x).unwrap());
        }
        assert!(matches!(tail_weight(&mesh, &k, 1.0), Err(Error::SingularEvaluation { .. })));
        assert!(matches!(tail_weight(&mesh, &k, -1.5), Err(Error::SingularEvaluation { .. })));
    }

    #[test]
    fn mass_entries_on_coarse_mesh() {
        let mesh = build_uniform_mesh(-1.0, 1.0, 4).unwrap();
        let m = mass_matrix(&mesh);
        for i in 0..3 {
            assert!((m[(i, i)] - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((m[(0, 1)] - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(m[(0, 2)], 0.0);
    }

    #[test]
    fn assembly_is_symmetric_and_rejects_low_order() {
        let mesh = build_uniform_mesh(-1.0, 1.0, 8).unwrap();
        let k = make_fractional_kernel(0.5, 1).unwrap();
        let op = assemble(&mesh, &k, &AssemblyOptions::default()).unwrap();
        assert_eq!(op.stiffness, op.stiffness.transpose());
        assert!(assemble(&mesh, &k, &AssemblyOptions::with_order(2)).is_err());
    }

    #[test]
    fn norms_and_dimension_checks() {
        let mesh = build_uniform_mesh(-1.0, 1.0, 8).unwrap();
        let k = make_fractional_kernel(0.5, 1).unwrap();
        let op = assemble(&mesh, &k, &AssemblyOptions::default()).unwrap();
        let zero = DVector::zeros(7);
        assert_eq!(op.norm_z(&zero).unwrap(), 0.0);
        assert_eq!(op.norm_x(&zero).unwrap(), 0.0);
        assert_eq!(op.norm_l2(&zero).unwrap(), 0.0);
        let u = DVector::from_fn(7, |i, _| (i as f64 * 0.7).sin() + 0.2);
        let nz = op.norm_z(&u).unwrap();
        assert!((op.norm_z(&(&u * 2.0)).unwrap() - 2.0 * nz).abs() < 1e-13 * nz);
        let nx = op.norm_x(&u).unwrap();
        let nl = op.norm_l2(&u).unwrap();
        assert!((nz * nz + nl * nl - nx * nx).abs() < 1e-12 * nx * nx);
        assert!(nx >= nz && nx >= nl);
        assert!(op.norm_z(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn interpolation_reproduces_nodal_values() {
        let mesh = build_uniform_mesh(0.0, 2.0, 4).unwrap();
        let u = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(mesh.interpolate(&u, 0.5), 1.0);
        assert_eq!(mesh.interpolate(&u, 1.0), -2.0);
        assert!((mesh.interpolate(&u, 0.25) - 0.5).abs() < 1e-15);
        assert_eq!(mesh.interpolate(&u, 2.0), 0.0);
        assert!((mesh.interpolate(&u, 1.75) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn offset_local_matrices_are_translation_consistent() {
        // the far-field offset entry equals −2∫∫ψ(x)ψ(y)K by direct tensor Gauss
        let k = make_fractional_kernel(0.4, 1).unwrap();
        let h = 0.25;
        let rules = PairRules::new(10, 0.4).unwrap();
        let d = 3;
        let vals = pair_matrix(&k, h, d, &rules);
        let nodes = local_nodes(d);
        let ln = nodes.len();
        // node 1 of E vs node d of F: cross term −∫∫ ξ (1−η) K
        let p = nodes.iter().position(|&r| r == 1).unwrap();
        let q = nodes.iter().position(|&r| r == d).unwrap();
        let g = gauss_legendre(16);
        let mut direct = 0.0;
        for (xi, wx) in g.nodes.iter().zip(&g.weights) {
            for (eta, wy) in g.nodes.iter().zip(&g.weights) {
                let z = h * (xi - eta) - d as f64 * h;
                direct -= wx * wy * xi * (1.0 - eta) * k.evaluate(z) * h * h;
            }
        }
        assert!((vals[p.min(q) * ln + p.max(q)] - direct).abs() < 1e-12 * direct.abs());
    }
}
