//! Energy `J(u) = ½ uᵀAu − ∫_Ω F(x, u_h)`, its gradient, and the solvers for
//! both existence cases: damped Newton minimization when the asymptotic
//! slopes lie below `λ₁`, and nonresonant Newton for a slope gap
//! `(λ_k, λ_{k+1})`. Also the multi-start uniqueness probe and the sampling
//! probe of the saddle geometry on `H_k` and `P_{k+1}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::AssembledOperator;
use crate::error::{invalid, Error, Result};
use crate::nonlinearity::{
    check_f2_gap, classify, CaseClassification, GapCheck, NonlinearitySpec, Profile, GAP_MARGIN,
};
use crate::quadrature::gauss_legendre;
use crate::spectral::Spectrum;

/// Quadrature point of the per-element rule used for all nonlinear terms.
#[derive(Debug, Clone, Copy)]
struct QPoint {
    x: f64,
    weight: f64,
    dofs: [Option<usize>; 2],
    psi: [f64; 2],
}

fn quadrature_points(op: &AssembledOperator) -> Result<Vec<QPoint>> {
    let mesh = op.require_mesh()?;
    let rule = gauss_legendre(op.quad_order.max(2));
    let h = mesh.h();
    let mut pts = Vec::with_capacity(mesh.n_elements() * rule.len());
    for e in 0..mesh.n_elements() {
        let x0 = mesh.nodes()[e];
        let dofs = [mesh.dof(e), mesh.dof(e + 1)];
        for (xi, w) in rule.nodes.iter().zip(&rule.weights) {
            pts.push(QPoint { x: x0 + h * xi, weight: w * h, dofs, psi: [1.0 - xi, *xi] });
        }
    }
    Ok(pts)
}

impl QPoint {
    fn value(&self, u: &DVector<f64>) -> f64 {
        self.dofs.iter().zip(&self.psi).map(|(d, p)| d.map_or(0.0, |i| u[i] * p)).sum()
    }
}

/// Evaluates `J`, `J′` and the Jacobian of the nonlinear term for one
/// operator/nonlinearity pair.
pub struct Energy<'a> {
    op: &'a AssembledOperator,
    spec: &'a NonlinearitySpec,
    points: Vec<QPoint>,
}

impl<'a> Energy<'a> {
    pub fn new(op: &'a AssembledOperator, spec: &'a NonlinearitySpec) -> Result<Self> {
        Ok(Self { op, spec, points: quadrature_points(op)? })
    }

    fn check(&self, u: &DVector<f64>) -> Result<()> {
        if u.len() != self.op.dim() {
            return invalid(format!("vector length {} does not match operator size {}", u.len(), self.op.dim()));
        }
        Ok(())
    }

    pub fn value(&self, u: &DVector<f64>) -> Result<f64> {
        self.check(u)?;
        let mut nonlinear = 0.0;
        for q in &self.points {
            nonlinear += q.weight * self.spec.primitive(q.x, q.value(u))?;
        }
        Ok(0.5 * self.op.energy(u, u) - nonlinear)
    }

    /// `b(u)_i = ∫ f(x, u_h) φ_i`.
    pub fn load(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut b = DVector::zeros(self.op.dim());
        for q in &self.points {
            let fv = q.weight * self.spec.f(q.x, q.value(u));
            for (d, p) in q.dofs.iter().zip(&q.psi) {
                if let Some(i) = d {
                    b[*i] += fv * p;
                }
            }
        }
        b
    }

    /// `A u − b(u)`.
    pub fn gradient(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(u)?;
        Ok(&self.op.stiffness * u - self.load(u))
    }

    /// `D(u)_ij = ∫ ∂_t f(x, u_h) φ_i φ_j`.
    pub fn jacobian_mass(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let m = self.op.dim();
        let mut d = DMatrix::zeros(m, m);
        for q in &self.points {
            let fp = q.weight * self.spec.dfdt(q.x, q.value(u));
            for a in 0..2 {
                let Some(i) = q.dofs[a] else { continue };
                for b in 0..2 {
                    let Some(j) = q.dofs[b] else { continue };
                    d[(i, j)] += fp * q.psi[a] * q.psi[b];
                }
            }
        }
        d
    }

    /// Hessian `A − D(u)`.
    pub fn hessian(&self, u: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(u)?;
        let h = &self.op.stiffness - self.jacobian_mass(u);
        Ok((&h + h.transpose()) * 0.5)
    }

    /// `max_i |(Au − b(u))_i| / (1 + ‖Au‖_∞)`.
    pub fn residual(&self, u: &DVector<f64>) -> Result<f64> {
        self.check(u)?;
        let au = &self.op.stiffness * u;
        let g = &au - self.load(u);
        Ok(g.amax() / (1.0 + au.amax()))
    }
}

/// `J(u)`.
pub fn eval_j(op: &AssembledOperator, spec: &NonlinearitySpec, u: &DVector<f64>) -> Result<f64> {
    Energy::new(op, spec)?.value(u)
}

/// `J′(u)` as the coefficient vector `A u − b(u)`.
pub fn eval_gradient(op: &AssembledOperator, spec: &NonlinearitySpec, u: &DVector<f64>) -> Result<DVector<f64>> {
    Energy::new(op, spec)?.gradient(u)
}

/// Normalized weak-form residual tested against every basis function.
pub fn residual_weakform(op: &AssembledOperator, spec: &NonlinearitySpec, u: &DVector<f64>) -> Result<f64> {
    Energy::new(op, spec)?.residual(u)
}

/// Number of negative eigenvalues of `A − D(u)`.
pub fn morse_index(op: &AssembledOperator, spec: &NonlinearitySpec, u: &DVector<f64>) -> Result<usize> {
    let h = Energy::new(op, spec)?.hessian(u)?;
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 100 * op.dim().max(10))
        .ok_or_else(|| Error::Numeric("Hessian eigensolver did not converge".into()))?;
    Ok(eig.eigenvalues.iter().filter(|&&v| v < 0.0).count())
}

/// Controls for the Newton solvers.
#[derive(Debug, Clone, Serialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Backtracking contraction factor.
    pub contraction: f64,
    /// Number of starts; more than one attaches a uniqueness verdict.
    pub starts: usize,
    pub seed: u64,
    #[serde(skip)]
    pub initial: Option<DVector<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-9, max_iter: 200, contraction: 0.5, starts: 1, seed: 42, initial: None }
    }
}

/// Outcome of a multi-start uniqueness check.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum UniquenessVerdict {
    Unique {
        max_distance: f64,
        starts: usize,
        f2_verified: bool,
        seed: u64,
    },
    MultipleFound {
        max_distance: f64,
        starts: usize,
        f2_verified: bool,
        seed: u64,
        /// Distinct solutions found (`‖·‖_Z` separation above 1e-8).
        representatives: Vec<Vec<f64>>,
    },
    Inconclusive {
        failed_starts: usize,
        starts: usize,
        f2_verified: bool,
        seed: u64,
    },
    NotChecked,
}

/// Sampled evidence for the saddle geometry.
#[derive(Debug, Clone, Serialize)]
pub struct GeometryProbe {
    pub k: usize,
    pub radii: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    /// `max J/T²` on the `‖·‖_Z = T` sphere of `H_k`, per radius.
    pub head_max_ratio_z: Vec<f64>,
    /// `max J/‖u‖²_{L²}` over the same samples.
    pub head_max_ratio_l2: Vec<f64>,
    /// `max J` on the sphere, per radius.
    pub head_max_j: Vec<f64>,
    /// `min J/‖u‖²_Z` over samples of `P_{k+1}` with norms in `[T/10, T]`.
    pub tail_min_ratio_z: Vec<f64>,
    pub tail_min_ratio_l2: Vec<f64>,
    pub tail_min_j: Vec<f64>,
    /// `min J` over samples of `P_{k+1}` with `‖u‖_Z ≤ radii[0]`.
    pub tail_floor: f64,
    pub j_origin: f64,
    /// Ratio ordering at the largest radius: head max < tail min (for `k = 0`,
    /// tail min ratio > 0).
    pub ratios_separated: bool,
    /// `max J` on the `H_k` sphere at the largest radius lies below every
    /// sampled value of `J` on `P_{k+1}`.
    pub levels_separated: bool,
}

/// Controls for [`geometry_probe`].
#[derive(Debug, Clone)]
pub struct GeometryOptions {
    pub radii: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    /// Number of tail eigenvectors `e_{k+1}, e_{k+2}, …` added as anchor
    /// directions.
    pub anchors: usize,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        Self { radii: vec![10.0, 100.0, 1000.0], n_samples: 64, seed: 42, anchors: 8 }
    }
}

/// Solution and diagnostics of a solve.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(serialize_with = "ser_vec")]
    pub solution: DVector<f64>,
    pub case: CaseClassification,
    pub j_value: f64,
    pub residual_inf: f64,
    pub iterations: usize,
    pub converged: bool,
    pub f2: Option<GapCheck>,
    pub uniqueness: UniquenessVerdict,
    pub geometry: Option<GeometryProbe>,
    pub trace: Vec<f64>,
}

fn ser_vec<S: serde::Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

/// Result of [`linear_nonresonant_solve`].
#[derive(Debug, Clone)]
pub struct LinearSolve {
    pub solution: DVector<f64>,
    /// Index `k` of the gap `(λ_k, λ_{k+1})` containing the weight (`0` for
    /// weights below `λ₁`).
    pub gap: usize,
    /// Smallest `|U_ii|` of the LU factorization.
    pub min_pivot: f64,
    /// Largest `|S_ij|` of the system matrix.
    pub scale: f64,
}

/// Relative pivot floor below which a certified-nonresonant system counts as
/// singular.
pub const PIVOT_FLOOR: f64 = 1e-12;

fn gap_index(spectrum: &Spectrum, lo: f64, hi: f64) -> Result<usize> {
    let lam = spectrum.eigenvalues();
    if let Some(j) = lam.iter().position(|&l| l >= lo - GAP_MARGIN && l <= hi + GAP_MARGIN) {
        return Err(Error::Resonance(format!("weight range [{lo}, {hi}] touches λ_{} = {}", j + 1, lam[j])));
    }
    if hi < lam[0] {
        return Ok(0);
    }
    for k in 1..lam.len() {
        if lam[k - 1] < lo && hi < lam[k] {
            return Ok(k);
        }
    }
    if lo > lam[lam.len() - 1] {
        return invalid(format!("weight range [{lo}, {hi}] lies above the computed spectrum"));
    }
    Err(Error::Resonance(format!("weight range [{lo}, {hi}] spans several eigenvalues")))
}

/// Solves `(A − M_w) u = load` with `M_w = ∫ w φ_i φ_j` for a weight strictly
/// inside a gap of the spectrum, certifying nonsingularity through the LU
/// pivots.
pub fn linear_nonresonant_solve(
    op: &AssembledOperator,
    spectrum: &Spectrum,
    weight: &Profile,
    load: &DVector<f64>,
) -> Result<LinearSolve> {
    if load.len() != op.dim() {
        return invalid(format!("load length {} does not match operator size {}", load.len(), op.dim()));
    }
    let (lo, hi) = weight
        .range(spectrum.sample_points())
        .ok_or_else(|| Error::InvalidParameter("x-dependent weight needs a mesh".into()))?;
    let gap = gap_index(spectrum, lo, hi)?;
    let mw = match weight.as_constant() {
        Some(c) => &op.mass * c,
        None => op.weighted_mass(|x| weight.eval(x))?,
    };
    let system = &op.stiffness - mw;
    let scale = system.amax();
    let lu = system.lu();
    let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(min_pivot >= PIVOT_FLOOR * scale) {
        return Err(Error::NonresonanceContradiction { min_pivot, scale });
    }
    let solution = lu.solve(load).ok_or(Error::NonresonanceContradiction { min_pivot, scale })?;
    Ok(LinearSolve { solution, gap, min_pivot, scale })
}

struct NewtonOutcome {
    u: DVector<f64>,
    iterations: usize,
    trace: Vec<f64>,
}

fn non_convergence(iterations: usize, trace: Vec<f64>) -> Error {
    Error::NonConvergence { iterations, residual: trace.last().copied().unwrap_or(f64::NAN), trace }
}

/// Damped Newton minimization of `J` with Armijo backtracking; falls back to
/// the `Z`-gradient direction `−A⁻¹J′(u)` when the Hessian is not positive
/// definite or the Newton step is not a descent direction.
fn newton_minimize(energy: &Energy<'_>, u0: DVector<f64>, opts: &SolverOptions) -> Result<NewtonOutcome> {
    let op = energy.op;
    let a_chol = op
        .stiffness
        .clone()
        .cholesky()
        .ok_or_else(|| Error::AssemblyCorruption("stiffness matrix is not positive definite".into()))?;
    let mut u = u0;
    let mut trace = Vec::new();
    let mut j = energy.value(&u)?;
    for it in 0..=opts.max_iter {
        let res = energy.residual(&u)?;
        trace.push(res);
        if res <= opts.tol {
            return Ok(NewtonOutcome { u, iterations: it, trace });
        }
        if it == opts.max_iter {
            break;
        }
        let g = energy.gradient(&u)?;
        let h = energy.hessian(&u)?;
        let mut p = match h.cholesky() {
            Some(c) => -c.solve(&g),
            None => -a_chol.solve(&g),
        };
        let mut slope = g.dot(&p);
        if !(slope < 0.0) {
            p = -a_chol.solve(&g);
            slope = g.dot(&p);
        }
        let mut alpha = 1.0;
        let slack = 1e-13 * (1.0 + j.abs());
        loop {
            let trial = &u + &p * alpha;
            let jt = energy.value(&trial)?;
            if jt <= j + 1e-4 * alpha * slope + slack {
                u = trial;
                j = jt;
                break;
            }
            alpha *= opts.contraction;
            if alpha < 1e-14 {
                return Err(non_convergence(it + 1, trace));
            }
        }
    }
    Err(non_convergence(opts.max_iter, trace))
}

/// Newton iteration on `J′(u) = 0`.
///
/// With `certified` (slope condition verified) every Newton system is
/// nonsingular and the full step is taken; a singular system is then an
/// internal inconsistency. Otherwise the step is the minimum-norm solution of
/// the Newton system, restricted to a trust region in `‖·‖_Z` whose radius
/// starts at `‖u₀‖_Z + 1`; steps are accepted when the residual norm drops.
fn newton_saddle(
    energy: &Energy<'_>,
    u0: DVector<f64>,
    opts: &SolverOptions,
    certified: bool,
) -> Result<NewtonOutcome> {
    let op = energy.op;
    let mut radius = op.norm_z(&u0)? + 1.0;
    let mut u = u0;
    let mut trace = Vec::new();
    let mut g = energy.gradient(&u)?;
    let mut merit = g.norm();
    for it in 0..=opts.max_iter {
        let res = energy.residual(&u)?;
        trace.push(res);
        if res <= opts.tol {
            return Ok(NewtonOutcome { u, iterations: it, trace });
        }
        if it == opts.max_iter {
            break;
        }
        let h = energy.hessian(&u)?;
        if certified {
            let scale = h.amax();
            let lu = h.lu();
            let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
            if !(min_pivot >= PIVOT_FLOOR * scale) {
                return Err(Error::InternalInconsistency(format!(
                    "Newton system singular (min pivot {min_pivot:e}, scale {scale:e}) although the slope condition holds"
                )));
            }
            let p = lu.solve(&g).ok_or_else(|| Error::InternalInconsistency("Newton system singular".into()))?;
            u -= p;
            g = energy.gradient(&u)?;
            merit = g.norm();
            continue;
        }
        let eig = SymmetricEigen::try_new(h, f64::EPSILON, 100 * op.dim().max(10))
            .ok_or_else(|| Error::Numeric("Newton-system eigensolver did not converge".into()))?;
        let mu_max = eig.eigenvalues.amax();
        let coeffs = eig.eigenvectors.transpose() * &g;
        let scaled = DVector::from_iterator(
            coeffs.len(),
            coeffs.iter().zip(eig.eigenvalues.iter()).map(
                |(c, mu)| {
                    if mu.abs() > 1e-10 * mu_max {
                        c / mu
                    } else {
                        0.0
                    }
                },
            ),
        );
        let mut p = -(&eig.eigenvectors * scaled);
        let pn = op.norm_z(&p)?;
        let at_boundary = pn > radius;
        if at_boundary {
            p *= radius / pn;
        }
        let trial = &u + &p;
        let gt = energy.gradient(&trial)?;
        let mt = gt.norm();
        if mt < merit {
            u = trial;
            g = gt;
            merit = mt;
            if at_boundary {
                radius *= 2.0;
            }
        } else {
            radius = 0.25 * pn.min(radius);
            if radius < 1e-14 {
                return Err(non_convergence(it + 1, trace));
            }
        }
    }
    Err(non_convergence(opts.max_iter, trace))
}

fn initial_guess(op: &AssembledOperator, opts: &SolverOptions) -> Result<DVector<f64>> {
    match &opts.initial {
        Some(u) if u.len() != op.dim() => invalid("initial guess has the wrong length"),
        Some(u) => Ok(u.clone()),
        None => Ok(DVector::zeros(op.dim())),
    }
}

fn check_opts(opts: &SolverOptions) -> Result<()> {
    if !(opts.tol > 0.0)
        || opts.max_iter == 0
        || !(opts.contraction > 0.0 && opts.contraction < 1.0)
        || opts.starts == 0
    {
        return invalid("solver options need tol > 0, max_iter ≥ 1, contraction in (0,1), starts ≥ 1");
    }
    Ok(())
}

/// Coercive case (`sup ᾱ < λ₁`): minimizes `J` by damped Newton.
pub fn solve_case_a(
    op: &AssembledOperator,
    spectrum: &Spectrum,
    spec: &NonlinearitySpec,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    check_opts(opts)?;
    let case = classify(spec, spectrum);
    if case != CaseClassification::Coercive {
        return Err(Error::HypothesisGate(format!("coercive solver requires sup ᾱ < λ₁; classification is {case:?}")));
    }
    let energy = Energy::new(op, spec)?;
    let out = newton_minimize(&energy, initial_guess(op, opts)?, opts)?;
    let uniqueness = if opts.starts > 1 {
        multi_start(op, spectrum, &energy, opts, false, Mode::Minimize)?
    } else {
        UniquenessVerdict::NotChecked
    };
    Ok(SolveReport {
        j_value: energy.value(&out.u)?,
        residual_inf: *out.trace.last().expect("trace is never empty"),
        solution: out.u,
        case,
        iterations: out.iterations,
        converged: true,
        f2: None,
        uniqueness,
        geometry: None,
        trace: out.trace,
    })
}

/// Gap case (`λ_k < α̲ ≤ ᾱ < λ_{k+1}`): Newton on `J′ = 0`, undamped when the
/// slope condition is verified, trust-region damped otherwise.
pub fn solve_case_b(
    op: &AssembledOperator,
    spectrum: &Spectrum,
    spec: &NonlinearitySpec,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    check_opts(opts)?;
    let case = classify(spec, spectrum);
    let CaseClassification::Gap { k } = case else {
        return Err(Error::HypothesisGate(match case {
            CaseClassification::Unsupported { reason } => reason,
            other => format!("gap solver requires λ_k < α̲ ≤ ᾱ < λ_(k+1); classification is {other:?}"),
        }));
    };
    spectrum.check_split(k)?;
    let f2 = match check_f2_gap(spec, spectrum, k) {
        Ok(c) => Some(c),
        Err(Error::Unauditable(_)) => None,
        Err(e) => return Err(e),
    };
    let certified = f2.as_ref().is_some_and(|c| c.passed);
    let energy = Energy::new(op, spec)?;
    let out = newton_saddle(&energy, initial_guess(op, opts)?, opts, certified)?;
    let uniqueness = if opts.starts > 1 {
        multi_start(op, spectrum, &energy, opts, certified, Mode::Saddle)?
    } else {
        UniquenessVerdict::NotChecked
    };
    Ok(SolveReport {
        j_value: energy.value(&out.u)?,
        residual_inf: *out.trace.last().expect("trace is never empty"),
        solution: out.u,
        case,
        iterations: out.iterations,
        converged: true,
        f2,
        uniqueness,
        geometry: None,
        trace: out.trace,
    })
}

#[derive(Clone, Copy)]
enum Mode {
    Minimize,
    Saddle,
}

/// Residual tolerance used for multi-start comparisons; tighter than the
/// default so that distinct starts agree to well below 1e-8 in `‖·‖_Z`.
pub const UNIQUENESS_TOL: f64 = 1e-12;
/// Two solutions closer than this in `‖·‖_Z` are the same solution.
pub const SAME_SOLUTION: f64 = 1e-8;

/// Random start with eigen-coefficients uniform in `[−10, 10]`.
pub fn random_start(spectrum: &Spectrum, seed: u64, index: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64));
    let c = DVector::from_fn(spectrum.len(), |_, _| rng.random_range(-10.0..=10.0));
    spectrum.synthesize(&c)
}

fn multi_start(
    op: &AssembledOperator,
    spectrum: &Spectrum,
    energy: &Energy<'_>,
    opts: &SolverOptions,
    certified: bool,
    mode: Mode,
) -> Result<UniquenessVerdict> {
    let starts = opts.starts;
    let mut local = opts.clone();
    local.tol = opts.tol.min(UNIQUENESS_TOL);
    let results: Vec<Option<DVector<f64>>> = (0..starts)
        .into_par_iter()
        .map(|i| {
            let u0 = random_start(spectrum, opts.seed, i);
            let out = match mode {
                Mode::Minimize => newton_minimize(energy, u0, &local),
                Mode::Saddle => newton_saddle(energy, u0, &local, certified),
            };
            out.ok().map(|o| o.u)
        })
        .collect();
    let failed = results.iter().filter(|r| r.is_none()).count();
    if failed > 0 {
        return Ok(UniquenessVerdict::Inconclusive {
            failed_starts: failed,
            starts,
            f2_verified: certified,
            seed: opts.seed,
        });
    }
    let sols: Vec<DVector<f64>> = results.into_iter().flatten().collect();
    let mut max_distance = 0.0_f64;
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            max_distance = max_distance.max(op.norm_z(&(&sols[i] - &sols[j]))?);
        }
    }
    if max_distance <= SAME_SOLUTION {
        return Ok(UniquenessVerdict::Unique { max_distance, starts, f2_verified: certified, seed: opts.seed });
    }
    let mut reps: Vec<DVector<f64>> = Vec::new();
    for s in sols {
        let mut fresh = true;
        for r in &reps {
            if op.norm_z(&(&s - r))? <= SAME_SOLUTION {
                fresh = false;
                break;
            }
        }
        if fresh {
            reps.push(s);
        }
    }
    Ok(UniquenessVerdict::MultipleFound {
        max_distance,
        starts,
        f2_verified: certified,
        seed: opts.seed,
        representatives: reps.iter().map(|r| r.iter().copied().collect()).collect(),
    })
}

/// Runs the gap-case Newton iteration from `n_starts` seeded random starts
/// and compares the solutions. This does not require the classification gate,
/// so it can also exhibit non-uniqueness in resonant configurations.
pub fn uniqueness_probe(
    op: &AssembledOperator,
    spectrum: &Spectrum,
    spec: &NonlinearitySpec,
    k: usize,
    n_starts: usize,
    seed: u64,
) -> Result<UniquenessVerdict> {
    if n_starts < 2 {
        return invalid("uniqueness probe needs at least two starts");
    }
    let certified = match check_f2_gap(spec, spectrum, k) {
        Ok(c) => c.passed,
        Err(Error::Unauditable(_)) => false,
        Err(e) => return Err(e),
    };
    let energy = Energy::new(op, spec)?;
    let opts = SolverOptions { starts: n_starts, seed, ..SolverOptions::default() };
    multi_start(op, spectrum, &energy, &opts, certified, Mode::Saddle)
}

fn sample_direction(rng: &mut ChaCha8Rng, spectrum: &Spectrum, from: usize, to: usize) -> DVector<f64> {
    // Gaussian coefficients scaled by λ_j^{-1/2}: uniform direction in ‖·‖_Z.
    let mut c = DVector::zeros(spectrum.len());
    for j in from..to {
        let y: f64 = rng.sample(StandardNormal);
        c[j] = y / spectrum.eigenvalues()[j].sqrt();
    }
    spectrum.synthesize(&c)
}

/// Samples `J` on spheres of `H_k` and on shells of `P_{k+1}`.
///
/// `k = 0` probes the coercive geometry: `H_0 = {0}` and `P_1` is the whole
/// space.
pub fn geometry_probe(
    op: &AssembledOperator,
    spectrum: &Spectrum,
    spec: &NonlinearitySpec,
    k: usize,
    opts: &GeometryOptions,
) -> Result<GeometryProbe> {
    let m = spectrum.len();
    if k >= m {
        return invalid(format!("k = {k} must be below the number of eigenpairs {m}"));
    }
    if k > 0 {
        spectrum.check_split(k)?;
    }
    if opts.radii.is_empty() || opts.radii.windows(2).any(|w| !(w[0] < w[1])) || opts.radii[0] <= 0.0 {
        return invalid("radii must be a nonempty ascending list of positive values");
    }
    if opts.n_samples == 0 {
        return invalid("n_samples must be positive");
    }
    let energy = Energy::new(op, spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let zero = DVector::zeros(m);
    let j_origin = energy.value(&zero)?;

    let mut probe = GeometryProbe {
        k,
        radii: opts.radii.clone(),
        n_samples: opts.n_samples,
        seed: opts.seed,
        head_max_ratio_z: Vec::new(),
        head_max_ratio_l2: Vec::new(),
        head_max_j: Vec::new(),
        tail_min_ratio_z: Vec::new(),
        tail_min_ratio_l2: Vec::new(),
        tail_min_j: Vec::new(),
        tail_floor: f64::INFINITY,
        j_origin,
        ratios_separated: false,
        levels_separated: false,
    };

    let mut tail_min_all = f64::INFINITY;
    for &t in &opts.radii {
        if k > 0 {
            let mut dirs: Vec<DVector<f64>> = Vec::new();
            for j in 1..=k {
                let e = spectrum.eigenvector(j);
                dirs.push(-&e);
                dirs.push(e);
            }
            for _ in 0..opts.n_samples {
                dirs.push(sample_direction(&mut rng, spectrum, 0, k));
            }
            let (mut rz, mut rl, mut jm) = (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
            for d in dirs {
                let nz = op.norm_z(&d)?;
                let u = d * (t / nz);
                let jv = energy.value(&u)?;
                let l2 = op.l2_inner(&u, &u);
                rz = rz.max(jv / (t * t));
                rl = rl.max(jv / l2);
                jm = jm.max(jv);
            }
            probe.head_max_ratio_z.push(rz);
            probe.head_max_ratio_l2.push(rl);
            probe.head_max_j.push(jm);
        }

        let mut dirs: Vec<(DVector<f64>, f64)> = Vec::new();
        for j in (k + 1)..=(k + opts.anchors).min(m) {
            let e = spectrum.eigenvector(j);
            dirs.push((-&e, t));
            dirs.push((e, t));
        }
        for _ in 0..opts.n_samples {
            let d = sample_direction(&mut rng, spectrum, k, m);
            let rho = t * 10f64.powf(-rng.random_range(0.0..=1.0));
            dirs.push((d, rho));
        }
        let (mut rz, mut rl, mut jm) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for (d, rho) in dirs {
            let nz = op.norm_z(&d)?;
            let u = d * (rho / nz);
            let jv = energy.value(&u)?;
            let l2 = op.l2_inner(&u, &u);
            rz = rz.min(jv / (rho * rho));
            rl = rl.min(jv / l2);
            jm = jm.min(jv);
        }
        tail_min_all = tail_min_all.min(jm);
        probe.tail_min_ratio_z.push(rz);
        probe.tail_min_ratio_l2.push(rl);
        probe.tail_min_j.push(jm);
    }

    // Small-norm floor of J on P_{k+1}.
    let r0 = opts.radii[0];
    for _ in 0..opts.n_samples {
        let d = sample_direction(&mut rng, spectrum, k, m);
        let rho = r0 * rng.random_range(0.0..=1.0);
        let nz = op.norm_z(&d)?;
        let jv = energy.value(&(d * (rho / nz)))?;
        probe.tail_floor = probe.tail_floor.min(jv);
    }
    probe.tail_floor = probe.tail_floor.min(j_origin);
    tail_min_all = tail_min_all.min(probe.tail_floor);

    let last_tail = *probe.tail_min_ratio_z.last().expect("radii nonempty");
    if k == 0 {
        probe.ratios_separated = last_tail > 0.0;
        probe.levels_separated = probe.tail_floor > f64::NEG_INFINITY;
    } else {
        let last_head = *probe.head_max_ratio_z.last().expect("radii nonempty");
        probe.ratios_separated = last_head < last_tail;
        probe.levels_separated = *probe.head_max_j.last().expect("radii nonempty") < tail_min_all;
    }
    Ok(probe)
}
