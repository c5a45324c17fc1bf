//! Generalized eigenproblem `A e = λ M e`, the head/tail splitting
//! `Z = H_k ⊕ P_{k+1}`, and the closed-form constants attached to the
//! functional setting (Poincaré floor, critical exponent, embedding constant).

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::discretization::AssembledOperator;
use crate::error::{invalid, Error, Result};

/// Relative gap below which consecutive eigenvalues are treated as one
/// cluster.
pub const CLUSTER_GAP: f64 = 1e-8;

/// Ordered eigenpairs with `M`-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    /// Column `j` is `e_{j+1}`.
    eigenvectors: DMatrix<f64>,
    mass: DMatrix<f64>,
    count_requested: usize,
    /// `cluster[j]` is the index of the cluster containing eigenvalue `j`.
    cluster: Vec<usize>,
    sample_points: Vec<f64>,
}

/// Which part of the splitting [`project`] returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// Component in `H_k = span(e₁, …, e_k)`.
    Head(usize),
    /// Component in `P_{k+1}`, the `Z`-orthogonal complement of `H_k`.
    Tail(usize),
}

impl Spectrum {
    /// All computed eigenvalues, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// The first `count_requested` eigenvalues.
    pub fn requested(&self) -> &[f64] {
        &self.eigenvalues[..self.count_requested]
    }

    pub fn count_requested(&self) -> usize {
        self.count_requested
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `λ_j`, 1-based.
    pub fn lambda(&self, j: usize) -> f64 {
        self.eigenvalues[j - 1]
    }

    /// `e_j`, 1-based.
    pub fn eigenvector(&self, j: usize) -> DVector<f64> {
        self.eigenvectors.column(j - 1).into_owned()
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    /// Points of Ω where pointwise hypotheses are sampled (empty when the
    /// operator carries no mesh).
    pub fn sample_points(&self) -> &[f64] {
        &self.sample_points
    }

    /// Fails when `H_k` would cut through a cluster of repeated eigenvalues.
    pub fn check_split(&self, k: usize) -> Result<()> {
        if k == 0 || k >= self.len() {
            return invalid(format!("split index k = {k} must satisfy 1 ≤ k < {}", self.len()));
        }
        if self.cluster[k - 1] == self.cluster[k] {
            return Err(Error::ClusterSplit { k });
        }
        Ok(())
    }

    /// Coefficients `e_jᵀ M u`, `j = 1..=m`.
    pub fn coefficients(&self, u: &DVector<f64>) -> DVector<f64> {
        self.eigenvectors.transpose() * (&self.mass * u)
    }

    /// `Σ_j c_j e_j` for coefficients given in the eigenbasis.
    pub fn synthesize(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.eigenvectors * coeffs
    }
}

/// Solves `A e = λ M e` by Cholesky reduction `M = LLᵀ`, a dense symmetric
/// eigendecomposition of `L⁻¹ A L⁻ᵀ`, and back-substitution.
///
/// Eigenvectors are `M`-normalized; the sign is fixed so that `1ᵀMe ≥ 0`,
/// with ties (mean zero) broken by making the first nonzero coefficient
/// positive. Vectors inside a cluster of numerically repeated eigenvalues are
/// re-orthonormalized jointly.
pub fn solve_eigenproblem(op: &AssembledOperator, count: usize) -> Result<Spectrum> {
    let m = op.dim();
    if count == 0 || count > m {
        return invalid(format!("count = {count} must satisfy 1 ≤ count ≤ {m}"));
    }
    let chol = op
        .mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::AssemblyCorruption("mass matrix is not symmetric positive definite".into()))?;
    let l = chol.l();
    let x = l
        .solve_lower_triangular(&op.stiffness)
        .ok_or_else(|| Error::AssemblyCorruption("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::AssemblyCorruption("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;

    let max_iter = 100 * m.max(10);
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, max_iter).ok_or_else(|| {
        Error::Numeric(format!("symmetric eigensolver did not converge within {max_iter} sweeps (m = {m})"))
    })?;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let q = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    let lt = l.transpose();
    let mut vecs =
        lt.solve_upper_triangular(&q).ok_or_else(|| Error::AssemblyCorruption("singular Cholesky factor".into()))?;

    // Clusters of numerically repeated eigenvalues.
    let mut cluster = vec![0usize; m];
    for j in 1..m {
        let (a, b) = (eigenvalues[j - 1], eigenvalues[j]);
        let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        cluster[j] = if (b - a) / scale < CLUSTER_GAP { cluster[j - 1] } else { cluster[j - 1] + 1 };
    }

    let mass = &op.mass;
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && cluster[end] == cluster[start] {
            end += 1;
        }
        // Modified Gram–Schmidt in the M-inner product, applied twice.
        for _ in 0..2 {
            for j in start..end {
                let mut v = vecs.column(j).into_owned();
                for i in start..j {
                    let ei = vecs.column(i).into_owned();
                    let proj = ei.dot(&(mass * &v));
                    v -= ei * proj;
                }
                let nrm = v.dot(&(mass * &v)).sqrt();
                vecs.set_column(j, &(v / nrm));
            }
        }
        start = end;
    }

    for j in 0..m {
        let v = vecs.column(j).into_owned();
        let mv = mass * &v;
        let mean: f64 = mv.iter().sum();
        let scale: f64 = mv.iter().map(|x| x.abs()).sum();
        let flip = if mean.abs() > 1e-10 * scale {
            mean < 0.0
        } else {
            let vmax = v.amax();
            v.iter().find(|x| x.abs() > 1e-8 * vmax).is_some_and(|x| *x < 0.0)
        };
        if flip {
            vecs.set_column(j, &(-v));
        }
    }

    let sample_points = op.mesh().map(|mesh| mesh.sample_points(op.quad_order)).unwrap_or_default();

    Ok(Spectrum {
        eigenvalues,
        eigenvectors: vecs,
        mass: op.mass.clone(),
        count_requested: count,
        cluster,
        sample_points,
    })
}

/// `uᵀAu / uᵀMu`.
pub fn rayleigh_quotient(op: &AssembledOperator, u: &DVector<f64>) -> Result<f64> {
    if u.len() != op.dim() {
        return invalid(format!("vector length {} does not match operator size {}", u.len(), op.dim()));
    }
    let den = op.l2_inner(u, u);
    if den <= 0.0 || u.iter().all(|&x| x == 0.0) {
        return invalid("Rayleigh quotient of the zero vector");
    }
    Ok(op.energy(u, u) / den)
}

/// Head/tail component of `u` with respect to `Z = H_k ⊕ P_{k+1}`.
pub fn project(spectrum: &Spectrum, u: &DVector<f64>, part: Part) -> Result<DVector<f64>> {
    let k = match part {
        Part::Head(k) | Part::Tail(k) => k,
    };
    if u.len() != spectrum.len() {
        return invalid(format!("vector length {} does not match spectrum size {}", u.len(), spectrum.len()));
    }
    spectrum.check_split(k)?;
    let mu = &spectrum.mass * u;
    let basis = spectrum.eigenvectors.columns(0, k);
    let coeffs = basis.transpose() * mu;
    let head = basis * coeffs;
    Ok(match part {
        Part::Head(_) => head,
        Part::Tail(_) => u - head,
    })
}

/// Lower bound `θ |B_R ∖ Ω| / (2R)^{1+2s}` for `λ₁` on `Ω = (a, b) ⊆ (−R, R)`.
pub fn poincare_lower_bound(a: f64, b: f64, s: f64, theta: f64, r: f64) -> Result<f64> {
    if !(a < b) {
        return invalid(format!("domain endpoints must satisfy a < b (got {a}, {b})"));
    }
    if !(s > 0.0 && s < 1.0) || !(theta > 0.0) {
        return invalid(format!("need s ∈ (0,1) and θ > 0 (got s = {s}, θ = {theta})"));
    }
    let gap = 2.0 * r - (b - a);
    if !(r >= a.abs().max(b.abs())) || !(gap > 0.0) {
        return invalid(format!("R = {r} must enclose Ω = ({a}, {b}) with |B_R ∖ Ω| > 0"));
    }
    Ok(theta * gap / (2.0 * r).powf(1.0 + 2.0 * s))
}

/// Fractional critical Sobolev exponent `2n/(n − 2s)` (or `+∞` if `n ≤ 2s`).
pub fn critical_exponent(n: usize, s: f64) -> Result<f64> {
    if n == 0 || !(s > 0.0 && s < 1.0) {
        return invalid(format!("need n ≥ 1 and s ∈ (0,1) (got n = {n}, s = {s})"));
    }
    let nf = n as f64;
    Ok(if nf > 2.0 * s { 2.0 * nf / (nf - 2.0 * s) } else { f64::INFINITY })
}

/// Constant `max{1, θ^{-1/2}}` bounding the Gagliardo norm by the `X` norm.
pub fn gagliardo_embedding_constant(theta: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return invalid(format!("θ = {theta} must be positive"));
    }
    Ok(1f64.max(theta.powf(-0.5)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(a: DMatrix<f64>, m: DMatrix<f64>) -> AssembledOperator {
        AssembledOperator::from_matrices(a, m).unwrap()
    }

    #[test]
    fn one_by_one() {
        let sp = solve_eigenproblem(&op(DMatrix::from_element(1, 1, 2.0), DMatrix::identity(1, 1)), 1).unwrap();
        assert_eq!(sp.eigenvalues(), &[2.0]);
        assert_eq!(sp.eigenvector(1)[0], 1.0);
    }

    #[test]
    fn diagonal_pair() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![6.0, 2.0]));
        let sp = solve_eigenproblem(&op(a, DMatrix::identity(2, 2)), 2).unwrap();
        assert!((sp.lambda(1) - 2.0).abs() < 1e-14 && (sp.lambda(2) - 6.0).abs() < 1e-14);
        assert!((sp.eigenvector(1) - DVector::from_vec(vec![0.0, 1.0])).amax() < 1e-14);
        assert!((sp.eigenvector(2) - DVector::from_vec(vec![1.0, 0.0])).amax() < 1e-14);
    }

    #[test]
    fn non_spd_mass_is_reported_as_corruption() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        let r = solve_eigenproblem(&op(DMatrix::identity(2, 2), m), 2);
        assert!(matches!(r, Err(Error::AssemblyCorruption(_))));
    }

    #[test]
    fn repeated_eigenvalues_form_a_cluster() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 3.0, 5.0]));
        let sp = solve_eigenproblem(&op(a, DMatrix::identity(4, 4)), 4).unwrap();
        assert!(matches!(sp.check_split(2), Err(Error::ClusterSplit { k: 2 })));
        assert!(sp.check_split(1).is_ok() && sp.check_split(3).is_ok());
        let u = DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0]);
        assert!(project(&sp, &u, Part::Head(2)).is_err());
        let g = sp.eigenvectors().transpose() * sp.eigenvectors();
        assert!((g - DMatrix::identity(4, 4)).amax() < 1e-14);
    }

    #[test]
    fn projection_range_checks() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 3.0]));
        let sp = solve_eigenproblem(&op(a, DMatrix::identity(3, 3)), 3).unwrap();
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(project(&sp, &u, Part::Head(0)).is_err());
        assert!(project(&sp, &u, Part::Tail(3)).is_err());
        let e1 = sp.eigenvector(1);
        assert!((project(&sp, &e1, Part::Head(1)).unwrap() - &e1).amax() < 1e-15);
        assert!(project(&sp, &e1, Part::Tail(1)).unwrap().amax() < 1e-15);
    }

    #[test]
    fn rayleigh_rejects_zero() {
        let o = op(DMatrix::identity(2, 2), DMatrix::identity(2, 2));
        assert!(rayleigh_quotient(&o, &DVector::zeros(2)).is_err());
        assert!(rayleigh_quotient(&o, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn poincare_examples() {
        assert!((poincare_lower_bound(-1.0, 1.0, 0.5, 1.0, 2.0).unwrap() - 0.125).abs() < 1e-15);
        assert!(poincare_lower_bound(-1.0, 1.0, 0.5, 1.0, 1.0).is_err());
        assert!(poincare_lower_bound(-1.0, 1.0, 0.5, 1.0, 0.5).is_err());
    }

    #[test]
    fn critical_exponent_examples() {
        assert!((critical_exponent(1, 0.25).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(critical_exponent(1, 0.5).unwrap(), f64::INFINITY);
        assert!((critical_exponent(3, 0.5).unwrap() - 3.0).abs() < 1e-15);
        assert!(critical_exponent(0, 0.5).is_err());
        assert!(critical_exponent(1, 1.0).is_err());
    }

    #[test]
    fn embedding_constant() {
        assert_eq!(gagliardo_embedding_constant(4.0).unwrap(), 1.0);
        assert!((gagliardo_embedding_constant(0.25).unwrap() - 2.0).abs() < 1e-15);
    }
}
