use nalgebra::DVector;
use nonlocal_saddle::kernel::Kernel;
use nonlocal_saddle::{assemble, audit_kernel, tail_weight, AssemblyOptions, Error, Mesh};
use proptest::prelude::*;
use quadrature::integrate;

fn frac(s: f64) -> Kernel {
    Kernel::fractional(s, 1).unwrap()
}

/// `∫_0^∞ f`: `[0, 1]` directly, then `r = e^v` on panels of unit-scale
/// width up to `r = e^300`.
fn half_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> f64 {
    let mut total = integrate(&f, 0.0, 1.0, tol).integral;
    for p in 0..60 {
        let v0 = 5.0 * p as f64;
        total += integrate(|v: f64| f(v.exp()) * v.exp(), v0, v0 + 5.0, tol).integral;
    }
    total
}

/// `a(φ_i, φ_j)` over the full set `Q = ℝ² ∖ (∁Ω × ∁Ω)`, without the
/// splitting into an Ω×Ω part and a tail term: `x` runs over Ω with `y` over
/// ℝ, and `x` over ∁Ω with `y` over Ω.
fn brute_force_entry(mesh: &Mesh, k: &Kernel, i: usize, j: usize) -> f64 {
    let (a, b) = (mesh.a(), mesh.b());
    let phi = |n: usize, x: f64| mesh.hat(n, x);
    let w = |x: f64, y: f64| (phi(i, x) - phi(i, y)) * (phi(j, x) - phi(j, y)) * k.evaluate(x - y);
    let breaks: Vec<f64> = mesh.nodes().to_vec();
    let tol = 1e-13;

    let inner_full = |x: f64| {
        let mut pts = breaks.clone();
        pts.push(x);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let mut total = 0.0;
        for win in pts.windows(2) {
            total += integrate(|y| if y == x { 0.0 } else { w(x, y) }, win[0], win[1], tol).integral;
        }
        total += half_line(|r| w(x, b + r), tol);
        total += half_line(|r| w(x, a - r), tol);
        total
    };
    let inner_omega = |x: f64| {
        let mut total = 0.0;
        for win in mesh.nodes().windows(2) {
            total += integrate(|y| w(x, y), win[0], win[1], tol).integral;
        }
        total
    };

    let mut total = 0.0;
    for win in breaks.windows(2) {
        total += integrate(inner_full, win[0], win[1], 1e-12).integral;
    }
    total += half_line(|r| inner_omega(b + r), 1e-12);
    total += half_line(|r| inner_omega(a - r), 1e-12);
    total
}

#[test]
fn split_assembly_matches_full_double_integral() {
    let mesh = Mesh::uniform(-1.0, 1.0, 4).unwrap();
    for s in [0.25, 0.5] {
        let k = frac(s);
        let op = assemble(&mesh, &k, &AssemblyOptions::default()).unwrap();
        for (i, j) in [(0, 0), (1, 1), (0, 1), (0, 2)] {
            let oracle = brute_force_entry(&mesh, &k, i, j);
            let got = op.stiffness[(i, j)];
            assert!((got - oracle).abs() < 1e-8, "s={s} ({i},{j}): {got} vs {oracle}");
        }
    }
}

#[test]
fn quadrature_orders_agree() {
    let mesh = Mesh::uniform(-1.0, 1.0, 32).unwrap();
    let k = frac(0.5);
    let lo = assemble(&mesh, &k, &AssemblyOptions::with_order(6)).unwrap();
    let hi = assemble(&mesh, &k, &AssemblyOptions::with_order(12)).unwrap();
    let diff = (&lo.stiffness - &hi.stiffness).amax();
    assert!(diff <= 1e-8, "max entry difference {diff:e}");
}

#[test]
fn far_field_entries_follow_kernel_homogeneity() {
    // For hats with disjoint supports, a(φ_i, φ_j) = −2∫∫ φ_i(x) φ_j(y) K
    // depends only on the index offset j − i and scales like h^{1−2s}.
    for s in [0.25, 0.5, 0.75] {
        let k = frac(s);
        let coarse = assemble(&Mesh::uniform(-1.0, 1.0, 16).unwrap(), &k, &AssemblyOptions::default()).unwrap();
        let fine = assemble(&Mesh::uniform(-1.0, 1.0, 32).unwrap(), &k, &AssemblyOptions::default()).unwrap();
        let factor = 2f64.powf(2.0 * s - 1.0);
        let mut checked = 0;
        for i in 0..15 {
            for j in (i + 2)..15 {
                let expected = coarse.stiffness[(i, j)] * factor;
                let rel = (fine.stiffness[(i + 8, j + 8)] - expected).abs() / expected.abs();
                assert!(rel < 1e-3, "s={s} ({i},{j}) rel {rel:e}");
                checked += 1;
            }
        }
        assert!(checked > 0);
    }
}

#[test]
fn mass_rows_sum_to_h_away_from_boundary() {
    let mesh = Mesh::uniform(-1.0, 1.0, 16).unwrap();
    let op = assemble(&mesh, &frac(0.5), &AssemblyOptions::default()).unwrap();
    let h = mesh.h();
    for i in 1..op.dim() - 1 {
        let row: f64 = op.mass.row(i).iter().sum();
        assert!((row - h).abs() < 1e-15);
    }
}

#[test]
fn stiffness_is_symmetric_positive_definite() {
    for s in [0.1, 0.5, 0.9] {
        let op = assemble(&Mesh::uniform(-1.0, 1.0, 24).unwrap(), &frac(s), &AssemblyOptions::default()).unwrap();
        assert_eq!(op.stiffness, op.stiffness.transpose());
        assert!(op.stiffness.clone().cholesky().is_some());
    }
}

#[test]
fn tail_weight_matches_quadrature_of_both_tails() {
    let mesh = Mesh::uniform(-1.0, 1.0, 8).unwrap();
    for s in [0.25, 0.5, 0.75] {
        let k = frac(s);
        for x in [-0.9, -0.3, 0.0, 0.6] {
            let oracle = half_line(|r| k.evaluate(1.0 - x + r), 1e-13) + half_line(|r| k.evaluate(x + 1.0 + r), 1e-13);
            let got = tail_weight(&mesh, &k, x).unwrap();
            assert!((got - oracle).abs() < 1e-9 * oracle, "s={s} x={x}: {got} vs {oracle}");
        }
    }
    assert_eq!(tail_weight(&mesh, &frac(0.5), 0.0).unwrap(), 2.0);
    assert!(matches!(tail_weight(&mesh, &frac(0.5), 1.0), Err(Error::SingularEvaluation { .. })));
    let near = tail_weight(&mesh, &frac(0.5), 0.999).unwrap();
    let nearer = tail_weight(&mesh, &frac(0.5), 0.9999).unwrap();
    assert!(nearer > near && near > 100.0);
}

#[test]
fn custom_kernel_assembly_tracks_fractional() {
    // K = |z|^{-1-2s} written as a custom kernel must reproduce the
    // fractional operator through the subtraction path.
    let s = 0.4;
    let mesh = Mesh::uniform(-1.0, 1.0, 8).unwrap();
    let custom = Kernel::custom(s, 1.0, move |z: f64| z.abs().powf(-1.0 - 2.0 * s)).unwrap();
    let a = assemble(&mesh, &custom, &AssemblyOptions::default()).unwrap();
    let b = assemble(&mesh, &frac(s), &AssemblyOptions::default()).unwrap();
    assert!((&a.stiffness - &b.stiffness).amax() < 1e-8);
}

#[test]
fn fractional_k1_integral_against_quadrature() {
    for s in [0.2, 0.5, 0.8] {
        let k = frac(s);
        let inner: f64 = (0..60)
            .map(|p| {
                let v0 = -5.0 * (p + 1) as f64;
                integrate(|v: f64| v.exp().powi(3) * k.evaluate(v.exp()), v0, v0 + 5.0, 1e-14).integral
            })
            .sum::<f64>()
            * 2.0;
        let outer = 2.0 * half_line(|r| k.evaluate(1.0 + r), 1e-14);
        let closed = 2.0 / (2.0 - 2.0 * s) + 2.0 / (2.0 * s);
        let audit = audit_kernel(&k, 1e-10, 64).unwrap();
        assert!((audit.k1_integral - closed).abs() < 1e-8 * closed);
        assert!((inner + outer - closed).abs() < 1e-8 * closed);
    }
}

proptest! {
    #[test]
    fn builtin_kernels_are_even_and_positive(s in 0.01f64..0.99, e in -100.0f64..100.0, m in 1.0f64..10.0) {
        let z = m * 10f64.powf(e);
        let k = frac(s);
        prop_assert_eq!(k.evaluate(z), k.evaluate(-z));
        prop_assert!(k.evaluate(z) > 0.0);
    }

    #[test]
    fn k2_holds_for_fractional_at_any_theta_below_one(s in 0.05f64..0.95, theta in 0.01f64..=1.0) {
        let k = Kernel::fractional_with_theta(s, 1, theta).unwrap();
        let audit = audit_kernel(&k, 1e-8, 16).unwrap();
        prop_assert!(audit.k2_holds);
    }

    #[test]
    fn norms_are_consistent(coeffs in prop::collection::vec(-5.0f64..5.0, 7)) {
        let mesh = Mesh::uniform(-1.0, 1.0, 8).unwrap();
        let op = assemble(&mesh, &frac(0.5), &AssemblyOptions::default()).unwrap();
        let u = DVector::from_vec(coeffs);
        let (z, l2, x) = (op.norm_z(&u).unwrap(), op.norm_l2(&u).unwrap(), op.norm_x(&u).unwrap());
        prop_assert!((z * z + l2 * l2 - x * x).abs() <= 1e-12 * (1.0 + x * x));
        prop_assert!(x >= z && x >= l2);
        let z2 = op.norm_z(&(&u * 2.0)).unwrap();
        prop_assert!((z2 - 2.0 * z).abs() <= 1e-12 * (1.0 + z));
    }
}
