//! Slopes below λ₁: the energy is coercive and its minimizer is found by
//! damped Newton.

use nonlocal_saddle::{
    assemble, classify, solve_case_a, solve_eigenproblem, AssemblyOptions, Kernel, Mesh, NonlinearitySpec, Profile,
    Result, SolverOptions,
};

fn main() -> Result<()> {
    let mesh = Mesh::uniform(-1.0, 1.0, 128)?;
    let op = assemble(&mesh, &Kernel::fractional(0.5, 1)?, &AssemblyOptions::default())?;
    let sp = solve_eigenproblem(&op, 4)?;
    let m = 0.5 * sp.lambda(1);
    let spec = NonlinearitySpec::saturating(m, 1.0, Profile::Polynomial(vec![1.0, 0.0, -1.0]))?;
    println!("λ₁ = {:.6}, m = {m:.6}, classification {:?}", sp.lambda(1), classify(&spec, &sp));

    let report = solve_case_a(&op, &sp, &spec, &SolverOptions::default())?;
    println!("J = {:.10}  residual {:e}  iterations {}", report.j_value, report.residual_inf, report.iterations);
    let mid = op.dim() / 2;
    println!("u(0) = {:.8}", report.solution[mid]);
    Ok(())
}
