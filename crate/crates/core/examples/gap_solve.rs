//! Slopes inside (λ₂, λ₃): Newton finds the saddle point, whose Hessian has
//! exactly two negative directions.

use nonlocal_saddle::{
    assemble, morse_index, solve_case_b, solve_eigenproblem, AssemblyOptions, Kernel, Mesh, NonlinearitySpec, Profile,
    Result, SolverOptions,
};

fn main() -> Result<()> {
    let mesh = Mesh::uniform(-1.0, 1.0, 128)?;
    let op = assemble(&mesh, &Kernel::fractional(0.5, 1)?, &AssemblyOptions::default())?;
    let sp = solve_eigenproblem(&op, 6)?;
    let (l2, l3) = (sp.lambda(2), sp.lambda(3));
    let m = l2 + 0.25 * (l3 - l2);
    let delta = 0.5 * (l3 - l2);
    let spec = NonlinearitySpec::saturating(m, delta, Profile::Constant(1.0))?;

    let report = solve_case_b(&op, &sp, &spec, &SolverOptions::default())?;
    println!("case {:?}, (f2) {:?}", report.case, report.f2.as_ref().map(|c| c.passed));
    println!("J = {:.10}  residual {:e}  iterations {}", report.j_value, report.residual_inf, report.iterations);
    for (i, r) in report.trace.iter().enumerate() {
        println!("  it {i:2}: {r:e}");
    }
    println!("Morse index {}", morse_index(&op, &spec, &report.solution)?);
    Ok(())
}
