//! First eigenvalues at several resolutions and orders, with the Poincaré
//! floor.

use nonlocal_saddle::{assemble, poincare_lower_bound, solve_eigenproblem, AssemblyOptions, Kernel, Mesh, Result};

fn main() -> Result<()> {
    for s in [0.25, 0.5, 0.75] {
        let floor = poincare_lower_bound(-1.0, 1.0, s, 1.0, 2.0)?;
        println!("s = {s}  (floor {floor:.5})");
        for n in [32, 64, 128] {
            let op = assemble(&Mesh::uniform(-1.0, 1.0, n)?, &Kernel::fractional(s, 1)?, &AssemblyOptions::default())?;
            let sp = solve_eigenproblem(&op, 5)?;
            let l: Vec<String> = sp.requested().iter().map(|v| format!("{v:10.5}")).collect();
            println!("  N = {n:4}: {}", l.join(" "));
        }
    }
    Ok(())
}
