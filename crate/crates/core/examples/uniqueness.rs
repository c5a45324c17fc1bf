//! Multi-start check: unique under the slope-gap condition, several
//! solutions at resonance.

use nonlocal_saddle::{
    assemble, solve_eigenproblem, uniqueness_probe, AssemblyOptions, Kernel, Mesh, NonlinearitySpec, Profile, Result,
    UniquenessVerdict,
};

fn main() -> Result<()> {
    let op = assemble(&Mesh::uniform(-1.0, 1.0, 64)?, &Kernel::fractional(0.5, 1)?, &AssemblyOptions::default())?;
    let sp = solve_eigenproblem(&op, 6)?;
    let (l2, l3) = (sp.lambda(2), sp.lambda(3));

    let sat = NonlinearitySpec::saturating(l2 + 1.0, 0.5 * (l3 - l2), Profile::Constant(1.0))?;
    report("saturating", &uniqueness_probe(&op, &sp, &sat, 2, 8, 42)?);

    let resonant = NonlinearitySpec::affine(l2, Profile::Constant(0.0))?;
    report("resonant affine", &uniqueness_probe(&op, &sp, &resonant, 2, 8, 42)?);
    Ok(())
}

fn report(name: &str, v: &UniquenessVerdict) {
    match v {
        UniquenessVerdict::Unique { max_distance, starts, .. } => {
            println!("{name}: unique over {starts} starts (max distance {max_distance:e})")
        }
        UniquenessVerdict::MultipleFound { representatives, max_distance, .. } => {
            println!("{name}: {} distinct solutions (max distance {max_distance:.4})", representatives.len())
        }
        other => println!("{name}: {other:?}"),
    }
}
