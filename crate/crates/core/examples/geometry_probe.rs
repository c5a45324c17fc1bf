//! Samples J on spheres of H₂ and shells of P₃ for an affine problem in the
//! second gap, and on the whole space in the coercive case.

use nonlocal_saddle::{
    assemble, geometry_probe, solve_eigenproblem, AssemblyOptions, GeometryOptions, Kernel, Mesh, NonlinearitySpec,
    Profile, Result,
};

fn main() -> Result<()> {
    let op = assemble(&Mesh::uniform(-1.0, 1.0, 64)?, &Kernel::fractional(0.5, 1)?, &AssemblyOptions::default())?;
    let sp = solve_eigenproblem(&op, 8)?;
    let (l2, l3) = (sp.lambda(2), sp.lambda(3));
    let m = 0.5 * (l2 + l3);
    let spec = NonlinearitySpec::affine(m, Profile::Constant(1.0))?;
    let p = geometry_probe(&op, &sp, &spec, 2, &GeometryOptions::default())?;
    println!("radius    max_H J/T²   min_P J/|u|²_Z");
    for i in 0..p.radii.len() {
        println!("{:7.0} {:12.6} {:12.6}", p.radii[i], p.head_max_ratio_z[i], p.tail_min_ratio_z[i]);
    }
    println!("limits  {:12.6} {:12.6}", 0.5 * (1.0 - m / l2), 0.5 * (1.0 - m / l3));
    println!("L2-normalized: {:.6} vs (λ₂−m)/2 = {:.6}", p.head_max_ratio_l2.last().unwrap(), 0.5 * (l2 - m));
    println!("floor on P₃ near 0: {:.6}; separated: {}", p.tail_floor, p.levels_separated);

    let coercive = NonlinearitySpec::affine(0.5 * sp.lambda(1), Profile::Constant(1.0))?;
    let p = geometry_probe(&op, &sp, &coercive, 0, &GeometryOptions::default())?;
    println!("coercive: min J/|u|²_Z at T = 1000: {:.6}", p.tail_min_ratio_z.last().unwrap());
    Ok(())
}
