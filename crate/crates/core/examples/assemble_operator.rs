//! Assembles stiffness and mass on a small mesh and checks a few identities.

use nalgebra::DVector;
use nonlocal_saddle::{assemble, tail_weight, AssemblyOptions, Kernel, Mesh, Result};

fn main() -> Result<()> {
    let mesh = Mesh::uniform(-1.0, 1.0, 8)?;
    let k = Kernel::fractional(0.5, 1)?;
    let op = assemble(&mesh, &k, &AssemblyOptions::default())?;
    println!("stiffness (7x7):\n{:.5}", op.stiffness);
    println!("mass diagonal {:.6}, off-diagonal {:.6}", op.mass[(0, 0)], op.mass[(0, 1)]);
    println!("tail weight at 0: {}", tail_weight(&mesh, &k, 0.0)?);
    println!("worst entry error estimate: {:e}", op.error_estimate);

    let u = DVector::from_fn(op.dim(), |i, _| ((i + 1) as f64 * 0.7).sin());
    let (z, l2, x) = (op.norm_z(&u)?, op.norm_l2(&u)?, op.norm_x(&u)?);
    println!("|u|_Z = {z:.6}  |u|_L2 = {l2:.6}  |u|_X = {x:.6}  (X² − Z² − L2² = {:e})", x * x - z * z - l2 * l2);
    Ok(())
}
