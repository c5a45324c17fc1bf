//! Audits the fractional kernel and two custom kernels against the
//! integrability and lower-bound conditions.

use nonlocal_saddle::kernel::Kernel;
use nonlocal_saddle::{audit_kernel, Result};

fn main() -> Result<()> {
    let frac = Kernel::fractional(0.5, 1)?;
    let a = audit_kernel(&frac, 1e-10, 64)?;
    println!(
        "fractional s=0.5: k1 = {:.12} holds={} k2 holds={} worst ratio {:.6}",
        a.k1_integral, a.k1_holds, a.k2_holds, a.k2_worst_ratio
    );

    // Heavier near the origin than θ|z|^{-1-2s}, same decay.
    let s = 0.3;
    let bumped = Kernel::custom(s, 1.0, move |z: f64| {
        let r = z.abs();
        r.powf(-1.0 - 2.0 * s) * (1.0 + (-r).exp())
    })?;
    let a = audit_kernel(&bumped, 1e-10, 64)?;
    println!(
        "bumped s=0.3:     k1 = {:.12} holds={} k2 holds={} worst ratio {:.6}",
        a.k1_integral, a.k1_holds, a.k2_holds, a.k2_worst_ratio
    );

    // A constant floor makes the far field non-integrable.
    let floor = Kernel::custom(0.5, 1.0, |z: f64| z.abs().powi(-2) + 1.0)?;
    let a = audit_kernel(&floor, 1e-10, 64)?;
    println!("with +1 floor:    k1 = {} holds={}", a.k1_integral, a.k1_holds);
    Ok(())
}
