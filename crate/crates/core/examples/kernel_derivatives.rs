//! The Wendland C^8 kernel and its radial derivative forms, which stay finite
//! at the origin.
//!
//! ```bash
//! cargo run --example kernel_derivatives
//! ```

use contraction_metric::prelude::*;

fn main() -> Result<()> {
    let kernel = wendland_c8(0.9)?;
    println!(
        "support radius 1/c = {:.6}, smoothness sigma = {}",
        kernel.support_radius(),
        kernel.sigma()
    );
    println!("{:>6} {:>14} {:>16} {:>16}", "r", "psi", "psi'/r", "(psi''-psi'/r)/r^2");
    for r in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0, 1.2] {
        println!("{r:>6.2} {:>14.8} {:>16.8} {:>16.8}", kernel.psi(r), kernel.psi1(r), kernel.psi2(r));
    }

    let (x, y) = ([0.2, -0.1], [-0.3, 0.25]);
    println!("\nphi(x, y)          = {:.10}", kernel.phi(&x, &y)?);
    println!("grad_x phi(x, y)   = {:.10?}", kernel.grad1_phi(&x, &y)?);
    println!("d2 phi / dx dy     = {:.10?}", kernel.hess12_phi(&x, &y)?);
    Ok(())
}
