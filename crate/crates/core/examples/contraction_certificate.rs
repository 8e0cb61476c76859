//! Check that the recovered `S` is a contraction metric on a fine grid: `S`
//! positive definite and `F(S)` negative definite, via trace and determinant.
//!
//! ```bash
//! cargo run --release --example contraction_certificate          # [-1,1]^2, spacing 1/8
//! cargo run --release --example contraction_certificate -- 4 0.2 # [-4,4]^2, spacing 0.2
//! ```

use contraction_metric::evaluate::contraction_failures;
use contraction_metric::prelude::*;

fn main() -> Result<()> {
    let mut args = std::env::args().skip(1);
    let half: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(1.0);
    let spacing: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0.125);

    let (system, _, rhs) = linear_example();
    let kernel = wendland_c8(0.9)?;
    let bounds = vec![[-half, half], [-half, half]];
    let points = make_grid(&GridSpec::nodes(bounds.clone(), spacing))?;
    let solution = recover(&system, &kernel, &points, &rhs, SolveOptions::default())?;

    let grid = make_grid(&GridSpec::cell_centres(bounds, half / 64.0))?;
    let samples = field_export(&solution, &grid);
    let failures = contraction_failures(&samples, &points, 0.0);
    println!(
        "{} collocation points, {} check points, {} failures",
        points.len(),
        samples.len(),
        failures.len()
    );
    let worst_fs = samples.iter().map(|s| s.max_eig_fs).fold(f64::NEG_INFINITY, f64::max);
    let least_s = samples.iter().map(|s| s.min_eig_s).fold(f64::INFINITY, f64::min);
    println!("min eig S = {least_s:.4e}, max eig F(S) = {worst_fs:.4e}");
    for (i, dist) in failures.iter().take(10) {
        let s = &samples[*i];
        println!(
            "  fails at {:?}: trace F(S) = {:.3e}, -det F(S) = {:.3e}, nearest node {dist:.3}",
            s.x, s.trace_fs, s.neg_det_fs
        );
    }
    Ok(())
}
