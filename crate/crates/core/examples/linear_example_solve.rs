//! Recover a contraction metric for `x' = -x + y, y' = x - 2y` from a 9 x 9
//! grid on `[-1, 1]^2` and compare it with the exact constant metric.
//!
//! ```bash
//! cargo run --example linear_example_solve
//! ```

use contraction_metric::prelude::*;

fn main() -> Result<()> {
    let (system, exact, rhs) = linear_example();
    let kernel = wendland_c8(0.9)?;
    let square = vec![[-1.0, 1.0], [-1.0, 1.0]];
    let points = make_grid(&GridSpec::nodes(square.clone(), 0.25))?;

    let solution = recover(&system, &kernel, &points, &rhs, SolveOptions::default())?;
    let diag = solution.diagnostics();
    println!(
        "{} points, {} unknowns, relative residual {:.2e}",
        points.len(),
        diag.unknowns,
        diag.relative_residual
    );
    println!(
        "fill distance ~ {:.4}, separation distance {:.4}",
        fill_distance_estimate(&points, &square, 1.0 / 64.0)?,
        separation_distance(&points)?
    );

    for x in [[0.0, 0.0], [0.3, -0.7], [0.9, 0.9]] {
        let (s, fs) = solution.eval_s_and_fs(&x);
        println!("\nat {x:?}\nS = {s}F(S) = {fs}exact M = {}", exact.value(&x));
    }

    let check = make_grid(&GridSpec::cell_centres(square, 1.0 / 64.0))?;
    let err = error_report(&solution, &exact, &system, &check)?;
    println!("max |F(S) + C| = {:.4e}, max |S - M| = {:.4e}", err.e, err.e_s);
    Ok(())
}
