//! A nonlinear system without a known metric: `x' = -x + y^2, y' = -y`.
//! Register it, validate its equilibrium, recover `S`, and count where the
//! contraction test fails.
//!
//! ```bash
//! cargo run --release --example custom_system
//! ```

use contraction_metric::evaluate::contraction_failures;
use contraction_metric::prelude::*;
use contraction_metric::system::SystemEntry;
use nalgebra::{DMatrix, DVector};

fn quadratic() -> Result<DynamicalSystem> {
    DynamicalSystem::new(
        "quadratic",
        2,
        |x| DVector::from_vec(vec![-x[0] + x[1] * x[1], -x[1]]),
        |x| DMatrix::from_row_slice(2, 2, &[-1.0, 2.0 * x[1], 0.0, -1.0]),
    )?
    .with_equilibrium(vec![0.0, 0.0], Stability::Stable)
}

fn main() -> Result<()> {
    let mut registry = SystemRegistry::with_builtins();
    registry.register("quadratic", || SystemEntry {
        system: quadratic().expect("consistent Jacobian"),
        exact: None,
        rhs: DMatrix::identity(2, 2),
    });
    println!("registered systems: {:?}", registry.names().collect::<Vec<_>>());

    let entry = registry.get("quadratic")?;
    let check = check_equilibrium_condition(&entry.system, &[0.0, 0.0], Stability::Stable)?;
    println!("equilibrium (0, 0): {:?}, eigenvalues {:?}", check.verdict, check.eigenvalues);

    let kernel = wendland_c8(0.9)?;
    let bounds = vec![[-1.0, 1.0], [-1.0, 1.0]];
    let points = make_grid(&GridSpec::nodes(bounds.clone(), 0.125))?;
    let solution = recover(&entry.system, &kernel, &points, &entry.rhs, SolveOptions::default())?;
    println!(
        "{} unknowns, relative residual {:.2e}",
        solution.diagnostics().unknowns,
        solution.diagnostics().relative_residual
    );

    let grid = make_grid(&GridSpec::cell_centres(bounds, 1.0 / 32.0))?;
    let samples = field_export(&solution, &grid);
    let failures = contraction_failures(&samples, &points, 0.0);
    println!("{} of {} check points fail the contraction test", failures.len(), samples.len());
    Ok(())
}
