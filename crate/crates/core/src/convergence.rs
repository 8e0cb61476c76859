//! Error tables over a sequence of refined grids.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::collocation::{recover, SolveOptions};
use crate::error::{Error, Result};
use crate::evaluate::error_report;
use crate::grid::{make_grid, Bounds, GridSpec};
use crate::kernel::RadialKernel;
use crate::system::{DynamicalSystem, ExactMetric};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub alpha: f64,
    pub points: usize,
    pub unknowns: usize,
    pub e_s: f64,
    /// `e_s(2 alpha) / e_s(alpha)`, from the second row on.
    pub ratio_s: Option<f64>,
    pub e: f64,
    pub ratio: Option<f64>,
    pub relative_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// `2^(sigma - 1 - n/2)`, the ratio expected when halving the spacing.
    pub reference_ratio: f64,
}

impl ConvergenceReport {
    pub fn reference_ratio(sigma: f64, n: usize) -> f64 {
        2f64.powf(sigma - 1.0 - n as f64 / 2.0)
    }
}

/// Solve on node grids of each spacing in `alphas` (strictly decreasing)
/// over `bounds` and measure the errors on `check`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    system: &DynamicalSystem,
    exact: &ExactMetric,
    rhs: &DMatrix<f64>,
    kernel: &RadialKernel,
    alphas: &[f64],
    bounds: &Bounds,
    check: &GridSpec,
    options: SolveOptions,
) -> Result<ConvergenceReport> {
    if alphas.is_empty() {
        return Err(Error::Empty("alpha list"));
    }
    if alphas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("alphas must be strictly decreasing".into()));
    }
    let check_points = make_grid(check)?;
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let at = |source: Error| Error::AtAlpha {
            alpha,
            source: Box::new(source),
        };
        let points = make_grid(&GridSpec::nodes(bounds.clone(), alpha)).map_err(at)?;
        log::info!("alpha = {alpha}: {} points", points.len());
        let sol = recover(system, kernel, &points, rhs, options).map_err(at)?;
        let err = error_report(&sol, exact, system, &check_points).map_err(at)?;
        let prev = rows.last();
        rows.push(ConvergenceRow {
            alpha,
            points: points.len(),
            unknowns: sol.diagnostics().unknowns,
            e_s: err.e_s,
            ratio_s: prev.map(|p| p.e_s / err.e_s),
            e: err.e,
            ratio: prev.map(|p| p.e / err.e),
            relative_residual: sol.diagnostics().relative_residual,
        });
        log::info!("alpha = {alpha}: e_s = {:.4e}, e = {:.4e}", err.e_s, err.e);
    }
    Ok(ConvergenceReport {
        rows,
        reference_ratio: ConvergenceReport::reference_ratio(kernel.sigma(), system.dim()),
    })
}
