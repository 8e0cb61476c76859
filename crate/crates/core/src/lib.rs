//! Contraction metrics for autonomous ODEs `x' = f(x)` by meshfree kernel
//! collocation.
//!
//! The metric `M` solves the matrix-valued linear PDE
//!
//! ```text
//! F(M)(x) = Df(x)^T M(x) + M(x) Df(x) + M'(x) = -C
//! ```
//!
//! where `M'` is the orbital derivative along `f`. The solver recovers the
//! minimum-norm symmetric matrix field in the Sobolev space reproduced by the
//! product kernel `phi(x, y) delta_ik delta_jl` that satisfies the equation at
//! a finite set of collocation points. The recovered field `S` is a
//! contraction metric wherever `S` is positive definite and `F(S)` negative
//! definite; the evaluation module checks both.
//!
//! ```no_run
//! use contraction_metric::prelude::*;
//!
//! let (system, _exact, rhs) = linear_example();
//! let kernel = wendland_c8(0.9)?;
//! let points = make_grid(&GridSpec::nodes(vec![[-1.0, 1.0], [-1.0, 1.0]], 0.125))?;
//! let sol = recover(&system, &kernel, &points, &rhs, SolveOptions::default())?;
//! let s = sol.eval_s(&[0.2, 0.1]);
//! # Ok::<(), contraction_metric::Error>(())
//! ```

// `!(a <= b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod collocation;
pub mod convergence;
pub mod error;
pub mod evaluate;
pub mod grid;
pub mod kernel;
pub mod operator;
pub mod system;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::collocation::{assemble, recover, solve, CollocationSet, GramMatrix, RecoverySolution, SolveOptions};
    pub use crate::convergence::{convergence_study, ConvergenceReport};
    pub use crate::error::{Error, Result};
    pub use crate::evaluate::{definiteness, ellipse_points, error_report, field_export, Definiteness, FieldSample, MetricField};
    pub use crate::grid::{fill_distance_estimate, make_grid, separation_distance, GridSpec};
    pub use crate::kernel::{wendland_c8, RadialKernel};
    pub use crate::operator::{apply_f, gram_entry, representer_column, riesz_representer, CollocationPointData, ComponentPair, FunctionalIndex};
    pub use crate::system::{check_equilibrium_condition, linear_example, DynamicalSystem, ExactMetric, Stability, SystemRegistry};
}
