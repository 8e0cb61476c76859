//! Autonomous systems `x' = f(x)`, exact metrics and the built-in registry.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};

pub type VectorFieldFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;
pub type JacobianFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
pub type MatrixFieldFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
/// Returns `[dM/dx_1, ..., dM/dx_n]`.
pub type MatrixGradientFn = dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync;

const JACOBIAN_CHECK_POINTS: usize = 16;
const JACOBIAN_CHECK_TOL: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    Stable,
    Unstable,
}

/// An autonomous ODE with an exact Jacobian.
#[derive(Clone)]
pub struct DynamicalSystem {
    label: String,
    dim: usize,
    f: Arc<VectorFieldFn>,
    jac: Arc<JacobianFn>,
    equilibria: Vec<(Vec<f64>, Stability)>,
}

impl fmt::Debug for DynamicalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicalSystem")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("equilibria", &self.equilibria)
            .finish_non_exhaustive()
    }
}

impl DynamicalSystem {
    /// Register a system. The Jacobian is checked against central finite
    /// differences of `f` at pseudo-random points of `[-1, 1]^n`.
    pub fn new<F, J>(label: impl Into<String>, dim: usize, f: F, jac: J) -> Result<Self>
    where
        F: Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        J: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::InvalidParameter("system dimension must be positive".into()));
        }
        let sys = Self {
            label: label.into(),
            dim,
            f: Arc::new(f),
            jac: Arc::new(jac),
            equilibria: Vec::new(),
        };
        sys.check_jacobian()?;
        Ok(sys)
    }

    /// Record a known equilibrium; collocation enforces its eigenvalue
    /// condition when it lies inside the point cloud's bounding box.
    pub fn with_equilibrium(mut self, x0: Vec<f64>, stability: Stability) -> Result<Self> {
        self.check_point(&x0)?;
        self.equilibria.push((x0, stability));
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn equilibria(&self) -> &[(Vec<f64>, Stability)] {
        &self.equilibria
    }

    pub fn f(&self, x: &[f64]) -> DVector<f64> {
        (self.f)(x)
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        (self.jac)(x)
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_jacobian(&self) -> Result<()> {
        let n = self.dim;
        let mut rng = StdRng::seed_from_u64(0x5eed_0001);
        for _ in 0..JACOBIAN_CHECK_POINTS {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let jac = self.jacobian(&x);
            let fx = self.f(&x);
            if jac.shape() != (n, n) || fx.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: fx.len().max(jac.nrows()),
                });
            }
            let scale = jac.amax().max(1.0);
            let mut worst: f64 = 0.0;
            for b in 0..n {
                let h = 1e-6 * x[b].abs().max(1.0);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[b] += h;
                xm[b] -= h;
                let col = (self.f(&xp) - self.f(&xm)) / (2.0 * h);
                for a in 0..n {
                    worst = worst.max((col[a] - jac[(a, b)]).abs() / scale);
                }
            }
            if !(worst <= JACOBIAN_CHECK_TOL) {
                return Err(Error::InconsistentJacobian {
                    point: x,
                    deviation: worst,
                });
            }
        }
        Ok(())
    }
}

/// A known solution of the metric equation, used for error measurement.
#[derive(Clone)]
pub struct ExactMetric {
    label: String,
    m: Arc<MatrixFieldFn>,
    grad: Arc<MatrixGradientFn>,
}

impl fmt::Debug for ExactMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactMetric")
            .field("label", &self.label)
            .finish_non_exhaustive()
    }
}

impl ExactMetric {
    pub fn new<M, G>(label: impl Into<String>, m: M, grad: G) -> Self
    where
        M: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            m: Arc::new(m),
            grad: Arc::new(grad),
        }
    }

    /// A constant metric with vanishing gradients.
    pub fn constant(label: impl Into<String>, m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        let dm = m.clone();
        Self::new(label, move |_| dm.clone(), move |x| {
            vec![DMatrix::zeros(n, n); x.len()]
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn value(&self, x: &[f64]) -> DMatrix<f64> {
        (self.m)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<DMatrix<f64>> {
        (self.grad)(x)
    }
}

/// `x' = -x + y, y' = x - 2y` with its constant metric and `C = I`.
pub fn linear_example() -> (DynamicalSystem, ExactMetric, DMatrix<f64>) {
    let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -2.0]);
    let jac = a.clone();
    let sys = DynamicalSystem::new(
        "linear-example",
        2,
        move |x| DVector::from_vec(vec![-x[0] + x[1], x[0] - 2.0 * x[1]]),
        move |_| jac.clone(),
    )
    .and_then(|s| s.with_equilibrium(vec![0.0, 0.0], Stability::Stable))
    .expect("built-in linear example is consistent");
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 0.5]);
    (
        sys,
        ExactMetric::constant("linear-example", m),
        DMatrix::identity(2, 2),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Satisfied,
    Violated,
    /// Some eigenvalue has real part within `1e-12` of zero.
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct EquilibriumCheck {
    pub verdict: Verdict,
    pub eigenvalues: Vec<Complex<f64>>,
}

/// Check that every eigenvalue of `Df(x0)` has strictly negative (stable) or
/// strictly positive (unstable) real part.
pub fn check_equilibrium_condition(
    sys: &DynamicalSystem,
    x0: &[f64],
    stability: Stability,
) -> Result<EquilibriumCheck> {
    sys.check_point(x0)?;
    let residual = sys.f(x0).norm();
    if !(residual <= 1e-10) {
        return Err(Error::NotEquilibrium { residual });
    }
    let eigenvalues: Vec<Complex<f64>> = sys.jacobian(x0).complex_eigenvalues().iter().copied().collect();
    let verdict = if eigenvalues.iter().any(|l| l.re.abs() <= 1e-12) {
        Verdict::Indeterminate
    } else {
        let ok = eigenvalues.iter().all(|l| match stability {
            Stability::Stable => l.re < 0.0,
            Stability::Unstable => l.re > 0.0,
        });
        if ok {
            Verdict::Satisfied
        } else {
            Verdict::Violated
        }
    };
    Ok(EquilibriumCheck {
        verdict,
        eigenvalues,
    })
}

/// A named system bundled with its right-hand side matrix and, if known, the
/// exact metric.
#[derive(Clone, Debug)]
pub struct SystemEntry {
    pub system: DynamicalSystem,
    pub exact: Option<ExactMetric>,
    pub rhs: DMatrix<f64>,
}

pub type SystemFactory = Arc<dyn Fn() -> SystemEntry + Send + Sync>;

/// Name-to-system lookup used by the command-line front end.
#[derive(Clone, Default)]
pub struct SystemRegistry {
    entries: BTreeMap<String, SystemFactory>,
}

impl SystemRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("linear-example", || {
            let (system, exact, rhs) = linear_example();
            SystemEntry {
                system,
                exact: Some(exact),
                rhs,
            }
        });
        reg
    }

    pub fn register<F>(&mut self, name: impl Into<String>, factory: F)
    where
        F: Fn() -> SystemEntry + Send + Sync + 'static,
    {
        self.entries.insert(name.into(), Arc::new(factory));
    }

    pub fn get(&self, name: &str) -> Result<SystemEntry> {
        self.entries
            .get(name)
            .map(|f| f())
            .ok_or_else(|| Error::UnknownSystem(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_system(j: DMatrix<f64>) -> DynamicalSystem {
        let jj = j.clone();
        DynamicalSystem::new(
            "const",
            j.nrows(),
            move |x| &j * DVector::from_column_slice(x),
            move |_| jj.clone(),
        )
        .unwrap()
    }

    #[test]
    fn linear_example_values() {
        let (sys, exact, c) = linear_example();
        assert_eq!(sys.f(&[0.0, 0.0]), DVector::from_vec(vec![0.0, 0.0]));
        let m = exact.value(&[0.3, 0.1]);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 0.5]));
        let j = sys.jacobian(&[0.0, 0.0]);
        // J^T M + M J = -I by direct multiplication
        assert_eq!(j.transpose() * &m + &m * &j, -DMatrix::<f64>::identity(2, 2));
        assert_eq!(c, DMatrix::identity(2, 2));
    }

    #[test]
    fn linear_example_is_stable() {
        let (sys, _, _) = linear_example();
        let chk = check_equilibrium_condition(&sys, &[0.0, 0.0], Stability::Stable).unwrap();
        assert_eq!(chk.verdict, Verdict::Satisfied);
        let mut re: Vec<f64> = chk.eigenvalues.iter().map(|l| l.re).collect();
        re.sort_by(f64::total_cmp);
        // roots of l^2 + 3l + 1
        let s5 = 5f64.sqrt();
        assert!((re[0] - (-3.0 - s5) / 2.0).abs() < 1e-12);
        assert!((re[1] - (-3.0 + s5) / 2.0).abs() < 1e-12);
        assert!(chk.eigenvalues.iter().all(|l| l.im.abs() < 1e-12));
    }

    #[test]
    fn identity_jacobian() {
        let sys = constant_system(DMatrix::identity(2, 2));
        let chk = check_equilibrium_condition(&sys, &[0.0, 0.0], Stability::Stable).unwrap();
        assert_eq!(chk.verdict, Verdict::Violated);
        let chk = check_equilibrium_condition(&sys, &[0.0, 0.0], Stability::Unstable).unwrap();
        assert_eq!(chk.verdict, Verdict::Satisfied);

        let sys = constant_system(-DMatrix::<f64>::identity(2, 2));
        let chk = check_equilibrium_condition(&sys, &[0.0, 0.0], Stability::Stable).unwrap();
        assert_eq!(chk.verdict, Verdict::Satisfied);
    }

    #[test]
    fn indeterminate_and_precondition() {
        let sys = constant_system(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let chk = check_equilibrium_condition(&sys, &[0.0, 0.0], Stability::Stable).unwrap();
        assert_eq!(chk.verdict, Verdict::Indeterminate);

        let (lin, _, _) = linear_example();
        assert!(matches!(
            check_equilibrium_condition(&lin, &[1.0, 0.0], Stability::Stable),
            Err(Error::NotEquilibrium { .. })
        ));
        assert!(check_equilibrium_condition(&lin, &[0.0], Stability::Stable).is_err());
    }

    #[test]
    fn inconsistent_jacobian_rejected() {
        let res = DynamicalSystem::new(
            "bad",
            2,
            |x| DVector::from_vec(vec![x[0] * x[0], x[1]]),
            |_| DMatrix::identity(2, 2),
        );
        assert!(matches!(res, Err(Error::InconsistentJacobian { .. })));
    }

    #[test]
    fn nonlinear_jacobian_accepted() {
        let sys = DynamicalSystem::new(
            "quad",
            2,
            |x| DVector::from_vec(vec![-x[0] + x[1] * x[1], -x[1]]),
            |x| DMatrix::from_row_slice(2, 2, &[-1.0, 2.0 * x[1], 0.0, -1.0]),
        );
        assert!(sys.is_ok());
    }

    #[test]
    fn registry_lookup() {
        let reg = SystemRegistry::with_builtins();
        assert!(reg.get("linear-example").unwrap().exact.is_some());
        assert!(matches!(reg.get("nope"), Err(Error::UnknownSystem(_))));
        assert_eq!(reg.names().collect::<Vec<_>>(), vec!["linear-example"]);
    }
}
