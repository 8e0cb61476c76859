//! Evaluation of the recovered metric `S` and of `F(S)`, definiteness
//! diagnostics, error metrics and field/ellipse sampling.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::collocation::RecoverySolution;
use crate::error::{Error, Result};
use crate::kernel::distance;
use crate::operator::{apply_f, lyapunov_sum, max_asymmetry};
use crate::system::{DynamicalSystem, ExactMetric};

/// A symmetric matrix field together with its image under the operator.
pub trait MetricField: Sync {
    fn dim(&self) -> usize;
    fn metric(&self, x: &[f64]) -> DMatrix<f64>;
    fn operator_image(&self, x: &[f64]) -> DMatrix<f64>;
}

impl RecoverySolution {
    /// `S(x) = sum_k phi(x_k, x) (J_k b_k + b_k J_k^T) + <grad1 phi(x_k, x), f_k> b_k`.
    pub fn eval_s(&self, x: &[f64]) -> DMatrix<f64> {
        self.accumulate(x, None).0
    }

    /// `F(S)(x) = Df(x)^T S(x) + S(x) Df(x) + S'(x)`.
    pub fn eval_fs(&self, x: &[f64]) -> DMatrix<f64> {
        self.eval_s_and_fs(x).1
    }

    pub fn eval_s_and_fs(&self, x: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let sys = self.system();
        let fx = sys.f(x);
        let (s, orbital) = self.accumulate(x, Some(fx.as_slice()));
        let fs = lyapunov_sum(&sys.jacobian(x), &s) + orbital;
        (s, fs)
    }

    /// Orbital derivative `S'(x) = grad S(x) . f(x)`.
    pub fn eval_orbital(&self, x: &[f64]) -> DMatrix<f64> {
        let fx = self.system().f(x);
        self.accumulate(x, Some(fx.as_slice())).1
    }

    fn accumulate(&self, x: &[f64], fx: Option<&[f64]>) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.set().dim();
        let kernel = self.kernel();
        let mut s = DMatrix::zeros(n, n);
        let mut orbital = DMatrix::zeros(n, n);
        let mut d = vec![0.0; n];
        for ((cp, beta), image) in self.set().points().iter().zip(self.beta()).zip(self.images()) {
            for a in 0..n {
                d[a] = cp.x[a] - x[a];
            }
            let r = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            let Some((phi, p1, p2)) = kernel.radial_triple(r) else {
                continue;
            };
            let d_fk: f64 = d.iter().zip(cp.f.iter()).map(|(a, b)| a * b).sum();
            let g = p1 * d_fk;
            add_scaled(&mut s, phi, image, g, beta);
            if let Some(fx) = fx {
                let d_fx: f64 = d.iter().zip(fx).map(|(a, b)| a * b).sum();
                let fk_fx: f64 = cp.f.iter().zip(fx).map(|(a, b)| a * b).sum();
                // <grad2 phi(x_k, x), f(x)> and f_k^T H12(x_k, x) f(x)
                let h = -p1 * d_fx;
                let q = -p2 * d_fk * d_fx - p1 * fk_fx;
                add_scaled(&mut orbital, h, image, q, beta);
            }
        }
        (s, orbital)
    }
}

#[inline]
fn add_scaled(acc: &mut DMatrix<f64>, a: f64, x: &DMatrix<f64>, b: f64, y: &DMatrix<f64>) {
    for ((o, u), v) in acc.iter_mut().zip(x.iter()).zip(y.iter()) {
        *o += a * u + b * v;
    }
}

impl MetricField for RecoverySolution {
    fn dim(&self) -> usize {
        self.set().dim()
    }

    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        self.eval_s(x)
    }

    fn operator_image(&self, x: &[f64]) -> DMatrix<f64> {
        self.eval_fs(x)
    }
}

/// An exact metric viewed as a field, with `F(M)` from [`apply_f`].
pub struct ExactField<'a> {
    pub system: &'a DynamicalSystem,
    pub exact: &'a ExactMetric,
}

impl MetricField for ExactField<'_> {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn metric(&self, x: &[f64]) -> DMatrix<f64> {
        self.exact.value(x)
    }

    fn operator_image(&self, x: &[f64]) -> DMatrix<f64> {
        apply_f(self.system, &self.exact.value(x), &self.exact.gradient(x), x)
            .expect("exact metric must be symmetric and match the system dimension")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Definiteness {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
    Indeterminate,
}

/// Classify a symmetric matrix. For `2 x 2` the trace/determinant test is
/// used; otherwise the extreme eigenvalues. Quantities within `tol` of zero
/// give [`Definiteness::Indeterminate`].
pub fn definiteness(a: &DMatrix<f64>, tol: f64) -> Result<Definiteness> {
    check_symmetric(a)?;
    if a.nrows() != 2 {
        return definiteness_by_eigenvalues(a, tol);
    }
    let tr = a[(0, 0)] + a[(1, 1)];
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    Ok(if det < -tol {
        Definiteness::Indefinite
    } else if det > tol && tr > tol {
        Definiteness::PositiveDefinite
    } else if det > tol && tr < -tol {
        Definiteness::NegativeDefinite
    } else {
        Definiteness::Indeterminate
    })
}

/// Eigenvalue-based classification for any dimension.
pub fn definiteness_by_eigenvalues(a: &DMatrix<f64>, tol: f64) -> Result<Definiteness> {
    check_symmetric(a)?;
    let (lo, hi) = extreme_eigenvalues(a);
    Ok(if lo > tol {
        Definiteness::PositiveDefinite
    } else if hi < -tol {
        Definiteness::NegativeDefinite
    } else if lo < -tol && hi > tol {
        Definiteness::Indefinite
    } else {
        Definiteness::Indeterminate
    })
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    let dev = max_asymmetry(a);
    if dev > 1e-12 * a.amax().max(1.0) {
        return Err(Error::Asymmetric { deviation: dev });
    }
    Ok(())
}

fn extreme_eigenvalues(a: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(a.clone()).eigenvalues;
    (eig.min(), eig.max())
}

/// Max-norm errors `e = max |S - M|` and `e_s = max |F(S) - F(M)|` over a
/// set of check points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorMetrics {
    pub e: f64,
    pub e_s: f64,
}

pub fn error_report<F: MetricField + ?Sized>(
    field: &F,
    exact: &ExactMetric,
    system: &DynamicalSystem,
    check_points: &[Vec<f64>],
) -> Result<ErrorMetrics> {
    if check_points.is_empty() {
        return Err(Error::Empty("check grid"));
    }
    let reference = ExactField { system, exact };
    let (e, e_s) = check_points
        .par_iter()
        .map(|x| {
            let e = (field.metric(x) - reference.metric(x)).amax();
            let e_s = (field.operator_image(x) - reference.operator_image(x)).amax();
            (e, e_s)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    Ok(ErrorMetrics { e, e_s })
}

/// Scalar diagnostics of `S` and `F(S)` at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub x: Vec<f64>,
    pub s: DMatrix<f64>,
    pub fs: DMatrix<f64>,
    pub trace_s: f64,
    pub det_s: f64,
    pub trace_fs: f64,
    pub neg_det_fs: f64,
    pub min_eig_s: f64,
    pub max_eig_fs: f64,
}

impl FieldSample {
    pub fn new(x: Vec<f64>, s: DMatrix<f64>, fs: DMatrix<f64>) -> Self {
        let (min_eig_s, _) = extreme_eigenvalues(&s);
        let (_, max_eig_fs) = extreme_eigenvalues(&fs);
        Self {
            trace_s: s.trace(),
            det_s: s.determinant(),
            trace_fs: fs.trace(),
            neg_det_fs: -fs.determinant(),
            min_eig_s,
            max_eig_fs,
            x,
            s,
            fs,
        }
    }

    /// `S` positive definite and `F(S)` negative definite.
    pub fn is_contracting(&self, tol: f64) -> bool {
        matches!(definiteness(&self.s, tol), Ok(Definiteness::PositiveDefinite))
            && matches!(definiteness(&self.fs, tol), Ok(Definiteness::NegativeDefinite))
    }
}

/// Sample `S`, `F(S)` and their invariants on `grid`, in grid order.
pub fn field_export<F: MetricField + ?Sized>(field: &F, grid: &[Vec<f64>]) -> Vec<FieldSample> {
    grid.par_iter()
        .map(|x| FieldSample::new(x.clone(), field.metric(x), field.operator_image(x)))
        .collect()
}

/// `m` points `x + v` with `v^T S v = level`, from the eigendecomposition of
/// a positive definite `2 x 2` matrix `S`.
pub fn ellipse_points(x: &[f64], s: &DMatrix<f64>, level: f64, m: usize) -> Result<Vec<[f64; 2]>> {
    if x.len() != 2 || s.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: x.len().max(s.nrows()),
        });
    }
    if !(level.is_finite() && level > 0.0) {
        return Err(Error::InvalidParameter(format!("ellipse level must be positive, got {level}")));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("ellipse needs at least one sample".into()));
    }
    check_symmetric(s)?;
    let eig = SymmetricEigen::new(s.clone());
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NotPositiveDefiniteInput);
    }
    let q = &eig.eigenvectors;
    let r0 = (level / eig.eigenvalues[0]).sqrt();
    let r1 = (level / eig.eigenvalues[1]).sqrt();
    Ok((0..m)
        .map(|t| {
            let theta = std::f64::consts::TAU * t as f64 / m as f64;
            let (a, b) = (r0 * theta.cos(), r1 * theta.sin());
            [x[0] + q[(0, 0)] * a + q[(0, 1)] * b, x[1] + q[(1, 0)] * a + q[(1, 1)] * b]
        })
        .collect())
}

/// Points that fail the contraction test, with their distance to the
/// nearest collocation point.
pub fn contraction_failures(samples: &[FieldSample], centres: &[Vec<f64>], tol: f64) -> Vec<(usize, f64)> {
    samples
        .iter()
        .enumerate()
        .filter(|(_, s)| !s.is_contracting(tol))
        .map(|(i, s)| {
            let near = centres.iter().map(|c| distance(c, &s.x)).fold(f64::INFINITY, f64::min);
            (i, near)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, v)
    }

    #[test]
    fn definiteness_classes() {
        assert_eq!(definiteness(&m(&[1.0, 0.0, 0.0, 1.0]), 1e-12).unwrap(), Definiteness::PositiveDefinite);
        assert_eq!(definiteness(&m(&[-1.0, 0.0, 0.0, -1.0]), 1e-12).unwrap(), Definiteness::NegativeDefinite);
        assert_eq!(definiteness(&m(&[1.0, 0.0, 0.0, -1.0]), 1e-12).unwrap(), Definiteness::Indefinite);
        assert_eq!(definiteness(&m(&[1.0, 0.0, 0.0, 0.0]), 1e-12).unwrap(), Definiteness::Indeterminate);
        assert!(matches!(
            definiteness(&m(&[1.0, 2.0, 0.0, 1.0]), 1e-12),
            Err(Error::Asymmetric { .. })
        ));
        let three = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, -3.0]));
        assert_eq!(definiteness(&three, 1e-12).unwrap(), Definiteness::Indefinite);
    }

    #[test]
    fn trace_det_agrees_with_eigenvalues() {
        let mats = [
            [2.0, 0.3, 0.3, 1.0],
            [-2.0, 0.3, 0.3, -1.0],
            [0.5, 1.0, 1.0, 0.5],
            [-0.1, 0.05, 0.05, 3.0],
        ];
        for v in mats {
            let a = m(&v);
            assert_eq!(definiteness(&a, 1e-12).unwrap(), definiteness_by_eigenvalues(&a, 1e-12).unwrap());
        }
    }

    #[test]
    fn ellipses() {
        let id = DMatrix::identity(2, 2);
        let x = [0.3, -0.2];
        for p in ellipse_points(&x, &id, 1.0, 16).unwrap() {
            let r = ((p[0] - x[0]).powi(2) + (p[1] - x[1]).powi(2)).sqrt();
            assert!((r - 1.0).abs() < 1e-12);
        }
        let pts = ellipse_points(&[0.0, 0.0], &m(&[4.0, 0.0, 0.0, 1.0]), 1.0, 4).unwrap();
        assert_eq!(pts.len(), 4);
        let max_x = pts.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
        let max_y = pts.iter().map(|p| p[1].abs()).fold(0.0, f64::max);
        assert!((max_x - 0.5).abs() < 1e-12);
        assert!((max_y - 1.0).abs() < 1e-12);
        assert!(ellipse_points(&x, &m(&[1.0, 0.0, 0.0, -1.0]), 1.0, 8).is_err());
        assert!(ellipse_points(&x, &id, 0.0, 8).is_err());
    }
}
