//! Assembly and solution of the symmetric positive definite collocation
//! system, and the recovered metric coefficients.
//!
//! Functionals are ordered with the point index outermost and the component
//! pairs `i <= j` inner, lexicographically. With `m = n (n + 1) / 2` the
//! system has `N m` unknowns `gamma_k^(i,j)`; they are folded into symmetric
//! coefficient matrices with `beta_k^(i,i) = gamma_k^(i,i)` and
//! `beta_k^(i,j) = beta_k^(j,i) = gamma_k^(i,j) / 2`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt;
use faer::{Mat, Par};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::RadialKernel;
use crate::operator::{
    gram_block, lyapunov_sum, max_asymmetry, CollocationPointData, ComponentPair, FunctionalIndex,
    GramScratch,
};
use crate::system::{check_equilibrium_condition, DynamicalSystem, Verdict};

/// Pairwise-distinct collocation points with cached system data.
#[derive(Clone, Debug)]
pub struct CollocationSet {
    system: DynamicalSystem,
    kernel: RadialKernel,
    points: Vec<CollocationPointData>,
}

impl CollocationSet {
    pub fn new(system: &DynamicalSystem, kernel: &RadialKernel, points: &[Vec<f64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("collocation points"));
        }
        let data = points
            .iter()
            .map(|x| CollocationPointData::new(system, x))
            .collect::<Result<Vec<_>>>()?;
        check_distinct(points)?;
        check_equilibria(system, points)?;
        Ok(Self {
            system: system.clone(),
            kernel: kernel.clone(),
            points: data,
        })
    }

    pub fn system(&self) -> &DynamicalSystem {
        &self.system
    }

    pub fn kernel(&self) -> &RadialKernel {
        &self.kernel
    }

    pub fn points(&self) -> &[CollocationPointData] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// Size of the collocation system, `N n (n + 1) / 2`.
    pub fn unknowns(&self) -> usize {
        self.len() * ComponentPair::count(self.dim())
    }

    /// All functionals in system order.
    pub fn functionals(&self) -> impl Iterator<Item = FunctionalIndex> + '_ {
        let pairs = ComponentPair::all(self.dim());
        (0..self.len()).flat_map(move |k| pairs.clone().into_iter().map(move |pair| FunctionalIndex { k, pair }))
    }

    fn block_size(&self) -> usize {
        ComponentPair::count(self.dim())
    }

    /// Lower triangle of the Gram matrix, column blocks filled in parallel.
    fn assemble_lower(&self) -> Mat<f64> {
        let n = self.dim();
        let m = self.block_size();
        let size = self.unknowns();
        let mut a = Mat::<f64>::zeros(size, size);
        a.par_col_chunks_mut(m)
            .enumerate()
            .for_each_init(
                || (GramScratch::new(n), vec![0.0; m * m]),
                |(scratch, block), (k, mut cols)| {
                    let pk = &self.points[k];
                    for l in k..self.len() {
                        if !gram_block(&self.kernel, &self.points[l], pk, scratch, block) {
                            continue;
                        }
                        for row in 0..m {
                            for col in 0..m {
                                if l == k && row < col {
                                    continue;
                                }
                                cols[(l * m + row, col)] = block[row * m + col];
                            }
                        }
                    }
                },
            );
        a
    }

    /// `A v`, recomputing Gram blocks on the fly.
    fn gram_matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let m = self.block_size();
        let mut out = vec![0.0; self.unknowns()];
        out.par_chunks_mut(m).enumerate().for_each_init(
            || (GramScratch::new(n), vec![0.0; m * m]),
            |(scratch, block), (l, rows)| {
                let pl = &self.points[l];
                for (k, pk) in self.points.iter().enumerate() {
                    if !gram_block(&self.kernel, pl, pk, scratch, block) {
                        continue;
                    }
                    for (row, acc) in rows.iter_mut().enumerate() {
                        *acc += block[row * m..(row + 1) * m]
                            .iter()
                            .zip(&v[k * m..(k + 1) * m])
                            .map(|(a, b)| a * b)
                            .sum::<f64>();
                    }
                }
            },
        );
        out
    }
}

fn check_distinct(points: &[Vec<f64>]) -> Result<()> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .iter()
            .zip(&points[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for w in order.windows(2) {
        if points[w[0]] == points[w[1]] {
            return Err(Error::DuplicatePoints {
                first: w[0].min(w[1]),
                second: w[0].max(w[1]),
            });
        }
    }
    Ok(())
}

/// Known equilibria inside the bounding box of the points must satisfy the
/// eigenvalue condition.
fn check_equilibria(system: &DynamicalSystem, points: &[Vec<f64>]) -> Result<()> {
    let n = system.dim();
    let lo: Vec<f64> = (0..n).map(|d| points.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min)).collect();
    let hi: Vec<f64> = (0..n).map(|d| points.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max)).collect();
    for (x0, stability) in system.equilibria() {
        let inside = (0..n).all(|d| lo[d] <= x0[d] && x0[d] <= hi[d]);
        if !inside {
            continue;
        }
        let chk = check_equilibrium_condition(system, x0, *stability)?;
        if chk.verdict != Verdict::Satisfied {
            return Err(Error::InvalidParameter(format!(
                "equilibrium {x0:?} of `{}` fails its eigenvalue condition ({:?})",
                system.label(),
                chk.verdict
            )));
        }
    }
    Ok(())
}

/// Symmetric Gram matrix of the collocation functionals. Only the lower
/// triangle is stored.
pub struct GramMatrix {
    lower: Mat<f64>,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        if row >= col {
            self.lower[(row, col)]
        } else {
            self.lower[(col, row)]
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.lower[(i, i)]).sum()
    }

    /// Full symmetric copy; intended for small systems.
    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim(), self.dim(), |r, c| self.get(r, c))
    }
}

impl std::fmt::Debug for GramMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GramMatrix({0}x{0})", self.dim())
    }
}

/// Build the collocation set and its Gram matrix.
pub fn assemble(
    system: &DynamicalSystem,
    kernel: &RadialKernel,
    points: &[Vec<f64>],
) -> Result<(CollocationSet, GramMatrix)> {
    let set = CollocationSet::new(system, kernel, points)?;
    let lower = set.assemble_lower();
    Ok((set, GramMatrix { lower }))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// On factorization failure, retry once with the diagonal shifted by
    /// `1e-10 trace(A) / dim`.
    pub regularize: bool,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SolverDiagnostics {
    pub unknowns: usize,
    /// `|A gamma - b| / |b|`.
    pub relative_residual: f64,
    /// Pivot at which the unshifted factorization failed, if it did.
    pub failed_pivot: Option<usize>,
    /// Diagonal shift that was applied, if any.
    pub regularization: Option<f64>,
}

/// The recovered metric: coefficients `beta_k` over a collocation set.
#[derive(Clone, Debug)]
pub struct RecoverySolution {
    set: CollocationSet,
    gamma: Vec<f64>,
    beta: Vec<DMatrix<f64>>,
    images: Vec<DMatrix<f64>>,
    rhs: DMatrix<f64>,
    diagnostics: SolverDiagnostics,
}

impl RecoverySolution {
    pub fn set(&self) -> &CollocationSet {
        &self.set
    }

    pub fn system(&self) -> &DynamicalSystem {
        self.set.system()
    }

    pub fn kernel(&self) -> &RadialKernel {
        self.set.kernel()
    }

    /// Raw solution vector in functional order.
    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn beta(&self) -> &[DMatrix<f64>] {
        &self.beta
    }

    /// `J_k beta_k + beta_k J_k^T` per point.
    pub(crate) fn images(&self) -> &[DMatrix<f64>] {
        &self.images
    }

    pub fn rhs(&self) -> &DMatrix<f64> {
        &self.rhs
    }

    pub fn diagnostics(&self) -> &SolverDiagnostics {
        &self.diagnostics
    }

    /// Build a solution directly from symmetric coefficient matrices.
    pub fn from_beta(set: CollocationSet, beta: Vec<DMatrix<f64>>, rhs: DMatrix<f64>) -> Result<Self> {
        let n = set.dim();
        if beta.len() != set.len() || beta.iter().any(|b| b.shape() != (n, n)) {
            return Err(Error::DimensionMismatch {
                expected: set.len(),
                found: beta.len(),
            });
        }
        let pairs = ComponentPair::all(n);
        let gamma = beta
            .iter()
            .flat_map(|b| pairs.iter().map(move |p| if p.i == p.j { b[(p.i, p.i)] } else { 2.0 * b[(p.i, p.j)] }))
            .collect();
        Ok(Self::from_parts(set, gamma, rhs, SolverDiagnostics {
            unknowns: 0,
            relative_residual: f64::NAN,
            failed_pivot: None,
            regularization: None,
        }))
    }

    fn from_parts(set: CollocationSet, gamma: Vec<f64>, rhs: DMatrix<f64>, mut diagnostics: SolverDiagnostics) -> Self {
        let n = set.dim();
        let m = ComponentPair::count(n);
        let pairs = ComponentPair::all(n);
        let beta: Vec<DMatrix<f64>> = gamma
            .chunks(m)
            .map(|g| {
                let mut b = DMatrix::zeros(n, n);
                for (p, &v) in pairs.iter().zip(g) {
                    if p.i == p.j {
                        b[(p.i, p.i)] = v;
                    } else {
                        b[(p.i, p.j)] = 0.5 * v;
                        b[(p.j, p.i)] = 0.5 * v;
                    }
                }
                b
            })
            .collect();
        // lyapunov_sum(J^T, b) = J b + b J^T
        let images = set
            .points()
            .iter()
            .zip(&beta)
            .map(|(cp, b)| lyapunov_sum(&cp.jac.transpose(), b))
            .collect();
        diagnostics.unknowns = set.unknowns();
        Self {
            set,
            gamma,
            beta,
            images,
            rhs,
            diagnostics,
        }
    }
}

fn factor_in_place(a: &mut Mat<f64>) -> std::result::Result<(), usize> {
    let dim = a.nrows();
    let par = Par::rayon(0);
    let mut mem = MemBuffer::new(llt::factor::cholesky_in_place_scratch::<f64>(dim, par, Default::default()));
    llt::factor::cholesky_in_place(
        a.as_mut(),
        Default::default(),
        par,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map(|_| ())
    .map_err(|llt::factor::LltError::NonPositivePivot { index }| index)
}

/// Solve `A gamma = b` with `b` stacking `-C_ij` per functional, by dense
/// Cholesky factorization (in place; the Gram matrix is consumed).
pub fn solve(
    gram: GramMatrix,
    rhs: &DMatrix<f64>,
    set: CollocationSet,
    options: SolveOptions,
) -> Result<RecoverySolution> {
    let n = set.dim();
    let dim = set.unknowns();
    if gram.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: gram.dim(),
        });
    }
    if rhs.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.nrows(),
        });
    }
    if max_asymmetry(rhs) > 1e-12 || rhs.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefiniteInput);
    }
    let pairs = ComponentPair::all(n);
    let b: Vec<f64> = (0..set.len())
        .flat_map(|_| pairs.iter().map(|p| -rhs[(p.i, p.j)]))
        .collect();

    let trace = gram.trace();
    let mut lower = gram.lower;
    let mut failed_pivot = None;
    let mut regularization = None;
    if let Err(pivot) = factor_in_place(&mut lower) {
        failed_pivot = Some(pivot);
        if !options.regularize {
            return Err(Error::NotPositiveDefinite { pivot, dim });
        }
        let eps = 1e-10 * trace / dim as f64;
        log::warn!("Cholesky failed at pivot {pivot} of {dim}; retrying with diagonal shift {eps:e}");
        lower = set.assemble_lower();
        for i in 0..dim {
            lower[(i, i)] += eps;
        }
        factor_in_place(&mut lower).map_err(|pivot| Error::NotPositiveDefinite { pivot, dim })?;
        regularization = Some(eps);
    }

    let mut x = Mat::<f64>::from_fn(dim, 1, |i, _| b[i]);
    let par = Par::rayon(0);
    let mut mem = MemBuffer::new(llt::solve::solve_in_place_scratch::<f64>(dim, 1, par));
    llt::solve::solve_in_place(lower.as_ref(), x.as_mut(), par, MemStack::new(&mut mem));
    drop(lower);
    let gamma: Vec<f64> = (0..dim).map(|i| x[(i, 0)]).collect();

    let ag = set.gram_matvec(&gamma);
    let res = ag.iter().zip(&b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let diagnostics = SolverDiagnostics {
        unknowns: dim,
        relative_residual: res / bn,
        failed_pivot,
        regularization,
    };
    Ok(RecoverySolution::from_parts(set, gamma, rhs.clone(), diagnostics))
}

/// Assemble and solve in one step.
pub fn recover(
    system: &DynamicalSystem,
    kernel: &RadialKernel,
    points: &[Vec<f64>],
    rhs: &DMatrix<f64>,
    options: SolveOptions,
) -> Result<RecoverySolution> {
    let (set, gram) = assemble(system, kernel, points)?;
    solve(gram, rhs, set, options)
}
