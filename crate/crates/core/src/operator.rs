//! The metric operator `F(M) = Df^T M + M Df + M'` and its action on the
//! product tensor kernel `Phi(x, y)_{ijkl} = phi(x, y) delta_ik delta_jl`.
//!
//! With `E_ij = (e_i e_j^T + e_j e_i^T) / 2` the Riesz representer of the
//! functional `M -> F(M)(x_k)_ij` on symmetric matrix fields is
//!
//! ```text
//! v(x) = phi(x_k, x) (J_k E_ij + E_ij J_k^T) + <grad1 phi(x_k, x), f_k> E_ij
//! ```
//!
//! and Gram entries follow by applying `F` once more, at `x_l`, in the
//! second kernel argument.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{distance, RadialKernel};
use crate::system::DynamicalSystem;

/// System data cached at one collocation point.
#[derive(Clone, Debug, PartialEq)]
pub struct CollocationPointData {
    pub x: Vec<f64>,
    pub f: DVector<f64>,
    pub jac: DMatrix<f64>,
}

impl CollocationPointData {
    pub fn new(sys: &DynamicalSystem, x: &[f64]) -> Result<Self> {
        sys.check_point(x)?;
        Ok(Self {
            x: x.to_vec(),
            f: sys.f(x),
            jac: sys.jacobian(x),
        })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Upper-triangular component `(i, j)`, `i <= j`, zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComponentPair {
    pub i: usize,
    pub j: usize,
}

impl ComponentPair {
    pub fn new(i: usize, j: usize) -> Result<Self> {
        if i > j {
            return Err(Error::IndexOutOfRange(format!(
                "component pair ({i}, {j}) must satisfy i <= j"
            )));
        }
        Ok(Self { i, j })
    }

    /// All pairs `i <= j < n` in lexicographic order.
    pub fn all(n: usize) -> Vec<ComponentPair> {
        (0..n)
            .flat_map(|i| (i..n).map(move |j| ComponentPair { i, j }))
            .collect()
    }

    /// Number of pairs, `n (n + 1) / 2`.
    pub fn count(n: usize) -> usize {
        n * (n + 1) / 2
    }

    /// Position within [`ComponentPair::all`].
    pub fn offset(self, n: usize) -> usize {
        self.i * n - self.i * (self.i + 1) / 2 + self.j
    }

    fn check(self, n: usize) -> Result<()> {
        if self.j >= n {
            return Err(Error::IndexOutOfRange(format!(
                "component pair ({}, {}) out of range for n = {n}",
                self.i, self.j
            )));
        }
        Ok(())
    }
}

/// The functional `M -> F(M)(x_k)_ij`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunctionalIndex {
    pub k: usize,
    pub pair: ComponentPair,
}

impl FunctionalIndex {
    /// Row of this functional in the collocation system: points outer,
    /// component pairs inner.
    pub fn row(self, n: usize) -> usize {
        self.k * ComponentPair::count(n) + self.pair.offset(n)
    }
}

/// `(E_ij)_ab` for the symmetrised unit matrix `(e_i e_j^T + e_j e_i^T)/2`.
#[inline]
fn sym_unit(p: ComponentPair, a: usize, b: usize) -> f64 {
    let hit = |u: usize, v: usize| (u == p.i && v == p.j) as u8 as f64;
    0.5 * (hit(a, b) + hit(b, a))
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            worst = worst.max((m[(a, b)] - m[(b, a)]).abs());
        }
    }
    worst
}

/// `J^T S + S J` for symmetric `S`, symmetric bit for bit.
pub(crate) fn lyapunov_sum(jac: &DMatrix<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let mut out = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let mut acc = 0.0;
            for m in 0..n {
                acc += jac[(m, a)] * s[(m, b)] + s[(a, m)] * jac[(m, b)];
            }
            out[(a, b)] = acc;
            out[(b, a)] = acc;
        }
    }
    out
}

/// `F(M)(x) = Df(x)^T M + M Df(x) + G`, `G_ij = grad M_ij(x) . f(x)`.
///
/// `gradients[a]` holds `dM/dx_a`.
pub fn apply_f(
    sys: &DynamicalSystem,
    value: &DMatrix<f64>,
    gradients: &[DMatrix<f64>],
    x: &[f64],
) -> Result<DMatrix<f64>> {
    let n = sys.dim();
    sys.check_point(x)?;
    if value.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: value.nrows(),
        });
    }
    if gradients.len() != n || gradients.iter().any(|g| g.shape() != (n, n)) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: gradients.len(),
        });
    }
    let dev = std::iter::once(value)
        .chain(gradients)
        .map(max_asymmetry)
        .fold(0.0, f64::max);
    if dev > 1e-12 {
        return Err(Error::Asymmetric { deviation: dev });
    }
    let fx = sys.f(x);
    let mut out = lyapunov_sum(&sys.jacobian(x), value);
    for (g, fa) in gradients.iter().zip(fx.iter()) {
        out += g * *fa;
    }
    Ok(out)
}

/// `F(Phi(., x)_{.,.,mu,nu})(x_k)`: the operator applied at `x_k` to the
/// (generally non-symmetric) matrix field `y -> phi(y, x) E_{mu nu}`.
pub fn representer_column(
    kernel: &RadialKernel,
    cp: &CollocationPointData,
    x: &[f64],
    mu: usize,
    nu: usize,
) -> Result<DMatrix<f64>> {
    let n = cp.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    if mu >= n || nu >= n {
        return Err(Error::IndexOutOfRange(format!(
            "kernel column ({mu}, {nu}) out of range for n = {n}"
        )));
    }
    let phi = kernel.phi(&cp.x, x)?;
    let grad = kernel.grad1_phi(&cp.x, x)?;
    let orbital: f64 = grad.iter().zip(cp.f.iter()).map(|(a, b)| a * b).sum();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n {
        h[(mu, j)] += phi * cp.jac[(nu, j)];
    }
    for i in 0..n {
        h[(i, nu)] += phi * cp.jac[(mu, i)];
    }
    h[(mu, nu)] += orbital;
    Ok(h)
}

/// Riesz representer `v(x) = sum_{mu <= nu} lambda(Phi(., x) E^s_{mu nu}) E^s_{mu nu}`
/// of the functional `M -> F(M)(x_k)_ij`, assembled from kernel columns in
/// the orthonormal basis of symmetric matrices.
pub fn riesz_representer(
    kernel: &RadialKernel,
    cp: &CollocationPointData,
    pair: ComponentPair,
    x: &[f64],
) -> Result<DMatrix<f64>> {
    let n = cp.dim();
    pair.check(n)?;
    let (i, j) = (pair.i, pair.j);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = DMatrix::zeros(n, n);
    for mu in 0..n {
        let h = representer_column(kernel, cp, x, mu, mu)?;
        v[(mu, mu)] = h[(i, j)];
        for nu in mu + 1..n {
            let a = representer_column(kernel, cp, x, mu, nu)?;
            let b = representer_column(kernel, cp, x, nu, mu)?;
            // lambda applied to phi E^s, then scaled by the basis entries
            let coeff = inv_sqrt2 * (a[(i, j)] + b[(i, j)]);
            v[(mu, nu)] = coeff * inv_sqrt2;
            v[(nu, mu)] = coeff * inv_sqrt2;
        }
    }
    Ok(v)
}

/// `lambda_l^{(p,q)}(v_k^{(i,j)})`: functional at `cp_l` applied to the
/// representer of the functional at `cp_k`.
pub fn gram_entry(
    kernel: &RadialKernel,
    cp_l: &CollocationPointData,
    pair_l: ComponentPair,
    cp_k: &CollocationPointData,
    pair_k: ComponentPair,
) -> Result<f64> {
    let n = cp_l.dim();
    if cp_k.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cp_k.dim(),
        });
    }
    pair_l.check(n)?;
    pair_k.check(n)?;
    let m = ComponentPair::count(n);
    let mut scratch = GramScratch::new(n);
    let mut block = vec![0.0; m * m];
    gram_block(kernel, cp_l, cp_k, &mut scratch, &mut block);
    Ok(block[pair_l.offset(n) * m + pair_k.offset(n)])
}

pub(crate) struct GramScratch {
    pairs: Vec<ComponentPair>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl GramScratch {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            pairs: ComponentPair::all(n),
            p: vec![0.0; n * n],
            q: vec![0.0; n * n],
        }
    }
}

/// Fill `out` (row-major, rows = pairs at `l`, columns = pairs at `k`) with
/// the Gram block between two collocation points. Returns `false`, leaving
/// `out` zeroed, when the points are outside each other's support.
pub(crate) fn gram_block(
    kernel: &RadialKernel,
    l: &CollocationPointData,
    k: &CollocationPointData,
    scratch: &mut GramScratch,
    out: &mut [f64],
) -> bool {
    let n = l.dim();
    let m = scratch.pairs.len();
    let r = distance(&k.x, &l.x);
    let Some((phi, p1, p2)) = kernel.radial_triple(r) else {
        out.fill(0.0);
        return false;
    };
    // d = x_k - x_l
    let mut d_fk = 0.0;
    let mut d_fl = 0.0;
    let mut fk_fl = 0.0;
    for a in 0..n {
        let d = k.x[a] - l.x[a];
        d_fk += d * k.f[a];
        d_fl += d * l.f[a];
        fk_fl += k.f[a] * l.f[a];
    }
    // <grad1 phi(x_k, x_l), f_k>, <grad2 phi(x_k, x_l), f_l>, f_k^T H12 f_l
    let g = p1 * d_fk;
    let h = -p1 * d_fl;
    let s = -p2 * d_fk * d_fl - p1 * fk_fl;

    let jk = &k.jac;
    let jl = &l.jac;
    for (col, &ck) in scratch.pairs.iter().enumerate() {
        // P = J_k E + E J_k^T, Q = phi P + g E
        for a in 0..n {
            for b in 0..n {
                let mut pab = 0.0;
                for t in 0..n {
                    pab += jk[(a, t)] * sym_unit(ck, t, b) + sym_unit(ck, a, t) * jk[(b, t)];
                }
                scratch.p[a * n + b] = pab;
                scratch.q[a * n + b] = phi * pab + g * sym_unit(ck, a, b);
            }
        }
        // T = J_l^T Q + Q J_l + h P + s E
        for (row, &cl) in scratch.pairs.iter().enumerate() {
            let (pp, qq) = (cl.i, cl.j);
            let mut t = 0.0;
            for u in 0..n {
                t += jl[(u, pp)] * scratch.q[u * n + qq] + scratch.q[pp * n + u] * jl[(u, qq)];
            }
            t += h * scratch.p[pp * n + qq] + s * sym_unit(ck, pp, qq);
            out[row * m + col] = t;
        }
    }
    true
}
