//! Finite-difference oracles shared by the integration tests. Nothing here
//! calls the closed-form derivative paths it is used to check.

#![allow(dead_code)]

use contraction_metric::prelude::*;
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_point(rng: &mut StdRng, n: usize, half_width: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-half_width..half_width)).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(a.abs()).max(1e-300)
}

/// Relative error of matrices in the max norm.
pub fn mat_rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(a.amax()).max(1e-300)
}

pub fn shifted(x: &[f64], a: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[a] += h;
    y
}

/// Central differences of `phi(., y)` at `x`.
pub fn fd_grad1_phi(k: &RadialKernel, x: &[f64], y: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|a| (k.phi(&shifted(x, a, h), y).unwrap() - k.phi(&shifted(x, a, -h), y).unwrap()) / (2.0 * h))
        .collect()
}

/// Mixed central differences `d^2 phi / dx_a dy_b`, row-major.
pub fn fd_hess12_phi(k: &RadialKernel, x: &[f64], y: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..n {
            let v = |sa: f64, sb: f64| k.phi(&shifted(x, a, sa * h), &shifted(y, b, sb * h)).unwrap();
            out[a * n + b] = (v(1.0, 1.0) - v(1.0, -1.0) - v(-1.0, 1.0) + v(-1.0, -1.0)) / (4.0 * h * h);
        }
    }
    out
}

/// Central-difference gradients `[dM/dx_a]` of a matrix field.
pub fn fd_matrix_gradient<F: Fn(&[f64]) -> DMatrix<f64>>(field: F, x: &[f64], h: f64) -> Vec<DMatrix<f64>> {
    (0..x.len())
        .map(|a| (field(&shifted(x, a, h)) - field(&shifted(x, a, -h))) / (2.0 * h))
        .collect()
}

/// `J^T M + M J + sum_a f_a dM/dx_a` for an arbitrary (not necessarily
/// symmetric) matrix, written out independently of the library.
pub fn general_operator(sys: &DynamicalSystem, m: &DMatrix<f64>, grads: &[DMatrix<f64>], x: &[f64]) -> DMatrix<f64> {
    let j = sys.jacobian(x);
    let f = sys.f(x);
    let mut out = j.transpose() * m + m * &j;
    for (a, g) in grads.iter().enumerate() {
        out += g * f[a];
    }
    out
}

/// Brute-force `F(phi(., x) E_{mu nu})(x_k)` with finite-difference
/// gradients of the kernel.
pub fn brute_representer_column(
    sys: &DynamicalSystem,
    k: &RadialKernel,
    xk: &[f64],
    x: &[f64],
    mu: usize,
    nu: usize,
    h: f64,
) -> DMatrix<f64> {
    let n = sys.dim();
    let field = |y: &[f64]| {
        let mut e = DMatrix::zeros(n, n);
        e[(mu, nu)] = k.phi(y, x).unwrap();
        e
    };
    let grads = fd_matrix_gradient(field, xk, h);
    general_operator(sys, &field(xk), &grads, xk)
}

/// Gram entry by applying the library operator, with finite-difference
/// gradients, to the explicitly evaluated Riesz representer field.
pub fn brute_gram_entry(
    sys: &DynamicalSystem,
    k: &RadialKernel,
    cp_l: &CollocationPointData,
    pl: ComponentPair,
    cp_k: &CollocationPointData,
    pk: ComponentPair,
    h: f64,
) -> f64 {
    let field = |x: &[f64]| riesz_representer(k, cp_k, pk, x).unwrap();
    let mut grads = fd_matrix_gradient(field, &cp_l.x, h);
    for g in &mut grads {
        // finite differences of a symmetric field are symmetric up to round-off
        let t = g.transpose();
        *g = (&*g + t) * 0.5;
    }
    let fv = apply_f(sys, &field(&cp_l.x), &grads, &cp_l.x).unwrap();
    fv[(pl.i, pl.j)]
}

/// Orbital derivative of `S` by central differences along `f(x)`.
pub fn fd_orbital(sol: &RecoverySolution, x: &[f64], t: f64) -> DMatrix<f64> {
    let f = sol.system().f(x);
    let xp: Vec<f64> = x.iter().zip(f.iter()).map(|(a, b)| a + t * b).collect();
    let xm: Vec<f64> = x.iter().zip(f.iter()).map(|(a, b)| a - t * b).collect();
    (sol.eval_s(&xp) - sol.eval_s(&xm)) / (2.0 * t)
}

/// Form-1 evaluation: `S(x) = sum_k sum_{i<=j} gamma_k^(i,j) v_k^(i,j)(x)`.
pub fn eval_s_form1(sol: &RecoverySolution, x: &[f64]) -> DMatrix<f64> {
    let n = sol.set().dim();
    let mut s = DMatrix::zeros(n, n);
    for (idx, g) in sol.set().functionals().zip(sol.gamma()) {
        let cp = &sol.set().points()[idx.k];
        s += riesz_representer(sol.kernel(), cp, idx.pair, x).unwrap() * *g;
    }
    s
}

/// Random pairwise-distinct points in `[-1, 1]^2`.
pub fn random_distinct_points(rng: &mut StdRng, count: usize, min_gap: f64) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    while pts.len() < count {
        let p = random_point(rng, 2, 1.0);
        if pts.iter().all(|q| ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt() >= min_gap) {
            pts.push(p);
        }
    }
    pts
}

pub fn max_interpolation_defect(sol: &RecoverySolution) -> f64 {
    let c = sol.rhs();
    sol.set()
        .points()
        .iter()
        .map(|cp| (sol.eval_fs(&cp.x) + c).amax())
        .fold(0.0, f64::max)
}
