//! Structural invariants of the kernel, the operator, the Gram matrix and
//! the recovered metric, checked on randomly generated inputs.

mod common;

use common::*;
use contraction_metric::prelude::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn kernel() -> RadialKernel {
    wendland_c8(0.9).unwrap()
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn sym2(a: f64, b: f64, c: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a, b, b, c])
}

proptest! {
    #![proptest_config(config(20))]

    #[test]
    fn scalar_kernel_matrix_is_positive_definite(seed in any::<u64>(), count in 2usize..=15) {
        let k = kernel();
        let pts = random_distinct_points(&mut rng(seed), count, 0.05);
        let phi = DMatrix::from_fn(count, count, |i, j| k.phi(&pts[i], &pts[j]).unwrap());
        prop_assert!(phi.clone().cholesky().is_some());
        prop_assert!(phi.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn gram_matrix_is_symmetric_positive_definite(seed in any::<u64>(), count in 1usize..=15) {
        let (sys, _, _) = linear_example();
        let k = kernel();
        let pts = random_distinct_points(&mut rng(seed), count, 0.15);
        let (set, gram) = assemble(&sys, &k, &pts).unwrap();
        prop_assert_eq!(gram.dim(), 3 * count);
        // independent entries of the two triangles agree
        let fns: Vec<FunctionalIndex> = set.functionals().collect();
        let cps = set.points();
        let mut scale: f64 = 0.0;
        let mut asym: f64 = 0.0;
        for a in &fns {
            for b in &fns {
                let ab = gram_entry(&k, &cps[a.k], a.pair, &cps[b.k], b.pair).unwrap();
                let ba = gram_entry(&k, &cps[b.k], b.pair, &cps[a.k], a.pair).unwrap();
                scale = scale.max(ab.abs());
                asym = asym.max((ab - ba).abs());
            }
        }
        prop_assert!(asym <= 1e-12 * scale, "asymmetry {asym:e} at scale {scale:e}");
        let dense = gram.to_dense();
        prop_assert!(dense.clone().cholesky().is_some());
        prop_assert!(dense.symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn operator_preserves_symmetry(seed in any::<u64>()) {
        let (sys, _, _) = linear_example();
        let mut r = rng(seed);
        let p = random_point(&mut r, 11, 3.0);
        let m = sym2(p[0], p[1], p[2]);
        let grads = [sym2(p[3], p[4], p[5]), sym2(p[6], p[7], p[8])];
        let out = apply_f(&sys, &m, &grads, &p[9..11]).unwrap();
        prop_assert!((&out - out.transpose()).amax() <= 1e-13 * out.amax().max(1.0));
    }

    #[test]
    fn representer_columns_transpose_under_index_swap(seed in any::<u64>()) {
        let (sys, _, _) = linear_example();
        let k = kernel();
        let mut r = rng(seed);
        let (xk, x) = (random_point(&mut r, 2, 0.5), random_point(&mut r, 2, 0.5));
        let cp = CollocationPointData::new(&sys, &xk).unwrap();
        let a = representer_column(&k, &cp, &x, 0, 1).unwrap();
        let b = representer_column(&k, &cp, &x, 1, 0).unwrap();
        prop_assert!((&a - b.transpose()).amax() <= 1e-13 * a.amax());
        // the symmetrised representer is symmetric
        for pair in ComponentPair::all(2) {
            let v = riesz_representer(&k, &cp, pair, &x).unwrap();
            prop_assert!((&v - v.transpose()).amax() <= 1e-13 * v.amax().max(1e-300));
        }
    }

    #[test]
    fn kernel_terms_vanish_outside_the_support(seed in any::<u64>(), dist in 1.0f64 / 0.9..3.0, angle in 0.0f64..std::f64::consts::TAU) {
        let (sys, _, _) = linear_example();
        let k = kernel();
        let xk = random_point(&mut rng(seed), 2, 1.0);
        let x = vec![xk[0] + dist * angle.cos(), xk[1] + dist * angle.sin()];
        prop_assert_eq!(k.phi(&xk, &x).unwrap(), 0.0);
        prop_assert!(k.grad1_phi(&xk, &x).unwrap().iter().all(|v| *v == 0.0));
        prop_assert!(k.hess12_phi(&xk, &x).unwrap().iter().all(|v| *v == 0.0));
        let cp = CollocationPointData::new(&sys, &xk).unwrap();
        let cq = CollocationPointData::new(&sys, &x).unwrap();
        for p in ComponentPair::all(2) {
            prop_assert_eq!(riesz_representer(&k, &cp, p, &x).unwrap().amax(), 0.0);
            for q in ComponentPair::all(2) {
                prop_assert_eq!(gram_entry(&k, &cp, p, &cq, q).unwrap(), 0.0);
            }
        }
    }
}

proptest! {
    #![proptest_config(config(10))]

    #[test]
    fn assembly_and_solve_are_deterministic(seed in any::<u64>(), count in 1usize..=15) {
        let (sys, _, c) = linear_example();
        let k = kernel();
        let pts = random_distinct_points(&mut rng(seed), count, 0.15);
        let (_, g1) = assemble(&sys, &k, &pts).unwrap();
        let (_, g2) = assemble(&sys, &k, &pts).unwrap();
        prop_assert_eq!(g1.to_dense(), g2.to_dense());
        let s1 = recover(&sys, &k, &pts, &c, SolveOptions::default()).unwrap();
        let s2 = recover(&sys, &k, &pts, &c, SolveOptions::default()).unwrap();
        prop_assert_eq!(s1.gamma(), s2.gamma());
        prop_assert_eq!(s1.beta(), s2.beta());
    }

    #[test]
    fn metric_is_invariant_under_point_permutation(seed in any::<u64>(), count in 2usize..=15) {
        let (sys, _, c) = linear_example();
        let k = kernel();
        let mut r = rng(seed);
        let pts = random_distinct_points(&mut r, count, 0.15);
        let mut perm = pts.clone();
        perm.reverse();
        perm.rotate_left(count / 3);
        let a = recover(&sys, &k, &pts, &c, SolveOptions::default()).unwrap();
        let b = recover(&sys, &k, &perm, &c, SolveOptions::default()).unwrap();
        for _ in 0..10 {
            let x = random_point(&mut r, 2, 1.2);
            let (sa, sb) = (a.eval_s(&x), b.eval_s(&x));
            prop_assert!((&sa - &sb).amax() <= 1e-10 * sa.amax().max(1.0));
        }
    }

    #[test]
    fn coefficients_scale_with_the_right_hand_side(seed in any::<u64>(), count in 1usize..=15) {
        let (sys, _, c) = linear_example();
        let k = kernel();
        let pts = random_distinct_points(&mut rng(seed), count, 0.15);
        let a = recover(&sys, &k, &pts, &c, SolveOptions::default()).unwrap();
        let b = recover(&sys, &k, &pts, &(&c * 4.0), SolveOptions::default()).unwrap();
        let scaled: Vec<f64> = a.gamma().iter().map(|g| 4.0 * g).collect();
        prop_assert_eq!(scaled.as_slice(), b.gamma());
    }

    #[test]
    fn solution_interpolates_at_collocation_points(seed in any::<u64>(), count in 1usize..=15) {
        let (sys, _, _) = linear_example();
        let k = kernel();
        let mut r = rng(seed);
        let pts = random_distinct_points(&mut r, count, 0.15);
        // a random symmetric positive definite right-hand side
        let p = random_point(&mut r, 3, 1.0);
        let c = sym2(2.0 + p[0], p[1], 2.0 + p[2]);
        let sol = recover(&sys, &k, &pts, &c, SolveOptions::default()).unwrap();
        let defect = max_interpolation_defect(&sol);
        prop_assert!(defect <= 1e-8 * c.amax(), "defect {defect:e}");
    }

    #[test]
    fn evaluated_metric_is_exactly_symmetric(seed in any::<u64>(), count in 1usize..=15) {
        let (sys, _, c) = linear_example();
        let k = kernel();
        let mut r = rng(seed);
        let pts = random_distinct_points(&mut r, count, 0.15);
        let sol = recover(&sys, &k, &pts, &c, SolveOptions::default()).unwrap();
        for _ in 0..10 {
            let x = random_point(&mut r, 2, 1.2);
            let (s, fs) = sol.eval_s_and_fs(&x);
            prop_assert_eq!(&s, &s.transpose());
            prop_assert_eq!(&fs, &fs.transpose());
        }
    }
}

#[test]
fn component_pairs_enumerate_lexicographically() {
    for n in 1..6 {
        let pairs = ComponentPair::all(n);
        assert_eq!(pairs.len(), n * (n + 1) / 2);
        assert_eq!(ComponentPair::count(n), pairs.len());
        for (idx, p) in pairs.iter().enumerate() {
            assert!(p.i <= p.j);
            assert_eq!(p.offset(n), idx);
        }
        assert!(pairs.windows(2).all(|w| (w[0].i, w[0].j) < (w[1].i, w[1].j)));
    }
}

#[test]
fn separation_distance_matches_pairwise_scan() {
    let mut r = rng(71);
    let pts: Vec<Vec<f64>> = (0..100).map(|_| random_point(&mut r, 2, 1.0)).collect();
    let mut brute = f64::INFINITY;
    for i in 0..pts.len() {
        for j in 0..i {
            brute = brute.min(((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt());
        }
    }
    assert_eq!(separation_distance(&pts).unwrap(), brute);
}

#[test]
fn ellipse_at_equilibrium_lies_on_the_level_set() {
    let (sys, _, c) = linear_example();
    let pts = make_grid(&GridSpec::nodes(vec![[-1.0, 1.0], [-1.0, 1.0]], 0.25)).unwrap();
    let sol = recover(&sys, &kernel(), &pts, &c, SolveOptions::default()).unwrap();
    let s = sol.eval_s(&[0.0, 0.0]);
    let curve = ellipse_points(&[0.0, 0.0], &s, 0.01, 64).unwrap();
    assert_eq!(curve.len(), 64);
    for p in curve {
        let v = nalgebra::Vector2::new(p[0], p[1]);
        let q = (v.transpose() * s.fixed_view::<2, 2>(0, 0) * v)[(0, 0)];
        assert!((q - 0.01).abs() <= 1e-10, "{q}");
    }
}
