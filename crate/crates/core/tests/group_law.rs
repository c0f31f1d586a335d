use carnot_core::{catalog, CarnotGroup, Exact, Scalar};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn mexp(n: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = n.nrows();
    let mut out = DMatrix::identity(dim, dim);
    let mut term = DMatrix::identity(dim, dim);
    for k in 1..dim {
        term = &term * n / k as f64;
        out += &term;
    }
    out
}

fn mlog(m: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = m.nrows();
    let x = m - DMatrix::identity(dim, dim);
    let mut out = DMatrix::zeros(dim, dim);
    let mut pow = DMatrix::identity(dim, dim);
    for k in 1..dim {
        pow = &pow * &x;
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        out += &pow * (sign / k as f64);
    }
    out
}

fn unit(dim: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    m[(i, j)] = 1.0;
    m
}

/// Faithful representation of the Engel algebra by strictly upper
/// triangular 4x4 matrices.
fn engel_rep(p: &[f64]) -> DMatrix<f64> {
    let x1 = unit(4, 0, 1) + unit(4, 1, 2) + unit(4, 2, 3);
    let x2 = unit(4, 2, 3);
    let x3 = unit(4, 1, 3);
    let x4 = unit(4, 0, 3);
    x1 * p[0] + x2 * p[1] + x3 * p[2] + x4 * p[3]
}

fn engel_coords(m: &DMatrix<f64>) -> Vec<f64> {
    let a = m[(0, 1)];
    vec![a, m[(2, 3)] - a, m[(1, 3)], m[(0, 3)]]
}

fn heisenberg_rep(p: &[f64]) -> DMatrix<f64> {
    unit(3, 0, 1) * p[0] + unit(3, 1, 2) * p[1] + unit(3, 0, 2) * p[2]
}

fn heisenberg_coords(m: &DMatrix<f64>) -> Vec<f64> {
    vec![m[(0, 1)], m[(1, 2)], m[(0, 2)]]
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-3.0f64..3.0, n)
}

proptest! {
    #[test]
    fn engel_matches_matrix_product(p in point(4), q in point(4)) {
        let g = CarnotGroup::new(catalog::engel()).unwrap();
        let want = engel_coords(&mlog(&(mexp(&engel_rep(&p)) * mexp(&engel_rep(&q)))));
        prop_assert!(close(&g.mul(&p, &q), &want, 1e-11));
    }

    #[test]
    fn heisenberg_matches_matrix_product(p in point(3), q in point(3)) {
        let g = CarnotGroup::new(catalog::heisenberg(1)).unwrap();
        let want = heisenberg_coords(&mlog(&(mexp(&heisenberg_rep(&p)) * mexp(&heisenberg_rep(&q)))));
        prop_assert!(close(&g.mul(&p, &q), &want, 1e-12));
    }

    #[test]
    fn step_two_groups_follow_half_bracket(p in point(6), q in point(6)) {
        let g = CarnotGroup::new(catalog::free_step2_rank3()).unwrap();
        let alg = g.algebra();
        let br = alg.bracket(&p, &q).unwrap();
        let want: Vec<f64> = (0..6).map(|i| p[i] + q[i] + 0.5 * br[i]).collect();
        prop_assert!(close(&g.mul(&p, &q), &want, 1e-12));
    }

    #[test]
    fn exact_associativity_and_correction_symmetries(p in point(4), q in point(4), r in point(4), lambda in -4.0f64..4.0) {
        let g = CarnotGroup::new(catalog::engel()).unwrap();
        let ex = |v: &[f64]| v.iter().map(|&x| Exact::from_f64(x)).collect::<Vec<Exact>>();
        let (p, q, r) = (ex(&p), ex(&q), ex(&r));
        let left = g.mul_generic(&g.mul_generic(&p, &q), &r);
        let right = g.mul_generic(&p, &g.mul_generic(&q, &r));
        prop_assert_eq!(left, right);

        let corr = g.bch_correction(&p, &q);
        prop_assert!(corr[..2].iter().all(|c| Scalar::is_zero(c)));
        let neg = |v: &[Exact]| v.iter().map(|x| -x.clone()).collect::<Vec<Exact>>();
        prop_assert_eq!(g.bch_correction(&neg(&q), &neg(&p)), neg(&corr));
        let l = Exact::from_f64(lambda);
        let scaled = g.bch_correction(&g.dilate_generic(&l, &p), &g.dilate_generic(&l, &q));
        prop_assert_eq!(scaled, g.dilate_generic(&l, &corr));
    }

    #[test]
    fn lower_strata_ignore_higher_inputs(p in point(4), q in point(4), bump in -2.0f64..2.0) {
        let g = CarnotGroup::new(catalog::engel()).unwrap();
        let base = g.mul(&p, &q);
        for j in 1..=g.step() {
            for i in g.stratum_range(j) {
                let mut p2 = p.clone();
                p2[i] += bump;
                let moved = g.mul(&p2, &q);
                for lower in 1..j {
                    for k in g.stratum_range(lower) {
                        prop_assert_eq!(moved[k].to_bits(), base[k].to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn dilations_compose_and_are_automorphisms(p in point(4), q in point(4), a in 0.1f64..3.0, b in -3.0f64..-0.1) {
        let g = CarnotGroup::new(catalog::engel()).unwrap();
        let ab = g.dilate(a * b, &p).unwrap();
        let seq = g.dilate(a, &g.dilate(b, &p).unwrap()).unwrap();
        prop_assert!(close(&ab, &seq, 1e-12));
        let lhs = g.dilate(a, &g.mul(&p, &q)).unwrap();
        let rhs = g.mul(&g.dilate(a, &p).unwrap(), &g.dilate(a, &q).unwrap());
        prop_assert!(close(&lhs, &rhs, 1e-10));
    }
}

#[test]
fn inverse_is_exact_in_every_catalog_group() {
    for spec in [catalog::euclidean(3), catalog::heisenberg(2), catalog::engel(), catalog::free_step2_rank3()] {
        let g = CarnotGroup::new(spec).unwrap();
        let p: Vec<f64> = (0..g.dim()).map(|i| 0.37 * i as f64 - 1.1).collect();
        assert_eq!(g.mul(&p, &g.inverse(&p)), g.identity());
        assert_eq!(g.mul(&g.inverse(&p), &p), g.identity());
    }
}
