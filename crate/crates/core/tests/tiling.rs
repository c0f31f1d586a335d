use carnot_core::cone::{cone_samples, cones_xi_separated, Cone};
use carnot_core::decompose::{AnchorSearch, Decomposer};
use carnot_core::norm::BoxNorm;
use carnot_core::tiling::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn heisenberg_tile() -> (TileSpec, BoxNorm) {
    let t = catalog_tile("heisenberg1").unwrap().spec;
    let n = BoxNorm::new(t.group(), &[1.0]).unwrap();
    (t, n)
}

#[test]
fn heisenberg_tile_verifies() {
    let (t, n) = heisenberg_tile();
    assert_eq!(t.centers().len(), 16);
    let mut last = f64::INFINITY;
    for depth in 4..=6 {
        let rep = verify_tile(&t, &n, depth, &VerifyOptions::default()).unwrap();
        println!("depth {depth}: overlap {:.4} lambda {:.4} diam {:.4}", rep.overlap.fraction, rep.lambda_emp, rep.diam_emp);
        assert_eq!(rep.self_similarity_defect, 0.0);
        assert!(rep.overlap.fraction < last);
        assert!(rep.lambda_emp > 0.0 && rep.valid);
        last = rep.overlap.fraction;
    }
    assert_eq!(t.address_drift(&n, 4), 0.0);
}

#[test]
fn wrong_center_count() {
    let (t, _) = heisenberg_tile();
    let err = TileSpec::new(t.group(), t.centers()[..15].to_vec()).unwrap_err();
    assert_eq!(err, TileError::CenterCount { expected: 16, found: 15 });
}

#[test]
fn translated_heisenberg_cloud() {
    let (t, n) = heisenberg_tile();
    let tau = [0.03, -0.02, 0.001];
    let moved = translate_tile(&t, &n, &tau, Some(0.3));
    assert!(moved.warning.is_none());
    assert!(translation_defect(&t, &moved.spec, &tau, 5) < 1e-12);
    assert!(translate_tile(&t, &n, &[0.2, 0.0, 0.0], Some(0.3)).warning.is_some());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn translation_identity(x in -0.1f64..0.1, y in -0.1f64..0.1, z in -0.01f64..0.01) {
        let (t, n) = heisenberg_tile();
        let tau = [x, y, z];
        let moved = translate_tile(&t, &n, &tau, None);
        prop_assert!(translation_defect(&t, &moved.spec, &tau, 3) < 1e-12);
    }
}

#[test]
fn degenerate_center_is_reached_by_the_empty_word() {
    let (t, n) = heisenberg_tile();
    let g = t.group().clone();
    let mut centers = t.centers().to_vec();
    centers[0] = g.identity();
    let spec = TileSpec::new(&g, centers).unwrap();
    let dec = Decomposer::new(&n, &[vec![1.0, 0.0], vec![0.0, 1.0]], &AnchorSearch::default()).unwrap();
    assert!(reduced_scalars(&dec, &g.identity()).unwrap().is_empty());
    let params = ReachParams { xi: 0.05, big_lambda: 4.0 / dec.choice().zeta, diam: 1.24, rho: 0.05, samples: 1, seed: 0 };
    let rep = reachability_check(&spec, &[dec], &params);
    assert_eq!(rep.per_center[0].passed, 1);
    assert_eq!(rep.per_center[0].min_nonzero, f64::INFINITY);
}

fn cone_bases(count: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let cones = [Cone::new(&[1.0, 0.0], 0.05).unwrap(), Cone::new(&[0.0, 1.0], 0.05).unwrap()];
    assert!(cones_xi_separated(&cones, 0.5, 8, 256, seed).separated);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = cone_samples(&cones[0], count, &mut rng);
    let b = cone_samples(&cones[1], count, &mut rng);
    a.into_iter().zip(b).take(count).map(|(u, v)| vec![u, v]).collect()
}

#[test]
fn heisenberg_reachability_with_cone_bases() {
    let (t, n) = heisenberg_tile();
    let diam = verify_tile(&t, &n, 4, &VerifyOptions::default()).unwrap().diam_emp;
    for basis in cone_bases(3, 4) {
        let decs: Vec<Decomposer> = (0..8)
            .map(|s| Decomposer::new(&n, &basis, &AnchorSearch { seed: s, ..AnchorSearch::default() }).unwrap())
            .collect();
        let zeta = decs.iter().map(|d| d.choice().zeta).fold(f64::INFINITY, f64::min);
        let calibration = ReachParams { xi: 0.0, big_lambda: 4.0 * diam / zeta, diam, rho: 0.05, samples: 16, seed: 1 };
        let xi = calibrate_xi(&t, &decs, &calibration);
        assert!(xi > 0.0 && xi <= 0.1);
        let check = ReachParams { xi, seed: 2, ..calibration.clone() };
        let rep = reachability_check(&t, &decs, &check);
        println!("xi {xi:.4} pass {:.3} min {:.4} bound {:.3}", rep.pass_fraction, rep.min_nonzero, rep.max_bound_ratio);
        assert_eq!(rep.decomposition_failures, 0);
        assert!(rep.pass_fraction >= 0.95);
        let raised = ReachParams { xi: rep.min_nonzero * 1.01, ..check };
        assert!(reachability_check(&t, &decs, &raised).pass_fraction < 1.0);
    }
}
