use carnot_core::density::*;
use carnot_core::drift::geometric_radii;
use carnot_core::norm::BoxNorm;
use carnot_core::{catalog, sample, CarnotGroup};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn plane() -> BoxNorm {
    BoxNorm::new(&CarnotGroup::new(catalog::euclidean(2)).unwrap(), &[]).unwrap()
}

fn heisenberg() -> BoxNorm {
    BoxNorm::new(&CarnotGroup::new(catalog::heisenberg(1)).unwrap(), &[1.0]).unwrap()
}

/// Lattice `hℤ² ∩ [lo, hi]²`.
fn lattice(h: f64, lo: f64, hi: f64) -> Vec<f64> {
    let k0 = (lo / h).ceil() as i64;
    let k1 = (hi / h).floor() as i64;
    let mut out = Vec::new();
    for i in k0..=k1 {
        for j in k0..=k1 {
            out.extend_from_slice(&[i as f64 * h, j as f64 * h]);
        }
    }
    out
}

fn ball_cloud() -> &'static WeightedCloud {
    static CLOUD: OnceLock<WeightedCloud> = OnceLock::new();
    CLOUD.get_or_init(|| {
        let n = heisenberg();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<f64> = (0..100_000).flat_map(|_| sample::unit_ball(&n, &mut rng)).collect();
        WeightedCloud::uniform(&n, &pts).unwrap()
    })
}

fn axis_cloud() -> WeightedCloud {
    let pts: Vec<f64> = (0..100_000).flat_map(|i| [0.0, 0.0, -1.0 + 2.0 * (i as f64 + 0.5) / 1e5]).collect();
    WeightedCloud::uniform(&heisenberg(), &pts).unwrap()
}

#[test]
fn lattice_density_matches_counts() {
    let h = 0.01;
    let pts = lattice(h, -1.0, 1.0);
    let cloud = WeightedCloud::new(&plane(), &pts, &vec![1.0; pts.len() / 2]).unwrap();
    assert!((cloud.nn_median() - h).abs() < 1e-12);
    let x = [0.003, -0.002];
    let radii = geometric_radii(1e-4, 0.5, 8);
    let est = density_estimates(&cloud, &x, &radii, 2.0).unwrap();
    assert!(est.radii[0] >= 5.0 * h);
    for &r in &est.radii {
        // Oracle: brute-force count of lattice points in the Euclidean disc.
        let expect = pts.chunks(2).filter(|p| (p[0] - x[0]).hypot(p[1] - x[1]) <= r).count() as f64;
        assert_eq!(cloud.mass_within(&x, r), expect);
    }
    assert!(est.theta_upper / est.theta_lower < 1.5);
    let constant = std::f64::consts::PI / (h * h);
    assert!((est.theta_lower / constant - 1.0).abs() < 0.2 && (est.theta_upper / constant - 1.0).abs() < 0.2);
    let far = density_estimates(&cloud, &[10.0, 10.0], &radii, 2.0).unwrap();
    assert_eq!((far.theta_lower, far.theta_upper), (0.0, 0.0));
}

#[test]
fn radii_preconditions() {
    let cloud = WeightedCloud::uniform(&plane(), &lattice(0.1, 0.0, 1.0)).unwrap();
    let x = [0.5, 0.5];
    assert_eq!(density_estimates(&cloud, &x, &geometric_radii(0.01, 1.0, 4), 2.0), Err(DensityError::BadRadii));
    assert_eq!(density_estimates(&cloud, &x, &[0.001, 0.002, 0.5, 1.0], 2.0), Err(DensityError::BadRadii));
    let low = geometric_radii(1e-5, 0.02, 4);
    assert!(matches!(density_estimates(&cloud, &x, &low, 2.0), Err(DensityError::AllBelowFloor { .. })));
    assert_eq!(WeightedCloud::new(&plane(), &[0.0, 0.0], &[0.0]).unwrap_err(), DensityError::BadWeight { index: 0 });
    assert!(matches!(WeightedCloud::new(&plane(), &[0.0, 0.0], &[1.0, 1.0]), Err(DensityError::Shape { .. })));
}

#[test]
fn heisenberg_ball_scaling() {
    let cloud = ball_cloud();
    let o = [0.0; 3];
    let radii = geometric_radii(1e-3, 1.0 + 1e-9, 8);
    let est = density_estimates(cloud, &o, &radii, 4.0).unwrap();
    println!("Q=4: {est:?}");
    assert!(est.theta_upper / est.theta_lower < 2.0);
    // Log-log slope of μ(B(0,r))/r^Q is 4 − Q.
    for (q, slope) in [(3.0, 1.0), (5.0, -1.0)] {
        let p = density_profile(cloud, &o, &radii, q);
        let (a, b) = (p[0], p[p.len() - 1]);
        let s = (b.1 / a.1).ln() / (b.0 / a.0).ln();
        assert!((s - slope).abs() < 0.2, "Q={q}: slope {s}");
    }
}

#[test]
fn axis_upper_density_diverges() {
    let cloud = axis_cloud();
    let radii = geometric_radii(1e-3, 1.0 + 1e-9, 8);
    let decades = decade_estimates(&cloud, &[0.0; 3], &radii, 4.0).unwrap();
    assert!(decades.len() >= 2);
    assert!(decades[0].theta_upper / decades[1].theta_upper > 5.0);
}

#[test]
fn density_is_dilation_invariant() {
    let cloud = ball_cloud();
    let lambda = 0.5;
    let scaled = cloud.dilated(lambda, lambda.powi(4)).unwrap();
    let radii = geometric_radii(1e-3, 1.0 + 1e-9, 8);
    let small: Vec<f64> = radii.iter().map(|r| r * lambda).collect();
    let x = [0.1, -0.05, 0.02];
    let mut y = x.to_vec();
    cloud.norm().group().dilate_in_place(lambda, &mut y);
    let a = density_estimates(cloud, &x, &radii, 4.0).unwrap();
    let b = density_estimates(&scaled, &y, &small, 4.0).unwrap();
    assert!((a.theta_lower / b.theta_lower - 1.0).abs() < 0.05);
    assert!((a.theta_upper / b.theta_upper - 1.0).abs() < 0.05);
}

#[test]
fn ahlfors_masks() {
    let h = 0.02;
    let pts = lattice(h, -1.0, 1.0);
    let w = vec![h * h / std::f64::consts::PI; pts.len() / 2];
    let cloud = WeightedCloud::new(&plane(), &pts, &w).unwrap();
    let generous = ahlfors_set(&cloud, 1.5, 0.3, 2.0);
    for (k, p) in pts.chunks(2).enumerate() {
        let interior = p[0].abs().max(p[1].abs()) < 0.65;
        if interior {
            assert!(generous[k]);
        }
        if p[0].abs().max(p[1].abs()) > 0.99 {
            assert!(!generous[k]);
        }
    }
    assert!(ahlfors_set(&cloud, 1.0, 0.3, 2.0).iter().all(|m| !m));

    // Two clusters separated by a gap along the first axis.
    let two: Vec<f64> = pts.chunks(2).filter(|p| p[0].abs() > 0.1).flatten().copied().collect();
    let w2 = vec![h * h / std::f64::consts::PI; two.len() / 2];
    let cloud2 = WeightedCloud::new(&plane(), &two, &w2).unwrap();
    let mask = ahlfors_set(&cloud2, 1.5, 0.3, 2.0);
    for (k, p) in two.chunks(2).enumerate() {
        if p[0].abs() < 0.15 {
            assert!(!mask[k]);
        }
        if (p[0].abs() - 0.55).abs() < 0.05 && p[1].abs() < 0.1 {
            assert!(mask[k]);
        }
    }
}

fn dc_params(eps: f64) -> DcParams {
    DcParams { beta: 0.5, eps, big_r: 1.0, r_min: 0.6, radii: 3, min_cells: 100 }
}

const GRID: DcGrid = DcGrid { cell: 0.13 };

fn nearest_to_origin(cloud: &WeightedCloud) -> usize {
    (0..cloud.len()).min_by(|&i, &j| cloud.norm().norm(cloud.point(i)).total_cmp(&cloud.norm().norm(cloud.point(j)))).unwrap()
}

#[test]
fn dc_membership_examples() {
    let n = heisenberg();
    let cloud = ball_cloud();
    let id = |x: &[f64]| x.to_vec();
    let charted = ChartedCloud::new(cloud, &id, &n, GRID).unwrap();
    let c = nearest_to_origin(cloud);
    let rep = dc_membership(&charted, c, &dc_params(0.5)).unwrap();
    assert!(rep.member && rep.worst_fraction > 0.9 && rep.slack < 1.0);

    let constant = |_: &[f64]| vec![0.0; 3];
    let flat = ChartedCloud::new(cloud, &constant, &n, GRID).unwrap();
    assert!(!dc_membership(&flat, c, &dc_params(0.99)).unwrap().member);

    let axis = axis_cloud();
    let charted_axis = ChartedCloud::new(&axis, &id, &n, GRID).unwrap();
    let a = nearest_to_origin(&axis);
    assert!(!dc_membership(&charted_axis, a, &dc_params(0.5)).unwrap().member);

    let coarse = ChartedCloud::new(cloud, &id, &n, DcGrid { cell: 0.3 }).unwrap();
    assert!(matches!(dc_membership(&coarse, c, &dc_params(0.5)), Err(DensityError::GridTooCoarse { .. })));
    assert!(dc_membership(&coarse, c, &dc_params(1.0)).unwrap().member);
}

#[test]
fn dc_membership_shrinks_with_parameters() {
    let n = heisenberg();
    let cloud = ball_cloud();
    let id = |x: &[f64]| x.to_vec();
    let charted = ChartedCloud::new(cloud, &id, &n, GRID).unwrap();
    let wide = DcParams { beta: 0.6, r_min: 0.6, big_r: 1.0, ..dc_params(0.5) };
    let narrow = DcParams { beta: 0.5, r_min: 0.6, big_r: 0.8, ..dc_params(0.5) };
    let (mut both, mut wide_only, mut wide_count) = (0, 0, 0);
    for i in (0..cloud.len()).step_by(331) {
        let w = dc_membership(&charted, i, &wide).unwrap().member;
        let s = dc_membership(&charted, i, &narrow).unwrap().member;
        if w {
            wide_count += 1;
            if s { both += 1 } else { wide_only += 1 }
        }
    }
    println!("wide {wide_count}, also narrow {both}, wide only {wide_only}");
    assert!(wide_only as f64 <= 0.03 * wide_count as f64);
}

#[test]
fn david_fractions() {
    let n = heisenberg();
    let id = |x: &[f64]| x.to_vec();
    let params = [(0.5, 0.8), (0.5, 1.0)];
    let options = DavidOptions { max_points: Some(2000), seed: 2 };
    let charted = ChartedCloud::new(ball_cloud(), &id, &n, GRID).unwrap();
    let ball = david_fraction(&charted, 0.5, &params, &dc_params(0.5), &options).unwrap();
    let one = david_fraction(&charted, 0.5, &params[..1], &dc_params(0.5), &options).unwrap();
    println!("ball {ball:?}");
    assert!(ball.fraction > 0.9 && ball.fraction >= one.fraction);
    let axis = axis_cloud();
    let charted_axis = ChartedCloud::new(&axis, &id, &n, GRID).unwrap();
    assert!(david_fraction(&charted_axis, 0.5, &params, &dc_params(0.5), &options).unwrap().fraction < 0.05);
    assert_eq!(david_fraction(&charted_axis, 1.0, &params, &dc_params(1.0), &options).unwrap().fraction, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn david_fraction_is_monotone_in_eps(a in 0.05f64..0.95, b in 0.05f64..0.95) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let n = heisenberg();
        let id = |x: &[f64]| x.to_vec();
        let charted = ChartedCloud::new(ball_cloud(), &id, &n, GRID).unwrap();
        let options = DavidOptions { max_points: Some(200), seed: 9 };
        let params = [(0.5, 1.0)];
        let f_lo = david_fraction(&charted, lo, &params, &dc_params(lo), &options).unwrap().fraction;
        let f_hi = david_fraction(&charted, hi, &params, &dc_params(hi), &options).unwrap().fraction;
        prop_assert!(f_lo <= f_hi);
    }
}
