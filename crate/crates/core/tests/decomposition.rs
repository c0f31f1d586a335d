use carnot_core::decompose::{estimate_c0, AnchorSearch, Decomposer};
use carnot_core::{calibrate_box_norm, catalog, sample, CalibrationOptions, CarnotGroup};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn std_basis(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

fn decomposer(name: &str) -> Decomposer {
    let g = CarnotGroup::new(catalog::by_name(name).unwrap()).unwrap();
    let opts = CalibrationOptions { samples: 20_000, ..Default::default() };
    let norm = calibrate_box_norm(&g, &opts).unwrap();
    Decomposer::new(&norm, &std_basis(g.rank()), &AnchorSearch::default()).unwrap()
}

fn max_ratio(dec: &Decomposer, seed: u64, count: usize) -> f64 {
    let g = dec.norm().group().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let v = sample::mixed_scales(&g, &mut rng, 2.0);
        let w = dec.decompose(&v).unwrap_or_else(|e| panic!("{}: {v:?}: {e}", g.name()));
        assert_eq!(w.len(), 2 * g.dim());
        assert!(w.evaluate(&g).iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-8 * w.certificate.target_norm.max(1.0)));
        worst = worst.max(w.certificate.ratio);
    }
    worst
}

#[test]
fn round_trip_on_catalog() {
    for name in ["euclidean3", "heisenberg1", "engel", "free-2-3", "heisenberg2"] {
        let dec = decomposer(name);
        let a = max_ratio(&dec, 1, 1000);
        let b = max_ratio(&dec, 2, 1000);
        assert!(a.is_finite() && b.is_finite());
        let c1 = estimate_c0(&dec, 1000, 11);
        let c2 = estimate_c0(&dec, 1000, 12);
        println!("{name}: zeta {} c0 {} {}", dec.choice().zeta, c1.c0, c2.c0);
        assert_eq!(c1.failures + c2.failures, 0);
        assert!((c1.c0 - c2.c0).abs() < 0.1 * c1.c0.max(c2.c0));
        assert!(c1.c0 >= a.max(b) * 0.9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn dilation_scales_the_word(x in -1.0f64..1.0, y in -1.0f64..1.0, t in -1.0f64..1.0, lambda in 0.1f64..10.0) {
        let dec = decomposer("heisenberg1");
        let g = dec.norm().group().clone();
        let v = [x, y, t];
        prop_assume!(x.abs() + y.abs() + t.abs() > 1e-3);
        let w = dec.decompose(&v).unwrap();
        let wl = dec.decompose(&g.dilate(lambda, &v).unwrap()).unwrap();
        for (a, b) in w.scalars.iter().zip(&wl.scalars) {
            prop_assert!((lambda * a - b).abs() < 1e-9 * lambda.max(1.0) * a.abs().max(1.0));
        }
    }
}
