use frechet_coreset::clustering::{voronoi_partition, weighted_cost};
use frechet_coreset::coreset::{sample_coreset, theoretical_sample_size, WeightedCurveSet};
use frechet_coreset::curve::io::{load_weighted_set, save_weighted_set};
use frechet_coreset::oracle::{random_1d_dataset, random_center_sets};
use frechet_coreset::synthetic::{generate, GeneratorConfig};
use frechet_coreset::{build_coreset, coreset_error, cost, sensitivity_profile, CenterSet, CoresetConfig, Error};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn sampled_weights_match_the_profile(seed in any::<u64>(), n in 2usize..10, size in 1usize..40) {
        let t = random_1d_dataset(n, 4, seed);
        let c = CenterSet::single(t.get(0).clone());
        let p = sensitivity_profile(&t, &voronoi_partition(&t, &c, 2.0)).unwrap();
        let s = sample_coreset(&t, &p, size, seed);
        prop_assert_eq!(s.len(), size);
        for e in s.entries() {
            let i = e.source.unwrap();
            prop_assert!(e.weight > 0.0 && e.weight.is_finite());
            prop_assert_eq!(e.weight, p.weight(i, size));
            prop_assert_eq!(&e.curve, t.get(i));
        }
        // Weights are inverse probabilities over |S| draws.
        for i in 0..n {
            prop_assert!((p.weight(i, size) * p.psi[i] * size as f64 - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn seeded_build_is_reproducible_and_round_trips() {
    let (t, _) = generate(&GeneratorConfig::new(2, 12, 2, 6, 3)).unwrap();
    let mut cfg = CoresetConfig::new(2, 3, 0.3, 0.1, 42);
    cfg.sample_size_override = Some(25);
    let a = build_coreset(&t, &cfg).unwrap();
    let b = build_coreset(&t, &cfg).unwrap();
    assert_eq!(a, b);
    let meta = a.meta.clone().unwrap();
    assert_eq!((meta.n, meta.k, meta.ell, meta.sample_size, meta.seed), (24, 2, 3, 25, 42));
    assert!(meta.lambda_total >= meta.gamma_total);
    assert_eq!(meta.profile_hash.len(), 64);

    let mut buf = Vec::new();
    save_weighted_set(&a, &mut buf).unwrap();
    let back = load_weighted_set(buf.as_slice()).unwrap();
    assert_eq!(back.len(), a.len());
    for (x, y) in back.entries().iter().zip(a.entries()) {
        assert_eq!((&x.curve.coords(), x.weight), (&y.curve.coords(), y.weight));
    }
    let c = &random_center_sets(&t, 2, 3, 1, 5)[0];
    assert_eq!(weighted_cost(&back, c), weighted_cost(&a, c));
}

#[test]
fn error_shrinks_with_sample_size_on_average() {
    let (t, _) = generate(&GeneratorConfig::new(3, 30, 2, 8, 12)).unwrap();
    let centers = random_center_sets(&t, 3, 3, 40, 1);
    let mean_error = |size: usize| {
        (0..10u64)
            .map(|r| {
                let mut cfg = CoresetConfig::new(3, 3, 0.2, 0.1, 100 + r);
                cfg.sample_size_override = Some(size);
                coreset_error(&t, &build_coreset(&t, &cfg).unwrap(), &centers).mean
            })
            .sum::<f64>()
            / 10.0
    };
    let (small, large) = (mean_error(10), mean_error(200));
    assert!(large < small, "{large} vs {small}");
}

#[test]
fn full_unit_set_has_no_error() {
    let t = random_1d_dataset(9, 3, 2);
    let c = random_center_sets(&t, 2, 2, 5, 3);
    assert_eq!(coreset_error(&t, &WeightedCurveSet::unit(&t), &c).max, 0.0);
    assert_eq!(weighted_cost(&WeightedCurveSet::unit(&t), &c[0]), cost(&t, &c[0]));
}

#[test]
fn theoretical_size_grows_as_epsilon_shrinks() {
    let a = theoretical_sample_size(300, 2, 10, 3, 4, 0.2, 0.1, 1.0);
    let b = theoretical_sample_size(300, 2, 10, 3, 4, 0.1, 0.1, 1.0);
    assert!(b >= 3.9 * a && a > 0.0);
    assert_eq!(a.fract(), 0.0);
}

#[test]
fn invalid_parameters_are_rejected() {
    let t = random_1d_dataset(4, 2, 1);
    for cfg in [
        CoresetConfig::new(1, 2, 0.0, 0.1, 0),
        CoresetConfig::new(1, 2, 0.5, 1.0, 0),
        CoresetConfig::new(5, 2, 0.5, 0.1, 0),
        CoresetConfig::new(1, 0, 0.5, 0.1, 0),
    ] {
        assert!(matches!(build_coreset(&t, &cfg), Err(Error::InvalidInput(_))));
    }
}
