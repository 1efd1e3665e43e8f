use frechet_coreset::clustering::{constant_factor_alpha, nearest_center, BOOTSTRAP_FACTOR};
use frechet_coreset::oracle::{kmedian_1d_lower_bound, one_median_1d, random_1d_dataset};
use frechet_coreset::synthetic::{generate, GeneratorConfig};
use frechet_coreset::{
    cost, discrete_kmedian, kl_median_constant_factor, one_median_bootstrap, voronoi_partition, CenterSet,
    PolygonalCurve, SolverConfig, SolverMode,
};

#[test]
fn separated_clusters_are_recovered() {
    let (t, labels) = generate(&GeneratorConfig::new(3, 15, 2, 8, 21)).unwrap();
    for mode in [SolverMode::Exhaustive, SolverMode::LocalSearch] {
        let r = kl_median_constant_factor(&t, 3, 4, 0.1, 1, &SolverConfig::new(mode)).unwrap();
        // Same partition up to relabelling.
        for i in 0..t.len() {
            for j in 0..t.len() {
                assert_eq!(labels[i] == labels[j], r.assignment[i] == r.assignment[j], "{}", mode.name());
            }
        }
        assert_eq!(r.approx_factor, constant_factor_alpha(mode.inner_factor()));
        assert!(r.centers.max_complexity() <= 4);
    }
}

#[test]
fn k_equal_to_n_costs_nothing_when_curves_are_simple() {
    let (t, _) = generate(&GeneratorConfig::new(2, 3, 2, 3, 4)).unwrap();
    let r = kl_median_constant_factor(&t, t.len(), 3, 0.1, 0, &SolverConfig::default()).unwrap();
    assert_eq!(r.total_cost, 0.0);
}

#[test]
fn deterministic_under_seed() {
    let (t, _) = generate(&GeneratorConfig::new(3, 10, 2, 6, 8)).unwrap();
    let cfg = SolverConfig::new(SolverMode::LocalSearch);
    let a = kl_median_constant_factor(&t, 3, 3, 0.1, 5, &cfg).unwrap();
    let b = kl_median_constant_factor(&t, 3, 3, 0.1, 5, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn voronoi_partition_is_consistent_with_nearest_center() {
    let t = random_1d_dataset(12, 4, 3);
    let c = CenterSet::new(vec![
        PolygonalCurve::from_flat(1, vec![-2.0, 2.0]).unwrap(),
        PolygonalCurve::from_flat(1, vec![3.0]).unwrap(),
    ])
    .unwrap();
    let r = voronoi_partition(&t, &c, 1.0);
    for (i, x) in t.curves().iter().enumerate() {
        let (j, d) = nearest_center(x, &c);
        assert_eq!((r.assignment[i], r.distances[i]), (j, d));
    }
    assert_eq!(r.total_cost, r.cluster_costs.iter().sum::<f64>());
    assert!((r.total_cost - cost(&t, &c)).abs() <= 1e-12 * r.total_cost);
}

// The declared factors must hold against certified lower bounds on the
// optimum.
#[test]
fn declared_factors_hold_on_small_one_dimensional_instances() {
    for seed in 0..12 {
        let t = random_1d_dataset(6, 4, 100 + seed);
        let refs: Vec<&PolygonalCurve> = t.curves().iter().collect();
        let opt1 = one_median_1d(&refs, 1e-2).lower;
        let boot = one_median_bootstrap(&t, 2).unwrap();
        assert_eq!(boot.approx_factor, BOOTSTRAP_FACTOR);
        assert!(boot.total_cost <= BOOTSTRAP_FACTOR * opt1 + 1e-9, "seed {seed}");

        let opt2 = kmedian_1d_lower_bound(&t, 2, 0.05);
        for mode in [SolverMode::Exhaustive, SolverMode::LocalSearch] {
            let r = kl_median_constant_factor(&t, 2, 2, 0.1, seed, &SolverConfig::new(mode)).unwrap();
            assert!(r.total_cost <= r.approx_factor * opt2 + 1e-9, "seed {seed} {}", mode.name());
        }
    }
}

#[test]
fn exhaustive_discrete_solver_is_optimal() {
    let t = random_1d_dataset(7, 3, 9);
    let r = discrete_kmedian(&t, 2, &SolverConfig::default()).unwrap();
    let curves = t.curves();
    let mut best = f64::INFINITY;
    for a in 0..curves.len() {
        for b in a + 1..curves.len() {
            let c = CenterSet::new(vec![curves[a].clone(), curves[b].clone()]).unwrap();
            best = best.min(cost(&t, &c));
        }
    }
    assert!((r.total_cost - best).abs() <= 1e-12 * best.max(1.0));
}

#[test]
fn invalid_k_is_rejected() {
    let t = random_1d_dataset(3, 2, 1);
    assert!(kl_median_constant_factor(&t, 0, 2, 0.1, 0, &SolverConfig::default()).is_err());
    assert!(kl_median_constant_factor(&t, 4, 2, 0.1, 0, &SolverConfig::default()).is_err());
}
