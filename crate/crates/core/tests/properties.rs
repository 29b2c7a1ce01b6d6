use proptest::prelude::*;
use slitspdc_core::*;

fn axis(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 - 0.5 * (n as f64 - 1.0)) * 3e-6).collect()
}

fn map_from(n: usize, m: usize, rates: Vec<f64>) -> CoincidenceMap {
    CoincidenceMap::new(axis(n), axis(m), rates).unwrap()
}

fn random_map() -> impl Strategy<Value = CoincidenceMap> {
    (2usize..8, 2usize..8).prop_flat_map(|(n, m)| {
        prop::collection::vec(0.0f64..1.0, n * m).prop_map(move |r| map_from(n, m, r))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rho_is_bounded(map in random_map()) {
        for c in [Centering::Centered, Centering::Uncentered] {
            if let Ok(r) = pearson(&map, c) {
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r), "{r}");
            }
        }
    }

    #[test]
    fn rho_ignores_overall_scale(map in random_map(), scale in 1e-6f64..1e6) {
        let scaled = CoincidenceMap::new(
            map.x1.clone(),
            map.x2.clone(),
            map.rates.iter().map(|r| r * scale).collect(),
        ).unwrap();
        if let (Ok(a), Ok(b)) = (pearson(&map, Centering::Centered), pearson(&scaled, Centering::Centered)) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn mirroring_one_axis_flips_rho(map in random_map()) {
        let mirrored = CoincidenceMap::new(
            map.x1.clone(),
            map.x2.iter().map(|x| -x).collect(),
            map.rates.clone(),
        ).unwrap();
        if let (Ok(a), Ok(b)) = (pearson(&map, Centering::Centered), pearson(&mirrored, Centering::Centered)) {
            prop_assert!((a + b).abs() < 1e-9);
        }
    }

    #[test]
    fn diagonal_product_and_anti_diagonal(weights in prop::collection::vec(0.1f64..1.0, 3..9),
                                          other in prop::collection::vec(0.1f64..1.0, 3..9)) {
        let n = weights.len();
        let diag = map_from(n, n, (0..n * n).map(|k| if k / n == k % n { weights[k / n] } else { 0.0 }).collect());
        let anti = map_from(n, n, (0..n * n).map(|k| if k / n + k % n == n - 1 { weights[k / n] } else { 0.0 }).collect());
        let m = other.len();
        let product = map_from(n, m, (0..n * m).map(|k| weights[k / m] * other[k % m]).collect());
        prop_assert!((pearson(&diag, Centering::Centered).unwrap() - 1.0).abs() < 1e-9);
        prop_assert!((pearson(&anti, Centering::Centered).unwrap() + 1.0).abs() < 1e-9);
        prop_assert!(pearson(&product, Centering::Centered).unwrap().abs() < 1e-9);
    }

    #[test]
    fn marginals_sum_to_the_total(map in random_map()) {
        let t = map.total();
        let s: f64 = singles_profile(&map, Detector::Signal).iter().sum();
        let i: f64 = singles_profile(&map, Detector::Idler).iter().sum();
        prop_assert!((s - t).abs() <= 1e-12 * t.max(1.0));
        prop_assert!((i - t).abs() <= 1e-12 * t.max(1.0));
    }

    #[test]
    fn negative_rates_are_rejected(k in 0usize..4, v in -1e3f64..-1e-300) {
        let mut rates = vec![1.0; 4];
        rates[k] = v;
        prop_assert!(CoincidenceMap::new(axis(2), axis(2), rates).is_err());
    }

    #[test]
    fn analytic_pump_is_even_and_bounded(width in 4.0f64..40.0, gap in 5.0f64..150.0, count in 1usize..5) {
        let spec = PumpSpec {
            slits: SlitSpec { width: width * 1e-6, pitch: (width + gap) * 1e-6, count, height: 300e-6 },
            ..PumpSpec::default()
        };
        let field = analytic_profile(&spec, &spec.default_grid(1e-6).unwrap()).unwrap();
        let n = field.values.len();
        for k in 0..n {
            let (a, b) = (field.values[k].norm(), field.values[n - 1 - k].norm());
            prop_assert!((a - b).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulated_maps_are_non_negative(width in 8.0f64..40.0, pitch in 60.0f64..200.0, lz in 1.0f64..20.0) {
        let mut cfg = RunConfig::default();
        cfg.slits.width_um = width;
        cfg.slits.pitch_um = pitch;
        cfg.crystal.length_z_mm = lz;
        cfg.detectors.step_um = 12.0;
        cfg.integration.z_planes = 5;
        let map = Simulation::from_config(&cfg).unwrap().run().unwrap();
        prop_assert!(map.rates.iter().all(|r| *r >= 0.0 && r.is_finite()));
        prop_assert!(map.total() > 0.0);
        let r = pearson(&map, Centering::Centered).unwrap();
        prop_assert!((-1.0..=1.0).contains(&r));
    }

    #[test]
    fn bootstrap_is_reproducible(seed in any::<u64>()) {
        let map = map_from(3, 3, vec![4.0, 1.0, 0.0, 1.0, 5.0, 1.0, 0.0, 1.0, 4.0]);
        let a = bootstrap_sigma(&map, 1e4, 50, seed, Centering::Centered).unwrap();
        let b = bootstrap_sigma(&map, 1e4, 50, seed, Centering::Centered).unwrap();
        prop_assert_eq!(a, b);
    }
}
