use gpreg_experiments::study::describe;
use gpreg_experiments::target::rmse;
use gpreg_experiments::{LambdaGrid, Method, StudyConfig};
use proptest::prelude::*;

fn method() -> impl Strategy<Value = Method> {
    prop_oneof![
        (1.5f64..5.0).prop_map(|nu| Method::Matern { nu }),
        Just(Method::MaternLoocv {
            nu_menu: vec![2.0, 2.5]
        }),
        Just(Method::SquaredExponential),
        Just(Method::Sobolev2),
    ]
}

proptest! {
    #[test]
    fn rmse_of_offset_is_offset(v in prop::collection::vec(-10.0f64..10.0, 1..50), c in -3.0f64..3.0) {
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        prop_assert!((rmse(&shifted, &v).unwrap() - c.abs()).abs() < 1e-12);
    }

    #[test]
    fn rmse_is_symmetric_and_bounded_by_max(a in prop::collection::vec(-5.0f64..5.0, 1..40), seed in 0u64..1000) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| x * ((seed + i as u64) % 7) as f64 / 3.0).collect();
        let r = rmse(&a, &b).unwrap();
        prop_assert_eq!(r, rmse(&b, &a).unwrap());
        let max = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(r <= max + 1e-12);
    }

    #[test]
    fn median_lies_within_range(v in prop::collection::vec(0.0f64..100.0, 1..60)) {
        let (mean, median, _) = describe(&v);
        let lo = v.iter().cloned().fold(f64::MAX, f64::min);
        let hi = v.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert!(lo <= median && median <= hi);
        prop_assert!(lo - 1e-9 <= mean && mean <= hi + 1e-9);
    }

    #[test]
    fn study_config_round_trips_through_toml(
        ns in prop::collection::vec(2usize..5000, 1..4),
        reps in 1usize..500,
        seed in 0u64..(i64::MAX as u64),
        m in method(),
    ) {
        let cfg = StudyConfig {
            n_values: ns,
            replications: reps,
            sigma0_sq: 0.1,
            methods: vec![m],
            grid_points: 100,
            seed,
            derivative_orders: vec![0, 1],
            lambda_grid: LambdaGrid::default(),
        };
        let text = toml::to_string(&cfg).unwrap();
        let back: StudyConfig = toml::from_str(&text).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
