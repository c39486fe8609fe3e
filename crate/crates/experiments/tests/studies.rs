//! Simulation checks of selection and uncertainty quantification.

use gpreg::selection::{default_lambda_grid, loocv_select, select_lambda, DEFAULT_NU_MENU};
use gpreg::Kernel;
use gpreg_experiments::rates::{rate_study, RateClass, RateConfig};
use gpreg_experiments::seeding::replicate_rng;
use gpreg_experiments::target::simulate_dataset;
use gpreg_experiments::{band_study, BandConfig, LambdaGrid, Method};

#[test]
fn squared_exponential_bands_cover_the_truth() {
    let cfg = BandConfig {
        method: Method::SquaredExponential,
        n: 500,
        replications: 200,
        level: 0.95,
        draws: 1000,
        derivative_orders: vec![0],
        grid_points: 100,
        sigma0_sq: 0.1,
        seed: 77,
        lambda_grid: LambdaGrid::default(),
    };
    let res = band_study(&cfg, 0).unwrap();
    let cov = res.orders[0].coverage;
    assert!(cov >= 0.85, "coverage {cov}");
}

#[test]
fn empirical_bayes_lambda_is_interior() {
    let kernel = Kernel::squared_exponential();
    let grid = default_lambda_grid::<f64>();
    let seeds = 50;
    let interior = (0..seeds)
        .filter(|&s| {
            let data = simulate_dataset(500, 0.1, &mut replicate_rng(31, 500, s)).unwrap();
            !select_lambda(&kernel, &data, &grid).unwrap().at_boundary
        })
        .count();
    assert!(interior * 10 >= seeds * 9, "{interior}/{seeds} interior");
}

#[test]
fn cross_validation_prefers_low_smoothness() {
    let grid = default_lambda_grid::<f64>();
    let seeds = 20;
    let low = (0..seeds)
        .filter(|&s| {
            let data = simulate_dataset(500, 0.1, &mut replicate_rng(41, 500, s)).unwrap();
            let nu = loocv_select(&data, &DEFAULT_NU_MENU, &grid).unwrap().nu.unwrap();
            nu <= 3.0
        })
        .count();
    assert!(low * 2 > seeds, "{low}/{seeds} seeds chose nu <= 3");
}

#[test]
fn analytic_class_rate_is_nearly_parametric() {
    let cfg = RateConfig {
        class: RateClass::Analytic {
            gamma: 1.0,
            truth_rate: 1.2,
        },
        orders: vec![0],
        n_values: vec![200, 400, 800, 1600],
        replications: 50,
        sigma0_sq: 0.1,
        seed: 51,
        truncation: 60,
        eigen_scale: 1.0,
        grid_points: 100,
    };
    let slope = rate_study(&cfg, 0).unwrap().order(0).unwrap().slope;
    assert!((slope + 1.0).abs() <= 0.2, "slope {slope} against log(sqrt(n)/log n)");
}
