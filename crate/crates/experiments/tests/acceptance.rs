//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! to stderr (written directly so it is visible even when output is captured).

use std::io::Write;

use gpreg::posterior::krr_check;
use gpreg::spectral::{effective_dims, rate_schedule};
use gpreg::{BasisId, Dataset, EigenSequence, FittedGp, FunctionSpace, Kernel};
use gpreg_experiments::contraction::{contraction_trend, ContractionConfig, Norm};
use gpreg_experiments::rates::{log_log_slope, rate_study, RateClass, RateConfig};
use gpreg_experiments::seeding::replicate_rng;
use gpreg_experiments::study::replicate_study;
use gpreg_experiments::target::{evaluation_grid, simulate_dataset, simulate_from};
use gpreg_experiments::{LambdaGrid, Method, StudyConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "[acceptance] criterion {id:>2} {verdict} {name}: {detail}");
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> Dataset<f64> {
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = x.iter().map(|t| (6.0 * t).sin() + rng.random::<f64>() - 0.5).collect();
    Dataset::new(x, y).unwrap()
}

#[test]
fn criterion_01_krr_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let grid = evaluation_grid(101);
    let mut worst: f64 = 0.0;
    for kernel in [Kernel::squared_exponential(), Kernel::matern(2.5).unwrap()] {
        for _ in 0..20 {
            let data = random_instance(&mut rng, 40);
            let lambda = 10f64.powf(rng.random_range(-4.0..-1.0));
            worst = worst.max(krr_check(&kernel, &data, lambda, &grid).unwrap());
        }
    }
    let pass = worst < 1e-8;
    report(1, "posterior mean equals kernel ridge regression", pass, &format!("max sup gap {worst:.3e} (< 1e-8)"));
    assert!(pass);
}

#[test]
fn criterion_02_derivative_kernels() {
    let h = 1e-4;
    let pts: Vec<f64> = evaluation_grid(21);
    let mut worst: f64 = 0.0;
    for kernel in [Kernel::squared_exponential(), Kernel::matern(2.5).unwrap()] {
        let k = |x: f64, y: f64| kernel.eval(x, y).unwrap();
        for &x in &pts {
            for &y in &pts {
                // keep the stencil inside [0, 1]
                let (xc, yc) = (x.clamp(h, 1.0 - h), y.clamp(h, 1.0 - h));
                let d10 = (k(xc + h, yc) - k(xc - h, yc)) / (2.0 * h);
                let d01 = (k(xc, yc + h) - k(xc, yc - h)) / (2.0 * h);
                let d11 = (k(xc + h, yc + h) - k(xc + h, yc - h) - k(xc - h, yc + h) + k(xc - h, yc - h)) / (4.0 * h * h);
                for (jx, jy, fd) in [(1, 0, d10), (0, 1, d01), (1, 1, d11)] {
                    let exact = kernel.eval_deriv(jx, jy, xc, yc).unwrap();
                    // relative to the unit scale of the kernel where the derivative vanishes
                    worst = worst.max((fd - exact).abs() / exact.abs().max(1.0));
                }
            }
        }
    }
    let pass = worst < 1e-5;
    report(2, "analytic derivative kernels vs central differences", pass, &format!("max relative error {worst:.3e} (< 1e-5)"));
    assert!(pass);
}

#[test]
fn criterion_03_variance_as_bias() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let pts = evaluation_grid(11);
    let mut worst: f64 = 0.0;
    for kernel in [Kernel::squared_exponential(), Kernel::matern(2.5).unwrap(), Kernel::sobolev2()] {
        for _ in 0..5 {
            let data = random_instance(&mut rng, 50);
            let lambda = 10f64.powf(rng.random_range(-3.0..-1.0));
            let sigma2 = rng.random_range(0.05..2.0);
            let fit = FittedGp::fit(&kernel, &data, lambda, sigma2).unwrap();
            let scale = sigma2 / (50.0 * lambda);
            for &x in &pts {
                for &xp in &pts {
                    let a = fit.posterior_cov(0, x, xp).unwrap();
                    let b = scale * fit.noise_free_bias(0, x, xp).unwrap();
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    let pass = worst < 1e-8;
    report(3, "posterior covariance equals scaled noise-free bias", pass, &format!("max gap {worst:.3e} (< 1e-8)"));
    assert!(pass);
}

#[test]
fn criterion_04_table_reproduction() {
    let base = StudyConfig {
        n_values: vec![100],
        replications: 200,
        sigma0_sq: 0.1,
        methods: vec![Method::SquaredExponential],
        grid_points: 100,
        seed: 404,
        derivative_orders: vec![0, 1],
        lambda_grid: LambdaGrid::default(),
    };
    let table = replicate_study(&base, threads()).unwrap();
    let f0 = table.summary("squared_exponential", 100, 0).unwrap().mean;
    let f1 = table.summary("squared_exponential", 100, 1).unwrap().mean;
    let level_ok = (f0 - 0.494).abs() <= 0.05 && (f1 - 2.41).abs() <= 0.4;

    let trend_cfg = StudyConfig {
        n_values: vec![100, 500, 1000],
        replications: 100,
        seed: 405,
        ..base
    };
    let trend = replicate_study(&trend_cfg, threads()).unwrap();
    let mut trend_ok = true;
    let mut means = Vec::new();
    for order in [0, 1] {
        let m: Vec<f64> = trend_cfg
            .n_values
            .iter()
            .map(|&n| trend.summary("squared_exponential", n, order).unwrap().mean)
            .collect();
        trend_ok &= m.windows(2).all(|w| w[1] < w[0]);
        means.push(m);
    }
    let pass = level_ok && trend_ok;
    report(
        4,
        "table reproduction (squared exponential, empirical Bayes)",
        pass,
        &format!(
            "n=100 mean RMSE f0 {f0:.4} (target 0.494 +- 0.05), f0' {f1:.4} (target 2.41 +- 0.4); \
             means over n=100,500,1000: f0 {:.4?}, f0' {:.4?} (decreasing: {trend_ok})",
            means[0], means[1]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_rate_exponents() {
    let cfg = RateConfig {
        class: RateClass::Holder { alpha: 2.0 },
        orders: vec![0, 1],
        n_values: vec![200, 400, 800, 1600],
        replications: 50,
        sigma0_sq: 0.1,
        seed: 505,
        truncation: 500,
        eigen_scale: 1.0,
        grid_points: 100,
    };
    let res = rate_study(&cfg, threads()).unwrap();
    let s0 = res.order(0).unwrap().slope;
    let s1 = res.order(1).unwrap().slope;
    // one lambda schedule serves both orders
    let same_lambda = res.order(0).unwrap().points.iter().zip(&res.order(1).unwrap().points).all(|(a, b)| a.lambda == b.lambda);
    let pass = (s0 + 0.4).abs() <= 0.12 && (s1 + 0.2).abs() <= 0.15 && same_lambda;
    report(
        5,
        "rate exponents with oracle lambda",
        pass,
        &format!("slope k=0 {s0:.4} (target -0.4 +- 0.12), k=1 {s1:.4} (target -0.2 +- 0.15), shared lambda: {same_lambda}"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_effective_dimension_scaling() {
    let lambdas: Vec<f64> = (0..=8).map(|j| 10f64.powf(-10.0 + 0.5 * j as f64)).collect();
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for basis in [BasisId::CosineHalf, BasisId::FourierL2] {
        for alpha in [2.0, 3.0] {
            let eig = EigenSequence::polynomial(alpha, 1.0).unwrap();
            let dims: Vec<_> = lambdas
                .iter()
                .map(|&l| effective_dims(&eig, basis, l, &[0, 1], 201).unwrap())
                .collect();
            for k in [0u32, 1] {
                let x: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
                let y: Vec<f64> = dims.iter().map(|d| d.kappa_tilde_kk_sq[&k].ln()).collect();
                let slope = log_log_slope(&x, &y).0;
                let target = -(2.0 * k as f64 + 1.0) / (2.0 * alpha);
                worst = worst.max((slope - target).abs());
                lines.push(format!("{}/a={alpha}/k={k}: {slope:.4}", basis.name()));
            }
        }
    }
    let eig = EigenSequence::exponential(1.0, 1.0).unwrap();
    let ratios: Vec<f64> = [1e-6, 1e-5, 1e-4, 1e-3]
        .iter()
        .map(|&l| effective_dims(&eig, BasisId::CosineHalf, l, &[0], 201).unwrap().kappa_tilde_sq / (1.0 / l as f64).ln())
        .collect();
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    let spread = (hi - lo) / lo;
    let pass = worst <= 0.02 && spread < 0.10;
    report(
        6,
        "effective-dimension scaling",
        pass,
        &format!("max slope error {worst:.4} (<= 0.02) [{}]; exponential ratio spread {:.1}% (< 10%)", lines.join(", "), 100.0 * spread),
    );
    assert!(pass);
}

#[test]
fn criterion_07_mmle_consistency() {
    let kernel = Kernel::matern(2.5).unwrap();
    let grid = LambdaGrid::default().points();
    let estimates: Vec<f64> = {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads()).build().unwrap();
        pool.install(|| {
            (0..100)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = replicate_rng(707, 2000, rep);
                    let data = simulate_dataset(2000, 0.1, &mut rng).unwrap();
                    gpreg::selection::select_lambda(&kernel, &data, &grid).unwrap().sigma2
                })
                .collect()
        })
    };
    let hits = estimates.iter().filter(|s| (*s - 0.1).abs() <= 0.02).count();
    let lo = estimates.iter().cloned().fold(f64::MAX, f64::min);
    let hi = estimates.iter().cloned().fold(f64::MIN, f64::max);
    let pass = hits >= 95;
    report(
        7,
        "noise-variance estimate consistency (n=2000, Matern 2.5)",
        pass,
        &format!("{hits}/100 within 0.1 +- 0.02 (need 95); range [{lo:.4}, {hi:.4}]"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_posterior_variance_bounds() {
    let n = 500;
    let sigma2 = 0.1;
    let truncation = 500;
    let class = RateClass::Holder { alpha: 2.0 };
    let eig = EigenSequence::polynomial(2.0, 1.0).unwrap();
    let kernel = Kernel::spectral(BasisId::CosineHalf, eig.clone(), truncation).unwrap();
    let lambda = rate_schedule(FunctionSpace::Holder { alpha: 2.0 }, 0, n).unwrap().lambda;
    // effective dimensions of the retained spectrum, which is the prior actually used
    let retained = EigenSequence::explicit(eig.head(truncation)).unwrap();
    let dims = effective_dims(&retained, BasisId::CosineHalf, lambda, &[1], 1001).unwrap();
    let bound0 = 2.0 * sigma2 * dims.kappa_tilde_sq / n as f64;
    let bound1 = 2.0 * sigma2 * dims.kappa_tilde_kk_sq[&1] / n as f64;
    let grid = evaluation_grid(201);
    let truth = class.truth();
    let mut ok0 = 0;
    let mut ok1 = 0;
    let mut worst0: f64 = 0.0;
    let mut worst1: f64 = 0.0;
    for rep in 0..100 {
        let mut rng = replicate_rng(808, n, rep);
        let data = simulate_from(&truth, n, sigma2, &mut rng).unwrap();
        let fit = FittedGp::fit(&kernel, &data, lambda, sigma2).unwrap();
        let v0 = fit.posterior_var_grid(0, &grid).unwrap().into_iter().fold(0.0, f64::max);
        let v1 = fit.posterior_var_grid(1, &grid).unwrap().into_iter().fold(0.0, f64::max);
        ok0 += usize::from(v0 <= bound0);
        ok1 += usize::from(v1 <= bound1);
        worst0 = worst0.max(v0 / bound0);
        worst1 = worst1.max(v1 / bound1);
    }
    let pass = ok0 >= 95 && ok1 >= 95;
    report(
        8,
        "posterior variance bounds (spectral alpha=2, n=500)",
        pass,
        &format!("k=0 {ok0}/100, k=1 {ok1}/100 (need 95); worst sup/bound k=0 {worst0:.3}, k=1 {worst1:.3}"),
    );
    assert!(pass);
}

#[test]
fn criterion_09_contraction_trend() {
    let cfg = ContractionConfig {
        class: RateClass::Holder { alpha: 2.0 },
        order: 0,
        norm: Norm::Linf,
        radius_multiplier: 5.0,
        n_values: vec![200, 800, 3200],
        seeds: 20,
        draws: 500,
        sigma0_sq: 0.1,
        seed: 909,
        truncation: 500,
        eigen_scale: 1.0,
        grid_points: 100,
    };
    let points = contraction_trend(&cfg, threads()).unwrap();
    let medians: Vec<f64> = points.iter().map(|p| p.median_mass).collect();
    let radii: Vec<f64> = points.iter().map(|p| p.radius).collect();
    let pass = medians.windows(2).all(|w| w[1] < w[0]);
    report(
        9,
        "contraction mass at 5 eps_n decreases in n",
        pass,
        &format!("median masses {medians:?} at radii {radii:.4?} for n=200,800,3200 (strict decrease required)"),
    );
    assert!(pass);
}

#[test]
fn criterion_10_determinism() {
    let study = StudyConfig {
        n_values: vec![40, 90],
        replications: 8,
        sigma0_sq: 0.1,
        methods: vec![
            Method::SquaredExponential,
            Method::MaternLoocv { nu_menu: vec![2.0, 2.5, 3.0] },
            Method::Sobolev2,
        ],
        grid_points: 100,
        seed: 1010,
        derivative_orders: vec![0, 1],
        lambda_grid: LambdaGrid::default(),
    };
    let rates = RateConfig {
        class: RateClass::Holder { alpha: 2.0 },
        orders: vec![0, 1],
        n_values: vec![50, 100],
        replications: 6,
        sigma0_sq: 0.1,
        seed: 1011,
        truncation: 100,
        eigen_scale: 1.0,
        grid_points: 100,
    };
    let bodies: Vec<(String, String)> = [1, 4, 8]
        .iter()
        .map(|&t| {
            let s = replicate_study(&study, t).unwrap().to_csv();
            let r = rate_study(&rates, t).unwrap();
            (s, r.slopes_csv() + &r.points_csv())
        })
        .collect();
    let pass = bodies.windows(2).all(|w| w[0] == w[1]);
    report(10, "byte-identical CSV under 1, 4 and 8 workers", pass, &format!("{} study bytes, {} rate bytes", bodies[0].0.len(), bodies[0].1.len()));
    assert!(pass);
}
