use varlp::covest::sample_covariances;
use varlp::datagen::{derive_psi, gen_pattern, make_sigma, make_varp_model, rescale_spectral};
use varlp::estimators::{estimate_direct, estimate_direct_from_cov};
use varlp::eval::{cross_validate, log_grid};
use varlp::linalg::{DenseMatrix, NormKind};
use varlp::lp::{build_column_lp, solve_simplex_two_phase};
use varlp::varproc::{is_stationary, lyapunov_residual, simulate, stationary_covariance};
use varlp::{GridPoint, LpStatus, Method, PatternKind, SigmaSpec, VarModel};

fn band_model(d: usize, kappa: f64, seed: u64) -> VarModel {
    let a = rescale_spectral(
        &gen_pattern(&PatternKind::Band { bandwidth: 1 }, d, seed).unwrap(),
        kappa,
    )
    .unwrap();
    let sigma = make_sigma(&SigmaSpec::DiagonalScaled, d, kappa).unwrap();
    let psi = derive_psi(&sigma, &a).unwrap();
    VarModel::new(vec![a], psi).unwrap()
}

#[test]
fn derived_noise_reproduces_marginal_covariance() {
    let (d, kappa) = (8, 0.5);
    let model = band_model(d, kappa, 3);
    let sigma = make_sigma(&SigmaSpec::DiagonalScaled, d, kappa).unwrap();
    let solved = stationary_covariance(&model).unwrap();
    assert!(solved.max_abs_diff(&sigma).unwrap() < 1e-10);
}

#[test]
fn multi_lag_models_are_stationary() {
    for (kind, p) in [
        (PatternKind::Hub { hub_count: 5 }, 3),
        (PatternKind::Band { bandwidth: 2 }, 9),
    ] {
        let patterns: Vec<_> = (0..p)
            .map(|k| gen_pattern(&kind, 50, 100 + k as u64).unwrap())
            .collect();
        let (model, sigma) = make_varp_model(&patterns, 0.1, &DenseMatrix::identity(50)).unwrap();
        assert!(is_stationary(&model));
        assert!(lyapunov_residual(&model, &sigma).unwrap() < 1e-10);
    }
}

#[test]
fn scale_free_has_larger_hubs_than_random() {
    let degree = |a: &DenseMatrix| {
        (0..a.rows())
            .map(|i| {
                (0..a.cols())
                    .filter(|&j| j != i && a.get(i, j) != 0.0)
                    .count()
            })
            .max()
            .unwrap()
    };
    let d = 100;
    let (mut sf, mut rnd) = (0, 0);
    for seed in 0..10 {
        sf += degree(&gen_pattern(&PatternKind::ScaleFree { attach_count: 2 }, d, seed).unwrap());
        rnd += degree(
            &gen_pattern(
                &PatternKind::Random {
                    edge_prob: 4.0 / d as f64,
                },
                d,
                seed,
            )
            .unwrap(),
        );
    }
    assert!(sf > rnd, "scale-free {sf} vs random {rnd}");
}

#[test]
fn direct_columns_match_reference_solver() {
    let model = band_model(6, 0.5, 9);
    let ts = simulate(&model, 120, 4).unwrap();
    let cov = sample_covariances(&ts, 1).unwrap();
    let lambda = 0.2 * cov.s1.max_abs();
    let est = estimate_direct_from_cov(&cov, 6, lambda).unwrap();
    for j in 0..6 {
        let col = cov.s1.column(j);
        let reference =
            solve_simplex_two_phase(&build_column_lp(&cov.s, &col, lambda).unwrap()).unwrap();
        assert_eq!(reference.status, LpStatus::Optimal);
        let beta = est.lags[0].column(j);
        let l1: f64 = beta.iter().map(|v| v.abs()).sum();
        assert!((l1 - reference.objective).abs() < 1e-8 * reference.objective.max(1.0));
        let r = cov.s.mat_vec(&beta).unwrap();
        assert!(r
            .iter()
            .zip(&col)
            .all(|(a, b)| (a - b).abs() <= lambda + 1e-9));
    }
}

#[test]
fn direct_estimate_independent_of_thread_count() {
    let model = band_model(12, 0.6, 1);
    let ts = simulate(&model, 80, 2).unwrap();
    let fit = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_direct(&ts, 1, 0.1).unwrap())
    };
    assert_eq!(fit(1).lags, fit(4).lags);
}

#[test]
fn rescaling_the_series_rescales_the_constraint() {
    let model = band_model(5, 0.5, 6);
    let ts = simulate(&model, 200, 8).unwrap();
    let c = 3.0;
    let scaled = ts.scaled(c).unwrap();
    let (a, b) = (
        sample_covariances(&ts, 1).unwrap(),
        sample_covariances(&scaled, 1).unwrap(),
    );
    assert!(b.s.max_abs_diff(&a.s.scale(c * c)).unwrap() < 1e-9);
    assert!(b.s1.max_abs_diff(&a.s1.scale(c * c)).unwrap() < 1e-9);
    let lambda = 0.1 * a.s1.max_abs();
    let e1 = estimate_direct(&ts, 1, lambda).unwrap();
    let e2 = estimate_direct(&scaled, 1, lambda * c * c).unwrap();
    assert!(e1.lags[0].max_abs_diff(&e2.lags[0]).unwrap() < 1e-8);
}

#[test]
fn sparsity_decreases_with_lambda() {
    let model = band_model(10, 0.6, 4);
    let ts = simulate(&model, 300, 5).unwrap();
    let scale = sample_covariances(&ts, 1).unwrap().s1.max_abs();
    let mut prev = f64::INFINITY;
    for f in [0.02, 0.1, 0.5, 1.0] {
        let l1: f64 = estimate_direct(&ts, 1, f * scale).unwrap().lags[0]
            .as_slice()
            .iter()
            .map(|v| v.abs())
            .sum();
        assert!(l1 <= prev + 1e-9);
        prev = l1;
    }
    assert_eq!(prev, 0.0);
}

#[test]
fn cross_validation_ignores_grid_order() {
    let model = band_model(6, 0.5, 12);
    let ts = simulate(&model, 120, 13).unwrap();
    let mut grid: Vec<GridPoint> = [1, 2]
        .iter()
        .flat_map(|&p| {
            log_grid(0.01, 1.0, 5)
                .into_iter()
                .map(move |lambda| GridPoint { p, lambda })
        })
        .collect();
    let forward = cross_validate(&ts, &grid, 40, 30, 121, Method::Direct).unwrap();
    grid.reverse();
    grid.swap(0, 3);
    let permuted = cross_validate(&ts, &grid, 40, 30, 121, Method::Direct).unwrap();
    assert_eq!(forward.best, permuted.best);
    let lookup = |r: &varlp::CvResult, g: &GridPoint| {
        r.mean_err[r.grid.iter().position(|x| x == g).unwrap()]
    };
    for g in &grid {
        assert_eq!(lookup(&forward, g), lookup(&permuted, g));
    }
}

#[test]
fn error_shrinks_with_more_data() {
    let model = band_model(10, 0.5, 21);
    let truth = &model.transitions()[0];
    let err = |t_len| {
        let ts = simulate(&model, t_len, 22).unwrap();
        let lambda = 0.5 * ((10f64).ln() / t_len as f64).sqrt();
        let est = estimate_direct(&ts, 1, lambda).unwrap();
        est.lags[0].sub(truth).unwrap().norm(NormKind::ElementMax)
    };
    assert!(err(20_000) < err(200));
}
