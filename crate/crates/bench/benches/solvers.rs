use criterion::{black_box, criterion_group, criterion_main, Criterion};
use varlp::covest::sample_covariances;
use varlp::datagen::{derive_psi, gen_pattern, make_sigma, rescale_spectral};
use varlp::estimators::estimate_direct_from_cov;
use varlp::lp::{build_column_lp, solve_simplex, solve_simplex_two_phase};
use varlp::varproc::{simulate, stationary_covariance};
use varlp::{PatternKind, SigmaSpec, VarModel};

fn band_model(d: usize) -> VarModel {
    let a = rescale_spectral(
        &gen_pattern(&PatternKind::Band { bandwidth: 2 }, d, 1).unwrap(),
        0.5,
    )
    .unwrap();
    let sigma = make_sigma(&SigmaSpec::DiagonalScaled, d, 0.5).unwrap();
    let psi = derive_psi(&sigma, &a).unwrap();
    VarModel::new(vec![a], psi).unwrap()
}

fn solvers(c: &mut Criterion) {
    let model = band_model(50);
    let ts = simulate(&model, 100, 2).unwrap();
    let cov = sample_covariances(&ts, 1).unwrap();
    let lambda = 0.1 * cov.s1.max_abs();
    let lp = build_column_lp(&cov.s, &cov.s1.column(0), lambda).unwrap();

    c.bench_function("column_lp_dual_d50", |b| {
        b.iter(|| solve_simplex(black_box(&lp)).unwrap())
    });
    c.bench_function("column_lp_two_phase_d50", |b| {
        b.iter(|| solve_simplex_two_phase(black_box(&lp)).unwrap())
    });
    c.bench_function("direct_estimate_d50", |b| {
        b.iter(|| estimate_direct_from_cov(black_box(&cov), 50, lambda).unwrap())
    });
    c.bench_function("lyapunov_d50", |b| {
        b.iter(|| stationary_covariance(black_box(&model)).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = solvers
}
criterion_main!(benches);
