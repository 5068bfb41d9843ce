use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dlselect::pipeline::{default_lambda1_grid, default_lambda2_grid, tune_dlselect_ridge};
use dlselect::{
    check_ic, check_pic, fit_lasso, lambda_max, lasso_path, run_experiment, ExperimentConfig,
    Method, PicOptions, PipelineOptions, SolverOptions,
};
use dlselect_bench::{paired_covariance, paired_truth, toeplitz_replication, toeplitz_spec};

fn lasso(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_lasso");
    for &(p, n) in &[(100, 200), (500, 200), (1000, 100)] {
        let data = toeplitz_replication(p, n, 20, 0.5).unwrap();
        let lam = 0.1 * lambda_max(&data.train);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{p}x{n}")),
            &data,
            |b, d| {
                b.iter(|| fit_lasso(black_box(&d.train), lam, &SolverOptions::default()).unwrap())
            },
        );
    }
    group.finish();

    let data = toeplitz_replication(500, 200, 20, 0.5).unwrap();
    let grid = default_lambda1_grid(lambda_max(&data.train), 50);
    c.bench_function("lasso_path/500x200/50", |b| {
        b.iter(|| lasso_path(black_box(&data.train), &grid, &SolverOptions::default()).unwrap())
    });
}

fn conditions(c: &mut Criterion) {
    let mut group = c.benchmark_group("check_pic");
    for &s in &[6, 10, 14] {
        let cov = paired_covariance(s + 20, s, 0.05);
        let (support, signs) = paired_truth(s + 20, s);
        let opts = PicOptions::default();
        group.bench_with_input(BenchmarkId::from_parameter(s), &cov, |b, cov| {
            b.iter(|| check_pic(black_box(cov), &support, &signs, &opts).unwrap())
        });
    }
    group.finish();

    let data = toeplitz_replication(200, 400, 20, 0.5).unwrap();
    let cov = dlselect::empirical_covariance(&data.train);
    let signs = dlselect::sign_vector(&data.beta);
    c.bench_function("check_ic/200", |b| {
        b.iter(|| check_ic(black_box(&cov), &data.support, &signs).unwrap())
    });
}

fn pipeline(c: &mut Criterion) {
    let data = toeplitz_replication(200, 100, 10, 0.5).unwrap();
    let grid1 = default_lambda1_grid(lambda_max(&data.train), 50);
    let grid2 = default_lambda2_grid(50);
    let opts = PipelineOptions::default();
    c.bench_function("tune_dlselect_ridge/200x100", |b| {
        b.iter(|| {
            tune_dlselect_ridge(black_box(&data.train), &data.val, &grid1, &grid2, &opts).unwrap()
        })
    });

    let spec = toeplitz_spec(200, 100, 10, 0.5, 1);
    let config = ExperimentConfig {
        methods: vec![Method::Lasso, Method::Ridge, Method::DlselectRidge],
        ..ExperimentConfig::default()
    };
    let mut group = c.benchmark_group("replication");
    group.sample_size(10);
    group.bench_function("200x100", |b| {
        b.iter(|| run_experiment(black_box(&spec), &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, lasso, conditions, pipeline);
criterion_main!(benches);
