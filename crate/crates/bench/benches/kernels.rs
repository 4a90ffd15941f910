use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use fdlab_bench::{fujita_problem, line_symbol};
use fdlab_core::estimates::{estimate_table, verify_two_sided, Which};
use fdlab_core::solver::mild_solve;
use fdlab_core::specfun::{mittag_leffler, stable_density, MLParams, MittagLefflerTable, StableIndex};
use fdlab_core::subkernels::{z_kernel, z_kernel_fourier};
use fdlab_core::Grid;

fn special_functions(c: &mut Criterion) {
    let p = MLParams::new(0.5, 1.0).unwrap();
    c.bench_function("mittag_leffler direct", |b| b.iter(|| mittag_leffler(p, black_box(-7.5)).unwrap()));
    let table = MittagLefflerTable::new(p).unwrap();
    c.bench_function("mittag_leffler table", |b| b.iter(|| table.eval_neg(black_box(7.5))));
    let idx = StableIndex::new(0.7).unwrap();
    c.bench_function("stable_density", |b| b.iter(|| stable_density(idx, black_box(0.3)).unwrap()));
}

fn kernels(c: &mut Criterion) {
    let sym = line_symbol(1.5);
    let mut g = c.benchmark_group("z_kernel");
    for n in [256usize, 4096] {
        let grid = Grid::new(1, n, n as f64 / 8.0).unwrap();
        g.bench_with_input(BenchmarkId::new("fourier", n), &grid, |b, grid| {
            b.iter(|| z_kernel_fourier(&sym, 0.6, black_box(4.0), grid).unwrap())
        });
    }
    let grid = Grid::new(1, 256, 32.0).unwrap();
    g.bench_function("subordination/256", |b| b.iter(|| z_kernel(&sym, 0.6, black_box(4.0), &grid).unwrap()));
    g.finish();
}

fn estimates(c: &mut Criterion) {
    let table = estimate_table(&line_symbol(1.5), 0.6, 1 << 14, 12).unwrap();
    let mut g = c.benchmark_group("estimates");
    g.sample_size(10);
    g.bench_function("estimate_table 2^14 x 12", |b| {
        b.iter(|| estimate_table(&line_symbol(1.5), 0.6, black_box(1 << 14), 12).unwrap())
    });
    g.bench_function("verify_two_sided Z", |b| b.iter(|| verify_two_sided(black_box(&table), Which::Z).unwrap()));
    g.finish();
}

fn solver(c: &mut Criterion) {
    let mut g = c.benchmark_group("mild_solve");
    g.sample_size(10);
    for steps in [50usize, 100] {
        let (cfg, u0) = fujita_problem(1.5, 2.0, steps);
        g.bench_with_input(BenchmarkId::new("n512 T2", steps), &steps, |b, _| {
            b.iter(|| mild_solve(black_box(&cfg), &u0).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, special_functions, kernels, estimates, solver);
criterion_main!(benches);
