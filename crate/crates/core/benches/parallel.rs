use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hyperwave::exec::Execution;
use hyperwave::modes::ModeParameters;
use hyperwave::scattering;
use hyperwave::solutions::{evaluate_grid_with, Branch, Class, SolutionFamily};
use hyperwave::verify::{residuals_of, ClosedForm, GridSpec, SystemId};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn grid(c: &mut Criterion) {
    let p = ModeParameters::default();
    let fam = SolutionFamily::nonzero(Class::I, Branch::Plus);
    let mut g = c.benchmark_group("evaluate_grid");
    for n in [81usize, 1025] {
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| evaluate_grid_with(&p, &fam, -3.0, 1.0, black_box(n), exec).unwrap())
            });
        }
    }
    g.finish();
}

fn residual_scan(c: &mut Criterion) {
    let params = ModeParameters::default();
    let family = SolutionFamily::nonzero(Class::II, Branch::Minus);
    let source = ClosedForm { params, family };
    let spec = GridSpec {
        z_min: -3.0,
        z_max: 1.0,
        n: 513,
    };
    let mut g = c.benchmark_group("residuals");
    for (name, exec) in MODES {
        g.bench_function(name, |b| {
            b.iter(|| residuals_of(&source, &params, &family, SystemId::Pauli, black_box(&spec), exec).unwrap())
        });
    }
    g.finish();
}

fn scatter(c: &mut Criterion) {
    let ks = [0.5, 1.0, 2.0, 4.0];
    let qs = [0.5, 1.0, 5.0, 10.0];
    let mut g = c.benchmark_group("scatter_sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| scattering::sweep(black_box(&ks), &qs, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, grid, residual_scan, scatter);
criterion_main!(benches);
