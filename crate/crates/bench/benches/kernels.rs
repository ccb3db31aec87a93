use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use ellq_core::band::BandMatrix;
use ellq_core::harnack::{
    boundary_weak_harnack, SupersolutionGenerator, SupersolutionKind,
};
use ellq_core::{
    builtin, newton_solve, p_laplacian_residual, DiscreteField, Mesh, SolverOptions,
};

fn banded_2d_factor_solve(c: &mut Criterion) {
    let n = 63usize; // interior of a 65x65 grid
    let build = || {
        let mut a = BandMatrix::new(n * n, n, n);
        for i in 0..n * n {
            a.set(i, i, 4.0);
            if i >= 1 && i % n != 0 {
                a.set(i, i - 1, -1.0);
            }
            if i + 1 < n * n && (i + 1) % n != 0 {
                a.set(i, i + 1, -1.0);
            }
            if i >= n {
                a.set(i, i - n, -1.0);
            }
            if i + n < n * n {
                a.set(i, i + n, -1.0);
            }
        }
        a
    };
    c.bench_function("band_factor_63x63", |b| {
        b.iter_batched(build, |a| black_box(a.factor().unwrap()), BatchSize::LargeInput)
    });
    let lu = build().factor().unwrap();
    let rhs = vec![1.0; n * n];
    c.bench_function("band_solve_63x63", |b| b.iter(|| black_box(lu.solve(&rhs))));
}

fn newton_1d_basic(c: &mut Criterion) {
    let spec = builtin("1d-basic").unwrap();
    let mesh = spec.mesh(129).unwrap();
    let coeffs = spec.coefficients(&mesh).unwrap();
    let zero = DiscreteField::zeros(mesh.clone());
    let opts = SolverOptions::default();
    c.bench_function("newton_1d_basic_129", |b| {
        b.iter(|| black_box(newton_solve(&zero, 0.0, &coeffs, &opts).unwrap()))
    });
}

fn harnack_boundary_sample(c: &mut Criterion) {
    let mesh = Mesh::rectangle([0.0, 0.0], [1.0, 1.0], 65, 65).unwrap();
    let a = DiscreteField::zeros(mesh.clone());
    let generator =
        SupersolutionGenerator::new(mesh.clone(), 2.0, a, SupersolutionKind::SolveWithSource)
            .unwrap();
    let sample = generator.sample(1).unwrap();
    c.bench_function("boundary_harnack_report_65", |b| {
        b.iter(|| black_box(boundary_weak_harnack(&sample, [0.5, 0.0], 0.2, 0.5).unwrap()))
    });
    c.bench_function("sample_generation_65", |b| {
        b.iter(|| black_box(generator.sample(2).unwrap()))
    });
}

fn p_laplacian_kernel(c: &mut Criterion) {
    let mesh = Mesh::rectangle([0.0, 0.0], [1.0, 1.0], 65, 65).unwrap();
    let u = DiscreteField::from_fn(mesh.clone(), |p| {
        (std::f64::consts::PI * p[0]).sin() * (std::f64::consts::PI * p[1]).sin()
    });
    let a = DiscreteField::zeros(mesh.clone());
    let f = DiscreteField::zeros(mesh.clone());
    c.bench_function("p_laplacian_residual_p3_65", |b| {
        b.iter(|| black_box(p_laplacian_residual(&u, 3.0, &a, &f).unwrap()))
    });
}

criterion_group!(
    benches,
    banded_2d_factor_solve,
    newton_1d_basic,
    harnack_boundary_sample,
    p_laplacian_kernel
);
criterion_main!(benches);
