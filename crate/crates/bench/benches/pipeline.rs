use calderon_bench::{isotropic, recovery_config, upper_disk};
use calderon_core::fem::{sigma_on_triangles, DirichletProblem};
use calderon_core::geometry::{augment_domain, compute_rho_sets, place_singularity};
use calderon_core::maps::MapKind;
use calderon_core::recovery::{map_for, RecoverySetup};
use calderon_core::singular::AugmentedProblem;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use std::sync::Arc;

fn forward(c: &mut Criterion) {
    let mut g = c.benchmark_group("forward");
    for h in [0.04, 0.02] {
        let mesh = upper_disk(h);
        let st = sigma_on_triangles(&mesh, &isotropic(1.0)).unwrap();
        g.bench_function(format!("assemble_factor_h{h}"), |b| {
            b.iter(|| DirichletProblem::new(mesh.clone(), black_box(&st)).unwrap())
        });
    }
    g.finish();
}

fn maps(c: &mut Criterion) {
    let mut g = c.benchmark_group("maps");
    g.sample_size(10);
    let mesh = upper_disk(0.04);
    let sigma = isotropic(1.0);
    for kind in [MapKind::DN, MapKind::ND] {
        g.bench_function(format!("{}_h0.04", kind.label()), |b| b.iter(|| map_for(&mesh, kind, &sigma).unwrap()));
    }
    g.finish();
}

fn singular(c: &mut Criterion) {
    let mut g = c.benchmark_group("singular");
    g.sample_size(10);
    let mesh = upper_disk(0.02);
    let sets = compute_rho_sets(&mesh, 1.0).unwrap();
    let aug = Arc::new(augment_domain(&mesh, &sets).unwrap());
    let pl = place_singularity(&mesh, &sets, [0.0, 1.0], 0.05).unwrap();
    let prob = AugmentedProblem::new(aug, Arc::new(isotropic(1.0))).unwrap();
    prob.green(&pl).unwrap();
    prob.neumann_singular(&pl, None).unwrap();
    g.bench_function("green_h0.02", |b| b.iter(|| prob.green(black_box(&pl)).unwrap()));
    g.bench_function("neumann_h0.02", |b| b.iter(|| prob.neumann_singular(black_box(&pl), None).unwrap()));
    g.finish();
}

fn recovery(c: &mut Criterion) {
    let mut g = c.benchmark_group("recovery");
    g.sample_size(10);
    let mesh = upper_disk(0.04);
    for kind in [MapKind::DN, MapKind::ND] {
        let setup = RecoverySetup::new(recovery_config(mesh.clone(), kind, 0.05)).unwrap();
        g.bench_function(format!("tau_step_{}", kind.label()), |b| b.iter(|| setup.evaluate(black_box(0.05)).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, forward, maps, singular, recovery);
criterion_main!(benches);
