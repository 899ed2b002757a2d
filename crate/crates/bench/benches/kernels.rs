use std::collections::BTreeMap;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use reef_bench::small_scene;
use reef_core::fields::{marching_cubes, SphereSdf};
use reef_core::garment::SkinnedBody;
use reef_core::geometry::primitives::icosphere;
use reef_core::geometry::{graph_laplacian, solve_constrained_bilaplacian, Aabb};
use reef_core::registration::{chamfer, probe_active_area, run_pipeline, BodyStart, FitConfig, ProbeMode};
use reef_core::scene::sample_surface;
use reef_core::Vec3;

fn extraction(c: &mut Criterion) {
    let sphere = SphereSdf::new(Vec3::zeros(), 0.7);
    let region = Aabb::new(Vec3::repeat(-1.0), Vec3::repeat(1.0));
    c.bench_function("marching_cubes_sphere_64", |b| b.iter(|| marching_cubes(&sphere, &region, [65; 3])));
}

fn biharmonic(c: &mut Criterion) {
    let mesh = icosphere(1.0, 3);
    let lap = graph_laplacian(&mesh);
    let rest = mesh.vertices().to_vec();
    let pins: BTreeMap<usize, Vec3> = (0..rest.len()).step_by(11).map(|i| (i, rest[i] * 1.1)).collect();
    c.bench_function("biharmonic_icosphere_642", |b| {
        b.iter(|| solve_constrained_bilaplacian(&lap, &pins, &rest).unwrap())
    });
}

fn chamfer_20k(c: &mut Criterion) {
    let body = SkinnedBody::standard();
    let a = sample_surface(body.rest_mesh(), 20_000, 1).unwrap();
    let b = sample_surface(body.rest_mesh(), 20_000, 2).unwrap();
    c.bench_function("chamfer_20k", |bch| bch.iter(|| chamfer(black_box(&a), black_box(&b)).unwrap()));
}

fn fitting(c: &mut Criterion) {
    let (scene, template) = small_scene("skirt_basic", 96);
    let cfg = FitConfig::default();
    let mesh = template.mesh();
    let normals = mesh.vertex_normals();
    c.bench_function("probe_skirt_template", |b| {
        b.iter(|| {
            probe_active_area(
                mesh.vertices(),
                &normals,
                &scene.target,
                Some((&scene.semantics, template.semantic())),
                ProbeMode::Gated,
                &cfg,
            )
        })
    });
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.bench_function("skirt_96", |b| {
        b.iter(|| run_pipeline(&scene, &template, &cfg, &BodyStart::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, extraction, biharmonic, chamfer_20k, fitting);
criterion_main!(benches);
