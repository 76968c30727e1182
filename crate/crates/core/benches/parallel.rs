use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use elastoscatter::exec;
use elastoscatter::geometry::{build_surface_quadrature, build_volume_grid, Surface};
use elastoscatter::material::{Density, Material};
use elastoscatter::medium::{assemble_volume_operator, rigid_green};
use elastoscatter::transmission::{assemble_transmission_system, TransmissionProblem};
use elastoscatter::{CVec3, Vec3, C64};
use std::hint::black_box;

const MODES: [(&str, bool); 2] = [("sequential", true), ("parallel", false)];

fn transmission_assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("transmission_assembly");
    g.sample_size(10);
    for order in [4, 6] {
        let qd = build_surface_quadrature(&Surface::sphere(Vec3::zeros(), 1.0).unwrap(), order).unwrap();
        let p = TransmissionProblem::new(&Material::new(2.0, 1.0), &Material::new(1.0, 1.0), 1.5, qd, None).unwrap();
        for (name, seq) in MODES {
            exec::set_sequential(seq);
            g.bench_with_input(BenchmarkId::new(name, order), &p, |b, p| {
                b.iter(|| black_box(assemble_transmission_system(p).unwrap()))
            });
        }
    }
    exec::set_sequential(false);
    g.finish();
}

fn volume_matvec(c: &mut Criterion) {
    let mut g = c.benchmark_group("volume_matvec");
    g.sample_size(10);
    let mat = Material::new(1.0, 1.0);
    let d = Surface::sphere(Vec3::zeros(), 1.0).unwrap();
    let green = rigid_green(None, &mat, 2.0).unwrap();
    for h in [0.2, 0.1] {
        let grid = build_volume_grid(&d, None, h, &Density::Constant(1.5)).unwrap();
        let op = assemble_volume_operator(&green, &grid).unwrap();
        let phi: Vec<CVec3> = grid
            .centers
            .iter()
            .map(|x| CVec3::new(C64::new(x.x, 0.0), C64::new(0.0, x.y), C64::new(1.0, x.z)))
            .collect();
        for (name, seq) in MODES {
            exec::set_sequential(seq);
            g.bench_with_input(BenchmarkId::new(name, grid.len()), &phi, |b, phi| {
                b.iter(|| black_box(op.apply(phi)))
            });
        }
    }
    exec::set_sequential(false);
    g.finish();
}

criterion_group!(benches, transmission_assembly, volume_matvec);
criterion_main!(benches);
