use elastoscatter::geometry::*;
use elastoscatter::material::Density;
use elastoscatter::{Error, Vec3};
use std::f64::consts::PI;

/// Closed-form area of the prolate spheroid with semi-axes (a, a, c), c > a.
fn prolate_area(a: f64, c: f64) -> f64 {
    let e = (1.0 - a * a / (c * c)).sqrt();
    2.0 * PI * a * a * (1.0 + c / (a * e) * e.asin())
}

fn solid_angle_fraction(q: &SurfaceQuadrature, x: &Vec3) -> f64 {
    q.nodes
        .iter()
        .zip(&q.normals)
        .zip(&q.weights)
        .map(|((y, n), w)| {
            let d = y - x;
            w * d.dot(n) / d.norm().powi(3)
        })
        .sum::<f64>()
        / (4.0 * PI)
}

#[test]
fn parametric_area_and_closure() {
    let s = Surface::ellipsoid(Vec3::new(0.3, -0.1, 0.2), Vec3::new(1.0, 1.0, 1.5)).unwrap();
    let q = build_surface_quadrature(&s, 24).unwrap();
    assert!((q.area() / prolate_area(1.0, 1.5) - 1.0).abs() < 1e-10);
    let flux: Vec3 = q.normals.iter().zip(&q.weights).map(|(n, w)| n * *w).sum();
    assert!(flux.norm() < 1e-12);
    assert!(q.normals.iter().all(|n| (n.norm() - 1.0).abs() < 1e-14));
    assert!((s.volume() - 4.0 * PI / 3.0 * 1.5).abs() < 1e-12);
}

#[test]
fn gauss_solid_angle() {
    let s = Surface::ellipsoid(Vec3::zeros(), Vec3::new(1.2, 0.9, 1.0)).unwrap();
    let q = build_surface_quadrature(&s, 20).unwrap();
    assert!((solid_angle_fraction(&q, &Vec3::new(0.1, 0.2, -0.1)) - 1.0).abs() < 1e-8);
    assert!(solid_angle_fraction(&q, &Vec3::new(2.5, 0.0, 0.4)).abs() < 1e-8);
    let m = Surface::mesh(icosphere(3, Vec3::zeros(), 1.0)).unwrap();
    let qm = build_surface_quadrature(&m, 2).unwrap();
    assert!((solid_angle_fraction(&qm, &Vec3::new(0.05, 0.0, 0.1)) - 1.0).abs() < 1e-3);
}

#[test]
fn mesh_converges_to_sphere() {
    let mut last = f64::INFINITY;
    for level in 1..=4 {
        let m = icosphere(level, Vec3::zeros(), 1.0);
        m.validate().unwrap();
        let err = (m.signed_volume() / (4.0 * PI / 3.0) - 1.0).abs();
        assert!(err < last / 3.0);
        last = err;
    }
    assert!(last < 5e-3);
}

#[test]
fn off_round_trip_and_errors() {
    let m = icosphere(1, Vec3::zeros(), 2.0);
    let back = parse_off(&m.to_off()).unwrap();
    assert_eq!(back.faces, m.faces);
    assert!((back.signed_volume() - m.signed_volume()).abs() < 1e-9);

    assert!(matches!(parse_off(""), Err(Error::MeshParse { .. })));
    assert!(matches!(parse_off("PLY\n"), Err(Error::MeshParse { line: 1, .. })));
    let quad = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
    assert!(matches!(parse_off(quad), Err(Error::MeshParse { line: 7, .. })));

    // a lone triangle is open
    let tri = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
    assert!(matches!(tri.validate(), Err(Error::OpenSurface(..))));
    // flipping one face of a closed mesh breaks the winding
    let mut bad = icosphere(0, Vec3::zeros(), 1.0);
    bad.faces[0].swap(1, 2);
    assert!(matches!(bad.validate(), Err(Error::InconsistentWinding(..))));
}

#[test]
fn inward_mesh_is_reoriented() {
    let mut m = icosphere(1, Vec3::zeros(), 1.0);
    for f in m.faces.iter_mut() {
        f.swap(1, 2);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inward.off");
    std::fs::write(&path, m.to_off()).unwrap();
    let s = load_mesh(&path).unwrap();
    assert!(s.volume() > 0.0);
    assert!(s.contains(&Vec3::new(0.1, 0.0, 0.0)));
    assert!(!s.contains(&Vec3::new(1.1, 0.0, 0.0)));
}

#[test]
fn invalid_surfaces() {
    assert!(Surface::sphere(Vec3::zeros(), 0.0).is_err());
    assert!(Surface::ellipsoid(Vec3::zeros(), Vec3::new(1.0, -1.0, 1.0)).is_err());
    let s = Surface::sphere(Vec3::zeros(), 1.0).unwrap();
    assert!(build_surface_quadrature(&s, 0).is_err());
}

#[test]
fn volume_grid_measures_the_shell() {
    let d = Surface::sphere(Vec3::zeros(), 1.0).unwrap();
    let b = Surface::sphere(Vec3::new(0.1, 0.0, 0.0), 0.4).unwrap();
    let rho = Density::Constant(1.3);
    let g = build_volume_grid(&d, Some(&b), 0.025, &rho).unwrap();
    let want = 4.0 * PI / 3.0 * (1.0 - 0.4f64.powi(3));
    assert!((g.total_volume() / want - 1.0).abs() < 1e-2);
    assert!(g.density.iter().all(|&r| r == 1.3));
    assert!(g.centers.iter().all(|x| d.contains(x) && !b.contains(x)));

    let outside = Surface::sphere(Vec3::new(0.9, 0.0, 0.0), 0.4).unwrap();
    assert!(matches!(build_volume_grid(&d, Some(&outside), 0.1, &rho), Err(Error::Geometry(_))));
    assert!(build_volume_grid(&d, None, 0.0, &rho).is_err());
}

#[test]
fn graded_polar_rule_integrates_sphere() {
    let r = PolarRule::graded(0.01, 8, 32);
    let nodes = r.nodes(&Vec3::z(), &Vec3::x(), &Vec3::y());
    let total: f64 = nodes.iter().map(|(_, w)| w).sum();
    assert!((total - 4.0 * PI).abs() < 1e-12);
    // ∫ z² dΩ = 4π/3
    let m2: f64 = nodes.iter().map(|(s, w)| w * s.z * s.z).sum();
    assert!((m2 - 4.0 * PI / 3.0).abs() < 1e-12);
}

#[test]
fn probe_points_leave_along_the_normal() {
    let z = Vec3::new(0.0, 0.0, 1.0);
    let p = probe_point(&z, &Vec3::z(), 0.2, 4);
    assert!((p - Vec3::new(0.0, 0.0, 1.05)).norm() < 1e-15);
}
