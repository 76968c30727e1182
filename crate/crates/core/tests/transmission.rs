use elastoscatter::geometry::{build_surface_quadrature, Surface};
use elastoscatter::kernels::{plane_wave, traction_from_jacobian, LameKernel, Part, Polarization};
use elastoscatter::material::Material;
use elastoscatter::transmission::*;
use elastoscatter::{CMat3, CVec3, Vec3, C64, I};

const OMEGA: f64 = 1.5;

fn mats() -> (Material, Material) {
    (Material::new(2.0, 1.0), Material::new(1.0, 1.0))
}

fn problem(nt: usize, nb: Option<usize>, variant: SystemVariant) -> TransmissionProblem {
    let (mi, me) = mats();
    let qd = build_surface_quadrature(&Surface::sphere(Vec3::zeros(), 1.0).unwrap(), nt).unwrap();
    let qb = nb.map(|n| {
        build_surface_quadrature(&Surface::sphere(Vec3::new(0.1, 0.05, 0.0), 0.3).unwrap(), n).unwrap()
    });
    TransmissionProblem::new(&mi, &me, OMEGA, qd, qb).unwrap().with_variant(variant)
}

fn p_wave_data(p: &TransmissionProblem) -> BoundaryData {
    let inc = plane_wave(&Vec3::new(0.0, 0.0, 1.0), &p.mat_e, OMEGA, Polarization::P).unwrap();
    boundary_data_from_incident(&inc, &p.quad_d, &p.constants, &p.mat_i, &p.mat_e).unwrap()
}

fn rel_diff(a: &[CVec3], b: &[CVec3]) -> f64 {
    let e: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum();
    let n: f64 = b.iter().map(|y| y.norm_squared()).sum();
    (e / n).sqrt()
}

#[test]
fn plane_p_wave_traction_matches_closed_form() {
    let p = problem(6, None, SystemVariant::Derived);
    let data = p_wave_data(&p);
    let (l, m) = (p.mat_e.lambda, p.mat_e.mu);
    let kp = OMEGA / (l + 2.0 * m).sqrt();
    let d = Vec3::new(0.0, 0.0, 1.0);
    for j in 0..p.quad_d.len() {
        let x = p.quad_d.nodes[j];
        let n = p.quad_d.normals[j];
        let e = (I * kp * d.dot(&x)).exp();
        // σn = λ (∇·u) n + 2μ ε n with u = d e^{ik d·x}
        let h = (n * l + d * (2.0 * m * d.dot(&n))).map(C64::from) * (I * kp * e);
        assert!((data.h[j] - h).norm() < 1e-12);
        assert!((data.f[j] - d.map(C64::from) * e).norm() < 1e-14);
    }
}

// γ_i = 0 for equal shear moduli, so H = h - μ M f; M f of the plane wave
// is i k e^{ik d·x} (d (d·n) - n).
#[test]
fn equal_materials_give_closed_form_transformed_traction() {
    let m = Material::new(1.5, 0.7);
    let qd = build_surface_quadrature(&Surface::sphere(Vec3::zeros(), 1.0).unwrap(), 6).unwrap();
    let p = TransmissionProblem::new(&m, &m, OMEGA, qd, None).unwrap();
    assert!((p.constants.alpha_i - 0.5).abs() < 1e-15 && (p.constants.alpha_e - 0.5).abs() < 1e-15);
    assert_eq!(p.constants.gamma_i, 0.0);
    let data = p_wave_data(&p);
    let kp = OMEGA / (m.lambda + 2.0 * m.mu).sqrt();
    let d = Vec3::new(0.0, 0.0, 1.0);
    for j in 0..p.quad_d.len() {
        let (x, n) = (p.quad_d.nodes[j], p.quad_d.normals[j]);
        let mf = (d * d.dot(&n) - n).map(C64::from) * (I * kp * (I * kp * d.dot(&x)).exp());
        assert!((data.big_h[j] - (data.h[j] - mf * C64::from(m.mu))).norm() < 1e-13);
        assert_eq!(data.big_f[j], data.f[j]);
    }
}

#[test]
fn zero_data_linearity_and_block_layout() {
    let p = problem(6, Some(4), SystemVariant::Derived);
    let sys = assemble_transmission_system(&p).unwrap();
    assert_eq!(sys.dim(), 3 * 32 + 6 * 72);
    let data = p_wave_data(&p);
    let z = BoundaryData {
        f: vec![CVec3::zeros(); 72],
        h: vec![CVec3::zeros(); 72],
        big_f: vec![CVec3::zeros(); 72],
        big_h: vec![CVec3::zeros(); 72],
    };
    let d0 = solve_transmission(&sys, &z).unwrap();
    assert!(d0.eta.iter().chain(&d0.phi).chain(&d0.psi).all(|v| v.norm() == 0.0));
    let c = C64::new(0.3, -2.0);
    let scale = |v: &[CVec3]| v.iter().map(|x| x * c).collect::<Vec<_>>();
    let dc = BoundaryData {
        f: scale(&data.f),
        h: scale(&data.h),
        big_f: scale(&data.big_f),
        big_h: scale(&data.big_h),
    };
    let d1 = solve_transmission(&sys, &data).unwrap();
    let d2 = solve_transmission(&sys, &dc).unwrap();
    assert_eq!(d1.eta.len(), 32);
    assert!(rel_diff(&d2.psi, &scale(&d1.psi)) < 1e-12);
    assert!(rel_diff(&d2.eta, &scale(&d1.eta)) < 1e-12);

    let p0 = problem(6, None, SystemVariant::Derived);
    let s0 = assemble_transmission_system(&p0).unwrap();
    assert_eq!(s0.dim(), 6 * 72);
    assert!(solve_transmission(&s0, &data).unwrap().eta.is_empty());
}

// Interior field Γ_i(x - z_out) q and exterior field Γ_e(x - z_in) q' give
// f and h; the solver must return the exterior field exactly.
#[test]
fn manufactured_transmission_solution_is_recovered() {
    let p = problem(10, None, SystemVariant::Derived);
    let ki = LameKernel::new(&p.mat_i, OMEGA).unwrap();
    let ke = LameKernel::new(&p.mat_e, OMEGA).unwrap();
    let z_out = Vec3::new(2.6, 0.8, -1.0);
    let z_in = Vec3::new(-0.2, 0.1, 0.3);
    let q1 = CVec3::new(C64::new(1.0, 0.2), C64::new(0.0, 0.0), C64::new(-0.5, 0.0));
    let q2 = CVec3::new(C64::new(0.0, 1.0), C64::new(0.7, 0.0), C64::new(0.2, 0.0));
    let field = |k: &LameKernel, x: &Vec3, z: &Vec3, q: &CVec3| -> (CVec3, CMat3) {
        let g = k.derivs(&(x - z), 1, Part::Full);
        let mut j = CMat3::zeros();
        for m in 0..3 {
            j.set_column(m, &(g.d1[m] * q));
        }
        (g.g * q, j)
    };
    let q = &p.quad_d;
    let (mut f, mut jf, mut h) = (vec![], vec![], vec![]);
    for (x, n) in q.nodes.iter().zip(&q.normals) {
        let (v, jv) = field(&ki, x, &z_out, &q1);
        let (u, ju) = field(&ke, x, &z_in, &q2);
        f.push(v - u);
        jf.push(jv - ju);
        h.push(
            traction_from_jacobian(&jv, n, p.mat_i.lambda, p.mat_i.mu, p.mat_i.mu)
                - traction_from_jacobian(&ju, n, p.mat_e.lambda, p.mat_e.mu, p.mat_e.mu),
        );
    }
    let data = BoundaryData::from_traces(f, &jf, h, &q.normals, p.constants.gamma_i - p.mat_i.mu).unwrap();
    let sys = assemble_transmission_system(&p).unwrap();
    let dens = solve_transmission(&sys, &data).unwrap();
    let ext: Vec<Vec3> = (0..20).map(|i| {
        let t = i as f64 * 0.7;
        Vec3::new(t.cos(), t.sin(), (0.3 * t).cos()).normalize() * (2.0 + 0.1 * i as f64)
    }).collect();
    let int: Vec<Vec3> = ext.iter().map(|x| x.normalize() * 0.5).collect();
    let (v, u) = reconstruct_fields(&dens, &p, &int, &ext).unwrap();
    let ue: Vec<CVec3> = ext.iter().map(|x| field(&ke, x, &z_in, &q2).0).collect();
    let vi: Vec<CVec3> = int.iter().map(|x| field(&ki, x, &z_out, &q1).0).collect();
    let (eu, ev) = (rel_diff(&u, &ue), rel_diff(&v, &vi));
    println!("manufactured: exterior {eu:.2e} interior {ev:.2e}");
    assert!(eu < 1e-5 && ev < 1e-5);
}

#[test]
fn derived_signs_satisfy_interface_conditions_and_printed_ones_do_not() {
    let mut prev = (f64::INFINITY, 0usize);
    for nt in [6, 8, 12] {
        let p = problem(nt, Some(8), SystemVariant::Derived);
        let data = p_wave_data(&p);
        let dens = solve_transmission(&assemble_transmission_system(&p).unwrap(), &data).unwrap();
        let r = transmission_residuals(&dens, &p, &data, 7, 0.01).unwrap();
        println!("nt {nt}: {r:?}");
        assert!(r.displacement < 1e-3 && r.traction < 1e-3 && r.rigid < 1e-3);
        // spectral decay beats any second-order rate
        let order = (prev.0 / r.displacement).ln() / (nt as f64 / prev.1 as f64).ln();
        if prev.1 > 0 {
            assert!(order >= 2.0, "order {order}");
        }
        prev = (r.displacement, nt);
    }
    let p = problem(8, Some(8), SystemVariant::AsPrinted);
    let data = p_wave_data(&p);
    let dens = solve_transmission(&assemble_transmission_system(&p).unwrap(), &data).unwrap();
    let r = transmission_residuals(&dens, &p, &data, 7, 0.01).unwrap();
    println!("as printed: {r:?}");
    assert!(r.displacement > 0.1 && r.traction > 0.1);
}

fn solved(nt: usize) -> (TransmissionProblem, DensityTriple) {
    let p = problem(nt, None, SystemVariant::Derived);
    let data = p_wave_data(&p);
    let dens = solve_transmission(&assemble_transmission_system(&p).unwrap(), &data).unwrap();
    (p, dens)
}

#[test]
fn far_field_is_split_and_matches_large_radius_field() {
    let (p, dens) = solved(8);
    let dirs = FarFieldPattern::direction_grid(6, 8);
    let ff = far_field(&dens, &p, &dirs).unwrap();
    let (dp, ds) = ff.orthogonality_defect();
    assert!(dp < 1e-8 && ds < 1e-8, "{dp:e} {ds:e}");
    let kp = p.kernel_exterior().kp;
    let ks = p.kernel_exterior().ks;
    let wl = 2.0 * std::f64::consts::PI / kp;
    let radii = [1e2, 1e3, 1e4].map(|m| m * wl);
    let (errs, slope) =
        far_field_remainder_slope(|t| exterior_field(&dens, &p, t, None), &ff, &p.mat_e, kp, ks, &radii).unwrap();
    println!("far-field remainders {errs:?} slope {slope:.4}");
    assert!((slope + 1.0).abs() < 0.1);

    let zero = DensityTriple {
        eta: vec![],
        phi: vec![CVec3::zeros(); p.quad_d.len()],
        psi: vec![CVec3::zeros(); p.quad_d.len()],
    };
    let fz = far_field(&zero, &p, &dirs).unwrap();
    assert!(fz.up_inf.iter().chain(&fz.us_inf).all(|v| v.norm() == 0.0));
}

#[test]
fn flux_is_independent_of_radius() {
    let (p, dens) = solved(8);
    let fl: Vec<C64> = [4.0, 8.0, 16.0].iter().map(|&r| flux(&dens, &p, &Vec3::zeros(), r, 24).unwrap()).collect();
    println!("flux {fl:?}");
    for f in &fl[1..] {
        assert!((f - fl[0]).norm() < 0.01 * fl[0].norm());
    }
    assert!(fl[0].re.abs() < 1e-6 * fl[0].norm());
}

#[test]
fn targets_on_wrong_side_are_rejected() {
    let (p, dens) = solved(6);
    assert!(reconstruct_fields(&dens, &p, &[Vec3::new(2.0, 0.0, 0.0)], &[]).is_err());
    assert!(reconstruct_fields(&dens, &p, &[], &[Vec3::new(0.2, 0.0, 0.0)]).is_err());
}

