//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Every tolerance and time budget is a named constant below.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use elastoscatter::geometry::{build_surface_quadrature, build_volume_grid, Surface};
use elastoscatter::kernels::{plane_wave, Polarization};
use elastoscatter::material::{Density, Material};
use elastoscatter::medium::{
    assemble_volume_operator, incident_with_obstacle, neumann_series, rigid_green, scattered_field,
    solve_lippmann_schwinger,
};
use elastoscatter::probes::{
    incident_norm_growth, normalized_source_data_bounds, separation_samples, singular_bound_check, ProbeConfig,
};
use elastoscatter::symbolcheck::{
    ball_dirichlet_eigenvalue, block_characteristic, itp_threshold, numeric_symbol, radial_dirichlet_eigenvalue_fd,
    symbol_determinant, SingularBlock, DEFAULT_SAMPLES,
};
use elastoscatter::transmission::*;
use elastoscatter::{CVec3, Vec3, C64};
use nalgebra::{Matrix3, Rotation3, Vector3};
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

// 1
const NAVIER_SAMPLES: usize = 1000;
const NAVIER_TOL: f64 = 1e-5;
const NAVIER_BUDGET: f64 = 10.0;
// 2
const KELVIN_FACTOR: f64 = 2.0;
const KELVIN_BUDGET: f64 = 1.0;
// 3
const JUMP_LEVELS: [usize; 3] = [6, 8, 12];
const JUMP_STRIDE: usize = 6;
const JUMP_TOL: f64 = 1e-4;
const JUMP_MIN_ORDER: f64 = 2.0;
const JUMP_MAX_NODES: usize = 5000;
const JUMP_BUDGET: f64 = 60.0;
// 4
const BETTI_TARGETS: usize = 50;
const BETTI_TOL: f64 = 1e-3;
const BETTI_BUDGET: f64 = 60.0;
// 5
const TRANS_ORDER: usize = 8;
const TRANS_ORDER_B: usize = 8;
const TRANS_TOL: f64 = 1e-3;
const FLUX_RADII: [f64; 3] = [2.0, 4.0, 8.0];
const FLUX_TOL: f64 = 0.01;
const TRANS_BUDGET: f64 = 300.0;
// 6
const FAR_WAVELENGTHS: [f64; 3] = [1e2, 1e3, 1e4];
const FAR_SLOPE: f64 = -1.0;
const FAR_SLOPE_TOL: f64 = 0.1;
const FAR_SPLIT_TOL: f64 = 1e-8;
// 7
const LS_H: f64 = 0.1;
const LS_TOL: f64 = 1e-6;
const LS_NEUMANN_CONTRAST: f64 = 0.05;
const LS_BUDGET: f64 = 300.0;
const LS_OBSTACLE_BUDGET: f64 = 1200.0;
// 8
const SYMBOL_EXACT_TOL: f64 = 1e-15;
const SYMBOL_NUMERIC_TOL: f64 = 1e-10;
const SYMBOL_BUDGET: f64 = 1.0;
// 9
const ITP_FD_CELLS: usize = 400;
const ITP_LAMBDA_TOL: f64 = 5e-3;
const ITP_BUDGET: f64 = 5.0;
// 10
const PROBE_J_MAX: usize = 32;
const PROBE_SLOPE_RANGE: (f64, f64) = (0.8, 1.2);
const PROBE_RATIO_MAX: f64 = 10.0;
const MEAN_VALUE_SAMPLES: usize = 10_000;
const PROBE_BUDGET: f64 = 120.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(budget: f64, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let s = t.elapsed().as_secs_f64();
    let in_time = s < budget;
    o.detail = format!("{}; {s:.1}s (budget {budget}s)", o.detail);
    o.pass &= in_time;
    o
}

fn contrast() -> (Material, Material) {
    (Material::new(2.0, 1.0), Material::new(1.0, 1.0))
}

fn kernel_correctness() -> Outcome {
    timed(NAVIER_BUDGET, || {
        let (nav, hess) = common::kernel_fd_sweep(NAVIER_SAMPLES, 2024);
        outcome(
            nav < NAVIER_TOL && hess < NAVIER_TOL,
            format!("max Navier residual {nav:.2e}, max Hessian FD error {hess:.2e} < {NAVIER_TOL:e}"),
        )
    })
}

fn kelvin_split() -> Outcome {
    timed(KELVIN_BUDGET, || {
        let mut worst: f64 = 0.0;
        for (l, m, w) in [(1.0, 1.0, 1.5), (2.0, 1.0, 3.0), (-0.3, 0.8, 0.7), (4.0, 0.5, 5.0)] {
            let prof = common::kelvin_remainder_profile(&Material::new(l, m), w);
            let sup = prof.iter().map(|p| p.1).fold(0.0, f64::max);
            worst = worst.max(sup / prof[0].1);
        }
        outcome(
            worst <= KELVIN_FACTOR,
            format!("sup_h |Γ-Γ0| / value at h=1e-2 is {worst:.4} <= {KELVIN_FACTOR}"),
        )
    })
}

fn jump_relations() -> Outcome {
    timed(JUMP_BUDGET, || {
        let mat = Material::new(2.0, 1.0);
        let errs: Vec<common::JumpErrors> =
            JUMP_LEVELS.iter().map(|&nt| common::jump_errors(&mat, 1.5, nt, JUMP_STRIDE)).collect();
        let maxes: Vec<f64> = errs.iter().map(|e| e.max()).collect();
        let orders = common::observed_orders(&JUMP_LEVELS, &maxes);
        let last = errs.last().unwrap();
        let pass = last.max() < JUMP_TOL
            && last.nodes <= JUMP_MAX_NODES
            && orders.iter().all(|&o| o >= JUMP_MIN_ORDER);
        outcome(
            pass,
            format!(
                "{} nodes: S {:.1e}, D {:.1e}, T S {:.1e}, T D {:.1e} < {JUMP_TOL:e}; orders {:.2?} >= {JUMP_MIN_ORDER}",
                last.nodes, last.single, last.double, last.adjoint, last.traction_double, orders
            ),
        )
    })
}

fn betti() -> Outcome {
    timed(BETTI_BUDGET, || {
        let (_, me) = contrast();
        let e = common::betti_error(&me, 1.5, 12, BETTI_TARGETS);
        outcome(e < BETTI_TOL, format!("max relative error {e:.2e} < {BETTI_TOL:e} at {BETTI_TARGETS} targets"))
    })
}

fn sphere_problem(with_b: bool) -> TransmissionProblem {
    let (mi, me) = contrast();
    let qd = build_surface_quadrature(&Surface::sphere(Vec3::zeros(), 1.0).unwrap(), TRANS_ORDER).unwrap();
    let qb = with_b.then(|| {
        build_surface_quadrature(&Surface::sphere(Vec3::new(0.1, 0.05, 0.0), 0.3).unwrap(), TRANS_ORDER_B).unwrap()
    });
    TransmissionProblem::new(&mi, &me, 1.5, qd, qb).unwrap()
}

fn solve_plane_p(p: &TransmissionProblem) -> (BoundaryData, DensityTriple) {
    let inc = plane_wave(&Vec3::z(), &p.mat_e, p.omega, Polarization::P).unwrap();
    let data = boundary_data_from_incident(&inc, &p.quad_d, &p.constants, &p.mat_i, &p.mat_e).unwrap();
    let dens = solve_transmission(&assemble_transmission_system(p).unwrap(), &data).unwrap();
    (data, dens)
}

fn transmission_solve(cache: &mut Option<(TransmissionProblem, DensityTriple)>) -> Outcome {
    timed(TRANS_BUDGET, || {
        let p = sphere_problem(false);
        let (data, dens) = solve_plane_p(&p);
        let r1 = transmission_residuals(&dens, &p, &data, 7, 0.01).unwrap();
        let pb = sphere_problem(true);
        let (datab, densb) = solve_plane_p(&pb);
        let r3 = transmission_residuals(&densb, &pb, &datab, 7, 0.01).unwrap();
        let fl: Vec<C64> = FLUX_RADII.iter().map(|&r| flux(&dens, &p, &Vec3::zeros(), r, 24).unwrap()).collect();
        let spread = fl.iter().map(|f| (f - fl[0]).norm() / fl[0].norm()).fold(0.0, f64::max);
        *cache = Some((p, dens));
        let worst1 = r1.displacement.max(r1.traction);
        let worst3 = r3.displacement.max(r3.traction).max(r3.rigid);
        outcome(
            worst1 < TRANS_TOL && worst3 < TRANS_TOL && spread < FLUX_TOL,
            format!(
                "interface residual {worst1:.2e}, with D_b {worst3:.2e} < {TRANS_TOL:e}; flux spread {spread:.2e} < {FLUX_TOL}"
            ),
        )
    })
}

fn far_field_asymptotics(cache: &Option<(TransmissionProblem, DensityTriple)>) -> Outcome {
    let Some((p, dens)) = cache else {
        return outcome(false, "transmission solve unavailable".into());
    };
    let dirs = FarFieldPattern::direction_grid(6, 8);
    let ff = far_field(dens, p, &dirs).unwrap();
    let (dp, ds) = ff.orthogonality_defect();
    let k = p.kernel_exterior();
    let wl = 2.0 * PI / k.kp;
    let radii = FAR_WAVELENGTHS.map(|m| m * wl);
    let (_, slope) =
        far_field_remainder_slope(|t| exterior_field(dens, p, t, None), &ff, &p.mat_e, k.kp, k.ks, &radii).unwrap();
    outcome(
        (slope - FAR_SLOPE).abs() <= FAR_SLOPE_TOL && dp < FAR_SPLIT_TOL && ds < FAR_SPLIT_TOL,
        format!("remainder slope {slope:.4} (target {FAR_SLOPE} ± {FAR_SLOPE_TOL}); split defects {dp:.1e}, {ds:.1e} < {FAR_SPLIT_TOL:e}"),
    )
}

fn bump(amp: f64) -> Density {
    Density::Field(Arc::new(move |x: &Vec3| {
        let r2 = x.norm_squared() / 0.64;
        if r2 < 1.0 {
            1.0 + amp * (1.0 - 1.0 / (1.0 - r2)).exp()
        } else {
            1.0
        }
    }))
}

fn smooth_field(x: &Vec3) -> CVec3 {
    CVec3::new(C64::new(1.0 + x.y, 0.3 * x.z), C64::new(0.0, x.x).exp(), C64::new(x.x * x.y, -0.5))
}

fn rel(a: &[CVec3], b: &[CVec3]) -> f64 {
    let e: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum();
    let n: f64 = b.iter().map(|y| y.norm_squared()).sum();
    (e / n).sqrt()
}

fn lippmann_schwinger() -> Outcome {
    let mat = Material::new(1.0, 1.0);
    let omega = 2.0;
    let d = Surface::sphere(Vec3::zeros(), 1.0).unwrap();
    let manufactured = |b: Option<&Surface>| -> (f64, usize) {
        let grid = build_volume_grid(&d, b, LS_H, &bump(0.5)).unwrap();
        let qb = b.map(|s| build_surface_quadrature(s, 8).unwrap());
        let g = rigid_green(qb, &mat, omega).unwrap();
        let op = assemble_volume_operator(&g, &grid).unwrap();
        let vstar: Vec<CVec3> = grid.centers.iter().map(smooth_field).collect();
        let rhs: Vec<CVec3> = vstar.iter().zip(op.apply(&vstar)).map(|(a, b)| a + b).collect();
        let sol = solve_lippmann_schwinger(&op, &rhs, 1e-10, 300).unwrap();
        (rel(&sol.v, &vstar), grid.len())
    };
    let t = Instant::now();
    let (e_free, cells) = manufactured(None);

    // unit density: no volume term, V^inc returned untouched
    let grid1 = build_volume_grid(&d, None, LS_H, &Density::Constant(1.0)).unwrap();
    let g = rigid_green(None, &mat, omega).unwrap();
    let op1 = assemble_volume_operator(&g, &grid1).unwrap();
    let inc = plane_wave(&Vec3::z(), &mat, omega, Polarization::P).unwrap();
    let vinc = incident_with_obstacle(&g, &op1, &inc).unwrap();
    let s1 = solve_lippmann_schwinger(&op1, &vinc.values, 1e-10, 10).unwrap();
    let out = scattered_field(&s1, &op1, &g, &vinc, &[Vec3::new(0.0, 3.0, 0.0)]).unwrap();
    let short = op1.is_zero() && s1.iterations == 0 && s1.v == vinc.values && out[0] == CVec3::zeros();

    let small = grid1.with_density(&bump(LS_NEUMANN_CONTRAST));
    let ops = assemble_volume_operator(&g, &small).unwrap();
    let vstar: Vec<CVec3> = small.centers.iter().map(smooth_field).collect();
    let kry = solve_lippmann_schwinger(&ops, &vstar, 1e-12, 300).unwrap();
    let neu = neumann_series(&ops, &vstar, 1e-13, 300).unwrap();
    let e_neu = rel(&neu, &kry.v);
    let t_free = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let b = Surface::sphere(Vec3::new(0.05, 0.0, -0.05), 0.3).unwrap();
    let (e_obs, cells_b) = manufactured(Some(&b));
    let t_obs = t.elapsed().as_secs_f64();
    outcome(
        e_free < LS_TOL && e_obs < LS_TOL && short && e_neu < LS_TOL && t_free < LS_BUDGET && t_obs < LS_OBSTACLE_BUDGET,
        format!(
            "manufactured {e_free:.1e} ({cells} cells), with D_b {e_obs:.1e} ({cells_b} cells) < {LS_TOL:e}; \
             short-circuit exact {short}; Neumann {e_neu:.1e} < {LS_TOL:e}; {t_free:.1}s (budget {LS_BUDGET}s), \
             with D_b {t_obs:.1}s (budget {LS_OBSTACLE_BUDGET}s)"
        ),
    )
}

fn symbol_calculus() -> Outcome {
    timed(SYMBOL_BUDGET, || {
        let (mi, me) = contrast();
        let r = symbol_determinant(&mi, &me).unwrap();
        let fixture = (3.0 / 16.0) * (285.0 / 1156.0) * (575.0 / 2304.0);
        let exact = (r.p - 1.0 / 17.0).abs() < SYMBOL_EXACT_TOL
            && (r.q + 1.0 / 48.0).abs() < SYMBOL_EXACT_TOL
            && (r.det_sigma - fixture).abs() < SYMBOL_EXACT_TOL;
        let frame: Matrix3<f64> = *Rotation3::from_axis_angle(&Vector3::y_axis(), 0.7).matrix();
        let mut worst: f64 = 0.0;
        let mut names = Vec::new();
        for b in SingularBlock::ALL {
            let x = b.coefficient(&r);
            let s = numeric_symbol(block_characteristic(x, frame), DEFAULT_SAMPLES).unwrap();
            let mut e: f64 = 0.0;
            for k in 0..16 {
                let th = -PI + 2.0 * PI * k as f64 / 16.0;
                e = e.max((s.determinant(th) - C64::from(b.closed_form_det(&r))).norm());
            }
            names.push(format!("{} {e:.2e}", b.name()));
            worst = worst.max(e);
        }
        let m = Material::new(1.5, 0.7);
        let eq = symbol_determinant(&m, &m).unwrap();
        let equal = eq.p == 0.0 && eq.q == 0.0;
        outcome(
            exact && worst < SYMBOL_NUMERIC_TOL && equal,
            format!(
                "closed-form fixture exact {exact}; numeric block determinants vs closed form [{}] < {SYMBOL_NUMERIC_TOL:e}; equal materials p = q = 0 {equal}",
                names.join(", ")
            ),
        )
    })
}

fn itp() -> Outcome {
    timed(ITP_BUDGET, || {
        let fd = radial_dirichlet_eigenvalue_fd(1.0, ITP_FD_CELLS).unwrap();
        let rel_err = (fd / (PI * PI) - 1.0).abs();
        let mut exact = true;
        for (mat, r, lo, hi) in [
            (Material::new(1.0, 1.0), 1.0, 0.3, 0.8),
            (Material::new(2.0, 1.0), 0.7, 1.5, 3.0),
            (Material::new(-0.6, 1.0), 2.0, 2.0, 2.0),
        ] {
            let t = itp_threshold(r, &mat, lo, hi).unwrap();
            let m = mat.mu.min(3.0 * mat.lambda + 2.0 * mat.mu);
            let l1 = (PI / r) * (PI / r);
            let rho_star = hi;
            let want = (m * l1 / rho_star).min(m * l1);
            exact &= t.m == m && t.lambda1 == l1 && t.lambda1 == ball_dirichlet_eigenvalue(r) && t.omega_max_squared == want;
        }
        outcome(
            rel_err < ITP_LAMBDA_TOL && exact,
            format!("λ1 FD {fd:.6} vs π², relative {rel_err:.1e} < {ITP_LAMBDA_TOL:e}; threshold reproduced exactly {exact}"),
        )
    })
}

fn probes() -> Outcome {
    timed(PROBE_BUDGET, || {
        let s = Surface::sphere(Vec3::zeros(), 1.0).unwrap();
        let mat = Material::new(1.0, 1.0);
        let cfg = ProbeConfig::at_parameter(s, &Vec3::new(0.3, -0.2, 1.0), 0.1, PROBE_J_MAX, mat.clone(), 2.0).unwrap();
        let g = incident_norm_growth(&cfg).unwrap();
        let quad = build_surface_quadrature(&cfg.surface, 12).unwrap();
        let b = normalized_source_data_bounds(&cfg, &quad).unwrap();
        let kp = elastoscatter::material::wavenumbers(&mat, 2.0).unwrap().kp;
        let mv = singular_bound_check(&separation_samples(MEAN_VALUE_SAMPLES, 1e-6, 10.0), kp).unwrap();
        let slope_ok = g.slope >= PROBE_SLOPE_RANGE.0 && g.slope <= PROBE_SLOPE_RANGE.1;
        let f_ok = b.f_ratio < PROBE_RATIO_MAX;
        let h_ok = b.h_ratio < PROBE_RATIO_MAX;
        let mv_ok = mv.samples == MEAN_VALUE_SAMPLES && mv.mean_value_violations == 0;
        outcome(
            slope_ok && f_ok && h_ok && mv_ok,
            format!(
                "growth exponent {:.4} in [{}, {}]; f ratio {:.2}, h ratio {:.2} < {PROBE_RATIO_MAX}; mean-value violations {} of {}",
                g.slope, PROBE_SLOPE_RANGE.0, PROBE_SLOPE_RANGE.1, b.f_ratio, b.h_ratio, mv.mean_value_violations, mv.samples
            ),
        )
    })
}

fn determinism() -> Outcome {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let cases = [
        ("symbol-check", "symbol_sweep.toml", "symbol.csv"),
        ("probe", "probe_sphere.toml", "probe.csv"),
        ("solve-medium", "medium_radial.toml", "medium_farfield.csv"),
        ("solve-transmission", "transmission_sphere.toml", "transmission_farfield.csv"),
    ];
    let mut same = 0;
    for (cmd, sc, file) in cases {
        let mut bytes = Vec::new();
        for d in &dirs {
            let o = Command::new(env!("CARGO_BIN_EXE_elastoscatter"))
                .arg(cmd)
                .arg("--scenario")
                .arg(root.join(sc))
                .arg("--out-dir")
                .arg(d.path())
                .output()
                .unwrap();
            if !o.status.success() {
                return outcome(false, format!("{cmd} failed: {}", String::from_utf8_lossy(&o.stderr)));
            }
            bytes.push(std::fs::read(d.path().join(file)).unwrap_or_default());
        }
        if !bytes[0].is_empty() && bytes[0] == bytes[1] {
            same += 1;
        }
    }
    outcome(same == cases.len(), format!("{same} of {} CSV outputs byte-identical across two runs", cases.len()))
}

fn main() {
    let t0 = Instant::now();
    let mut cache = None;
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut report = |n: usize, name: &'static str, o: Outcome| {
        println!("[{}] {n:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    report(1, "kernel correctness", kernel_correctness());
    report(2, "Kelvin split", kelvin_split());
    report(3, "jump relations", jump_relations());
    report(4, "Betti representation", betti());
    report(5, "transmission solve", transmission_solve(&mut cache));
    report(6, "far-field asymptotics", far_field_asymptotics(&cache));
    report(7, "Lippmann-Schwinger", lippmann_schwinger());
    report(8, "symbol calculus", symbol_calculus());
    report(9, "ITP threshold", itp());
    report(10, "probe experiments", probes());
    report(11, "determinism", determinism());
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} passed in {:.0?}",
        results.len() - failed.len(),
        results.len(),
        Duration::from_secs(t0.elapsed().as_secs())
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
