use crate::scenario::{check_levels, v3, ConvergenceKind, Scenario, Shape};
use anyhow::{ensure, Context, Result};
use elastoscatter::geometry::{build_surface_quadrature, build_volume_grid, SurfaceQuadrature};
use elastoscatter::material::{coupling_constants, wavenumbers};
use elastoscatter::medium::{
    assemble_volume_operator, estimate_ratio, incident_with_obstacle, medium_far_field, navier_residual,
    rigid_green, scattered_field, solve_lippmann_schwinger, MediumSolution, ObstacleIncident, RigidGreenFunction,
    VolumeOperator,
};
use elastoscatter::probes::{probe_run, ProbeConfig};
use elastoscatter::symbolcheck::{itp_threshold, radial_dirichlet_eigenvalue_fd, symbol_determinant_with_margin};
use elastoscatter::transmission::{
    assemble_transmission_system, boundary_data_from_incident, exterior_field, far_field, far_field_remainder_slope,
    flux, solve_transmission, transmission_residuals, BoundaryData, DensityTriple, FarFieldPattern,
    TransmissionProblem, TransmissionResiduals,
};
use elastoscatter::{CVec3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

pub struct Ctx {
    pub scenario: Scenario,
    pub out_dir: PathBuf,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    log::info!("wrote {}", path.display());
    Ok(())
}

#[derive(Serialize)]
struct KeyValue {
    key: String,
    value: String,
}

fn kv(key: &str, value: impl ToString) -> KeyValue {
    KeyValue {
        key: key.to_string(),
        value: value.to_string(),
    }
}

#[derive(Serialize)]
struct FarFieldRow {
    dx: f64,
    dy: f64,
    dz: f64,
    up_x_re: f64,
    up_x_im: f64,
    up_y_re: f64,
    up_y_im: f64,
    up_z_re: f64,
    up_z_im: f64,
    us_x_re: f64,
    us_x_im: f64,
    us_y_re: f64,
    us_y_im: f64,
    us_z_re: f64,
    us_z_im: f64,
}

fn farfield_rows(ff: &FarFieldPattern) -> Vec<FarFieldRow> {
    ff.directions
        .iter()
        .zip(ff.up_inf.iter().zip(&ff.us_inf))
        .map(|(d, (p, s))| FarFieldRow {
            dx: d.x,
            dy: d.y,
            dz: d.z,
            up_x_re: p.x.re,
            up_x_im: p.x.im,
            up_y_re: p.y.re,
            up_y_im: p.y.im,
            up_z_re: p.z.re,
            up_z_im: p.z.im,
            us_x_re: s.x.re,
            us_x_im: s.x.im,
            us_y_re: s.y.re,
            us_y_im: s.y.im,
            us_z_re: s.z.re,
            us_z_im: s.z.im,
        })
        .collect()
}

#[derive(Serialize)]
struct FieldRow {
    x: f64,
    y: f64,
    z: f64,
    ux_re: f64,
    ux_im: f64,
    uy_re: f64,
    uy_im: f64,
    uz_re: f64,
    uz_im: f64,
}

fn field_rows(pts: &[Vec3], u: &[CVec3]) -> Vec<FieldRow> {
    pts.iter()
        .zip(u)
        .map(|(x, v)| FieldRow {
            x: x.x,
            y: x.y,
            z: x.z,
            ux_re: v.x.re,
            ux_im: v.x.im,
            uy_re: v.y.re,
            uy_im: v.y.im,
            uz_re: v.z.re,
            uz_im: v.z.im,
        })
        .collect()
}

fn directions(s: &Scenario) -> Vec<Vec3> {
    FarFieldPattern::direction_grid(s.outputs.farfield_theta, s.outputs.farfield_phi)
}

/// Solved transmission problem at ring count `order`.
struct Transmission {
    problem: TransmissionProblem,
    data: BoundaryData,
    dens: DensityTriple,
}

fn transmission(s: &Scenario, order: usize) -> Result<Transmission> {
    ensure!(
        s.density_is_constant(),
        "the transmission solver needs a constant density; use solve-medium"
    );
    ensure!(
        !matches!(s.geometry.d, Shape::Mesh { .. }) && !matches!(s.geometry.d_b, Some(Shape::Mesh { .. })),
        "the transmission solver needs parametric surfaces (sphere or ellipsoid); meshes are supported by solve-medium"
    );
    let (rho, _) = s.materials.density.range();
    let mat_i = s.mat_i().with_density(elastoscatter::material::Density::Constant(rho));
    let mat_e = s.mat_e();
    let qd = build_surface_quadrature(&s.surface_d()?, order)?;
    let qb = s
        .surface_b()?
        .map(|b| build_surface_quadrature(&b, s.solver.order_b))
        .transpose()?;
    let problem = TransmissionProblem::new(&mat_i, &mat_e, s.materials.omega, qd, qb).context("transmission")?;
    let inc = s.incident()?;
    let data = boundary_data_from_incident(&inc, &problem.quad_d, &problem.constants, &problem.mat_i, &problem.mat_e)
        .context("transmission boundary data")?;
    log::info!("assembling transmission system ({} nodes on ∂D)", problem.quad_d.len());
    let sys = assemble_transmission_system(&problem).context("transmission assembly")?;
    let dens = solve_transmission(&sys, &data).context("transmission solve")?;
    Ok(Transmission { problem, data, dens })
}

fn residuals(s: &Scenario, t: &Transmission) -> Result<TransmissionResiduals> {
    Ok(transmission_residuals(&t.dens, &t.problem, &t.data, s.solver.stride, s.solver.delta0)?)
}

fn remainder_radii(s: &Scenario, kp: f64) -> Vec<f64> {
    let wl = 2.0 * PI / kp;
    s.outputs.remainder_wavelengths.iter().map(|m| m * wl).collect()
}

pub fn solve_transmission_cmd(ctx: &Ctx) -> Result<()> {
    let s = &ctx.scenario;
    let t = transmission(s, s.solver.order)?;
    let r = residuals(s, &t)?;
    log::info!("residuals {r:?}");
    let ff = far_field(&t.dens, &t.problem, &directions(s))?;
    let (dp, ds) = ff.orthogonality_defect();
    log::info!("far field: u_p radial defect {dp:.3e}, u_s tangential defect {ds:.3e}");
    write_rows(&ctx.path("transmission_farfield.csv"), &farfield_rows(&ff))?;
    let mut summary = vec![
        kv("nodes_d", t.problem.quad_d.len()),
        kv("nodes_b", t.problem.quad_b.as_ref().map_or(0, |q| q.len())),
        kv("residual_displacement", r.displacement),
        kv("residual_traction", r.traction),
        kv("residual_rigid", r.rigid),
        kv("farfield_radial_defect", dp),
        kv("farfield_tangential_defect", ds),
    ];
    for &rad in &s.outputs.flux_radii {
        let f = flux(&t.dens, &t.problem, &Vec3::zeros(), rad, s.outputs.flux_order)?;
        summary.push(kv(&format!("flux_im_r{rad}"), f.im));
        summary.push(kv(&format!("flux_re_r{rad}"), f.re));
    }
    write_rows(&ctx.path("transmission_summary.csv"), &summary)?;
    if !s.outputs.targets.is_empty() {
        let pts: Vec<Vec3> = s.outputs.targets.iter().map(v3).collect();
        let d = &t.problem.quad_d.surface;
        ensure!(pts.iter().all(|x| !d.contains(x)), "outputs.targets must lie outside geometry.d");
        let u = exterior_field(&t.dens, &t.problem, &pts, None)?;
        write_rows(&ctx.path("transmission_field.csv"), &field_rows(&pts, &u))?;
    }
    Ok(())
}

struct Medium {
    green: RigidGreenFunction,
    op: VolumeOperator,
    inc: ObstacleIncident,
    sol: MediumSolution,
}

fn b_quadrature(s: &Scenario) -> Result<Option<SurfaceQuadrature>> {
    s.surface_b()?
        .map(|b| build_surface_quadrature(&b, s.solver.order_b))
        .transpose()
        .map_err(Into::into)
}

fn medium(s: &Scenario, h: f64) -> Result<Medium> {
    let d = s.surface_d()?;
    let b = s.surface_b()?;
    let rho = s.materials.density.density()?;
    let grid = build_volume_grid(&d, b.as_ref(), h, &rho).context("volume grid")?;
    log::info!("medium grid: {} cells at h = {h}", grid.len());
    let green = rigid_green(b_quadrature(s)?, &s.mat_e(), s.materials.omega).context("rigid Green function")?;
    let op = assemble_volume_operator(&green, &grid).context("volume operator")?;
    let field = s.incident()?;
    let inc = incident_with_obstacle(&green, &op, &field)?;
    let sol = solve_lippmann_schwinger(&op, &inc.values, s.solver.tol, s.solver.max_iter).context("medium solve")?;
    log::info!("GMRES: {} iterations, residual {:.3e}", sol.iterations, sol.residual);
    Ok(Medium { green, op, inc, sol })
}

pub fn solve_medium_cmd(ctx: &Ctx) -> Result<()> {
    let s = &ctx.scenario;
    let m = medium(s, s.solver.grid_h)?;
    let field = s.incident()?;
    let ff = medium_far_field(&m.sol, &m.op, &m.green, &m.inc, &directions(s))?;
    let (dp, ds) = ff.orthogonality_defect();
    log::info!("far field: u_p radial defect {dp:.3e}, u_s tangential defect {ds:.3e}");
    write_rows(&ctx.path("medium_farfield.csv"), &farfield_rows(&ff))?;
    let summary = vec![
        kv("cells", m.op.len()),
        kv("iterations", m.sol.iterations),
        kv("gmres_residual", m.sol.residual),
        kv("estimate_ratio", estimate_ratio(&m.sol, &m.op.grid, &field, &m.green)),
        kv("navier_residual", navier_residual(&m.sol, &m.op.grid, &s.mat_e(), s.materials.omega)),
        kv("farfield_radial_defect", dp),
        kv("farfield_tangential_defect", ds),
    ];
    write_rows(&ctx.path("medium_summary.csv"), &summary)?;
    if !s.outputs.targets.is_empty() {
        let pts: Vec<Vec3> = s.outputs.targets.iter().map(v3).collect();
        let d = s.surface_d()?;
        ensure!(pts.iter().all(|x| !d.contains(x)), "outputs.targets must lie outside geometry.d");
        let u = scattered_field(&m.sol, &m.op, &m.green, &m.inc, &pts)?;
        write_rows(&ctx.path("medium_field.csv"), &field_rows(&pts, &u))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RemainderRow {
    radius: f64,
    wavelengths: f64,
    remainder: f64,
}

/// Far field of whichever problem the scenario describes, with the
/// large-radius remainder fit.
pub fn farfield_cmd(ctx: &Ctx) -> Result<()> {
    let s = &ctx.scenario;
    let dirs = directions(s);
    let mat_e = s.mat_e();
    let wn = wavenumbers(&mat_e, s.materials.omega)?;
    let radii = remainder_radii(s, wn.kp);
    let (ff, (errs, slope)) = if s.density_is_constant() {
        let t = transmission(s, s.solver.order)?;
        let ff = far_field(&t.dens, &t.problem, &dirs)?;
        let fit = far_field_remainder_slope(
            |x| exterior_field(&t.dens, &t.problem, x, None),
            &ff,
            &mat_e,
            wn.kp,
            wn.ks,
            &radii,
        )?;
        (ff, fit)
    } else {
        let m = medium(s, s.solver.grid_h)?;
        let ff = medium_far_field(&m.sol, &m.op, &m.green, &m.inc, &dirs)?;
        let fit = far_field_remainder_slope(
            |x| scattered_field(&m.sol, &m.op, &m.green, &m.inc, x),
            &ff,
            &mat_e,
            wn.kp,
            wn.ks,
            &radii,
        )?;
        (ff, fit)
    };
    let (dp, ds) = ff.orthogonality_defect();
    log::info!("far field: u_p radial defect {dp:.3e}, u_s tangential defect {ds:.3e}; remainder slope {slope:.4}");
    write_rows(&ctx.path("farfield.csv"), &farfield_rows(&ff))?;
    let rows: Vec<RemainderRow> = radii
        .iter()
        .zip(&errs)
        .zip(&s.outputs.remainder_wavelengths)
        .map(|((r, e), w)| RemainderRow {
            radius: *r,
            wavelengths: *w,
            remainder: *e,
        })
        .collect();
    write_rows(&ctx.path("farfield_remainder.csv"), &rows)?;
    write_rows(
        &ctx.path("farfield_summary.csv"),
        &[
            kv("remainder_slope", slope),
            kv("farfield_radial_defect", dp),
            kv("farfield_tangential_defect", ds),
        ],
    )
}

#[derive(Serialize)]
struct SymbolRow {
    lambda_i: f64,
    mu_i: f64,
    lambda_e: f64,
    mu_e: f64,
    c_i: f64,
    c_e: f64,
    p: f64,
    q: f64,
    factor_1: f64,
    factor_2: f64,
    factor_3: f64,
    det: f64,
    normal_type: bool,
}

pub fn symbol_check_cmd(ctx: &Ctx) -> Result<()> {
    let s = &ctx.scenario;
    let mut pairs = vec![(s.mat_i(), s.mat_e())];
    if let Some(cfg) = &s.symbol {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        let [lo, hi] = cfg.mu_range;
        ensure!(lo > 0.0 && hi > lo, "symbol.mu_range must satisfy 0 < lo < hi");
        for _ in 0..cfg.sweep {
            let mu_i = rng.random_range(lo..hi);
            let mu_e = rng.random_range(lo..hi);
            // keep 3λ + 2μ > 0
            let li = rng.random_range(-0.6 * mu_i..cfg.lambda_max);
            let le = rng.random_range(-0.6 * mu_e..cfg.lambda_max);
            pairs.push((
                elastoscatter::material::Material::new(li, mu_i),
                elastoscatter::material::Material::new(le, mu_e),
            ));
        }
    }
    let mut rows = Vec::with_capacity(pairs.len());
    for (mi, me) in &pairs {
        let r = symbol_determinant_with_margin(mi, me, s.solver.margin).context("symbol check")?;
        rows.push(SymbolRow {
            lambda_i: mi.lambda,
            mu_i: mi.mu,
            lambda_e: me.lambda,
            mu_e: me.mu,
            c_i: r.c_i,
            c_e: r.c_e,
            p: r.p,
            q: r.q,
            factor_1: r.factors[0],
            factor_2: r.factors[1],
            factor_3: r.factors[2],
            det: r.det_sigma,
            normal_type: r.normal_type,
        });
    }
    let bad = rows.iter().filter(|r| !r.normal_type).count();
    if bad > 0 {
        log::warn!("{bad} of {} material pairs are not of normal type", rows.len());
    }
    let c = coupling_constants(&pairs[0].0, &pairs[0].1)?;
    log::info!("coupling constants {c:?}");
    write_rows(&ctx.path("symbol.csv"), &rows)
}

#[derive(Serialize)]
struct ItpRow {
    radius: f64,
    m: f64,
    lambda1: f64,
    lambda1_fd: f64,
    rho_inf: f64,
    rho_sup: f64,
    omega_max_squared: f64,
    regime: &'static str,
    omega: f64,
    below_threshold: bool,
}

pub fn itp_threshold_cmd(ctx: &Ctx) -> Result<()> {
    let s = &ctx.scenario;
    let itp = s.itp.clone().context("scenario has no [itp] section")?;
    let radius = match (itp.radius, &s.geometry.d) {
        (Some(r), _) => r,
        (None, Shape::Sphere { radius, .. }) => *radius,
        _ => anyhow::bail!("itp.radius is required unless geometry.d is a sphere"),
    };
    let (lo, hi) = s.materials.density.range();
    let rho_inf = itp.rho_inf.unwrap_or(lo);
    let rho_sup = itp.rho_sup.unwrap_or(hi);
    let r = itp_threshold(radius, &s.mat_i(), rho_inf, rho_sup).context("itp threshold")?;
    let fd = radial_dirichlet_eigenvalue_fd(radius, itp.fd_cells)?;
    let w2 = s.materials.omega * s.materials.omega;
    let row = ItpRow {
        radius,
        m: r.m,
        lambda1: r.lambda1,
        lambda1_fd: fd,
        rho_inf,
        rho_sup,
        omega_max_squared: r.omega_max_squared,
        regime: r.regime.as_str(),
        omega: s.materials.omega,
        below_threshold: w2 < r.omega_max_squared,
    };
    log::info!("ω²max = {:.6e} ({}), ω² = {w2:.6e}", r.omega_max_squared, row.regime);
    write_rows(&ctx.path("itp.csv"), &[row])
}

#[derive(Serialize)]
struct ProbeRow {
    j: usize,
    distance: f64,
    norm2: f64,
    f_norm: f64,
    h_norm: f64,
}

pub fn probe_cmd(ctx: &Ctx) -> Result<()> {
    let s = &ctx.scenario;
    let p = s.probe.clone().context("scenario has no [probe] section")?;
    let surface = s.surface_d()?;
    let mut cfg = ProbeConfig::at_parameter(surface, &v3(&p.s_hat), p.delta, p.j_max, s.mat_e(), s.materials.omega)
        .context("probe")?;
    cfg.d0_factor = p.d0_factor;
    cfg.fit_from = p.fit_from;
    let quad = build_surface_quadrature(&cfg.surface, p.order)?;
    let run = probe_run(&cfg, &quad).context("probe")?;
    log::info!(
        "growth slope {:.4}; f ratio {:.3}, h ratio {:.3}",
        run.growth.slope,
        run.data.f_ratio,
        run.data.h_ratio
    );
    let rows: Vec<ProbeRow> = run
        .records
        .iter()
        .map(|r| ProbeRow {
            j: r.j,
            distance: r.distance,
            norm2: r.incident_norm2,
            f_norm: r.f_norm,
            h_norm: r.h_norm,
        })
        .collect();
    write_rows(&ctx.path("probe.csv"), &rows)?;
    write_rows(
        &ctx.path("probe_summary.csv"),
        &[
            kv("z_star_x", run.z_star.x),
            kv("z_star_y", run.z_star.y),
            kv("z_star_z", run.z_star.z),
            kv("delta", run.delta),
            kv("j_max", run.j_max),
            kv("d0_factor", cfg.d0_factor),
            kv("d0_radius", run.d0_radius),
            kv("fit_from", cfg.fit_from),
            kv("growth_slope", run.growth.slope),
            kv("f_ratio", run.data.f_ratio),
            kv("h_ratio", run.data.h_ratio),
        ],
    )
}

#[derive(Serialize)]
struct TransmissionLevel {
    level: usize,
    unknowns: usize,
    residual_displacement: f64,
    residual_traction: f64,
    residual_rigid: f64,
    observed_order: Option<f64>,
}

#[derive(Serialize)]
struct MediumLevel {
    level: usize,
    cells: usize,
    h: f64,
    manufactured_error: f64,
    field_change: Option<f64>,
    gmres_residual: f64,
    observed_order: Option<f64>,
}

/// Refinement study. Transmission levels are ring counts and the order uses
/// the larger of the displacement and traction residuals. Medium levels are
/// cells per diameter; `field_change` is the relative change of the
/// scattered field at the targets from the previous level and the order
/// comes from consecutive changes.
pub fn convergence_cmd(ctx: &Ctx, levels_override: Option<Vec<usize>>) -> Result<()> {
    let s = &ctx.scenario;
    let cfg = s.convergence.clone().context("scenario has no [convergence] section")?;
    let levels = levels_override.unwrap_or(cfg.levels);
    check_levels(&levels).map_err(|e| crate::UsageError(e.to_string()))?;
    let lv: Vec<f64> = levels.iter().map(|&l| l as f64).collect();
    let path = ctx.path("convergence.csv");
    match cfg.kind {
        ConvergenceKind::Transmission => {
            let mut rows = Vec::new();
            let mut errs = Vec::new();
            for &nt in &levels {
                let t = transmission(s, nt)?;
                let r = residuals(s, &t)?;
                log::info!("level {nt}: {r:?}");
                errs.push(r.displacement.max(r.traction));
                rows.push(TransmissionLevel {
                    level: nt,
                    unknowns: 6 * t.problem.quad_d.len() + 3 * t.problem.quad_b.as_ref().map_or(0, |q| q.len()),
                    residual_displacement: r.displacement,
                    residual_traction: r.traction,
                    residual_rigid: r.rigid,
                    observed_order: None,
                });
            }
            for k in 1..rows.len() {
                rows[k].observed_order = Some((errs[k - 1] / errs[k]).ln() / (lv[k] / lv[k - 1]).ln());
            }
            write_rows(&path, &rows)
        }
        ConvergenceKind::Medium => {
            let d = s.surface_d()?;
            let diam = d.diameter();
            let targets: Vec<Vec3> = if s.outputs.targets.is_empty() {
                vec![Vec3::new(1.5 * diam, 0.0, 0.0), Vec3::new(0.0, -1.5 * diam, 0.7 * diam)]
            } else {
                s.outputs.targets.iter().map(v3).collect()
            };
            let mut rows: Vec<MediumLevel> = Vec::new();
            let mut prev: Option<Vec<CVec3>> = None;
            for &n in &levels {
                let h = diam / n as f64;
                let m = medium(s, h)?;
                let u = scattered_field(&m.sol, &m.op, &m.green, &m.inc, &targets)?;
                let vstar: Vec<CVec3> = m.op.grid.centers.iter().map(manufactured).collect();
                let rhs: Vec<CVec3> = vstar.iter().zip(m.op.apply(&vstar)).map(|(a, b)| a + b).collect();
                let ms = solve_lippmann_schwinger(&m.op, &rhs, s.solver.tol, s.solver.max_iter)?;
                let e_man = rel(&ms.v, &vstar);
                let change = prev.as_ref().map(|p| rel(&u, p));
                log::info!("level {n}: {} cells, manufactured {e_man:.3e}, change {change:?}", m.op.len());
                rows.push(MediumLevel {
                    level: n,
                    cells: m.op.len(),
                    h,
                    manufactured_error: e_man,
                    field_change: change,
                    gmres_residual: m.sol.residual,
                    observed_order: None,
                });
                prev = Some(u);
            }
            for k in 2..rows.len() {
                if let (Some(a), Some(b)) = (rows[k - 1].field_change, rows[k].field_change) {
                    rows[k].observed_order = Some((a / b).ln() / (lv[k] / lv[k - 1]).ln());
                }
            }
            write_rows(&path, &rows)
        }
    }
}

fn manufactured(x: &Vec3) -> CVec3 {
    use elastoscatter::{C64, I};
    CVec3::new(C64::new(1.0 + x.y, 0.3 * x.z), (I * x.x).exp(), C64::new(x.x * x.y, -0.5))
}

fn rel(a: &[CVec3], b: &[CVec3]) -> f64 {
    let e: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_squared()).sum();
    let n: f64 = b.iter().map(|y| y.norm_squared()).sum();
    (e / n).sqrt()
}

pub fn validate_cmd(ctx: &Ctx) -> Result<()> {
    println!("ok: {}", if ctx.scenario.name.is_empty() { "scenario" } else { &ctx.scenario.name });
    Ok(())
}
