//! The penetrable obstacle with an embedded rigid body: boundary data,
//! the coupled integral system for (η, φ, ψ), field reconstruction, far
//! fields and the diagnostics that check them.
//!
//! Fields are represented as
//!   v = W^{κ_i}_{i,ν} η + α_i S_i ψ - α_i W^{κ_i}_i φ   in D \ D̄_b,
//!   u = α_e S_e ψ - α_e W^{κ_e}_e φ                    outside D,
//! where ν is the normal of ∂D_b pointing into D_b. Quadratures always
//! carry outward normals, so every η block built with them is negated.

use crate::geometry::SurfaceQuadrature;
use crate::kernels::{
    m_operator, traction_from_jacobian, IncidentField, LameKernel,
};
use crate::linalg::{relative_residual, CMat, LuSolver};
use crate::material::{coupling_constants, CouplingConstants, Material};
use crate::operators::{
    assemble_kernel, evaluate_potential, extrapolated_limit, far_amplitudes, flatten,
    traction_of_potential, unflatten, Flavor, KernelTerm,
};
use crate::{exec, CMat3, CVec3, Error, Result, Vec3, C64, I};
use faer::Mat;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

/// Sign convention of the assembled system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemVariant {
    /// Identity with the sign that follows from the jump relations:
    /// (I + L) x = (0, 2F, 2H) with L rows 2 and 3 negated relative to print.
    Derived,
    /// Block matrix and right-hand side exactly as printed,
    /// (I + L) x = (0, -2F, -2H). Kept for the residual comparison only.
    AsPrinted,
}

/// Geometry, materials and frequency of a transmission problem.
#[derive(Clone, Debug)]
pub struct TransmissionProblem {
    pub mat_i: Material,
    pub mat_e: Material,
    pub omega: f64,
    pub constants: CouplingConstants,
    pub quad_d: SurfaceQuadrature,
    pub quad_b: Option<SurfaceQuadrature>,
    pub variant: SystemVariant,
    kern_i: Arc<LameKernel>,
    kern_e: Arc<LameKernel>,
}

impl TransmissionProblem {
    pub fn new(
        mat_i: &Material,
        mat_e: &Material,
        omega: f64,
        quad_d: SurfaceQuadrature,
        quad_b: Option<SurfaceQuadrature>,
    ) -> Result<Self> {
        if mat_i.density.constant().is_none() || mat_e.density.constant().is_none() {
            return Err(Error::Configuration(
                "the transmission solver needs constant densities; use the medium solver for variable density".into(),
            ));
        }
        if let Some(qb) = &quad_b {
            if qb.nodes.iter().any(|x| !quad_d.surface.contains(x)) {
                return Err(Error::Geometry("D_b is not contained in D".into()));
            }
        }
        let constants = coupling_constants(mat_i, mat_e)?;
        Ok(TransmissionProblem {
            kern_i: Arc::new(LameKernel::new(mat_i, omega)?),
            kern_e: Arc::new(LameKernel::new(mat_e, omega)?),
            mat_i: mat_i.clone(),
            mat_e: mat_e.clone(),
            omega,
            constants,
            quad_d,
            quad_b,
            variant: SystemVariant::Derived,
        })
    }

    pub fn with_variant(mut self, v: SystemVariant) -> Self {
        self.variant = v;
        self
    }

    pub fn kernel_interior(&self) -> &Arc<LameKernel> {
        &self.kern_i
    }

    pub fn kernel_exterior(&self) -> &Arc<LameKernel> {
        &self.kern_e
    }

    fn n_b(&self) -> usize {
        self.quad_b.as_ref().map_or(0, |q| q.len())
    }

    fn term(&self, c: f64, interior: bool, flavor: Flavor) -> KernelTerm {
        let k = if interior { &self.kern_i } else { &self.kern_e };
        KernelTerm::new(c, k.clone(), flavor)
    }
}

/// Unknown densities.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityTriple {
    pub eta: Vec<CVec3>,
    pub phi: Vec<CVec3>,
    pub psi: Vec<CVec3>,
}

/// Interface data f = u^inc, h = T_e u^inc and the transformed F, H.
#[derive(Clone, Debug)]
pub struct BoundaryData {
    pub f: Vec<CVec3>,
    pub h: Vec<CVec3>,
    pub big_f: Vec<CVec3>,
    pub big_h: Vec<CVec3>,
}

/// Far-field pattern split into radial and tangential parts.
#[derive(Clone, Debug)]
pub struct FarFieldPattern {
    pub directions: Vec<Vec3>,
    pub up_inf: Vec<CVec3>,
    pub us_inf: Vec<CVec3>,
}

impl FarFieldPattern {
    /// Largest |x̂ × u_p| / |u| and |x̂ · u_s| / |u| over the directions.
    pub fn orthogonality_defect(&self) -> (f64, f64) {
        let mut dp: f64 = 0.0;
        let mut ds: f64 = 0.0;
        for ((d, p), s) in self.directions.iter().zip(&self.up_inf).zip(&self.us_inf) {
            let dc = d.map(C64::from);
            let scale = (p.norm_squared() + s.norm_squared()).sqrt().max(1e-300);
            dp = dp.max(dc.cross(p).norm() / scale);
            ds = ds.max(dc.dot(s).norm() / scale);
        }
        (dp, ds)
    }

    /// Unit-sphere grid of directions with `nt` polar angles.
    pub fn direction_grid(nt: usize, nphi: usize) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(nt * nphi);
        for i in 0..nt {
            let th = PI * (i as f64 + 0.5) / nt as f64;
            for k in 0..nphi {
                let ph = 2.0 * PI * k as f64 / nphi as f64;
                out.push(Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()));
            }
        }
        out
    }
}

impl BoundaryData {
    /// Data from traces on ∂D: f with its Jacobian (J[l][m] = ∂_m f_l) and
    /// the traction jump h. `shift` is γ_i - μ_i.
    pub fn from_traces(f: Vec<CVec3>, jac_f: &[CMat3], h: Vec<CVec3>, normals: &[Vec3], shift: f64) -> Result<Self> {
        if jac_f.len() != f.len() || h.len() != f.len() || normals.len() != f.len() {
            return Err(Error::Parameter("trace arrays differ in length".into()));
        }
        let big_h = h
            .iter()
            .zip(jac_f.iter().zip(normals))
            .map(|(h, (j, n))| h + m_operator(j, n) * C64::from(shift))
            .collect();
        Ok(BoundaryData {
            big_f: f.clone(),
            f,
            h,
            big_h,
        })
    }
}

/// f, h, F and H on the quadrature of ∂D.
pub fn boundary_data_from_incident(
    inc: &IncidentField,
    quad_d: &SurfaceQuadrature,
    constants: &CouplingConstants,
    mat_i: &Material,
    mat_e: &Material,
) -> Result<BoundaryData> {
    if let Some(z) = inc.source {
        if quad_d.nearest_node_distance(&z) < 1e-12 * quad_d.surface.diameter() {
            return Err(Error::Singularity("incident source lies on the boundary".into()));
        }
    }
    let n = quad_d.len();
    let mut f = Vec::with_capacity(n);
    let mut jac = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for (x, nx) in quad_d.nodes.iter().zip(&quad_d.normals) {
        let u = inc.value_at(x);
        let j = inc.gradient_at(x);
        if u.iter().chain(j.iter()).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Singularity("incident field is not finite on the boundary".into()));
        }
        h.push(traction_from_jacobian(&j, nx, mat_e.lambda, mat_e.mu, mat_e.mu));
        f.push(u);
        jac.push(j);
    }
    BoundaryData::from_traces(f, &jac, h, &quad_d.normals, constants.gamma_i - mat_i.mu)
}

/// Dense system and its lazily computed factorization.
pub struct TransmissionSystem {
    pub matrix: CMat,
    pub n_b: usize,
    pub n_d: usize,
    pub variant: SystemVariant,
    lu: OnceLock<std::result::Result<LuSolver, f64>>,
}

impl std::fmt::Debug for TransmissionSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransmissionSystem")
            .field("n_b", &self.n_b)
            .field("n_d", &self.n_d)
            .field("variant", &self.variant)
            .finish()
    }
}

impl TransmissionSystem {
    pub fn dim(&self) -> usize {
        3 * self.n_b + 6 * self.n_d
    }

    fn solver(&self) -> Result<&LuSolver> {
        let r = self.lu.get_or_init(|| {
            LuSolver::new(&self.matrix).map_err(|e| match e {
                Error::SingularSystem(r) => r,
                _ => 0.0,
            })
        });
        r.as_ref().map_err(|r| Error::SingularSystem(*r))
    }
}

fn add_block(m: &mut CMat, r0: usize, c0: usize, b: &CMat, scale: f64, identity: bool) {
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            m[(r0 + i, c0 + j)] += b[(i, j)] * scale;
        }
        if identity {
            m[(r0 + i, c0 + i)] += C64::new(1.0, 0.0);
        }
    }
}

/// Assemble I + L ordered (η, φ, ψ); with no D_b the η row and column are
/// omitted.
pub fn assemble_transmission_system(p: &TransmissionProblem) -> Result<TransmissionSystem> {
    let c = &p.constants;
    let (ai, ae) = (c.alpha_i, c.alpha_e);
    let (ki, ke) = (c.kappa_i, c.kappa_e);
    let (gi, ge) = (c.gamma_i, c.gamma_e);
    let qd = &p.quad_d;
    let nb = p.n_b();
    let nd = qd.len();
    let dim = 3 * nb + 6 * nd;
    let mut m = Mat::<C64>::zeros(dim, dim);
    // sign applied to L in rows 2 and 3
    let s = match p.variant {
        SystemVariant::Derived => 1.0,
        SystemVariant::AsPrinted => -1.0,
    };
    let (o_phi, o_psi) = (3 * nb, 3 * nb + 3 * nd);

    let k_combo = [
        p.term(2.0 * ae, false, Flavor::Double { tau: ke }),
        p.term(-2.0 * ai, true, Flavor::Double { tau: ki }),
    ];
    let (b, _) = assemble_kernel(&k_combo, qd, qd, true, None)?;
    add_block(&mut m, o_phi, o_phi, &b, s, true);

    let s_combo = [p.term(2.0 * ai, true, Flavor::Single), p.term(-2.0 * ae, false, Flavor::Single)];
    let (b, _) = assemble_kernel(&s_combo, qd, qd, true, None)?;
    add_block(&mut m, o_phi, o_psi, &b, s, false);

    let v_combo = [
        p.term(2.0 * ae, false, Flavor::TractionTraction { gamma: ge, tau: ke }),
        p.term(-2.0 * ai, true, Flavor::TractionTraction { gamma: gi, tau: ki }),
    ];
    let (b, _) = assemble_kernel(&v_combo, qd, qd, true, None)?;
    add_block(&mut m, o_psi, o_phi, &b, s, false);

    let w_combo = [
        p.term(2.0 * ai, true, Flavor::AdjointDouble { tau: gi }),
        p.term(-2.0 * ae, false, Flavor::AdjointDouble { tau: ge }),
    ];
    let (b, _) = assemble_kernel(&w_combo, qd, qd, true, None)?;
    add_block(&mut m, o_psi, o_psi, &b, s, true);

    if let Some(qb) = &p.quad_b {
        // row 1: -2 × (v on ∂D_b) with the D_i-side limit -η/2 of W_ν
        let (b, _) = assemble_kernel(&[p.term(2.0, true, Flavor::Double { tau: ki })], qb, qb, true, None)?;
        add_block(&mut m, 0, 0, &b, 1.0, true);
        let (b, _) = assemble_kernel(&[p.term(2.0 * ai, true, Flavor::Double { tau: ki })], qb, qd, false, None)?;
        add_block(&mut m, 0, o_phi, &b, 1.0, false);
        let (b, _) = assemble_kernel(&[p.term(-2.0 * ai, true, Flavor::Single)], qb, qd, false, None)?;
        add_block(&mut m, 0, o_psi, &b, 1.0, false);
        // rows 2 and 3, η column: W_ν = -W_n
        let (b, _) = assemble_kernel(&[p.term(-2.0, true, Flavor::Double { tau: ki })], qd, qb, false, None)?;
        add_block(&mut m, o_phi, 0, &b, s, false);
        let (b, _) = assemble_kernel(
            &[p.term(-2.0, true, Flavor::TractionTraction { gamma: gi, tau: ki })],
            qd,
            qb,
            false,
            None,
        )?;
        add_block(&mut m, o_psi, 0, &b, s, false);
    }
    Ok(TransmissionSystem {
        matrix: m,
        n_b: nb,
        n_d: nd,
        variant: p.variant,
        lu: OnceLock::new(),
    })
}

/// Right-hand side matching the system variant.
pub fn right_hand_side(system: &TransmissionSystem, data: &BoundaryData) -> Vec<C64> {
    let s = match system.variant {
        SystemVariant::Derived => 2.0,
        SystemVariant::AsPrinted => -2.0,
    };
    let mut rhs = vec![C64::new(0.0, 0.0); 3 * system.n_b];
    rhs.extend(flatten(&data.big_f).into_iter().map(|v| v * s));
    rhs.extend(flatten(&data.big_h).into_iter().map(|v| v * s));
    rhs
}

/// Direct solve; fails when the factorization is numerically singular or
/// the achieved residual exceeds 1e-10.
pub fn solve_transmission(system: &TransmissionSystem, data: &BoundaryData) -> Result<DensityTriple> {
    if data.big_f.len() != system.n_d || data.big_h.len() != system.n_d {
        return Err(Error::Parameter("boundary data size does not match the system".into()));
    }
    let rhs = right_hand_side(system, data);
    let lu = system.solver()?;
    let x = lu.solve(&rhs);
    let res = relative_residual(&system.matrix, &x, &rhs);
    if res > 1e-10 {
        return Err(Error::Accuracy(format!(
            "direct solve residual {res:.3e} exceeds 1e-10; the system may be near a resonance"
        )));
    }
    let v = unflatten(&x);
    let nb = system.n_b;
    let nd = system.n_d;
    Ok(DensityTriple {
        eta: v[..nb].to_vec(),
        phi: v[nb..nb + nd].to_vec(),
        psi: v[nb + nd..].to_vec(),
    })
}

fn sum_fields(parts: Vec<Vec<CVec3>>, n: usize) -> Vec<CVec3> {
    let mut out = vec![CVec3::zeros(); n];
    for p in parts {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

/// Interior field v (or T^γ_i v with `gamma`) at points of D \ D̄_b.
pub fn interior_field(
    d: &DensityTriple,
    p: &TransmissionProblem,
    targets: &[Vec3],
    normals: Option<(&[Vec3], f64)>,
) -> Result<Vec<CVec3>> {
    let ai = p.constants.alpha_i;
    let ki = p.constants.kappa_i;
    let eval = |dens: &[CVec3], terms: &[KernelTerm], q: &SurfaceQuadrature| match normals {
        Some((n, g)) => traction_of_potential(dens, terms, q, targets, n, g),
        None => evaluate_potential(dens, terms, q, targets),
    };
    let mut parts = vec![
        eval(&d.psi, &[p.term(ai, true, Flavor::Single)], &p.quad_d)?,
        eval(&d.phi, &[p.term(-ai, true, Flavor::Double { tau: ki })], &p.quad_d)?,
    ];
    if let Some(qb) = &p.quad_b {
        parts.push(eval(&d.eta, &[p.term(-1.0, true, Flavor::Double { tau: ki })], qb)?);
    }
    Ok(sum_fields(parts, targets.len()))
}

/// Scattered field u (or T^γ_e u with `gamma`) outside D.
pub fn exterior_field(
    d: &DensityTriple,
    p: &TransmissionProblem,
    targets: &[Vec3],
    normals: Option<(&[Vec3], f64)>,
) -> Result<Vec<CVec3>> {
    let ae = p.constants.alpha_e;
    let ke = p.constants.kappa_e;
    let eval = |dens: &[CVec3], terms: &[KernelTerm]| match normals {
        Some((n, g)) => traction_of_potential(dens, terms, &p.quad_d, targets, n, g),
        None => evaluate_potential(dens, terms, &p.quad_d, targets),
    };
    let parts = vec![
        eval(&d.psi, &[p.term(ae, false, Flavor::Single)])?,
        eval(&d.phi, &[p.term(-ae, false, Flavor::Double { tau: ke })])?,
    ];
    Ok(sum_fields(parts, targets.len()))
}

/// (v at interior targets, u at exterior targets). Targets on the wrong
/// side are rejected.
pub fn reconstruct_fields(
    d: &DensityTriple,
    p: &TransmissionProblem,
    interior: &[Vec3],
    exterior: &[Vec3],
) -> Result<(Vec<CVec3>, Vec<CVec3>)> {
    for x in interior {
        let inside_b = p.quad_b.as_ref().is_some_and(|q| q.surface.contains(x));
        if !p.quad_d.surface.contains(x) || inside_b {
            return Err(Error::Parameter(format!("interior target {x:?} is not in D \\ D_b")));
        }
    }
    if let Some(x) = exterior.iter().find(|x| p.quad_d.surface.contains(x)) {
        return Err(Error::Parameter(format!("exterior target {x:?} lies inside D")));
    }
    Ok((interior_field(d, p, interior, None)?, exterior_field(d, p, exterior, None)?))
}

/// u_p^∞ and u_s^∞ with u ~ e^{i kp r}/(4π(λ_e+μ_e) r) u_p^∞ + e^{i ks r}/(4π μ_e r) u_s^∞.
pub fn far_field(d: &DensityTriple, p: &TransmissionProblem, directions: &[Vec3]) -> Result<FarFieldPattern> {
    let ae = p.constants.alpha_e;
    let terms = [
        p.term(ae, false, Flavor::Single),
        p.term(-ae, false, Flavor::Double { tau: p.constants.kappa_e }),
    ];
    let res = exec::map(directions.len(), |t| -> Result<(CVec3, CVec3)> {
        let xh = directions[t].normalize();
        let (p1, s1) = far_amplitudes(&d.psi, &terms[..1], &p.quad_d, &xh)?;
        let (p2, s2) = far_amplitudes(&d.phi, &terms[1..], &p.quad_d, &xh)?;
        Ok(((p1 + p2) * C64::from(p.mat_e.lambda + p.mat_e.mu), (s1 + s2) * C64::from(p.mat_e.mu)))
    });
    let (up_inf, us_inf) = res.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(FarFieldPattern {
        directions: directions.to_vec(),
        up_inf,
        us_inf,
    })
}

/// The far-field asymptotic form at R x̂.
pub fn far_field_asymptote(ff: &FarFieldPattern, idx: usize, r: f64, mat_e: &Material, kp: f64, ks: f64) -> CVec3 {
    let ep = (I * kp * r).exp() / (4.0 * PI * (mat_e.lambda + mat_e.mu) * r);
    let es = (I * ks * r).exp() / (4.0 * PI * mat_e.mu * r);
    ff.up_inf[idx] * ep + ff.us_inf[idx] * es
}

/// ∮_{|x - c| = R} (ū · T_e u - u · T_e ū) ds for the scattered field.
pub fn flux(d: &DensityTriple, p: &TransmissionProblem, center: &Vec3, radius: f64, order: usize) -> Result<C64> {
    let grid = crate::geometry::SphereGrid::new(order);
    let targets: Vec<Vec3> = grid.points.iter().map(|s| center + s * radius).collect();
    let u = exterior_field(d, p, &targets, None)?;
    let t = exterior_field(d, p, &targets, Some((&grid.points, p.mat_e.mu)))?;
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..grid.len() {
        let a = u[j].map(|c| c.conj()).dot(&t[j]);
        let b = u[j].dot(&t[j].map(|c| c.conj()));
        acc += (a - b) * grid.weights[j] * radius * radius;
    }
    Ok(acc)
}

/// Relative L² residuals of the interface and rigid-body conditions.
#[derive(Clone, Copy, Debug)]
pub struct TransmissionResiduals {
    /// ‖v - u - f‖ / ‖f‖ on ∂D
    pub displacement: f64,
    /// ‖T_i v - T_e u - h‖ / ‖h‖ on ∂D
    pub traction: f64,
    /// RMS of v on ∂D_b over RMS of f on ∂D (0 without D_b)
    pub rigid: f64,
}

/// Evaluate the boundary conditions from one-sided limits at every
/// `stride`-th node, extrapolated from offsets k·δ0.
pub fn transmission_residuals(
    d: &DensityTriple,
    p: &TransmissionProblem,
    data: &BoundaryData,
    stride: usize,
    delta0: f64,
) -> Result<TransmissionResiduals> {
    let qd = &p.quad_d;
    let idx: Vec<usize> = (0..qd.len()).step_by(stride.max(1)).collect();
    let v = extrapolated_limit(|t, _| interior_field(d, p, t, None), qd, &idx, -1.0, delta0)?;
    let u = extrapolated_limit(|t, _| exterior_field(d, p, t, None), qd, &idx, 1.0, delta0)?;
    let tv = extrapolated_limit(|t, n| interior_field(d, p, t, Some((n, p.mat_i.mu))), qd, &idx, -1.0, delta0)?;
    let tu = extrapolated_limit(|t, n| exterior_field(d, p, t, Some((n, p.mat_e.mu))), qd, &idx, 1.0, delta0)?;
    let (mut e1, mut n1, mut e2, mut n2) = (0.0, 0.0, 0.0, 0.0);
    for (k, &j) in idx.iter().enumerate() {
        let w = qd.weights[j];
        e1 += w * (v[k] - u[k] - data.f[j]).norm_squared();
        n1 += w * data.f[j].norm_squared();
        e2 += w * (tv[k] - tu[k] - data.h[j]).norm_squared();
        n2 += w * data.h[j].norm_squared();
    }
    let mut rigid = 0.0;
    if let Some(qb) = &p.quad_b {
        let idb: Vec<usize> = (0..qb.len()).step_by(stride.max(1)).collect();
        let vb = extrapolated_limit(|t, _| interior_field(d, p, t, None), qb, &idb, 1.0, delta0)?;
        let (mut eb, mut ab) = (0.0, 0.0);
        for (k, &j) in idb.iter().enumerate() {
            eb += qb.weights[j] * vb[k].norm_squared();
            ab += qb.weights[j];
        }
        let af: f64 = idx.iter().map(|&j| qd.weights[j]).sum();
        rigid = (eb / ab).sqrt() / (n1 / af).sqrt();
    }
    Ok(TransmissionResiduals {
        displacement: (e1 / n1).sqrt(),
        traction: (e2 / n2).sqrt(),
        rigid,
    })
}

/// Slope of log(R e(R)) against log R, where e(R) is the RMS over the
/// pattern directions of |u(R x̂) - asymptote|, averaged over eight radii in
/// [R, 1.5 R) to smooth the beating of the P and S phases. `u_at` returns the
/// scattered field at the given points. Also returns e at each radius.
pub fn far_field_remainder_slope<F>(
    u_at: F,
    ff: &FarFieldPattern,
    mat_e: &Material,
    kp: f64,
    ks: f64,
    radii: &[f64],
) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[Vec3]) -> Result<Vec<CVec3>>,
{
    let mut errs = Vec::with_capacity(radii.len());
    for &r0 in radii {
        let mut acc = 0.0;
        for j in 0..8 {
            let r = r0 * (1.0 + j as f64 / 16.0);
            let pts: Vec<Vec3> = ff.directions.iter().map(|d| d * r).collect();
            let u = u_at(&pts)?;
            let ms: f64 = (0..pts.len())
                .map(|i| (u[i] - far_field_asymptote(ff, i, r, mat_e, kp, ks)).norm_squared())
                .sum::<f64>()
                / pts.len() as f64;
            acc += ms.sqrt() * r / r0;
        }
        errs.push(acc / 8.0);
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = radii.iter().zip(&errs).map(|(r, e)| (r * e).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok((errs, sxy / sxx))
}
