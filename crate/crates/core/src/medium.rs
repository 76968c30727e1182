//! Variable-density scattering through the Lippmann-Schwinger equation
//! (I + T) v = V^inc on a voxel grid of D \ D̄_b, with the Green function G
//! of the exterior Dirichlet problem for the rigid body D_b.
//!
//! G = Γ_e + W where W(·, y) is the combined-field layer
//! (W_μ - iη S) σ on ∂D_b with (½ + K_μ - iη S) σ = -Γ_e(·, y).

use crate::geometry::{SurfaceQuadrature, VolumeGrid};
use crate::kernels::{IncidentField, LameKernel};
use crate::linalg::{gmres, matvec, norm, CMat, LuSolver};
use crate::material::Material;
use crate::operators::{
    assemble_kernel, evaluate_potential, far_amplitudes, flatten, potential_matrix, unflatten, Flavor,
    KernelTerm,
};
use crate::transmission::FarFieldPattern;
use crate::{exec, CMat3, CVec3, Error, Result, Vec3, C64, I};
use std::f64::consts::PI;
use std::sync::Arc;

/// Green function of the exterior Dirichlet problem for D_b.
pub struct RigidGreenFunction {
    pub mat: Material,
    pub omega: f64,
    kernel: Arc<LameKernel>,
    boundary: Option<RigidBoundary>,
}

struct RigidBoundary {
    quad: SurfaceQuadrature,
    terms: Vec<KernelTerm>,
    lu: LuSolver,
}

impl std::fmt::Debug for RigidGreenFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RigidGreenFunction")
            .field("omega", &self.omega)
            .field("boundary_nodes", &self.boundary.as_ref().map(|b| b.quad.len()))
            .finish()
    }
}

/// Build G for the background material (unit density) at `omega`. With no
/// D_b the result is Γ_e itself.
pub fn rigid_green(d_b: Option<SurfaceQuadrature>, mat: &Material, omega: f64) -> Result<RigidGreenFunction> {
    let bg = Material::new(mat.lambda, mat.mu);
    let kernel = Arc::new(LameKernel::new(&bg, omega)?);
    let boundary = match d_b {
        None => None,
        Some(quad) => {
            let eta = mat.mu;
            let terms = vec![
                KernelTerm::new(1.0, kernel.clone(), Flavor::Double { tau: mat.mu }),
                KernelTerm::new(-I * eta, kernel.clone(), Flavor::Single),
            ];
            let (mut a, _) = assemble_kernel(&terms, &quad, &quad, true, None)?;
            for i in 0..a.nrows() {
                a[(i, i)] += C64::new(0.5, 0.0);
            }
            let lu = LuSolver::new(&a)?;
            Some(RigidBoundary { quad, terms, lu })
        }
    };
    Ok(RigidGreenFunction {
        mat: bg,
        omega,
        kernel,
        boundary,
    })
}

impl RigidGreenFunction {
    pub fn kernel(&self) -> &Arc<LameKernel> {
        &self.kernel
    }

    pub fn boundary_quadrature(&self) -> Option<&SurfaceQuadrature> {
        self.boundary.as_ref().map(|b| &b.quad)
    }

    fn check_outside(&self, x: &Vec3) -> Result<()> {
        if let Some(b) = &self.boundary {
            if b.quad.surface.contains(x) {
                return Err(Error::Parameter(format!("point {x:?} lies inside D_b")));
            }
        }
        Ok(())
    }

    /// Layer density for Dirichlet data sampled at the ∂D_b nodes.
    pub fn boundary_density(&self, f: &[CVec3]) -> Result<Vec<CVec3>> {
        let b = self.boundary.as_ref().ok_or_else(|| Error::Configuration("no rigid body".into()))?;
        if f.len() != b.quad.len() {
            return Err(Error::Parameter("Dirichlet data size does not match ∂D_b".into()));
        }
        Ok(unflatten(&b.lu.solve(&flatten(f))))
    }

    /// Combined-field layer of `sigma` at targets outside D̄_b.
    pub fn layer_field(&self, sigma: &[CVec3], targets: &[Vec3]) -> Result<Vec<CVec3>> {
        match &self.boundary {
            None => Ok(vec![CVec3::zeros(); targets.len()]),
            Some(b) => {
                for x in targets {
                    self.check_outside(x)?;
                }
                evaluate_potential(sigma, &b.terms, &b.quad, targets)
            }
        }
    }

    /// Radiating solution with Dirichlet data `f` on ∂D_b, at `targets`.
    pub fn dirichlet_solution(&self, f: &[CVec3], targets: &[Vec3]) -> Result<Vec<CVec3>> {
        if self.boundary.is_none() {
            return Ok(vec![CVec3::zeros(); targets.len()]);
        }
        let s = self.boundary_density(f)?;
        self.layer_field(&s, targets)
    }

    /// Rows of the layer operator at `targets` (3 rows per target).
    fn layer_matrix(&self, targets: &[Vec3]) -> Result<Option<CMat>> {
        match &self.boundary {
            None => Ok(None),
            Some(b) => Ok(Some(potential_matrix(&b.terms, &b.quad, targets)?)),
        }
    }

    /// G(x, y) for x ≠ y outside D̄_b.
    pub fn eval(&self, x: &Vec3, y: &Vec3) -> Result<CMat3> {
        self.check_outside(x)?;
        self.check_outside(y)?;
        if (x - y).norm() == 0.0 {
            return Err(Error::Singularity("G evaluated at coincident points".into()));
        }
        let mut g = self.kernel.single(&(x - y), crate::kernels::Part::Full);
        if let Some(b) = &self.boundary {
            for c in 0..3 {
                let f: Vec<CVec3> = b.quad.nodes.iter().map(|xk| -(self.kernel.single(&(xk - y), crate::kernels::Part::Full).column(c))).collect();
                let w = self.dirichlet_solution(&f, &[*x])?;
                g.set_column(c, &(g.column(c) + w[0]));
            }
        }
        Ok(g)
    }

    /// P and S far-field amplitudes of the layer with density `sigma`.
    pub fn layer_far_amplitudes(&self, sigma: &[CVec3], xh: &Vec3) -> Result<(CVec3, CVec3)> {
        match &self.boundary {
            None => Ok((CVec3::zeros(), CVec3::zeros())),
            Some(b) => far_amplitudes(sigma, &b.terms, &b.quad, xh),
        }
    }
}

/// Symmetric 3x3 block stored as xx, yy, zz, xy, xz, yz.
type Sym = [C64; 6];

fn sym_of(m: &CMat3) -> Sym {
    [m[(0, 0)], m[(1, 1)], m[(2, 2)], m[(0, 1)], m[(0, 2)], m[(1, 2)]]
}

#[inline]
fn sym_mul(s: &Sym, v: &CVec3) -> CVec3 {
    CVec3::new(
        s[0] * v.x + s[3] * v.y + s[4] * v.z,
        s[3] * v.x + s[1] * v.y + s[5] * v.z,
        s[4] * v.x + s[5] * v.y + s[2] * v.z,
    )
}

struct RigidCoupling {
    /// layer rows at the cell centers
    e: CMat,
    /// A^{-1} [Γ(x_k - y_c)], 3 N_b x 3 N
    b: CMat,
}

/// The volume operator T φ = ω² ∫ (1 - ρ) G φ on a voxel grid.
pub struct VolumeOperator {
    pub grid: VolumeGrid,
    pub omega: f64,
    /// ω² |cell| (1 - ρ) per cell
    mass: Vec<f64>,
    active: Vec<usize>,
    table: Vec<Sym>,
    tdims: [usize; 3],
    rigid: Option<RigidCoupling>,
}

impl std::fmt::Debug for VolumeOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("VolumeOperator")
            .field("cells", &self.grid.len())
            .field("active", &self.active.len())
            .field("rigid", &self.rigid.is_some())
            .finish()
    }
}

/// ∫ over a ball of the cell's volume of the Kelvin matrix plus Γ_1(0)
/// times the volume, divided by the volume.
fn self_cell(kernel: &LameKernel, vol: f64) -> Sym {
    let (a, b) = kernel.kelvin_coefficients();
    let r = (3.0 * vol / (4.0 * PI)).cbrt();
    let d = C64::from(2.0 * PI * r * r * (a + b / 3.0) / vol) + kernel.remainder_at_zero();
    let z = C64::new(0.0, 0.0);
    [d, d, d, z, z, z]
}

/// Matrix-free T on `grid`, using G from `green` and the grid's density.
pub fn assemble_volume_operator(green: &RigidGreenFunction, grid: &VolumeGrid) -> Result<VolumeOperator> {
    let w2 = green.omega * green.omega;
    let mass: Vec<f64> = grid.volumes.iter().zip(&grid.density).map(|(v, r)| w2 * v * (1.0 - r)).collect();
    let active: Vec<usize> = (0..grid.len()).filter(|&c| mass[c] != 0.0).collect();
    let tdims = grid.dims.map(|n| 2 * n - 1);
    let mut table = Vec::new();
    let mut rigid = None;
    if !active.is_empty() {
        let h = grid.h;
        let k = &green.kernel;
        let cell = h * h * h;
        let self_term = self_cell(k, cell);
        let nyz = tdims[1] * tdims[2];
        table = exec::map(tdims[0] * nyz, |t| {
            let off = [
                (t / nyz) as f64 - (grid.dims[0] - 1) as f64,
                ((t / tdims[2]) % tdims[1]) as f64 - (grid.dims[1] - 1) as f64,
                (t % tdims[2]) as f64 - (grid.dims[2] - 1) as f64,
            ];
            if off == [0.0; 3] {
                self_term
            } else {
                sym_of(&k.single(&(Vec3::new(off[0], off[1], off[2]) * h), crate::kernels::Part::Full))
            }
        });
        if let Some(bd) = &green.boundary {
            let e = green.layer_matrix(&grid.centers)?.expect("rigid body present");
            let nb = bd.quad.len();
            let mut f = CMat::zeros(3 * nb, 3 * grid.len());
            for kk in 0..nb {
                for c in 0..grid.len() {
                    let g = k.single(&(bd.quad.nodes[kk] - grid.centers[c]), crate::kernels::Part::Full);
                    for a in 0..3 {
                        for b in 0..3 {
                            f[(3 * kk + a, 3 * c + b)] = g[(a, b)];
                        }
                    }
                }
            }
            rigid = Some(RigidCoupling { e, b: bd.lu.solve_mat(&f) });
        }
    }
    Ok(VolumeOperator {
        grid: grid.clone(),
        omega: green.omega,
        mass,
        active,
        table,
        tdims,
        rigid,
    })
}

impl VolumeOperator {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// True when the contrast vanishes everywhere.
    pub fn is_zero(&self) -> bool {
        self.active.is_empty()
    }

    fn sources(&self, phi: &[CVec3]) -> Vec<CVec3> {
        phi.iter().zip(&self.mass).map(|(p, m)| p * C64::from(*m)).collect()
    }

    /// Layer density A^{-1} Σ_c Γ(x_k - y_c) ψ_c of the rigid correction.
    fn rigid_density(&self, psi: &[CVec3]) -> Option<Vec<CVec3>> {
        self.rigid.as_ref().map(|r| unflatten(&matvec(&r.b, &flatten(psi))))
    }

    pub fn apply(&self, phi: &[CVec3]) -> Vec<CVec3> {
        let n = self.len();
        if self.is_zero() {
            return vec![CVec3::zeros(); n];
        }
        let psi = self.sources(phi);
        let idx = &self.grid.index;
        let d = self.grid.dims;
        let nyz = self.tdims[1] * self.tdims[2];
        let mut out = exec::map(n, |i| {
            let [a, b, c] = idx[i];
            let base = (a + d[0] - 1) * nyz + (b + d[1] - 1) * self.tdims[2] + (c + d[2] - 1);
            let mut acc = CVec3::zeros();
            for &j in &self.active {
                let [p, q, r] = idx[j];
                let t = base - p * nyz - q * self.tdims[2] - r;
                acc += sym_mul(&self.table[t], &psi[j]);
            }
            acc
        });
        if let (Some(rc), Some(s)) = (&self.rigid, self.rigid_density(&psi)) {
            let w = unflatten(&matvec(&rc.e, &flatten(&s)));
            for (o, wi) in out.iter_mut().zip(w) {
                *o -= wi;
            }
        }
        out
    }
}

/// V^inc at the cells of `op` with the rigid-body correction density.
#[derive(Clone, Debug)]
pub struct ObstacleIncident {
    pub values: Vec<CVec3>,
    /// layer density of V (V = -u^inc on ∂D_b); None without D_b
    pub sigma: Option<Vec<CVec3>>,
}

/// V^inc = u^inc + V where V is radiating with V = -u^inc on ∂D_b.
pub fn incident_with_obstacle(green: &RigidGreenFunction, op: &VolumeOperator, inc: &IncidentField) -> Result<ObstacleIncident> {
    let mut values: Vec<CVec3> = op.grid.centers.iter().map(|x| inc.value_at(x)).collect();
    if values.iter().any(|v| v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite())) {
        return Err(Error::Singularity("incident field is singular on the grid".into()));
    }
    let Some(b) = &green.boundary else {
        return Ok(ObstacleIncident { values, sigma: None });
    };
    let f: Vec<CVec3> = b.quad.nodes.iter().map(|x| -inc.value_at(x)).collect();
    let sigma = green.boundary_density(&f)?;
    let v = match &op.rigid {
        Some(rc) => unflatten(&matvec(&rc.e, &flatten(&sigma))),
        None => green.layer_field(&sigma, &op.grid.centers)?,
    };
    for (a, b) in values.iter_mut().zip(v) {
        *a += b;
    }
    Ok(ObstacleIncident {
        values,
        sigma: Some(sigma),
    })
}

/// Solution of (I + T) v = V^inc.
#[derive(Clone, Debug)]
pub struct MediumSolution {
    pub v: Vec<CVec3>,
    pub iterations: usize,
    pub residual: f64,
    pub history: Vec<f64>,
}

/// GMRES solve of (I + T) v = V^inc to relative residual `tol`.
pub fn solve_lippmann_schwinger(op: &VolumeOperator, vinc: &[CVec3], tol: f64, maxiter: usize) -> Result<MediumSolution> {
    if vinc.len() != op.len() {
        return Err(Error::Parameter("incident field size does not match the grid".into()));
    }
    if op.is_zero() {
        return Ok(MediumSolution {
            v: vinc.to_vec(),
            iterations: 0,
            residual: 0.0,
            history: vec![],
        });
    }
    let b = flatten(vinc);
    let apply = |x: &[C64]| {
        let t = flatten(&op.apply(&unflatten(x)));
        x.iter().zip(t).map(|(a, b)| a + b).collect()
    };
    let s = gmres(apply, &b, tol, maxiter, 60)?;
    Ok(MediumSolution {
        v: unflatten(&s.x),
        iterations: s.iterations,
        residual: s.residual,
        history: s.history,
    })
}

/// Σ_k (-T)^k V^inc, stopped when a term drops below `tol` relative to
/// V^inc. Diverging series are reported as non-convergence.
pub fn neumann_series(op: &VolumeOperator, vinc: &[CVec3], tol: f64, max_terms: usize) -> Result<Vec<CVec3>> {
    let nb = norm(&flatten(vinc));
    let mut sum = vinc.to_vec();
    let mut term = vinc.to_vec();
    let mut history = vec![];
    for k in 1..=max_terms {
        term = op.apply(&term).into_iter().map(|t| -t).collect();
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        let r = norm(&flatten(&term)) / nb.max(1e-300);
        history.push(r);
        if r <= tol {
            return Ok(sum);
        }
        if k > 3 && r > history[k - 2] * 1.5 {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: history.len(),
        residual: *history.last().unwrap_or(&f64::INFINITY),
        history,
    })
}

/// v - u^inc at targets outside D: V - Σ_c G(x, y_c) ψ_c.
pub fn scattered_field(
    sol: &MediumSolution,
    op: &VolumeOperator,
    green: &RigidGreenFunction,
    inc: &ObstacleIncident,
    targets: &[Vec3],
) -> Result<Vec<CVec3>> {
    let psi = op.sources(&sol.v);
    let k = &green.kernel;
    let mut out = exec::map(targets.len(), |t| {
        let mut acc = CVec3::zeros();
        for &j in &op.active {
            acc -= k.single(&(targets[t] - op.grid.centers[j]), crate::kernels::Part::Full) * psi[j];
        }
        acc
    });
    if let Some(s) = layer_density(op, inc, &psi) {
        for (o, w) in out.iter_mut().zip(green.layer_field(&s, targets)?) {
            *o += w;
        }
    }
    Ok(out)
}

fn layer_density(op: &VolumeOperator, inc: &ObstacleIncident, psi: &[CVec3]) -> Option<Vec<CVec3>> {
    let s = inc.sigma.clone()?;
    let r = op.rigid_density(psi).unwrap_or_else(|| vec![CVec3::zeros(); s.len()]);
    Some(s.iter().zip(r).map(|(a, b)| a - b).collect())
}

/// Far-field pattern of the scattered field, normalized like the
/// transmission far field.
pub fn medium_far_field(
    sol: &MediumSolution,
    op: &VolumeOperator,
    green: &RigidGreenFunction,
    inc: &ObstacleIncident,
    directions: &[Vec3],
) -> Result<FarFieldPattern> {
    let psi = op.sources(&sol.v);
    let sigma = layer_density(op, inc, &psi);
    let k = &green.kernel;
    let res = exec::map(directions.len(), |t| -> Result<(CVec3, CVec3)> {
        let xh = directions[t].normalize();
        let (mut p, mut s) = match &sigma {
            Some(sg) => green.layer_far_amplitudes(sg, &xh)?,
            None => (CVec3::zeros(), CVec3::zeros()),
        };
        for &j in &op.active {
            let [fp, fs] = k.far_derivs(&xh, &op.grid.centers[j]);
            p -= fp.g * psi[j];
            s -= fs.g * psi[j];
        }
        Ok((p * C64::from(k.lambda + k.mu), s * C64::from(k.mu)))
    });
    let (up_inf, us_inf) = res.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
    Ok(FarFieldPattern {
        directions: directions.to_vec(),
        up_inf,
        us_inf,
    })
}

/// ‖v‖_{L²(D∖D_b)} / (‖u^inc‖_{L²(D∖D_b)} + ‖u^inc‖_{L∞(∂D_b)}).
pub fn estimate_ratio(sol: &MediumSolution, grid: &VolumeGrid, inc: &IncidentField, green: &RigidGreenFunction) -> f64 {
    let l2 = |f: &dyn Fn(usize) -> CVec3| -> f64 {
        (0..grid.len()).map(|c| grid.volumes[c] * f(c).norm_squared()).sum::<f64>().sqrt()
    };
    let v = l2(&|c| sol.v[c]);
    let u = l2(&|c| inc.value_at(&grid.centers[c]));
    let linf = green
        .boundary_quadrature()
        .map(|q| q.nodes.iter().map(|x| inc.value_at(x).norm()).fold(0.0, f64::max))
        .unwrap_or(0.0);
    v / (u + linf)
}

/// Finite-difference residual μΔv + (λ+μ)∇∇·v + ρω²v at cells whose full
/// 3x3x3 neighbourhood lies in the grid, relative to ‖ρω²v‖ there.
pub fn navier_residual(sol: &MediumSolution, grid: &VolumeGrid, mat: &Material, omega: f64) -> f64 {
    let d = grid.dims;
    let lin = |i: [usize; 3]| (i[0] * d[1] + i[1]) * d[2] + i[2];
    let mut map = vec![usize::MAX; d[0] * d[1] * d[2]];
    for (c, i) in grid.index.iter().enumerate() {
        map[lin(*i)] = c;
    }
    let h = grid.h;
    let (mut num, mut den) = (0.0, 0.0);
    for (c, i) in grid.index.iter().enumerate() {
        if i.iter().zip(&d).any(|(a, n)| *a == 0 || *a + 1 >= *n) {
            continue;
        }
        let at = |o: [i64; 3]| -> Option<CVec3> {
            let j = [0, 1, 2].map(|a| (i[a] as i64 + o[a]) as usize);
            let m = map[lin(j)];
            (m != usize::MAX).then(|| sol.v[m])
        };
        let mut ok = true;
        let mut hess = [[CVec3::zeros(); 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                let mut e = |sa: i64, sb: i64| {
                    let mut o = [0i64; 3];
                    o[a] += sa;
                    o[b] += sb;
                    at(o).unwrap_or_else(|| {
                        ok = false;
                        CVec3::zeros()
                    })
                };
                hess[a][b] = if a == b {
                    (e(1, 0) - e(0, 0) * C64::from(2.0) + e(-1, 0)) / C64::from(h * h)
                } else {
                    (e(1, 1) - e(1, -1) - e(-1, 1) + e(-1, -1)) / C64::from(4.0 * h * h)
                };
            }
        }
        if !ok {
            continue;
        }
        let v = sol.v[c];
        let lap = hess[0][0] + hess[1][1] + hess[2][2];
        let mut gd = CVec3::zeros();
        for l in 0..3 {
            gd[l] = hess[l][0][0] + hess[l][1][1] + hess[l][2][2];
        }
        let rw = v * C64::from(grid.density[c] * omega * omega);
        let r = lap * C64::from(mat.mu) + gd * C64::from(mat.lambda + mat.mu) + rw;
        num += r.norm_squared();
        den += rw.norm_squared();
    }
    (num / den.max(1e-300)).sqrt()
}
