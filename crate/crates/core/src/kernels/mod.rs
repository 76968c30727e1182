//! Closed-form Green kernels of the time-harmonic Navier operator, the
//! generalized traction, and incident fields.

mod incident;
mod radial;

pub use incident::{
    grad_scalar_point_source, plane_wave, point_source_p, IncidentField, IncidentKind,
    Polarization,
};

use crate::material::{validate_material, Material};
use crate::{CMat3, CVec3, Error, Result, Vec3, C64, I};
use radial::{g_series, helmholtz_series, power_derivs, ExpPoly, Series};
use std::f64::consts::PI;

/// Below this value of k_s R the radial functions are summed as power series.
const SERIES_SWITCH: f64 = 0.5;

/// Which part of the fundamental solution to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Part {
    /// Full kernel Γ.
    Full,
    /// Kelvin matrix Γ_0 (static).
    Static,
    /// Smooth remainder Γ_1 = Γ - Γ_0.
    Remainder,
}

/// A 3x3 kernel together with the points it was evaluated at.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub entries: CMat3,
    pub source: Vec3,
    pub target: Vec3,
}

/// Γ(z) and its derivatives with respect to z = x - y.
/// `d1[p]` is ∂_p Γ and `d2[p][q]` is ∂_p ∂_q Γ.
#[derive(Clone, Debug)]
pub struct GammaDerivs {
    pub g: CMat3,
    pub d1: [CMat3; 3],
    pub d2: [[CMat3; 3]; 3],
}

/// Fundamental solution of μΔu + (λ+μ)∇∇·u + ω²u = 0 for one material.
#[derive(Clone, Debug)]
pub struct LameKernel {
    pub lambda: f64,
    pub mu: f64,
    pub omega: f64,
    pub kp: f64,
    pub ks: f64,
    phi_s: ExpPoly,
    phi_p: ExpPoly,
    phi_s_series: Series,
    phi_s_rem_series: Series,
    g_full_series: Series,
    g_rem_series: Series,
    b_static: f64,
}

struct Radials {
    /// D1^n Φ_s / μ, n = 0..=2
    phi: [C64; 3],
    /// D1^n g, n = 1..=4 stored at index n (index 0 unused)
    g: [C64; 5],
}

impl LameKernel {
    /// Kernel for `mat` at frequency `omega`; a constant density is folded
    /// into the frequency.
    pub fn new(mat: &Material, omega: f64) -> Result<Self> {
        validate_material(mat)?;
        let w = mat.effective_omega(omega);
        Ok(Self::from_parts(mat.lambda, mat.mu, w))
    }

    pub(crate) fn from_parts(lambda: f64, mu: f64, omega: f64) -> Self {
        let sp = 1.0 / mu.sqrt();
        let pp = 1.0 / (lambda + 2.0 * mu).sqrt();
        let ks = omega * sp;
        let kp = omega * pp;
        let w2 = if omega != 0.0 { omega * omega } else { 1.0 };
        LameKernel {
            lambda,
            mu,
            omega,
            kp,
            ks,
            phi_s: ExpPoly::spherical(ks, 1.0 / (4.0 * PI * mu)),
            phi_p: ExpPoly::spherical(kp, 1.0 / (4.0 * PI * w2)),
            phi_s_series: scaled(helmholtz_series(ks, 0), 1.0 / mu),
            phi_s_rem_series: scaled(helmholtz_series(ks, 1), 1.0 / mu),
            g_full_series: g_series(omega, sp, pp, false),
            g_rem_series: g_series(omega, sp, pp, true),
            b_static: (lambda + mu) / (8.0 * PI * mu * (lambda + 2.0 * mu)),
        }
    }

    /// Static variant (ω = 0) of the same material.
    pub fn kelvin(mat: &Material) -> Result<Self> {
        validate_material(mat)?;
        Ok(Self::from_parts(mat.lambda, mat.mu, 0.0))
    }

    /// Coefficients (a, b) of the Kelvin matrix a δ/R + b z z^T / R³.
    pub fn kelvin_coefficients(&self) -> (f64, f64) {
        let l = self.lambda;
        let m = self.mu;
        (
            (l + 3.0 * m) / (8.0 * PI * m * (l + 2.0 * m)),
            (l + m) / (8.0 * PI * m * (l + 2.0 * m)),
        )
    }

    /// Far-field factors of Γ(R x̂ - y): Γ ≈ e^{i kp R}/(4πR) P + e^{i ks R}/(4πR) S
    /// as R → ∞. Returns [P, S] with their first z-derivatives; second
    /// derivatives are left zero.
    pub fn far_derivs(&self, xh: &Vec3, y: &Vec3) -> [GammaDerivs; 2] {
        let xx = (xh * xh.transpose()).map(C64::from);
        let pp = xx / C64::from(self.lambda + 2.0 * self.mu);
        let ps = (CMat3::identity() - xx) / C64::from(self.mu);
        let one = |k: f64, proj: CMat3| {
            let g = proj * (-I * k * xh.dot(y)).exp();
            GammaDerivs {
                g,
                d1: [g * (I * k * xh.x), g * (I * k * xh.y), g * (I * k * xh.z)],
                d2: [[CMat3::zeros(); 3]; 3],
            }
        };
        [one(self.kp, pp), one(self.ks, ps)]
    }

    /// Γ_1(x, x) = lim Γ_1 as the separation vanishes (a multiple of I).
    pub fn remainder_at_zero(&self) -> C64 {
        let ks = self.ks;
        let kp = self.kp;
        let w2 = self.omega * self.omega;
        let s = I * ks / (4.0 * PI * self.mu);
        if w2 == 0.0 {
            return C64::new(0.0, 0.0);
        }
        s - I * (ks.powi(3) - kp.powi(3)) / (12.0 * PI * w2)
    }

    fn radials(&self, r: f64, part: Part) -> Radials {
        let mut phi = [C64::new(0.0, 0.0); 3];
        let mut g = [C64::new(0.0, 0.0); 5];
        let small = self.ks * r < SERIES_SWITCH;
        let mut tmp = [C64::new(0.0, 0.0); 5];
        match part {
            Part::Static => {
                power_derivs(1.0 / (4.0 * PI * self.mu), -1, r, &mut phi);
                power_derivs(-self.b_static, 1, r, &mut g);
            }
            Part::Full | Part::Remainder if self.omega == 0.0 => {
                if part == Part::Full {
                    power_derivs(1.0 / (4.0 * PI * self.mu), -1, r, &mut phi);
                    power_derivs(-self.b_static, 1, r, &mut g);
                }
            }
            Part::Full => {
                if small {
                    self.phi_s_series.eval(r, &mut phi);
                    self.g_full_series.eval(r, &mut g);
                } else {
                    self.phi_s.eval(r, &mut phi);
                    self.phi_s.eval(r, &mut g);
                    self.phi_p.eval(r, &mut tmp);
                    let w2 = self.omega * self.omega;
                    // phi_s carries 1/μ, phi_p carries 1/ω²; g = (Φ_s - Φ_p)/ω²
                    for n in 0..5 {
                        g[n] = g[n] * self.mu / w2 - tmp[n];
                    }
                }
            }
            Part::Remainder => {
                if small {
                    self.phi_s_rem_series.eval(r, &mut phi);
                    self.g_rem_series.eval(r, &mut g);
                } else {
                    let full = self.radials(r, Part::Full);
                    let st = self.radials(r, Part::Static);
                    for n in 0..3 {
                        phi[n] = full.phi[n] - st.phi[n];
                    }
                    for n in 0..5 {
                        g[n] = full.g[n] - st.g[n];
                    }
                }
            }
        }
        Radials { phi, g }
    }

    /// Γ and derivatives up to `order` (0, 1 or 2) at z = x - y.
    pub fn derivs(&self, z: &Vec3, order: usize, part: Part) -> GammaDerivs {
        let r = z.norm();
        let rd = self.radials(r, part);
        let zero = CMat3::zeros();
        let mut out = GammaDerivs {
            g: zero,
            d1: [zero; 3],
            d2: [[zero; 3]; 3],
        };
        let zc = [z.x, z.y, z.z];
        let (p0, p1, p2) = (rd.phi[0], rd.phi[1], rd.phi[2]);
        let (g1, g2, g3, g4) = (rd.g[1], rd.g[2], rd.g[3], rd.g[4]);
        let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for j in 0..3 {
            for k in 0..3 {
                let djk = d(j, k);
                out.g[(j, k)] = p0 * djk + g1 * djk + g2 * (zc[j] * zc[k]);
            }
        }
        if order >= 1 {
            for p in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let djk = d(j, k);
                        let a = djk * zc[p] + d(j, p) * zc[k] + d(k, p) * zc[j];
                        out.d1[p][(j, k)] =
                            p1 * (zc[p] * djk) + g2 * a + g3 * (zc[j] * zc[k] * zc[p]);
                    }
                }
            }
        }
        if order >= 2 {
            for p in 0..3 {
                for q in p..3 {
                    let mut m = CMat3::zeros();
                    for j in 0..3 {
                        for k in j..3 {
                            let djk = d(j, k);
                            let dd = djk * d(p, q) + d(j, p) * d(k, q) + d(j, q) * d(k, p);
                            let t = djk * zc[p] * zc[q]
                                + d(j, p) * zc[k] * zc[q]
                                + d(j, q) * zc[k] * zc[p]
                                + d(k, p) * zc[j] * zc[q]
                                + d(k, q) * zc[j] * zc[p]
                                + d(p, q) * zc[j] * zc[k];
                            let zzzz = zc[j] * zc[k] * zc[p] * zc[q];
                            let phi_pq = p1 * d(p, q) + p2 * (zc[p] * zc[q]);
                            let v = phi_pq * djk + g2 * dd + g3 * t + g4 * zzzz;
                            m[(j, k)] = v;
                            m[(k, j)] = v;
                        }
                    }
                    out.d2[p][q] = m;
                    out.d2[q][p] = m;
                }
            }
        }
        out
    }

    /// Γ(x, y) = Γ(x - y).
    pub fn single(&self, z: &Vec3, part: Part) -> CMat3 {
        self.derivs(z, 0, part).g
    }

    /// Double-layer kernel: row j is T^τ_y applied to column j of Γ(·, x),
    /// so (DL φ)_j = Σ_k DL_jk φ_k. `ny` is the normal at the source.
    pub fn double(&self, z: &Vec3, ny: &Vec3, tau: f64, part: Part) -> CMat3 {
        let dv = self.derivs(z, 1, part);
        double_from(&dv, ny, self.lambda, self.mu, tau)
    }

    /// Kernel of T^τ_x applied to the single layer; `nx` is the target normal.
    pub fn adjoint_double(&self, z: &Vec3, nx: &Vec3, tau: f64, part: Part) -> CMat3 {
        let dv = self.derivs(z, 1, part);
        adjoint_from(&dv, nx, self.lambda, self.mu, tau)
    }

    /// Kernel of T^γ_x applied to the double layer with parameter τ.
    pub fn traction_double(
        &self,
        z: &Vec3,
        nx: &Vec3,
        ny: &Vec3,
        gamma: f64,
        tau: f64,
        part: Part,
    ) -> CMat3 {
        let dv = self.derivs(z, 2, part);
        traction_double_from(&dv, nx, ny, self.lambda, self.mu, gamma, tau)
    }
}

fn scaled(s: Series, f: f64) -> Series {
    s.scale(f)
}

impl Series {
    pub(crate) fn scale(mut self, f: f64) -> Series {
        self.scale_in_place(f);
        self
    }
}

/// Σ_p n_p M[p]
fn contract(m: &[CMat3; 3], n: &Vec3) -> CMat3 {
    m[0] * C64::from(n.x) + m[1] * C64::from(n.y) + m[2] * C64::from(n.z)
}

/// d_j = Σ_l ∂_l Γ_lj
fn col_divergence(m: &[CMat3; 3]) -> CVec3 {
    let mut d = CVec3::zeros();
    for j in 0..3 {
        d[j] = m[0][(0, j)] + m[1][(1, j)] + m[2][(2, j)];
    }
    d
}

/// B_kj = Σ_p n_p ∂_k Γ_pj
fn grad_contract(m: &[CMat3; 3], n: &Vec3) -> CMat3 {
    let mut b = CMat3::zeros();
    for k in 0..3 {
        for j in 0..3 {
            b[(k, j)] = m[k][(0, j)] * n.x + m[k][(1, j)] * n.y + m[k][(2, j)] * n.z;
        }
    }
    b
}

pub fn double_from(dv: &GammaDerivs, ny: &Vec3, lambda: f64, mu: f64, tau: f64) -> CMat3 {
    let a = contract(&dv.d1, ny);
    let d = col_divergence(&dv.d1);
    let b = grad_contract(&dv.d1, ny);
    let nyc = ny.map(C64::from);
    let mut out = a.transpose() * C64::from(-mu) - b.transpose() * C64::from(tau);
    out -= d * nyc.transpose() * C64::from(lambda + mu - tau);
    out
}

pub(crate) fn adjoint_from(dv: &GammaDerivs, nx: &Vec3, lambda: f64, mu: f64, tau: f64) -> CMat3 {
    let a = contract(&dv.d1, nx);
    let d = col_divergence(&dv.d1);
    let b = grad_contract(&dv.d1, nx);
    let nxc = nx.map(C64::from);
    a * C64::from(mu) + nxc * d.transpose() * C64::from(lambda + mu - tau) + b * C64::from(tau)
}

pub(crate) fn traction_double_from(
    dv: &GammaDerivs,
    nx: &Vec3,
    ny: &Vec3,
    lambda: f64,
    mu: f64,
    gamma: f64,
    tau: f64,
) -> CMat3 {
    // ∂_m DL(z) for m = 0..3, with DL built from ∂_m ∂_p Γ
    let mut ddl = [CMat3::zeros(); 3];
    for m in 0..3 {
        let fake = GammaDerivs {
            g: dv.g,
            d1: dv.d2[m],
            d2: dv.d2,
        };
        ddl[m] = double_from(&fake, ny, lambda, mu, tau);
    }
    // V_ak = μ Σ_m n_m ∂_m DL_ak + (λ+μ-γ) n_a Σ_j ∂_j DL_jk + γ Σ_m n_m ∂_a DL_mk
    let a = contract(&ddl, nx);
    let mut div = CVec3::zeros();
    for k in 0..3 {
        div[k] = ddl[0][(0, k)] + ddl[1][(1, k)] + ddl[2][(2, k)];
    }
    let mut b = CMat3::zeros();
    for aa in 0..3 {
        for k in 0..3 {
            b[(aa, k)] = ddl[aa][(0, k)] * nx.x + ddl[aa][(1, k)] * nx.y + ddl[aa][(2, k)] * nx.z;
        }
    }
    let nxc = nx.map(C64::from);
    a * C64::from(mu) + nxc * div.transpose() * C64::from(lambda + mu - gamma) + b * C64::from(gamma)
}

/// Generalized traction T^τ u = (μ+τ) ∂_n u + (λ+μ-τ) n div u + τ n × curl u.
pub fn traction(
    grad: &CMat3,
    div: C64,
    curl: &CVec3,
    n: &Vec3,
    mat: &Material,
    tau: f64,
) -> Result<CVec3> {
    check_unit(n)?;
    let nc = n.map(C64::from);
    let dn = grad * nc;
    let ncurl = nc.cross(curl);
    Ok(dn * C64::from(mat.mu + tau) + nc * (div * (mat.lambda + mat.mu - tau)) + ncurl * C64::from(tau))
}

/// T^τ u from the Jacobian J[l][m] = ∂u_l/∂x_m alone.
pub fn traction_from_jacobian(j: &CMat3, n: &Vec3, lambda: f64, mu: f64, tau: f64) -> CVec3 {
    let nc = n.map(C64::from);
    j * nc * C64::from(mu) + nc * (j.trace() * (lambda + mu - tau)) + j.transpose() * nc * C64::from(tau)
}

/// (M u)_l = Σ_m (n_m ∂_l - n_l ∂_m) u_m.
pub fn m_operator(j: &CMat3, n: &Vec3) -> CVec3 {
    let nc = n.map(C64::from);
    j.transpose() * nc - nc * j.trace()
}

pub fn check_unit(n: &Vec3) -> Result<()> {
    if (n.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Parameter(format!("normal is not unit length (|n| = {})", n.norm())));
    }
    Ok(())
}

fn check_distinct(x: &Vec3, y: &Vec3) -> Result<()> {
    let r = (x - y).norm();
    if !(r > 0.0) {
        return Err(Error::Singularity(format!("coincident points at {x:?}")));
    }
    Ok(())
}

/// e^{ik|x-y|}/(4π|x-y|).
pub fn helmholtz_green(x: &Vec3, y: &Vec3, k: f64) -> Result<C64> {
    check_distinct(x, y)?;
    let r = (x - y).norm();
    Ok((I * k * r).exp() / (4.0 * PI * r))
}

/// ∇_x Φ_k(x, y).
pub fn grad_helmholtz(x: &Vec3, y: &Vec3, k: f64) -> Result<CVec3> {
    check_distinct(x, y)?;
    let z = x - y;
    let r = z.norm();
    let phi = (I * k * r).exp() / (4.0 * PI * r);
    let f = phi * (I * k * r - 1.0) / (r * r);
    Ok(z.map(|c| f * c))
}

/// Hessian ∇_x∇_x^T Φ_k(x, y):
/// Φ [ (ikr - 1) δ/r² + z z^T (3(1 - ikr)/r⁴ - k²/r²) ].
pub fn grad2_helmholtz(x: &Vec3, y: &Vec3, k: f64) -> Result<CMat3> {
    check_distinct(x, y)?;
    let z = x - y;
    let r = z.norm();
    let phi = (I * k * r).exp() / (4.0 * PI * r);
    let a = phi * (I * k * r - 1.0) / (r * r);
    let b = phi * ((1.0 - I * k * r) * 3.0 / (r * r) - k * k) / (r * r);
    let mut m = CMat3::identity() * a;
    for l in 0..3 {
        for n in 0..3 {
            m[(l, n)] += b * (z[l] * z[n]);
        }
    }
    Ok(m)
}

/// Third derivatives ∂_a ∂_l ∂_m Φ_k(x, y), indexed [a][(l, m)].
pub fn grad3_helmholtz(x: &Vec3, y: &Vec3, k: f64) -> Result<[CMat3; 3]> {
    check_distinct(x, y)?;
    let z = x - y;
    let ep = ExpPoly::spherical(k, 1.0 / (4.0 * PI));
    let mut d = [C64::new(0.0, 0.0); 5];
    ep.eval(z.norm(), &mut d);
    let dl = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut out = [CMat3::zeros(); 3];
    for a in 0..3 {
        for l in 0..3 {
            for m in 0..3 {
                let s = dl(l, m) * z[a] + dl(a, l) * z[m] + dl(a, m) * z[l];
                out[a][(l, m)] = d[2] * s + d[3] * (z[a] * z[l] * z[m]);
            }
        }
    }
    Ok(out)
}

/// Γ_e(x, y) for `mat` at frequency `omega`.
pub fn lame_fundamental(x: &Vec3, y: &Vec3, mat: &Material, omega: f64) -> Result<KernelMatrix> {
    check_distinct(x, y)?;
    let k = LameKernel::new(mat, omega)?;
    Ok(KernelMatrix {
        entries: k.single(&(x - y), Part::Full),
        source: *y,
        target: *x,
    })
}

/// Kelvin matrix Γ_0(x, y) of the static Lamé operator.
pub fn kelvin_matrix(x: &Vec3, y: &Vec3, mat: &Material) -> Result<KernelMatrix> {
    check_distinct(x, y)?;
    let k = LameKernel::kelvin(mat)?;
    Ok(KernelMatrix {
        entries: k.single(&(x - y), Part::Static),
        source: *y,
        target: *x,
    })
}

/// Point at which the traction of the fundamental solution is taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Source,
    Target,
}

/// Column j is T^τ applied (at `side`, with normal `n`) to column j of Γ^T.
pub fn traction_of_fundamental(
    x: &Vec3,
    y: &Vec3,
    n: &Vec3,
    mat: &Material,
    omega: f64,
    tau: f64,
    side: Side,
) -> Result<KernelMatrix> {
    check_distinct(x, y)?;
    check_unit(n)?;
    let k = LameKernel::new(mat, omega)?;
    let z = x - y;
    let entries = match side {
        Side::Source => k.double(&z, n, tau, Part::Full).transpose(),
        Side::Target => k.adjoint_double(&z, n, tau, Part::Full),
    };
    Ok(KernelMatrix {
        entries,
        source: *y,
        target: *x,
    })
}
