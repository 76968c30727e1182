//! Symbol calculus for the singular part of the transmission system and the
//! coercivity threshold of the interior transmission problem.
//!
//! The characteristic χ(θ) of a singular operator is a 3x3 matrix function
//! of the direction θ in the tangent plane. Its symbol is obtained by
//! expanding χ in a Fourier series χ = Σ A_n e^{inθ} and resumming with the
//! weights A*_0 = A_0, A*_n = 2π i^{|n|} / |n| A_n.

use crate::kernels::{LameKernel, Part};
use crate::material::{coupling_constants, validate_material, Material};
use crate::{CMat3, Error, Result, Vec3, C64, I};
use nalgebra::Matrix3;
use std::f64::consts::PI;

/// Default number of uniform θ samples for the Fourier expansion.
pub const DEFAULT_SAMPLES: usize = 512;
/// Default absolute margin on |det σ| for the normal-type decision.
pub const DEFAULT_MARGIN: f64 = 1e-12;

/// Closed-form symbol constants of the transmission system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolReport {
    pub c_i: f64,
    pub c_e: f64,
    pub b_i: f64,
    pub b_e: f64,
    pub p: f64,
    pub q: f64,
    /// (1/4 - c_i²), (1/4 - p²), (1/4 - q²).
    pub factors: [f64; 3],
    pub det_sigma: f64,
    pub normal_type: bool,
}

pub fn symbol_determinant(mat_i: &Material, mat_e: &Material) -> Result<SymbolReport> {
    symbol_determinant_with_margin(mat_i, mat_e, DEFAULT_MARGIN)
}

pub fn symbol_determinant_with_margin(mat_i: &Material, mat_e: &Material, margin: f64) -> Result<SymbolReport> {
    validate_material(mat_i)?;
    validate_material(mat_e)?;
    let (mi, me) = (mat_i.mu, mat_e.mu);
    let (c_i, c_e) = (mat_i.c(), mat_e.c());
    let (b_i, b_e) = (mat_i.b(), mat_e.b());
    let p = (c_e * b_i * mi - c_i * b_e * me) / (b_i * mi + b_e * me);
    let q = (mi * mi - me * me + (c_i - c_e) * mi * me) / ((mi + me) * (mi + me));
    let factors = [0.25 - c_i * c_i, 0.25 - p * p, 0.25 - q * q];
    let det_sigma = factors.iter().product();
    let normal_type = factors.iter().all(|f| f.abs() > margin);
    Ok(SymbolReport {
        c_i,
        c_e,
        b_i,
        b_e,
        p,
        q,
        factors,
        det_sigma,
        normal_type,
    })
}

/// Fourier data of a characteristic and the resulting symbol.
#[derive(Clone, Debug)]
pub struct NumericSymbol {
    /// A_n for n = -nmax..=nmax, stored at index n + nmax.
    pub coefficients: Vec<CMat3>,
    pub nmax: usize,
    /// False when the tail coefficients did not decay below 1e-8 of the peak.
    pub decaying: bool,
}

impl NumericSymbol {
    pub fn coefficient(&self, n: i64) -> CMat3 {
        let idx = n + self.nmax as i64;
        if idx < 0 || idx as usize >= self.coefficients.len() {
            return CMat3::zeros();
        }
        self.coefficients[idx as usize]
    }

    /// Symbol weight of the n-th harmonic.
    pub fn weight(n: i64) -> C64 {
        if n == 0 {
            return C64::new(1.0, 0.0);
        }
        let m = n.unsigned_abs();
        I.powu(m as u32) * (2.0 * PI / m as f64)
    }

    /// σ(θ) = Σ A*_n e^{inθ}.
    pub fn eval(&self, theta: f64) -> CMat3 {
        let mut out = CMat3::zeros();
        for (idx, a) in self.coefficients.iter().enumerate() {
            let n = idx as i64 - self.nmax as i64;
            let w = Self::weight(n) * C64::from_polar(1.0, n as f64 * theta);
            out += a * w;
        }
        out
    }

    /// The characteristic resummed without weights (reconstruction check).
    pub fn characteristic(&self, theta: f64) -> CMat3 {
        let mut out = CMat3::zeros();
        for (idx, a) in self.coefficients.iter().enumerate() {
            let n = idx as i64 - self.nmax as i64;
            out += a * C64::from_polar(1.0, n as f64 * theta);
        }
        out
    }

    pub fn determinant(&self, theta: f64) -> C64 {
        self.eval(theta).determinant()
    }
}

/// Trapezoidal Fourier expansion of `chi` over θ ∈ (-π, π] with `samples`
/// points, reweighted into a symbol.
pub fn numeric_symbol<F>(chi: F, samples: usize) -> Result<NumericSymbol>
where
    F: Fn(f64) -> CMat3,
{
    if samples < 4 {
        return Err(Error::Parameter(format!("need at least 4 theta samples, got {samples}")));
    }
    let thetas: Vec<f64> = (0..samples)
        .map(|k| -PI + 2.0 * PI * (k + 1) as f64 / samples as f64)
        .collect();
    let values: Vec<CMat3> = thetas.iter().map(|&t| chi(t)).collect();
    // the Nyquist harmonic is ambiguous and dropped
    let nmax = (samples - 1) / 2;
    let mut coefficients = Vec::with_capacity(2 * nmax + 1);
    for n in -(nmax as i64)..=(nmax as i64) {
        let mut a = CMat3::zeros();
        for (t, v) in thetas.iter().zip(&values) {
            a += v * C64::from_polar(1.0, -(n as f64) * t);
        }
        coefficients.push(a / C64::from(samples as f64));
    }
    let peak = coefficients.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let tail = coefficients[..4]
        .iter()
        .chain(&coefficients[coefficients.len() - 4..])
        .map(|a| a.norm())
        .fold(0.0, f64::max);
    let decaying = tail <= 1e-8 * peak.max(f64::MIN_POSITIVE);
    if !decaying {
        log::warn!("characteristic Fourier coefficients do not decay (tail {tail:.3e}, peak {peak:.3e})");
    }
    Ok(NumericSymbol {
        coefficients,
        nmax,
        decaying,
    })
}

/// Levi-Civita symbol with 0-based indices.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// The three singular diagonal blocks of the transmission system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularBlock {
    /// Rigid-body self block, coefficient c_i.
    Rigid,
    /// Displacement continuity block, coefficient p.
    Displacement,
    /// Traction continuity block, coefficient q.
    Traction,
}

impl SingularBlock {
    pub const ALL: [SingularBlock; 3] = [SingularBlock::Rigid, SingularBlock::Displacement, SingularBlock::Traction];

    pub fn coefficient(self, r: &SymbolReport) -> f64 {
        match self {
            SingularBlock::Rigid => r.c_i,
            SingularBlock::Displacement => r.p,
            SingularBlock::Traction => r.q,
        }
    }

    /// Closed-form determinant of the block symbol: coefficient² - 1/4.
    pub fn closed_form_det(self, r: &SymbolReport) -> f64 {
        let c = self.coefficient(r);
        c * c - 0.25
    }

    pub fn name(self) -> &'static str {
        match self {
            SingularBlock::Rigid => "rigid",
            SingularBlock::Displacement => "displacement",
            SingularBlock::Traction => "traction",
        }
    }
}

/// Characteristic with -1/2 on the diagonal and the antisymmetric
/// first-harmonic part (coef/2π) Σ_l ε_{nml} (a_{l2} cos θ - a_{l1} sin θ)
/// in entry (m, n). Columns of `frame` are the local axes at the surface
/// point, the third one normal.
pub fn block_characteristic(coef: f64, frame: Matrix3<f64>) -> impl Fn(f64) -> CMat3 {
    move |theta: f64| {
        let (s, c) = theta.sin_cos();
        let mut out = CMat3::identity() * C64::from(-0.5);
        for m in 0..3 {
            for n in 0..3 {
                if m == n {
                    continue;
                }
                let mut v = 0.0;
                for l in 0..3 {
                    v += levi_civita(n, m, l) * (frame[(l, 1)] * c - frame[(l, 0)] * s);
                }
                out[(m, n)] = C64::from(coef * v / (2.0 * PI));
            }
        }
        out
    }
}

/// Angular profile r² K(r e(θ)) of the static double-layer kernel with
/// traction parameter `tau` on the plane through the origin with normal e_3.
/// The Kelvin kernel is homogeneous of degree -2, so the profile does not
/// depend on r.
pub fn kelvin_double_profile(mat: &Material, tau: f64) -> Result<impl Fn(f64) -> CMat3> {
    let kernel = LameKernel::kelvin(mat)?;
    let ny = Vec3::z();
    Ok(move |theta: f64| {
        let (s, c) = theta.sin_cos();
        let z = Vec3::new(c, s, 0.0);
        kernel.double(&z, &ny, tau, Part::Static)
    })
}

/// Coefficient s with r² K = (s/2π) N(θ) for the planar static double-layer
/// kernel, N being the identity-frame antisymmetric pattern of
/// [`block_characteristic`].
pub fn kelvin_double_coefficient(mat: &Material, tau: f64) -> Result<f64> {
    let prof = kelvin_double_profile(mat, tau)?;
    // entry (0, 2) of N is cos θ
    Ok(2.0 * PI * prof(0.0)[(0, 2)].re)
}

/// Cauchy coefficient of α_e W_e - α_i W_i with the coupling parameters κ,
/// extracted from the kernels themselves.
pub fn displacement_block_coefficient(mat_i: &Material, mat_e: &Material) -> Result<f64> {
    let cc = coupling_constants(mat_i, mat_e)?;
    let se = kelvin_double_coefficient(mat_e, cc.kappa_e)?;
    let si = kelvin_double_coefficient(mat_i, cc.kappa_i)?;
    Ok(cc.alpha_e * se - cc.alpha_i * si)
}

/// Which side of the density bounds the contrast lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// ρ_* > 1.
    RhoStarGt1,
    /// ρ* < 1.
    RhoSupLt1,
    /// 1 ∈ [ρ_*, ρ*].
    Invalid,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::RhoStarGt1 => "rho_star_gt_1",
            Regime::RhoSupLt1 => "rho_sup_lt_1",
            Regime::Invalid => "invalid",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdReport {
    pub lambda1: f64,
    pub m: f64,
    pub omega_max_squared: f64,
    pub regime: Regime,
}

/// First Dirichlet eigenvalue of -Δ on the ball of radius R.
pub fn ball_dirichlet_eigenvalue(radius: f64) -> f64 {
    (PI / radius).powi(2)
}

/// Frequency bound below which the interior transmission form is coercive
/// on the ball of radius `radius`.
pub fn itp_threshold(radius: f64, mat: &Material, rho_inf: f64, rho_sup: f64) -> Result<ThresholdReport> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Parameter(format!("radius must be positive, got {radius}")));
    }
    if !(rho_inf > 0.0) || !(rho_sup > 0.0) || !rho_inf.is_finite() || !rho_sup.is_finite() {
        return Err(Error::Parameter(format!(
            "density bounds must be positive, got [{rho_inf}, {rho_sup}]"
        )));
    }
    if rho_inf > rho_sup {
        return Err(Error::Parameter(format!("rho_inf {rho_inf} exceeds rho_sup {rho_sup}")));
    }
    validate_material(mat)?;
    let lambda1 = ball_dirichlet_eigenvalue(radius);
    let m = mat.mu.min(3.0 * mat.lambda + 2.0 * mat.mu);
    let omega_max_squared = (m * lambda1 / rho_sup).min(m * lambda1);
    let regime = if rho_inf > 1.0 {
        Regime::RhoStarGt1
    } else if rho_sup < 1.0 {
        Regime::RhoSupLt1
    } else {
        Regime::Invalid
    };
    Ok(ThresholdReport {
        lambda1,
        m,
        omega_max_squared,
        regime,
    })
}

/// Smallest eigenvalue of the radial part -(r² u')'/r² = λ u on [0, R] with
/// u'(0) = 0 and u(R) = 0, discretized by finite volumes on `cells` cells.
/// Independent of the closed form; used to cross-check it.
pub fn radial_dirichlet_eigenvalue_fd(radius: f64, cells: usize) -> Result<f64> {
    if cells < 3 {
        return Err(Error::Parameter(format!("need at least 3 cells, got {cells}")));
    }
    let h = radius / cells as f64;
    // unknowns at cell centers r_i = (i + 1/2) h; the Dirichlet value sits at r = R
    let mut mass = vec![0.0; cells];
    let mut diag = vec![0.0; cells];
    let mut off = vec![0.0; cells - 1];
    for i in 0..cells {
        let rl = i as f64 * h;
        let rr = (i + 1) as f64 * h;
        mass[i] = (rr.powi(3) - rl.powi(3)) / 3.0;
        let fl = rl * rl / h;
        let fr = rr * rr / h;
        if i > 0 {
            diag[i] += fl;
        }
        if i + 1 < cells {
            diag[i] += fr;
            off[i] = -fr;
        } else {
            // half-cell distance to the wall
            diag[i] += rr * rr / (0.5 * h);
        }
    }
    // symmetric scaling M^{-1/2} A M^{-1/2}
    let d: Vec<f64> = (0..cells).map(|i| diag[i] / mass[i]).collect();
    let e: Vec<f64> = (0..cells - 1).map(|i| off[i] / (mass[i] * mass[i + 1]).sqrt()).collect();
    Ok(smallest_tridiagonal_eigenvalue(&d, &e))
}

/// Sturm-sequence bisection for the smallest eigenvalue of a symmetric
/// tridiagonal matrix.
fn smallest_tridiagonal_eigenvalue(d: &[f64], e: &[f64]) -> f64 {
    let n = d.len();
    let count_below = |x: f64| {
        let mut cnt = 0;
        let mut q = d[0] - x;
        if q < 0.0 {
            cnt += 1;
        }
        for i in 1..n {
            let qq = if q.abs() < 1e-300 { 1e-300 } else { q };
            q = d[i] - x - e[i - 1] * e[i - 1] / qq;
            if q < 0.0 {
                cnt += 1;
            }
        }
        cnt
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}
