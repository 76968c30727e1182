//! Point-source probe sequences approaching a boundary point z* of D.
//!
//! z_j = z* + (δ/j) n(z*) sits outside D and its mirror y_j = z* - (δ/j) n(z*)
//! inside. The incident energy ‖∇Φ_p(·, z_j)‖² over a small region D₀ of D
//! touching z* grows like j, while the boundary data generated by the pair
//! (z_j, y_j), normalized by ‖∇∇Φ_p(·, z_j) q‖_{L²(∂D)}, stay bounded.

use crate::geometry::{probe_point, PolarRule, Surface, SurfaceQuadrature};
use crate::kernels::{grad2_helmholtz, grad3_helmholtz, grad_helmholtz, traction_from_jacobian};
use crate::material::{wavenumbers, Material};
use crate::{exec, CMat3, Error, Result, Vec3, C64};
use std::f64::consts::PI;

/// Default radius of D₀ in units of δ.
pub const DEFAULT_D0_FACTOR: f64 = 4.0;
/// Default first index used in the growth fit.
pub const DEFAULT_FIT_FROM: usize = 8;

/// Cell size relative to the distance to the source below which octree
/// cells stop splitting.
const CELL_RATIO: f64 = 0.25;
const MAX_DEPTH: usize = 40;

#[derive(Clone, Debug)]
pub struct ProbeConfig {
    pub surface: Surface,
    pub z_star: Vec3,
    /// Outward unit normal at z*; also the polarization q.
    pub normal: Vec3,
    pub delta: f64,
    pub j_max: usize,
    /// Exterior material (unit density).
    pub mat: Material,
    pub omega: f64,
    /// D₀ = D ∩ B(z*, d0_factor δ).
    pub d0_factor: f64,
    /// Finest octree cell; defaults to δ / (4 j_max).
    pub h_min: Option<f64>,
    pub fit_from: usize,
}

impl ProbeConfig {
    /// Probe at the parametric point ŝ of an ellipsoid or sphere.
    pub fn at_parameter(
        surface: Surface,
        s_hat: &Vec3,
        delta: f64,
        j_max: usize,
        mat: Material,
        omega: f64,
    ) -> Result<Self> {
        let s = s_hat.try_normalize(0.0).ok_or_else(|| Error::Parameter("zero parameter direction".into()))?;
        let (z_star, normal, _) = surface
            .param_point(&s)
            .ok_or_else(|| Error::Configuration("at_parameter needs a parametric surface".into()))?;
        Ok(ProbeConfig {
            surface,
            z_star,
            normal,
            delta,
            j_max,
            mat,
            omega,
            d0_factor: DEFAULT_D0_FACTOR,
            h_min: None,
            fit_from: DEFAULT_FIT_FROM,
        })
    }

    pub fn d0_radius(&self) -> f64 {
        self.d0_factor * self.delta
    }

    pub fn finest_cell(&self) -> f64 {
        self.h_min.unwrap_or(self.delta / (4.0 * self.j_max as f64))
    }

    pub fn z(&self, j: usize) -> Vec3 {
        probe_point(&self.z_star, &self.normal, self.delta, j)
    }

    /// Mirror of z_j across the tangent plane at z*.
    pub fn y(&self, j: usize) -> Vec3 {
        probe_point(&self.z_star, &(-self.normal), self.delta, j)
    }

    fn kp(&self) -> Result<f64> {
        let bg = Material::new(self.mat.lambda, self.mat.mu);
        Ok(wavenumbers(&bg, self.omega)?.kp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Parameter(format!("delta must be positive, got {}", self.delta)));
        }
        if self.j_max < 1 {
            return Err(Error::Parameter("j_max must be at least 1".into()));
        }
        if !(self.d0_factor > 1.0) {
            return Err(Error::Parameter(format!("d0_factor must exceed 1, got {}", self.d0_factor)));
        }
        crate::kernels::check_unit(&self.normal)?;
        self.kp()?;
        let h = self.finest_cell();
        let need = self.delta / (4.0 * self.j_max as f64);
        if !(h > 0.0) || h > need * (1.0 + 1e-12) {
            return Err(Error::Accuracy(format!(
                "finest cell {h:.3e} is coarser than delta/(4 j_max) = {need:.3e}"
            )));
        }
        if !self.surface.contains(&self.y(self.j_max)) || self.surface.contains(&self.z(1)) {
            return Err(Error::Geometry(
                "z* is not on the surface with outward normal at the probe scale".into(),
            ));
        }
        Ok(())
    }
}

/// Per-j probe data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRecord {
    pub j: usize,
    pub z_j: Vec3,
    pub distance: f64,
    pub incident_norm2: f64,
    pub f_norm: f64,
    pub h_norm: f64,
}

#[derive(Clone, Debug)]
pub struct GrowthFit {
    pub js: Vec<usize>,
    pub norms2: Vec<f64>,
    /// Least-squares slope of log(norm²) against log j over j ≥ fit_from.
    pub slope: f64,
}

#[derive(Clone, Debug)]
pub struct SourceDataBounds {
    pub js: Vec<usize>,
    pub f_norms: Vec<f64>,
    pub h_norms: Vec<f64>,
    pub f_ratio: f64,
    pub h_ratio: f64,
}

#[derive(Clone, Debug)]
pub struct ProbeRun {
    pub z_star: Vec3,
    pub delta: f64,
    pub j_max: usize,
    pub d0_radius: f64,
    pub records: Vec<ProbeRecord>,
    pub growth: GrowthFit,
    pub data: SourceDataBounds,
}

/// Midpoint-cell integral of `f` over D₀ on an octree refined towards
/// `focus`. Cells split while larger than CELL_RATIO times their distance
/// to `focus` and larger than `h_min`; cells cut by ∂D or by the ball are
/// sampled on 4³ sub-midpoints.
fn integrate_d0<F>(cfg: &ProbeConfig, focus: &Vec3, h_min: f64, f: &F) -> f64
where
    F: Fn(&Vec3) -> f64 + Sync,
{
    let oct = Octree {
        cfg,
        focus: *focus,
        h_min,
        r0: cfg.d0_radius(),
    };
    // 4³ root cells so the top level parallelizes
    let n0 = 4usize;
    let h0 = 2.0 * oct.r0 / n0 as f64;
    let lo = cfg.z_star - Vec3::repeat(oct.r0);
    let parts = exec::map(n0 * n0 * n0, |idx| {
        let (i, j, k) = (idx % n0, (idx / n0) % n0, idx / (n0 * n0));
        let c = lo + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * h0;
        oct.cell(&c, 0.5 * h0, 0, f)
    });
    parts.iter().sum()
}

struct Octree<'a> {
    cfg: &'a ProbeConfig,
    focus: Vec3,
    h_min: f64,
    r0: f64,
}

impl Octree<'_> {
    fn inside(&self, x: &Vec3) -> bool {
        (x - self.cfg.z_star).norm() < self.r0 && self.cfg.surface.contains(x)
    }

    fn is_cut(&self, c: &Vec3, half: f64) -> bool {
        let diag = half * 3f64.sqrt();
        if ((c - self.cfg.z_star).norm() - self.r0).abs() < diag {
            return true;
        }
        match surface_distance(&self.cfg.surface, c) {
            Some(d) => d < diag,
            None => {
                let first = self.inside(c);
                sample_points(c, half).any(|x| self.inside(&x) != first)
            }
        }
    }

    fn cell<F: Fn(&Vec3) -> f64>(&self, c: &Vec3, half: f64, depth: usize, f: &F) -> f64 {
        let diag = half * 3f64.sqrt();
        if (c - self.cfg.z_star).norm() - diag >= self.r0 {
            return 0.0;
        }
        let cut = self.is_cut(c, half);
        if !cut && !self.inside(c) {
            return 0.0;
        }
        let size = 2.0 * half;
        let dist = ((c - self.focus).norm() - diag).max(0.0);
        if depth < MAX_DEPTH && size > self.h_min && size > CELL_RATIO * dist {
            let q = 0.5 * half;
            let mut s = 0.0;
            for o in 0..8 {
                let d = Vec3::new(
                    if o & 1 == 0 { -q } else { q },
                    if o & 2 == 0 { -q } else { q },
                    if o & 4 == 0 { -q } else { q },
                );
                s += self.cell(&(c + d), q, depth + 1, f);
            }
            return s;
        }
        let vol = size * size * size;
        if !cut {
            return f(c) * vol;
        }
        let m = 4;
        let hs = size / m as f64;
        let base = c - Vec3::repeat(half);
        let mut s = 0.0;
        for a in 0..m {
            for b in 0..m {
                for d in 0..m {
                    let x = base + Vec3::new(a as f64 + 0.5, b as f64 + 0.5, d as f64 + 0.5) * hs;
                    if self.inside(&x) {
                        s += f(&x);
                    }
                }
            }
        }
        s * vol / (m * m * m) as f64
    }
}

/// Distance to a parametric surface; None for meshes.
fn surface_distance(s: &Surface, x: &Vec3) -> Option<f64> {
    let p = s.foot_param(x)?;
    let (y, _, _) = s.param_point(&p)?;
    Some((x - y).norm())
}

fn sample_points(c: &Vec3, half: f64) -> impl Iterator<Item = Vec3> + '_ {
    (0..27).map(move |o| {
        let t = |v: usize| (v as f64 - 1.0) * half;
        c + Vec3::new(t(o % 3), t((o / 3) % 3), t(o / 9))
    })
}

/// ‖∇_x Φ_p(·, z)‖²_{L²(D₀)}.
pub fn incident_norm_squared(cfg: &ProbeConfig, z: &Vec3) -> Result<f64> {
    let kp = cfg.kp()?;
    if cfg.surface.contains(z) {
        return Err(Error::Geometry(format!("source {z:?} lies inside D")));
    }
    let zz = *z;
    let f = move |x: &Vec3| grad_helmholtz(x, &zz, kp).map(|g| g.norm_squared()).unwrap_or(0.0);
    Ok(integrate_d0(cfg, z, cfg.finest_cell(), &f))
}

/// Least-squares slope of log y against log x.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        num += (a - mx) * (b - my);
        den += (a - mx) * (a - mx);
    }
    num / den
}

fn fit_slope(js: &[usize], values: &[f64], from: usize) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = js
        .iter()
        .zip(values)
        .filter(|(j, _)| **j >= from)
        .map(|(j, v)| (*j as f64, *v))
        .unzip();
    if x.len() < 2 {
        return Err(Error::Parameter(format!("need at least two indices j >= {from} for the fit")));
    }
    Ok(log_log_slope(&x, &y))
}

/// ‖∇Φ_p(·, z_j)‖²_{L²(D₀)} for j = 1..=j_max and its growth exponent.
pub fn incident_norm_growth(cfg: &ProbeConfig) -> Result<GrowthFit> {
    cfg.validate()?;
    if cfg.j_max < 8 {
        return Err(Error::Parameter(format!("growth fit needs j_max >= 8, got {}", cfg.j_max)));
    }
    let js: Vec<usize> = (1..=cfg.j_max).collect();
    let norms2 = js
        .iter()
        .map(|&j| incident_norm_squared(cfg, &cfg.z(j)))
        .collect::<Result<Vec<_>>>()?;
    let slope = fit_slope(&js, &norms2, cfg.fit_from.min(cfg.j_max / 2).max(1))?;
    Ok(GrowthFit { js, norms2, slope })
}

/// Nodes and weights for integrals over ∂D that resolve a peak of width
/// `scale` at z*: a graded polar rule around the foot parameter of z* on
/// parametric surfaces, the given quadrature on meshes.
fn peak_rule(cfg: &ProbeConfig, quad: &SurfaceQuadrature, scale: f64) -> Result<Vec<(Vec3, Vec3, f64)>> {
    match (&quad.param, cfg.surface.foot_param(&cfg.z_star)) {
        (Some(pq), Some(s0)) => {
            let amax = pq.axes.max();
            let rule = PolarRule::graded(0.25 * scale / amax, 8, 64);
            let e1 = s0.cross(&Vec3::x()).try_normalize(1e-8).unwrap_or_else(|| s0.cross(&Vec3::y()).normalize());
            let e2 = s0.cross(&e1);
            Ok(rule
                .nodes(&s0, &e1, &e2)
                .into_iter()
                .map(|(s, w)| {
                    let (x, n, jac) = pq.eval(&s);
                    (x, n, w * jac)
                })
                .collect())
        }
        _ => {
            if quad.spacing > 0.5 * scale {
                return Err(Error::Accuracy(format!(
                    "surface quadrature spacing {:.3e} does not resolve a probe at distance {scale:.3e}",
                    quad.spacing
                )));
            }
            Ok((0..quad.len()).map(|i| (quad.nodes[i], quad.normals[i], quad.weights[i])).collect())
        }
    }
}

/// Discrete L²(∂D) norms of the normalized pair data f_j and h_j.
pub fn normalized_source_data(cfg: &ProbeConfig, quad: &SurfaceQuadrature, j: usize) -> Result<(f64, f64)> {
    let kp = cfg.kp()?;
    let (lam, mu) = (cfg.mat.lambda, cfg.mat.mu);
    let z = cfg.z(j);
    let y = cfg.y(j);
    let q = cfg.normal.map(C64::from);
    let rule = peak_rule(cfg, quad, cfg.delta / j as f64)?;
    let mut norm2 = 0.0;
    let mut f2 = 0.0;
    let mut h2 = 0.0;
    for (x, n, w) in &rule {
        let hz = grad2_helmholtz(x, &z, kp)?;
        let hy = grad2_helmholtz(x, &y, kp)?;
        norm2 += w * (hz * q).norm_squared();
        f2 += w * ((hz + hy) * q).norm_squared();
        let tz = grad3_helmholtz(x, &z, kp)?;
        let ty = grad3_helmholtz(x, &y, kp)?;
        // J[l][m] = ∂_m u_l with u = ∇∇Φ q
        let mut jac = CMat3::zeros();
        for m in 0..3 {
            let col = (tz[m] + ty[m]) * q;
            for l in 0..3 {
                jac[(l, m)] = col[l];
            }
        }
        h2 += w * traction_from_jacobian(&jac, n, lam, mu, mu).norm_squared();
    }
    let nrm = norm2.sqrt();
    Ok(((f2 / norm2).sqrt(), h2.sqrt() / nrm))
}

fn max_min_ratio(v: &[f64]) -> f64 {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mn = v.iter().cloned().fold(f64::INFINITY, f64::min);
    mx / mn
}

pub fn normalized_source_data_bounds(cfg: &ProbeConfig, quad: &SurfaceQuadrature) -> Result<SourceDataBounds> {
    cfg.validate()?;
    let js: Vec<usize> = (1..=cfg.j_max).collect();
    let vals = exec::map(js.len(), |i| normalized_source_data(cfg, quad, js[i]));
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    let f_norms: Vec<f64> = vals.iter().map(|v| v.0).collect();
    let h_norms: Vec<f64> = vals.iter().map(|v| v.1).collect();
    Ok(SourceDataBounds {
        f_ratio: max_min_ratio(&f_norms),
        h_ratio: max_min_ratio(&h_norms),
        js,
        f_norms,
        h_norms,
    })
}

/// Both monitored sequences for j = 1..=j_max.
pub fn probe_run(cfg: &ProbeConfig, quad: &SurfaceQuadrature) -> Result<ProbeRun> {
    let growth = incident_norm_growth(cfg)?;
    let data = normalized_source_data_bounds(cfg, quad)?;
    let records = growth
        .js
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let z_j = cfg.z(j);
            ProbeRecord {
                j,
                z_j,
                distance: (z_j - cfg.z_star).norm(),
                incident_norm2: growth.norms2[i],
                f_norm: data.f_norms[i],
                h_norm: data.h_norms[i],
            }
        })
        .collect();
    Ok(ProbeRun {
        z_star: cfg.z_star,
        delta: cfg.delta,
        j_max: cfg.j_max,
        d0_radius: cfg.d0_radius(),
        records,
        growth,
        data,
    })
}

/// Outcome of the pointwise checks on ∂²Φ_p.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularBoundReport {
    pub samples: usize,
    /// max |∂_l ∂_m Φ_p| |x - y| (the exponent -1 bound).
    pub constant_r1: f64,
    /// max |∂_l ∂_m Φ_p| |x - y|³.
    pub constant_r3: f64,
    /// max of |(1 - ik r) e^{ikr} - 1| / (k² r²).
    pub mean_value_ratio: f64,
    pub mean_value_violations: usize,
}

/// Deterministic sample pairs: separations log-uniform in [r_min, r_max],
/// directions from a spherical Fibonacci lattice, base points on a small
/// lattice around the origin.
pub fn separation_samples(n: usize, r_min: f64, r_max: f64) -> Vec<(Vec3, Vec3)> {
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) / n as f64;
            let r = r_min * (r_max / r_min).powf((i as f64 * golden).fract());
            let cz = 1.0 - 2.0 * t;
            let phi = 2.0 * PI * (i as f64 / golden).fract();
            let sz = (1.0 - cz * cz).max(0.0).sqrt();
            let dir = Vec3::new(sz * phi.cos(), sz * phi.sin(), cz);
            let y = Vec3::new((i % 7) as f64 * 0.3, (i % 5) as f64 * -0.2, (i % 3) as f64 * 0.1);
            (y + dir * r, y)
        })
        .collect()
}

pub fn singular_bound_check(pairs: &[(Vec3, Vec3)], kp: f64) -> Result<SingularBoundReport> {
    if !(kp >= 0.0) {
        return Err(Error::Parameter(format!("kp must be non-negative, got {kp}")));
    }
    let mut rep = SingularBoundReport {
        samples: pairs.len(),
        constant_r1: 0.0,
        constant_r3: 0.0,
        mean_value_ratio: 0.0,
        mean_value_violations: 0,
    };
    for (x, y) in pairs {
        let r = (x - y).norm();
        let h = grad2_helmholtz(x, y, kp)?;
        let m = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
        rep.constant_r1 = rep.constant_r1.max(m * r);
        rep.constant_r3 = rep.constant_r3.max(m * r * r * r);
        if kp > 0.0 {
            let kr = kp * r;
            let lhs = mean_value_lhs(kr);
            let rhs = kr * kr;
            rep.mean_value_ratio = rep.mean_value_ratio.max(lhs / rhs);
            if lhs > rhs * (1.0 + 1e-12) {
                rep.mean_value_violations += 1;
            }
        }
    }
    Ok(rep)
}

/// |(1 - ix) e^{ix} - 1|, with the cancelling leading terms removed for small x.
fn mean_value_lhs(x: f64) -> f64 {
    if x < 1e-2 {
        let x2 = x * x;
        let re = x2 * (0.5 - x2 / 8.0 + x2 * x2 / 144.0);
        let im = x * x2 * (1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0);
        return re.hypot(im);
    }
    (C64::new(1.0, -x) * C64::from_polar(1.0, x) - 1.0).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = (1..10).map(|v| v as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(1.7)).collect();
        assert!((log_log_slope(&x, &y) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn mean_value_series_matches_direct() {
        for x in [2e-3, 5e-3, 9.9e-3] {
            let direct = (C64::new(1.0, -x) * C64::from_polar(1.0, x) - 1.0).norm();
            assert!((mean_value_lhs(x) / direct - 1.0).abs() < 1e-9);
        }
        let x: f64 = 0.0100001;
        let a = mean_value_lhs(x);
        let b = mean_value_lhs(0.0099999);
        assert!((a / b - 1.0).abs() < 1e-4);
    }

    #[test]
    fn ratio_of_constant_sequence() {
        assert_eq!(max_min_ratio(&[2.0, 2.0, 2.0]), 1.0);
    }
}
