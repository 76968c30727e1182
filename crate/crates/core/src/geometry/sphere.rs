//! Tensor-product grid on the unit sphere (Gauss-Legendre in cos θ,
//! uniform in φ), hyperinterpolation onto it, real spherical harmonics and
//! polar rules centred at arbitrary points.

use crate::Vec3;
use gauss_quad::legendre::GaussLegendre;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

/// Gauss-Legendre nodes and weights on (a, b), ascending.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let n = NonZeroUsize::new(n).expect("rule with zero nodes");
    let mut pairs: Vec<(f64, f64)> = GaussLegendre::new(n).as_node_weight_pairs().to_vec();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    pairs.iter().map(|(x, w)| (c + h * x, h * w)).unzip()
}

/// P_0(x) .. P_L(x).
pub fn legendre_all(lmax: usize, x: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if lmax == 0 {
        return;
    }
    out[1] = x;
    for l in 2..=lmax {
        let lf = l as f64;
        out[l] = ((2.0 * lf - 1.0) * x * out[l - 1] - (lf - 1.0) * out[l - 2]) / lf;
    }
}

/// Index of Y_lm in a flat (L+1)² array, m in [-l, l].
pub fn sh_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Orthonormal real spherical harmonics up to degree `lmax` at unit `s`.
pub fn real_sh(lmax: usize, s: &Vec3, out: &mut [f64]) {
    let x = s.z.clamp(-1.0, 1.0);
    let st = (1.0 - x * x).max(0.0).sqrt();
    let phi = s.y.atan2(s.x);
    // q[l][m] normalized associated Legendre values
    let w = lmax + 1;
    let mut q = vec![0.0; w * w];
    q[0] = (1.0 / (4.0 * PI)).sqrt();
    for m in 1..=lmax {
        let mf = m as f64;
        q[m * w + m] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * st * q[(m - 1) * w + (m - 1)];
    }
    for m in 0..lmax {
        q[(m + 1) * w + m] = (2.0 * m as f64 + 3.0).sqrt() * x * q[m * w + m];
    }
    for m in 0..=lmax {
        for l in m + 2..=lmax {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            q[l * w + m] = a * (x * q[(l - 1) * w + m] - b * q[(l - 2) * w + m]);
        }
    }
    let r2 = 2f64.sqrt();
    for l in 0..=lmax {
        out[sh_index(l, 0)] = q[l * w];
        for m in 1..=l {
            let (sn, cs) = (m as f64 * phi).sin_cos();
            out[sh_index(l, m as i64)] = r2 * q[l * w + m] * cs;
            out[sh_index(l, -(m as i64))] = r2 * q[l * w + m] * sn;
        }
    }
}

/// Point on the unit sphere with polar angle θ (via cos θ) and azimuth φ.
pub fn unit_point(cos_t: f64, phi: f64) -> Vec3 {
    let st = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    Vec3::new(st * phi.cos(), st * phi.sin(), cos_t)
}

/// A polar rule on S² around a centre: nodes ŝ(ρ, α) = cos ρ ŝ0 +
/// sin ρ (cos α e1 + sin α e2) with weights including sin ρ. The α nodes
/// come in antipodal pairs.
#[derive(Clone, Debug)]
pub struct PolarRule {
    pub rho: Vec<f64>,
    pub rho_w: Vec<f64>,
    pub n_alpha: usize,
}

impl PolarRule {
    pub fn new(n_rho: usize, n_alpha: usize) -> Self {
        let n_alpha = n_alpha + n_alpha % 2;
        let (rho, rho_w) = gauss_legendre(n_rho, 0.0, PI);
        PolarRule { rho, rho_w, n_alpha }
    }

    /// Rule with Gauss panels on [0, ρ1], [ρ1, 2ρ1], [2ρ1, 4ρ1], ... up to π.
    pub fn graded(rho1: f64, per_panel: usize, n_alpha: usize) -> Self {
        let n_alpha = n_alpha + n_alpha % 2;
        let mut rho = Vec::new();
        let mut rho_w = Vec::new();
        let mut a = 0.0;
        let mut b = rho1.min(PI);
        loop {
            let (x, w) = gauss_legendre(per_panel, a, b);
            rho.extend(x);
            rho_w.extend(w);
            if b >= PI {
                break;
            }
            a = b;
            b = (2.0 * b).min(PI);
        }
        PolarRule { rho, rho_w, n_alpha }
    }

    pub fn len(&self) -> usize {
        self.rho.len() * self.n_alpha
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nodes and solid-angle weights around `s0` with tangent frame (e1, e2).
    pub fn nodes(&self, s0: &Vec3, e1: &Vec3, e2: &Vec3) -> Vec<(Vec3, f64)> {
        let da = 2.0 * PI / self.n_alpha as f64;
        let mut out = Vec::with_capacity(self.len());
        for (r, wr) in self.rho.iter().zip(&self.rho_w) {
            let (sr, cr) = r.sin_cos();
            for m in 0..self.n_alpha {
                let (sa, ca) = (m as f64 * da).sin_cos();
                let s = s0 * cr + (e1 * ca + e2 * sa) * sr;
                out.push((s.normalize(), wr * sr * da));
            }
        }
        out
    }
}

/// Tensor grid with `nt` Gauss-Legendre rings in cos θ and 2 nt azimuths.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub nt: usize,
    pub nphi: usize,
    pub cos_t: Vec<f64>,
    pub points: Vec<Vec3>,
    /// Solid-angle weights, summing to 4π.
    pub weights: Vec<f64>,
}

impl SphereGrid {
    pub fn new(nt: usize) -> Self {
        let nphi = 2 * nt;
        let (x, w) = gauss_legendre(nt, -1.0, 1.0);
        let dphi = 2.0 * PI / nphi as f64;
        let mut points = Vec::with_capacity(nt * nphi);
        let mut weights = Vec::with_capacity(nt * nphi);
        for i in 0..nt {
            for k in 0..nphi {
                points.push(unit_point(x[i], k as f64 * dphi));
                weights.push(w[i] * dphi);
            }
        }
        SphereGrid {
            nt,
            nphi,
            cos_t: x,
            points,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Highest degree reproduced exactly by hyperinterpolation.
    pub fn lmax(&self) -> usize {
        self.nt - 1
    }

    pub fn ring(&self, j: usize) -> usize {
        j / self.nphi
    }

    /// Node index after rotating node `j` by `shift` azimuth steps.
    pub fn shifted(&self, j: usize, shift: usize) -> usize {
        let i = j / self.nphi;
        let k = (j % self.nphi + shift) % self.nphi;
        i * self.nphi + k
    }

    /// Tangent frame (θ̂, φ̂) at node `j`; rotating the node rotates the frame.
    pub fn frame(&self, j: usize) -> (Vec3, Vec3) {
        let s = self.points[j];
        let phi = s.y.atan2(s.x);
        let ph = Vec3::new(-phi.sin(), phi.cos(), 0.0);
        let th = ph.cross(&s).normalize();
        (th, ph)
    }

    /// Hyperinterpolation weights L_j(s) for every node j.
    pub fn interp_weights(&self, s: &Vec3, out: &mut [f64]) {
        let lmax = self.lmax();
        let mut p = vec![0.0; lmax + 1];
        let c: Vec<f64> = (0..=lmax).map(|l| (2 * l + 1) as f64 / (4.0 * PI)).collect();
        for (j, o) in out.iter_mut().enumerate() {
            legendre_all(lmax, s.dot(&self.points[j]).clamp(-1.0, 1.0), &mut p);
            let mut acc = 0.0;
            for l in 0..=lmax {
                acc += c[l] * p[l];
            }
            *o = self.weights[j] * acc;
        }
    }

    /// Spherical-harmonic coefficients of nodal data with `ncomp`
    /// components, stored as coef[idx * ncomp + c].
    pub fn analyse<T>(&self, data: &[T], ncomp: usize) -> SphExpansion<T>
    where
        T: Copy + std::ops::Mul<f64, Output = T> + std::ops::AddAssign + Default,
    {
        let lmax = self.lmax();
        let nb = (lmax + 1) * (lmax + 1);
        let mut y = vec![0.0; nb];
        let mut coef = vec![T::default(); nb * ncomp];
        for (j, s) in self.points.iter().enumerate() {
            real_sh(lmax, s, &mut y);
            let w = self.weights[j];
            for b in 0..nb {
                let yw = y[b] * w;
                for c in 0..ncomp {
                    coef[b * ncomp + c] += data[j * ncomp + c] * yw;
                }
            }
        }
        SphExpansion { lmax, ncomp, coef }
    }
}

/// Truncated spherical-harmonic expansion of vector-valued data.
#[derive(Clone, Debug)]
pub struct SphExpansion<T> {
    pub lmax: usize,
    pub ncomp: usize,
    pub coef: Vec<T>,
}

impl<T> SphExpansion<T>
where
    T: Copy + std::ops::Mul<f64, Output = T> + std::ops::AddAssign + Default,
{
    pub fn eval(&self, s: &Vec3, out: &mut [T]) {
        let nb = (self.lmax + 1) * (self.lmax + 1);
        let mut y = vec![0.0; nb];
        real_sh(self.lmax, s, &mut y);
        for o in out.iter_mut() {
            *o = T::default();
        }
        for b in 0..nb {
            for c in 0..self.ncomp {
                out[c] += self.coef[b * self.ncomp + c] * y[b];
            }
        }
    }
}
