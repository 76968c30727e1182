//! Numerical oracles shared by the integration tests and the acceptance
//! suite. Nothing here calls the solver paths it is used to check.
#![allow(dead_code)]

use elastoscatter::geometry::{build_surface_quadrature, Surface, SurfaceQuadrature};
use elastoscatter::kernels::{grad2_helmholtz, grad_helmholtz, traction_from_jacobian, LameKernel, Part};
use elastoscatter::material::Material;
use elastoscatter::operators::{assemble_kernel, boundary_limit, evaluate_potential, Flavor, KernelTerm};
use elastoscatter::{CMat3, CVec3, Vec3, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

pub fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n < 1.0 {
            return v / n;
        }
    }
}

/// Relative Navier residual of Γ at separation z by central differences of
/// Γ values only: |μΔΓ + (λ+μ)∇∇·Γ + ω²Γ| / max(|μΔΓ|, |ω²Γ|).
pub fn navier_fd_residual(k: &LameKernel, z: &Vec3) -> f64 {
    let h = 1e-4 * z.norm();
    let g = |d: &Vec3| k.single(&(z + d), Part::Full);
    let e = |i: usize| {
        let mut v = Vec3::zeros();
        v[i] = h;
        v
    };
    let g0 = g(&Vec3::zeros());
    let mut hess = [[CMat3::zeros(); 3]; 3];
    for p in 0..3 {
        hess[p][p] = (g(&e(p)) - g0 * C64::from(2.0) + g(&(-e(p)))) / C64::from(h * h);
        for q in p + 1..3 {
            let m = (g(&(e(p) + e(q))) - g(&(e(p) - e(q))) - g(&(e(q) - e(p))) + g(&(-e(p) - e(q))))
                / C64::from(4.0 * h * h);
            hess[p][q] = m;
            hess[q][p] = m;
        }
    }
    let lap = hess[0][0] + hess[1][1] + hess[2][2];
    let mut graddiv = CMat3::zeros();
    for j in 0..3 {
        for c in 0..3 {
            let mut s = C64::new(0.0, 0.0);
            for l in 0..3 {
                s += hess[j][l][(l, c)];
            }
            graddiv[(j, c)] = s;
        }
    }
    let w2 = k.omega * k.omega;
    let res = lap * C64::from(k.mu) + graddiv * C64::from(k.lambda + k.mu) + g0 * C64::from(w2);
    res.norm() / (lap.norm() * k.mu).max(g0.norm() * w2)
}

/// Largest relative deviation between the closed-form Hessian of Φ_k and
/// central differences of its closed-form gradient.
pub fn hessian_fd_error(x: &Vec3, y: &Vec3, k: f64) -> f64 {
    let r = (x - y).norm();
    let h = 1e-5 * r;
    let exact = grad2_helmholtz(x, y, k).unwrap();
    let mut fd = CMat3::zeros();
    for m in 0..3 {
        let mut d = Vec3::zeros();
        d[m] = h;
        let gp = grad_helmholtz(&(x + d), y, k).unwrap();
        let gm = grad_helmholtz(&(x - d), y, k).unwrap();
        let col = (gp - gm) / C64::from(2.0 * h);
        for l in 0..3 {
            fd[(l, m)] = col[l];
        }
    }
    (fd - exact).norm() / exact.norm()
}

/// (max over 1e3 random samples of the Navier residual, max Hessian error).
pub fn kernel_fd_sweep(samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_navier: f64 = 0.0;
    let mut worst_hess: f64 = 0.0;
    for _ in 0..samples {
        let mu = rng.random_range(0.5..3.0);
        let lambda = rng.random_range(-0.5 * mu..4.0);
        let omega = rng.random_range(0.3..5.0);
        let mat = Material::new(lambda, mu);
        let k = LameKernel::new(&mat, omega).unwrap();
        let y = random_unit(&mut rng) * rng.random_range(0.0..1.0);
        let x = y + random_unit(&mut rng) * rng.random_range(0.1..3.0);
        worst_navier = worst_navier.max(navier_fd_residual(&k, &(x - y)));
        worst_hess = worst_hess.max(hessian_fd_error(&x, &y, k.kp));
    }
    (worst_navier, worst_hess)
}

/// ‖Γ - Γ_0‖ at separations h = 1e-2 .. 1e-6 along a fixed direction.
pub fn kelvin_remainder_profile(mat: &Material, omega: f64) -> Vec<(f64, f64)> {
    let k = LameKernel::new(mat, omega).unwrap();
    let u = Vec3::new(0.48, -0.6, 0.64).normalize();
    (2..=6)
        .map(|e| {
            let h = 10f64.powi(-e);
            let full = k.single(&(u * h), Part::Full);
            let stat = LameKernel::kelvin(mat).unwrap().single(&(u * h), Part::Static);
            (h, (full - stat).norm())
        })
        .collect()
}

/// Smooth, not band-limited density on the surface.
pub fn smooth_density(y: &Vec3) -> CVec3 {
    let src = Vec3::new(2.4, 0.4, -0.3);
    let r = (y - src).norm();
    CVec3::new(
        C64::new((0.8 * y.x).exp(), 0.2 * y.z),
        C64::new(1.0 / r, (1.3 * y.y).sin()),
        C64::new(y.x * y.y - 0.5, 0.0),
    )
}

#[derive(Clone, Copy, Debug)]
pub struct JumpErrors {
    pub nodes: usize,
    /// single layer: interior and exterior limits against S φ
    pub single: f64,
    /// double layer: limits against K φ ∓ φ/2
    pub double: f64,
    /// traction of the single layer: limits against K' φ ± φ/2
    pub adjoint: f64,
    /// traction of the double layer: interior against exterior limit
    pub traction_double: f64,
}

impl JumpErrors {
    pub fn max(&self) -> f64 {
        self.single.max(self.double).max(self.adjoint).max(self.traction_double)
    }
}

fn rel_l2(quad: &SurfaceQuadrature, idx: &[usize], a: &[CVec3], b: &[CVec3]) -> f64 {
    let (mut e, mut n) = (0.0, 0.0);
    for (k, &j) in idx.iter().enumerate() {
        e += quad.weights[j] * (a[k] - b[k]).norm_squared();
        n += quad.weights[j] * b[k].norm_squared();
    }
    (e / n).sqrt()
}

/// Jump relations of the four layer flavours on the unit sphere with `nt`
/// rings, checked at every `stride`-th node.
pub fn jump_errors(mat: &Material, omega: f64, nt: usize, stride: usize) -> JumpErrors {
    let s = Surface::sphere(Vec3::zeros(), 1.0).unwrap();
    let q = build_surface_quadrature(&s, nt).unwrap();
    let k = Arc::new(LameKernel::new(mat, omega).unwrap());
    let mu = mat.mu;
    let phi: Vec<CVec3> = q.nodes.iter().map(smooth_density).collect();
    let idx: Vec<usize> = (0..q.len()).step_by(stride).collect();
    let on = |flavor: Flavor| -> Vec<CVec3> {
        let t = KernelTerm::new(1.0, k.clone(), flavor);
        let (m, _) = assemble_kernel(&[t], &q, &q, true, None).unwrap();
        let flat: Vec<C64> = phi.iter().flat_map(|p| [p.x, p.y, p.z]).collect();
        let mut out = Vec::with_capacity(idx.len());
        for &i in &idx {
            let mut v = CVec3::zeros();
            for a in 0..3 {
                let mut s = C64::new(0.0, 0.0);
                for c in 0..flat.len() {
                    s += m[(3 * i + a, c)] * flat[c];
                }
                v[a] = s;
            }
            out.push(v);
        }
        out
    };
    let delta0 = 0.01;
    let lim = |flavor: Flavor, side: f64, gamma: Option<f64>| {
        let t = KernelTerm::new(1.0, k.clone(), flavor);
        boundary_limit(&phi, &[t], &q, &idx, side, gamma, delta0).unwrap()
    };
    let half: Vec<CVec3> = idx.iter().map(|&i| phi[i] * C64::from(0.5)).collect();
    let shift = |a: &[CVec3], sign: f64| -> Vec<CVec3> {
        a.iter().zip(&half).map(|(v, h)| v + h * C64::from(sign)).collect()
    };

    let s_on = on(Flavor::Single);
    let single = rel_l2(&q, &idx, &lim(Flavor::Single, -1.0, None), &s_on)
        .max(rel_l2(&q, &idx, &lim(Flavor::Single, 1.0, None), &s_on));

    let d_on = on(Flavor::Double { tau: mu });
    let double = rel_l2(&q, &idx, &lim(Flavor::Double { tau: mu }, -1.0, None), &shift(&d_on, -1.0))
        .max(rel_l2(&q, &idx, &lim(Flavor::Double { tau: mu }, 1.0, None), &shift(&d_on, 1.0)));

    let a_on = on(Flavor::AdjointDouble { tau: mu });
    let adjoint = rel_l2(&q, &idx, &lim(Flavor::Single, -1.0, Some(mu)), &shift(&a_on, 1.0))
        .max(rel_l2(&q, &idx, &lim(Flavor::Single, 1.0, Some(mu)), &shift(&a_on, -1.0)));

    let ti = lim(Flavor::Double { tau: mu }, -1.0, Some(mu));
    let te = lim(Flavor::Double { tau: mu }, 1.0, Some(mu));
    let traction_double = rel_l2(&q, &idx, &ti, &te);

    JumpErrors {
        nodes: q.len(),
        single,
        double,
        adjoint,
        traction_double,
    }
}

/// Observed orders log(e_k / e_{k+1}) / log(n_{k+1} / n_k) in the ring count.
pub fn observed_orders(levels: &[usize], errs: &[f64]) -> Vec<f64> {
    levels
        .windows(2)
        .zip(errs.windows(2))
        .map(|(l, e)| (e[0] / e[1]).ln() / (l[1] as f64 / l[0] as f64).ln())
        .collect()
}

/// Field Γ(x - z) q and its Jacobian.
pub fn point_field(k: &LameKernel, x: &Vec3, z: &Vec3, q: &CVec3) -> (CVec3, CMat3) {
    let g = k.derivs(&(x - z), 1, Part::Full);
    let mut j = CMat3::zeros();
    for m in 0..3 {
        j.set_column(m, &(g.d1[m] * q));
    }
    (g.g * q, j)
}

/// Max relative error of the exterior Somigliana representation
/// u = DL[u] - SL[T u] for a point source inside the unit sphere, at
/// `n_targets` exterior points.
pub fn betti_error(mat: &Material, omega: f64, nt: usize, n_targets: usize) -> f64 {
    let s = Surface::sphere(Vec3::zeros(), 1.0).unwrap();
    let q = build_surface_quadrature(&s, nt).unwrap();
    let k = Arc::new(LameKernel::new(mat, omega).unwrap());
    let z = Vec3::new(0.2, -0.1, 0.15);
    let qv = CVec3::new(C64::new(1.0, 0.0), C64::new(-0.4, 0.3), C64::new(0.6, 0.0));
    let mut u = Vec::with_capacity(q.len());
    let mut t = Vec::with_capacity(q.len());
    for (x, n) in q.nodes.iter().zip(&q.normals) {
        let (v, j) = point_field(&k, x, &z, &qv);
        u.push(v);
        t.push(traction_from_jacobian(&j, n, mat.lambda, mat.mu, mat.mu));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let targets: Vec<Vec3> = (0..n_targets)
        .map(|_| random_unit(&mut rng) * rng.random_range(1.2..4.0))
        .collect();
    let dl = KernelTerm::new(1.0, k.clone(), Flavor::Double { tau: mat.mu });
    let sl = KernelTerm::new(1.0, k.clone(), Flavor::Single);
    let a = evaluate_potential(&u, &[dl], &q, &targets).unwrap();
    let b = evaluate_potential(&t, &[sl], &q, &targets).unwrap();
    targets
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let exact = point_field(&k, x, &z, &qv).0;
            (a[i] - b[i] - exact).norm() / exact.norm()
        })
        .fold(0.0, f64::max)
}
