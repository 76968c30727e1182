//! Dense direct solves and a restarted GMRES for matrix-free operators.

use crate::{exec, Error, Result, C64};
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;

/// Dense complex matrix.
pub type CMat = Mat<C64>;

/// Pivot ratio below which a factorization is reported as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

/// Cached LU factorization of a square matrix.
pub struct LuSolver {
    lu: PartialPivLu<C64>,
    n: usize,
    pivot_ratio: f64,
}

impl LuSolver {
    pub fn new(a: &CMat) -> Result<Self> {
        assert_eq!(a.nrows(), a.ncols(), "LU of a non-square matrix");
        faer::set_global_parallelism(exec::dense_par());
        let lu = a.partial_piv_lu();
        let u = lu.U();
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..u.nrows() {
            let v = u[(i, i)].norm();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        if !(ratio > SINGULAR_PIVOT_RATIO) {
            return Err(Error::SingularSystem(ratio));
        }
        Ok(LuSolver {
            lu,
            n: a.nrows(),
            pivot_ratio: ratio,
        })
    }

    /// Smallest over largest pivot magnitude, a cheap conditioning proxy.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        assert_eq!(b.len(), self.n);
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solve for every column of `b`.
    pub fn solve_mat(&self, b: &CMat) -> CMat {
        self.lu.solve(b)
    }
}

/// y = A x, rows computed independently so the result does not depend on
/// the thread count.
pub fn matvec(a: &CMat, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len());
    exec::map(a.nrows(), |i| {
        let mut s = C64::new(0.0, 0.0);
        for (j, xj) in x.iter().enumerate() {
            s += a[(i, j)] * xj;
        }
        s
    })
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Σ conj(x_i) y_i
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Relative residual ‖A x - b‖ / ‖b‖ (or the absolute residual for b = 0).
pub fn relative_residual(a: &CMat, x: &[C64], b: &[C64]) -> f64 {
    let ax = matvec(a, x);
    let r: Vec<C64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm(b);
    if nb > 0.0 {
        norm(&r) / nb
    } else {
        norm(&r)
    }
}

/// Outcome of an iterative solve.
#[derive(Clone, Debug)]
pub struct IterativeSolution {
    pub x: Vec<C64>,
    pub iterations: usize,
    pub residual: f64,
    /// Relative residual after each inner iteration.
    pub history: Vec<f64>,
}

/// Restarted GMRES for A x = b with a zero initial guess.
pub fn gmres<F>(apply: F, b: &[C64], tol: f64, maxiter: usize, restart: usize) -> Result<IterativeSolution>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let n = b.len();
    let nb = norm(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut history = Vec::new();
    if nb == 0.0 {
        return Ok(IterativeSolution {
            x,
            iterations: 0,
            residual: 0.0,
            history,
        });
    }
    let m = restart.max(1);
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < maxiter {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm(&r);
        rel = beta / nb;
        if rel <= tol {
            break;
        }
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|c| c / beta).collect()];
        let mut h = vec![vec![C64::new(0.0, 0.0); m]; m + 1];
        let mut cs = vec![C64::new(0.0, 0.0); m];
        let mut sn = vec![C64::new(0.0, 0.0); m];
        let mut g = vec![C64::new(0.0, 0.0); m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut k_used = 0;
        for k in 0..m {
            if iterations >= maxiter {
                break;
            }
            iterations += 1;
            let mut w = apply(&v[k]);
            // modified Gram-Schmidt, twice for stability
            for _ in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let c = dot(vi, &w);
                    h[i][k] += c;
                    for (wj, vj) in w.iter_mut().zip(vi) {
                        *wj -= c * vj;
                    }
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = C64::new(hn, 0.0);
            for i in 0..k {
                let t = cs[i].conj() * h[i][k] + sn[i].conj() * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            cs[k] = c;
            sn[k] = s;
            h[k][k] = c.conj() * h[k][k] + s.conj() * h[k + 1][k];
            h[k + 1][k] = C64::new(0.0, 0.0);
            g[k + 1] = -s * g[k];
            g[k] = c.conj() * g[k];
            k_used = k + 1;
            rel = g[k + 1].norm() / nb;
            history.push(rel);
            if rel <= tol || hn == 0.0 {
                break;
            }
            v.push(w.iter().map(|c| c / hn).collect());
        }
        // back substitution
        let mut y = vec![C64::new(0.0, 0.0); k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&v[j]) {
                *xi += yj * vi;
            }
        }
        if rel <= tol {
            break;
        }
    }
    let ax = apply(&x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let residual = norm(&r) / nb;
    if rel > tol || residual > tol * 10.0 {
        return Err(Error::NoConvergence {
            iterations,
            residual,
            history,
        });
    }
    Ok(IterativeSolution {
        x,
        iterations,
        residual,
        history,
    })
}

/// Rotation (c, s) with [c̄ s̄; -s c] [a; b] = [r; 0].
fn givens(a: C64, b: C64) -> (C64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (C64::new(0.0, 0.0), b / nb);
    }
    let r = (na * na + nb * nb).sqrt();
    let ph = a / na;
    (C64::new(na / r, 0.0), b * ph.conj() / r)
}
