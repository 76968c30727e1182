//! Radial functions f(R) and their iterated derivatives D1^n f with
//! D1 = (1/R) d/dR. A scalar radial function differentiated with respect to
//! z = x - y gives tensors built from z and D1^n f, which is how every
//! elastic kernel is assembled.

use crate::{C64, I};

const NMAX: usize = 5;
const LOW: i32 = -10;
const WIDTH: usize = 12;
const SERIES_TERMS: usize = 30;

/// Coefficients of D1^n (e^{ikR} Σ_m c_m R^m), m in [LOW, LOW + WIDTH).
#[derive(Clone, Debug)]
pub(crate) struct ExpPoly {
    k: f64,
    coef: [[C64; WIDTH]; NMAX],
}

impl ExpPoly {
    /// f = scale * e^{ikR} / R
    pub(crate) fn spherical(k: f64, scale: f64) -> Self {
        let mut coef = [[C64::new(0.0, 0.0); WIDTH]; NMAX];
        coef[0][(-1 - LOW) as usize] = C64::new(scale, 0.0);
        for n in 1..NMAX {
            for idx in 0..WIDTH {
                let c = coef[n - 1][idx];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let m = idx as i32 + LOW;
                // e^{ikR} R^m -> e^{ikR} (ik R^{m-1} + m R^{m-2})
                let i1 = (m - 1 - LOW) as usize;
                let i2 = (m - 2 - LOW) as usize;
                coef[n][i1] += I * k * c;
                if m != 0 {
                    coef[n][i2] += c * m as f64;
                }
            }
        }
        ExpPoly { k, coef }
    }

    pub(crate) fn eval(&self, r: f64, out: &mut [C64]) {
        let e = (I * self.k * r).exp();
        let rinv = 1.0 / r;
        let mut pw = [0.0; WIDTH];
        // pw[idx] = R^{idx + LOW}
        let mut p = rinv.powi(-LOW);
        for v in pw.iter_mut() {
            *v = p;
            p *= r;
        }
        for (n, o) in out.iter_mut().enumerate() {
            let mut s = C64::new(0.0, 0.0);
            for idx in 0..WIDTH {
                s += self.coef[n][idx] * pw[idx];
            }
            *o = e * s;
        }
    }
}

/// Σ c_i R^{lo + i} together with its D1 iterates.
#[derive(Clone, Debug)]
pub(crate) struct Series {
    lo: [i32; NMAX],
    coef: [Vec<C64>; NMAX],
}

impl Series {
    pub(crate) fn new(lo: i32, c: Vec<C64>) -> Self {
        let mut los = [0; NMAX];
        let mut coefs: [Vec<C64>; NMAX] = Default::default();
        los[0] = lo;
        coefs[0] = c;
        for n in 1..NMAX {
            los[n] = los[n - 1] - 2;
            coefs[n] = coefs[n - 1]
                .iter()
                .enumerate()
                .map(|(i, c)| c * (los[n - 1] + i as i32) as f64)
                .collect();
        }
        Series {
            lo: los,
            coef: coefs,
        }
    }

    pub(crate) fn eval(&self, r: f64, out: &mut [C64]) {
        for (n, o) in out.iter_mut().enumerate() {
            let c = &self.coef[n];
            let mut s = C64::new(0.0, 0.0);
            for v in c.iter().rev() {
                s = s * r + v;
            }
            *o = s * r.powi(self.lo[n]);
        }
    }
}

/// Series of the Helmholtz kernel e^{ikR}/(4πR) minus its first `skip`
/// terms; lowest power R^{skip-1}.
pub(crate) fn helmholtz_series(k: f64, skip: usize) -> Series {
    let mut c = Vec::with_capacity(SERIES_TERMS);
    let mut term = C64::new(1.0 / (4.0 * std::f64::consts::PI), 0.0);
    for n in 0..SERIES_TERMS + skip {
        if n >= skip {
            c.push(term);
        }
        term *= I * k / (n as f64 + 1.0);
    }
    Series::new(skip as i32 - 1, c)
}

/// Series of g = (Φ_s - Φ_p)/ω² with its R^0 term (annihilated by D1)
/// and, when `remove_static`, its R^1 term (the Kelvin part -bR) dropped.
/// `sp`, `pp` are 1/sqrt(mu), 1/sqrt(lambda + 2 mu), so k = ω * sp etc.
pub(crate) fn g_series(omega: f64, sp: f64, pp: f64, remove_static: bool) -> Series {
    // coefficient of R^{n-1}: i^n ω^{n-2} (sp^n - pp^n) / (4π n!)
    let first = if remove_static { 3 } else { 2 };
    let mut c = Vec::with_capacity(SERIES_TERMS);
    for n in first..first + SERIES_TERMS {
        let mut fact = 1.0;
        for j in 2..=n {
            fact *= j as f64;
        }
        let ipow = I.powi(n as i32);
        let w = omega.powi(n as i32 - 2);
        let diff = sp.powi(n as i32) - pp.powi(n as i32);
        c.push(ipow * (w * diff / (4.0 * std::f64::consts::PI * fact)));
    }
    Series::new(first as i32 - 1, c)
}

/// D1^n R^m for a single power, used for the static parts.
pub(crate) fn power_derivs(scale: f64, m: i32, r: f64, out: &mut [C64]) {
    let mut c = scale;
    let mut p = m;
    for o in out.iter_mut() {
        *o = C64::new(c * r.powi(p), 0.0);
        c *= p as f64;
        p -= 2;
    }
}

impl Series {
    pub(crate) fn scale_in_place(&mut self, f: f64) {
        for c in self.coef.iter_mut() {
            for v in c.iter_mut() {
                *v *= f;
            }
        }
    }
}
