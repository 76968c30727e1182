//! Lamé materials, wavenumbers and the coupling constants that make the
//! transmission system normally solvable.

use crate::{Error, Result, Vec3};
use std::fmt;
use std::sync::Arc;

/// Relative mass density, either constant or a field over space.
#[derive(Clone)]
pub enum Density {
    Constant(f64),
    Field(Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>),
}

impl Density {
    pub fn at(&self, x: &Vec3) -> f64 {
        match self {
            Density::Constant(r) => *r,
            Density::Field(f) => f(x),
        }
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            Density::Constant(r) => Some(*r),
            Density::Field(_) => None,
        }
    }
}

impl Default for Density {
    fn default() -> Self {
        Density::Constant(1.0)
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Constant(r) => write!(f, "Constant({r})"),
            Density::Field(_) => write!(f, "Field(..)"),
        }
    }
}

/// Isotropic Lamé material.
#[derive(Clone, Debug)]
pub struct Material {
    pub lambda: f64,
    pub mu: f64,
    pub density: Density,
}

impl Material {
    pub fn new(lambda: f64, mu: f64) -> Self {
        Material {
            lambda,
            mu,
            density: Density::default(),
        }
    }

    pub fn with_density(mut self, density: Density) -> Self {
        self.density = density;
        self
    }

    /// Frequency seen by the kernel when the density is a constant `rho`:
    /// `rho omega^2 = omega_eff^2`.
    pub fn effective_omega(&self, omega: f64) -> f64 {
        omega * self.density.constant().unwrap_or(1.0).sqrt()
    }

    /// `mu / (lambda + 2 mu)`.
    pub fn c(&self) -> f64 {
        self.mu / (self.lambda + 2.0 * self.mu)
    }

    /// `(lambda + mu) / (lambda + 2 mu)`.
    pub fn b(&self) -> f64 {
        (self.lambda + self.mu) / (self.lambda + 2.0 * self.mu)
    }
}

/// Angular frequency and the two body-wave wavenumbers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wavenumbers {
    pub omega: f64,
    pub kp: f64,
    pub ks: f64,
}

/// Checks `mu > 0` and `3 lambda + 2 mu > 0`.
pub fn validate_material(mat: &Material) -> Result<()> {
    if !(mat.lambda.is_finite() && mat.mu.is_finite()) {
        return Err(Error::Parameter("Lamé constants must be finite".into()));
    }
    if mat.mu <= 0.0 {
        return Err(Error::Parameter(format!("mu > 0 violated (mu = {})", mat.mu)));
    }
    let bulk = 3.0 * mat.lambda + 2.0 * mat.mu;
    if bulk <= 0.0 {
        return Err(Error::Parameter(format!(
            "3*lambda + 2*mu > 0 violated (3*lambda + 2*mu = {bulk})"
        )));
    }
    Ok(())
}

/// `kp = omega / sqrt(lambda + 2 mu)`, `ks = omega / sqrt(mu)` (unit density).
pub fn wavenumbers(mat: &Material, omega: f64) -> Result<Wavenumbers> {
    validate_material(mat)?;
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::Parameter(format!("omega must be positive, got {omega}")));
    }
    Ok(Wavenumbers {
        omega,
        kp: omega / (mat.lambda + 2.0 * mat.mu).sqrt(),
        ks: omega / mat.mu.sqrt(),
    })
}

/// Constants alpha, beta, kappa, gamma and b for the interior/exterior pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingConstants {
    pub alpha_i: f64,
    pub alpha_e: f64,
    pub beta_i: f64,
    pub beta_e: f64,
    pub kappa_i: f64,
    pub kappa_e: f64,
    pub gamma_i: f64,
    pub gamma_e: f64,
    pub b_i: f64,
    pub b_e: f64,
}

pub fn coupling_constants(mat_i: &Material, mat_e: &Material) -> Result<CouplingConstants> {
    validate_material(mat_i)?;
    validate_material(mat_e)?;
    let (mi, me) = (mat_i.mu, mat_e.mu);
    let b_i = mat_i.b();
    let b_e = mat_e.b();
    let alpha_i = mi * me / (mi * (mi + me));
    let alpha_e = mi * me / (me * (mi + me));
    let den = b_i * mi + b_e * me;
    let kappa_e = me * (b_i * mi - b_e * me) / den;
    let kappa_i = mi * (b_e * me - b_i * mi) / den;
    let gamma_e = me * (me - mi) / (mi + me);
    let gamma_i = mi * (mi - me) / (mi + me);
    let cc = CouplingConstants {
        alpha_i,
        alpha_e,
        beta_i: -alpha_i,
        beta_e: -alpha_e,
        kappa_i,
        kappa_e,
        gamma_i,
        gamma_e,
        b_i,
        b_e,
    };
    let shift = -2.0 * mi * me / (mi + me);
    let tol = 1e-14 * (mi.abs() + me.abs());
    debug_assert!(((gamma_i - mi) - shift).abs() <= tol);
    debug_assert!(((gamma_e - me) - shift).abs() <= tol);
    Ok(cc)
}
