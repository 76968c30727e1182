//! Incident fields with closed-form values and Jacobians.

use super::{grad2_helmholtz, grad3_helmholtz, grad_helmholtz};
use crate::geometry::SurfaceQuadrature;
use crate::material::{validate_material, wavenumbers, Material};
use crate::{CMat3, CVec3, Error, Result, Vec3, C64, I};
use std::fmt;
use std::sync::Arc;

type ValueFn = Arc<dyn Fn(&Vec3) -> CVec3 + Send + Sync>;
type GradFn = Arc<dyn Fn(&Vec3) -> CMat3 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IncidentKind {
    PlaneP,
    PlaneS,
    PointSourceP,
    GradScalarPointSource,
}

/// Polarization of a plane wave. `S` carries the amplitude vector, which
/// must be orthogonal to the direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Polarization {
    P,
    S(Vec3),
}

/// A displacement field u with Jacobian J[l][m] = ∂u_l/∂x_m.
#[derive(Clone)]
pub struct IncidentField {
    pub kind: IncidentKind,
    /// Source point for point sources.
    pub source: Option<Vec3>,
    value: ValueFn,
    gradient: GradFn,
}

impl fmt::Debug for IncidentField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IncidentField")
            .field("kind", &self.kind)
            .field("source", &self.source)
            .finish()
    }
}

impl IncidentField {
    /// Field from explicit closures.
    pub fn from_fns(
        kind: IncidentKind,
        source: Option<Vec3>,
        value: impl Fn(&Vec3) -> CVec3 + Send + Sync + 'static,
        gradient: impl Fn(&Vec3) -> CMat3 + Send + Sync + 'static,
    ) -> Self {
        IncidentField {
            kind,
            source,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    pub fn value_at(&self, x: &Vec3) -> CVec3 {
        (self.value)(x)
    }

    pub fn gradient_at(&self, x: &Vec3) -> CMat3 {
        (self.gradient)(x)
    }

    /// Multiply the field by a constant.
    pub fn scaled(&self, s: C64) -> IncidentField {
        let v = self.value.clone();
        let g = self.gradient.clone();
        IncidentField {
            kind: self.kind,
            source: self.source,
            value: Arc::new(move |x| v(x) * s),
            gradient: Arc::new(move |x| g(x) * s),
        }
    }

    /// Discrete L²(∂D) norm on a quadrature.
    pub fn boundary_l2(&self, quad: &SurfaceQuadrature) -> f64 {
        quad.nodes
            .iter()
            .zip(&quad.weights)
            .map(|(x, w)| w * self.value_at(x).norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

fn check_direction(d: &Vec3) -> Result<()> {
    let n = d.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Parameter("zero propagation direction".into()));
    }
    if (n - 1.0).abs() > 1e-10 {
        return Err(Error::Parameter(format!("direction is not unit length (|d| = {n})")));
    }
    Ok(())
}

/// Plane P-wave d e^{i kp d·x} or S-wave a e^{i ks d·x}.
pub fn plane_wave(d: &Vec3, mat: &Material, omega: f64, pol: Polarization) -> Result<IncidentField> {
    check_direction(d)?;
    validate_material(mat)?;
    let wn = wavenumbers(mat, mat.effective_omega(omega))?;
    let d = *d;
    let (amp, k, kind) = match pol {
        Polarization::P => (d, wn.kp, IncidentKind::PlaneP),
        Polarization::S(a) => {
            if a.norm() == 0.0 || a.dot(&d).abs() > 1e-10 * a.norm() {
                return Err(Error::Parameter(
                    "S-wave amplitude must be nonzero and orthogonal to the direction".into(),
                ));
            }
            (a, wn.ks, IncidentKind::PlaneS)
        }
    };
    let ac = amp.map(C64::from);
    let dc = d.map(C64::from);
    let jac = ac * dc.transpose() * (I * k);
    Ok(IncidentField::from_fns(
        kind,
        None,
        move |x| ac * (I * k * d.dot(x)).exp(),
        move |x| jac * (I * k * d.dot(x)).exp(),
    ))
}

/// u = (kp²/ω²) ∇∇^T Φ_p(x, z) q, optionally divided by the discrete
/// L²(∂D) norm of ∇∇^T Φ_p(·, z) q.
pub fn point_source_p(
    z: &Vec3,
    q: &Vec3,
    mat: &Material,
    omega: f64,
    normalization: Option<&SurfaceQuadrature>,
) -> Result<IncidentField> {
    check_direction(q)?;
    validate_material(mat)?;
    let wn = wavenumbers(mat, mat.effective_omega(omega))?;
    let kp = wn.kp;
    let w = mat.effective_omega(omega);
    let z = *z;
    let qc = q.map(C64::from);
    let mut scale = kp * kp / (w * w);
    if let Some(quad) = normalization {
        let mut s = 0.0;
        for (x, wt) in quad.nodes.iter().zip(&quad.weights) {
            let h = grad2_helmholtz(x, &z, kp)
                .map_err(|_| Error::Singularity("point source lies on the surface".into()))?;
            s += wt * (h * qc).norm_squared();
        }
        scale /= s.sqrt();
    }
    Ok(IncidentField::from_fns(
        IncidentKind::PointSourceP,
        Some(z),
        move |x| match grad2_helmholtz(x, &z, kp) {
            Ok(h) => h * qc * C64::from(scale),
            Err(_) => CVec3::repeat(C64::new(f64::NAN, 0.0)),
        },
        move |x| match grad3_helmholtz(x, &z, kp) {
            Ok(t) => {
                // J[l][m] = Σ_n ∂_m ∂_l ∂_n Φ q_n
                let mut j = CMat3::zeros();
                for m in 0..3 {
                    let col = t[m] * qc;
                    for l in 0..3 {
                        j[(l, m)] = col[l] * scale;
                    }
                }
                j
            }
            Err(_) => CMat3::repeat(C64::new(f64::NAN, 0.0)),
        },
    ))
}

/// u = ∇_x Φ_p(x, z).
pub fn grad_scalar_point_source(z: &Vec3, mat: &Material, omega: f64) -> Result<IncidentField> {
    validate_material(mat)?;
    let kp = wavenumbers(mat, mat.effective_omega(omega))?.kp;
    let z = *z;
    Ok(IncidentField::from_fns(
        IncidentKind::GradScalarPointSource,
        Some(z),
        move |x| grad_helmholtz(x, &z, kp).unwrap_or_else(|_| CVec3::repeat(C64::new(f64::NAN, 0.0))),
        move |x| grad2_helmholtz(x, &z, kp).unwrap_or_else(|_| CMat3::repeat(C64::new(f64::NAN, 0.0))),
    ))
}
