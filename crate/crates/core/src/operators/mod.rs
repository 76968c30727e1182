//! Nyström discretization of boundary integral operators and evaluation of
//! layer potentials off the surface.
//!
//! On parametric surfaces every same-surface block is integrated with a
//! polar rule centred at the target node, with the density carried to the
//! polar nodes by hyperinterpolation on the sphere grid. The α nodes come
//! in antipodal pairs, so odd principal-value singularities cancel exactly
//! and the remaining integrand is analytic in ρ.

mod assemble;
mod potential;

pub use assemble::{assemble, assemble_combination, assemble_kernel, PolarParams};
pub use potential::{
    boundary_limit, evaluate_potential, far_amplitudes, potential_matrix, extrapolated_limit, neville_at_zero, traction_of_potential,
    LIMIT_POINTS, NEAR_FACTOR,
};

use crate::kernels::{LameKernel, Part};
use crate::linalg::{matvec, CMat};
use crate::material::Material;
use crate::{CMat3, CVec3, Result, Vec3, C64};
use std::sync::Arc;

/// Kernel flavour of a boundary operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Flavor {
    /// Γ(x, y)
    Single,
    /// T^τ at y applied to Γ, normal at the source.
    Double { tau: f64 },
    /// T^τ at x applied to Γ, normal at the target.
    AdjointDouble { tau: f64 },
    /// T^γ at x of the double layer with parameter τ.
    TractionTraction { gamma: f64, tau: f64 },
}

impl Flavor {
    /// Flavour obtained by applying T^γ at the target.
    pub fn traction(self, gamma: f64) -> Result<Flavor> {
        match self {
            Flavor::Single => Ok(Flavor::AdjointDouble { tau: gamma }),
            Flavor::Double { tau } => Ok(Flavor::TractionTraction { gamma, tau }),
            _ => Err(crate::Error::Configuration(format!(
                "traction of a {self:?} potential is not defined"
            ))),
        }
    }

    /// Principal-value (strongly singular or worse) on the surface.
    pub fn is_principal_value(self) -> bool {
        !matches!(self, Flavor::Single)
    }

    pub fn needs_target_normal(self) -> bool {
        matches!(self, Flavor::AdjointDouble { .. } | Flavor::TractionTraction { .. })
    }
}

/// Which material's kernel an operator uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelSide {
    Interior,
    Exterior,
}

/// Description of one boundary operator block.
#[derive(Clone, Debug)]
pub struct BoundaryOperatorSpec {
    pub side: KernelSide,
    pub material: Material,
    pub omega: f64,
    /// Surface ids of the target (left) and source (right) quadratures.
    pub left: usize,
    pub right: usize,
    pub flavor: Flavor,
    pub part: Part,
}

impl BoundaryOperatorSpec {
    pub fn new(side: KernelSide, material: &Material, omega: f64, left: usize, right: usize, flavor: Flavor) -> Self {
        BoundaryOperatorSpec {
            side,
            material: material.clone(),
            omega,
            left,
            right,
            flavor,
            part: Part::Full,
        }
    }

    pub fn with_part(mut self, part: Part) -> Self {
        self.part = part;
        self
    }

    pub fn kernel(&self) -> Result<LameKernel> {
        match self.part {
            Part::Static => LameKernel::kelvin(&self.material),
            _ => LameKernel::new(&self.material, self.omega),
        }
    }
}

/// c · flavour(kernel) evaluated on (x, n_x, y, n_y).
#[derive(Clone, Debug)]
pub struct KernelTerm {
    pub coef: C64,
    pub kernel: Arc<LameKernel>,
    pub flavor: Flavor,
    pub part: Part,
}

impl KernelTerm {
    pub fn new(coef: impl Into<C64>, kernel: Arc<LameKernel>, flavor: Flavor) -> Self {
        KernelTerm {
            coef: coef.into(),
            kernel,
            flavor,
            part: Part::Full,
        }
    }

    pub fn from_spec(coef: impl Into<C64>, spec: &BoundaryOperatorSpec) -> Result<Self> {
        Ok(KernelTerm {
            coef: coef.into(),
            kernel: Arc::new(spec.kernel()?),
            flavor: spec.flavor,
            part: spec.part,
        })
    }

    pub fn eval(&self, x: &Vec3, nx: &Vec3, y: &Vec3, ny: &Vec3) -> CMat3 {
        let z = x - y;
        let k = &self.kernel;
        let m = match self.flavor {
            Flavor::Single => k.single(&z, self.part),
            Flavor::Double { tau } => k.double(&z, ny, tau, self.part),
            Flavor::AdjointDouble { tau } => k.adjoint_double(&z, nx, tau, self.part),
            Flavor::TractionTraction { gamma, tau } => k.traction_double(&z, nx, ny, gamma, tau, self.part),
        };
        m * self.coef
    }
}

/// Sum of kernel terms.
pub fn eval_terms(terms: &[KernelTerm], x: &Vec3, nx: &Vec3, y: &Vec3, ny: &Vec3) -> CMat3 {
    let mut m = CMat3::zeros();
    for t in terms {
        m += t.eval(x, nx, y, ny);
    }
    m
}

/// How the diagonal (self-interaction) part of a block was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagonalTreatment {
    /// Different surfaces, plain quadrature.
    None,
    /// Polar rule with antipodal pairs on a parametric surface.
    PolarRule,
    /// Duffy rule on the node's own cell of a mesh (single layer only).
    Duffy,
}

/// Dense Nyström block: entry (3i + a, 3j + b) acts on component b of the
/// density at source node j and yields component a at target node i.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub matrix: CMat,
    pub specs: Vec<(C64, BoundaryOperatorSpec)>,
    pub diagonal: DiagonalTreatment,
}

impl DiscreteOperator {
    pub fn apply(&self, density: &[CVec3]) -> Vec<CVec3> {
        unflatten(&matvec(&self.matrix, &flatten(density)))
    }
}

pub fn flatten(v: &[CVec3]) -> Vec<C64> {
    v.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

pub fn unflatten(v: &[C64]) -> Vec<CVec3> {
    v.chunks(3).map(|c| CVec3::new(c[0], c[1], c[2])).collect()
}
