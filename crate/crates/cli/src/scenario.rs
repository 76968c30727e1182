//! Scenario files: TOML with one table per section. See `scenarios/` for
//! annotated examples and README.md for the full key list.

use anyhow::{bail, ensure, Context, Result};
use elastoscatter::geometry::{build_surface_quadrature, load_mesh, Surface};
use elastoscatter::kernels::{grad_scalar_point_source, plane_wave, point_source_p, IncidentField, Polarization};
use elastoscatter::material::{validate_material, Density, Material};
use elastoscatter::Vec3;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    /// Seed for every sampled quantity (symbol sweeps).
    #[serde(default)]
    pub seed: u64,
    pub geometry: Geometry,
    pub materials: Materials,
    pub incidence: Option<Incidence>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub outputs: Outputs,
    pub probe: Option<ProbeSettings>,
    pub itp: Option<ItpSettings>,
    pub symbol: Option<SymbolSettings>,
    pub convergence: Option<ConvergenceSettings>,
    /// Directory of the scenario file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Geometry {
    pub d: Shape,
    pub d_b: Option<Shape>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    Sphere {
        #[serde(default)]
        center: [f64; 3],
        radius: f64,
    },
    Ellipsoid {
        #[serde(default)]
        center: [f64; 3],
        axes: [f64; 3],
    },
    Mesh {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lame {
    pub lambda: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Materials {
    pub interior: Lame,
    pub exterior: Lame,
    pub omega: f64,
    /// Relative density inside D.
    #[serde(default)]
    pub density: DensitySpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Constant {
        value: f64,
    },
    /// 1 + amplitude·exp(1 - 1/(1 - |x-c|²/r²)) inside the ball, 1 outside.
    Bump {
        amplitude: f64,
        radius: f64,
        #[serde(default)]
        center: [f64; 3],
    },
    /// Piecewise linear in |x - c| through the table, constant past its ends.
    Radial {
        r: Vec<f64>,
        rho: Vec<f64>,
        #[serde(default)]
        center: [f64; 3],
    },
    /// Trilinear interpolation on a lattice, x fastest; clamped outside.
    Table {
        origin: [f64; 3],
        spacing: f64,
        dims: [usize; 3],
        values: Vec<f64>,
    },
}

impl Default for DensitySpec {
    fn default() -> Self {
        DensitySpec::Constant { value: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Incidence {
    PlaneP {
        direction: [f64; 3],
    },
    PlaneS {
        direction: [f64; 3],
        polarization: [f64; 3],
    },
    PointSourceP {
        source: [f64; 3],
        moment: [f64; 3],
    },
    GradPointSource {
        source: [f64; 3],
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Gauss-Legendre rings on ∂D (or subdivision level of mesh faces).
    pub order: usize,
    /// Rings on ∂D_b.
    pub order_b: usize,
    /// Volume grid spacing for the medium problem.
    pub grid_h: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Margin for the normal-type test of the symbol determinant.
    pub margin: f64,
    /// Residuals are evaluated at every `stride`-th boundary node.
    pub stride: usize,
    /// Smallest offset of the one-sided limit extrapolation.
    pub delta0: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            order: 8,
            order_b: 6,
            grid_h: 0.1,
            tol: 1e-10,
            max_iter: 300,
            margin: elastoscatter::symbolcheck::DEFAULT_MARGIN,
            stride: 7,
            delta0: 0.01,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    /// Polar and azimuthal counts of the far-field direction grid.
    pub farfield_theta: usize,
    pub farfield_phi: usize,
    /// Points where the scattered field is written.
    pub targets: Vec<[f64; 3]>,
    pub flux_radii: Vec<f64>,
    pub flux_order: usize,
    /// Radii in exterior P wavelengths for the far-field remainder fit.
    pub remainder_wavelengths: Vec<f64>,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs {
            farfield_theta: 6,
            farfield_phi: 8,
            targets: vec![],
            flux_radii: vec![2.0, 4.0, 8.0],
            flux_order: 24,
            remainder_wavelengths: vec![1e2, 1e3, 1e4],
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSettings {
    /// Direction from the center of D that selects z*.
    pub s_hat: [f64; 3],
    pub delta: f64,
    #[serde(default = "default_j_max")]
    pub j_max: usize,
    #[serde(default = "default_d0_factor")]
    pub d0_factor: f64,
    #[serde(default = "default_fit_from")]
    pub fit_from: usize,
    /// Quadrature order for the boundary-data norms.
    #[serde(default = "default_probe_order")]
    pub order: usize,
}

fn default_j_max() -> usize {
    32
}
fn default_d0_factor() -> f64 {
    elastoscatter::probes::DEFAULT_D0_FACTOR
}
fn default_fit_from() -> usize {
    elastoscatter::probes::DEFAULT_FIT_FROM
}
fn default_probe_order() -> usize {
    12
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItpSettings {
    /// Radius of the ball for λ₁; defaults to the sphere radius of D.
    pub radius: Option<f64>,
    /// Density bounds; default to the range of the density field.
    pub rho_inf: Option<f64>,
    pub rho_sup: Option<f64>,
    #[serde(default = "default_fd_cells")]
    pub fd_cells: usize,
}

fn default_fd_cells() -> usize {
    400
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSettings {
    /// Extra random material pairs written after the scenario pair.
    #[serde(default)]
    pub sweep: usize,
    #[serde(default = "default_mu_range")]
    pub mu_range: [f64; 2],
    #[serde(default = "default_lambda_max")]
    pub lambda_max: f64,
}

fn default_mu_range() -> [f64; 2] {
    [0.1, 5.0]
}
fn default_lambda_max() -> f64 {
    5.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceKind {
    Transmission,
    Medium,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSettings {
    pub kind: ConvergenceKind,
    /// Ring counts (transmission) or cells per diameter (medium).
    pub levels: Vec<usize>,
}

pub fn v3(a: &[f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

/// Read and parse a scenario; toml reports line and column of bad fields.
pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
    let mut s: Scenario = toml::from_str(&text).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(s)
}

impl Shape {
    pub fn surface(&self, base: &Path) -> Result<Surface> {
        Ok(match self {
            Shape::Sphere { center, radius } => Surface::sphere(v3(center), *radius)?,
            Shape::Ellipsoid { center, axes } => Surface::ellipsoid(v3(center), v3(axes))?,
            Shape::Mesh { path } => {
                let p = base.join(path);
                load_mesh(&p).with_context(|| format!("mesh {}", p.display()))?
            }
        })
    }
}

impl DensitySpec {
    pub fn density(&self) -> Result<Density> {
        Ok(match self.clone() {
            DensitySpec::Constant { value } => Density::Constant(value),
            DensitySpec::Bump { amplitude, radius, center } => {
                ensure!(radius > 0.0, "density.radius must be positive");
                let c = v3(&center);
                Density::Field(Arc::new(move |x: &Vec3| {
                    let r2 = (x - c).norm_squared() / (radius * radius);
                    if r2 < 1.0 {
                        1.0 + amplitude * (1.0 - 1.0 / (1.0 - r2)).exp()
                    } else {
                        1.0
                    }
                }))
            }
            DensitySpec::Radial { r, rho, center } => {
                ensure!(!r.is_empty() && r.len() == rho.len(), "density.r and density.rho must have equal nonzero length");
                ensure!(r.windows(2).all(|w| w[1] > w[0]), "density.r must be increasing");
                let c = v3(&center);
                Density::Field(Arc::new(move |x: &Vec3| {
                    let d = (x - c).norm();
                    let k = r.partition_point(|&t| t <= d);
                    if k == 0 {
                        rho[0]
                    } else if k == r.len() {
                        rho[r.len() - 1]
                    } else {
                        let t = (d - r[k - 1]) / (r[k] - r[k - 1]);
                        rho[k - 1] * (1.0 - t) + rho[k] * t
                    }
                }))
            }
            DensitySpec::Table { origin, spacing, dims, values } => {
                ensure!(spacing > 0.0, "density.spacing must be positive");
                ensure!(dims.iter().all(|&n| n >= 2), "density.dims must be at least 2 per axis");
                ensure!(
                    values.len() == dims[0] * dims[1] * dims[2],
                    "density.values has {} entries, dims need {}",
                    values.len(),
                    dims[0] * dims[1] * dims[2]
                );
                let o = v3(&origin);
                Density::Field(Arc::new(move |x: &Vec3| {
                    let mut i0 = [0usize; 3];
                    let mut t = [0.0; 3];
                    for a in 0..3 {
                        let s = ((x[a] - o[a]) / spacing).clamp(0.0, (dims[a] - 1) as f64);
                        let i = (s.floor() as usize).min(dims[a] - 2);
                        i0[a] = i;
                        t[a] = s - i as f64;
                    }
                    let at = |i: usize, j: usize, k: usize| values[i + dims[0] * (j + dims[1] * k)];
                    let mut acc = 0.0;
                    for c in 0..8 {
                        let (di, dj, dk) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
                        let w = [di, dj, dk]
                            .iter()
                            .zip(&t)
                            .map(|(&d, &tt)| if d == 1 { tt } else { 1.0 - tt })
                            .product::<f64>();
                        acc += w * at(i0[0] + di, i0[1] + dj, i0[2] + dk);
                    }
                    acc
                }))
            }
        })
    }

    /// (inf, sup) of the field.
    pub fn range(&self) -> (f64, f64) {
        let mm = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        match self {
            DensitySpec::Constant { value } => (*value, *value),
            DensitySpec::Bump { amplitude, .. } => (1f64.min(1.0 + amplitude), 1f64.max(1.0 + amplitude)),
            DensitySpec::Radial { rho, .. } => mm(rho),
            DensitySpec::Table { values, .. } => mm(values),
        }
    }
}

impl Scenario {
    pub fn mat_i(&self) -> Material {
        Material::new(self.materials.interior.lambda, self.materials.interior.mu)
    }

    pub fn mat_e(&self) -> Material {
        Material::new(self.materials.exterior.lambda, self.materials.exterior.mu)
    }

    pub fn surface_d(&self) -> Result<Surface> {
        self.geometry.d.surface(&self.base_dir).context("geometry.d")
    }

    pub fn surface_b(&self) -> Result<Option<Surface>> {
        self.geometry
            .d_b
            .as_ref()
            .map(|s| s.surface(&self.base_dir))
            .transpose()
            .context("geometry.d_b")
    }

    pub fn density_is_constant(&self) -> bool {
        matches!(self.materials.density, DensitySpec::Constant { .. })
    }

    /// Incident field in the exterior material.
    pub fn incident(&self) -> Result<IncidentField> {
        let inc = self.incidence.as_ref().context("scenario has no [incidence] section")?;
        let m = self.mat_e();
        let w = self.materials.omega;
        Ok(match inc {
            Incidence::PlaneP { direction } => plane_wave(&v3(direction), &m, w, Polarization::P)?,
            Incidence::PlaneS { direction, polarization } => {
                plane_wave(&v3(direction), &m, w, Polarization::S(v3(polarization)))?
            }
            Incidence::PointSourceP { source, moment } => point_source_p(&v3(source), &v3(moment), &m, w, None)?,
            Incidence::GradPointSource { source } => grad_scalar_point_source(&v3(source), &m, w)?,
        })
    }

    /// Every check that does not need a solve.
    pub fn validate(&self) -> Result<()> {
        validate_material(&self.mat_i()).context("materials.interior")?;
        validate_material(&self.mat_e()).context("materials.exterior")?;
        let w = self.materials.omega;
        ensure!(w > 0.0 && w.is_finite(), "materials.omega must be positive, got {w}");
        let (lo, hi) = self.materials.density.range();
        ensure!(lo > 0.0 && hi.is_finite(), "materials.density must be positive, range [{lo}, {hi}]");
        self.materials.density.density().context("materials.density")?;

        let d = self.surface_d()?;
        if let Some(b) = self.surface_b()? {
            let q = build_surface_quadrature(&b, 10)?;
            ensure!(q.nodes.iter().all(|x| d.contains(x)), "geometry.d_b is not contained in geometry.d");
        }
        if let Some(inc) = &self.incidence {
            if let Incidence::PointSourceP { source, .. } | Incidence::GradPointSource { source } = inc {
                ensure!(!d.contains(&v3(source)), "incidence.source {source:?} lies inside geometry.d");
            }
            self.incident().context("incidence")?;
        }
        let s = &self.solver;
        ensure!(s.order >= 1 && s.order_b >= 1, "solver.order and solver.order_b must be at least 1");
        ensure!(s.grid_h > 0.0, "solver.grid_h must be positive");
        ensure!(s.tol > 0.0 && s.max_iter > 0, "solver.tol and solver.max_iter must be positive");
        ensure!(s.stride >= 1 && s.delta0 > 0.0, "solver.stride and solver.delta0 must be positive");
        let o = &self.outputs;
        ensure!(o.farfield_theta >= 1 && o.farfield_phi >= 1, "outputs.farfield_theta/phi must be at least 1");
        ensure!(o.flux_radii.iter().all(|&r| r > 0.0), "outputs.flux_radii must be positive");
        for r in &o.flux_radii {
            let q = build_surface_quadrature(&Surface::sphere(Vec3::zeros(), *r)?, 8)?;
            ensure!(q.nodes.iter().all(|x| !d.contains(x)), "flux sphere of radius {r} intersects geometry.d");
        }
        ensure!(
            o.remainder_wavelengths.len() >= 2 && o.remainder_wavelengths.iter().all(|&r| r > 0.0),
            "outputs.remainder_wavelengths needs at least two positive radii"
        );
        if let Some(p) = &self.probe {
            ensure!(v3(&p.s_hat).norm() > 0.0, "probe.s_hat must be nonzero");
            ensure!(p.delta > 0.0 && p.d0_factor > 0.0, "probe.delta and probe.d0_factor must be positive");
            ensure!(p.j_max >= 8, "probe.j_max must be at least 8, got {}", p.j_max);
            if !matches!(self.geometry.d, Shape::Sphere { .. } | Shape::Ellipsoid { .. }) {
                bail!("probe needs a parametric geometry.d (sphere or ellipsoid)");
            }
        }
        if let Some(t) = &self.itp {
            if t.radius.is_none() && !matches!(self.geometry.d, Shape::Sphere { .. }) {
                bail!("itp.radius is required unless geometry.d is a sphere");
            }
            ensure!(t.fd_cells >= 10, "itp.fd_cells must be at least 10");
        }
        if let Some(c) = &self.convergence {
            check_levels(&c.levels)?;
        }
        Ok(())
    }
}

pub fn check_levels(levels: &[usize]) -> Result<()> {
    ensure!(levels.len() >= 3, "convergence needs at least 3 refinement levels, got {}", levels.len());
    ensure!(levels.windows(2).all(|w| w[1] > w[0]), "convergence.levels must be increasing");
    Ok(())
}
