//! Surfaces, their quadratures and volume grids.

mod mesh;
mod sphere;

pub use mesh::{icosphere, load_off, parse_off, TriMesh};
pub use sphere::{
    gauss_legendre, legendre_all, real_sh, sh_index, unit_point, PolarRule, SphExpansion,
    SphereGrid,
};

use crate::material::Density;
use crate::{Error, Result, Vec3};
use std::f64::consts::PI;
use std::path::Path;

/// A closed surface with outward orientation.
#[derive(Clone, Debug)]
pub enum Surface {
    Sphere { center: Vec3, radius: f64 },
    Ellipsoid { center: Vec3, axes: Vec3 },
    Mesh(TriMesh),
}

impl Surface {
    pub fn sphere(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Geometry(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(Surface::Sphere { center, radius })
    }

    pub fn ellipsoid(center: Vec3, axes: Vec3) -> Result<Self> {
        if axes.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::Geometry(format!("ellipsoid semi-axes must be positive, got {axes:?}")));
        }
        Ok(Surface::Ellipsoid { center, axes })
    }

    /// Validated and outward-oriented triangle mesh.
    pub fn mesh(mut m: TriMesh) -> Result<Self> {
        m.validate()?;
        m.orient_outward();
        Ok(Surface::Mesh(m))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Surface::Sphere { .. } => "parametric-sphere",
            Surface::Ellipsoid { .. } => "parametric-ellipsoid",
            Surface::Mesh(_) => "triangle-mesh",
        }
    }

    /// Centre and semi-axes of a parametric surface.
    pub fn param(&self) -> Option<(Vec3, Vec3)> {
        match self {
            Surface::Sphere { center, radius } => Some((*center, Vec3::repeat(*radius))),
            Surface::Ellipsoid { center, axes } => Some((*center, *axes)),
            Surface::Mesh(_) => None,
        }
    }

    /// Axis-aligned bounding box.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        match self.param() {
            Some((c, a)) => (c - a, c + a),
            None => {
                let Surface::Mesh(m) = self else { unreachable!() };
                let mut lo = Vec3::repeat(f64::INFINITY);
                let mut hi = Vec3::repeat(f64::NEG_INFINITY);
                for v in &m.vertices {
                    lo = lo.inf(v);
                    hi = hi.sup(v);
                }
                (lo, hi)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounds();
        (hi - lo).max()
    }

    /// Point strictly inside the enclosed region.
    pub fn contains(&self, x: &Vec3) -> bool {
        match self.param() {
            Some((c, a)) => (x - c).component_div(&a).norm_squared() < 1.0,
            None => {
                let Surface::Mesh(m) = self else { unreachable!() };
                winding_number(m, x) > 0.5
            }
        }
    }

    /// Enclosed volume.
    pub fn volume(&self) -> f64 {
        match self {
            Surface::Sphere { radius, .. } => 4.0 / 3.0 * PI * radius.powi(3),
            Surface::Ellipsoid { axes, .. } => 4.0 / 3.0 * PI * axes.x * axes.y * axes.z,
            Surface::Mesh(m) => m.signed_volume(),
        }
    }

    /// Position, unit outward normal and area Jacobian |det A||A⁻¹ŝ| at
    /// parameter ŝ of a parametric surface y = c + A ŝ.
    pub fn param_point(&self, s: &Vec3) -> Option<(Vec3, Vec3, f64)> {
        let (c, a) = self.param()?;
        Some(param_eval(&c, &a, s))
    }

    /// Parameter of the closest surface point to `x` (parametric surfaces).
    pub fn foot_param(&self, x: &Vec3) -> Option<Vec3> {
        let (c, a) = self.param()?;
        Some(ellipsoid_foot(&c, &a, x))
    }

    /// Smallest principal curvature radius at parameter ŝ; for meshes the
    /// radius of the ball of equal volume.
    pub fn curvature_radius(&self, s: &Vec3) -> f64 {
        match self.param() {
            Some((c, a)) => {
                let (y, _, _) = param_eval(&c, &a, s);
                let p = y - c;
                let h2 = (p.x / (a.x * a.x)).powi(2) + (p.y / (a.y * a.y)).powi(2) + (p.z / (a.z * a.z)).powi(2);
                let abc2 = (a.x * a.y * a.z).powi(2);
                let h = h2.sqrt();
                let mean = -(p.norm_squared() - a.norm_squared()) / (2.0 * abc2 * h * h * h);
                let gauss = 1.0 / (abc2 * h2 * h2);
                let kmax = mean + (mean * mean - gauss).max(0.0).sqrt();
                1.0 / kmax
            }
            None => (3.0 * self.volume().abs() / (4.0 * PI)).cbrt(),
        }
    }
}

pub(crate) fn param_eval(c: &Vec3, a: &Vec3, s: &Vec3) -> (Vec3, Vec3, f64) {
    let y = c + a.component_mul(s);
    let m = s.component_div(a);
    let mn = m.norm();
    (y, m / mn, a.x * a.y * a.z * mn)
}

/// Closest point on the ellipsoid |(y - c)/a| = 1, returned as parameter.
fn ellipsoid_foot(c: &Vec3, a: &Vec3, x: &Vec3) -> Vec3 {
    let p = x - c;
    if (a.x - a.y).abs() < 1e-15 * a.x && (a.x - a.z).abs() < 1e-15 * a.x {
        let n = p.norm();
        return if n > 0.0 { p / n } else { Vec3::z() };
    }
    // y_i = a_i² p_i / (a_i² + t) with Σ (a_i p_i / (a_i² + t))² = 1
    let f = |t: f64| -> f64 {
        (0..3).map(|i| (a[i] * p[i] / (a[i] * a[i] + t)).powi(2)).sum::<f64>() - 1.0
    };
    let amin2 = a.min().powi(2);
    let mut lo = -amin2 * (1.0 - 1e-15);
    let mut hi = p.norm() * a.max() + 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    if f(lo) < 0.0 {
        lo = -amin2 + 1e-300;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + hi.abs()) {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    let y = Vec3::new(
        a.x * a.x * p.x / (a.x * a.x + t),
        a.y * a.y * p.y / (a.y * a.y + t),
        a.z * a.z * p.z / (a.z * a.z + t),
    );
    y.component_div(a).normalize()
}

/// Generalized winding number of a closed triangle mesh about `x`.
fn winding_number(m: &TriMesh, x: &Vec3) -> f64 {
    let mut omega = 0.0;
    for &[i, j, k] in &m.faces {
        let a = m.vertices[i] - x;
        let b = m.vertices[j] - x;
        let c = m.vertices[k] - x;
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c));
        let den = la * lb * lc + a.dot(&b) * lc + b.dot(&c) * la + c.dot(&a) * lb;
        omega += 2.0 * num.atan2(den);
    }
    omega / (4.0 * PI)
}

/// Parametric data of a quadrature built on an ellipsoid grid.
#[derive(Clone, Debug)]
pub struct ParamQuad {
    pub grid: SphereGrid,
    pub center: Vec3,
    pub axes: Vec3,
}

impl ParamQuad {
    pub fn eval(&self, s: &Vec3) -> (Vec3, Vec3, f64) {
        param_eval(&self.center, &self.axes, s)
    }
}

/// Nodes, outward normals and positive weights on a closed surface.
#[derive(Clone, Debug)]
pub struct SurfaceQuadrature {
    pub nodes: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub patch_ids: Vec<usize>,
    /// Singular integrals can use a centrally symmetric local rule.
    pub antipodal: bool,
    /// Typical node spacing sqrt(area / N).
    pub spacing: f64,
    pub param: Option<ParamQuad>,
    /// Triangle owned by each node (meshes only).
    pub cells: Vec<[Vec3; 3]>,
    pub surface: Surface,
}

impl SurfaceQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Distance from `x` to the nearest node.
    pub fn nearest_node_distance(&self, x: &Vec3) -> f64 {
        self.nodes
            .iter()
            .map(|y| (x - y).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Build a quadrature. Parametric surfaces get `order` Gauss-Legendre rings
/// in cos θ and 2·order azimuths; meshes split every face into order²
/// subtriangles with one centroid node each.
pub fn build_surface_quadrature(s: &Surface, order: usize) -> Result<SurfaceQuadrature> {
    if order < 1 {
        return Err(Error::Parameter("quadrature order must be at least 1".into()));
    }
    match s.param() {
        Some((c, a)) => {
            let grid = SphereGrid::new(order);
            let mut nodes = Vec::with_capacity(grid.len());
            let mut normals = Vec::with_capacity(grid.len());
            let mut weights = Vec::with_capacity(grid.len());
            let mut patch_ids = Vec::with_capacity(grid.len());
            for (j, sp) in grid.points.iter().enumerate() {
                let (y, n, jac) = param_eval(&c, &a, sp);
                nodes.push(y);
                normals.push(n);
                weights.push(grid.weights[j] * jac);
                patch_ids.push(grid.ring(j));
            }
            let area: f64 = weights.iter().sum();
            Ok(SurfaceQuadrature {
                spacing: (area / nodes.len() as f64).sqrt(),
                nodes,
                normals,
                weights,
                patch_ids,
                antipodal: true,
                param: Some(ParamQuad { grid, center: c, axes: a }),
                cells: Vec::new(),
                surface: s.clone(),
            })
        }
        None => {
            let Surface::Mesh(m) = s else { unreachable!() };
            let mut nodes = Vec::new();
            let mut normals = Vec::new();
            let mut weights = Vec::new();
            let mut patch_ids = Vec::new();
            let mut cells = Vec::new();
            let k = order as f64;
            for f in 0..m.faces.len() {
                let (n, area) = m.face_normal_area(f);
                if !(area > 0.0) {
                    return Err(Error::Geometry(format!("face {f} has zero area")));
                }
                let [ia, ib, ic] = m.faces[f];
                let (a, b, c) = (m.vertices[ia], m.vertices[ib], m.vertices[ic]);
                let e1 = (b - a) / k;
                let e2 = (c - a) / k;
                let w = area / (k * k);
                for i in 0..order {
                    for j in 0..order - i {
                        let (fi, fj) = (i as f64, j as f64);
                        // upright subtriangle
                        nodes.push(a + e1 * (fi + 1.0 / 3.0) + e2 * (fj + 1.0 / 3.0));
                        normals.push(n);
                        weights.push(w);
                        patch_ids.push(f);
                        let p = a + e1 * fi + e2 * fj;
                        cells.push([p, p + e1, p + e2]);
                        if i + j + 1 < order {
                            nodes.push(a + e1 * (fi + 2.0 / 3.0) + e2 * (fj + 2.0 / 3.0));
                            normals.push(n);
                            weights.push(w);
                            patch_ids.push(f);
                            cells.push([p + e1, p + e1 + e2, p + e2]);
                        }
                    }
                }
            }
            let area: f64 = weights.iter().sum();
            Ok(SurfaceQuadrature {
                spacing: (area / nodes.len() as f64).sqrt(),
                nodes,
                normals,
                weights,
                patch_ids,
                antipodal: false,
                param: None,
                cells,
                surface: s.clone(),
            })
        }
    }
}

/// Read an OFF file into a validated surface.
pub fn load_mesh(path: &Path) -> Result<Surface> {
    Ok(Surface::Mesh(load_off(path)?))
}

/// z_j = z* + (δ/j) n(z*).
pub fn probe_point(z_star: &Vec3, normal: &Vec3, delta: f64, j: usize) -> Vec3 {
    z_star + normal * (delta / j.max(1) as f64)
}

/// Midpoint cells of a regular lattice clipped to D \ D̄_b.
#[derive(Clone, Debug)]
pub struct VolumeGrid {
    pub h: f64,
    pub origin: Vec3,
    pub dims: [usize; 3],
    /// Lattice index of every kept cell.
    pub index: Vec<[usize; 3]>,
    pub centers: Vec<Vec3>,
    pub volumes: Vec<f64>,
    pub density: Vec<f64>,
}

impl VolumeGrid {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    /// Same cells with a different density field.
    pub fn with_density(&self, rho: &Density) -> VolumeGrid {
        let mut g = self.clone();
        g.density = g.centers.iter().map(|x| rho.at(x)).collect();
        g
    }
}

/// Cells of spacing `h` whose centers lie in D and outside D_b.
pub fn build_volume_grid(d: &Surface, d_b: Option<&Surface>, h: f64, rho: &Density) -> Result<VolumeGrid> {
    if !(h > 0.0) {
        return Err(Error::Parameter(format!("grid spacing must be positive, got {h}")));
    }
    if let Some(b) = d_b {
        let q = build_surface_quadrature(b, 10)?;
        if q.nodes.iter().any(|x| !d.contains(x)) {
            return Err(Error::Geometry("D_b is not contained in D".into()));
        }
    }
    let (lo, hi) = d.bounds();
    let mid = (lo + hi) / 2.0;
    let mut dims = [0usize; 3];
    for a in 0..3 {
        dims[a] = ((hi[a] - lo[a]) / h - 1e-9).ceil().max(1.0) as usize;
    }
    let origin = mid - Vec3::new(dims[0] as f64, dims[1] as f64, dims[2] as f64) * (h / 2.0);
    let mut index = Vec::new();
    let mut centers = Vec::new();
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let x = origin + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * h;
                if d.contains(&x) && !d_b.is_some_and(|b| b.contains(&x)) {
                    index.push([i, j, k]);
                    centers.push(x);
                }
            }
        }
    }
    if centers.is_empty() {
        return Err(Error::Geometry("volume grid has no cells; spacing too coarse".into()));
    }
    let density = centers.iter().map(|x| rho.at(x)).collect();
    Ok(VolumeGrid {
        h,
        origin,
        dims,
        volumes: vec![h * h * h; centers.len()],
        index,
        centers,
        density,
    })
}
