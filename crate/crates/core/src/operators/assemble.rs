use super::{eval_terms, BoundaryOperatorSpec, DiagonalTreatment, DiscreteOperator, Flavor, KernelTerm};
use crate::geometry::{gauss_legendre, PolarRule, SurfaceQuadrature};
use crate::linalg::CMat;
use crate::{exec, CMat3, Error, Result, Vec3, C64};
use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use std::f64::consts::PI;

/// Resolution of the local polar rule used for same-surface blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolarParams {
    pub n_rho: usize,
    pub n_alpha: usize,
}

impl PolarParams {
    pub fn for_rings(nt: usize) -> Self {
        PolarParams {
            n_rho: nt + 8,
            n_alpha: 2 * nt + 4,
        }
    }
}

/// Assemble one operator block.
pub fn assemble(spec: &BoundaryOperatorSpec, ql: &SurfaceQuadrature, qr: &SurfaceQuadrature) -> Result<DiscreteOperator> {
    if spec.left == spec.right && matches!(spec.flavor, Flavor::TractionTraction { .. }) {
        return Err(Error::Configuration(
            "the traction of the double layer is hypersingular on its own surface; assemble it inside a differenced combination".into(),
        ));
    }
    assemble_combination(&[(C64::new(1.0, 0.0), spec.clone())], ql, qr)
}

/// Assemble Σ c_k (operator k) with a single pass of quadrature. All specs
/// must share the same pair of surfaces.
pub fn assemble_combination(
    terms: &[(C64, BoundaryOperatorSpec)],
    ql: &SurfaceQuadrature,
    qr: &SurfaceQuadrature,
) -> Result<DiscreteOperator> {
    let first = terms
        .first()
        .ok_or_else(|| Error::Configuration("empty operator combination".into()))?;
    let (left, right) = (first.1.left, first.1.right);
    if terms.iter().any(|(_, s)| s.left != left || s.right != right) {
        return Err(Error::Configuration("combined operators must share their surfaces".into()));
    }
    let same = left == right;
    if same && ql.len() != qr.len() {
        return Err(Error::Configuration("same-surface block built from two different quadratures".into()));
    }
    let kt = terms
        .iter()
        .map(|(c, s)| KernelTerm::from_spec(*c, s))
        .collect::<Result<Vec<_>>>()?;
    let (matrix, diagonal) = assemble_kernel(&kt, ql, qr, same, None)?;
    Ok(DiscreteOperator {
        matrix,
        specs: terms.to_vec(),
        diagonal,
    })
}

/// Dense matrix of Σ terms between two quadratures.
pub fn assemble_kernel(
    terms: &[KernelTerm],
    ql: &SurfaceQuadrature,
    qr: &SurfaceQuadrature,
    same: bool,
    polar: Option<PolarParams>,
) -> Result<(CMat, DiagonalTreatment)> {
    if !same {
        return Ok((cross(terms, ql, qr), DiagonalTreatment::None));
    }
    let pv = terms.iter().any(|t| t.flavor.is_principal_value());
    match &qr.param {
        Some(p) if qr.antipodal => {
            let params = polar.unwrap_or_else(|| PolarParams::for_rings(p.grid.nt));
            Ok((polar_self(terms, qr, params), DiagonalTreatment::PolarRule))
        }
        _ => {
            if pv {
                return Err(Error::Configuration(
                    "principal-value operator on a quadrature without antipodal symmetry".into(),
                ));
            }
            if qr.cells.len() != qr.len() {
                return Err(Error::Configuration("self block needs cell geometry".into()));
            }
            Ok((mesh_single_self(terms, qr), DiagonalTreatment::Duffy))
        }
    }
}

fn to_cmat(rows: Vec<Vec<C64>>, nr: usize, nc: usize) -> CMat {
    // rows[t] holds a 3 x nc row block stored row-major
    let per = rows.first().map(|r| r.len() / nc).unwrap_or(0);
    let mut m = Mat::zeros(nr, nc);
    for (t, blk) in rows.iter().enumerate() {
        for a in 0..per {
            for c in 0..nc {
                m[(t * per + a, c)] = blk[a * nc + c];
            }
        }
    }
    m
}

fn cross(terms: &[KernelTerm], ql: &SurfaceQuadrature, qr: &SurfaceQuadrature) -> CMat {
    let nc = 3 * qr.len();
    let rows = exec::map(ql.len(), |i| {
        let mut row = vec![C64::new(0.0, 0.0); 3 * nc];
        let (x, nx) = (ql.nodes[i], ql.normals[i]);
        for j in 0..qr.len() {
            let k = eval_terms(terms, &x, &nx, &qr.nodes[j], &qr.normals[j]) * C64::from(qr.weights[j]);
            put(&mut row, nc, j, &k);
        }
        row
    });
    to_cmat(rows, 3 * ql.len(), nc)
}

fn put(row: &mut [C64], nc: usize, j: usize, k: &CMat3) {
    for a in 0..3 {
        for b in 0..3 {
            row[a * nc + 3 * j + b] += k[(a, b)];
        }
    }
}

fn rotate_z(s: &Vec3, ang: f64) -> Vec3 {
    let (sn, cs) = ang.sin_cos();
    Vec3::new(cs * s.x - sn * s.y, sn * s.x + cs * s.y, s.z)
}

fn polar_self(terms: &[KernelTerm], q: &SurfaceQuadrature, params: PolarParams) -> CMat {
    let pq = q.param.as_ref().expect("parametric quadrature");
    let grid = &pq.grid;
    let n = grid.len();
    let nphi = grid.nphi;
    let rule = PolarRule::new(params.n_rho, params.n_alpha);
    let nc = 3 * n;
    let rings = exec::map(grid.nt, |i| {
        let j0 = i * nphi;
        let (e1, e2) = grid.frame(j0);
        let nodes = rule.nodes(&grid.points[j0], &e1, &e2);
        let nq = nodes.len();
        let mut p = Mat::<f64>::zeros(nq, n);
        let mut buf = vec![0.0; n];
        for (qi, (s, _)) in nodes.iter().enumerate() {
            grid.interp_weights(s, &mut buf);
            for j in 0..n {
                p[(qi, j)] = buf[j];
            }
        }
        let mut lhs = Mat::<f64>::zeros(18 * nphi, nq);
        for k in 0..nphi {
            let ang = 2.0 * PI * k as f64 / nphi as f64;
            let x = q.nodes[j0 + k];
            let nx = q.normals[j0 + k];
            for (qi, (s, w)) in nodes.iter().enumerate() {
                let (y, ny, jac) = pq.eval(&rotate_z(s, ang));
                let kk = eval_terms(terms, &x, &nx, &y, &ny) * C64::from(w * jac);
                for a in 0..3 {
                    for b in 0..3 {
                        lhs[(18 * k + 3 * a + b, qi)] = kk[(a, b)].re;
                        lhs[(18 * k + 9 + 3 * a + b, qi)] = kk[(a, b)].im;
                    }
                }
            }
        }
        let mut c = Mat::<f64>::zeros(18 * nphi, n);
        matmul(c.as_mut(), Accum::Replace, lhs.as_ref(), p.as_ref(), 1.0, Par::Seq);
        let mut out = Vec::with_capacity(nphi);
        for k in 0..nphi {
            let mut row = vec![C64::new(0.0, 0.0); 3 * nc];
            let back = (nphi - k) % nphi;
            for j in 0..n {
                let jp = grid.shifted(j, back);
                for a in 0..3 {
                    for b in 0..3 {
                        row[a * nc + 3 * j + b] =
                            C64::new(c[(18 * k + 3 * a + b, jp)], c[(18 * k + 9 + 3 * a + b, jp)]);
                    }
                }
            }
            out.push(row);
        }
        out
    });
    let rows: Vec<Vec<C64>> = rings.into_iter().flatten().collect();
    to_cmat(rows, nc, nc)
}

/// ∫ over triangle (p0, p1, p2) of K(x, y) with x a point inside it, by
/// Duffy maps of the three subtriangles meeting at x.
fn duffy_cell(terms: &[KernelTerm], x: &Vec3, nx: &Vec3, cell: &[Vec3; 3], order: usize) -> CMat3 {
    let (u, wu) = gauss_legendre(order, 0.0, 1.0);
    let mut acc = CMat3::zeros();
    for t in 0..3 {
        let a = cell[t] - x;
        let b = cell[(t + 1) % 3] - x;
        let jac = a.cross(&b).norm();
        for (ui, wi) in u.iter().zip(&wu) {
            for (vi, wv) in u.iter().zip(&wu) {
                let y = x + (a * (1.0 - vi) + b * *vi) * *ui;
                acc += eval_terms(terms, x, nx, &y, nx) * C64::from(wi * wv * ui * jac);
            }
        }
    }
    acc
}

fn mesh_single_self(terms: &[KernelTerm], q: &SurfaceQuadrature) -> CMat {
    let n = q.len();
    let nc = 3 * n;
    let rows = exec::map(n, |i| {
        let mut row = vec![C64::new(0.0, 0.0); 3 * nc];
        let (x, nx) = (q.nodes[i], q.normals[i]);
        for j in 0..n {
            let k = if i == j {
                duffy_cell(terms, &x, &nx, &q.cells[i], 10)
            } else {
                eval_terms(terms, &x, &nx, &q.nodes[j], &q.normals[j]) * C64::from(q.weights[j])
            };
            put(&mut row, nc, j, &k);
        }
        row
    });
    to_cmat(rows, nc, nc)
}
