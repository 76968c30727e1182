use super::{eval_terms, flatten, KernelTerm};
use crate::geometry::{PolarRule, SphExpansion, SurfaceQuadrature};
use crate::kernels::{check_unit, double_from};
use super::Flavor;
use crate::linalg::CMat;
use crate::{exec, CMat3, CVec3, Error, Result, Vec3, C64};

/// Targets closer than this many node spacings use the near rule.
pub const NEAR_FACTOR: f64 = 4.0;
const PANEL_NODES: usize = 12;

/// Σ_terms ∫ K(x, y) φ(y) ds(y) at off-surface targets. Only flavours that
/// need no target normal are accepted.
pub fn evaluate_potential(
    density: &[CVec3],
    terms: &[KernelTerm],
    quad: &SurfaceQuadrature,
    targets: &[Vec3],
) -> Result<Vec<CVec3>> {
    if terms.iter().any(|t| t.flavor.needs_target_normal()) {
        return Err(Error::Configuration("potential flavour needs a target normal".into()));
    }
    let normals = vec![Vec3::zeros(); targets.len()];
    eval_general(density, terms, quad, targets, &normals)
}

/// T^γ at the targets applied to the potential of `terms`.
pub fn traction_of_potential(
    density: &[CVec3],
    terms: &[KernelTerm],
    quad: &SurfaceQuadrature,
    targets: &[Vec3],
    normals: &[Vec3],
    gamma: f64,
) -> Result<Vec<CVec3>> {
    if normals.len() != targets.len() {
        return Err(Error::Parameter("one normal per target required".into()));
    }
    for n in normals {
        check_unit(n)?;
    }
    let mapped = terms
        .iter()
        .map(|t| {
            Ok(KernelTerm {
                flavor: t.flavor.traction(gamma)?,
                ..t.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    eval_general(density, &mapped, quad, targets, normals)
}

fn any_perp(s: &Vec3) -> (Vec3, Vec3) {
    let a = if s.x.abs() < 0.6 { Vec3::x() } else { Vec3::y() };
    let e1 = (a - s * s.dot(&a)).normalize();
    (e1, s.cross(&e1))
}

fn eval_general(
    density: &[CVec3],
    terms: &[KernelTerm],
    quad: &SurfaceQuadrature,
    targets: &[Vec3],
    normals: &[Vec3],
) -> Result<Vec<CVec3>> {
    if density.len() != quad.len() {
        return Err(Error::Parameter("density size does not match the quadrature".into()));
    }
    let expansion: Option<SphExpansion<C64>> = quad.param.as_ref().map(|p| p.grid.analyse(&flatten(density), 3));
    let scale = quad.surface.diameter();
    let res = exec::map(targets.len(), |t| -> Result<CVec3> {
        let x = targets[t];
        let nx = normals[t];
        let (d, foot) = match &quad.param {
            Some(p) => {
                let s0 = quad.surface.foot_param(&x).expect("parametric");
                let (y0, _, _) = p.eval(&s0);
                ((x - y0).norm(), Some(s0))
            }
            None => (quad.nearest_node_distance(&x), None),
        };
        if d <= 1e-12 * scale {
            return Err(Error::Singularity(format!("target {x:?} lies on the source surface")));
        }
        let plain = || {
            let mut acc = CVec3::zeros();
            for j in 0..quad.len() {
                let k = eval_terms(terms, &x, &nx, &quad.nodes[j], &quad.normals[j]);
                acc += k * density[j] * C64::from(quad.weights[j]);
            }
            acc
        };
        if d >= NEAR_FACTOR * quad.spacing {
            return Ok(plain());
        }
        match (&quad.param, foot, &expansion) {
            (Some(p), Some(s0), Some(ex)) => {
                let amax = p.axes.max();
                let lmax = p.grid.lmax();
                let rule = PolarRule::graded(d / amax, PANEL_NODES, (2 * lmax + 8).max(24));
                let (e1, e2) = any_perp(&s0);
                let mut acc = CVec3::zeros();
                let mut phi = [C64::new(0.0, 0.0); 3];
                for (s, w) in rule.nodes(&s0, &e1, &e2) {
                    let (y, ny, jac) = p.eval(&s);
                    ex.eval(&s, &mut phi);
                    let k = eval_terms(terms, &x, &nx, &y, &ny);
                    acc += k * CVec3::new(phi[0], phi[1], phi[2]) * C64::from(w * jac);
                }
                Ok(acc)
            }
            _ => {
                if d >= quad.spacing {
                    Ok(plain())
                } else {
                    Err(Error::Accuracy(format!(
                        "target at distance {d:.3e} is closer than one node spacing ({:.3e})",
                        quad.spacing
                    )))
                }
            }
        }
    });
    res.into_iter().collect()
}

/// Normal offsets used for one-sided limits.
pub const LIMIT_POINTS: usize = 5;

/// One-sided boundary limit of an arbitrary field evaluator at the nodes
/// `idx`: values at offsets side·k·δ0 along the node normal
/// (k = 1..=LIMIT_POINTS) extrapolated to zero. `eval` receives targets and
/// the matching node normals. `side` is +1 outside and -1 inside.
pub fn extrapolated_limit<F>(eval: F, quad: &SurfaceQuadrature, idx: &[usize], side: f64, delta0: f64) -> Result<Vec<CVec3>>
where
    F: Fn(&[Vec3], &[Vec3]) -> Result<Vec<CVec3>>,
{
    let mut targets = Vec::with_capacity(idx.len() * LIMIT_POINTS);
    let mut normals = Vec::with_capacity(idx.len() * LIMIT_POINTS);
    for &j in idx {
        for k in 1..=LIMIT_POINTS {
            targets.push(quad.nodes[j] + quad.normals[j] * (side * k as f64 * delta0));
            normals.push(quad.normals[j]);
        }
    }
    let vals = eval(&targets, &normals)?;
    let ts: Vec<f64> = (1..=LIMIT_POINTS).map(|k| k as f64 * delta0).collect();
    Ok(vals.chunks(LIMIT_POINTS).map(|v| neville_at_zero(&ts, v)).collect())
}

/// One-sided limit of a single potential; with `gamma` the traction T^γ
/// (target normal = node normal) is extrapolated instead.
pub fn boundary_limit(
    density: &[CVec3],
    terms: &[KernelTerm],
    quad: &SurfaceQuadrature,
    idx: &[usize],
    side: f64,
    gamma: Option<f64>,
    delta0: f64,
) -> Result<Vec<CVec3>> {
    extrapolated_limit(
        |t, n| match gamma {
            Some(g) => traction_of_potential(density, terms, quad, t, n, g),
            None => evaluate_potential(density, terms, quad, t),
        },
        quad,
        idx,
        side,
        delta0,
    )
}

/// Value at t = 0 of the interpolating polynomial through (ts, vs).
pub fn neville_at_zero(ts: &[f64], vs: &[CVec3]) -> CVec3 {
    let mut p: Vec<CVec3> = vs.to_vec();
    let n = ts.len();
    for m in 1..n {
        for i in 0..n - m {
            let (ti, tj) = (ts[i], ts[i + m]);
            p[i] = (p[i] * C64::from(-tj) - p[i + 1] * C64::from(-ti)) / C64::from(ti - tj);
        }
    }
    p[0]
}

/// P and S far-field amplitudes Σ_j K^∞(x̂, y_j) φ_j w_j of single and
/// double layer terms, without material prefactors.
pub fn far_amplitudes(density: &[CVec3], terms: &[KernelTerm], quad: &SurfaceQuadrature, xh: &Vec3) -> Result<(CVec3, CVec3)> {
    let mut out = [CVec3::zeros(); 2];
    for j in 0..quad.len() {
        let w = C64::from(quad.weights[j]);
        for t in terms {
            let k = &t.kernel;
            for (acc, fd) in out.iter_mut().zip(k.far_derivs(xh, &quad.nodes[j])) {
                let m = match t.flavor {
                    Flavor::Single => fd.g,
                    Flavor::Double { tau } => double_from(&fd, &quad.normals[j], k.lambda, k.mu, tau),
                    _ => return Err(Error::Configuration("far field needs a single or double layer".into())),
                };
                *acc += m * density[j] * (w * t.coef);
            }
        }
    }
    Ok((out[0], out[1]))
}

/// Dense matrix P with (P φ)(x_t) = potential of `terms` at each target.
/// Near targets on parametric surfaces use the graded polar rule with
/// hyperinterpolation weights, so P φ agrees with `evaluate_potential`.
pub fn potential_matrix(terms: &[KernelTerm], quad: &SurfaceQuadrature, targets: &[Vec3]) -> Result<CMat> {
    if terms.iter().any(|t| t.flavor.needs_target_normal()) {
        return Err(Error::Configuration("potential flavour needs a target normal".into()));
    }
    let n = quad.len();
    let nx = Vec3::zeros();
    let scale = quad.surface.diameter();
    let rows = exec::map(targets.len(), |t| -> Result<Vec<CMat3>> {
        let x = targets[t];
        let mut row = vec![CMat3::zeros(); n];
        let d = match &quad.param {
            Some(p) => {
                let s0 = quad.surface.foot_param(&x).expect("parametric");
                (x - p.eval(&s0).0).norm()
            }
            None => quad.nearest_node_distance(&x),
        };
        if d <= 1e-12 * scale {
            return Err(Error::Singularity(format!("target {x:?} lies on the source surface")));
        }
        if d >= NEAR_FACTOR * quad.spacing || (quad.param.is_none() && d >= quad.spacing) {
            for (j, r) in row.iter_mut().enumerate() {
                *r = eval_terms(terms, &x, &nx, &quad.nodes[j], &quad.normals[j]) * C64::from(quad.weights[j]);
            }
            return Ok(row);
        }
        let Some(p) = &quad.param else {
            return Err(Error::Accuracy(format!(
                "target at distance {d:.3e} is closer than one node spacing ({:.3e})",
                quad.spacing
            )));
        };
        let s0 = quad.surface.foot_param(&x).expect("parametric");
        let rule = PolarRule::graded(d / p.axes.max(), PANEL_NODES, (2 * p.grid.lmax() + 8).max(24));
        let (e1, e2) = any_perp(&s0);
        let mut lw = vec![0.0; n];
        for (s, w) in rule.nodes(&s0, &e1, &e2) {
            let (y, ny, jac) = p.eval(&s);
            let k = eval_terms(terms, &x, &nx, &y, &ny) * C64::from(w * jac);
            p.grid.interp_weights(&s, &mut lw);
            for (r, l) in row.iter_mut().zip(&lw) {
                *r += k * C64::from(*l);
            }
        }
        Ok(row)
    });
    let mut m = CMat::zeros(3 * targets.len(), 3 * n);
    for (t, row) in rows.into_iter().enumerate() {
        for (j, b) in row?.iter().enumerate() {
            for a in 0..3 {
                for c in 0..3 {
                    m[(3 * t + a, 3 * j + c)] = b[(a, c)];
                }
            }
        }
    }
    Ok(m)
}
