//! Critical points in the interior, generalized saddles on the boundary,
//! and gradient-flow basin membership.

use serde::Serialize;

use crate::error::LandscapeError;
use crate::potential::{boundary_normal_derivative, DomainGeometry, PotentialField};

pub const TOL_GRAD: f64 = 1e-9;
pub const TOL_DEGENERATE: f64 = 1e-8;

/// Nondegenerate interior critical point.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub location: [f64; 2],
    pub value: f64,
    /// Number of negative Hessian eigenvalues (0..=d).
    pub index: usize,
    pub hessian_det: f64,
    /// The single negative eigenvalue when index = 1.
    pub neg_eigenvalue: Option<f64>,
    #[serde(skip)]
    pub hessian: [[f64; 2]; 2],
    #[serde(skip)]
    pub neg_direction: Option<[f64; 2]>,
}

/// Boundary point that acts as a generalized saddle: local minimum of the
/// boundary trace with positive outward normal derivative.
#[derive(Debug, Clone, Serialize)]
pub struct BoundarySaddle {
    pub location: [f64; 2],
    pub value: f64,
    pub normal_derivative: f64,
    /// det Hess of the boundary trace; the empty determinant 1 in 1D.
    pub tangential_hess_det: f64,
    /// Chart value: -1/+1 in 1D, angle in 2D.
    pub boundary_coordinate: f64,
}

/// Structured verdict for each clause of the basic landscape assumption.
#[derive(Debug, Clone, Serialize)]
pub struct A0Report {
    pub smooth: bool,
    pub gradient_nonzero_on_boundary: bool,
    pub interior_morse: bool,
    pub boundary_trace_morse: bool,
    pub has_interior_minimum: bool,
    pub passed: bool,
}

/// All critical structure of one landscape.
#[derive(Debug, Clone, Serialize)]
pub struct LandscapeAtlas {
    pub interior_criticals: Vec<CriticalPoint>,
    pub boundary_saddles: Vec<BoundarySaddle>,
    pub a0_report: A0Report,
    /// Global minimum of f restricted to the boundary.
    pub boundary_min_value: f64,
    /// Locations attaining it (within tolerance).
    pub boundary_argmin: Vec<[f64; 2]>,
}

impl LandscapeAtlas {
    pub fn minima(&self) -> impl Iterator<Item = (usize, &CriticalPoint)> {
        self.interior_criticals
            .iter()
            .enumerate()
            .filter(|(_, c)| c.index == 0)
    }

    pub fn minima_indices(&self) -> Vec<usize> {
        self.minima().map(|(i, _)| i).collect()
    }
}

/// Eigen-decomposition of a symmetric 2x2 matrix; returns eigenvalues
/// ascending with matching unit eigenvectors.
pub fn sym_eig2(m: [[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let tr = a + c;
    let disc = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let l1 = 0.5 * tr - disc;
    let l2 = 0.5 * tr + disc;
    let v1 = if b.abs() > 1e-300 {
        normalize([l1 - c, b])
    } else if a <= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let v2 = [-v1[1], v1[0]];
    ([l1, l2], [v1, v2])
}

fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

fn grad_norm(g: [f64; 2]) -> f64 {
    (g[0] * g[0] + g[1] * g[1]).sqrt()
}

/// Multi-start damped Newton search for critical points of f in the domain
/// interior. Deterministic for a fixed seed grid; results are sorted by
/// (value, coordinates) and deduplicated within 1e-6 * diam.
pub fn find_critical_points(
    field: &PotentialField,
    geom: &DomainGeometry,
    seeds_per_axis: usize,
) -> Result<Vec<CriticalPoint>, LandscapeError> {
    assert!(seeds_per_axis >= 8, "seeds_per_axis must be at least 8");
    let dim = geom.dim();
    let diam = geom.diameter();
    let dedupe = 1e-6 * diam;

    let mut found: Vec<[f64; 2]> = Vec::new();
    for seed in seed_grid(geom, seeds_per_axis) {
        if let Some(p) = newton_from(field, geom, seed, dim) {
            // keep strictly interior points only
            if geom.boundary_distance(&p[..dim]) < -1e-7 * diam
                && !found.iter().any(|q| dist(q, &p, dim) < dedupe)
            {
                found.push(p);
            }
        }
    }
    if found.is_empty() {
        return Err(LandscapeError::NoCriticalPoints);
    }

    let mut out = Vec::with_capacity(found.len());
    for loc in found {
        out.push(classify(field, loc, dim)?);
    }
    out.sort_by(|a, b| {
        (a.value, a.location[0], a.location[1])
            .partial_cmp(&(b.value, b.location[0], b.location[1]))
            .unwrap()
    });
    Ok(out)
}

fn classify(
    field: &PotentialField,
    loc: [f64; 2],
    dim: usize,
) -> Result<CriticalPoint, LandscapeError> {
    let out = field.eval_raw(&loc[..dim])?;
    if dim == 1 {
        let det = out.hessian[0][0];
        if det.abs() <= TOL_DEGENERATE {
            return Err(LandscapeError::DegenerateCritical { location: loc, det });
        }
        let index = usize::from(det < 0.0);
        Ok(CriticalPoint {
            location: loc,
            value: out.value,
            index,
            hessian_det: det,
            neg_eigenvalue: (index == 1).then_some(det),
            hessian: out.hessian,
            neg_direction: (index == 1).then_some([1.0, 0.0]),
        })
    } else {
        let det = out.hessian[0][0] * out.hessian[1][1] - out.hessian[0][1] * out.hessian[1][0];
        if det.abs() <= TOL_DEGENERATE {
            return Err(LandscapeError::DegenerateCritical { location: loc, det });
        }
        let (evals, evecs) = sym_eig2(out.hessian);
        let index = evals.iter().filter(|&&l| l < 0.0).count();
        Ok(CriticalPoint {
            location: loc,
            value: out.value,
            index,
            hessian_det: det,
            neg_eigenvalue: (index == 1).then_some(evals[0]),
            hessian: out.hessian,
            neg_direction: (index == 1).then_some(evecs[0]),
        })
    }
}

fn seed_grid(geom: &DomainGeometry, n: usize) -> Vec<[f64; 2]> {
    let mut seeds = Vec::new();
    match geom {
        DomainGeometry::Interval { a, b } => {
            for i in 0..n {
                let t = (i as f64 + 0.5) / n as f64;
                seeds.push([a + t * (b - a), 0.0]);
            }
        }
        DomainGeometry::Ball { center, radius } => {
            for i in 0..n {
                for j in 0..n {
                    let x = center[0] - radius + (2.0 * radius) * (i as f64 + 0.5) / n as f64;
                    let y = center[1] - radius + (2.0 * radius) * (j as f64 + 0.5) / n as f64;
                    if geom.contains(&[x, y]) {
                        seeds.push([x, y]);
                    }
                }
            }
        }
    }
    seeds
}

fn dist(a: &[f64; 2], b: &[f64; 2], dim: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..dim {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

/// Damped Newton iteration on grad f = 0. Returns a point with
/// |grad f| < TOL_GRAD, or None if the iteration left the domain area or
/// failed to converge within 100 steps.
fn newton_from(
    field: &PotentialField,
    geom: &DomainGeometry,
    start: [f64; 2],
    dim: usize,
) -> Option<[f64; 2]> {
    let diam = geom.diameter();
    let mut x = start;
    let mut out = field.eval_raw(&x[..dim]).ok()?;
    for _ in 0..100 {
        let gn = grad_norm(out.gradient);
        if gn < TOL_GRAD {
            return Some(x);
        }
        let step = newton_step(out.gradient, out.hessian, dim)?;
        // Damped line search on |grad f|.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let mut cand = x;
            for k in 0..dim {
                cand[k] = x[k] - lambda * step[k];
            }
            // Reject candidates that run far outside the domain.
            if geom.boundary_distance(&cand[..dim]) > 0.1 * diam {
                lambda *= 0.5;
                continue;
            }
            if let Ok(cand_out) = field.eval_raw(&cand[..dim]) {
                if grad_norm(cand_out.gradient) < gn {
                    x = cand;
                    out = cand_out;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return None;
        }
    }
    None
}

fn newton_step(g: [f64; 2], h: [[f64; 2]; 2], dim: usize) -> Option<[f64; 2]> {
    if dim == 1 {
        if h[0][0].abs() < 1e-14 {
            return None;
        }
        Some([g[0] / h[0][0], 0.0])
    } else {
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if det.abs() < 1e-14 {
            return None;
        }
        Some([
            (h[1][1] * g[0] - h[0][1] * g[1]) / det,
            (h[0][0] * g[1] - h[1][0] * g[0]) / det,
        ])
    }
}

/// Generalized saddles on the boundary: local minima of the boundary trace
/// with positive outward normal derivative.
///
/// In 1D an interval endpoint is always a local minimum of the two-point
/// restriction, so endpoints qualify whenever their outward derivative is
/// positive. In 2D the trace is scanned densely and refined by Newton in the
/// angular chart.
pub fn find_boundary_saddles(
    field: &PotentialField,
    geom: &DomainGeometry,
    boundary_samples: usize,
) -> Result<Vec<BoundarySaddle>, LandscapeError> {
    match geom {
        DomainGeometry::Interval { a, b } => {
            let mut out = Vec::new();
            for (z, coord) in [(*a, -1.0), (*b, 1.0)] {
                let e = field.eval_raw(&[z])?;
                if e.gradient[0].abs() <= TOL_DEGENERATE {
                    return Err(LandscapeError::GradientVanishesOnBoundary { location: [z, 0.0] });
                }
                let dn = boundary_normal_derivative(field, geom, &[z])?;
                if dn > 0.0 {
                    out.push(BoundarySaddle {
                        location: [z, 0.0],
                        value: e.value,
                        normal_derivative: dn,
                        tangential_hess_det: 1.0,
                        boundary_coordinate: coord,
                    });
                }
            }
            Ok(out)
        }
        DomainGeometry::Ball { .. } => boundary_saddles_ball(field, geom, boundary_samples),
    }
}

/// Boundary trace and its first two angular derivatives on a ball.
fn trace_derivs(
    field: &PotentialField,
    geom: &DomainGeometry,
    theta: f64,
) -> Result<(f64, f64, f64), LandscapeError> {
    let DomainGeometry::Ball { center, radius } = geom else {
        unreachable!()
    };
    let p = geom.boundary_point(theta);
    let out = field.eval_raw(&p)?;
    let (ct, st) = (theta.cos(), theta.sin());
    let pt = [-radius * st, radius * ct]; // dp/dtheta
    let ptt = [-(p[0] - center[0]), -(p[1] - center[1])]; // d2p/dtheta2
    let g1 = out.gradient[0] * pt[0] + out.gradient[1] * pt[1];
    let hpp = out.hessian[0][0] * pt[0] * pt[0]
        + 2.0 * out.hessian[0][1] * pt[0] * pt[1]
        + out.hessian[1][1] * pt[1] * pt[1];
    let g2 = hpp + out.gradient[0] * ptt[0] + out.gradient[1] * ptt[1];
    Ok((out.value, g1, g2))
}

/// Local minima of the boundary trace, found by a phase-offset dense scan of
/// the angular derivative followed by bisection. The offset keeps symmetric
/// landscapes (whose trace derivative vanishes exactly at sample points)
/// from fooling the sign-change detector.
fn trace_minima(
    field: &PotentialField,
    geom: &DomainGeometry,
    samples: usize,
) -> Result<Vec<f64>, LandscapeError> {
    let n = samples.max(256);
    let two_pi = 2.0 * std::f64::consts::PI;
    let theta_at = |i: usize| two_pi * (i as f64 + 0.382) / n as f64;
    let mut minima_theta: Vec<f64> = Vec::new();
    let mut prev = trace_derivs(field, geom, theta_at(0))?;
    for i in 1..=n {
        let theta = theta_at(i);
        let cur = trace_derivs(field, geom, theta)?;
        if prev.1 < 0.0 && cur.1 >= 0.0 {
            let (mut lo, mut hi) = (theta_at(i - 1), theta);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let (_, g1, _) = trace_derivs(field, geom, mid)?;
                if g1 < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            let (_, _, g2) = trace_derivs(field, geom, t)?;
            if g2 > 0.0 && !minima_theta.iter().any(|&s| angle_dist(s, t) < 1e-6) {
                minima_theta.push(t);
            }
        }
        prev = cur;
    }
    Ok(minima_theta)
}

fn angle_dist(a: f64, b: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let d = (a - b).rem_euclid(two_pi);
    d.min(two_pi - d)
}

fn boundary_saddles_ball(
    field: &PotentialField,
    geom: &DomainGeometry,
    samples: usize,
) -> Result<Vec<BoundarySaddle>, LandscapeError> {
    let DomainGeometry::Ball { radius, .. } = geom else {
        unreachable!()
    };
    let n = samples.max(64);
    // A0 check: the full gradient must not vanish on the boundary.
    for i in 0..n {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        let p = geom.boundary_point(theta);
        let out = field.eval_raw(&p)?;
        if grad_norm(out.gradient) <= TOL_DEGENERATE {
            return Err(LandscapeError::GradientVanishesOnBoundary { location: p });
        }
    }
    let mut out = Vec::new();
    for t in trace_minima(field, geom, samples)? {
        let p = geom.boundary_point(t);
        let (value, _, g2) = trace_derivs(field, geom, t)?;
        let dn = boundary_normal_derivative(field, geom, &p)?;
        if dn > 0.0 {
            out.push(BoundarySaddle {
                location: p,
                value,
                normal_derivative: dn,
                // Hessian of the trace in arc length: g''(theta) / r^2.
                tangential_hess_det: g2 / (radius * radius),
                boundary_coordinate: geom.boundary_coordinate(&p)?,
            });
        }
    }
    out.sort_by(|a, b| {
        (a.value, a.boundary_coordinate)
            .partial_cmp(&(b.value, b.boundary_coordinate))
            .unwrap()
    });
    Ok(out)
}

/// Minimum of f over the boundary and its attaining points, by scan plus
/// chart-Newton refinement of every trace minimum (including those with
/// negative normal derivative).
pub fn boundary_minimum(
    field: &PotentialField,
    geom: &DomainGeometry,
    samples: usize,
) -> Result<(f64, Vec<[f64; 2]>), LandscapeError> {
    match geom {
        DomainGeometry::Interval { a, b } => {
            let fa = field.value(&[*a])?;
            let fb = field.value(&[*b])?;
            let m = fa.min(fb);
            let tol = 1e-9 * (1.0 + fa.abs().max(fb.abs()));
            let mut pts = Vec::new();
            if fa <= m + tol {
                pts.push([*a, 0.0]);
            }
            if fb <= m + tol {
                pts.push([*b, 0.0]);
            }
            Ok((m, pts))
        }
        DomainGeometry::Ball { .. } => {
            let mut best = f64::INFINITY;
            let mut candidates: Vec<(f64, f64)> = Vec::new(); // (value, theta)
            for t in trace_minima(field, geom, samples)? {
                let (v, _, _) = trace_derivs(field, geom, t)?;
                best = best.min(v);
                candidates.push((v, t));
            }
            let scale = 1.0 + best.abs();
            let pts = candidates
                .into_iter()
                .filter(|(v, _)| *v <= best + 1e-9 * scale)
                .map(|(_, t)| geom.boundary_point(t))
                .collect();
            Ok((best, pts))
        }
    }
}

/// Assemble the full landscape atlas: interior criticals, boundary saddles,
/// the A0 verdict, and boundary minimum data.
pub fn build_atlas(
    field: &PotentialField,
    geom: &DomainGeometry,
    seeds_per_axis: usize,
    boundary_samples: usize,
) -> Result<LandscapeAtlas, LandscapeError> {
    let mut gradient_ok = true;
    let mut interior_morse = true;
    let interior = match find_critical_points(field, geom, seeds_per_axis) {
        Ok(v) => v,
        Err(LandscapeError::NoCriticalPoints) => Vec::new(),
        Err(LandscapeError::DegenerateCritical { location, det }) => {
            return Err(LandscapeError::DegenerateCritical { location, det });
        }
        Err(e) => return Err(e),
    };
    let boundary = match find_boundary_saddles(field, geom, boundary_samples) {
        Ok(v) => v,
        Err(LandscapeError::GradientVanishesOnBoundary { .. }) => {
            gradient_ok = false;
            Vec::new()
        }
        Err(e) => return Err(e),
    };
    // Boundary-trace nondegeneracy (2D): every kept trace minimum must have
    // strictly positive curvature in the chart; marginal cases were already
    // rejected inside find_boundary_saddles, so check magnitude here.
    let boundary_trace_morse = boundary
        .iter()
        .all(|s| s.tangential_hess_det.abs() > TOL_DEGENERATE);
    if interior
        .iter()
        .any(|c| c.hessian_det.abs() <= TOL_DEGENERATE)
    {
        interior_morse = false;
    }
    let has_minimum = interior.iter().any(|c| c.index == 0);
    let (boundary_min_value, boundary_argmin) = boundary_minimum(field, geom, boundary_samples)?;
    let a0 = A0Report {
        smooth: true, // guaranteed by the expression whitelist
        gradient_nonzero_on_boundary: gradient_ok,
        interior_morse,
        boundary_trace_morse,
        has_interior_minimum: has_minimum,
        passed: gradient_ok && interior_morse && boundary_trace_morse && has_minimum,
    };
    Ok(LandscapeAtlas {
        interior_criticals: interior,
        boundary_saddles: boundary,
        a0_report: a0,
        boundary_min_value,
        boundary_argmin,
    })
}

/// Where a gradient-flow trajectory ended up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowOutcome {
    /// Flow left the domain.
    Exited,
    /// Flow converged near a critical point at this location.
    Converged([f64; 2]),
}

/// Integrate dphi/dt = -grad f(phi) with an adaptive embedded Runge-Kutta
/// pair until the flow leaves the domain or reaches |grad f| < TOL_GRAD.
pub fn gradient_flow(
    field: &PotentialField,
    geom: &DomainGeometry,
    x0: &[f64],
    t_max: f64,
) -> Result<FlowOutcome, LandscapeError> {
    let dim = geom.dim();
    let mut x = [0.0_f64; 2];
    x[..dim].copy_from_slice(x0);
    let mut t = 0.0;
    let mut dt = 1e-3 * geom.diameter();
    let tol = 1e-8 * geom.diameter().max(1.0);
    // The explicit integrator cannot drive |grad f| all the way to TOL_GRAD;
    // once the gradient is small, snap with Newton and classify the limit.
    let snap_tol = 1e-6;
    let rhs = |p: &[f64; 2]| -> Result<[f64; 2], LandscapeError> {
        let (_, g) = field.value_grad(&p[..dim]).map_err(LandscapeError::Eval)?;
        Ok([-g[0], -g[1]])
    };
    while t < t_max {
        if !geom.contains(&x[..dim]) {
            return Ok(FlowOutcome::Exited);
        }
        let (_, g) = field.value_grad(&x[..dim]).map_err(LandscapeError::Eval)?;
        if grad_norm(g) < snap_tol {
            if let Some(p) = newton_from(field, geom, x, dim) {
                if let Ok(c) = classify(field, p, dim) {
                    if c.index == 0 {
                        return Ok(FlowOutcome::Converged(p));
                    }
                    // Sitting exactly on an unstable critical point: the flow
                    // never leaves it.
                    if dist(&x, &p, dim) < 1e-12 * geom.diameter() && grad_norm(g) == 0.0 {
                        return Err(LandscapeError::FlowTimeout { t_max });
                    }
                    // Near a saddle but not on it: keep flowing.
                }
            }
        }
        // Embedded RK (Bogacki-Shampine 3(2)) step with adaptive size.
        let k1 = rhs(&x)?;
        let x2 = add_scaled(&x, &k1, 0.5 * dt, dim);
        if !finite(&x2) {
            dt *= 0.5;
            continue;
        }
        let k2 = rhs(&x2)?;
        let x3 = add_scaled(&x, &k2, 0.75 * dt, dim);
        let k3 = rhs(&x3)?;
        let mut x_new = x;
        for k in 0..dim {
            x_new[k] = x[k] + dt * (2.0 * k1[k] + 3.0 * k2[k] + 4.0 * k3[k]) / 9.0;
        }
        let k4 = rhs(&x_new)?;
        let mut err = 0.0_f64;
        for k in 0..dim {
            let e = dt * (-5.0 * k1[k] / 72.0 + k2[k] / 12.0 + k3[k] / 9.0 - k4[k] / 8.0);
            err = err.max(e.abs());
        }
        if err <= tol || dt < 1e-12 {
            x = x_new;
            t += dt;
        }
        let scale = if err > 0.0 {
            0.9 * (tol / err).powf(1.0 / 3.0)
        } else {
            2.0
        };
        dt = (dt * scale.clamp(0.2, 2.0)).min(t_max - t + 1e-12);
    }
    Err(LandscapeError::FlowTimeout { t_max })
}

fn add_scaled(x: &[f64; 2], k: &[f64; 2], s: f64, dim: usize) -> [f64; 2] {
    let mut out = *x;
    for i in 0..dim {
        out[i] = x[i] + s * k[i];
    }
    out
}

fn finite(x: &[f64; 2]) -> bool {
    x[0].is_finite() && x[1].is_finite()
}

/// Membership of x in the attraction basin of the region described by
/// `target` (a predicate on the flow's limiting critical point).
pub fn in_attraction_basin(
    field: &PotentialField,
    geom: &DomainGeometry,
    x: &[f64],
    target: &dyn Fn(&[f64]) -> bool,
    t_max: f64,
) -> Result<bool, LandscapeError> {
    match gradient_flow(field, geom, x, t_max)? {
        FlowOutcome::Exited => Ok(false),
        FlowOutcome::Converged(p) => Ok(target(&p[..geom.dim()])),
    }
}
