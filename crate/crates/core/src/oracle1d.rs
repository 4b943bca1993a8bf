//! Exact 1D exit probabilities by quadrature, plus the closed-form limits
//! they converge to: ground truth for the sampler, the eigensolver, and the
//! prediction layer.
//!
//! The exit split from a point x in an interval (z1, z2) is a ratio of
//! integrals of exp(2 f / h). All integrands are shifted by the maximum of f
//! before exponentiation so that temperatures far below the barrier scale
//! stay representable.

use serde::Serialize;

use crate::error::OracleError;
use crate::potential::{DomainGeometry, PotentialField};
use crate::spectral1d::{DirichletSpectrum, QsdDensity};
use crate::topology::AssumptionReport;

/// Result of one adaptive quadrature.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error: f64,
    /// The shift M subtracted from 2 f / h in the exponent.
    pub log_shift: f64,
}

/// Exit split from a deterministic start.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExitSplit {
    pub p_left: f64,
    pub p_right: f64,
    pub abs_error: f64,
    pub log_shift: f64,
}

// 7-point Gauss / 15-point Kronrod nodes and weights (positive half).
const XGK: [f64; 8] = [
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
];
const WGK: [f64; 8] = [
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
];
// Gauss weights for Kronrod nodes 0, 2, 4, 6.
const WG: [f64; 4] = [
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
];

/// One G7K15 panel on [a, b]: returns (kronrod, |kronrod - gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f0 = f(c);
    let mut kronrod = WGK[0] * f0;
    let mut gauss = WG[0] * f0;
    for k in 1..8 {
        let dx = half * XGK[k];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[k] * s;
        if k % 2 == 0 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

/// Adaptive Gauss-Kronrod on [a, b] to relative tolerance `rel_tol`.
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<(f64, f64), OracleError> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let mut stack = vec![(a, b)];
    let mut total = 0.0;
    let mut err = 0.0;
    // first coarse estimate to scale the tolerance
    let (coarse, _) = gk15(f, a, b);
    let scale = coarse.abs().max(f64::MIN_POSITIVE);
    let mut splits = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        let (v, e) = gk15(f, lo, hi);
        if e <= rel_tol * scale.max(v.abs()) || (hi - lo) < 1e-14 * (b - a) {
            total += v;
            err += e;
        } else {
            splits += 1;
            if splits > 4000 {
                return Err(OracleError::QuadratureNonConvergence);
            }
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid));
            stack.push((mid, hi));
        }
    }
    Ok((total, err))
}

/// Maximum of f over [a, b] by dense scan with local refinement.
fn max_on_interval(field: &PotentialField, a: f64, b: f64) -> Result<f64, OracleError> {
    let n = 4096;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=n {
        let x = a + (b - a) * i as f64 / n as f64;
        best = best.max(field.value(&[x])?);
    }
    Ok(best)
}

/// Integral of exp(2 (f - M) / h) over [lo, hi].
fn weighted_integral(
    field: &PotentialField,
    lo: f64,
    hi: f64,
    h: f64,
    shift: f64,
) -> Result<(f64, f64), OracleError> {
    let g = |t: f64| {
        let v = field.value(&[t]).unwrap_or(f64::NAN);
        ((v - shift) * 2.0 / h).exp()
    };
    adaptive(&g, lo, hi, 1e-10)
}

/// Exact exit split from x in the interval (z1, z2):
/// P[exit left] is proportional to the integral from x to z2.
pub fn exit_prob_exact(
    field: &PotentialField,
    geom: &DomainGeometry,
    h: f64,
    x: f64,
) -> Result<ExitSplit, OracleError> {
    let DomainGeometry::Interval { a: z1, b: z2 } = *geom else {
        panic!("exit_prob_exact is 1D only");
    };
    assert!(
        (z1..=z2).contains(&x),
        "start point must lie in the closed interval"
    );
    let shift = max_on_interval(field, z1, z2)?;
    let (left, el) = weighted_integral(field, z1, x, h, shift)?;
    let (right, er) = weighted_integral(field, x, z2, h, shift)?;
    let total = left + right;
    // p_left + p_right = 1 exactly by construction
    let p_left = right / total;
    let p_right = 1.0 - p_left;
    Ok(ExitSplit {
        p_left,
        p_right,
        abs_error: (el + er) / total,
        log_shift: shift,
    })
}

/// Ingredients and value of the square-root crossing law for a landscape
/// whose maximal well is cut off by an interior saddle exactly at the
/// boundary level: the probability of exiting through the far endpoint.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrossingPrediction {
    /// Predicted probability of exiting at the endpoint away from the
    /// maximal well's contact.
    pub p_far: f64,
    /// sqrt|f''(z)| / (2 |f'(z_contact)| sqrt(pi))
    pub constant: f64,
    pub saddle_curvature: f64,
    pub contact_slope: f64,
    /// Chart coordinate of the far endpoint (-1 or +1).
    pub far_coordinate: f64,
}

/// The leading sqrt(h) term of the crossing probability. Requires the
/// uniqueness/contact/lowest-contact assumptions to hold, the gate of the
/// maximal well to contain exactly one interior separating saddle sitting at
/// the boundary minimum level, a single boundary contact, and a far endpoint
/// at the same level.
pub fn laplace_crossing_asymptotic(
    field: &PotentialField,
    geom: &DomainGeometry,
    atlas: &crate::landscape::LandscapeAtlas,
    jmap: &crate::topology::JMap,
    report: &AssumptionReport,
    h: f64,
) -> Result<CrossingPrediction, OracleError> {
    let DomainGeometry::Interval { .. } = geom else {
        return Err(OracleError::ShapeMismatch("1D interval required".into()));
    };
    if !(report.a1.holds && report.a2.holds && report.a3.holds) {
        return Err(OracleError::ShapeMismatch(
            "uniqueness/contact/lowest-contact assumptions must hold".into(),
        ));
    }
    if report.a4.holds {
        return Err(OracleError::ShapeMismatch(
            "the maximal well's gate lies on the boundary; no interior crossing".into(),
        ));
    }
    if report.boundary_contacts.len() != 1 {
        return Err(OracleError::ShapeMismatch(
            "expected exactly one boundary contact".into(),
        ));
    }
    let cmax = report.cmax.as_ref().expect("A1 holds");
    let entry = &jmap.entries[cmax.entry];
    let interior = jmap.gate_interior_saddles(entry);
    if interior.len() != 1 {
        return Err(OracleError::ShapeMismatch(
            "expected exactly one interior separating saddle on the gate".into(),
        ));
    }
    let saddle = &atlas.interior_criticals[interior[0]];
    let tol = 1e-9 * (1.0 + report.boundary_min_value.abs());
    if (saddle.value - report.boundary_min_value).abs() > tol {
        return Err(OracleError::ShapeMismatch(
            "interior saddle does not sit at the boundary minimum level".into(),
        ));
    }
    let contact = &report.boundary_contacts[0];
    let far_coordinate = -contact.boundary_coordinate;
    let far = geom.boundary_point(far_coordinate);
    let far_value = field.value(&far[..1])?;
    if (far_value - report.boundary_min_value).abs() > tol {
        return Err(OracleError::ShapeMismatch(
            "far endpoint is not at the boundary minimum level".into(),
        ));
    }
    Ok(laplace_crossing(
        saddle.hessian_det, // 1D: second derivative at the saddle
        contact.normal_derivative,
        far_coordinate,
        h,
    ))
}

/// The crossing law from its raw ingredients: second derivative at the
/// interior saddle and slope magnitude at the contact endpoint.
pub fn laplace_crossing(
    saddle_second_derivative: f64,
    contact_slope: f64,
    far_coordinate: f64,
    h: f64,
) -> CrossingPrediction {
    let constant = saddle_second_derivative.abs().sqrt()
        / (2.0 * contact_slope.abs() * std::f64::consts::PI.sqrt());
    CrossingPrediction {
        p_far: constant * h.sqrt(),
        constant,
        saddle_curvature: saddle_second_derivative,
        contact_slope,
        far_coordinate,
    }
}

/// Exit split when the start is distributed as the conditioned stationary
/// law: trapezoid composition of the spectral density with the exact
/// pointwise split over the spectral grid.
pub fn qsd_exit_prob_exact(
    field: &PotentialField,
    geom: &DomainGeometry,
    spectrum: &DirichletSpectrum,
    density: &QsdDensity,
) -> Result<ExitSplit, OracleError> {
    let DomainGeometry::Interval { a: z1, b: z2 } = *geom else {
        panic!("qsd_exit_prob_exact is 1D only");
    };
    let h = spectrum.h;
    let shift = max_on_interval(field, z1, z2)?;
    // cumulative integrals of exp(2(f - M)/h) per grid interval, from the
    // right end: I(x_i -> z2)
    let x = &spectrum.grid;
    let n = x.len();
    let mut seg = vec![0.0_f64; n - 1];
    let mut seg_err = 0.0;
    for i in 0..n - 1 {
        let (v, e) = weighted_integral(field, x[i], x[i + 1], h, shift)?;
        seg[i] = v;
        seg_err += e;
    }
    let total: f64 = seg.iter().sum();
    let mut right_cum = vec![0.0_f64; n];
    for i in (0..n - 1).rev() {
        right_cum[i] = right_cum[i + 1] + seg[i];
    }
    // p_left(x_i) = I(x_i -> z2) / total; integrate against the density
    let mut p_left = 0.0;
    for i in 0..n - 1 {
        let fl = density.nu[i] * right_cum[i] / total;
        let fr = density.nu[i + 1] * right_cum[i + 1] / total;
        p_left += 0.5 * (fl + fr) * (x[i + 1] - x[i]);
    }
    // the density integrates to 1 on the same grid, so the complement is
    // the right mass
    Ok(ExitSplit {
        p_left,
        p_right: 1.0 - p_left,
        abs_error: seg_err / total,
        log_shift: shift,
    })
}
