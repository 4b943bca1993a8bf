//! Closed-form predictions from the labeled landscape: exit-point weights,
//! the principal exit rate, small-eigenvalue decay rates, mean exit time,
//! and concentration weights of the conditioned stationary law.
//!
//! Everything here is computed from exact critical-point data; the grid
//! enters only through the topology layer's connectivity answers. All
//! formulas use differences of f and derivatives, so adding a constant to
//! the potential changes nothing.

use serde::Serialize;

use crate::error::AsymptoticsError;
use crate::landscape::LandscapeAtlas;
use crate::topology::{AssumptionReport, GridFiltration, JMap, JMapEntry};

/// Exit weight attached to one boundary gate point.
#[derive(Debug, Clone, Serialize)]
pub struct ExitWeight {
    /// Atlas index of the boundary saddle.
    pub boundary_saddle: usize,
    pub location: [f64; 2],
    pub boundary_coordinate: f64,
    pub value: f64,
    pub normal_derivative: f64,
    pub tangential_hess_det: f64,
    /// Normalized weight in [0, 1]; the weights sum to exactly 1.
    pub a: f64,
}

/// Which eigenvalue formula produced the rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateRegime {
    /// Boundary-dominated prefactor ~ 1/sqrt(h).
    BoundaryOnly,
    /// Combined boundary and interior-saddle prefactor a1/sqrt(h) + a2.
    Mixed,
}

/// Remainder order of the exit-law expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemainderOrder {
    QuarterRoot,
    Linear,
}

/// Exponential decay rate of one small eigenvalue.
#[derive(Debug, Clone, Serialize)]
pub struct EigenvalueRate {
    /// Atlas index of the minimum this rate belongs to.
    pub minimum: usize,
    /// Barrier depth S = f(j(x)) - f(x); the eigenvalue decays like
    /// exp(-2 S / h).
    pub s: f64,
    /// Polynomial prefactor exponent: lambda ~ h^(1 + 2q) exp(-2S/h).
    pub q: f64,
}

/// Full prediction bundle for one temperature.
#[derive(Debug, Clone, Serialize)]
pub struct ExitPrediction {
    pub h: f64,
    pub weights: Vec<ExitWeight>,
    pub lambda_h: f64,
    /// ln(lambda_h), stable even when the rate underflows.
    pub log_lambda_h: f64,
    pub regime: RateRegime,
    pub mean_exit_time: f64,
    pub remainder_order: RemainderOrder,
    pub eigenvalue_rates: Vec<EigenvalueRate>,
}

/// Concentration weights of the conditioned stationary law over the global
/// minima inside the maximal well.
#[derive(Debug, Clone, Serialize)]
pub struct QsdWeights {
    /// (atlas minimum index, location, weight); weights sum to exactly 1.
    pub weights: Vec<(usize, [f64; 2], f64)>,
}

fn boundary_weight_term(atlas: &LandscapeAtlas, b: usize) -> f64 {
    let s = &atlas.boundary_saddles[b];
    s.normal_derivative / s.tangential_hess_det.sqrt()
}

/// Sum over the given minima of (det Hess f)^(-1/2), restricted to those at
/// the lowest value among them.
fn argmin_hessian_sum(atlas: &LandscapeAtlas, minima: &[usize]) -> (f64, Vec<usize>) {
    let low = minima
        .iter()
        .map(|&m| atlas.interior_criticals[m].value)
        .fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * (1.0 + low.abs());
    let argmin: Vec<usize> = minima
        .iter()
        .copied()
        .filter(|&m| (atlas.interior_criticals[m].value - low).abs() <= tol)
        .collect();
    let sum = argmin
        .iter()
        .map(|&m| 1.0 / atlas.interior_criticals[m].hessian_det.sqrt())
        .sum();
    (sum, argmin)
}

/// Normalize raw weights so they sum to exactly 1 (the last entry is the
/// exact complement of the others).
fn normalize(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    let mut out: Vec<f64> = raw.iter().map(|w| w / total).collect();
    if let Some((last, rest)) = out.split_last_mut() {
        *last = 1.0 - rest.iter().sum::<f64>();
    }
    out
}

fn weights_over_contacts(atlas: &LandscapeAtlas, contacts: &[usize]) -> Vec<ExitWeight> {
    let raw: Vec<f64> = contacts
        .iter()
        .map(|&b| boundary_weight_term(atlas, b))
        .collect();
    let a = normalize(&raw);
    contacts
        .iter()
        .zip(a)
        .map(|(&b, a)| {
            let s = &atlas.boundary_saddles[b];
            ExitWeight {
                boundary_saddle: b,
                location: s.location,
                boundary_coordinate: s.boundary_coordinate,
                value: s.value,
                normal_derivative: s.normal_derivative,
                tangential_hess_det: s.tangential_hess_det,
                a,
            }
        })
        .collect()
}

/// Exit-point weights over the maximal well's boundary contacts.
/// Requires the uniqueness, contact, and lowest-contact assumptions.
pub fn exit_weights(
    jmap: &JMap,
    atlas: &LandscapeAtlas,
    report: &AssumptionReport,
) -> Result<Vec<ExitWeight>, AsymptoticsError> {
    let mut failed = Vec::new();
    if !report.a0.passed {
        failed.push("A0".to_string());
    }
    if !report.a1.holds {
        failed.push("A1".to_string());
    }
    if !report.a2.holds {
        failed.push("A2".to_string());
    }
    if !report.a3.holds {
        failed.push("A3".to_string());
    }
    if !failed.is_empty() {
        return Err(AsymptoticsError::AssumptionsViolated { failed });
    }
    let cmax = report.cmax.as_ref().expect("A1 holds");
    let contacts = jmap.gate_boundary_contacts(&jmap.entries[cmax.entry]);
    Ok(weights_over_contacts(atlas, &contacts))
}

/// Exit-point weights for an arbitrary labeled well. Requires: the well
/// touches the domain boundary and no critical point lies on the well's
/// boundary (the gradient must not vanish there).
pub fn exit_weights_for_well(
    grid: &GridFiltration,
    jmap: &JMap,
    atlas: &LandscapeAtlas,
    entry_index: usize,
) -> Result<Vec<ExitWeight>, AsymptoticsError> {
    let entry = &jmap.entries[entry_index];
    let contacts = jmap.gate_boundary_contacts(entry);
    if contacts.is_empty() {
        return Err(AsymptoticsError::WellHypothesisViolated(
            "the well's boundary does not meet the domain boundary".into(),
        ));
    }
    if !jmap.gate_interior_saddles(entry).is_empty() {
        return Err(AsymptoticsError::WellHypothesisViolated(
            "an interior separating saddle lies on the well boundary".into(),
        ));
    }
    // Any other interior critical point sitting at the gate level and
    // attached to the well also violates |grad f| != 0 on its boundary.
    let sigma = entry.gate_value;
    let tol = 2.0 * grid.max_adjacent_gap + 1e-9 * (1.0 + sigma.abs());
    let rep_cell = grid
        .cell_of(&atlas.interior_criticals[entry.minimum].location[..grid.dim])
        .unwrap();
    let lab = grid.components_below(sigma, 0.0);
    for c in &atlas.interior_criticals {
        if c.index == 0 || (c.value - sigma).abs() > tol {
            continue;
        }
        let step = grid.cell_diagonal();
        let offsets: &[[f64; 2]] = &[[step, 0.0], [-step, 0.0], [0.0, step], [0.0, -step]];
        for off in offsets.iter().take(if grid.dim == 1 { 2 } else { 4 }) {
            let p = [c.location[0] + off[0], c.location[1] + off[1]];
            if let Some(cell) = grid.cell_of(&p[..grid.dim]) {
                if grid.cells[cell].value < c.value {
                    let d = descend_cell(grid, cell);
                    if lab.joined(d, rep_cell) {
                        return Err(AsymptoticsError::WellHypothesisViolated(format!(
                            "critical point at {:?} lies on the well boundary",
                            c.location
                        )));
                    }
                }
            }
        }
    }
    Ok(weights_over_contacts(atlas, &contacts))
}

fn descend_cell(grid: &GridFiltration, start: usize) -> usize {
    let mut cur = start;
    loop {
        let mut best = cur;
        let mut best_v = grid.cells[cur].value;
        for nb in grid.neighbors(cur) {
            if grid.cells[nb].value < best_v {
                best = nb;
                best_v = grid.cells[nb].value;
            }
        }
        if best == cur {
            return cur;
        }
        cur = best;
    }
}

/// The sharp prefactors of the principal rate.
struct RateIngredients {
    a1: f64,
    a2: f64,
    depth: f64,
}

fn rate_ingredients(
    jmap: &JMap,
    atlas: &LandscapeAtlas,
    cmax_entry: &JMapEntry,
) -> RateIngredients {
    let (min_sum, _) = argmin_hessian_sum(atlas, &cmax_entry.component.contained_minima);
    let contacts = jmap.gate_boundary_contacts(cmax_entry);
    let a1 = if contacts.is_empty() {
        0.0
    } else {
        let num: f64 = contacts
            .iter()
            .map(|&b| boundary_weight_term(atlas, b))
            .sum();
        num / (std::f64::consts::PI.sqrt() * min_sum)
    };
    let interior = jmap.gate_interior_saddles(cmax_entry);
    let a2 = if interior.is_empty() {
        0.0
    } else {
        let num: f64 = interior
            .iter()
            .map(|&ci| {
                let c = &atlas.interior_criticals[ci];
                c.neg_eigenvalue.expect("gate saddles have index 1").abs()
                    / c.hessian_det.abs().sqrt()
            })
            .sum();
        num / (2.0 * std::f64::consts::PI * min_sum)
    };
    RateIngredients {
        a1,
        a2,
        depth: cmax_entry.depth,
    }
}

fn rate_prefactor(
    jmap: &JMap,
    atlas: &LandscapeAtlas,
    report: &AssumptionReport,
    h: f64,
) -> Result<(f64, f64, RateRegime), AsymptoticsError> {
    if !report.a0.passed || !report.a1.holds {
        return Err(AsymptoticsError::HypothesesNotCertified);
    }
    let cmax = report.cmax.as_ref().expect("A1 holds");
    let entry = &jmap.entries[cmax.entry];
    let ing = rate_ingredients(jmap, atlas, entry);
    let (pref, regime) = if report.a2.holds && report.a4.holds {
        // gate entirely on the boundary: pure boundary prefactor
        (ing.a1 / h.sqrt(), RateRegime::BoundaryOnly)
    } else if report.cmax_boundary_disjoint {
        (ing.a1 / h.sqrt() + ing.a2, RateRegime::Mixed)
    } else if report.a2.holds {
        (ing.a1 / h.sqrt(), RateRegime::BoundaryOnly)
    } else {
        return Err(AsymptoticsError::HypothesesNotCertified);
    };
    Ok((pref, ing.depth, regime))
}

/// Principal exit rate at temperature h, with the regime that certified it.
///
/// The boundary-dominated branch needs the uniqueness and contact
/// assumptions; the mixed branch needs uniqueness plus the maximal well's
/// boundary meeting no other first-level well boundary. When neither set of
/// hypotheses is certified the call refuses rather than guessing.
pub fn principal_eigenvalue(
    jmap: &JMap,
    atlas: &LandscapeAtlas,
    report: &AssumptionReport,
    h: f64,
) -> Result<(f64, RateRegime), AsymptoticsError> {
    assert!(h > 0.0);
    let (pref, depth, regime) = rate_prefactor(jmap, atlas, report, h)?;
    Ok((pref * (-2.0 * depth / h).exp(), regime))
}

/// Natural log of the principal rate (never under/overflows).
pub fn log_principal_eigenvalue(
    jmap: &JMap,
    atlas: &LandscapeAtlas,
    report: &AssumptionReport,
    h: f64,
) -> Result<(f64, RateRegime), AsymptoticsError> {
    let (pref, depth, regime) = rate_prefactor(jmap, atlas, report, h)?;
    Ok((pref.ln() - 2.0 * depth / h, regime))
}

/// Exponential decay rates of all small eigenvalues: S_k = f(j(x_k)) - f(x_k)
/// sorted decreasing, with the prefactor exponent q_k = -3/4 when the gate
/// meets the domain boundary and -1/2 otherwise. Ties in S order by q
/// decreasing.
pub fn eigenvalue_rates(jmap: &JMap) -> Vec<EigenvalueRate> {
    let mut rates: Vec<EigenvalueRate> = jmap
        .entries
        .iter()
        .map(|e| {
            let touches_boundary = !jmap.gate_boundary_contacts(e).is_empty();
            EigenvalueRate {
                minimum: e.minimum,
                s: e.depth,
                q: if touches_boundary { -0.75 } else { -0.5 },
            }
        })
        .collect();
    rates.sort_by(|a, b| {
        b.s.partial_cmp(&a.s)
            .unwrap()
            .then(b.q.partial_cmp(&a.q).unwrap())
    });
    rates
}

/// Concentration weights of the conditioned stationary law over the global
/// minima in the maximal well: (det Hess f)^(-1/2), normalized.
pub fn qsd_weights(
    atlas: &LandscapeAtlas,
    report: &AssumptionReport,
) -> Result<QsdWeights, AsymptoticsError> {
    let cmax = report
        .cmax
        .as_ref()
        .ok_or(AsymptoticsError::HypothesesNotCertified)?;
    if !report.min_cmax_equals_global_min {
        return Err(AsymptoticsError::MinimumNotInCmax);
    }
    // recover the argmin minima indices from their locations
    let argmin: Vec<usize> = atlas
        .minima()
        .filter(|(_, c)| {
            cmax.argmin.iter().any(|p| {
                (p[0] - c.location[0]).abs() < 1e-12 && (p[1] - c.location[1]).abs() < 1e-12
            })
        })
        .map(|(i, _)| i)
        .collect();
    let raw: Vec<f64> = argmin
        .iter()
        .map(|&m| 1.0 / atlas.interior_criticals[m].hessian_det.sqrt())
        .collect();
    let a = normalize(&raw);
    Ok(QsdWeights {
        weights: argmin
            .into_iter()
            .zip(a)
            .map(|(m, w)| (m, atlas.interior_criticals[m].location, w))
            .collect(),
    })
}

/// Assemble the complete prediction bundle at one temperature.
pub fn predict(
    jmap: &JMap,
    atlas: &LandscapeAtlas,
    report: &AssumptionReport,
    h: f64,
) -> Result<ExitPrediction, AsymptoticsError> {
    let weights = exit_weights(jmap, atlas, report)?;
    let (lambda, regime) = principal_eigenvalue(jmap, atlas, report, h)?;
    let (log_lambda, _) = log_principal_eigenvalue(jmap, atlas, report, h)?;
    Ok(ExitPrediction {
        h,
        weights,
        lambda_h: lambda,
        log_lambda_h: log_lambda,
        regime,
        mean_exit_time: 1.0 / lambda,
        remainder_order: if report.a4.holds {
            RemainderOrder::Linear
        } else {
            RemainderOrder::QuarterRoot
        },
        eigenvalue_rates: eigenvalue_rates(jmap),
    })
}
