//! Potential specifications, exact AD evaluation, and domain geometry.

mod ast;
mod catalog;
mod domain;
mod dual;
mod tape;

pub use ast::{Expr, Func};
pub use catalog::{catalog_entry, catalog_names, CatalogEntry};
pub use domain::DomainGeometry;
pub use dual::{Dual2, Grad};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, ParseError};

/// Where a potential came from: free-form expression or a catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialSource {
    Expression {
        expr: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
    Catalog {
        catalog: String,
        #[serde(default)]
        params: BTreeMap<String, f64>,
    },
}

/// A parsed potential: fixed evaluation tree plus bound parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub expr: Expr,
    pub params: BTreeMap<String, f64>,
    pub dimension: usize,
}

impl PotentialSpec {
    /// Canonical text form; reparses to an identical evaluation tree.
    pub fn print(&self) -> String {
        self.expr.to_string()
    }
}

/// Parse an expression and bind parameters.
pub fn parse_potential(
    text: &str,
    params: &BTreeMap<String, f64>,
) -> Result<PotentialSpec, ParseError> {
    let expr = ast::parse(text, params)?;
    let dimension = match expr.max_axis() {
        Some(1) => 2,
        _ => 1,
    };
    Ok(PotentialSpec {
        expr,
        params: params.clone(),
        dimension,
    })
}

/// Value, gradient, and Hessian of the potential at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalOutput {
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
}

/// Immutable evaluator bundle for a potential. Reentrant; safe to share
/// across threads. Carries a compiled postfix tape for the sampling hot
/// loop; exact second-order derivatives still walk the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub spec: PotentialSpec,
    tape: tape::Tape,
}

impl PotentialField {
    pub fn new(spec: PotentialSpec) -> Self {
        let tape = tape::Tape::compile(&spec.expr, &spec.params);
        assert!(tape.fits_stack(), "expression too deeply nested");
        PotentialField { spec, tape }
    }

    pub fn from_source(source: &PotentialSource) -> Result<Self, crate::error::CoreError> {
        match source {
            PotentialSource::Expression { expr, params } => {
                Ok(PotentialField::new(parse_potential(expr, params)?))
            }
            PotentialSource::Catalog {
                catalog: name,
                params,
            } => {
                let entry = catalog_entry(name)
                    .ok_or_else(|| crate::error::CoreError::UnknownCatalogEntry(name.clone()))?;
                Ok(PotentialField::new(entry.spec_with(params)?))
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.spec.dimension
    }

    /// Exact AD derivatives at any point the expression is defined at.
    pub fn eval_raw(&self, x: &[f64]) -> Result<EvalOutput, EvalError> {
        let d = ast::eval_dual2(&self.spec.expr, x, &self.spec.params)?;
        Ok(EvalOutput {
            value: d.v,
            gradient: d.g,
            hessian: d.h,
        })
    }

    /// Value only.
    pub fn value(&self, x: &[f64]) -> Result<f64, EvalError> {
        if self.spec.dimension == 1 {
            Ok(self.tape.value_grad1(x[0])?.0)
        } else {
            Ok(self.tape.value_grad2(x[0], x[1])?.0)
        }
    }

    /// Value and gradient over the compiled tape (hot-path friendly).
    pub fn value_grad(&self, x: &[f64]) -> Result<(f64, [f64; 2]), EvalError> {
        if self.spec.dimension == 1 {
            let (v, g) = self.tape.value_grad1(x[0])?;
            Ok((v, [g, 0.0]))
        } else {
            let (v, g) = self.tape.value_grad2(x[0], x[1])?;
            Ok((v, g))
        }
    }

    /// Scalar value and derivative for 1D potentials.
    #[inline]
    pub fn value_grad1(&self, x: f64) -> Result<(f64, f64), EvalError> {
        debug_assert_eq!(self.spec.dimension, 1);
        self.tape.value_grad1(x)
    }
}

/// Checked evaluation restricted to the closed domain.
pub fn evaluate(
    field: &PotentialField,
    geom: &DomainGeometry,
    x: &[f64],
) -> Result<EvalOutput, EvalError> {
    let tol = 1e-9 * geom.diameter().max(1.0);
    if geom.boundary_distance(x) > tol {
        return Err(EvalError::OutOfDomain);
    }
    field.eval_raw(x)
}

/// Outward normal derivative of f at a boundary point z. In 1D the normal is
/// -1 at the left endpoint and +1 at the right endpoint.
pub fn boundary_normal_derivative(
    field: &PotentialField,
    geom: &DomainGeometry,
    z: &[f64],
) -> Result<f64, EvalError> {
    let n = geom.outward_normal(z)?;
    let out = field.eval_raw(z)?;
    Ok(out.gradient[0] * n[0] + out.gradient[1] * n[1])
}
