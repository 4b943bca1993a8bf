//! Flat postfix compilation of expression trees for the sampling hot loop.
//!
//! Parameters are folded into constants at build time (they are fixed for
//! the lifetime of a field), and evaluation runs over a fixed-size value
//! stack with no recursion or heap traffic.

use crate::error::EvalError;

use super::ast::{Expr, Func};
use super::dual::Grad;
use std::collections::BTreeMap;

const MAX_STACK: usize = 48;

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Const(f64),
    Var(u8),
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    PowI(i32),
    PowF(f64),
    Sin,
    Cos,
    Exp,
    Log,
    Tanh,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    ops: Vec<Op>,
}

fn as_integer(p: f64) -> Option<i32> {
    let r = p.round();
    if (p - r).abs() < 1e-9 && r.abs() < 1e9 {
        Some(r as i32)
    } else {
        None
    }
}

/// Constant value of a parameter-only subtree (exponents were validated to
/// be variable-free at parse time).
fn const_eval(e: &Expr, params: &BTreeMap<String, f64>) -> f64 {
    match e {
        Expr::Num(v) => *v,
        Expr::Param(p) => params[p],
        Expr::Var(_) => unreachable!("constant subtree"),
        Expr::Add(a, b) => const_eval(a, params) + const_eval(b, params),
        Expr::Sub(a, b) => const_eval(a, params) - const_eval(b, params),
        Expr::Mul(a, b) => const_eval(a, params) * const_eval(b, params),
        Expr::Div(a, b) => const_eval(a, params) / const_eval(b, params),
        Expr::Neg(a) => -const_eval(a, params),
        Expr::Pow(a, b) => {
            let base = const_eval(a, params);
            let p = const_eval(b, params);
            match as_integer(p) {
                Some(n) => base.powi(n),
                None => base.powf(p),
            }
        }
        Expr::Call(f, a) => {
            let u = const_eval(a, params);
            match f {
                Func::Sin => u.sin(),
                Func::Cos => u.cos(),
                Func::Exp => u.exp(),
                Func::Log => u.ln(),
                Func::Tanh => u.tanh(),
            }
        }
    }
}

impl Tape {
    pub fn compile(expr: &Expr, params: &BTreeMap<String, f64>) -> Tape {
        let mut ops = Vec::new();
        fn walk(e: &Expr, params: &BTreeMap<String, f64>, ops: &mut Vec<Op>) {
            // fold variable-free subtrees into single constants
            if e.max_axis().is_none() {
                ops.push(Op::Const(const_eval(e, params)));
                return;
            }
            match e {
                Expr::Num(_) | Expr::Param(_) => unreachable!("handled by the fold"),
                Expr::Var(a) => ops.push(Op::Var(*a as u8)),
                Expr::Add(a, b) => {
                    walk(a, params, ops);
                    walk(b, params, ops);
                    ops.push(Op::Add);
                }
                Expr::Sub(a, b) => {
                    walk(a, params, ops);
                    walk(b, params, ops);
                    ops.push(Op::Sub);
                }
                Expr::Mul(a, b) => {
                    walk(a, params, ops);
                    walk(b, params, ops);
                    ops.push(Op::Mul);
                }
                Expr::Div(a, b) => {
                    walk(a, params, ops);
                    walk(b, params, ops);
                    ops.push(Op::Div);
                }
                Expr::Neg(a) => {
                    walk(a, params, ops);
                    ops.push(Op::Neg);
                }
                Expr::Pow(a, b) => {
                    walk(a, params, ops);
                    let p = const_eval(b, params);
                    match as_integer(p) {
                        Some(n) => ops.push(Op::PowI(n)),
                        None => ops.push(Op::PowF(p)),
                    }
                }
                Expr::Call(f, a) => {
                    walk(a, params, ops);
                    ops.push(match f {
                        Func::Sin => Op::Sin,
                        Func::Cos => Op::Cos,
                        Func::Exp => Op::Exp,
                        Func::Log => Op::Log,
                        Func::Tanh => Op::Tanh,
                    });
                }
            }
        }
        walk(expr, params, &mut ops);
        Tape { ops }
    }

    /// Value and d/dx, for 1D sampling.
    #[inline]
    pub fn value_grad1(&self, x: f64) -> Result<(f64, f64), EvalError> {
        let mut vs = [0.0_f64; MAX_STACK];
        let mut gs = [0.0_f64; MAX_STACK];
        let mut top = 0usize;
        for op in &self.ops {
            match op {
                Op::Const(c) => {
                    vs[top] = *c;
                    gs[top] = 0.0;
                    top += 1;
                }
                Op::Var(_) => {
                    vs[top] = x;
                    gs[top] = 1.0;
                    top += 1;
                }
                Op::Add => {
                    top -= 1;
                    vs[top - 1] += vs[top];
                    gs[top - 1] += gs[top];
                }
                Op::Sub => {
                    top -= 1;
                    vs[top - 1] -= vs[top];
                    gs[top - 1] -= gs[top];
                }
                Op::Mul => {
                    top -= 1;
                    let (av, ag) = (vs[top - 1], gs[top - 1]);
                    let (bv, bg) = (vs[top], gs[top]);
                    vs[top - 1] = av * bv;
                    gs[top - 1] = av * bg + bv * ag;
                }
                Op::Div => {
                    top -= 1;
                    let (av, ag) = (vs[top - 1], gs[top - 1]);
                    let (bv, bg) = (vs[top], gs[top]);
                    if bv == 0.0 {
                        return Err(EvalError::Domain("division by zero".into()));
                    }
                    vs[top - 1] = av / bv;
                    gs[top - 1] = (ag - (av / bv) * bg) / bv;
                }
                Op::Neg => {
                    vs[top - 1] = -vs[top - 1];
                    gs[top - 1] = -gs[top - 1];
                }
                Op::PowI(n) => {
                    let u = vs[top - 1];
                    if *n < 0 && u == 0.0 {
                        return Err(EvalError::Domain("0 raised to a negative power".into()));
                    }
                    let d = *n as f64 * u.powi(n - 1);
                    vs[top - 1] = u.powi(*n);
                    gs[top - 1] *= d;
                }
                Op::PowF(p) => {
                    let u = vs[top - 1];
                    if u <= 0.0 {
                        return Err(EvalError::Domain(format!(
                            "non-integer power of non-positive base {u}"
                        )));
                    }
                    vs[top - 1] = u.powf(*p);
                    gs[top - 1] *= p * u.powf(p - 1.0);
                }
                Op::Sin => {
                    let (s, c) = vs[top - 1].sin_cos();
                    vs[top - 1] = s;
                    gs[top - 1] *= c;
                }
                Op::Cos => {
                    let (s, c) = vs[top - 1].sin_cos();
                    vs[top - 1] = c;
                    gs[top - 1] *= -s;
                }
                Op::Exp => {
                    let e = vs[top - 1].exp();
                    vs[top - 1] = e;
                    gs[top - 1] *= e;
                }
                Op::Log => {
                    let u = vs[top - 1];
                    if u <= 0.0 {
                        return Err(EvalError::Domain(format!("log of {u}")));
                    }
                    vs[top - 1] = u.ln();
                    gs[top - 1] /= u;
                }
                Op::Tanh => {
                    let t = vs[top - 1].tanh();
                    vs[top - 1] = t;
                    gs[top - 1] *= 1.0 - t * t;
                }
            }
        }
        Ok((vs[0], gs[0]))
    }

    /// Value and gradient for 2D sampling.
    #[inline]
    pub fn value_grad2(&self, x: f64, y: f64) -> Result<(f64, [f64; 2]), EvalError> {
        let mut st = [Grad::constant(0.0); MAX_STACK];
        let mut top = 0usize;
        for op in &self.ops {
            match op {
                Op::Const(c) => {
                    st[top] = Grad::constant(*c);
                    top += 1;
                }
                Op::Var(a) => {
                    st[top] = Grad::variable(if *a == 0 { x } else { y }, *a as usize);
                    top += 1;
                }
                Op::Add => {
                    top -= 1;
                    st[top - 1] = st[top - 1].add(st[top]);
                }
                Op::Sub => {
                    top -= 1;
                    st[top - 1] = st[top - 1].sub(st[top]);
                }
                Op::Mul => {
                    top -= 1;
                    st[top - 1] = st[top - 1].mul(st[top]);
                }
                Op::Div => {
                    top -= 1;
                    if st[top].v == 0.0 {
                        return Err(EvalError::Domain("division by zero".into()));
                    }
                    st[top - 1] = st[top - 1].div(st[top]);
                }
                Op::Neg => st[top - 1] = st[top - 1].neg(),
                Op::PowI(n) => {
                    if *n < 0 && st[top - 1].v == 0.0 {
                        return Err(EvalError::Domain("0 raised to a negative power".into()));
                    }
                    st[top - 1] = st[top - 1].powi(*n as i64);
                }
                Op::PowF(p) => {
                    if st[top - 1].v <= 0.0 {
                        return Err(EvalError::Domain(
                            "non-integer power of non-positive base".into(),
                        ));
                    }
                    st[top - 1] = st[top - 1].powf(*p);
                }
                Op::Sin => st[top - 1] = st[top - 1].sin(),
                Op::Cos => st[top - 1] = st[top - 1].cos(),
                Op::Exp => st[top - 1] = st[top - 1].exp(),
                Op::Log => {
                    if st[top - 1].v <= 0.0 {
                        return Err(EvalError::Domain(format!("log of {}", st[top - 1].v)));
                    }
                    st[top - 1] = st[top - 1].ln();
                }
                Op::Tanh => st[top - 1] = st[top - 1].tanh(),
            }
        }
        Ok((st[0].v, st[0].g))
    }

    /// Maximum stack depth the tape reaches (validated at construction).
    pub fn depth(&self) -> usize {
        let mut depth = 0usize;
        let mut max = 0usize;
        for op in &self.ops {
            match op {
                Op::Const(_) | Op::Var(_) => {
                    depth += 1;
                    max = max.max(depth);
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div => depth -= 1,
                _ => {}
            }
        }
        max
    }

    pub fn fits_stack(&self) -> bool {
        self.depth() <= MAX_STACK
    }
}

#[cfg(test)]
mod tests {
    use super::super::ast::parse;
    use super::*;

    #[test]
    fn tape_matches_tree_evaluation() {
        let params: BTreeMap<String, f64> =
            [("c".to_string(), 0.37), ("k".to_string(), 2.5)].into();
        for src in [
            "(x^2-1)^2 + c*x",
            "c*exp(-k*(x-0.3)^2) + x^2/2 - sin(x)*tanh(x)",
            "x^2*(x^2-2.25)^2 + c*x*(x^2-4)",
            "(x^2+y^2-1)^2 + c*y^2 + k*y",
            "x^0.5 + log(x+3)",
        ] {
            let e = parse(src, &params).unwrap();
            let tape = Tape::compile(&e, &params);
            assert!(tape.fits_stack());
            let dim = e.max_axis().map_or(1, |a| a + 1);
            for i in 0..40 {
                let x = 0.31 + 0.05 * i as f64;
                let y = -0.8 + 0.04 * i as f64;
                let tree = super::super::ast::eval_grad(&e, &[x, y], &params).unwrap();
                if dim == 1 {
                    let (v, g) = tape.value_grad1(x).unwrap();
                    assert!((v - tree.v).abs() <= 1e-14 * (1.0 + tree.v.abs()));
                    assert!((g - tree.g[0]).abs() <= 1e-13 * (1.0 + tree.g[0].abs()));
                } else {
                    let (v, g) = tape.value_grad2(x, y).unwrap();
                    assert!((v - tree.v).abs() <= 1e-14 * (1.0 + tree.v.abs()));
                    assert!((g[0] - tree.g[0]).abs() <= 1e-13 * (1.0 + tree.g[0].abs()));
                    assert!((g[1] - tree.g[1]).abs() <= 1e-13 * (1.0 + tree.g[1].abs()));
                }
            }
        }
    }

    #[test]
    fn tape_domain_errors() {
        let e = parse("log(x)", &BTreeMap::new()).unwrap();
        let tape = Tape::compile(&e, &BTreeMap::new());
        assert!(tape.value_grad1(-1.0).is_err());
    }
}
