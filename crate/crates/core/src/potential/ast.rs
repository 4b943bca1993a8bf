//! Expression grammar for potentials.
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := unary ("^" unary)?
//! unary  := "-"? base
//! base   := NUMBER | IDENT | "(" expr ")" | FUNC "(" expr ")"
//! FUNC   := "sin"|"cos"|"exp"|"log"|"tanh"
//! IDENT  := "x"|"y"|parameter name
//! ```
//!
//! Note the grammar binds unary minus tighter than `^`: `-x^2` parses as
//! `(-x)^2`, and `^` does not chain.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{EvalError, ParseError};

use super::dual::{Dual2, Grad};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Tanh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Tanh => "tanh",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }
}

/// Fixed evaluation tree of a parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Variable axis: 0 = x, 1 = y.
    Var(usize),
    Param(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Highest variable axis used, if any: None for constants, Some(0) for x
    /// only, Some(1) when y appears.
    pub fn max_axis(&self) -> Option<usize> {
        match self {
            Expr::Num(_) | Expr::Param(_) => None,
            Expr::Var(a) => Some(*a),
            Expr::Neg(e) | Expr::Call(_, e) => e.max_axis(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => match (a.max_axis(), b.max_axis()) {
                (None, m) | (m, None) => m,
                (Some(p), Some(q)) => Some(p.max(q)),
            },
        }
    }

    fn uses_variables(&self) -> bool {
        self.max_axis().is_some()
    }
}

// ---------------------------------------------------------------------------
// Tokenizer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::End, start));
        }
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                let mut seen_e = false;
                while end < self.src.len() {
                    let d = self.src[end];
                    let num_char = d.is_ascii_digit()
                        || d == b'.'
                        || d == b'e'
                        || d == b'E'
                        || (seen_e
                            && (d == b'+' || d == b'-')
                            && matches!(self.src[end - 1], b'e' | b'E'));
                    if !num_char {
                        break;
                    }
                    if d == b'e' || d == b'E' {
                        seen_e = true;
                    }
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                    position: start,
                    expected: "number".into(),
                })?;
                self.pos = end;
                return Ok((Tok::Num(value), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end])
                    .unwrap()
                    .to_owned();
                self.pos = end;
                return Ok((Tok::Ident(text), start));
            }
            _ => {
                return Err(ParseError::Syntax {
                    position: start,
                    expected: "number, identifier, '(', or operator".into(),
                })
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: Tok,
    current_pos: usize,
    params: &'a BTreeMap<String, f64>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, params: &'a BTreeMap<String, f64>) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let (current, current_pos) = lexer.next()?;
        Ok(Parser {
            lexer,
            current,
            current_pos,
            params,
        })
    }

    fn bump(&mut self) -> Result<(), ParseError> {
        let (t, p) = self.lexer.next()?;
        self.current = t;
        self.current_pos = p;
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut node = self.term()?;
        loop {
            match self.current {
                Tok::Plus => {
                    self.bump()?;
                    node = Expr::Add(Box::new(node), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump()?;
                    node = Expr::Sub(Box::new(node), Box::new(self.term()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut node = self.factor()?;
        loop {
            match self.current {
                Tok::Star => {
                    self.bump()?;
                    node = Expr::Mul(Box::new(node), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump()?;
                    node = Expr::Div(Box::new(node), Box::new(self.factor()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.unary()?;
        if self.current == Tok::Caret {
            self.bump()?;
            let exponent = self.unary()?;
            if exponent.uses_variables() {
                return Err(ParseError::NonSmoothFunction {
                    name: "^".into(),
                    detail: "exponent must be constant (no x or y)".into(),
                });
            }
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.current == Tok::Minus {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.base()?)));
        }
        self.base()
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        match self.current.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                if self.current != Tok::RParen {
                    return Err(ParseError::Syntax {
                        position: self.current_pos,
                        expected: "')'".into(),
                    });
                }
                self.bump()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump()?;
                if self.current == Tok::LParen {
                    // function call
                    let func = Func::from_name(&name).ok_or(ParseError::NonSmoothFunction {
                        name: name.clone(),
                        detail: "only sin, cos, exp, log, tanh are allowed".into(),
                    })?;
                    self.bump()?;
                    let arg = self.expr()?;
                    if self.current != Tok::RParen {
                        return Err(ParseError::Syntax {
                            position: self.current_pos,
                            expected: "')'".into(),
                        });
                    }
                    self.bump()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                match name.as_str() {
                    "x" => Ok(Expr::Var(0)),
                    "y" => Ok(Expr::Var(1)),
                    _ if self.params.contains_key(&name) => Ok(Expr::Param(name)),
                    _ => Err(ParseError::UnknownIdentifier { name }),
                }
            }
            _ => Err(ParseError::Syntax {
                position: self.current_pos,
                expected: "number, identifier, or '('".into(),
            }),
        }
    }
}

/// Parse `text` against the grammar, binding identifiers other than x/y to
/// entries of `params`. Parsing is total and deterministic.
pub fn parse(text: &str, params: &BTreeMap<String, f64>) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text, params)?;
    let e = p.expr()?;
    if p.current != Tok::End {
        return Err(ParseError::Syntax {
            position: p.current_pos,
            expected: "end of input or operator".into(),
        });
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Printer: prints a form that reparses to an identical tree.
// ---------------------------------------------------------------------------

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Composite operands are parenthesized; parentheses do not create
        // tree nodes, so parse(print(e)) == e.
        fn atom(e: &Expr) -> bool {
            matches!(e, Expr::Num(v) if *v >= 0.0) | matches!(e, Expr::Var(_) | Expr::Param(_))
        }
        fn wrap(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if atom(e) {
                write!(f, "{e}")
            } else {
                write!(f, "({e})")
            }
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(0) => write!(f, "x"),
            Expr::Var(_) => write!(f, "y"),
            Expr::Param(p) => write!(f, "{p}"),
            Expr::Add(a, b) => {
                wrap(a, f)?;
                write!(f, " + ")?;
                wrap(b, f)
            }
            Expr::Sub(a, b) => {
                wrap(a, f)?;
                write!(f, " - ")?;
                wrap(b, f)
            }
            Expr::Mul(a, b) => {
                wrap(a, f)?;
                write!(f, "*")?;
                wrap(b, f)
            }
            Expr::Div(a, b) => {
                wrap(a, f)?;
                write!(f, "/")?;
                wrap(b, f)
            }
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(a, f)
            }
            Expr::Pow(a, b) => {
                wrap(a, f)?;
                write!(f, "^")?;
                wrap(b, f)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Evaluate the constant value of a variable-free subtree.
fn const_value(e: &Expr, params: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    Ok(match e {
        Expr::Num(v) => *v,
        Expr::Var(_) => unreachable!("constant subtree contains a variable"),
        Expr::Param(p) => *params.get(p).expect("validated at parse time"),
        Expr::Add(a, b) => const_value(a, params)? + const_value(b, params)?,
        Expr::Sub(a, b) => const_value(a, params)? - const_value(b, params)?,
        Expr::Mul(a, b) => const_value(a, params)? * const_value(b, params)?,
        Expr::Div(a, b) => const_value(a, params)? / const_value(b, params)?,
        Expr::Neg(a) => -const_value(a, params)?,
        Expr::Pow(a, b) => {
            let base = const_value(a, params)?;
            let p = const_value(b, params)?;
            pow_value(base, p)?
        }
        Expr::Call(func, a) => {
            let u = const_value(a, params)?;
            match func {
                Func::Sin => u.sin(),
                Func::Cos => u.cos(),
                Func::Exp => u.exp(),
                Func::Log => {
                    if u <= 0.0 {
                        return Err(EvalError::Domain(format!("log of {u}")));
                    }
                    u.ln()
                }
                Func::Tanh => u.tanh(),
            }
        }
    })
}

fn pow_value(base: f64, p: f64) -> Result<f64, EvalError> {
    if let Some(n) = as_integer(p) {
        if n < 0 && base == 0.0 {
            return Err(EvalError::Domain("0 raised to a negative power".into()));
        }
        Ok(base.powi(n as i32))
    } else {
        if base <= 0.0 {
            return Err(EvalError::Domain(format!(
                "non-integer power {p} of non-positive base {base}"
            )));
        }
        Ok(base.powf(p))
    }
}

fn as_integer(p: f64) -> Option<i64> {
    let r = p.round();
    if (p - r).abs() < 1e-9 && r.abs() < 1e15 {
        Some(r as i64)
    } else {
        None
    }
}

/// Second-order evaluation: value, gradient, Hessian at `x`.
pub fn eval_dual2(e: &Expr, x: &[f64], params: &BTreeMap<String, f64>) -> Result<Dual2, EvalError> {
    Ok(match e {
        Expr::Num(v) => Dual2::constant(*v),
        Expr::Var(a) => Dual2::variable(x[*a], *a),
        Expr::Param(p) => Dual2::constant(*params.get(p).expect("validated at parse time")),
        Expr::Add(a, b) => eval_dual2(a, x, params)?.add(eval_dual2(b, x, params)?),
        Expr::Sub(a, b) => eval_dual2(a, x, params)?.sub(eval_dual2(b, x, params)?),
        Expr::Mul(a, b) => eval_dual2(a, x, params)?.mul(eval_dual2(b, x, params)?),
        Expr::Div(a, b) => {
            let den = eval_dual2(b, x, params)?;
            if den.v == 0.0 {
                return Err(EvalError::Domain("division by zero".into()));
            }
            eval_dual2(a, x, params)?.div(den)
        }
        Expr::Neg(a) => eval_dual2(a, x, params)?.neg(),
        Expr::Pow(a, b) => {
            let base = eval_dual2(a, x, params)?;
            let p = const_value(b, params)?;
            if let Some(n) = as_integer(p) {
                if n < 0 && base.v == 0.0 {
                    return Err(EvalError::Domain("0 raised to a negative power".into()));
                }
                base.powi(n)
            } else {
                if base.v <= 0.0 {
                    return Err(EvalError::Domain(format!(
                        "non-integer power {p} of non-positive base {}",
                        base.v
                    )));
                }
                base.powf(p)
            }
        }
        Expr::Call(func, a) => {
            let u = eval_dual2(a, x, params)?;
            match func {
                Func::Sin => u.sin(),
                Func::Cos => u.cos(),
                Func::Exp => u.exp(),
                Func::Log => {
                    if u.v <= 0.0 {
                        return Err(EvalError::Domain(format!("log of {}", u.v)));
                    }
                    u.ln()
                }
                Func::Tanh => u.tanh(),
            }
        }
    })
}

/// First-order evaluation: value and gradient only. The compiled tape is
/// the production path; this tree walk is kept as the reference the tape is
/// tested against.
#[cfg_attr(not(test), allow(dead_code))]
pub fn eval_grad(e: &Expr, x: &[f64], params: &BTreeMap<String, f64>) -> Result<Grad, EvalError> {
    Ok(match e {
        Expr::Num(v) => Grad::constant(*v),
        Expr::Var(a) => Grad::variable(x[*a], *a),
        Expr::Param(p) => Grad::constant(*params.get(p).expect("validated at parse time")),
        Expr::Add(a, b) => eval_grad(a, x, params)?.add(eval_grad(b, x, params)?),
        Expr::Sub(a, b) => eval_grad(a, x, params)?.sub(eval_grad(b, x, params)?),
        Expr::Mul(a, b) => eval_grad(a, x, params)?.mul(eval_grad(b, x, params)?),
        Expr::Div(a, b) => {
            let den = eval_grad(b, x, params)?;
            if den.v == 0.0 {
                return Err(EvalError::Domain("division by zero".into()));
            }
            eval_grad(a, x, params)?.div(den)
        }
        Expr::Neg(a) => eval_grad(a, x, params)?.neg(),
        Expr::Pow(a, b) => {
            let base = eval_grad(a, x, params)?;
            let p = const_value(b, params)?;
            if let Some(n) = as_integer(p) {
                if n < 0 && base.v == 0.0 {
                    return Err(EvalError::Domain("0 raised to a negative power".into()));
                }
                base.powi(n)
            } else {
                if base.v <= 0.0 {
                    return Err(EvalError::Domain(format!(
                        "non-integer power {p} of non-positive base {}",
                        base.v
                    )));
                }
                base.powf(p)
            }
        }
        Expr::Call(func, a) => {
            let u = eval_grad(a, x, params)?;
            match func {
                Func::Sin => u.sin(),
                Func::Cos => u.cos(),
                Func::Exp => u.exp(),
                Func::Log => {
                    if u.v <= 0.0 {
                        return Err(EvalError::Domain(format!("log of {}", u.v)));
                    }
                    u.ln()
                }
                Func::Tanh => u.tanh(),
            }
        }
    })
}
