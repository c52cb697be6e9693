//! Elementary function expressions over the complex numbers.
//!
//! An [`Expr`] is built from complex constants, the variable `x`, the four
//! arithmetic operations, `exp`, the principal `log`, and integer powers.
//! Expressions are immutable trees; every operation here is a pure function.

mod diff;
mod parse;

use std::fmt;

use num_complex::Complex64;

pub use diff::differentiate;
pub use parse::{parse, ParseError};

/// Modulus below which a denominator or log argument counts as a pole.
pub const DEFAULT_POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Log(Box<Expr>),
    /// Integer power with a nonzero exponent.
    Pow(Box<Expr>, i32),
}

/// Value of an expression at a point together with a pole marker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult {
    pub value: Complex64,
    pub pole_flag: bool,
}

impl Expr {
    pub fn constant(c: impl Into<Complex64>) -> Expr {
        Expr::Const(c.into())
    }

    pub fn real(v: f64) -> Expr {
        Expr::Const(Complex64::new(v, 0.0))
    }

    pub fn as_const(&self) -> Option<Complex64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == Complex64::new(0.0, 0.0))
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == Complex64::new(1.0, 0.0))
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Var => vec![],
            Expr::Neg(a) | Expr::Exp(a) | Expr::Log(a) | Expr::Pow(a, _) => vec![a],
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => vec![a, b],
        }
    }

    /// True when the expression is syntactically entire: no division, no
    /// logarithm and no negative power.
    pub fn is_entire(&self) -> bool {
        match self {
            Expr::Div(..) | Expr::Log(_) => false,
            Expr::Pow(_, n) if *n < 0 => false,
            _ => self.children().into_iter().all(Expr::is_entire),
        }
    }

    pub fn evaluate(&self, x: Complex64) -> EvalResult {
        evaluate_with(self, x, DEFAULT_POLE_TOL)
    }
}

/// Evaluates `f` at `x` with the principal branch of `log` and the default
/// pole tolerance.
pub fn evaluate(f: &Expr, x: Complex64) -> EvalResult {
    evaluate_with(f, x, DEFAULT_POLE_TOL)
}

pub fn evaluate_with(f: &Expr, x: Complex64, pole_tol: f64) -> EvalResult {
    let mut pole = false;
    let value = eval_rec(f, x, pole_tol, &mut pole);
    EvalResult {
        value,
        pole_flag: pole,
    }
}

fn eval_rec(f: &Expr, x: Complex64, tol: f64, pole: &mut bool) -> Complex64 {
    match f {
        Expr::Const(c) => *c,
        Expr::Var => x,
        Expr::Neg(a) => -eval_rec(a, x, tol, pole),
        Expr::Add(a, b) => eval_rec(a, x, tol, pole) + eval_rec(b, x, tol, pole),
        Expr::Sub(a, b) => eval_rec(a, x, tol, pole) - eval_rec(b, x, tol, pole),
        Expr::Mul(a, b) => eval_rec(a, x, tol, pole) * eval_rec(b, x, tol, pole),
        Expr::Div(a, b) => {
            let num = eval_rec(a, x, tol, pole);
            let den = eval_rec(b, x, tol, pole);
            if den.norm() < tol {
                *pole = true;
            }
            num / den
        }
        Expr::Exp(a) => eval_rec(a, x, tol, pole).exp(),
        Expr::Log(a) => {
            let arg = eval_rec(a, x, tol, pole);
            if arg.norm() < tol {
                *pole = true;
            }
            arg.ln()
        }
        Expr::Pow(a, n) => {
            let base = eval_rec(a, x, tol, pole);
            if *n < 0 && base.norm() < tol {
                *pole = true;
            }
            base.powi(*n)
        }
    }
}

/// Smallest distance from any `log` argument to the principal branch cut
/// (the closed negative real axis) when evaluating `f` at `x`.
///
/// Returns `f64::INFINITY` when `f` contains no logarithm.
pub fn log_cut_clearance(f: &Expr, x: Complex64) -> f64 {
    fn walk(f: &Expr, x: Complex64, best: &mut f64) {
        if let Expr::Log(a) = f {
            let z = evaluate(a, x).value;
            let d = if z.re <= 0.0 { z.im.abs() } else { z.norm() };
            *best = best.min(d);
        }
        for c in f.children() {
            walk(c, x, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(f, x, &mut best);
    best
}

/// Maximal nesting of `exp`/`log` nodes along any root-to-leaf path.
pub fn tower_depth(f: &Expr) -> usize {
    let own = usize::from(matches!(f, Expr::Exp(_) | Expr::Log(_)));
    own + f
        .children()
        .into_iter()
        .map(tower_depth)
        .max()
        .unwrap_or(0)
}

// Printing follows the grammar levels: sum < term < factor < base.
const SUM: u8 = 0;
const TERM: u8 = 1;
const FACTOR: u8 = 2;
const BASE: u8 = 3;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => SUM,
        Expr::Mul(..) | Expr::Div(..) => TERM,
        Expr::Pow(..) => FACTOR,
        Expr::Const(c) if !is_plain_literal(*c) => SUM,
        _ => BASE,
    }
}

fn is_plain_literal(c: Complex64) -> bool {
    (c.im == 0.0 && c.re.is_sign_positive() && c.re.is_finite()) || c == Complex64::new(0.0, 1.0)
}

fn write_at(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if level(e) < min {
        write!(f, "(")?;
        write_expr(e, f)?;
        return write!(f, ")");
    }
    write_expr(e, f)
}

fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(c) => {
            if c.im == 0.0 && c.re.is_sign_positive() {
                write!(f, "{}", c.re)
            } else if *c == Complex64::new(0.0, 1.0) {
                write!(f, "i")
            } else if c.im == 0.0 {
                write!(f, "-{}", -c.re)
            } else {
                write!(f, "{} + {}*i", c.re, c.im)
            }
        }
        Expr::Var => write!(f, "x"),
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_at(a, BASE, f)
        }
        Expr::Add(a, b) => {
            write_at(a, SUM, f)?;
            write!(f, " + ")?;
            write_at(b, TERM, f)
        }
        Expr::Sub(a, b) => {
            write_at(a, SUM, f)?;
            write!(f, " - ")?;
            write_at(b, TERM, f)
        }
        Expr::Mul(a, b) => {
            write_at(a, TERM, f)?;
            write!(f, "*")?;
            write_at(b, FACTOR, f)
        }
        Expr::Div(a, b) => {
            write_at(a, TERM, f)?;
            write!(f, "/")?;
            write_at(b, FACTOR, f)
        }
        Expr::Exp(a) => {
            write!(f, "exp(")?;
            write_expr(a, f)?;
            write!(f, ")")
        }
        Expr::Log(a) => {
            write!(f, "log(")?;
            write_expr(a, f)?;
            write!(f, ")")
        }
        Expr::Pow(a, n) => {
            // `-x^2` parses as `(-x)^2`; always spell that out.
            let needs_parens = level(a) < BASE || matches!(**a, Expr::Neg(_));
            if needs_parens {
                write!(f, "(")?;
                write_expr(a, f)?;
                write!(f, ")")?;
            } else {
                write_expr(a, f)?;
            }
            write!(f, "^{n}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f)
    }
}
