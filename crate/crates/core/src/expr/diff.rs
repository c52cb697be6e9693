//! Symbolic differentiation with folding of literal constant arithmetic.
//!
//! Only exact literal rules are applied: `c1 op c2`, `0 + u`, `u * 1`,
//! `0 * u`, `u^1`. There is no algebraic simplification beyond that.

use num_complex::Complex64;

use super::Expr;

fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        _ if a.is_zero() => b,
        _ if b.is_zero() => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        _ if b.is_zero() => a,
        _ if a.is_zero() => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        _ if a.is_zero() || b.is_zero() => Expr::real(0.0),
        _ if a.is_one() => b,
        _ if b.is_one() => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != Complex64::new(0.0, 0.0) => Expr::Const(x / y),
        _ if a.is_zero() => Expr::real(0.0),
        _ if b.is_one() => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn pow(a: Expr, n: i32) -> Expr {
    match (a.as_const(), n) {
        (_, 1) => a,
        (Some(c), n) if n > 0 || c != Complex64::new(0.0, 0.0) => Expr::Const(c.powi(n)),
        _ => Expr::Pow(Box::new(a), n),
    }
}

/// Returns an expression for `f'`.
pub fn differentiate(f: &Expr) -> Expr {
    match f {
        Expr::Const(_) => Expr::real(0.0),
        Expr::Var => Expr::real(1.0),
        Expr::Neg(u) => neg(differentiate(u)),
        Expr::Add(u, v) => add(differentiate(u), differentiate(v)),
        Expr::Sub(u, v) => sub(differentiate(u), differentiate(v)),
        Expr::Mul(u, v) => add(
            mul(differentiate(u), (**v).clone()),
            mul((**u).clone(), differentiate(v)),
        ),
        Expr::Div(u, v) => div(
            sub(
                mul(differentiate(u), (**v).clone()),
                mul((**u).clone(), differentiate(v)),
            ),
            pow((**v).clone(), 2),
        ),
        Expr::Exp(u) => mul(f.clone(), differentiate(u)),
        Expr::Log(u) => div(differentiate(u), (**u).clone()),
        Expr::Pow(u, n) => {
            let n = *n;
            let du = differentiate(u);
            let lowered = if n == 1 {
                Expr::real(1.0)
            } else {
                pow((**u).clone(), n - 1)
            };
            mul(mul(Expr::real(n as f64), lowered), du)
        }
    }
}
