//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use galois_scope::expr::{differentiate, evaluate_with, log_cut_clearance, Expr};
use galois_scope::solve::Window;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Roots of the monic polynomial `x^n + c[n-1] x^(n-1) + ... + c[0]` as
/// eigenvalues of its companion matrix.
pub fn companion_roots(lower: &[Complex64]) -> Vec<Complex64> {
    let n = lower.len();
    if lower.iter().all(|z| z.im == 0.0) {
        let m = DMatrix::<f64>::from_fn(n, n, |i, j| {
            if j == n - 1 {
                -lower[i].re
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        return m.complex_eigenvalues().iter().copied().collect();
    }
    let m = DMatrix::<Complex64>::from_fn(n, n, |i, j| {
        if j == n - 1 {
            -lower[i]
        } else if i == j + 1 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    m.eigenvalues().expect("companion eigenvalues").iter().copied().collect()
}

pub fn sort_lex(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
}

/// Follows the roots of `poly(a)` along a densely sampled path by nearest
/// neighbour matching of companion-matrix eigenvalues.
pub fn eigen_track(poly: impl Fn(Complex64) -> Vec<Complex64>, path: &[Complex64], start: &[Complex64]) -> Vec<Complex64> {
    let mut cur = start.to_vec();
    for a in path.iter().skip(1) {
        let roots = companion_roots(&poly(*a));
        let mut used = vec![false; roots.len()];
        for x in cur.iter_mut() {
            let (k, _) = roots
                .iter()
                .enumerate()
                .filter(|(k, _)| !used[*k])
                .map(|(k, r)| (k, (r - *x).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[k] = true;
            *x = roots[k];
        }
    }
    cur
}

/// Dense lasso: segment to the circle, one turn, segment back.
pub fn dense_lasso(base: Complex64, center: Complex64, radius: f64, n: usize, ccw: bool) -> Vec<Complex64> {
    let d = base - center;
    let p = center + d / d.norm() * radius;
    let mut path: Vec<Complex64> = (0..=n).map(|k| base + (p - base) * (k as f64 / n as f64)).collect();
    let sign = if ccw { 1.0 } else { -1.0 };
    for k in 1..=4 * n {
        path.push(center + Complex64::from_polar(radius, d.arg() + sign * 2.0 * PI * k as f64 / (4 * n) as f64));
    }
    for k in 1..=n {
        path.push(p + (base - p) * (k as f64 / n as f64));
    }
    path
}

/// Critical values `-1 + i(2k+1)π` of `exp(x) + x` whose preimages
/// `i(2k+1)π` lie in `w`.
pub fn exp_plus_x_values(w: &Window) -> Vec<Complex64> {
    (-100..100)
        .map(|k| (2 * k + 1) as f64 * PI)
        .filter(|t| w.contains(c(0.0, *t)))
        .map(|t| c(-1.0, t))
        .collect()
}

/// Random elementary expression of bounded depth.
pub fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    let bx = Box::new;
    if depth == 0 || rng.random_bool(0.25) {
        return match rng.random_range(0..3) {
            0 | 1 => Expr::Var,
            _ => Expr::constant(c(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0))),
        };
    }
    let d = depth - 1;
    match rng.random_range(0..8) {
        0 => Expr::Add(bx(random_expr(rng, d)), bx(random_expr(rng, d))),
        1 => Expr::Sub(bx(random_expr(rng, d)), bx(random_expr(rng, d))),
        2 => Expr::Mul(bx(random_expr(rng, d)), bx(random_expr(rng, d))),
        3 => Expr::Div(bx(random_expr(rng, d)), bx(random_expr(rng, d))),
        4 => Expr::Exp(bx(random_expr(rng, d))),
        5 => Expr::Log(bx(random_expr(rng, d))),
        6 => Expr::Neg(bx(random_expr(rng, d))),
        _ => {
            let n = [-3, -2, -1, 2, 3, 4][rng.random_range(0..6)];
            Expr::Pow(bx(random_expr(rng, d)), n)
        }
    }
}

fn stencil(f: &Expr, x: Complex64, h: f64) -> Option<Complex64> {
    let mut vals = [c(0.0, 0.0); 4];
    for (k, s) in [-2.0, -1.0, 1.0, 2.0].iter().enumerate() {
        let r = evaluate_with(f, x + s * h, 1e-6);
        if r.pole_flag || !r.value.is_finite() || r.value.norm() > 1e6 {
            return None;
        }
        vals[k] = r.value;
    }
    Some((vals[0] - 8.0 * vals[1] + 8.0 * vals[2] - vals[3]) / (12.0 * h))
}

/// Compares symbolic derivatives with a 4-point stencil (h = 1e-3) on
/// random (function, point) pairs. Returns (samples checked, worst
/// relative error).
pub fn finite_difference_suite(seed: u64, samples: usize) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-3;
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    let mut attempts = 0;
    while checked < samples && attempts < 200 * samples {
        attempts += 1;
        let f = random_expr(&mut rng, 3);
        let x = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        if ![-2.0, -1.0, 0.0, 1.0, 2.0]
            .iter()
            .all(|s| log_cut_clearance(&f, x + s * h) > 0.05)
        {
            continue;
        }
        let d = evaluate_with(&differentiate(&f), x, 1e-6);
        if d.pole_flag || !d.value.is_finite() || d.value.norm() > 1e4 {
            continue;
        }
        let (Some(coarse), Some(fd)) = (stencil(&f, x, h), stencil(&f, x, h / 2.0)) else {
            continue;
        };
        let scale = d.value.norm().max(1.0);
        if (coarse - fd).norm() > 1e-6 * scale {
            continue;
        }
        worst = worst.max((fd - d.value).norm() / scale);
        checked += 1;
    }
    (checked, worst)
}
