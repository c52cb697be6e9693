//! Critical points, critical values and the branch locus of `f`.
//!
//! Critical points are found by Newton refinement of `f'` from a uniform
//! seed grid over a [`Window`]. Points of higher order are polished on the
//! first non-vanishing derivative so that they converge quadratically and
//! deduplicate cleanly.

use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{differentiate, evaluate_with, Expr};
use crate::solve::{dedup_sorted, lex_cmp, newton, Tolerances, Window, WindowError};

/// Largest critical order accepted before a point is treated as degenerate.
pub const MAX_ORDER: u32 = 12;

/// Default number of distinct critical values required before the growth
/// evidence counts as "infinite".
pub const DEFAULT_INFINITY_THRESHOLD: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocusError {
    #[error("derivative is identically zero (f is constant)")]
    DegenerateDerivative,
    #[error("critical order exceeds {MAX_ORDER} at {at}")]
    OrderOverflow { at: Complex64 },
    #[error("|f'| = {residual:e} at {at} is not below the residual tolerance")]
    NotCritical { at: Complex64, residual: f64 },
    #[error("growth evidence needs at least 2 windows, got {0}")]
    TooFewGrowthSteps(usize),
    #[error("cluster tolerance must be positive, got {0}")]
    BadClusterTolerance(f64),
    #[error(transparent)]
    Window(#[from] WindowError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub location: Complex64,
    pub order: u32,
    pub value: Complex64,
    pub newton_residual: f64,
}

/// Lazily built sequence `f, f', f'', ...` shared between threads.
#[derive(Debug)]
pub struct DerivativeTower {
    levels: Vec<OnceLock<Expr>>,
}

impl DerivativeTower {
    pub fn new(f: &Expr) -> DerivativeTower {
        let levels: Vec<OnceLock<Expr>> = (0..=MAX_ORDER as usize + 2).map(|_| OnceLock::new()).collect();
        levels[0].set(f.clone()).expect("fresh cell");
        DerivativeTower { levels }
    }

    /// The `k`-th derivative, `k <= MAX_ORDER + 2`.
    pub fn nth(&self, k: usize) -> &Expr {
        if let Some(e) = self.levels[k].get() {
            return e;
        }
        let prev = self.nth(k - 1);
        self.levels[k].get_or_init(|| differentiate(prev))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SearchDiagnostics {
    pub seeds: usize,
    pub no_convergence: usize,
    pub dropped_outside: usize,
    pub dropped_poles: usize,
    /// Locations rejected with `OrderOverflow`.
    pub order_overflow: Vec<Complex64>,
    /// Zero count of `f'` inside the window from the argument principle,
    /// when `f` is entire and the boundary is clean.
    pub argument_principle: Option<i64>,
    /// Extra seeding passes at doubled density.
    pub refinements: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalSearch {
    pub points: Vec<CriticalPoint>,
    pub diagnostics: SearchDiagnostics,
}

enum Candidate {
    Found(CriticalPoint),
    NoConvergence,
    Outside,
    Pole,
    Overflow(Complex64),
}

/// Smallest `m` with `f^(1..=m)` vanishing and `f^(m+1)` not, relative to
/// `scale = max(1, |f^(m+1)|)`.
pub fn critical_order(f: &Expr, x_c: Complex64, tol: &Tolerances) -> Result<u32, LocusError> {
    let tower = DerivativeTower::new(f);
    let residual = evaluate_with(tower.nth(1), x_c, tol.pole).value.norm();
    if !(residual < tol.residual) {
        return Err(LocusError::NotCritical { at: x_c, residual });
    }
    order_in(&tower, x_c, tol)
}

fn order_in(tower: &DerivativeTower, x: Complex64, tol: &Tolerances) -> Result<u32, LocusError> {
    let mut mags = vec![evaluate_with(tower.nth(1), x, tol.pole).value.norm()];
    for m in 1..=MAX_ORDER {
        let next = evaluate_with(tower.nth(m as usize + 1), x, tol.pole).value.norm();
        let scale = next.max(1.0);
        let threshold = tol.order * scale;
        if next >= threshold && mags.iter().all(|d| *d < threshold) {
            return Ok(m);
        }
        mags.push(next);
    }
    Err(LocusError::OrderOverflow { at: x })
}

fn refine_seed(tower: &DerivativeTower, seed: Complex64, w: &Window, tol: &Tolerances) -> Candidate {
    let f = tower.nth(0);
    let fp = tower.nth(1);
    let fpp = tower.nth(2);
    let max_step = (w.diagonal() / 8.0).max(1.0);
    let Some(start) = newton(fp, fpp, Complex64::new(0.0, 0.0), seed, 80, max_step, tol.pole) else {
        return Candidate::NoConvergence;
    };
    let mut x = schroder_polish(tower, start.x, tol.pole);
    if !x.is_finite() {
        return Candidate::NoConvergence;
    }
    if evaluate_with(fp, x, tol.pole).value.norm() >= tol.residual {
        return Candidate::NoConvergence;
    }
    if !w.contains(x) {
        return Candidate::Outside;
    }
    if evaluate_with(f, x, 1e-6).pole_flag || evaluate_with(fp, x, 1e-6).pole_flag {
        return Candidate::Pole;
    }
    let order = match order_in(tower, x, tol) {
        Ok(m) => m,
        Err(_) => return Candidate::Overflow(x),
    };
    if order > 1 {
        // x is a simple zero of f^(order).
        let g = tower.nth(order as usize);
        let dg = tower.nth(order as usize + 1);
        if let Some(p) = newton(g, dg, Complex64::new(0.0, 0.0), x, 20, max_step, tol.pole) {
            if (p.x - x).norm() < 1e-6 * (1.0 + x.norm()) {
                x = p.x;
            }
        }
    }
    let newton_residual = evaluate_with(fp, x, tol.pole).value.norm();
    if !(newton_residual < tol.residual) || !w.contains(x) {
        return Candidate::NoConvergence;
    }
    Candidate::Found(CriticalPoint {
        location: x,
        order,
        value: evaluate_with(f, x, tol.pole).value,
        newton_residual,
    })
}

/// Newton on `f'/f''`, which converges quadratically at multiple zeros of `f'`.
fn schroder_polish(tower: &DerivativeTower, mut x: Complex64, pole_tol: f64) -> Complex64 {
    let (d1, d2, d3) = (tower.nth(1), tower.nth(2), tower.nth(3));
    for _ in 0..30 {
        let a = evaluate_with(d1, x, pole_tol).value;
        if a == Complex64::new(0.0, 0.0) {
            break;
        }
        let b = evaluate_with(d2, x, pole_tol).value;
        let c = evaluate_with(d3, x, pole_tol).value;
        let den = b * b - a * c;
        if den == Complex64::new(0.0, 0.0) || !den.is_finite() {
            break;
        }
        let step = a * b / den;
        if !step.is_finite() || step.norm() > 1.0 {
            break;
        }
        x -= step;
        if step.norm() <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    x
}

fn search_once(
    tower: &DerivativeTower,
    w: &Window,
    tol: &Tolerances,
    diag: &mut SearchDiagnostics,
) -> Vec<CriticalPoint> {
    let seeds = w.grid();
    diag.seeds += seeds.len();
    let candidates: Vec<Candidate> = seeds
        .par_iter()
        .map(|s| refine_seed(tower, *s, w, tol))
        .collect();
    let mut found = Vec::new();
    for c in candidates {
        match c {
            Candidate::Found(p) => found.push(p),
            Candidate::NoConvergence => diag.no_convergence += 1,
            Candidate::Outside => diag.dropped_outside += 1,
            Candidate::Pole => diag.dropped_poles += 1,
            Candidate::Overflow(z) => diag.order_overflow.push(z),
        }
    }
    found.sort_by(|a, b| lex_cmp(&a.location, &b.location));
    let mut overflow = std::mem::take(&mut diag.order_overflow);
    overflow.sort_by(lex_cmp);
    diag.order_overflow = dedup_sorted(overflow, tol.dedup, |z| *z);
    dedup_sorted(found, tol.dedup, |p| p.location)
}

/// Critical points of `f` inside `w`, deduplicated and sorted by location.
pub fn find_critical_points(f: &Expr, w: &Window, tol: &Tolerances) -> Result<CriticalSearch, LocusError> {
    w.validate()?;
    let tower = DerivativeTower::new(f);
    if tower.nth(1).is_zero() {
        return Err(LocusError::DegenerateDerivative);
    }
    let mut diagnostics = SearchDiagnostics::default();
    let mut points = search_once(&tower, w, tol, &mut diagnostics);
    if f.is_entire() {
        diagnostics.argument_principle = winding_number(tower.nth(1), w, tol.pole);
        let mut density = w.grid_density;
        while let Some(expected) = diagnostics.argument_principle {
            let found: i64 = points.iter().map(|p| p.order as i64).sum();
            if found >= expected || diagnostics.refinements >= 2 {
                break;
            }
            density *= 2.0;
            diagnostics.refinements += 1;
            points = search_once(&tower, &w.with_density(density), tol, &mut diagnostics);
        }
    }
    Ok(CriticalSearch { points, diagnostics })
}

/// Winding number of `g` around the boundary of `w`, or `None` if `g`
/// comes too close to zero on the boundary to trust the count.
pub fn winding_number(g: &Expr, w: &Window, pole_tol: f64) -> Option<i64> {
    let corners = [
        Complex64::new(w.re_min, w.im_min),
        Complex64::new(w.re_max, w.im_min),
        Complex64::new(w.re_max, w.im_max),
        Complex64::new(w.re_min, w.im_max),
    ];
    let eval = |z: Complex64| {
        let r = evaluate_with(g, z, pole_tol);
        (!r.pole_flag && r.value.is_finite() && r.value.norm() > 1e-9).then_some(r.value)
    };
    let mut total = 0.0;
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        let mut stack = vec![(a, b, eval(a)?, eval(b)?, 0u32)];
        while let Some((p, q, gp, gq, depth)) = stack.pop() {
            let turn = (gq / gp).arg();
            if turn.abs() < 0.3 {
                total += turn;
                continue;
            }
            if depth > 24 {
                return None;
            }
            let mid = 0.5 * (p + q);
            let gm = eval(mid)?;
            stack.push((mid, q, gm, gq, depth + 1));
            stack.push((p, mid, gp, gm, depth + 1));
        }
    }
    Some((total / std::f64::consts::TAU).round() as i64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchLocus {
    /// One representative critical value per cluster, sorted by (re, im).
    pub values: Vec<Complex64>,
    /// Critical points of each cluster, parallel to `values`.
    pub members: Vec<Vec<CriticalPoint>>,
    pub cluster_tol: f64,
    /// Clusters that would merge at twice the tolerance.
    pub warnings: Vec<String>,
}

impl BranchLocus {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn cluster_threshold(tol: f64, a: Complex64, b: Complex64) -> f64 {
    tol * (1.0 + a.norm().max(b.norm()))
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut j = i;
    while parent[j] != r {
        let next = parent[j];
        parent[j] = r;
        j = next;
    }
    r
}

/// Single-linkage clustering of critical values with relative tolerance
/// `cluster_tol * (1 + |a|)`.
pub fn branch_locus(points: &[CriticalPoint], cluster_tol: f64) -> Result<BranchLocus, LocusError> {
    if !(cluster_tol > 0.0) {
        return Err(LocusError::BadClusterTolerance(cluster_tol));
    }
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (points[i].value, points[j].value);
            if (a - b).norm() < cluster_threshold(cluster_tol, a, b) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: Vec<Vec<CriticalPoint>> = Vec::new();
    let mut root_slot: Vec<Option<usize>> = vec![None; n];
    let mut labels = vec![0usize; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        let slot = *root_slot[r].get_or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        labels[i] = slot;
        groups[slot].push(points[i]);
    }

    let mut warnings = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] == labels[j] {
                continue;
            }
            let (a, b) = (points[i].value, points[j].value);
            if (a - b).norm() < 2.0 * cluster_threshold(cluster_tol, a, b) {
                warnings.push(format!(
                    "cluster ambiguity: critical values {a} and {b} are separated by less than twice the cluster tolerance"
                ));
            }
        }
    }

    let mut clusters: Vec<(Complex64, Vec<CriticalPoint>)> = groups
        .into_iter()
        .map(|mut members| {
            members.sort_by(|a, b| lex_cmp(&a.location, &b.location));
            let rep = members
                .iter()
                .min_by(|a, b| a.newton_residual.total_cmp(&b.newton_residual))
                .expect("nonempty cluster")
                .value;
            (rep, members)
        })
        .collect();
    clusters.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    let (values, members) = clusters.into_iter().unzip();
    Ok(BranchLocus {
        values,
        members,
        cluster_tol,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfiniteLocusEvidence {
    pub windows: Vec<Window>,
    /// Distinct critical values found in each window.
    pub counts: Vec<usize>,
    pub monotone_growth: bool,
    pub threshold: usize,
}

/// Distinct critical value counts over `base` scaled by `1..=growth_steps`.
pub fn infinite_locus_evidence(
    f: &Expr,
    base: &Window,
    growth_steps: usize,
    tol: &Tolerances,
    threshold: usize,
) -> Result<InfiniteLocusEvidence, LocusError> {
    if growth_steps < 2 {
        return Err(LocusError::TooFewGrowthSteps(growth_steps));
    }
    let windows: Vec<Window> = (1..=growth_steps).map(|k| base.scaled(k as f64)).collect();
    let mut counts = Vec::with_capacity(growth_steps);
    for w in &windows {
        let search = find_critical_points(f, w, tol)?;
        counts.push(branch_locus(&search.points, tol.cluster)?.len());
    }
    let monotone_growth = counts.windows(2).all(|p| p[1] > p[0])
        && counts.last().is_some_and(|c| *c >= threshold);
    Ok(InfiniteLocusEvidence {
        windows,
        counts,
        monotone_growth,
        threshold,
    })
}

fn snap(z: Complex64) -> Complex64 {
    let s = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
    Complex64::new(s(z.re), s(z.im))
}

/// Finite limits of `f` along rays leaving the window (asymptotic values).
///
/// Sixteen directions are probed from the window center, each along three
/// parallel rays. A direction contributes when `f` settles to the same
/// value on all three rays at distances `R, 2R, 4R, 8R` with `R` the window
/// diagonal. Only limits approached at least geometrically fast are seen,
/// which covers the exponential asymptotics of elementary functions.
pub fn asymptotic_values(f: &Expr, w: &Window, tol: &Tolerances) -> Vec<Complex64> {
    let c = w.center();
    let r = w.diagonal();
    let offset = 0.25 * w.width().min(w.height());
    let mut limits = Vec::new();
    for k in 0..16 {
        let dir = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / 16.0);
        let normal = dir * Complex64::new(0.0, 1.0);
        let mut ray_limits = Vec::new();
        for o in [-offset, 0.0, offset] {
            let vals: Option<Vec<Complex64>> = [1.0, 2.0, 4.0, 8.0]
                .iter()
                .map(|t| {
                    let e = evaluate_with(f, c + normal * o + dir * (r * t), tol.pole);
                    (!e.pole_flag && e.value.is_finite()).then_some(e.value)
                })
                .collect();
            let Some(v) = vals else { break };
            let lim = v[3];
            let scale = 1.0 + lim.norm();
            if (v[2] - v[3]).norm() <= 1e-9 * scale && (v[1] - v[3]).norm() <= 1e-6 * scale {
                ray_limits.push(lim);
            } else {
                break;
            }
        }
        if ray_limits.len() == 3
            && ray_limits
                .iter()
                .all(|v| (v - ray_limits[1]).norm() <= 1e-6 * (1.0 + v.norm()))
        {
            limits.push(snap(ray_limits[1]));
        }
    }
    limits.sort_by(lex_cmp);
    let mut out: Vec<Complex64> = Vec::new();
    for v in limits {
        if out.iter().all(|u| (u - v).norm() > cluster_threshold(tol.cluster, *u, v)) {
            out.push(v);
        }
    }
    out
}
