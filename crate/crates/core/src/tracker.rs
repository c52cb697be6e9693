//! Root sets of `f(x) = a`, loops in the a-plane and numerical continuation
//! of the roots along them.

use std::collections::HashSet;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{differentiate, evaluate_with, Expr};
use crate::permgroup::PartialPerm;
use crate::solve::{dedup_sorted, lex_cmp, min_pairwise_distance, newton, Tolerances, Window, WindowError};

/// Smallest admissible distance between a base point and the forbidden set.
pub const MIN_CLEARANCE: f64 = 1e-3;
pub const DEFAULT_SEGMENT_SAMPLES: usize = 32;
pub const DEFAULT_CIRCLE_SAMPLES: usize = 64;

/// Tracked roots closer than `separation / COLLISION_DIVISOR` count as a
/// collision.
pub const COLLISION_DIVISOR: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackError {
    #[error("no roots of f(x) = {0} found in the window")]
    EmptyRootSet(Complex64),
    #[error("no candidate base point clears the forbidden set by {MIN_CLEARANCE}")]
    NoRegularValue,
    #[error("forbidden point {0} lies within margin/4 of a path endpoint")]
    PerturbationFailure(Complex64),
    #[error("margin must be positive, got {0}")]
    BadMargin(f64),
    #[error("tracked roots collided near t = {t:.6}")]
    TrackingCollision { t: f64 },
    #[error("step size underflow near t = {t:.6}")]
    StepUnderflow { t: f64 },
    #[error("ambiguous match for tracked root {0}")]
    AmbiguousMatch(usize),
    #[error("two tracked roots returned to base root {0}")]
    NotInjective(usize),
    #[error("invalid loop: {0}")]
    BadLoop(String),
    #[error(transparent)]
    Window(#[from] WindowError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootSet {
    pub base_value: Complex64,
    /// Sorted by (re, im).
    pub roots: Vec<Complex64>,
    pub window: Window,
    /// `|f(root) - base_value|` for each root.
    pub residuals: Vec<f64>,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Minimal pairwise distance, or the window diagonal for a single root.
    pub fn separation(&self) -> f64 {
        min_pairwise_distance(&self.roots).min(self.window.diagonal())
    }
}

/// Solutions of `f(x) = a0` inside `w`, Newton-refined from the grid.
pub fn find_roots(f: &Expr, a0: Complex64, w: &Window, tol: &Tolerances) -> Result<RootSet, TrackError> {
    w.validate()?;
    let df = differentiate(f);
    let bound = tol.residual * (1.0 + a0.norm());
    let max_step = (w.diagonal() / 8.0).max(1.0);
    let mut found: Vec<(Complex64, f64)> = w
        .grid()
        .par_iter()
        .filter_map(|s| newton(f, &df, a0, *s, 60, max_step, tol.pole))
        .filter(|o| o.residual < bound && w.contains(o.x))
        .map(|o| (o.x, o.residual))
        .collect();
    found.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    let found = dedup_sorted(found, tol.dedup, |p| p.0);
    if found.is_empty() {
        return Err(TrackError::EmptyRootSet(a0));
    }
    Ok(RootSet {
        base_value: a0,
        roots: found.iter().map(|p| p.0).collect(),
        window: *w,
        residuals: found.iter().map(|p| p.1).collect(),
    })
}

fn min_distance(z: Complex64, points: &[Complex64]) -> f64 {
    points.iter().map(|p| (p - z).norm()).fold(f64::INFINITY, f64::min)
}

/// Grid point of `image` farthest from `forbidden`, ties going to the
/// lexicographically smallest candidate. An empty forbidden set gives the
/// window center.
pub fn choose_base_point(forbidden: &[Complex64], image: &Window) -> Result<Complex64, TrackError> {
    image.validate()?;
    if forbidden.is_empty() {
        return Ok(image.center());
    }
    let mut candidates = image.grid();
    candidates.sort_by(lex_cmp);
    let mut best = candidates[0];
    let mut best_d = min_distance(best, forbidden);
    for c in &candidates[1..] {
        let d = min_distance(*c, forbidden);
        if d > best_d + 1e-12 * (1.0 + best_d) {
            best = *c;
            best_d = d;
        }
    }
    if best_d < MIN_CLEARANCE {
        return Err(TrackError::NoRegularValue);
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Counterclockwise,
    Clockwise,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoopSpec {
    pub base: Complex64,
    pub center: Complex64,
    pub radius: f64,
    pub segment_samples: usize,
    pub circle_samples: usize,
    pub orientation: Orientation,
    /// Other forbidden points the connecting segment must stay away from.
    #[serde(skip)]
    pub avoid: Vec<Complex64>,
}

impl LoopSpec {
    /// Counterclockwise loop around `center` with radius a third of the
    /// smaller of the distance to the base and to the nearest other
    /// forbidden point.
    pub fn around(
        base: Complex64,
        center: Complex64,
        forbidden: &[Complex64],
        segment_samples: usize,
        circle_samples: usize,
    ) -> LoopSpec {
        let avoid: Vec<Complex64> = forbidden
            .iter()
            .copied()
            .filter(|p| (p - center).norm() > 1e-12 * (1.0 + center.norm()))
            .collect();
        let nearest = min_distance(center, &avoid);
        LoopSpec {
            base,
            center,
            radius: nearest.min((base - center).norm()) / 3.0,
            segment_samples,
            circle_samples,
            orientation: Orientation::Counterclockwise,
            avoid,
        }
    }

    pub fn reversed(&self) -> LoopSpec {
        LoopSpec {
            orientation: match self.orientation {
                Orientation::Counterclockwise => Orientation::Clockwise,
                Orientation::Clockwise => Orientation::Counterclockwise,
            },
            ..self.clone()
        }
    }

    fn with_radius(&self, radius: f64) -> LoopSpec {
        LoopSpec {
            radius,
            ..self.clone()
        }
    }

    /// Point where the connecting segment meets the circle.
    pub fn attach_point(&self) -> Complex64 {
        let d = self.base - self.center;
        self.center + d / d.norm() * self.radius
    }

    /// Sampled closed path: segment in, full circle, same segment back.
    pub fn path(&self) -> Result<Vec<Complex64>, TrackError> {
        let d = self.base - self.center;
        if !(self.radius > 0.0) || !(d.norm() > self.radius) {
            return Err(TrackError::BadLoop(format!(
                "radius {} must be positive and below the base distance {}",
                self.radius,
                d.norm()
            )));
        }
        if self.segment_samples == 0 || self.circle_samples < 3 {
            return Err(TrackError::BadLoop("too few samples".into()));
        }
        let p = self.attach_point();
        let n = self.segment_samples;
        let mut segment: Vec<Complex64> = (0..=n)
            .map(|k| self.base + (p - self.base) * (k as f64 / n as f64))
            .collect();
        segment[n] = p;
        if !self.avoid.is_empty() {
            let mut all = self.avoid.clone();
            all.push(self.center);
            let margin = (2.0 * self.radius).min(0.5 * min_pairwise_distance(&all));
            segment = perturb_path(&segment, &self.avoid, margin)?;
        }
        let sign = match self.orientation {
            Orientation::Counterclockwise => 1.0,
            Orientation::Clockwise => -1.0,
        };
        let theta0 = d.arg();
        let m = self.circle_samples;
        let mut path = segment.clone();
        for k in 1..m {
            let theta = theta0 + sign * TAU * k as f64 / m as f64;
            path.push(self.center + Complex64::from_polar(self.radius, theta));
        }
        path.push(p);
        path.extend(segment.iter().rev().skip(1));
        Ok(path)
    }
}

fn segment_distance(q: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (q - a).norm();
    }
    let t = (((q - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (q - (a + ab * t)).norm()
}

/// Smallest distance from `q` to the polyline.
pub fn path_distance(path: &[Complex64], q: Complex64) -> f64 {
    match path {
        [] => f64::INFINITY,
        [p] => (p - q).norm(),
        _ => path
            .windows(2)
            .map(|w| segment_distance(q, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

fn densify(path: &[Complex64], spacing: f64) -> Vec<Complex64> {
    let mut out = vec![path[0]];
    for w in path.windows(2) {
        let k = ((w[1] - w[0]).norm() / spacing).ceil().max(1.0) as usize;
        for j in 1..=k {
            out.push(w[0] + (w[1] - w[0]) * (j as f64 / k as f64));
        }
        *out.last_mut().expect("nonempty") = w[1];
    }
    out
}

/// Detours the polyline around each forbidden point along a circular arc of
/// radius up to `0.45 * margin`, so the result keeps more than `margin / 4`
/// from every forbidden point. A path that already clears `0.45 * margin`
/// comes back unchanged.
pub fn perturb_path(path: &[Complex64], forbidden: &[Complex64], margin: f64) -> Result<Vec<Complex64>, TrackError> {
    if !(margin > 0.0) || !margin.is_finite() {
        return Err(TrackError::BadMargin(margin));
    }
    if path.is_empty() {
        return Ok(Vec::new());
    }
    let (start, end) = (path[0], path[path.len() - 1]);
    for q in forbidden {
        if (start - q).norm() <= margin / 4.0 || (end - q).norm() <= margin / 4.0 {
            return Err(TrackError::PerturbationFailure(*q));
        }
    }
    let mut out = path.to_vec();
    let spacing = margin / 16.0;
    let mut densified = false;
    for &q in forbidden {
        let rho = (0.45 * margin).min((start - q).norm()).min((end - q).norm());
        if path_distance(&out, q) >= rho {
            continue;
        }
        if !densified {
            out = densify(&out, spacing);
            densified = true;
        }
        let mut next = Vec::with_capacity(out.len());
        let mut i = 0;
        while i < out.len() {
            if (out[i] - q).norm() >= rho {
                next.push(out[i]);
                i += 1;
                continue;
            }
            // out[i - 1] and out[j] are the last/first points outside the disk
            let mut j = i;
            while (out[j] - q).norm() < rho {
                j += 1;
            }
            let a_in = (out[i - 1] - q).arg();
            let a_out = (out[j] - q).arg();
            let mut delta = (a_out - a_in).rem_euclid(TAU);
            if delta > TAU / 2.0 {
                delta -= TAU;
            }
            let steps = ((delta.abs() * rho / spacing).ceil() as usize).max(2);
            for k in 1..steps {
                let theta = a_in + delta * k as f64 / steps as f64;
                next.push(q + Complex64::from_polar(rho, theta));
            }
            i = j;
        }
        out = next;
    }
    for q in forbidden {
        if path_distance(&out, *q) <= margin / 4.0 {
            return Err(TrackError::PerturbationFailure(*q));
        }
    }
    Ok(out)
}

/// One record of a continuation: loop parameter, a-plane point and the
/// current root positions (`None` once a root has escaped).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: f64,
    pub a: Complex64,
    pub roots: Vec<Option<Complex64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedPermutation {
    #[serde(rename = "loop")]
    pub loop_spec: LoopSpec,
    /// `mapping[j] = Some(σ(j))`, `None` for escaped roots.
    pub mapping: Vec<Option<usize>>,
    pub escaped: Vec<usize>,
    pub max_match_distance: f64,
    pub max_residual: f64,
    pub steps: usize,
    /// Radius halvings after a collision.
    pub radius_retries: u32,
}

impl TrackedPermutation {
    pub fn permutation(&self) -> PartialPerm {
        PartialPerm::new(self.mapping.clone()).expect("mapping is injective by construction")
    }

    pub fn is_clean(&self) -> bool {
        self.escaped.is_empty()
    }
}

struct Walk {
    finals: Vec<Option<Complex64>>,
    max_residual: f64,
    steps: usize,
    trace: Vec<TraceRecord>,
}

struct Continuation<'a> {
    f: &'a Expr,
    df: &'a Expr,
    escape: Window,
    collision: f64,
    tol: &'a Tolerances,
    record: bool,
}

impl Continuation<'_> {
    /// Predictor-corrector step of one root from `a` to `a_next`.
    fn step(&self, x: Complex64, a: Complex64, a_next: Complex64) -> Option<(Complex64, f64)> {
        let fp = evaluate_with(self.df, x, self.tol.pole);
        if fp.pole_flag || !fp.value.is_finite() || fp.value.norm() < 1e-300 {
            return None;
        }
        let dx = (a_next - a) / fp.value;
        let pred = x + dx;
        let mut y = pred;
        for _ in 0..8 {
            let fy = evaluate_with(self.f, y, self.tol.pole);
            let dfy = evaluate_with(self.df, y, self.tol.pole);
            if fy.pole_flag || dfy.pole_flag || dfy.value.norm() < 1e-300 {
                return None;
            }
            let d = (fy.value - a_next) / dfy.value;
            if !d.is_finite() {
                return None;
            }
            y -= d;
            if d.norm() <= 1e-14 * (1.0 + y.norm()) {
                break;
            }
        }
        let res = (evaluate_with(self.f, y, self.tol.pole).value - a_next).norm();
        let converged = res < 10.0 * self.tol.residual * (1.0 + a_next.norm());
        let close = (y - pred).norm() <= 0.3 * dx.norm() + 1e-10 * (1.0 + y.norm());
        (converged && close && y.is_finite()).then_some((y, res))
    }

    fn run(&self, roots: &[Complex64], path: &[Complex64]) -> Result<Walk, TrackError> {
        let total: f64 = path.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        let floor = 1e-12 * total;
        let mut xs: Vec<Option<Complex64>> = roots.iter().copied().map(Some).collect();
        let mut walked = 0.0;
        let mut max_residual: f64 = 0.0;
        let mut steps = 0;
        let mut trace = Vec::new();
        if self.record {
            trace.push(TraceRecord {
                t: 0.0,
                a: path[0],
                roots: xs.clone(),
            });
        }
        let mut h = f64::INFINITY;
        for leg in path.windows(2) {
            let (a0, a1) = (leg[0], leg[1]);
            let len = (a1 - a0).norm();
            if len == 0.0 {
                continue;
            }
            let mut s = 0.0;
            let mut a = a0;
            while s < len {
                let step = h.min(len - s);
                let last = s + step >= len;
                let a_next = if last { a1 } else { a0 + (a1 - a0) * ((s + step) / len) };
                let mut next = xs.clone();
                let mut ok = true;
                let mut step_res: f64 = 0.0;
                for x in next.iter_mut() {
                    if let Some(cur) = *x {
                        match self.step(cur, a, a_next) {
                            Some((y, r)) => {
                                *x = Some(y);
                                step_res = step_res.max(r);
                            }
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    }
                }
                let t = (walked + s) / total;
                if ok {
                    let live: Vec<Complex64> = next.iter().flatten().copied().collect();
                    if min_pairwise_distance(&live) < self.collision {
                        return Err(TrackError::TrackingCollision { t });
                    }
                }
                if !ok {
                    h = step / 2.0;
                    if h < floor {
                        return Err(TrackError::StepUnderflow { t });
                    }
                    continue;
                }
                for x in next.iter_mut() {
                    if x.is_some_and(|y| !self.escape.contains(y)) {
                        *x = None;
                    }
                }
                xs = next;
                max_residual = max_residual.max(step_res);
                steps += 1;
                s = if last { len } else { s + step };
                a = a_next;
                h = 2.0 * step;
                if self.record {
                    trace.push(TraceRecord {
                        t: (walked + s) / total,
                        a,
                        roots: xs.clone(),
                    });
                }
            }
            walked += len;
        }
        Ok(Walk {
            finals: xs,
            max_residual,
            steps,
            trace,
        })
    }
}

/// Nearest-neighbour matching of returned roots to the base roots.
fn match_roots(
    finals: &[Option<Complex64>],
    base: &[Complex64],
    sep: f64,
) -> Result<(Vec<Option<usize>>, f64), TrackError> {
    let mut mapping = vec![None; finals.len()];
    let mut max_d: f64 = 0.0;
    let mut used = HashSet::new();
    for (j, y) in finals.iter().enumerate() {
        let Some(y) = y else { continue };
        let mut d: Vec<(f64, usize)> = base.iter().enumerate().map(|(i, b)| ((b - y).norm(), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (d1, i1) = d[0];
        if d1 > sep / 4.0 {
            continue;
        }
        if d.len() > 1 && d[1].0 < 2.0 * d1 {
            return Err(TrackError::AmbiguousMatch(j));
        }
        if !used.insert(i1) {
            return Err(TrackError::NotInjective(i1));
        }
        mapping[j] = Some(i1);
        max_d = max_d.max(d1);
    }
    Ok((mapping, max_d))
}

fn track_inner(
    f: &Expr,
    rs: &RootSet,
    spec: &LoopSpec,
    tol: &Tolerances,
    record: bool,
) -> Result<(TrackedPermutation, Vec<TraceRecord>), TrackError> {
    if (spec.base - rs.base_value).norm() > 1e-12 * (1.0 + rs.base_value.norm()) {
        return Err(TrackError::BadLoop("loop base differs from the root set base value".into()));
    }
    let df = differentiate(f);
    let sep = rs.separation();
    let cont = Continuation {
        f,
        df: &df,
        escape: rs.window.scaled(1.5),
        collision: sep / COLLISION_DIVISOR,
        tol,
        record,
    };
    let mut current = spec.clone();
    let mut retries = 0;
    let walk = loop {
        match cont.run(&rs.roots, &current.path()?) {
            Ok(w) => break w,
            Err(TrackError::TrackingCollision { .. }) if retries == 0 => {
                retries += 1;
                current = current.with_radius(current.radius / 2.0);
            }
            Err(e) => return Err(e),
        }
    };
    let (mapping, max_match_distance) = match_roots(&walk.finals, &rs.roots, sep)?;
    let escaped = (0..mapping.len()).filter(|&j| mapping[j].is_none()).collect();
    Ok((
        TrackedPermutation {
            loop_spec: current,
            mapping,
            escaped,
            max_match_distance,
            max_residual: walk.max_residual,
            steps: walk.steps,
            radius_retries: retries,
        },
        walk.trace,
    ))
}

/// Continues every root of `rs` along `spec` and reads off the induced
/// permutation of the base roots.
pub fn track_loop(f: &Expr, rs: &RootSet, spec: &LoopSpec, tol: &Tolerances) -> Result<TrackedPermutation, TrackError> {
    track_inner(f, rs, spec, tol, false).map(|r| r.0)
}

/// Like [`track_loop`], also returning a record per accepted step.
pub fn track_loop_traced(
    f: &Expr,
    rs: &RootSet,
    spec: &LoopSpec,
    tol: &Tolerances,
) -> Result<(TrackedPermutation, Vec<TraceRecord>), TrackError> {
    track_inner(f, rs, spec, tol, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    /// Loop around a critical value.
    Critical,
    /// Loop around a finite asymptotic value.
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generator {
    pub kind: GeneratorKind,
    pub center: Complex64,
    pub tracked: TrackedPermutation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorFailure {
    pub kind: GeneratorKind,
    pub center: Complex64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonodromyGenerators {
    pub generators: Vec<Generator>,
    pub failures: Vec<GeneratorFailure>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LoopOptions {
    pub segment_samples: usize,
    pub circle_samples: usize,
}

impl Default for LoopOptions {
    fn default() -> Self {
        LoopOptions {
            segment_samples: DEFAULT_SEGMENT_SAMPLES,
            circle_samples: DEFAULT_CIRCLE_SAMPLES,
        }
    }
}

/// Union of critical and asymptotic values without near duplicates.
pub fn forbidden_set(critical: &[Complex64], asymptotic: &[Complex64], tol: &Tolerances) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = critical.to_vec();
    for a in asymptotic {
        if out.iter().all(|c| (c - a).norm() > tol.cluster * (1.0 + a.norm())) {
            out.push(*a);
        }
    }
    out
}

/// Loop centers in generator order: critical values inside `image`, then
/// asymptotic values inside `image` that are not critical values.
pub fn loop_centers(
    critical: &[Complex64],
    asymptotic: &[Complex64],
    image: &Window,
    tol: &Tolerances,
) -> Vec<(GeneratorKind, Complex64)> {
    let mut out: Vec<(GeneratorKind, Complex64)> = critical
        .iter()
        .filter(|c| image.contains(**c))
        .map(|c| (GeneratorKind::Critical, *c))
        .collect();
    for a in asymptotic {
        let fresh = critical.iter().all(|c| (c - a).norm() > tol.cluster * (1.0 + a.norm()));
        if fresh && image.contains(*a) {
            out.push((GeneratorKind::Asymptotic, *a));
        }
    }
    out
}

/// One tracked loop per center from [`loop_centers`]. Loops run in
/// parallel on the current rayon pool; output order is the center order.
pub fn monodromy_generators(
    f: &Expr,
    rs: &RootSet,
    critical: &[Complex64],
    asymptotic: &[Complex64],
    image: &Window,
    opts: &LoopOptions,
    tol: &Tolerances,
) -> MonodromyGenerators {
    let forbidden = forbidden_set(critical, asymptotic, tol);
    let centers = loop_centers(critical, asymptotic, image, tol);
    let results: Vec<Result<Generator, GeneratorFailure>> = centers
        .par_iter()
        .map(|&(kind, center)| {
            let spec = LoopSpec::around(rs.base_value, center, &forbidden, opts.segment_samples, opts.circle_samples);
            track_loop(f, rs, &spec, tol)
                .map(|tracked| Generator { kind, center, tracked })
                .map_err(|e| GeneratorFailure {
                    kind,
                    center,
                    error: e.to_string(),
                })
        })
        .collect();
    let mut generators = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(g) => generators.push(g),
            Err(e) => failures.push(e),
        }
    }
    MonodromyGenerators { generators, failures }
}
