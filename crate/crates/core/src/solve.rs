//! Shared numerical plumbing: rectangular windows, grid seeding, Newton
//! refinement and deterministic ordering of complex points.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{evaluate_with, Expr};

/// Numerical tolerances shared by the locus and tracker stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Two refined points closer than this are the same point.
    pub dedup: f64,
    /// Relative clustering radius for critical values.
    pub cluster: f64,
    /// Newton residual bound for accepted roots.
    pub residual: f64,
    /// Vanishing threshold for higher derivatives in order detection.
    pub order: f64,
    /// Pole threshold for denominators and log arguments.
    pub pole: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            dedup: 1e-8,
            cluster: 1e-6,
            residual: 1e-10,
            order: 1e-7,
            pole: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid window: {0}")]
pub struct WindowError(pub String);

/// Axis-aligned rectangle in the complex plane with a seeding density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    /// Grid points per unit length.
    pub grid_density: f64,
}

impl Window {
    pub fn new(
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        grid_density: f64,
    ) -> Result<Window, WindowError> {
        let w = Window {
            re_min,
            re_max,
            im_min,
            im_max,
            grid_density,
        };
        w.validate()?;
        Ok(w)
    }

    /// Square `[-half, half]²` centered at the origin.
    pub fn square(half: f64, grid_density: f64) -> Window {
        Window {
            re_min: -half,
            re_max: half,
            im_min: -half,
            im_max: half,
            grid_density,
        }
    }

    pub fn validate(&self) -> Result<(), WindowError> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max, self.grid_density]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(WindowError("bounds must be finite".into()));
        }
        if self.re_min >= self.re_max || self.im_min >= self.im_max {
            return Err(WindowError(format!(
                "empty rectangle [{}, {}] x [{}, {}]",
                self.re_min, self.re_max, self.im_min, self.im_max
            )));
        }
        if self.grid_density <= 0.0 {
            return Err(WindowError("grid density must be positive".into()));
        }
        Ok(())
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_min + self.re_max),
            0.5 * (self.im_min + self.im_max),
        )
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    /// Same center, half-extents multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Window {
        let c = self.center();
        let hw = 0.5 * self.width() * factor;
        let hh = 0.5 * self.height() * factor;
        Window {
            re_min: c.re - hw,
            re_max: c.re + hw,
            im_min: c.im - hh,
            im_max: c.im + hh,
            grid_density: self.grid_density,
        }
    }

    pub fn with_density(&self, grid_density: f64) -> Window {
        Window {
            grid_density,
            ..*self
        }
    }

    /// Uniform grid of seed points covering the window, boundary included,
    /// in row-major order.
    pub fn grid(&self) -> Vec<Complex64> {
        let nx = (self.width() * self.grid_density).ceil().max(1.0) as usize;
        let ny = (self.height() * self.grid_density).ceil().max(1.0) as usize;
        let mut out = Vec::with_capacity((nx + 1) * (ny + 1));
        for i in 0..=nx {
            let re = self.re_min + self.width() * i as f64 / nx as f64;
            for j in 0..=ny {
                let im = self.im_min + self.height() * j as f64 / ny as f64;
                out.push(Complex64::new(re, im));
            }
        }
        out
    }
}

/// Lexicographic order on (re, im) with the real part quantized to 1e-8 so
/// that numerically equal real parts compare by imaginary part.
pub fn lex_cmp(a: &Complex64, b: &Complex64) -> Ordering {
    let qa = (a.re * 1e8).round();
    let qb = (b.re * 1e8).round();
    qa.total_cmp(&qb).then(a.im.total_cmp(&b.im))
}

/// Result of a Newton solve of `g(x) = target`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonOutcome {
    pub x: Complex64,
    pub residual: f64,
}

/// Plain Newton iteration for `g(x) = target` with step damping.
pub(crate) fn newton(
    g: &Expr,
    dg: &Expr,
    target: Complex64,
    x0: Complex64,
    max_iter: usize,
    max_step: f64,
    pole_tol: f64,
) -> Option<NewtonOutcome> {
    let mut x = x0;
    for _ in 0..max_iter {
        let gv = evaluate_with(g, x, pole_tol);
        let dv = evaluate_with(dg, x, pole_tol);
        if gv.pole_flag || dv.pole_flag {
            return None;
        }
        let r = gv.value - target;
        if r == Complex64::new(0.0, 0.0) {
            break;
        }
        if dv.value == Complex64::new(0.0, 0.0) || !dv.value.is_finite() {
            return None;
        }
        let mut step = r / dv.value;
        let len = step.norm();
        if !len.is_finite() {
            return None;
        }
        if len > max_step {
            step *= max_step / len;
        }
        x -= step;
        if step.norm() <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    let gv = evaluate_with(g, x, pole_tol);
    let residual = (gv.value - target).norm();
    (x.is_finite() && residual.is_finite() && !gv.pole_flag).then_some(NewtonOutcome { x, residual })
}

/// Keeps the first of any group of points closer than `tol`; input must be
/// sorted with [`lex_cmp`] for a deterministic result.
pub(crate) fn dedup_sorted<T>(items: Vec<T>, tol: f64, point: impl Fn(&T) -> Complex64) -> Vec<T> {
    let mut kept: Vec<T> = Vec::new();
    for item in items {
        let z = point(&item);
        if kept.iter().all(|k| (point(k) - z).norm() > tol) {
            kept.push(item);
        }
    }
    kept
}

/// Minimal pairwise distance, `INFINITY` for fewer than two points.
pub fn min_pairwise_distance(points: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min((a - b).norm());
        }
    }
    best
}
