//! Static SVG of the a-plane: locus markers, loops and the base point.

use std::fmt::Write;

use num_complex::Complex64;

use crate::pipeline::Setup;
use crate::solve::Window;
use crate::tracker::{GeneratorKind, LoopSpec};

pub const CANVAS: f64 = 600.0;

struct Frame {
    w: Window,
}

impl Frame {
    fn map(&self, z: Complex64) -> (f64, f64) {
        (
            (z.re - self.w.re_min) / self.w.width() * CANVAS,
            (self.w.im_max - z.im) / self.w.height() * CANVAS,
        )
    }
}

fn point(frame: &Frame, z: Complex64) -> String {
    let (x, y) = frame.map(z);
    format!("{x:.3},{y:.3}")
}

/// Loops whose path cannot be built are skipped.
pub fn render(setup: &Setup, loops: &[(GeneratorKind, LoopSpec)], image: &Window) -> String {
    let frame = Frame { w: *image };
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS}\" height=\"{CANVAS}\" viewBox=\"0 0 {CANVAS} {CANVAS}\">"
    );
    let _ = writeln!(s, "<rect width=\"{CANVAS}\" height=\"{CANVAS}\" fill=\"white\"/>");
    if image.re_min < 0.0 && image.re_max > 0.0 {
        let (x, _) = frame.map(Complex64::new(0.0, 0.0));
        let _ = writeln!(s, "<line class=\"axis\" x1=\"{x:.3}\" y1=\"0\" x2=\"{x:.3}\" y2=\"{CANVAS}\" stroke=\"#ccc\"/>");
    }
    if image.im_min < 0.0 && image.im_max > 0.0 {
        let (_, y) = frame.map(Complex64::new(0.0, 0.0));
        let _ = writeln!(s, "<line class=\"axis\" x1=\"0\" y1=\"{y:.3}\" x2=\"{CANVAS}\" y2=\"{y:.3}\" stroke=\"#ccc\"/>");
    }
    for (kind, spec) in loops {
        let Ok(path) = spec.path() else { continue };
        let pts: Vec<String> = path.iter().map(|z| point(&frame, *z)).collect();
        let color = match kind {
            GeneratorKind::Critical => "#2060c0",
            GeneratorKind::Asymptotic => "#20a060",
        };
        let _ = writeln!(
            s,
            "<polyline class=\"loop\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" points=\"{}\"/>",
            pts.join(" ")
        );
    }
    let markers: Vec<Complex64> = setup
        .branch_locus
        .values
        .iter()
        .copied()
        .filter(|v| image.contains(*v))
        .collect();
    for v in &markers {
        let (x, y) = frame.map(*v);
        let _ = writeln!(s, "<circle class=\"critical\" cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"4\" fill=\"black\"/>");
    }
    for v in setup.asymptotic_values.iter().filter(|v| image.contains(**v)) {
        let (x, y) = frame.map(*v);
        let _ = writeln!(
            s,
            "<rect class=\"asymptotic\" x=\"{:.3}\" y=\"{:.3}\" width=\"8\" height=\"8\" fill=\"#20a060\"/>",
            x - 4.0,
            y - 4.0
        );
    }
    let (bx, by) = frame.map(setup.base_point);
    let _ = writeln!(s, "<circle class=\"base\" cx=\"{bx:.3}\" cy=\"{by:.3}\" r=\"6\" fill=\"red\"/>");
    if setup.branch_locus.is_empty() {
        let _ = writeln!(s, "<text x=\"10\" y=\"20\" font-size=\"14\">no critical values</text>");
    }
    s.push_str("</svg>\n");
    s
}
