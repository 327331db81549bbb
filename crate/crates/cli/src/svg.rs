//! Scatter plots of resonances in the lower half plane.

use std::fmt::Write;

use crate::report::ResonanceRow;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;

/// A standalone SVG 1.1 document in data coordinates: x = Re z, y = −Im z,
/// so deeper resonances sit lower. The view box covers the points, the
/// real axis and the strip bound line with a 5% margin on each side.
/// Marker radius is proportional to multiplicity.
pub fn scatter(rows: &[ResonanceRow], strip_bound: Option<f64>, fallback: [f64; 4]) -> String {
    let mut xs: Vec<f64> = rows.iter().map(|r| r.re).collect();
    let mut ys: Vec<f64> = rows.iter().map(|r| -r.im).collect();
    if rows.is_empty() {
        xs.extend([fallback[0], fallback[1]]);
        ys.extend([-fallback[2], -fallback[3]]);
    }
    ys.push(0.0);
    if let Some(k) = strip_bound {
        ys.push(k);
    }
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) * 1e-3 };
        (lo - 0.05 * span, span * 1.1)
    };
    let (x0, w) = range(&xs);
    let (y0, h) = range(&ys);
    // one pixel in data units, per axis
    let (px, py) = (w / WIDTH, h / HEIGHT);

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"{x0} {y0} {w} {h}\" preserveAspectRatio=\"none\">"
    )
    .unwrap();
    writeln!(out, "<title>Resonances, x = Re z, y = -Im z</title>").unwrap();
    writeln!(out, "<rect x=\"{x0}\" y=\"{y0}\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>").unwrap();
    writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"0\" x2=\"{}\" y2=\"0\" stroke=\"black\" stroke-width=\"{}\"><title>real axis</title></line>",
        x0 + w,
        py
    )
    .unwrap();
    if let Some(k) = strip_bound {
        writeln!(
            out,
            "<line class=\"strip-bound\" x1=\"{x0}\" y1=\"{k}\" x2=\"{}\" y2=\"{k}\" stroke=\"firebrick\" stroke-width=\"{}\" \
             stroke-dasharray=\"{} {}\"><title>strip bound Im z = -{k}</title></line>",
            x0 + w,
            py,
            8.0 * px,
            4.0 * px
        )
        .unwrap();
    }
    for r in rows {
        let m = r.multiplicity as f64;
        writeln!(
            out,
            "<ellipse class=\"resonance\" cx=\"{}\" cy=\"{}\" rx=\"{}\" ry=\"{}\" fill=\"steelblue\" fill-opacity=\"0.7\"/>",
            r.re,
            -r.im,
            3.0 * m * px,
            3.0 * m * py
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}
