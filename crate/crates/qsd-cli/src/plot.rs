//! Deterministic SVG rendering: polyline charts for cumulative curves and a
//! diverging heatmap for phase functions.
//!
//! Nothing here depends on the clock or on randomness, so a fixed input
//! always renders to the same bytes; reproducibility tests can diff the
//! files directly.

use std::fmt::Write;

use qsd_core::curves::Curve;
use qsd_core::error::{CoreError, Result};
use qsd_core::wigner::PhaseFunction;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 28.0;
const MARGIN_TOP: f64 = 28.0;
const MARGIN_BOTTOM: f64 = 56.0;

/// Stroke palette, cycled across series.
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

// endpoints of the diverging scale; zero stays pinned to white so negative
// phase-space regions are visually distinct from small positive values
const BLUE: (f64, f64, f64) = (33.0, 102.0, 172.0);
const RED: (f64, f64, f64) = (178.0, 24.0, 43.0);

fn plot_width() -> f64 {
    WIDTH - MARGIN_LEFT - MARGIN_RIGHT
}

fn plot_height() -> f64 {
    HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
}

fn svg_open(out: &mut String) {
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"monospace\" font-size=\"13\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
}

/// Frame, five ticks per axis and the two axis captions.
fn axes(out: &mut String, x_range: (f64, f64), y_range: (f64, f64), x_label: &str, y_label: &str) {
    let (x0, y0) = (MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(
        out,
        "<rect x=\"{x0}\" y=\"{MARGIN_TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444444\"/>",
        plot_width(),
        plot_height()
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let vx = x_range.0 + t * (x_range.1 - x_range.0);
        let px = x0 + t * plot_width();
        let _ = writeln!(
            out,
            "<line x1=\"{px:.1}\" y1=\"{y0}\" x2=\"{px:.1}\" y2=\"{:.1}\" stroke=\"#444444\"/>",
            y0 + 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{vx:.2}</text>",
            y0 + 20.0
        );
        let vy = y_range.0 + t * (y_range.1 - y_range.0);
        let py = y0 - t * plot_height();
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{py:.1}\" x2=\"{x0}\" y2=\"{py:.1}\" stroke=\"#444444\"/>",
            x0 - 5.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{vy:.2}</text>",
            x0 - 9.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>",
        x0 + plot_width() / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{y_label}</text>",
        MARGIN_TOP + plot_height() / 2.0,
        MARGIN_TOP + plot_height() / 2.0
    );
}

/// Polyline chart of one or more cumulative curves against `x_label`
/// (ordinates are always labeled CDF). Rejects an empty series list rather
/// than emitting a blank file.
pub fn curve_chart(series: &[(&str, &Curve)], x_label: &str) -> Result<String> {
    if series.is_empty() {
        return Err(CoreError::InvalidParameter(
            "no curves to plot".into(),
        ));
    }
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = 0.0f64;
    let mut y_max = 1.0f64;
    for (_, c) in series {
        x_min = x_min.min(c.abscissa()[0]);
        x_max = x_max.max(*c.abscissa().last().expect("curves are non-empty"));
        for &v in c.ordinate() {
            y_min = y_min.min(v);
            y_max = y_max.max(v);
        }
    }

    let mut out = String::new();
    svg_open(&mut out);
    axes(&mut out, (x_min, x_max), (y_min, y_max), x_label, "CDF");
    let to_px = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_width();
    let to_py =
        |y: f64| HEIGHT - MARGIN_BOTTOM - (y - y_min) / (y_max - y_min) * plot_height();
    for (i, (label, curve)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for (x, y) in curve.abscissa().iter().zip(curve.ordinate()) {
            let _ = write!(points, "{:.2},{:.2} ", to_px(*x), to_py(*y));
        }
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            points.trim_end()
        );
        let ly = MARGIN_TOP + 18.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_RIGHT - 10.0;
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            lx - 150.0,
            ly - 4.0,
            lx - 128.0,
            ly - 4.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"start\">{label}</text>",
            lx - 122.0,
            ly
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Interpolates white toward the blue (negative) or red (positive) endpoint.
fn diverging_color(t: f64) -> String {
    let t = t.clamp(-1.0, 1.0);
    let (target, a) = if t < 0.0 { (BLUE, -t) } else { (RED, t) };
    let ch = |to: f64| (255.0 + (to - 255.0) * a).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(target.0), ch(target.1), ch(target.2))
}

/// Heatmap of a phase function on the diverging scale, zero pinned to
/// white. Cells that round to white are omitted; they inherit the page
/// background, which keeps files a few times smaller.
pub fn phase_heatmap(f: &PhaseFunction) -> Result<String> {
    let vmax = f.max_abs();
    if vmax <= 0.0 {
        return Err(CoreError::InvalidParameter(
            "flat phase function has no color scale".into(),
        ));
    }
    let spec = f.spec();
    let (nx, ny) = (spec.x.points, spec.y.points);
    let cw = plot_width() / nx as f64;
    let ch = plot_height() / ny as f64;

    let mut out = String::new();
    svg_open(&mut out);
    out.push_str("<g shape-rendering=\"crispEdges\" stroke=\"none\">\n");
    for ix in 0..nx {
        let px = MARGIN_LEFT + ix as f64 * cw;
        for iy in 0..ny {
            let t = f.value(ix, iy) / vmax;
            if t.abs() < 1.0 / 510.0 {
                continue;
            }
            // y axis points up: row 0 sits at the bottom edge
            let py = HEIGHT - MARGIN_BOTTOM - (iy + 1) as f64 * ch;
            let _ = writeln!(
                out,
                "<rect x=\"{px:.2}\" y=\"{py:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                cw + 0.05,
                ch + 0.05,
                diverging_color(t)
            );
        }
    }
    out.push_str("</g>\n");
    axes(
        &mut out,
        (spec.x.x_min, spec.x.x_max),
        (spec.y.x_min, spec.y.x_max),
        "x",
        "y",
    );
    out.push_str("</svg>\n");
    Ok(out)
}
