//! SVG rendering of an unfolded patch colored by wall thickness.

use std::fmt::Write as _;

use nalgebra::{Point2, Vector2};

use super::{UnfoldError, UnfoldedPatch};

/// Viridis sampled at 0, 0.1, …, 1.
const VIRIDIS: [[u8; 3]; 11] = [
    [0x44, 0x01, 0x54],
    [0x48, 0x24, 0x75],
    [0x41, 0x44, 0x87],
    [0x35, 0x5f, 0x8d],
    [0x2a, 0x78, 0x8e],
    [0x21, 0x91, 0x8c],
    [0x22, 0xa8, 0x84],
    [0x44, 0xbf, 0x70],
    [0x7a, 0xd1, 0x51],
    [0xbd, 0xdf, 0x26],
    [0xfd, 0xe7, 0x25],
];

const PLOT_SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;
const LEGEND_WIDTH: f64 = 110.0;
const FOOTER: f64 = 50.0;

/// Ramp color at `t ∈ [0, 1]` (clamped), linear between the samples.
pub fn viridis(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    [0, 1, 2].map(|c| (a[c] as f64 + f * (b[c] as f64 - a[c] as f64)).round() as u8)
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Fixed-precision number without a negative zero.
fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0".into()
    } else {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Largest 1, 2 or 5 × 10ⁿ not above `x`.
fn nice_length(x: f64) -> f64 {
    let base = 10f64.powf(x.log10().floor());
    [5.0, 2.0, 1.0].into_iter().map(|m| m * base).find(|&l| l <= x).unwrap_or(base)
}

/// Draws every triangle with the thickness field interpolated linearly across
/// it through the viridis ramp over `range` (mm), plus a color bar and a mm
/// scale bar. Output is byte-identical for identical input.
pub fn render_unfolded(patch: &UnfoldedPatch, range: [f64; 2]) -> Result<String, UnfoldError> {
    let [lo, hi] = range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(UnfoldError::Render(format!("color range [{lo}, {hi}] must satisfy min < max")));
    }
    if patch.vertices2d.is_empty() || patch.vwt.len() != patch.vertices2d.len() {
        return Err(UnfoldError::Render("patch has no vertices or mismatched wall thickness".into()));
    }
    let (mut min, mut max) = (patch.vertices2d[0], patch.vertices2d[0]);
    for p in &patch.vertices2d {
        min = min.inf(p);
        max = max.sup(p);
    }
    let extent = (max - min).max();
    let px = if extent > 0.0 { PLOT_SIZE / extent } else { 1.0 };
    let (w, h) = ((max.x - min.x) * px, (max.y - min.y) * px);
    // y points up in the patch and down in SVG
    let to_svg = |p: &Point2<f64>| Point2::new(MARGIN + (p.x - min.x) * px, MARGIN + (max.y - p.y) * px);
    let level = |v: f64| (v - lo) / (hi - lo);

    let width = 2.0 * MARGIN + w + LEGEND_WIDTH;
    let height = (2.0 * MARGIN + h + FOOTER).max(2.0 * MARGIN + 200.0 + FOOTER);
    let mut defs = String::new();
    let mut body = String::new();
    for (t, tri) in patch.triangles.iter().enumerate() {
        let p = tri.map(|v| to_svg(&patch.vertices2d[v]));
        let f = tri.map(|v| level(patch.vwt[v]));
        let points = format!(
            "{},{} {},{} {},{}",
            num(p[0].x),
            num(p[0].y),
            num(p[1].x),
            num(p[1].y),
            num(p[2].x),
            num(p[2].y)
        );
        let fill = match linear_gradient(&p, &f) {
            None => hex(viridis(f[0])),
            Some((start, end, fmin, fmax)) => {
                let _ = write!(
                    defs,
                    "<linearGradient id=\"g{t}\" gradientUnits=\"userSpaceOnUse\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\">",
                    num(start.x),
                    num(start.y),
                    num(end.x),
                    num(end.y)
                );
                for (offset, color) in ramp_stops(fmin, fmax) {
                    let _ = write!(defs, "<stop offset=\"{}\" stop-color=\"{}\"/>", num(offset), hex(color));
                }
                defs.push_str("</linearGradient>\n");
                format!("url(#g{t})")
            }
        };
        let _ = writeln!(
            body,
            "<polygon points=\"{points}\" fill=\"{fill}\" stroke=\"{fill}\" stroke-width=\"0.2\" stroke-linejoin=\"round\"/>"
        );
    }

    let mut svg = String::new();
    let _ = writeln!(svg, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        num(width),
        num(height),
        num(width),
        num(height)
    );
    svg.push_str("<defs>\n");
    svg.push_str(&defs);
    svg.push_str("<linearGradient id=\"colorbar\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">");
    for (k, c) in VIRIDIS.iter().enumerate() {
        let _ = write!(svg, "<stop offset=\"{}\" stop-color=\"{}\"/>", num(k as f64 / 10.0), hex(*c));
    }
    svg.push_str("</linearGradient>\n</defs>\n");
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>");
    svg.push_str("<g id=\"patch\">\n");
    svg.push_str(&body);
    svg.push_str("</g>\n");

    // color bar with min, mid and max labels
    let bar_x = 2.0 * MARGIN + w;
    let (bar_top, bar_height) = (MARGIN, 200.0);
    let _ = writeln!(
        svg,
        "<g id=\"colorbar-legend\" font-family=\"sans-serif\" font-size=\"11\"><rect x=\"{}\" y=\"{}\" width=\"16\" height=\"{}\" fill=\"url(#colorbar)\" stroke=\"#000000\" stroke-width=\"0.5\"/>",
        num(bar_x),
        num(bar_top),
        num(bar_height)
    );
    for (frac, value) in [(0.0, lo), (0.5, 0.5 * (lo + hi)), (1.0, hi)] {
        let y = bar_top + bar_height * (1.0 - frac);
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" dominant-baseline=\"middle\">{} mm</text>",
            num(bar_x + 22.0),
            num(y),
            num(value)
        );
    }
    let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\">VWT</text></g>", num(bar_x), num(bar_top + bar_height + 16.0));

    // scale bar about a quarter of the patch width
    let patch_width_mm = (max.x - min.x).max(max.y - min.y);
    if patch_width_mm > 0.0 {
        let length = nice_length(0.25 * patch_width_mm);
        let y = height - FOOTER * 0.5;
        let _ = writeln!(
            svg,
            "<g id=\"scale-bar\" font-family=\"sans-serif\" font-size=\"11\"><line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\" stroke-width=\"2\"/><text x=\"{}\" y=\"{}\">{} mm</text></g>",
            num(MARGIN),
            num(y),
            num(MARGIN + length * px),
            num(y),
            num(MARGIN + length * px + 6.0),
            num(y + 4.0),
            num(length)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Gradient axis of the linear field with corner values `f` over triangle `p`:
/// start at the lowest corner, end where the field reaches the highest value.
fn linear_gradient(p: &[Point2<f64>; 3], f: &[f64; 3]) -> Option<(Point2<f64>, Point2<f64>, f64, f64)> {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let det = e1.perp(&e2);
    let (df1, df2) = (f[1] - f[0], f[2] - f[0]);
    if det == 0.0 || (df1 == 0.0 && df2 == 0.0) {
        return None;
    }
    // ∇f solves [e1; e2]·g = [df1; df2]
    let g = Vector2::new(df1 * e2.y - df2 * e1.y, df2 * e1.x - df1 * e2.x) / det;
    let g2 = g.norm_squared();
    if !(g2 > 0.0) || !g2.is_finite() {
        return None;
    }
    let lowest = (0..3).min_by(|&a, &b| f[a].total_cmp(&f[b])).expect("three corners");
    let highest = (0..3).max_by(|&a, &b| f[a].total_cmp(&f[b]).then(b.cmp(&a))).expect("three corners");
    let (fmin, fmax) = (f[lowest], f[highest]);
    let start = p[lowest];
    Some((start, start + g * ((fmax - fmin) / g2), fmin, fmax))
}

/// Stops reproducing the ramp between levels `fmin` and `fmax` along the gradient axis.
fn ramp_stops(fmin: f64, fmax: f64) -> Vec<(f64, [u8; 3])> {
    let span = fmax - fmin;
    let mut stops = vec![(0.0, viridis(fmin))];
    for k in 1..VIRIDIS.len() - 1 {
        let knot = k as f64 / 10.0;
        if knot > fmin && knot < fmax {
            stops.push(((knot - fmin) / span, VIRIDIS[k]));
        }
    }
    stops.push((1.0, viridis(fmax)));
    stops
}
