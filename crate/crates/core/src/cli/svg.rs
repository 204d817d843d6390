//! Minimal self-contained SVG line charts.

use super::CliError;
use std::fmt::Write as _;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 480.0;
pub const LEFT: f64 = 80.0;
pub const RIGHT: f64 = 20.0;
pub const TOP: f64 = 40.0;
pub const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
}

/// Vertical position of `y` for a plot spanning `[lo, hi]` in (possibly log) units.
pub fn y_pixel(t: f64, lo: f64, hi: f64) -> f64 {
    let bottom = HEIGHT - BOTTOM;
    if hi == lo {
        return bottom - (bottom - TOP) / 2.0;
    }
    bottom - (t - lo) / (hi - lo) * (bottom - TOP)
}

pub fn x_pixel(x: f64, lo: f64, hi: f64) -> f64 {
    LEFT + (x - lo) / (hi - lo) * (WIDTH - LEFT - RIGHT)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn span(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((a, b)) => Some((a.min(v), b.max(v))),
    })
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("{:.0e}", 10f64.powf(v))
    } else if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.2}")
    }
}

/// Renders `lines` into a 640×480 SVG document.
///
/// On a log axis, values `≤ 0` are drawn at the smallest positive value of
/// the chart, with a warning. Non-finite points are skipped.
pub fn render_svg(lines: &[Line], spec: &PlotSpec) -> Result<String, CliError> {
    if lines.iter().all(|l| l.points.is_empty()) {
        return Err(CliError::Data("nothing to plot: all series are empty".into()));
    }
    let finite: Vec<Vec<(f64, f64)>> = lines
        .iter()
        .map(|l| {
            l.points
                .iter()
                .copied()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect()
        })
        .collect();
    let floor = if spec.log_y {
        let positive = finite.iter().flatten().map(|p| p.1).filter(|y| *y > 0.0);
        let floor = positive.fold(f64::INFINITY, f64::min);
        let floor = if floor.is_finite() { floor } else { 1e-300 };
        let clamped = finite.iter().flatten().filter(|p| p.1 <= 0.0).count();
        if clamped > 0 {
            log::warn!("log scale: {clamped} values <= 0 drawn at the axis floor {floor:e}");
        }
        floor
    } else {
        0.0
    };
    let ty = |y: f64| if spec.log_y { y.max(floor).log10() } else { y };
    let (x_lo, x_hi) = span(finite.iter().flatten().map(|p| p.0))
        .ok_or_else(|| CliError::Data("nothing to plot: no finite points".into()))?;
    let (y_lo, y_hi) = span(finite.iter().flatten().map(|p| ty(p.1))).expect("non-empty");
    let (x_lo, x_hi) = if x_lo == x_hi {
        (x_lo - 0.5, x_hi + 0.5)
    } else {
        (x_lo, x_hi)
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = WIDTH,
        h = HEIGHT
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let (px0, px1, py0, py1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        s,
        r#"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        px1 - px0,
        py1 - py0
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = x_lo + f * (x_hi - x_lo);
        let xp = x_pixel(xv, x_lo, x_hi);
        let _ = writeln!(
            s,
            r#"<line x1="{xp:.2}" y1="{py1:.2}" x2="{xp:.2}" y2="{:.2}" stroke="black"/>"#,
            py1 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{xp:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            py1 + 18.0,
            tick_label(xv, false)
        );
        let yv = y_lo + f * (y_hi - y_lo);
        let yp = y_pixel(yv, y_lo, y_hi);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{yp:.2}" x2="{px0:.2}" y2="{yp:.2}" stroke="black"/>"#,
            px0 - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            px0 - 8.0,
            yp + 4.0,
            tick_label(yv, spec.log_y)
        );
        if y_lo == y_hi {
            break;
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        TOP - 15.0,
        escape(&spec.title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (px0 + px1) / 2.0,
        HEIGHT - 10.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        (py0 + py1) / 2.0,
        (py0 + py1) / 2.0,
        escape(&spec.y_label)
    );
    for (k, (line, pts)) in lines.iter().zip(&finite).enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", x_pixel(x, x_lo, x_hi), y_pixel(ty(y), y_lo, y_hi)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = py0 + 15.0 + 16.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            px1 - 150.0,
            px1 - 130.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            px1 - 125.0,
            ly + 4.0,
            escape(&line.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
