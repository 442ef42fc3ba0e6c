//! Minimal gap-aware chart rendering in two presentation modes.
//!
//! * iteration: abscissa is the point index `0..N−1`, one continuous line.
//! * timescale: abscissa is `t`; lines are drawn only inside intervals, so
//!   every jump shows as a gap, and discrete points get their own marker.

use std::fmt::Write as _;
use std::ops::Range;

use tskf::timescale::GridOrigin;

use crate::config::PlotMode;

/// Ordinates over a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub title: String,
    pub t: Vec<f64>,
    pub origin: Vec<GridOrigin>,
    pub series: Vec<(String, Vec<f64>)>,
}

impl PlotData {
    pub fn abscissa(&self, mode: PlotMode) -> Vec<f64> {
        match mode {
            PlotMode::Iteration => (0..self.t.len()).map(|i| i as f64).collect(),
            PlotMode::Timescale => self.t.clone(),
        }
    }
}

/// Index ranges drawn as connected polylines.
///
/// In timescale mode point `i` connects to `i + 1` only when both lie in the
/// same interval. Interval endpoints alternate start/end in grid order, so
/// the origin column alone recovers the interval structure.
pub fn pieces(mode: PlotMode, origin: &[GridOrigin]) -> Vec<Range<usize>> {
    let n = origin.len();
    if n == 0 {
        return Vec::new();
    }
    if mode == PlotMode::Iteration {
        return vec![0..n];
    }
    let mut out = Vec::new();
    let mut start = 0;
    let mut inside = false;
    for (i, o) in origin.iter().enumerate() {
        let connects = match o {
            GridOrigin::DiscretePoint => {
                inside = false;
                false
            }
            GridOrigin::IntervalEndpoint => {
                inside = !inside;
                inside
            }
            GridOrigin::IntervalSample => true,
        };
        if !connects || i + 1 == n {
            out.push(start..i + 1);
            start = i + 1;
        }
    }
    out
}

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;
const COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

fn range_of(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn tick_label(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(data: &PlotData, mode: PlotMode) -> String {
    let xs = data.abscissa(mode);
    let (x0, x1) = range_of(xs.iter().copied());
    let (y0, y1) = range_of(
        data.series
            .iter()
            .flat_map(|(_, ys)| ys.iter().copied())
            .chain(std::iter::once(0.0)),
    );
    let y1 = y1 + 0.05 * (y1 - y0);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&data.title)
    );

    // Axes and ticks.
    let (ax, ay) = (LEFT, TOP + plot_h);
    let _ = writeln!(
        s,
        r#"<path d="M{ax:.2},{TOP:.2} L{ax:.2},{ay:.2} L{:.2},{ay:.2}" fill="none" stroke="black"/>"#,
        LEFT + plot_w
    );
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let xv = x0 + f * (x1 - x0);
        let px = sx(xv);
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{ay:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            ay + 5.0,
            ay + 18.0,
            tick_label(xv)
        );
        let yv = y0 + f * (y1 - y0);
        let py = sy(yv);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{ax:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            ax - 5.0,
            ax - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let x_label = match mode {
        PlotMode::Iteration => "iteration",
        PlotMode::Timescale => "t (s)",
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0
    );

    let segs = pieces(mode, &data.origin);
    for (k, (name, ys)) in data.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(s, r#"<g stroke="{color}" fill="{color}">"#);
        for r in &segs {
            if r.len() < 2 {
                continue;
            }
            let pts: Vec<String> = r
                .clone()
                .map(|i| format!("{:.2},{:.2}", sx(xs[i]), sy(ys[i])))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke-width="1.2" points="{}"/>"#,
                pts.join(" ")
            );
        }
        if mode == PlotMode::Timescale {
            for (i, o) in data.origin.iter().enumerate() {
                let (px, py) = (sx(xs[i]), sy(ys[i]));
                if !py.is_finite() {
                    continue;
                }
                if *o == GridOrigin::DiscretePoint {
                    let _ = writeln!(s, r#"<circle cx="{px:.2}" cy="{py:.2}" r="2.8"/>"#);
                } else {
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.2}" y="{:.2}" width="1.6" height="1.6" stroke="none"/>"#,
                        px - 0.8,
                        py - 0.8
                    );
                }
            }
        }
        let ly = TOP + 14.0 + 16.0 * k as f64;
        let lx = LEFT + plot_w - 190.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke-width="2"/><text x="{:.2}" y="{:.2}" stroke="none" fill="black">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(name)
        );
        let _ = writeln!(s, "</g>");
    }
    if mode == PlotMode::Timescale {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" fill="gray">circles: discrete points, squares: interval samples</text>"#,
            LEFT + 8.0,
            TOP + 14.0
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Two-column `x,y` CSV for one series; blank lines separate pieces.
pub fn render_data(data: &PlotData, mode: PlotMode, series: usize) -> String {
    let xs = data.abscissa(mode);
    let ys = &data.series[series].1;
    let mut s = String::from("x,y\n");
    for (k, r) in pieces(mode, &data.origin).into_iter().enumerate() {
        if k > 0 {
            s.push('\n');
        }
        for i in r {
            let _ = writeln!(
                s,
                "{},{}",
                tskf::kalman::fmt_num(xs[i]),
                tskf::kalman::fmt_num(ys[i])
            );
        }
    }
    s
}

/// File-name friendly form of a series name.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('_') && !out.is_empty() {
            out.push('_');
        }
    }
    out.trim_end_matches('_').to_string()
}
