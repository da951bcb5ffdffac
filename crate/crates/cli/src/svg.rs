//! Fixed-size SVG figures. Each file records its data-to-pixel transform in
//! a comment so figures from different runs can be compared directly.

use std::fmt::Write;

use simulband_core::regions::IntervalSet;

use crate::analysis::{GridDoc, RegionsDoc};

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;

/// Axis-aligned affine map from data space to pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Transform {
    fn padded(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| {
            let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
            (lo - 0.05 * span, hi + 0.05 * span)
        };
        let (x_min, x_max) = pad(x);
        let (y_min, y_max) = pad(y);
        Self { x_min, x_max, y_min, y_max }
    }

    pub fn sx(&self) -> f64 {
        (WIDTH - LEFT - RIGHT) / (self.x_max - self.x_min)
    }

    pub fn sy(&self) -> f64 {
        (HEIGHT - TOP - BOTTOM) / (self.y_max - self.y_min)
    }

    pub fn px(&self, x: f64) -> f64 {
        LEFT + self.sx() * (x - self.x_min)
    }

    pub fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - self.sy() * (y - self.y_min)
    }

    fn comment(&self) -> String {
        format!(
            "<!-- data-to-pixel: px = {} + {} * (x - {}); py = {} - {} * (y - {}) -->\n",
            LEFT,
            self.sx(),
            self.x_min,
            HEIGHT - BOTTOM,
            self.sy(),
            self.y_min
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn f(v: f64) -> String {
    format!("{v:.3}")
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{}", (v * 1e6).round() / 1e6);
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn open(t: &Transform, title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    s.push_str(&t.comment());
    let _ = writeln!(
        s,
        "<!-- data-bounds: x in [{}, {}], y in [{}, {}] -->",
        t.x_min, t.x_max, t.y_min, t.y_max
    );
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
        f(WIDTH / 2.0),
        escape(title)
    );
    let (x0, x1, y0, y1) = (t.px(t.x_min), t.px(t.x_max), t.py(t.y_min), t.py(t.y_max));
    let _ = writeln!(
        s,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        f(x0),
        f(y1),
        f(x1 - x0),
        f(y0 - y1)
    );
    s.push_str("<g font-family=\"sans-serif\" font-size=\"11\">\n");
    for v in nice_ticks(t.x_min, t.x_max) {
        let x = t.px(v);
        let _ = writeln!(s, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", f(x), f(y0), f(x), f(y0 + 5.0));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", f(x), f(y0 + 18.0), tick_label(v));
    }
    for v in nice_ticks(t.y_min, t.y_max) {
        let y = t.py(v);
        let _ = writeln!(s, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>", f(x0 - 5.0), f(y), f(x0), f(y));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>", f(x0 - 8.0), f(y + 4.0), tick_label(v));
    }
    s.push_str("</g>\n");
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        f((x0 + x1) / 2.0),
        f(HEIGHT - 25.0),
        escape(x_label)
    );
    let (lx, ly) = (22.0, (y0 + y1) / 2.0);
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>",
        f(lx),
        f(ly),
        f(lx),
        f(ly),
        escape(y_label)
    );
    if t.y_min < 0.0 && t.y_max > 0.0 {
        let _ = writeln!(
            s,
            "<line id=\"zero-y\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999999\" stroke-dasharray=\"2 3\"/>",
            f(x0),
            f(t.py(0.0)),
            f(x1),
            f(t.py(0.0))
        );
    }
    s
}

fn rect(s: &mut String, t: &Transform, id: &str, b: &IntervalSet, style: &str) {
    let (x0, x1) = (t.px(b.lower[0]), t.px(b.upper[0]));
    let (y0, y1) = (t.py(b.upper[1]), t.py(b.lower[1]));
    let _ = writeln!(
        s,
        "<rect id=\"{id}\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" {style}/>",
        f(x0),
        f(y0),
        f(x1 - x0),
        f(y1 - y0)
    );
}

fn points(pts: impl Iterator<Item = (f64, f64)>, t: &Transform) -> String {
    pts.map(|(x, y)| format!("{},{}", f(t.px(x)), f(t.py(y)))).collect::<Vec<_>>().join(" ")
}

fn legend(s: &mut String, entries: &[(&str, &str)]) {
    s.push_str("<g font-family=\"sans-serif\" font-size=\"11\">\n");
    let _ = writeln!(
        s,
        "<rect x=\"{}\" y=\"{}\" width=\"165\" height=\"{}\" fill=\"white\" fill-opacity=\"0.85\" stroke=\"#cccccc\"/>",
        f(WIDTH - RIGHT - 176.0),
        f(TOP + 2.0),
        f(16.0 * entries.len() as f64 + 6.0)
    );
    for (i, (label, style)) in entries.iter().enumerate() {
        let y = TOP + 16.0 + 16.0 * i as f64;
        let x = WIDTH - RIGHT - 170.0;
        let _ = writeln!(s, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" {style}/>", f(x), f(y - 4.0), f(x + 24.0), f(y - 4.0));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", f(x + 30.0), f(y), escape(label));
    }
    s.push_str("</g>\n");
}

const POINTWISE_STYLE: &str = "stroke=\"#1f4e9c\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"";
const SUPT_STYLE: &str = "stroke=\"#c0392b\" stroke-width=\"1.5\"";
const BONF_STYLE: &str = "stroke=\"#7f7f7f\" stroke-width=\"1\" stroke-dasharray=\"1 3\"";
const ELLIPSE_STYLE: &str = "stroke=\"#2e8b57\" stroke-width=\"1.5\"";

/// Two-parameter figure: estimate, interval crosshairs, pointwise and
/// sup-t rectangles, Bonferroni rectangle and the ellipse.
pub fn effects_figure(r: &RegionsDoc) -> String {
    assert_eq!(r.parameters.len(), 2, "the effects figure needs two parameters");
    let (p, s_band, b) = (&r.pointwise, &r.supt, &r.bonferroni);
    let mut xs = vec![b.lower[0], b.upper[0], s_band.lower[0], s_band.upper[0]];
    let mut ys = vec![b.lower[1], b.upper[1], s_band.lower[1], s_band.upper[1]];
    let boundary = r.ellipsoid.as_ref().and_then(|e| e.boundary.as_ref());
    if let Some(pts) = boundary {
        xs.extend(pts.iter().map(|q| q[0]));
        ys.extend(pts.iter().map(|q| q[1]));
    }
    let range = |v: &[f64]| (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let t = Transform::padded(range(&xs), range(&ys));
    let mut s = open(&t, "Confidence regions", &r.parameters[0], &r.parameters[1]);

    rect(&mut s, &t, "bonferroni", b, BONF_STYLE);
    rect(&mut s, &t, "pointwise", p, POINTWISE_STYLE);
    rect(&mut s, &t, "supt", s_band, SUPT_STYLE);
    if let Some(pts) = boundary {
        let _ = writeln!(
            s,
            "<polyline id=\"ellipse\" fill=\"none\" {ELLIPSE_STYLE} points=\"{}\"/>",
            points(pts.iter().map(|q| (q[0], q[1])), &t)
        );
    }
    let (ex, ey) = (p.estimate[0], p.estimate[1]);
    let _ = writeln!(
        s,
        "<line id=\"ci-0\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        f(t.px(p.lower[0])),
        f(t.py(ey)),
        f(t.px(p.upper[0])),
        f(t.py(ey))
    );
    let _ = writeln!(
        s,
        "<line id=\"ci-1\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        f(t.px(ex)),
        f(t.py(p.lower[1])),
        f(t.px(ex)),
        f(t.py(p.upper[1]))
    );
    let _ = writeln!(s, "<circle id=\"estimate\" cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"black\"/>", f(t.px(ex)), f(t.py(ey)));
    legend(
        &mut s,
        &[
            ("Pointwise (intervals)", POINTWISE_STYLE),
            ("Sup-t band", SUPT_STYLE),
            ("Bonferroni band", BONF_STYLE),
            ("Wald ellipse", ELLIPSE_STYLE),
        ],
    );
    s.push_str("</svg>\n");
    s
}

fn band_polygon(s: &mut String, t: &Transform, id: &str, grid: &[f64], b: &IntervalSet, fill: &str) {
    let upper = grid.iter().zip(&b.upper).map(|(x, y)| (*x, *y));
    let lower = grid.iter().zip(&b.lower).rev().map(|(x, y)| (*x, *y));
    let _ = writeln!(
        s,
        "<polygon id=\"{id}\" fill=\"{fill}\" stroke=\"none\" points=\"{}\"/>",
        points(upper.chain(lower), t)
    );
}

/// Conditional effect curve with nested shaded bands.
pub fn grid_figure(g: &GridDoc, y_label: &str) -> String {
    let b = &g.bonferroni;
    let lo = b.lower.iter().chain(&g.supt.lower).copied().fold(f64::INFINITY, f64::min);
    let hi = b.upper.iter().chain(&g.supt.upper).copied().fold(f64::NEG_INFINITY, f64::max);
    let x = (g.grid[0], *g.grid.last().expect("non-empty grid"));
    let t = Transform::padded(x, (lo, hi));
    let mut s = open(&t, "Conditional effect", &g.modifier, y_label);
    band_polygon(&mut s, &t, "bonferroni", &g.grid, &g.bonferroni, "#e3e3e3");
    band_polygon(&mut s, &t, "supt", &g.grid, &g.supt, "#f4b6ae");
    band_polygon(&mut s, &t, "pointwise", &g.grid, &g.pointwise, "#9bb7e3");
    let _ = writeln!(
        s,
        "<polyline id=\"estimate\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"{}\"/>",
        points(g.grid.iter().zip(&g.estimate).map(|(x, y)| (*x, *y)), &t)
    );
    legend(
        &mut s,
        &[
            ("Estimate", "stroke=\"black\" stroke-width=\"1.5\""),
            ("Pointwise", "stroke=\"#9bb7e3\" stroke-width=\"8\""),
            ("Sup-t band", "stroke=\"#f4b6ae\" stroke-width=\"8\""),
            ("Bonferroni band", "stroke=\"#e3e3e3\" stroke-width=\"8\""),
        ],
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_maps_corners() {
        let t = Transform { x_min: -1.0, x_max: 3.0, y_min: 10.0, y_max: 20.0 };
        assert_eq!(t.px(-1.0), LEFT);
        assert!((t.px(3.0) - (WIDTH - RIGHT)).abs() < 1e-9);
        assert_eq!(t.py(10.0), HEIGHT - BOTTOM);
        assert!((t.py(20.0) - TOP).abs() < 1e-9);
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(nice_ticks(-45.3, 58.9), vec![-40.0, -20.0, 0.0, 20.0, 40.0]);
        assert_eq!(tick_label(-0.0), "0");
    }

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
