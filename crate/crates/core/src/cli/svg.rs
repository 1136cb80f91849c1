//! Minimal SVG line/scatter plots: an 800x600 canvas split into vertically
//! stacked panels with linear axes.

use std::fmt::Write;

pub const WIDTH: f64 = 800.0;
pub const HEIGHT: f64 = 600.0;
/// Segments per sampled curve.
pub const CURVE_SEGMENTS: usize = 512;

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 46.0;

pub const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

#[derive(Debug, Clone)]
pub enum Series {
    Points {
        points: Vec<(f64, f64)>,
        filled: bool,
        color: String,
        label: Option<String>,
    },
    Curve {
        points: Vec<(f64, f64)>,
        color: String,
        dashed: bool,
        label: Option<String>,
    },
}

impl Series {
    fn points(&self) -> &[(f64, f64)] {
        match self {
            Series::Points { points, .. } | Series::Curve { points, .. } => points,
        }
    }

    fn label(&self) -> Option<(&str, &str)> {
        match self {
            Series::Points { label, color, .. } | Series::Curve { label, color, .. } => {
                label.as_deref().map(|l| (l, color.as_str()))
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Dashed horizontal reference lines.
    pub hlines: Vec<f64>,
}

impl Panel {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Self::default()
        }
    }

    pub fn points(
        mut self,
        points: Vec<(f64, f64)>,
        filled: bool,
        color: &str,
        label: Option<&str>,
    ) -> Self {
        self.series.push(Series::Points {
            points,
            filled,
            color: color.to_string(),
            label: label.map(str::to_string),
        });
        self
    }

    pub fn curve(
        mut self,
        points: Vec<(f64, f64)>,
        color: &str,
        dashed: bool,
        label: Option<&str>,
    ) -> Self {
        self.series.push(Series::Curve {
            points,
            color: color.to_string(),
            dashed,
            label: label.map(str::to_string),
        });
        self
    }

    pub fn hline(mut self, y: f64) -> Self {
        self.hlines.push(y);
        self
    }

    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let all = self.series.iter().flat_map(|s| s.points().iter().copied());
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for (x, y) in all.filter(|p| p.0.is_finite() && p.1.is_finite()) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        for &h in &self.hlines {
            y0 = y0.min(h);
            y1 = y1.max(h);
        }
        (pad(x0, x1), pad(y0, y1))
    }
}

fn pad(lo: f64, hi: f64) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (-1.0, 1.0);
    }
    let span = hi - lo;
    if span <= 0.0 {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
        return (lo - d, hi + d);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

/// Samples `f` on `[lo, hi]` with [`CURVE_SEGMENTS`] segments.
pub fn sample_curve(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
    (0..=CURVE_SEGMENTS)
        .map(|k| {
            let x = lo + (hi - lo) * k as f64 / CURVE_SEGMENTS as f64;
            (x, f(x))
        })
        .collect()
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.4}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn render(panels: &[Panel]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let slot = HEIGHT / panels.len().max(1) as f64;
    for (k, panel) in panels.iter().enumerate() {
        render_panel(&mut out, panel, k as f64 * slot, slot);
    }
    out.push_str("</svg>\n");
    out
}

fn render_panel(out: &mut String, panel: &Panel, top: f64, height: f64) {
    let ((x0, x1), (y0, y1)) = panel.ranges();
    let left = MARGIN_LEFT;
    let right = WIDTH - MARGIN_RIGHT;
    let ptop = top + MARGIN_TOP;
    let pbottom = top + height - MARGIN_BOTTOM;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
    let sy = |y: f64| pbottom - (y - y0) / (y1 - y0) * (pbottom - ptop);

    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        (left + right) / 2.0,
        top + 22.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{left:.2}" y="{ptop:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        right - left,
        pbottom - ptop
    );
    for t in nice_ticks(x0, x1) {
        let px = sx(t);
        let _ = writeln!(
            out,
            r##"<line x1="{px:.2}" y1="{pbottom:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            pbottom + 5.0,
            pbottom + 18.0,
            tick_label(t)
        );
    }
    for t in nice_ticks(y0, y1) {
        let py = sy(t);
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{left:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            left - 5.0,
            left - 8.0,
            py + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        pbottom + 36.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (ptop + pbottom) / 2.0,
        (ptop + pbottom) / 2.0,
        escape(&panel.y_label)
    );
    for &h in &panel.hlines {
        let py = sy(h);
        let _ = writeln!(
            out,
            r##"<line x1="{left:.2}" y1="{py:.2}" x2="{right:.2}" y2="{py:.2}" stroke="#555" stroke-dasharray="6 4"/>"##
        );
    }
    for s in &panel.series {
        match s {
            Series::Curve {
                points,
                color,
                dashed,
                ..
            } => {
                let coords: Vec<String> = points
                    .iter()
                    .filter(|p| p.0.is_finite() && p.1.is_finite())
                    .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                    .collect();
                let dash = if *dashed {
                    r#" stroke-dasharray="6 4""#
                } else {
                    ""
                };
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                    coords.join(" ")
                );
            }
            Series::Points {
                points,
                filled,
                color,
                ..
            } => {
                let fill = if *filled { color.as_str() } else { "none" };
                for &(x, y) in points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{fill}" stroke="{color}"/>"#,
                        sx(x),
                        sy(y)
                    );
                }
            }
        }
    }
    let mut ly = ptop + 16.0;
    for (label, color) in panel.series.iter().filter_map(Series::label) {
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="12" height="4" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            left + 10.0,
            ly - 5.0,
            left + 28.0,
            ly,
            escape(label)
        );
        ly += 16.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_has_512_segments() {
        let c = sample_curve(-1.0, 1.0, |x| x);
        assert_eq!(c.len(), CURVE_SEGMENTS + 1);
        assert_eq!(c[0], (-1.0, -1.0));
        assert_eq!(c[CURVE_SEGMENTS], (1.0, 1.0));
    }

    #[test]
    fn renders_elements() {
        let p = Panel::new("t", "x", "y")
            .points(vec![(0.0, 0.0), (1.0, 1.0)], true, PALETTE[0], Some("data"))
            .points(vec![(0.5, 0.2)], false, "#888", None)
            .curve(
                sample_curve(0.0, 1.0, |x| x * x),
                PALETTE[1],
                false,
                Some("fit"),
            )
            .hline(7.0);
        let svg = render(&[p]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains(r#"width="800" height="600""#));
        assert_eq!(svg.matches("<circle").count(), 3);
        assert_eq!(svg.matches(r##"fill="none" stroke="#888""##).count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn padding_and_ticks() {
        assert_eq!(pad(0.0, 10.0), (-0.5, 10.5));
        assert_eq!(pad(2.0, 2.0), (1.9, 2.1));
        assert_eq!(nice_ticks(0.0, 10.0), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(nice_ticks(-1.0, 9.5), vec![0.0, 2.0, 4.0, 6.0, 8.0]);
        assert_eq!(tick_label(-0.0), "0");
        assert_eq!(tick_label(2.5), "2.5");
    }
}
