//! Minimal self-contained SVG 1.1 figures.

use std::fmt::Write as _;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

const MARGIN: f64 = 50.0;

pub struct Figure {
    width: f64,
    height: f64,
    x_range: (f64, f64),
    y_range: (f64, f64),
    body: String,
}

impl Figure {
    pub fn new(width: f64, height: f64, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Self {
            width,
            height,
            x_range,
            y_range,
            body: String::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        let (lo, hi) = self.x_range;
        MARGIN + (x - lo) / (hi - lo) * (self.width - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        let (lo, hi) = self.y_range;
        self.height - MARGIN - (y - lo) / (hi - lo) * (self.height - 2.0 * MARGIN)
    }

    fn clamp_x(&self, x: f64) -> f64 {
        x.clamp(self.x_range.0, self.x_range.1)
    }

    fn clamp_y(&self, y: f64) -> f64 {
        y.clamp(self.y_range.0, self.y_range.1)
    }

    /// Filled rectangle in data coordinates, clipped to the plot range.
    pub fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, fill: &str) {
        let (ax, bx) = (self.px(self.clamp_x(x0.min(x1))), self.px(self.clamp_x(x0.max(x1))));
        let (ay, by) = (self.py(self.clamp_y(y0.max(y1))), self.py(self.clamp_y(y0.min(y1))));
        let _ = writeln!(
            self.body,
            r#"<rect x="{ax:.2}" y="{ay:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="none"/>"#,
            bx - ax,
            by - ay
        );
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], color: &str, width: f64, dash: Option<&str>) {
        if points.is_empty() {
            return;
        }
        let mut coords = String::new();
        for &(x, y) in points {
            if x.is_finite() && y.is_finite() {
                let _ = write!(coords, "{:.2},{:.2} ", self.px(x), self.py(y));
            }
        }
        let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"{dash}/>"#,
            coords.trim_end()
        );
    }

    pub fn text(&mut self, x_px: f64, y_px: f64, size: f64, anchor: &str, content: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x_px:.2}" y="{y_px:.2}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{}</text>"#,
            escape(content)
        );
    }

    /// Frame, five ticks per axis and axis labels.
    pub fn axes(&mut self, x_label: &str, y_label: &str, title: &str) {
        let (x0, x1) = self.x_range;
        let (y0, y1) = self.y_range;
        let (l, r, t, b) = (self.px(x0), self.px(x1), self.py(y1), self.py(y0));
        let _ = writeln!(
            self.body,
            r##"<rect x="{l:.2}" y="{t:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#000" stroke-width="1"/>"##,
            r - l,
            b - t
        );
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let (tx, ty) = (self.px(fx), self.py(fy));
            self.text(tx, b + 16.0, 11.0, "middle", &format!("{fx:.3}"));
            self.text(l - 6.0, ty + 4.0, 11.0, "end", &format!("{fy:.3}"));
        }
        self.text(0.5 * (l + r), self.height - 10.0, 13.0, "middle", x_label);
        self.text(14.0, 0.5 * (t + b), 13.0, "middle", y_label);
        self.text(0.5 * (l + r), 20.0, 14.0, "middle", title);
    }

    pub fn render(&self) -> String {
        format!(
            concat!(
                r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#,
                "\n",
                r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
                "\n",
                r##"<rect x="0" y="0" width="{w}" height="{h}" fill="#ffffff"/>"##,
                "\n{body}</svg>\n"
            ),
            w = self.width,
            h = self.height,
            body = self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_document() {
        let mut fig = Figure::new(400.0, 300.0, (-1.0, 1.0), (-1.0, 1.0));
        fig.rect(0.0, 0.0, 2.0, 2.0, "#eee");
        fig.polyline(&[(0.0, 0.0), (0.5, 0.5), (f64::NAN, 0.0)], "#000", 1.0, Some("4 2"));
        fig.axes("x1 <m>", "x2", "t");
        let svg = fig.render();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("x1 &lt;m&gt;"));
        assert!(!svg.contains("href"));
        assert!(!svg.contains("NaN"));
    }
}
