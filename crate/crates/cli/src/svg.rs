//! Minimal SVG phase portraits. No timestamps or ids, so output is stable.

use std::fmt::Write;

use limitlyap::ode::FieldSample;
use limitlyap::system::Window;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;

pub struct Plot {
    window: Window,
    body: String,
}

impl Plot {
    pub fn new(window: Window) -> Self {
        Self {
            window,
            body: String::new(),
        }
    }

    fn scale(&self) -> f64 {
        let w = &self.window;
        (SIZE - 2.0 * MARGIN) / (w.xmax - w.xmin).max(w.ymax - w.ymin)
    }

    fn px(&self, x: f64, y: f64) -> (f64, f64) {
        let k = self.scale();
        (MARGIN + (x - self.window.xmin) * k, SIZE - MARGIN - (y - self.window.ymin) * k)
    }

    fn inside(&self, x: f64, y: f64) -> bool {
        let w = &self.window;
        (w.xmin..=w.xmax).contains(&x) && (w.ymin..=w.ymax).contains(&y)
    }

    pub fn axes(&mut self) {
        let w = self.window;
        let (x0, y0) = self.px(w.xmin, w.ymin);
        let (x1, y1) = self.px(w.xmax, w.ymax);
        let _ = writeln!(
            self.body,
            r##"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#888"/>"##,
            x1 - x0,
            y0 - y1
        );
        if w.xmin < 0.0 && w.xmax > 0.0 {
            let (a, b) = (self.px(0.0, w.ymin), self.px(0.0, w.ymax));
            let _ = writeln!(self.body, r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#ccc"/>"##, a.0, a.1, b.0, b.1);
        }
        if w.ymin < 0.0 && w.ymax > 0.0 {
            let (a, b) = (self.px(w.xmin, 0.0), self.px(w.xmax, 0.0));
            let _ = writeln!(self.body, r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#ccc"/>"##, a.0, a.1, b.0, b.1);
        }
    }

    /// Unit-length arrows, thinned to at most `per_axis` along each side.
    pub fn arrows(&mut self, samples: &[FieldSample], nx: usize, ny: usize, per_axis: usize) {
        let stride_x = nx.div_ceil(per_axis).max(1);
        let stride_y = ny.div_ceil(per_axis).max(1);
        let cell = self.scale() * (self.window.xmax - self.window.xmin) / nx.max(2) as f64 * stride_x as f64;
        let len = 0.4 * cell;
        for (i, s) in samples.iter().enumerate() {
            let (ix, iy) = (i % nx, i / nx);
            if ix % stride_x != 0 || iy % stride_y != 0 {
                continue;
            }
            let Some([fx, fy]) = s.value else { continue };
            let norm = fx.hypot(fy);
            if norm == 0.0 {
                continue;
            }
            // screen y points down
            let (dx, dy) = (fx / norm, -fy / norm);
            let (cx, cy) = self.px(s.x, s.y);
            let (tx, ty) = (cx + dx * len / 2.0, cy + dy * len / 2.0);
            let (bx, by) = (cx - dx * len / 2.0, cy - dy * len / 2.0);
            let h = len * 0.35;
            let (l1, l2) = (tx - h * (dx - 0.5 * dy), ty - h * (dy + 0.5 * dx));
            let (r1, r2) = (tx - h * (dx + 0.5 * dy), ty - h * (dy - 0.5 * dx));
            let _ = writeln!(
                self.body,
                r##"<path d="M{bx:.2},{by:.2}L{tx:.2},{ty:.2}M{l1:.2},{l2:.2}L{tx:.2},{ty:.2}L{r1:.2},{r2:.2}" stroke="#4a6fa5" fill="none"/>"##
            );
        }
    }

    /// A polyline in data coordinates, broken where it leaves the window.
    pub fn curve(&mut self, points: &[(f64, f64)], colour: &str, width: f64) {
        let mut run: Vec<(f64, f64)> = Vec::new();
        let flush = |run: &mut Vec<(f64, f64)>, body: &mut String| {
            if run.len() >= 2 {
                let pts: Vec<String> = run.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
                let _ = writeln!(
                    body,
                    r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="{width}"/>"#,
                    pts.join(" ")
                );
            }
            run.clear();
        };
        for &(x, y) in points {
            if x.is_finite() && y.is_finite() && self.inside(x, y) {
                run.push(self.px(x, y));
            } else {
                flush(&mut run, &mut self.body);
            }
        }
        flush(&mut run, &mut self.body);
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_split_outside_window() {
        let mut p = Plot::new(Window::square(1.0));
        p.curve(&[(0.0, 0.0), (0.5, 0.5), (3.0, 0.0), (0.1, 0.1), (0.2, 0.2)], "red", 1.0);
        assert_eq!(p.body.matches("<polyline").count(), 2);
        let svg = p.finish();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn arrows_skip_missing_values() {
        let mut p = Plot::new(Window::square(1.0));
        let s = [
            FieldSample { x: 0.0, y: 0.0, value: None },
            FieldSample { x: 0.5, y: 0.0, value: Some([1.0, 0.0]) },
            FieldSample { x: 0.0, y: 0.5, value: Some([0.0, 0.0]) },
        ];
        p.arrows(&s, 3, 1, 10);
        assert_eq!(p.body.matches("<path").count(), 1);
    }
}
