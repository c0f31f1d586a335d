//! Minimal SVG scatter plots of 2-D projections.

use std::fmt::Write;

const PALETTE: [&str; 16] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#393b79", "#ad494a", "#637939", "#8c6d31", "#843c39", "#7b4173",
];

pub fn colour(k: usize) -> &'static str {
    PALETTE[k % PALETTE.len()]
}

#[derive(Clone, Debug, Default)]
pub struct Scatter {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// `(x, y, colour index)`.
    pub points: Vec<(f64, f64, usize)>,
    pub radius: f64,
}

impl Scatter {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Scatter { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), points: Vec::new(), radius: 1.5 }
    }

    pub fn push(&mut self, x: f64, y: f64, class: usize) {
        self.points.push((x, y, class));
    }

    pub fn render(&self) -> String {
        let (w, h, pad) = (640.0, 640.0, 48.0);
        let finite = self.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in finite.clone() {
            x0 = x0.min(p.0);
            x1 = x1.max(p.0);
            y0 = y0.min(p.1);
            y1 = y1.max(p.1);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
        }
        let span = |a: f64, b: f64| if b > a { b - a } else { 1.0 };
        let (sx, sy) = ((w - 2.0 * pad) / span(x0, x1), (h - 2.0 * pad) / span(y0, y1));
        let mut out = String::new();
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="24" font-size="14" text-anchor="middle">{}</text>"#, w / 2.0, escape(&self.title));
        let _ = writeln!(
            out,
            r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - 2.0 * pad,
            h - 2.0 * pad
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{} [{x0:.4}, {x1:.4}]</text>"#, w / 2.0, h - 12.0, escape(&self.x_label));
        let _ = writeln!(
            out,
            r#"<text x="14" y="{}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {})">{} [{y0:.4}, {y1:.4}]</text>"#,
            h / 2.0,
            h / 2.0,
            escape(&self.y_label)
        );
        for &(x, y, c) in finite {
            let px = pad + (x - x0) * sx;
            let py = h - pad - (y - y0) * sy;
            let _ = writeln!(out, r#"<circle cx="{px:.2}" cy="{py:.2}" r="{}" fill="{}"/>"#, self.radius, colour(c));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Inserts a comment with the run description after the opening tag.
pub fn stamp(svg: &str, text: &str) -> String {
    let comment = format!("<!-- {} -->\n", text.replace("--", "- -"));
    match svg.find('\n') {
        Some(i) => format!("{}{}{}", &svg[..=i], comment, &svg[i + 1..]),
        None => format!("{svg}\n{comment}"),
    }
}
