//! Minimal static SVG charts. Coordinates are printed with three decimals.

use std::fmt::Write as _;

const W: f64 = 480.0;
const H: f64 = 360.0;
const PAD: f64 = 48.0;
pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

#[derive(Debug, Clone, Copy)]
pub struct Bounds {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Bounds {
    pub fn of(points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut b = Bounds {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for (x, y) in points {
            if x.is_finite() && y.is_finite() {
                b.x0 = b.x0.min(x);
                b.x1 = b.x1.max(x);
                b.y0 = b.y0.min(y);
                b.y1 = b.y1.max(y);
            }
        }
        if !b.x0.is_finite() {
            return Bounds { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
        }
        if b.x1 == b.x0 {
            b.x1 = b.x0 + 1.0;
        }
        if b.y1 == b.y0 {
            b.y1 = b.y0 + 1.0;
        }
        b
    }

    fn sx(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    fn sy(&self, y: f64) -> f64 {
        H - PAD - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn open(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, esc(title));
}

fn axes(s: &mut String, b: &Bounds, x_label: &str, y_label: &str) {
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}">{:.3}</text>"#, H - PAD + 14.0, b.x0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, W - PAD, H - PAD + 14.0, b.x1);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, PAD - 4.0, H - PAD, b.y0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, PAD - 4.0, PAD + 8.0, b.y1);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, esc(x_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(y_label)
    );
}

fn esc(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// Polylines with point markers; `vline` draws a dashed marker at that x.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>], vline: Option<f64>) -> String {
    let b = Bounds::of(series.iter().flat_map(|s| s.points.iter().copied()).chain(vline.map(|v| (v, f64::NAN))));
    let b = Bounds {
        x0: vline.map_or(b.x0, |v| b.x0.min(v)),
        x1: vline.map_or(b.x1, |v| b.x1.max(v)),
        ..b
    };
    let mut s = String::new();
    open(&mut s, title);
    axes(&mut s, &b, x_label, y_label);
    if let Some(v) = vline {
        let x = b.sx(v);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.3}" y1="{PAD}" x2="{x:.3}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#,
            H - PAD
        );
    }
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.3},{:.3}", b.sx(x), b.sy(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" points="{}"/>"#, pts.join(" "));
        for p in &pts {
            let (x, y) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="2" fill="{color}"/>"#);
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - PAD - 90.0,
            PAD + 14.0 + 14.0 * k as f64,
            esc(ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Grid of colored cells, `values[r][c]`, annotated with the values.
pub fn heatmap(title: &str, row_label: &str, rows: &[f64], col_label: &str, cols: &[f64], values: &[Vec<f64>]) -> String {
    let flat: Vec<f64> = values.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    let lo = flat.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = flat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cw = (W - 2.0 * PAD) / cols.len().max(1) as f64;
    let ch = (H - 2.0 * PAD) / rows.len().max(1) as f64;
    let mut s = String::new();
    open(&mut s, title);
    for (r, row) in values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let t = if v.is_finite() { (v - lo) / span } else { 0.0 };
            let red = (255.0 * t).round() as u8;
            let blue = (255.0 * (1.0 - t)).round() as u8;
            let (x, y) = (PAD + c as f64 * cw, PAD + r as f64 * ch);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="rgb({red},96,{blue})" stroke="white"/>"#
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.3}" y="{:.3}" text-anchor="middle" fill="white">{v:.3}</text>"#,
                x + cw / 2.0,
                y + ch / 2.0 + 4.0
            );
        }
    }
    for (c, v) in cols.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{:.3}" y="{}" text-anchor="middle">{v}</text>"#,
            PAD + (c as f64 + 0.5) * cw,
            H - PAD + 14.0
        );
    }
    for (r, v) in rows.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.3}" text-anchor="end">{v}</text>"#,
            PAD - 4.0,
            PAD + (r as f64 + 0.5) * ch + 4.0
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, esc(col_label));
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(row_label)
    );
    s.push_str("</svg>\n");
    s
}

pub struct Arrow {
    pub x: f64,
    pub y: f64,
    pub dx: f64,
    pub dy: f64,
    pub color: &'static str,
    pub width: f64,
}

/// Arrows in data coordinates. `scale` multiplies every vector, and the
/// scatter `dots` (x, y, color) are drawn underneath.
pub fn arrows(title: &str, bounds: Bounds, dots: &[(f64, f64, &str)], arrows: &[Arrow], scale: f64) -> String {
    let mut s = String::new();
    open(&mut s, title);
    axes(&mut s, &bounds, "x1", "x2");
    let _ = writeln!(
        s,
        r#"<defs><marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="context-stroke"/></marker></defs>"#
    );
    for &(x, y, color) in dots {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.3}" cy="{:.3}" r="1.5" fill="{color}" opacity="0.4"/>"#,
            bounds.sx(x),
            bounds.sy(y)
        );
    }
    for a in arrows {
        let _ = writeln!(
            s,
            r#"<line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{}" stroke-width="{}" marker-end="url(#head)"/>"#,
            bounds.sx(a.x),
            bounds.sy(a.y),
            bounds.sx(a.x + scale * a.dx),
            bounds.sy(a.y + scale * a.dy),
            a.color,
            a.width
        );
    }
    s.push_str("</svg>\n");
    s
}
