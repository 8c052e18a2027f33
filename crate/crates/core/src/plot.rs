//! Self-contained SVG line and raster plots.
//!
//! Every plot carries its plotted series as an XML comment so the file can be
//! read back without the CSVs.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;
const MAX_POINTS: usize = 1500;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            xs,
            ys,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub series: Vec<Series>,
}

/// Stride that keeps at most `MAX_POINTS` samples, always keeping the last.
fn decimate(n: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let stride = n.div_ceil(MAX_POINTS).max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    idx
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn header(out: &mut String, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

fn axes(out: &mut String, top: f64, title: &str, x_label: &str, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) {
    let left = MARGIN_L;
    let right = WIDTH - MARGIN_R;
    let bottom = top + PANEL_HEIGHT - MARGIN_B;
    let ptop = top + MARGIN_T;
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{ptop}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - ptop
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, top + 18.0, escape(title));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (left + right) / 2.0, bottom + 32.0, escape(x_label));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let px = left + f * (right - left);
        let py = bottom - f * (bottom - ptop);
        let _ = writeln!(out, r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, bottom + 15.0, tick(x0 + f * (x1 - x0)));
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, left - 5.0, py + 4.0, tick(y0 + f * (y1 - y0)));
        let _ = writeln!(out, r##"<line x1="{left}" y1="{py:.1}" x2="{right}" y2="{py:.1}" stroke="#ddd"/>"##);
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Stacked line-plot panels sharing the page width.
pub fn line_panels(panels: &[Panel]) -> String {
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut out = String::new();
    header(&mut out, height);
    for (p, panel) in panels.iter().enumerate() {
        let top = p as f64 * PANEL_HEIGHT;
        let xr = range(panel.series.iter().flat_map(|s| s.xs.iter().copied()));
        let yr = range(panel.series.iter().flat_map(|s| s.ys.iter().copied()));
        axes(&mut out, top, &panel.title, &panel.x_label, xr, yr);
        let left = MARGIN_L;
        let right = WIDTH - MARGIN_R;
        let bottom = top + PANEL_HEIGHT - MARGIN_B;
        let ptop = top + MARGIN_T;
        let sx = |x: f64| left + (x - xr.0) / (xr.1 - xr.0) * (right - left);
        let sy = |y: f64| bottom - (y - yr.0) / (yr.1 - yr.0) * (bottom - ptop);
        for (k, s) in panel.series.iter().enumerate() {
            let idx = decimate(s.xs.len().min(s.ys.len()));
            let color = COLORS[k % COLORS.len()];
            let _ = writeln!(out, "<!-- data {}: {} -->", escape(&s.label), data_comment(s, &idx));
            let points: Vec<String> = idx
                .iter()
                .map(|&i| format!("{:.2},{:.2}", sx(s.xs[i]), sy(s.ys[i])))
                .collect();
            let dash = if s.dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                points.join(" ")
            );
            let ly = ptop + 14.0 + 14.0 * k as f64;
            let _ = writeln!(out, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#, right - 150.0, right - 130.0);
            let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, right - 125.0, ly + 4.0, escape(&s.label));
        }
    }
    out.push_str("</svg>\n");
    out
}

fn data_comment(s: &Series, idx: &[usize]) -> String {
    idx.iter()
        .map(|&i| format!("{},{}", s.xs[i], s.ys[i]))
        .collect::<Vec<_>>()
        .join(" ")
        .replace("--", "- -")
}

/// Event raster: one row per agent, consecutive-step events merged into bars.
pub fn raster(title: &str, horizon: f64, step: f64, events: &[Vec<usize>]) -> String {
    let rows = events.len().max(1);
    let row_h = 24.0;
    let height = MARGIN_T + MARGIN_B + row_h * rows as f64;
    let mut out = String::new();
    header(&mut out, height);
    let left = MARGIN_L;
    let right = WIDTH - MARGIN_R;
    let px_per_s = (right - left) / horizon.max(f64::MIN_POSITIVE);
    let _ = writeln!(out, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">t (s)</text>"#, (left + right) / 2.0, height - 8.0);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, left + f * (right - left), height - MARGIN_B + 15.0, tick(f * horizon));
    }
    for (a, ks) in events.iter().enumerate() {
        let y = MARGIN_T + row_h * a as f64;
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">agent {}</text>"#, left - 5.0, y + row_h * 0.6, a);
        let runs = merge_runs(ks);
        let _ = writeln!(
            out,
            "<!-- data agent {a}: {} -->",
            runs.iter().map(|(s, e)| format!("{s}-{e}")).collect::<Vec<_>>().join(" ")
        );
        let color = COLORS[a % COLORS.len()];
        for (s, e) in runs {
            let x = left + s as f64 * step * px_per_s;
            let w = ((e - s + 1) as f64 * step * px_per_s).max(0.6);
            let _ = writeln!(
                out,
                r#"<rect x="{x:.2}" y="{:.1}" width="{w:.2}" height="{:.1}" fill="{color}"/>"#,
                y + 3.0,
                row_h - 6.0
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Inclusive `(first, last)` step ranges of consecutive indices.
pub fn merge_runs(ks: &[usize]) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for &k in ks {
        match runs.last_mut() {
            Some((_, e)) if *e + 1 == k => *e = k,
            _ => runs.push((k, k)),
        }
    }
    runs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runs_merge_consecutive_steps() {
        assert_eq!(merge_runs(&[1, 2, 3, 7, 9, 10]), vec![(1, 3), (7, 7), (9, 10)]);
        assert!(merge_runs(&[]).is_empty());
    }

    #[test]
    fn decimation_keeps_endpoints() {
        let idx = decimate(30001);
        assert_eq!(idx[0], 0);
        assert_eq!(*idx.last().unwrap(), 30000);
        assert!(idx.len() <= MAX_POINTS + 1);
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let s = Series::new("a<b", vec![0.0, 1.0], vec![0.0, 2.0]);
        let svg = line_panels(&[Panel {
            title: "t".into(),
            x_label: "x".into(),
            series: vec![s],
        }]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a&lt;b"));
    }
}
