//! Minimal SVG line chart: one polyline per method over `mu_norm`.

use std::fmt::Write;

use crate::table::RiskRow;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, Copy, Default)]
pub struct PlotOptions {
    pub error_bars: bool,
}

/// Series in order of first appearance, each sorted by `mu_norm`.
pub fn group_series(rows: &[RiskRow]) -> Vec<(String, Vec<&RiskRow>)> {
    let mut series: Vec<(String, Vec<&RiskRow>)> = Vec::new();
    for r in rows {
        match series.iter_mut().find(|(m, _)| *m == r.method) {
            Some((_, pts)) => pts.push(r),
            None => series.push((r.method.clone(), vec![r])),
        }
    }
    for (_, pts) in &mut series {
        pts.sort_by(|a, b| a.mu_norm.total_cmp(&b.mu_norm));
    }
    series
}

/// Tick positions at a 1/2/5 step covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = lo.abs().max(1.0) * 0.05;
        (lo - pad, hi + pad)
    }
}

pub fn render_svg(rows: &[RiskRow], opts: PlotOptions) -> String {
    let series = group_series(rows);
    let band = |r: &RiskRow| if opts.error_bars { r.std_err.abs() } else { 0.0 };
    let (x_lo, x_hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.mu_norm), b.max(r.mu_norm)));
    let (y_lo, y_hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| {
        (a.min(r.kl_risk - band(r)), b.max(r.kl_risk + band(r)))
    });
    let (x_lo, x_hi) = if x_hi > x_lo { (x_lo, x_hi) } else { (x_lo - 0.5, x_hi + 0.5) };
    let (y_lo, y_hi) = padded_range(y_lo, y_hi);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for t in ticks(x_lo, x_hi) {
        let x = sx(t);
        let y = TOP + plot_h;
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, y + 5.0);
        let label = format!("{:.*}", decimals(x_lo, x_hi), t);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, y + 19.0);
    }
    for t in ticks(y_lo, y_hi) {
        let y = sy(t);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let label = format!("{:.*}", decimals(y_lo, y_hi), t);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">|mu|</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">KL risk</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (k, (method, pts)) in series.iter().enumerate() {
        let method = escape(method);
        let colour = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = pts.iter().map(|r| format!("{:.2},{:.2}", sx(r.mu_norm), sy(r.kl_risk))).collect();
        let _ = writeln!(
            s,
            r#"<polyline data-method="{method}" fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        if opts.error_bars {
            for r in pts {
                let x = sx(r.mu_norm);
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{colour}"/>"#,
                    sy(r.kl_risk - r.std_err.abs()),
                    sy(r.kl_risk + r.std_err.abs())
                );
            }
        }
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/>"#,
            lx + 24.0
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{method}</text>"#, lx + 30.0, ly + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn decimals(lo: f64, hi: f64) -> usize {
    let span = hi - lo;
    if span >= 5.0 {
        0
    } else {
        (1.0 - (span / 5.0).log10().floor()).clamp(1.0, 6.0) as usize
    }
}
