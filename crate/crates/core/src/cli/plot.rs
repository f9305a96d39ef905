//! Shifted rank-frequency plot data: CSV and a minimal SVG rendering.

use std::fmt::Write as _;

use crate::corpus::FrequencyTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotRow {
    pub k: u64,
    pub f: u64,
    /// `ln(k + t)`
    pub x: f64,
    /// `ln F_k`
    pub y: f64,
    pub y_fit: f64,
}

/// Rows of the log-log plot with the rank axis shifted by `t`, and the line
/// of slope `-γ` whose intercept minimizes the squared error in `y`.
pub fn plot_rows(table: &FrequencyTable, gamma: f64, t: f64) -> Vec<PlotRow> {
    let mut rows: Vec<PlotRow> = table
        .freqs()
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let k = i as u64 + 1;
            PlotRow { k, f, x: (k as f64 + t).ln(), y: (f as f64).ln(), y_fit: 0.0 }
        })
        .collect();
    let intercept = rows.iter().map(|r| r.y + gamma * r.x).sum::<f64>() / rows.len() as f64;
    for r in &mut rows {
        r.y_fit = intercept - gamma * r.x;
    }
    rows
}

pub fn to_csv(rows: &[PlotRow]) -> String {
    let mut out = String::from("k,f,x,y,y_fit\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.k, r.f, r.x, r.y, r.y_fit).unwrap();
    }
    out
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;

/// Scatter of `(x, y)` with the fitted line, axes labelled by their ranges.
pub fn to_svg(rows: &[PlotRow], gamma: f64, t: f64) -> String {
    let xs = rows.iter().map(|r| r.x);
    let ys = rows.iter().flat_map(|r| [r.y, r.y_fit]);
    let (x_lo, x_hi) = padded_range(xs);
    let (y_lo, y_hi) = padded_range(ys);
    let px = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    writeln!(svg, r#"<path d="M{left} {top}V{bottom}H{right}" fill="none" stroke="black"/>"#).unwrap();
    writeln!(svg, r#"<text x="{left}" y="{}" font-size="12">{x_lo:.2}</text>"#, bottom + 18.0).unwrap();
    writeln!(svg, r#"<text x="{right}" y="{}" font-size="12" text-anchor="end">{x_hi:.2}</text>"#, bottom + 18.0).unwrap();
    writeln!(svg, r#"<text x="{}" y="{bottom}" font-size="12" text-anchor="end">{y_lo:.2}</text>"#, left - 6.0).unwrap();
    writeln!(svg, r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{y_hi:.2}</text>"#, left - 6.0, top + 12.0)
        .unwrap();
    writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">ln(k + {t}) vs ln F_k, slope -{gamma}</text>"#,
        WIDTH / 2.0,
        top - 16.0
    )
    .unwrap();
    for r in rows {
        writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="steelblue"/>"#, px(r.x), py(r.y)).unwrap();
    }
    if let (Some(first), Some(last)) = (rows.first(), rows.last()) {
        writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="1.5"/>"#,
            px(first.x),
            py(first.y_fit),
            px(last.x),
            py(last.y_fit)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(0.5);
    (lo - pad, hi + pad)
}
