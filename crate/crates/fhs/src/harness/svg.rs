//! Static SVG line plots: posterior mean (solid), credible band
//! (dashed), truth (when known). No display dependencies; the files are
//! plain polylines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

pub struct Series<'a> {
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub color: &'a str,
    pub dashed: bool,
    pub label: &'a str,
}

pub struct Band<'a> {
    pub xs: &'a [f64],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub color: &'a str,
}

const W: f64 = 800.0;
const H: f64 = 500.0;
const MARGIN: f64 = 55.0;

pub fn write_line_plot(
    path: &Path,
    title: &str,
    series: &[Series<'_>],
    band: Option<&Band<'_>>,
) -> Result<()> {
    let mut xs_min = f64::INFINITY;
    let mut xs_max = f64::NEG_INFINITY;
    let mut ys_min = f64::INFINITY;
    let mut ys_max = f64::NEG_INFINITY;
    for s in series {
        for &x in s.xs {
            xs_min = xs_min.min(x);
            xs_max = xs_max.max(x);
        }
        for &y in s.ys {
            ys_min = ys_min.min(y);
            ys_max = ys_max.max(y);
        }
    }
    if let Some(b) = band {
        for &y in b.lower.iter().chain(b.upper.iter()) {
            ys_min = ys_min.min(y);
            ys_max = ys_max.max(y);
        }
    }
    if !(xs_max > xs_min) {
        xs_max = xs_min + 1.0;
    }
    if !(ys_max > ys_min) {
        ys_max = ys_min + 1.0;
    }
    let pad = 0.05 * (ys_max - ys_min);
    ys_min -= pad;
    ys_max += pad;

    let sx = |x: f64| MARGIN + (x - xs_min) / (xs_max - xs_min) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - ys_min) / (ys_max - ys_min) * (H - 2.0 * MARGIN);
    let points = |xs: &[f64], ys: &[f64]| -> String {
        xs.iter()
            .zip(ys.iter())
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )
    .expect("string write");
    writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#).expect("string write");
    writeln!(
        svg,
        r#"<text x="{:.1}" y="25" font-size="16" text-anchor="middle" font-family="sans-serif">{}</text>"#,
        W / 2.0,
        title
    )
    .expect("string write");
    // axes
    writeln!(
        svg,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN,
        t = MARGIN
    )
    .expect("string write");
    for i in 0..=4 {
        let fx = xs_min + (xs_max - xs_min) * i as f64 / 4.0;
        let fy = ys_min + (ys_max - ys_min) * i as f64 / 4.0;
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" font-family="sans-serif">{:.3}</text>"#,
            sx(fx),
            H - MARGIN + 18.0,
            fx
        )
        .expect("string write");
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end" font-family="sans-serif">{:.3}</text>"#,
            MARGIN - 6.0,
            sy(fy) + 4.0,
            fy
        )
        .expect("string write");
    }
    if let Some(b) = band {
        for ys in [b.lower, b.upper] {
            writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.2" stroke-dasharray="6 4"/>"#,
                points(b.xs, ys),
                b.color
            )
            .expect("string write");
        }
    }
    for (i, s) in series.iter().enumerate() {
        let dash = if s.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.8"{dash}/>"#,
            points(s.xs, s.ys),
            s.color
        )
        .expect("string write");
        writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" fill="{}" font-family="sans-serif">{}</text>"#,
            W - MARGIN - 150.0,
            MARGIN + 16.0 * (i as f64 + 1.0),
            s.color,
            s.label
        )
        .expect("string write");
    }
    writeln!(svg, "</svg>").expect("string write");
    fs::write(path, svg)?;
    Ok(())
}
