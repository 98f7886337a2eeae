//! Static SVG rendering for signal panels and boxplots.
//!
//! Each panel is scaled to its own data range with 5% padding. Element
//! counts are part of the output contract: one `<polyline>` per drawn
//! signal, one `<rect class="box">` per box.

use std::fmt::Write as _;

use dbcsp_core::{Error, Result};

const WIDTH: f64 = 800.0;
const PANEL_HEIGHT: f64 = 300.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Parses `a:b`, comma lists, or a single index (1-based).
pub fn parse_vectors(s: &str) -> Result<Vec<usize>> {
    let bad = || {
        Error::InvalidArgument(format!(
            "cannot parse vectors '{s}', expected e.g. 1:2 or 1,3"
        ))
    };
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once(':') {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Resolves 1-based vector selectors against `2q` filter columns. With
/// `pairs`, each `a_j` brings its partner `b_j` (column `q + j`) and vice
/// versa. Returns sorted, distinct 0-based column indices.
pub fn resolve_vectors(vectors: &[usize], q: usize, pairs: bool) -> Result<Vec<usize>> {
    let mut cols = Vec::new();
    for &v in vectors {
        if v == 0 || v > 2 * q {
            return Err(Error::InvalidArgument(format!(
                "vector {v} is out of range: use 1..={q} for a_1..a_{q} and {}..={} for b_1..b_{q}",
                q + 1,
                2 * q
            )));
        }
        cols.push(v - 1);
        if pairs {
            cols.push(if v <= q { v - 1 + q } else { v - 1 - q });
        }
    }
    cols.sort_unstable();
    cols.dedup();
    Ok(cols)
}

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Range {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        if !lo.is_finite() {
            return Range { lo: 0.0, hi: 1.0 };
        }
        let span = hi - lo;
        let pad = if span > 0.0 {
            0.05 * span
        } else {
            lo.abs().max(1.0) * 0.05
        };
        Range {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn map(&self, v: f64, out_lo: f64, out_hi: f64) -> f64 {
        out_lo + (v - self.lo) / (self.hi - self.lo) * (out_hi - out_lo)
    }
}

/// One drawn signal.
pub struct Series {
    pub name: String,
    pub values: Vec<f64>,
    pub dashed: bool,
}

pub struct LinePanel {
    pub id: String,
    pub title: String,
    pub series: Vec<Series>,
    pub legend: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(out: &mut String, height: f64) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">
<rect width="100%" height="100%" fill="white"/>"#
    );
}

fn frame(out: &mut String, top: f64, title: &str, y: Range) {
    let (left, right) = (MARGIN, WIDTH - MARGIN);
    let bottom = top + PANEL_HEIGHT - MARGIN;
    let _ = writeln!(
        out,
        r#"<rect class="frame" x="{left}" y="{t}" width="{w}" height="{h}" fill="none" stroke="black"/>
<text x="{cx}" y="{ty}" text-anchor="middle" font-family="sans-serif" font-size="14">{title}</text>
<text x="{lx}" y="{t2}" text-anchor="end" font-family="sans-serif" font-size="10">{hi:.3}</text>
<text x="{lx}" y="{bottom}" text-anchor="end" font-family="sans-serif" font-size="10">{lo:.3}</text>"#,
        t = top + MARGIN / 2.0,
        w = right - left,
        h = bottom - top - MARGIN / 2.0,
        cx = WIDTH / 2.0,
        ty = top + MARGIN / 2.0 - 8.0,
        lx = left - 4.0,
        t2 = top + MARGIN / 2.0 + 10.0,
        hi = y.hi,
        lo = y.lo,
        title = escape(title),
    );
}

/// Renders line panels stacked vertically.
pub fn line_panels(panels: &[LinePanel]) -> String {
    let height = PANEL_HEIGHT * panels.len() as f64;
    let mut out = String::new();
    header(&mut out, height);
    for (p, panel) in panels.iter().enumerate() {
        let top = p as f64 * PANEL_HEIGHT;
        let y = Range::of(panel.series.iter().flat_map(|s| s.values.iter().copied()));
        let len = panel
            .series
            .iter()
            .map(|s| s.values.len())
            .max()
            .unwrap_or(1);
        let x = Range {
            lo: 0.0,
            hi: (len.max(2) - 1) as f64,
        };
        let _ = writeln!(out, r#"<g class="panel" id="{}">"#, escape(&panel.id));
        frame(&mut out, top, &panel.title, y);
        let (plot_top, plot_bottom) = (top + MARGIN / 2.0, top + PANEL_HEIGHT - MARGIN);
        for (k, s) in panel.series.iter().enumerate() {
            let points: Vec<String> = s
                .values
                .iter()
                .enumerate()
                .map(|(t, &v)| {
                    format!(
                        "{:.2},{:.2}",
                        x.map(t as f64, MARGIN, WIDTH - MARGIN),
                        y.map(v, plot_bottom, plot_top)
                    )
                })
                .collect();
            let dash = if s.dashed {
                r#" stroke-dasharray="6,4""#
            } else {
                ""
            };
            let _ = writeln!(
                out,
                r#"<polyline class="{}" data-name="{}" fill="none" stroke="{}" stroke-width="1"{dash} points="{}"/>"#,
                if s.dashed { "series dashed" } else { "series" },
                escape(&s.name),
                PALETTE[k % PALETTE.len()],
                points.join(" ")
            );
        }
        if panel.legend {
            let _ = writeln!(out, r#"<g class="legend">"#);
            for (k, s) in panel.series.iter().enumerate() {
                let ly = plot_top + 12.0 + 14.0 * k as f64;
                let lx = WIDTH - MARGIN - 70.0;
                let dash = if s.dashed {
                    r#" stroke-dasharray="6,4""#
                } else {
                    ""
                };
                let _ = writeln!(
                    out,
                    r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}"{dash}/><text x="{}" y="{}" font-family="sans-serif" font-size="10">{}</text>"#,
                    lx + 20.0,
                    PALETTE[k % PALETTE.len()],
                    lx + 25.0,
                    ly + 3.0,
                    escape(&s.name)
                );
            }
            let _ = writeln!(out, "</g>");
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}

/// Tukey summary of one group of values.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl BoxStats {
    /// Five-number summary with whiskers at the most extreme values within
    /// 1.5 IQR of the box; anything beyond is an outlier.
    pub fn from_values(values: &[f64]) -> Option<BoxStats> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q25 = quantile(&sorted, 0.25);
        let q75 = quantile(&sorted, 0.75);
        let iqr = q75 - q25;
        let (fence_lo, fence_hi) = (q25 - 1.5 * iqr, q75 + 1.5 * iqr);
        let inside = || {
            sorted
                .iter()
                .copied()
                .filter(|v| *v >= fence_lo && *v <= fence_hi)
        };
        Some(BoxStats {
            min: sorted[0],
            q25,
            median: quantile(&sorted, 0.5),
            q75,
            max: sorted[sorted.len() - 1],
            whisker_lo: inside().fold(f64::INFINITY, f64::min),
            whisker_hi: inside().fold(f64::NEG_INFINITY, f64::max),
            outliers: sorted
                .iter()
                .copied()
                .filter(|v| *v < fence_lo || *v > fence_hi)
                .collect(),
        })
    }
}

pub struct BoxGroup {
    /// Filter column name, e.g. `a1`.
    pub vector: String,
    /// Class label.
    pub class: String,
    pub class_index: usize,
    pub stats: BoxStats,
}

/// Renders one box per group, side by side, in the given order.
pub fn boxplot(title: &str, y_label: &str, groups: &[BoxGroup]) -> String {
    let mut out = String::new();
    header(&mut out, PANEL_HEIGHT + 40.0);
    let y = Range::of(groups.iter().flat_map(|g| [g.stats.min, g.stats.max]));
    frame(&mut out, 0.0, title, y);
    let (plot_top, plot_bottom) = (MARGIN / 2.0, PANEL_HEIGHT - MARGIN);
    let _ = writeln!(
        out,
        r#"<text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
        (plot_top + plot_bottom) / 2.0,
        (plot_top + plot_bottom) / 2.0,
        escape(y_label)
    );
    let slot = (WIDTH - 2.0 * MARGIN) / groups.len().max(1) as f64;
    let colors = ["#8fb8de", "#f4a582"];
    for (i, g) in groups.iter().enumerate() {
        let cx = MARGIN + slot * (i as f64 + 0.5);
        let half = (slot * 0.3).min(30.0);
        let sy = |v: f64| y.map(v, plot_bottom, plot_top);
        let s = &g.stats;
        let _ = writeln!(
            out,
            r#"<g class="group" data-vector="{v}" data-class="{c}">
<line class="whisker" x1="{cx:.2}" y1="{wl:.2}" x2="{cx:.2}" y2="{b:.2}" stroke="black"/>
<line class="whisker" x1="{cx:.2}" y1="{wh:.2}" x2="{cx:.2}" y2="{t:.2}" stroke="black"/>
<rect class="box" x="{x:.2}" y="{t:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}" stroke="black"/>
<line class="median" x1="{x:.2}" y1="{m:.2}" x2="{x2:.2}" y2="{m:.2}" stroke="black" stroke-width="2"/>
<text x="{cx:.2}" y="{ly:.2}" text-anchor="middle" font-family="sans-serif" font-size="10">{v} {c}</text>"#,
            v = escape(&g.vector),
            c = escape(&g.class),
            wl = sy(s.whisker_lo),
            wh = sy(s.whisker_hi),
            b = sy(s.q25),
            t = sy(s.q75),
            x = cx - half,
            x2 = cx + half,
            w = 2.0 * half,
            h = (sy(s.q25) - sy(s.q75)).max(0.0),
            m = sy(s.median),
            fill = colors[g.class_index % 2],
            ly = plot_bottom + 16.0,
        );
        for &o in &s.outliers {
            let _ = writeln!(
                out,
                r#"<circle class="outlier" cx="{cx:.2}" cy="{:.2}" r="2.5" fill="none" stroke="black"/>"#,
                sy(o)
            );
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_parsing() {
        assert_eq!(parse_vectors("1:3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_vectors("1, 4,16").unwrap(), vec![1, 4, 16]);
        assert_eq!(parse_vectors("2").unwrap(), vec![2]);
        assert!(parse_vectors("3:1").is_err());
        assert!(parse_vectors("x").is_err());
        assert!(parse_vectors("").is_err());
    }

    #[test]
    fn pair_resolution() {
        assert_eq!(
            resolve_vectors(&[1, 2], 15, true).unwrap(),
            vec![0, 1, 15, 16]
        );
        assert_eq!(resolve_vectors(&[16], 15, false).unwrap(), vec![15]);
        assert_eq!(resolve_vectors(&[16], 15, true).unwrap(), vec![0, 15]);
        assert_eq!(resolve_vectors(&[1, 16], 15, true).unwrap(), vec![0, 15]);
        let err = resolve_vectors(&[31], 15, true).unwrap_err();
        assert!(err.to_string().contains("16..=30"));
        assert!(resolve_vectors(&[0], 15, true).is_err());
    }

    #[test]
    fn box_stats() {
        let s = BoxStats::from_values(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((s.q25, s.median, s.q75), (2.0, 3.0, 4.0));
        assert_eq!(s.outliers, vec![100.0]);
        assert_eq!((s.whisker_lo, s.whisker_hi), (1.0, 4.0));
        let flat = BoxStats::from_values(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!((flat.min, flat.max, flat.median), (0.0, 0.0, 0.0));
        assert!(BoxStats::from_values(&[]).is_none());
    }
}
