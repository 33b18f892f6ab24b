//! Text formats for results: CSV tables and minimal SVG line plots.
//!
//! Every writer takes a list of header comments that are emitted first as
//! `# ...` lines; the CSV readers skip such lines.

use std::fmt::Write as _;

use crate::dataops::{LifetimeHistogram, ShotTrace, TraceMeta};
use crate::error::{Error, Result};
use crate::fit::ObservedPoint;
use crate::qps::CouplingRow;
use crate::sweep::ResonanceCurve;

fn start(header: &[String], columns: &str) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    out.push_str(columns);
    out.push('\n');
    out
}

pub fn curve_csv(curve: &ResonanceCurve, header: &[String]) -> String {
    let mut out = start(header, "flux_phi0,f_bare_ghz,f_hyb_ghz,well_index,jumped");
    for p in &curve.points {
        let hyb = p.f_hybridized.map(|f| f.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.flux, p.f_bare, hyb, p.well_index, p.jumped as u8
        );
    }
    out
}

pub fn landscape_csv(grid: &[(f64, f64, f64)], header: &[String]) -> String {
    let mut out = start(header, "coord1,coord2,energy_ghz");
    for (a, b, e) in grid {
        let _ = writeln!(out, "{a},{b},{e}");
    }
    out
}

pub fn couplings_csv(rows: &[CouplingRow], header: &[String]) -> String {
    let mut out = start(header, "level_index,coupling_ghz,resonant_flag");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.level_index, r.coupling_ghz, r.resonant as u8);
    }
    out
}

/// Rows of `(flux, eigenvalues)`.
pub fn spectrum_csv(rows: &[(f64, Vec<f64>)], header: &[String]) -> String {
    let mut out = start(header, "flux_phi0,level,energy_ghz");
    for (flux, levels) in rows {
        for (j, e) in levels.iter().enumerate() {
            let _ = writeln!(out, "{flux},{j},{e}");
        }
    }
    out
}

/// Differences for transitions `1..=deltas.len()`.
pub fn comparison_csv(deltas: &[f64], header: &[String]) -> String {
    let mut out = start(header, "level,delta_ghz");
    for (j, d) in deltas.iter().enumerate() {
        let _ = writeln!(out, "{},{d}", j + 1);
    }
    out
}

pub fn histogram_csv(h: &LifetimeHistogram, header: &[String]) -> String {
    let mut out = start(header, "bin_lo_s,bin_hi_s,count");
    for (k, c) in h.counts.iter().enumerate() {
        let _ = writeln!(out, "{},{},{c}", h.edges[k], h.edges[k + 1]);
    }
    let _ = writeln!(out, "censored,{},{}", h.censored, h.censored_fraction());
    out
}

pub fn trace_csv(trace: &ShotTrace, header: &[String]) -> String {
    let mut out = start(header, "time_s,s21_mag");
    for (t, s) in trace.time.iter().zip(&trace.s21) {
        let _ = writeln!(out, "{t},{s}");
    }
    out
}

/// Rows of `(phi, e0, chi, energy, current, curvature)`.
pub fn cpr_csv(rows: &[[f64; 6]], header: &[String]) -> String {
    let mut out = start(
        header,
        "phi_rad,e0_ghz,chi,energy_ghz,current_ghz_per_rad,curvature_ghz",
    );
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", r[0], r[1], r[2], r[3], r[4], r[5]);
    }
    out
}

/// Non-comment lines split on commas, with the header row separated.
fn table(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let head = lines
        .next()
        .ok_or_else(|| Error::Config("CSV has no header row".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|s| s.trim().to_string()).collect())
        .collect();
    Ok((head, rows))
}

fn column(head: &[String], names: &[&str]) -> Result<usize> {
    names
        .iter()
        .find_map(|n| head.iter().position(|h| h == n))
        .ok_or_else(|| Error::Config(format!("CSV lacks a column named {}", names.join(" or "))))
}

fn number(s: &str, line: usize) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Config(format!("CSV row {line}: `{s}` is not a number")))
}

pub fn parse_trace_csv(text: &str) -> Result<ShotTrace> {
    let (head, rows) = table(text)?;
    let (ti, si) = (column(&head, &["time_s"])?, column(&head, &["s21_mag"])?);
    let mut time = Vec::with_capacity(rows.len());
    let mut s21 = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let get = |c: usize| {
            r.get(c)
                .ok_or_else(|| Error::Config(format!("CSV row {}: too few fields", i + 1)))
        };
        time.push(number(get(ti)?, i + 1)?);
        s21.push(number(get(si)?, i + 1)?);
    }
    Ok(ShotTrace {
        time,
        s21,
        meta: TraceMeta::default(),
    })
}

/// Observed resonance data: a `flux_phi0` column and one of `f_ghz`,
/// `f_hyb_ghz` or `f_bare_ghz`. Rows with an empty frequency are skipped.
pub fn parse_observed_csv(text: &str) -> Result<Vec<ObservedPoint>> {
    let (head, rows) = table(text)?;
    let fi = column(&head, &["flux_phi0"])?;
    let vi = column(&head, &["f_ghz", "f_hyb_ghz", "f_bare_ghz"])?;
    let mut out = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        match (r.get(fi), r.get(vi)) {
            (Some(f), Some(v)) if !v.is_empty() => out.push(ObservedPoint {
                flux: number(f, i + 1)?,
                f: number(v, i + 1)?,
            }),
            (Some(_), _) => {}
            _ => return Err(Error::Config(format!("CSV row {}: too few fields", i + 1))),
        }
    }
    Ok(out)
}

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
    /// Draw markers instead of a line.
    pub markers: bool,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

/// Line plot; non-finite points break the line.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], header: &[String]) -> String {
    let (w, h) = (720.0, 480.0);
    let (l, r, t, b) = (80.0, 20.0, 40.0, 60.0);
    let finite = series
        .iter()
        .flat_map(|s| s.points.iter())
        .filter(|p| p.0.is_finite() && p.1.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let sy = |y: f64| h - b - (y - y0) / (y1 - y0) * (h - t - b);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    for line in header {
        let _ = writeln!(out, "<!-- {} -->", line.replace("--", "- -"));
    }
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - l - r,
        h - t - b
    );
    for x in ticks(x0, x1) {
        let px = sx(x);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="black"/>"#,
            h - b,
            h - b + 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#,
            h - b + 18.0,
            fmt_tick(x)
        );
    }
    for y in ticks(y0, y1) {
        let py = sy(y);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/>"#,
            l - 5.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            l - 8.0,
            py + 4.0,
            fmt_tick(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (l + w - r) / 2.0,
        h - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        (t + h - b) / 2.0,
        escape(y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if s.markers {
            for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#,
                    sx(x),
                    sy(y)
                );
            }
        } else {
            let mut d = String::new();
            let mut pen_down = false;
            for &(x, y) in &s.points {
                if !(x.is_finite() && y.is_finite()) {
                    pen_down = false;
                    continue;
                }
                let _ = write!(d, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, sx(x), sy(y));
                pen_down = true;
            }
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                d.trim_end()
            );
        }
        let ly = t + 16.0 + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="12" height="3" fill="{color}"/>"#,
            w - r - 150.0,
            ly - 4.0
        );
        let _ = writeln!(out, r#"<text x="{}" y="{ly}">{}</text>"#, w - r - 132.0, escape(s.name));
    }
    out.push_str("</svg>\n");
    out
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.6}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataops::{lifetime_histogram, Binning, LifetimeSample};

    #[test]
    fn trace_round_trip() {
        let tr = ShotTrace {
            time: vec![0.0, 0.5, 1.0],
            s21: vec![0.2, 0.21, 0.95],
            meta: TraceMeta::default(),
        };
        let text = trace_csv(&tr, &["config_sha256=abc".into()]);
        assert!(text.starts_with("# config_sha256=abc\ntime_s,s21_mag\n"));
        assert_eq!(parse_trace_csv(&text).unwrap(), tr);
    }

    #[test]
    fn histogram_footer() {
        let s = [
            LifetimeSample {
                duration: 1.0,
                censored: false,
            },
            LifetimeSample {
                duration: 4.0,
                censored: true,
            },
        ];
        let h = lifetime_histogram(
            &s,
            &Binning::Linear {
                count: 2,
                max: Some(4.0),
            },
        )
        .unwrap();
        let text = histogram_csv(&h, &[]);
        assert_eq!(text, "bin_lo_s,bin_hi_s,count\n0,2,1\n2,4,0\ncensored,1,0.5\n");
    }

    #[test]
    fn observed_accepts_curve_export() {
        let text = "# x\nflux_phi0,f_bare_ghz,f_hyb_ghz,well_index,jumped\n0.1,11,6.7,0,0\n0.2,11,,0,0\n";
        let pts = parse_observed_csv(text).unwrap();
        assert_eq!(pts, vec![ObservedPoint { flux: 0.1, f: 6.7 }]);
    }

    #[test]
    fn bad_number_reports_row() {
        let err = parse_trace_csv("time_s,s21_mag\n0,1\nx,2\n").unwrap_err();
        assert!(err.to_string().contains("row 2"));
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let s = svg_plot(
            "t",
            "x",
            "y",
            &[Series {
                name: "a<b",
                points: vec![(0.0, 1.0), (f64::NAN, 0.0), (1.0, 2.0)],
                markers: false,
            }],
            &["config_sha256=abc".into()],
        );
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a&lt;b") && s.contains("<!-- config_sha256=abc -->"));
        assert_eq!(s.matches('M').count(), 2);
    }
}
