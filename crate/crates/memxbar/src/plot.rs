//! Minimal SVG line plots of sweep CSVs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use crate::error::{HarnessError, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Mean and min/max of the `value` column per x position.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub x: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Groups rows by `series` (if any) and `x`, dropping NaN values.
pub fn aggregate<R: Read>(reader: R, x_col: &str, series_col: Option<&str>) -> Result<BTreeMap<String, Vec<SeriesPoint>>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::input(format!("column `{name}` not found")))
    };
    let xi = find(x_col)?;
    let vi = find("value")?;
    let si = series_col.map(find).transpose()?;

    let mut groups: BTreeMap<String, BTreeMap<u64, (f64, Vec<f64>)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let x: f64 = rec[xi]
            .parse()
            .map_err(|_| HarnessError::input(format!("x value `{}` is not numeric", &rec[xi])))?;
        let v: f64 = rec[vi].parse().unwrap_or(f64::NAN);
        let series = si.map_or_else(String::new, |i| rec[i].to_string());
        let entry = groups.entry(series).or_default().entry(x.to_bits()).or_insert((x, Vec::new()));
        if v.is_finite() {
            entry.1.push(v);
        }
    }
    let mut out = BTreeMap::new();
    for (name, pts) in groups {
        let mut points: Vec<SeriesPoint> = pts
            .into_values()
            .filter(|(_, vs)| !vs.is_empty())
            .map(|(x, vs)| SeriesPoint {
                x,
                mean: vs.iter().sum::<f64>() / vs.len() as f64,
                min: vs.iter().copied().fold(f64::INFINITY, f64::min),
                max: vs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
            .collect();
        points.sort_by(|a, b| a.x.total_cmp(&b.x));
        if !points.is_empty() {
            out.insert(name, points);
        }
    }
    Ok(out)
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders one polyline per series with a min–max band.
pub fn render_svg(data: &BTreeMap<String, Vec<SeriesPoint>>, x_label: &str, series_label: Option<&str>) -> Result<String> {
    let all: Vec<&SeriesPoint> = data.values().flatten().collect();
    if all.is_empty() {
        return Err(HarnessError::input("nothing to plot: no finite values"));
    }
    let (x0, x1) = span(
        all.iter().map(|p| p.x).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max),
    );
    let (y0, y1) = span(
        all.iter().map(|p| p.min).fold(f64::INFINITY, f64::min),
        all.iter().map(|p| p.max).fold(f64::NEG_INFINITY, f64::max),
    );
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    // SVG y grows downward.
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#);
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#, px(fx), b + 16.0, fmt_tick(fx));
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#, l - 6.0, py(fy) + 4.0, fmt_tick(fy));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 12.0, esc(x_label));
    let _ = writeln!(s, r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">value (mean, min-max band)</text>"#, HEIGHT / 2.0, HEIGHT / 2.0);

    for (k, (name, pts)) in data.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if pts.len() > 1 {
            let upper = pts.iter().map(|p| format!("{:.2},{:.2}", px(p.x), py(p.max)));
            let lower = pts.iter().rev().map(|p| format!("{:.2},{:.2}", px(p.x), py(p.min)));
            let band: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#, band.join(" "));
            let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", px(p.x), py(p.mean))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        }
        for p in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(p.x), py(p.mean));
        }
        if let Some(label) = series_label {
            let ly = t + 14.0 * k as f64;
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" fill="{color}">{} = {}</text>"#, r - 120.0, ly, esc(label), esc(name));
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{:.3}", v)
    }
}

pub fn plot_csv(csv_path: &Path, x_col: &str, series_col: Option<&str>, out: &Path) -> Result<()> {
    let f = std::fs::File::open(csv_path)
        .map_err(|e| HarnessError::input(format!("cannot open {}: {e}", csv_path.display())))?;
    let data = aggregate(f, x_col, series_col)?;
    std::fs::write(out, render_svg(&data, x_col, series_col)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_marker() {
        let data = aggregate("x,value\n1,0.5\n".as_bytes(), "x", None).unwrap();
        let svg = render_svg(&data, "x", None).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(!svg.contains("<polyline"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn aggregates_repeats() {
        let csv = "x,s,value\n1,a,0.2\n1,a,0.4\n2,a,NaN\n2,a,0.9\n1,b,0.1\n";
        let data = aggregate(csv.as_bytes(), "x", Some("s")).unwrap();
        let a = &data["a"];
        assert_eq!(a.len(), 2);
        assert!((a[0].mean - 0.3).abs() < 1e-12);
        assert_eq!((a[0].min, a[0].max), (0.2, 0.4));
        assert_eq!(a[1].mean, 0.9);
        assert_eq!(data["b"].len(), 1);
    }

    #[test]
    fn missing_column() {
        assert!(aggregate("x,value\n1,2\n".as_bytes(), "y", None).is_err());
        assert!(aggregate("x,v\n1,2\n".as_bytes(), "x", None).is_err());
    }
}
