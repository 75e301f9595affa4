use std::collections::BTreeMap;
use std::fmt::Write;

use super::scaling::{median, series_name};
use super::{BenchError, BenchRecord};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Median wall time against qubit count, log-scaled y axis, one polyline
/// per (workload, precision, workers) series. Output depends only on the
/// records.
pub fn emit_chart(records: &[BenchRecord]) -> Result<String, BenchError> {
    if records.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    let mut series: BTreeMap<String, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in records {
        series
            .entry(series_name(r.workload, r.precision, r.workers))
            .or_default()
            .entry(r.n_qubits)
            .or_default()
            .push(r.wall_ms);
    }
    let points: Vec<(String, Vec<(usize, f64)>)> = series
        .into_iter()
        .map(|(k, by_n)| (k, by_n.into_iter().map(|(n, ts)| (n, median(&ts).max(1e-6))).collect()))
        .collect();

    let all = points.iter().flat_map(|(_, p)| p.iter());
    let (mut nmin, mut nmax) = (usize::MAX, 0);
    let (mut lmin, mut lmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(n, t) in all {
        nmin = nmin.min(n);
        nmax = nmax.max(n);
        lmin = lmin.min(t.log10());
        lmax = lmax.max(t.log10());
    }
    let (x0, x1) = if nmin == nmax { (nmin as f64 - 1.0, nmax as f64 + 1.0) } else { (nmin as f64, nmax as f64) };
    let (mut y0, mut y1) = (lmin.floor(), lmax.ceil());
    if y0 == y1 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |n: f64| LEFT + (n - x0) / (x1 - x0) * pw;
    let sy = |l: f64| TOP + (y1 - l) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for d in y0 as i64..=y1 as i64 {
        let y = sy(d as f64);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let step = ((x1 - x0) / 10.0).ceil().max(1.0) as usize;
    let mut n = x0.ceil() as usize;
    while n as f64 <= x1 {
        let x = sx(n as f64);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{n}</text>"#, TOP + ph + 18.0);
        n += step;
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">qubits</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">median wall time (ms)</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (i, (name, pts)) in points.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> =
            pts.iter().map(|&(n, t)| format!("{:.2},{:.2}", sx(n as f64), sy(t.log10()))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-series="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            escape(name),
            coords.join(" ")
        );
        for c in &coords {
            let (cx, cy) = c.split_once(',').expect("formatted above");
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text class="legend" x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}
