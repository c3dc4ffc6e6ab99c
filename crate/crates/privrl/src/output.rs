//! CSV result tables and SVG line plots.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{io_err, Error, Result};
use crate::sweep::ResultRow;

pub const CSV_HEADER: [&str; 8] = ["alg", "env", "H", "K", "rho", "seed", "subopt", "runtime_ms"];

/// Formats like C's `%g`: six significant digits, trailing zeros dropped,
/// scientific notation outside `[1e-4, 1e6)`.
pub fn format_g(x: f64) -> String {
    const PREC: i32 = 6;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // exponent after rounding to PREC digits
    let sci = format!("{:.*e}", (PREC - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PREC).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PREC - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn format_rho(rho: Option<f64>) -> String {
    rho.map_or_else(|| "inf".into(), format_g)
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.alg.clone(),
            r.env.clone(),
            r.horizon.to_string(),
            r.episodes.to_string(),
            format_rho(r.rho),
            r.seed.to_string(),
            format_g(r.subopt),
            format_g(r.runtime_ms),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

pub fn write_csv_file(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    write_csv(rows, std::io::BufWriter::new(file))
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Format(format!("row has no column {}", CSV_HEADER[i])))?;
    raw.parse().map_err(|_| Error::Format(format!("bad {} value {raw:?}", CSV_HEADER[i])))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>())));
    }
    reader
        .records()
        .map(|rec| {
            let rec = rec?;
            let rho: f64 = parse_field(&rec, 4)?;
            Ok(ResultRow {
                alg: parse_field(&rec, 0)?,
                env: parse_field(&rec, 1)?,
                horizon: parse_field(&rec, 2)?,
                episodes: parse_field(&rec, 3)?,
                rho: rho.is_finite().then_some(rho),
                seed: parse_field(&rec, 5)?,
                subopt: parse_field(&rec, 6)?,
                runtime_ms: parse_field(&rec, 7)?,
            })
        })
        .collect()
}

pub fn read_csv_file(path: &Path) -> Result<Vec<ResultRow>> {
    read_csv(fs::File::open(path).map_err(io_err(path))?)
}

/// One plotted line: mean suboptimality against K for an (alg, rho) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub alg: String,
    pub rho: Option<f64>,
    pub points: Vec<(usize, f64)>,
}

impl Series {
    pub fn label(&self) -> String {
        match self.rho {
            Some(r) => format!("{} (rho={})", self.alg, format_g(r)),
            None => self.alg.clone(),
        }
    }
}

/// Groups rows by (alg, rho) in order of first appearance and averages the
/// finite scores at each K.
pub fn series(rows: &[ResultRow]) -> Vec<Series> {
    let mut keys: Vec<(String, Option<f64>)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|(a, rho)| *a == r.alg && *rho == r.rho) {
            keys.push((r.alg.clone(), r.rho));
        }
    }
    keys.into_iter()
        .map(|(alg, rho)| {
            let mut ks: Vec<usize> = rows.iter().filter(|r| r.alg == alg && r.rho == rho).map(|r| r.episodes).collect();
            ks.sort_unstable();
            ks.dedup();
            let points = ks
                .into_iter()
                .filter_map(|k| crate::sweep::mean_subopt(rows, &alg, rho, k).map(|m| (k, m)))
                .collect();
            Series { alg, rho, points }
        })
        .collect()
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line plot of mean suboptimality versus K, one polyline per series. The
/// K axis is logarithmic when the grid spans more than a decade.
pub fn svg_plot(rows: &[ResultRow], title: &str) -> Result<String> {
    let all = series(rows);
    let pts: Vec<(usize, f64)> = all.iter().flat_map(|s| s.points.iter().copied()).collect();
    if pts.is_empty() {
        return Err(Error::Format("no finite results to plot".into()));
    }
    let (w, h) = (720.0, 480.0);
    let (left, right, top, bottom) = (70.0, 200.0, 40.0, 60.0);
    let kmin = pts.iter().map(|p| p.0).min().unwrap_or(1) as f64;
    let kmax = pts.iter().map(|p| p.0).max().unwrap_or(1) as f64;
    let log_x = kmin > 0.0 && kmax / kmin > 10.0;
    let tx = |k: f64| if log_x { k.ln() } else { k };
    let (x0, x1) = (tx(kmin), tx(kmax));
    let ymax = pts.iter().map(|p| p.1).fold(0.0f64, f64::max).max(1e-12);
    let ymin = pts.iter().map(|p| p.1).fold(0.0f64, f64::min);
    let sx = |k: usize| {
        let span = if x1 > x0 { x1 - x0 } else { 1.0 };
        left + (tx(k as f64) - x0) / span * (w - left - right)
    };
    let sy = |v: f64| top + (ymax - v) / (ymax - ymin) * (h - top - bottom);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, (w - right + left) / 2.0, escape(title));
    let (ax0, ay0, ax1, ay1) = (left, h - bottom, w - right, top);
    let _ = writeln!(s, r#"<line x1="{ax0}" y1="{ay0}" x2="{ax1}" y2="{ay0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{ax0}" y1="{ay0}" x2="{ax0}" y2="{ay1}" stroke="black"/>"#);
    let mut ks: Vec<usize> = pts.iter().map(|p| p.0).collect();
    ks.sort_unstable();
    ks.dedup();
    for k in &ks {
        let x = sx(*k);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle" font-size="11">{k}</text>"#, ay0 + 16.0);
    }
    for i in 0..=4 {
        let v = ymin + (ymax - ymin) * i as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(s, r#"<text x="{}" y="{y:.2}" text-anchor="end" font-size="11">{}</text>"#, ax0 - 6.0, format_g((v * 1e3).round() / 1e3));
    }
    let xlabel = if log_x { "episodes K (log scale)" } else { "episodes K" };
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{xlabel}</text>"#, (ax0 + ax1) / 2.0, h - 16.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 18 {})">suboptimality v* - v^pi</text>"#,
        (ay0 + ay1) / 2.0,
        (ay0 + ay1) / 2.0
    );
    for (i, ser) in all.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = ser.points.iter().map(|&(k, v)| format!("{:.2},{:.2}", sx(k), sy(v))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, coords.join(" "));
        let ly = top + 18.0 * i as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly:.2}" font-size="12" fill="{color}">{}</text>"#, w - right + 12.0, escape(&ser.label()));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_svg_file(rows: &[ResultRow], title: &str, path: &Path) -> Result<()> {
    fs::write(path, svg_plot(rows, title)?).map_err(io_err(path))
}
