//! File formats: spectrum CSV, SVG and ASCII plots, run summaries.
//!
//! Numbers are written with Rust's shortest round-trip formatting, which is
//! locale independent and byte-stable across runs.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::acquire::{Provenance, Spectrum};
use crate::error::{Error, Result};
use crate::pipeline::Summary;

pub const CSV_HEADER: &str = "freq_hz,real,imag";

/// `freq_hz,real,imag`, ascending in frequency.
pub fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut rows: Vec<(f64, Complex64)> = spectrum
        .freqs
        .iter()
        .copied()
        .zip(spectrum.values.iter().copied())
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = String::with_capacity(rows.len() * 48);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (f, z) in rows {
        // Normalise -0 so identical spectra print identically.
        let clean = |x: f64| if x == 0.0 { 0.0 } else { x };
        let _ = writeln!(out, "{},{},{}", clean(f), clean(z.re), clean(z.im));
    }
    out
}

pub fn parse_spectrum_csv(text: &str) -> Result<Spectrum> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        Some((i, h)) => {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("expected header {CSV_HEADER:?}, got {:?}", h.trim()),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty spectrum file".into(),
            })
        }
    }
    let mut freqs = Vec::new();
    let mut values = Vec::new();
    for (i, l) in lines {
        let cols: Vec<&str> = l.split(',').map(str::trim).collect();
        let bad = || Error::Parse {
            line: i + 1,
            msg: format!("expected three numbers, got {l:?}"),
        };
        if cols.len() != 3 {
            return Err(bad());
        }
        let nums = cols
            .iter()
            .map(|c| c.parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        if let Some(&prev) = freqs.last() {
            if nums[0] <= prev {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "frequencies must be strictly ascending".into(),
                });
            }
        }
        freqs.push(nums[0]);
        values.push(Complex64::new(nums[1], nums[2]));
    }
    if freqs.is_empty() {
        return Err(Error::Parse {
            line: 2,
            msg: "no data rows".into(),
        });
    }
    Ok(Spectrum {
        freqs,
        values,
        provenance: Provenance::Dft,
    })
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 360.0;
const MARGIN: f64 = 48.0;

fn nice_step(span: f64) -> f64 {
    let raw = span / 8.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

/// Real part as a polyline; frequency decreases from left to right.
pub fn spectrum_svg(spectrum: &Spectrum, title: &str) -> Result<String> {
    if spectrum.is_empty() {
        return Err(Error::Invalid("cannot plot an empty spectrum".into()));
    }
    let re = spectrum.real();
    let fmax = spectrum.freqs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fmin = spectrum.freqs.iter().copied().fold(f64::INFINITY, f64::min);
    let span = (fmax - fmin).max(f64::MIN_POSITIVE);
    let ymax = spectrum.max_abs_real().max(f64::MIN_POSITIVE) * 1.1;
    let pw = SVG_W - 2.0 * MARGIN;
    let ph = SVG_H - 2.0 * MARGIN;
    let x = |f: f64| MARGIN + (fmax - f) / span * pw;
    let y = |v: f64| MARGIN + (1.0 - (v / ymax + 1.0) / 2.0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        SVG_W / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        s,
        r##"<line x1="{MARGIN}" y1="{0:.2}" x2="{1}" y2="{0:.2}" stroke="#999" stroke-width="1"/>"##,
        y(0.0),
        SVG_W - MARGIN
    );
    let step = nice_step(span);
    let mut tick = (fmin / step).ceil() * step;
    while tick <= fmax + 1e-9 * step {
        let tx = x(tick);
        let label = if tick.abs() < 1e-9 * step { 0.0 } else { tick };
        let _ = writeln!(
            s,
            r##"<line x1="{tx:.2}" y1="{0}" x2="{tx:.2}" y2="{1}" stroke="#333"/><text x="{tx:.2}" y="{2}" font-family="sans-serif" font-size="11" text-anchor="middle">{label}</text>"##,
            SVG_H - MARGIN,
            SVG_H - MARGIN + 5.0,
            SVG_H - MARGIN + 18.0,
        );
        tick += step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">frequency (Hz)</text>"#,
        SVG_W / 2.0,
        SVG_H - 8.0
    );
    s.push_str(r##"<polyline fill="none" stroke="#1f4e9c" stroke-width="1.2" points=""##);
    for (f, v) in spectrum.freqs.iter().zip(&re) {
        let _ = write!(s, "{:.2},{:.2} ", x(*f), y(*v));
    }
    s.push_str("\"/>\n</svg>\n");
    Ok(s)
}

fn xml_escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Two-row text sketch of the real part: lobes above the axis in the top
/// row, below it in the bottom row. Frequency descends left to right.
pub fn ascii_plot(spectrum: &Spectrum, width: usize) -> String {
    const LEVELS: [char; 8] = ['▁', '▂', '▃', '▄', '▅', '▆', '▇', '█'];
    let width = width.max(8);
    let re = spectrum.real();
    let peak = spectrum.max_abs_real();
    let n = re.len();
    let mut up = String::new();
    let mut down = String::new();
    for c in 0..width {
        // Column c covers samples in descending-frequency order.
        let lo = c * n / width;
        let hi = ((c + 1) * n / width).max(lo + 1).min(n);
        let (mut best, mut worst) = (0.0f64, 0.0f64);
        for i in lo..hi {
            let v = re[n - 1 - i];
            best = best.max(v);
            worst = worst.min(v);
        }
        let glyph = |v: f64| {
            if peak == 0.0 || v / peak < 0.05 {
                ' '
            } else {
                LEVELS[((v / peak) * 7.0).round().clamp(0.0, 7.0) as usize]
            }
        };
        up.push(glyph(best));
        down.push(glyph(-worst));
    }
    let fmax = spectrum.freqs.last().copied().unwrap_or(0.0);
    let fmin = spectrum.freqs.first().copied().unwrap_or(0.0);
    format!(
        "+ {}\n- {}\n  {fmax} Hz{}{fmin} Hz\n",
        up.trim_end(),
        down.trim_end(),
        " ".repeat(width.saturating_sub(format!("{fmax} Hz{fmin} Hz").len()))
    )
}

pub fn summary_text(s: &Summary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "register spins: {}", s.spins);
    let _ = writeln!(out, "engine: {}", s.engine);
    let _ = writeln!(out, "backend: {}", s.backend);
    let _ = writeln!(
        out,
        "acquisition: {} points, dwell {} s, reference {} Hz",
        s.points, s.dwell_s, s.reference_hz
    );
    let _ = writeln!(out, "oracle applications: {}", s.oracle_applications);
    let _ = writeln!(out, "dft vs closed form: {:.3e} of tallest peak", s.relative_deviation);
    let _ = writeln!(out, "peaks (descending frequency):");
    for p in &s.peaks {
        let item = p.item.as_deref().unwrap_or("?");
        let expect = p
            .expected_hz
            .map(|f| format!(" (line {f:.4} Hz)"))
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "  {:>10.4} Hz  {:<4} {:>12.5}  {item}{expect}",
            p.freq_hz, p.sign, p.height
        );
    }
    let _ = writeln!(out, "recovered: {}", s.recovered);
    let _ = writeln!(out, "unmarked: {}", s.unmarked);
    if !s.unseen.is_empty() {
        let _ = writeln!(out, "unseen: {}", s.unseen.join(","));
    }
    if let Some(e) = &s.expected {
        let verdict = if s.matches == Some(true) { "match" } else { "MISMATCH" };
        let _ = writeln!(out, "expected: {e} ({verdict})");
    }
    if !s.defaults.is_empty() {
        let _ = writeln!(out, "defaults:");
        for d in &s.defaults {
            let _ = writeln!(out, "  {d}");
        }
    }
    out
}

pub fn summary_json(s: &Summary) -> String {
    let mut text = serde_json::to_string_pretty(s).expect("summary serializes");
    text.push('\n');
    text
}
