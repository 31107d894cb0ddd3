//! Decoding the ancilla spectrum into the marked set.
//!
//! Peaks are signed extrema of the absorption (real) spectrum. Each is matched
//! to the transition-table row within a frequency tolerance; rows whose peak
//! points down are the marked items.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::acquire::Spectrum;
use crate::error::{Error, Result};
use crate::oracle::MarkedSet;
use crate::spinops::{Bits, TransitionTable};

pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.2;

/// Default assignment tolerance: a quarter of the smallest line gap.
pub fn default_tolerance(table: &TransitionTable) -> f64 {
    table.min_gap().map_or(f64::INFINITY, |(gap, _, _)| gap / 4.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Peak {
    /// Interpolated extremum position in Hz.
    pub freq_hz: f64,
    /// Signed absorption amplitude.
    pub height: f64,
    /// Grid index of the sampled extremum.
    pub index: usize,
    pub assigned: Option<Bits>,
}

impl Peak {
    pub fn is_down(&self) -> bool {
        self.height < 0.0
    }
}

/// Three-point parabolic refinement around `i`; returns (offset in bins, height).
fn parabolic(y0: f64, y1: f64, y2: f64) -> (f64, f64) {
    let denom = y0 - 2.0 * y1 + y2;
    if denom == 0.0 {
        return (0.0, y1);
    }
    let p = 0.5 * (y0 - y2) / denom;
    (p, y1 - 0.25 * (y0 - y2) * p)
}

/// Signed local extrema of the real part with `|height| ≥ threshold_fraction · max|Re|`,
/// ordered by descending frequency.
pub fn detect_peaks(spectrum: &Spectrum, threshold_fraction: f64) -> Result<Vec<Peak>> {
    if !(threshold_fraction > 0.0 && threshold_fraction < 1.0) {
        return Err(Error::Invalid(format!(
            "threshold fraction must lie in (0, 1), got {threshold_fraction}"
        )));
    }
    if spectrum.len() < 3 {
        return Err(Error::Invalid(format!(
            "spectrum has {} points, need at least 3",
            spectrum.len()
        )));
    }
    let re = spectrum.real();
    let threshold = threshold_fraction * spectrum.max_abs_real();
    let mut peaks = Vec::new();
    if threshold > 0.0 {
        for i in 1..re.len() - 1 {
            let (a, b, c) = (re[i - 1], re[i], re[i + 1]);
            let is_max = b >= threshold && b > a && b >= c;
            let is_min = b <= -threshold && b < a && b <= c;
            if !(is_max || is_min) {
                continue;
            }
            let (p, height) = parabolic(a, b, c);
            let step = 0.5 * (spectrum.freqs[i + 1] - spectrum.freqs[i - 1]);
            peaks.push(Peak {
                freq_hz: spectrum.freqs[i] + p * step,
                height,
                index: i,
                assigned: None,
            });
        }
    }
    if peaks.is_empty() {
        return Err(Error::NoPeaks { threshold });
    }
    peaks.sort_by(|x, y| y.freq_hz.total_cmp(&x.freq_hz));
    Ok(peaks)
}

/// Matches each peak to the unique table row within `tol` Hz.
pub fn assign_peaks(peaks: &[Peak], table: &TransitionTable, tol: f64) -> Result<Vec<Peak>> {
    let mut claimed = BTreeSet::new();
    let mut out = Vec::with_capacity(peaks.len());
    for peak in peaks {
        let mut near = table
            .rows()
            .iter()
            .filter(|row| (row.freq_hz - peak.freq_hz).abs() <= tol);
        let first = near.next();
        if let Some(second) = near.next() {
            return Err(Error::AmbiguousAssignment {
                freq_hz: peak.freq_hz,
                a: first.map(|r| r.register.to_string()).unwrap_or_default(),
                b: second.register.to_string(),
            });
        }
        let mut p = peak.clone();
        if let Some(row) = first {
            if !claimed.insert(row.register) {
                return Err(Error::DuplicateAssignment(row.register.to_string()));
            }
            p.assigned = Some(row.register);
        }
        out.push(p);
    }
    Ok(out)
}

/// Outcome of decoding one spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Readout {
    /// Items with a downward peak.
    pub marked: MarkedSet,
    /// Items with an upward peak.
    pub unmarked: MarkedSet,
    /// Table rows with no detected peak.
    pub unseen: Vec<Bits>,
    /// Assigned and unassigned peaks, descending frequency.
    pub peaks: Vec<Peak>,
}

pub fn fetch_marked(
    spectrum: &Spectrum,
    table: &TransitionTable,
    threshold_fraction: f64,
    tol: f64,
) -> Result<Readout> {
    let width = table.rows().first().map_or(0, |r| r.register.width());
    let peaks = assign_peaks(&detect_peaks(spectrum, threshold_fraction)?, table, tol)?;
    let mut marked = MarkedSet::empty(width);
    let mut unmarked = MarkedSet::empty(width);
    for p in &peaks {
        if let Some(b) = p.assigned {
            if p.is_down() {
                marked.insert(b)?;
            } else {
                unmarked.insert(b)?;
            }
        }
    }
    let unseen = table
        .rows()
        .iter()
        .map(|r| r.register)
        .filter(|b| !marked.contains(*b) && !unmarked.contains(*b))
        .collect();
    Ok(Readout {
        marked,
        unmarked,
        unseen,
        peaks,
    })
}

/// Full width at half maximum (Hz) of the extremum at grid index `index`,
/// with linear interpolation of both half-height crossings.
pub fn fwhm(spectrum: &Spectrum, index: usize) -> Option<f64> {
    let re = spectrum.real();
    let sign = re[index].signum();
    let half = 0.5 * re[index].abs();
    let y = |i: usize| sign * re[i];
    let crossing = |inner: usize, outer: usize| {
        let (y0, y1) = (y(inner), y(outer));
        let t = (y0 - half) / (y0 - y1);
        spectrum.freqs[inner] + t * (spectrum.freqs[outer] - spectrum.freqs[inner])
    };
    let mut lo = index;
    while y(lo) > half {
        if lo == 0 {
            return None;
        }
        lo -= 1;
    }
    let mut hi = index;
    while y(hi) > half {
        hi += 1;
        if hi == re.len() {
            return None;
        }
    }
    Some(crossing(hi - 1, hi) - crossing(lo + 1, lo))
}
