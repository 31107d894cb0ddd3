//! Plain-text pulse-sequence listings, one event per line:
//!
//! ```text
//! # CNOT from spin 1 onto the ancilla
//! pulse -y 90 0
//! pulse -z 90 0,1
//! delay 1/(2J.0.1) J.0.1
//! pulse y 90 0
//! grad
//! ```
//!
//! `pulse <axis> <degrees> <targets>` is a hard rotation. `delay <seconds>`
//! evolves under the full Hamiltonian; a trailing list such as `J.0.1,J.0.2`
//! restricts the evolution to those couplings. The duration may be written as
//! `1/(2J.j.k)`, half the inverse of a coupling.

use crate::error::{Error, Result};
use crate::prep::{Axis, DelayMode, PulseEvent, Rotation};
use crate::spinops::SpinSystem;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_pair(tok: &str, line: usize) -> Result<(usize, usize)> {
    let rest = tok
        .strip_prefix("J.")
        .ok_or_else(|| perr(line, format!("expected J.j.k, got {tok:?}")))?;
    let (j, k) = rest
        .split_once('.')
        .ok_or_else(|| perr(line, format!("expected J.j.k, got {tok:?}")))?;
    let j = j.parse().map_err(|_| perr(line, format!("bad spin index in {tok:?}")))?;
    let k = k.parse().map_err(|_| perr(line, format!("bad spin index in {tok:?}")))?;
    Ok((j, k))
}

fn parse_duration(tok: &str, system: &SpinSystem, line: usize) -> Result<f64> {
    if let Some(inner) = tok.strip_prefix("1/(2").and_then(|t| t.strip_suffix(')')) {
        let (j, k) = parse_pair(inner, line)?;
        if j >= system.spins() || k >= system.spins() {
            return Err(perr(line, format!("{inner} names a spin outside the system")));
        }
        let c = system.coupling(j, k);
        if c == 0.0 {
            return Err(perr(line, format!("{inner} is zero")));
        }
        return Ok(1.0 / (2.0 * c));
    }
    let d: f64 = tok
        .parse()
        .map_err(|_| perr(line, format!("bad duration {tok:?}")))?;
    if !(d >= 0.0 && d.is_finite()) {
        return Err(perr(line, format!("duration must be non-negative, got {d}")));
    }
    Ok(d)
}

pub fn parse_sequence(text: &str, system: &SpinSystem) -> Result<Vec<PulseEvent>> {
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        let event = match toks[0] {
            "pulse" => {
                if toks.len() != 4 {
                    return Err(perr(line, "expected: pulse <axis> <degrees> <targets>"));
                }
                let axis: Axis = toks[1].parse().map_err(|e: String| perr(line, e))?;
                let deg: f64 = toks[2]
                    .parse()
                    .map_err(|_| perr(line, format!("bad angle {:?}", toks[2])))?;
                let targets = toks[3]
                    .split(',')
                    .map(|t| {
                        let idx: usize = t
                            .trim()
                            .parse()
                            .map_err(|_| perr(line, format!("bad target {t:?}")))?;
                        if idx >= system.spins() {
                            return Err(perr(line, format!("target {idx} outside the system")));
                        }
                        Ok(idx)
                    })
                    .collect::<Result<Vec<_>>>()?;
                PulseEvent::Rotation(Rotation::new(axis, deg.to_radians(), targets))
            }
            "delay" => {
                if toks.len() < 2 || toks.len() > 3 {
                    return Err(perr(line, "expected: delay <seconds> [J.j.k,...]"));
                }
                let duration = parse_duration(toks[1], system, line)?;
                let mode = match toks.get(2) {
                    None => DelayMode::Full,
                    Some(list) => DelayMode::Selective(
                        list.split(',')
                            .map(|t| parse_pair(t.trim(), line))
                            .collect::<Result<Vec<_>>>()?,
                    ),
                };
                PulseEvent::Delay { duration, mode }
            }
            "grad" if toks.len() == 1 => PulseEvent::Gradient,
            other => return Err(perr(line, format!("unknown event {other:?}"))),
        };
        events.push(event);
    }
    Ok(events)
}

pub fn format_sequence(events: &[PulseEvent]) -> String {
    events.iter().map(|e| format!("{e}\n")).collect()
}
