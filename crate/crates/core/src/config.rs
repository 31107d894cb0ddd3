//! Experiment configuration in a small line-oriented `key = value` format.
//!
//! ```text
//! [system]
//! spins = 2            # register spins; the ancilla is added implicitly
//! offset.0 = 0         # Hz, rotating frame
//! J.0.1 = 35.1         # Hz
//! J.0.2 = 54.2
//! t2 = 1.0             # s
//! t2.11 = 0.5          # optional per-line override, keyed by register bits
//!
//! [acquisition]
//! dwell = 0.0078125    # s; omitted values are derived from the system
//! points = 4096
//! reference = 0
//!
//! [readout]
//! marked = 10,11
//! threshold = 0.2
//!
//! [output]
//! spectrum = spectrum.csv
//! ```
//!
//! Keys are unique per section; `#` starts a comment.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::acquire::{AcqParams, MIN_POINTS};
use crate::engine::{query_backends, spectrum_engines, DEFAULT_BACKEND, DEFAULT_ENGINE};
use crate::error::{Error, Result};
use crate::oracle::MarkedSet;
use crate::readout::{default_tolerance, DEFAULT_THRESHOLD_FRACTION};
use crate::spinops::{validate, Bits, SpinSystem, TransitionTable};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReadoutParams {
    pub threshold_fraction: f64,
    /// Peak-to-line assignment tolerance, Hz.
    pub tolerance_hz: f64,
    /// Minimum line separation accepted at validation, Hz.
    pub resolution_hz: f64,
    pub engine: String,
    pub backend: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputNames {
    pub spectrum: String,
    pub summary: Option<String>,
    pub plot: String,
}

impl Default for OutputNames {
    fn default() -> Self {
        Self {
            spectrum: "spectrum.csv".into(),
            summary: None,
            plot: "spectrum.svg".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub system: SpinSystem,
    pub acquisition: AcqParams,
    pub marked: MarkedSet,
    pub readout: ReadoutParams,
    pub outputs: OutputNames,
    /// `key = value (reason)` lines for every value not given explicitly.
    pub defaults: Vec<String>,
}

impl ExperimentConfig {
    /// A ready-to-run configuration for `system` with all derived defaults.
    pub fn for_system(system: SpinSystem, marked: MarkedSet) -> Result<Self> {
        let acquisition = AcqParams::auto(&system, system.offset(0));
        let resolution_hz = default_resolution(&system, &acquisition);
        let table = TransitionTable::of(&system);
        let cfg = Self {
            readout: ReadoutParams {
                threshold_fraction: DEFAULT_THRESHOLD_FRACTION,
                tolerance_hz: default_tolerance(&table),
                resolution_hz,
                engine: DEFAULT_ENGINE.into(),
                backend: DEFAULT_BACKEND.into(),
            },
            system,
            acquisition,
            marked,
            outputs: OutputNames::default(),
            defaults: Vec::new(),
        };
        cfg.check()?;
        Ok(cfg)
    }

    /// Re-runs every load-time check; used after command-line overrides.
    pub fn check(&self) -> Result<()> {
        validate(&self.system, self.readout.resolution_hz).into_result()?;
        self.acquisition.check_against(&self.system)?;
        if self.marked.width() != self.system.n_register() {
            return Err(Error::LengthMismatch {
                expected: self.system.n_register(),
                got: self.marked.width(),
            });
        }
        let tf = self.readout.threshold_fraction;
        if !(tf > 0.0 && tf < 1.0) {
            return Err(Error::Invalid(format!("threshold must lie in (0, 1), got {tf}")));
        }
        if !(self.readout.tolerance_hz > 0.0) {
            return Err(Error::Invalid(format!(
                "tolerance must be positive, got {}",
                self.readout.tolerance_hz
            )));
        }
        spectrum_engines().get(&self.readout.engine)?;
        query_backends().get(&self.readout.backend)?;
        Ok(())
    }
}

/// Two lines count as resolved when they sit at least two linewidths plus two
/// grid spacings apart.
pub fn default_resolution(system: &SpinSystem, acq: &AcqParams) -> f64 {
    2.0 * system.linewidth_hz() + 2.0 * acq.resolution()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    System,
    Acquisition,
    Readout,
    Output,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        match name {
            "system" => Some(Section::System),
            "acquisition" => Some(Section::Acquisition),
            "readout" => Some(Section::Readout),
            "output" => Some(Section::Output),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Section::System => "system",
            Section::Acquisition => "acquisition",
            Section::Readout => "readout",
            Section::Output => "output",
        }
    }
}

struct Entry {
    value: String,
    line: usize,
}

type Entries = BTreeMap<(Section, String), Entry>;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn tokenize(text: &str) -> Result<Entries> {
    let mut section = None;
    let mut entries = Entries::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            section = Some(
                Section::parse(name.trim())
                    .ok_or_else(|| perr(line, format!("unknown section [{}]", name.trim())))?,
            );
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| perr(line, format!("expected key = value, got {body:?}")))?;
        let sec = section.ok_or_else(|| perr(line, "key outside of any section"))?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(perr(line, "empty key"));
        }
        if let Some(prev) = entries.get(&(sec, key.clone())) {
            return Err(perr(
                line,
                format!("duplicate key {key:?} (first set on line {})", prev.line),
            ));
        }
        entries.insert(
            (sec, key),
            Entry {
                value: value.trim().to_string(),
                line,
            },
        );
    }
    Ok(entries)
}

fn num(e: &Entry, key: &str) -> Result<f64> {
    let v: f64 = e
        .value
        .parse()
        .map_err(|_| perr(e.line, format!("{key}: expected a number, got {:?}", e.value)))?;
    if !v.is_finite() {
        return Err(perr(e.line, format!("{key}: value must be finite")));
    }
    Ok(v)
}

fn spin_index(tok: &str, line: usize, system: &SpinSystem) -> Result<usize> {
    let j: usize = tok
        .parse()
        .map_err(|_| perr(line, format!("bad spin index {tok:?}")))?;
    if j >= system.spins() {
        return Err(perr(
            line,
            format!("spin {j} outside a system of {} spins", system.spins()),
        ));
    }
    Ok(j)
}

fn build_system(entries: &Entries) -> Result<SpinSystem> {
    let spins = entries
        .get(&(Section::System, "spins".into()))
        .ok_or_else(|| perr(0, "[system] needs `spins` (number of register spins)"))?;
    let n: usize = spins
        .value
        .parse()
        .map_err(|_| perr(spins.line, format!("spins: expected an integer, got {:?}", spins.value)))?;
    let mut system = SpinSystem::new(n).map_err(|e| perr(spins.line, e.to_string()))?;

    let mut explicit: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for ((sec, key), e) in entries.range((Section::System, String::new())..(Section::Acquisition, String::new())) {
        debug_assert_eq!(*sec, Section::System);
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["spins"] => {}
            ["t2"] => {
                let t2 = num(e, key)?;
                if t2 <= 0.0 {
                    return Err(perr(e.line, "t2 must be positive"));
                }
                system.set_t2(t2);
            }
            ["t2", bits] => {
                let b = Bits::parse(bits).map_err(|err| perr(e.line, err.to_string()))?;
                let t2 = num(e, key)?;
                if t2 <= 0.0 {
                    return Err(perr(e.line, "t2 must be positive"));
                }
                system
                    .set_t2_override(b, t2)
                    .map_err(|err| perr(e.line, err.to_string()))?;
            }
            ["offset", j] => {
                let j = spin_index(j, e.line, &system)?;
                system.set_offset(j, num(e, key)?)?;
            }
            ["J", j, k] => {
                let j = spin_index(j, e.line, &system)?;
                let k = spin_index(k, e.line, &system)?;
                if j == k {
                    return Err(perr(e.line, "self-coupling is not allowed"));
                }
                let v = num(e, key)?;
                system.set_coupling_entry(j, k, v)?;
                explicit.insert((j, k), e.line);
            }
            _ => return Err(perr(e.line, format!("unknown key {key:?} in [system]"))),
        }
    }
    // A coupling listed once applies in both directions.
    for &(j, k) in explicit.keys() {
        if !explicit.contains_key(&(k, j)) {
            let v = system.coupling(j, k);
            system.set_coupling_entry(k, j, v)?;
        }
    }
    Ok(system)
}

/// Parses and validates a configuration, filling in every omitted value.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let entries = tokenize(text)?;
    let system = build_system(&entries)?;
    let mut defaults = Vec::new();
    let get = |sec: Section, key: &str| entries.get(&(sec, key.to_string()));

    for ((sec, key), e) in &entries {
        let known: &[&str] = match sec {
            Section::System => continue,
            Section::Acquisition => &["dwell", "points", "reference", "scale"],
            Section::Readout => &["marked", "threshold", "tol", "resolution", "engine", "backend"],
            Section::Output => &["spectrum", "summary", "plot"],
        };
        if !known.contains(&key.as_str()) {
            return Err(perr(e.line, format!("unknown key {key:?} in [{}]", sec.name())));
        }
    }

    // acquisition
    let reference = match get(Section::Acquisition, "reference") {
        Some(e) => num(e, "reference")?,
        None => {
            defaults.push(format!("acquisition.reference = {} (ancilla offset)", system.offset(0)));
            system.offset(0)
        }
    };
    let auto = AcqParams::auto(&system, reference);
    let dwell = match get(Section::Acquisition, "dwell") {
        Some(e) => {
            let d = num(e, "dwell")?;
            if d <= 0.0 {
                return Err(perr(e.line, "dwell must be positive"));
            }
            d
        }
        None => {
            defaults.push(format!("acquisition.dwell = {} (derived)", auto.dwell));
            auto.dwell
        }
    };
    let points = match get(Section::Acquisition, "points") {
        Some(e) => e
            .value
            .parse::<usize>()
            .ok()
            .filter(|p| *p >= MIN_POINTS && p.is_power_of_two())
            .ok_or_else(|| perr(e.line, format!("points must be a power of two ≥ {MIN_POINTS}")))?,
        None => {
            let record = 10.0 * PI * system.t2_max();
            let p = ((record / dwell).ceil() as usize)
                .next_power_of_two()
                .max(MIN_POINTS);
            defaults.push(format!("acquisition.points = {p} (derived)"));
            p
        }
    };
    let scale = match get(Section::Acquisition, "scale") {
        Some(e) => num(e, "scale")?,
        None => 1.0,
    };
    let acquisition = AcqParams {
        dwell,
        points,
        reference,
        scale,
    };

    // readout
    let marked = match get(Section::Readout, "marked") {
        Some(e) => MarkedSet::parse(&e.value, system.n_register())
            .map_err(|err| perr(e.line, format!("marked: {err}")))?,
        None => {
            defaults.push("readout.marked = - (empty)".into());
            MarkedSet::empty(system.n_register())
        }
    };
    let threshold_fraction = match get(Section::Readout, "threshold") {
        Some(e) => num(e, "threshold")?,
        None => {
            defaults.push(format!("readout.threshold = {DEFAULT_THRESHOLD_FRACTION}"));
            DEFAULT_THRESHOLD_FRACTION
        }
    };
    let resolution_hz = match get(Section::Readout, "resolution") {
        Some(e) => num(e, "resolution")?,
        None => {
            let r = default_resolution(&system, &acquisition);
            defaults.push(format!("readout.resolution = {r} (2 linewidths + 2 bins)"));
            r
        }
    };
    let table = TransitionTable::of(&system);
    let tolerance_hz = match get(Section::Readout, "tol") {
        Some(e) => num(e, "tol")?,
        None => {
            let t = default_tolerance(&table);
            defaults.push(format!("readout.tol = {t} (quarter of the smallest line gap)"));
            t
        }
    };
    let engine = match get(Section::Readout, "engine") {
        Some(e) => e.value.clone(),
        None => {
            defaults.push(format!("readout.engine = {DEFAULT_ENGINE}"));
            DEFAULT_ENGINE.into()
        }
    };
    let backend = match get(Section::Readout, "backend") {
        Some(e) => e.value.clone(),
        None => {
            defaults.push(format!("readout.backend = {DEFAULT_BACKEND}"));
            DEFAULT_BACKEND.into()
        }
    };

    let mut outputs = OutputNames::default();
    if let Some(e) = get(Section::Output, "spectrum") {
        outputs.spectrum = e.value.clone();
    }
    if let Some(e) = get(Section::Output, "summary") {
        outputs.summary = Some(e.value.clone());
    }
    if let Some(e) = get(Section::Output, "plot") {
        outputs.plot = e.value.clone();
    }

    let cfg = ExperimentConfig {
        system,
        acquisition,
        marked,
        readout: ReadoutParams {
            threshold_fraction,
            tolerance_hz,
            resolution_hz,
            engine,
            backend,
        },
        outputs,
        defaults,
    };
    cfg.check()?;
    Ok(cfg)
}
