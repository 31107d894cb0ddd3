//! End-to-end experiment: prepare, query once, read out, decode.

use std::cell::Cell;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::acquire::{ancilla_lines, readout_pulse, Line, Spectrum};
use crate::config::ExperimentConfig;
use crate::engine::{query_backends, spectrum_engines, ClosedFormEngine, DftEngine, SpectrumEngine};
use crate::error::{Error, Result};
use crate::oracle::{apply_query, OracleOrigin, OracleUnitary};
use crate::prep::{prepare_i0_alpha, DeviationDensity};
use crate::readout::{fetch_marked, Readout};
use crate::spinops::{SpinSystem, TransitionTable};

/// Wraps an oracle and counts how often it is applied.
pub struct CountingOracle {
    oracle: OracleUnitary,
    calls: Cell<usize>,
}

impl CountingOracle {
    pub fn new(oracle: OracleUnitary) -> Self {
        Self {
            oracle,
            calls: Cell::new(0),
        }
    }

    pub fn apply(&self, state: &DeviationDensity) -> Result<DeviationDensity> {
        self.calls.set(self.calls.get() + 1);
        apply_query(state, &self.oracle)
    }

    pub fn calls(&self) -> usize {
        self.calls.get()
    }

    pub fn oracle(&self) -> &OracleUnitary {
        &self.oracle
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub table: TransitionTable,
    pub lines: Vec<Line>,
    /// Spectrum from the configured engine; readout is taken from this one.
    pub spectrum: Spectrum,
    pub dft: Spectrum,
    pub closed_form: Spectrum,
    /// Largest absorption difference between DFT and closed form, relative
    /// to the closed-form maximum.
    pub relative_deviation: f64,
    pub readout: Readout,
    pub oracle_applications: usize,
    pub oracle_origin: OracleOrigin,
    pub engine: String,
    pub backend: String,
    pub elapsed: Duration,
}

impl ExperimentReport {
    /// The recovered set equals the configured one and every line was seen.
    pub fn matches(&self, expected: &crate::oracle::MarkedSet) -> bool {
        self.readout.marked == *expected && self.readout.unseen.is_empty()
    }
}

/// Post-query, post-read-pulse state together with the number of oracle calls.
pub fn query_and_read(
    system: &SpinSystem,
    oracle: OracleUnitary,
) -> Result<(DeviationDensity, usize)> {
    let counted = CountingOracle::new(oracle);
    let prepared = prepare_i0_alpha(system)?;
    let queried = counted.apply(&prepared)?;
    if counted.calls() != 1 {
        return Err(Error::QueryCount(counted.calls()));
    }
    Ok((readout_pulse(&queried, system)?, counted.calls()))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    config.check()?;
    let system = &config.system;
    let engine = spectrum_engines().get(&config.readout.engine)?;
    let backend = query_backends().get(&config.readout.backend)?;

    let oracle = backend.build(system, &config.marked)?;
    let origin = oracle.origin().clone();
    let (state, applications) = query_and_read(system, oracle)?;

    let params = &config.acquisition;
    let dft = DftEngine.spectrum(&state, system, params)?;
    let closed_form = ClosedFormEngine.spectrum(&state, system, params)?;
    let relative_deviation = dft.max_real_deviation(&closed_form) / closed_form.max_abs_real();
    let spectrum = match engine.name() {
        "dft" => dft.clone(),
        "closed-form" => closed_form.clone(),
        _ => engine.spectrum(&state, system, params)?,
    };

    let table = TransitionTable::of(system);
    let readout = fetch_marked(
        &spectrum,
        &table,
        config.readout.threshold_fraction,
        config.readout.tolerance_hz,
    )?;
    Ok(ExperimentReport {
        lines: ancilla_lines(&state, system)?,
        table,
        spectrum,
        dft,
        closed_form,
        relative_deviation,
        readout,
        oracle_applications: applications,
        oracle_origin: origin,
        engine: engine.name().to_string(),
        backend: backend.name().to_string(),
        elapsed: start.elapsed(),
    })
}

/// Serializable digest of a run.
#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub spins: usize,
    pub engine: String,
    pub backend: String,
    pub points: usize,
    pub dwell_s: f64,
    pub reference_hz: f64,
    pub expected: Option<String>,
    pub recovered: String,
    pub unmarked: String,
    pub unseen: Vec<String>,
    pub matches: Option<bool>,
    pub oracle_applications: usize,
    pub relative_deviation: f64,
    pub peaks: Vec<SummaryPeak>,
    pub defaults: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SummaryPeak {
    pub freq_hz: f64,
    pub height: f64,
    pub item: Option<String>,
    pub expected_hz: Option<f64>,
    pub sign: &'static str,
}

impl Summary {
    pub fn new(config: &ExperimentConfig, report: &ExperimentReport, check: bool) -> Self {
        let peaks = report
            .readout
            .peaks
            .iter()
            .map(|p| SummaryPeak {
                freq_hz: p.freq_hz,
                height: p.height,
                item: p.assigned.map(|b| b.to_string()),
                expected_hz: p.assigned.and_then(|b| report.table.freq_of(b)),
                sign: if p.is_down() { "down" } else { "up" },
            })
            .collect();
        Self {
            spins: config.system.n_register(),
            engine: report.engine.clone(),
            backend: report.backend.clone(),
            points: config.acquisition.points,
            dwell_s: config.acquisition.dwell,
            reference_hz: config.acquisition.reference,
            expected: check.then(|| config.marked.to_string()),
            recovered: report.readout.marked.to_string(),
            unmarked: report.readout.unmarked.to_string(),
            unseen: report.readout.unseen.iter().map(|b| b.to_string()).collect(),
            matches: check.then(|| report.matches(&config.marked)),
            oracle_applications: report.oracle_applications,
            relative_deviation: report.relative_deviation,
            peaks,
            defaults: config.defaults.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{compile_oracle, MarkedSet};

    fn alanine_config(marked: &str, backend: &str) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::for_system(
            SpinSystem::alanine(),
            MarkedSet::parse(marked, 2).unwrap(),
        )
        .unwrap();
        cfg.readout.backend = backend.into();
        cfg
    }

    #[test]
    fn alanine_end_to_end() {
        let cfg = alanine_config("10,11", "matrix");
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.readout.marked.to_string(), "10,11");
        assert_eq!(r.readout.unmarked.to_string(), "00,01");
        assert!(r.matches(&cfg.marked));
        assert_eq!(r.oracle_applications, 1);
        assert!(r.relative_deviation < 0.02, "{}", r.relative_deviation);
    }

    #[test]
    fn pulse_backend_agrees() {
        let cfg = alanine_config("10,11", "pulse");
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.readout.marked.to_string(), "10,11");
        assert_eq!(r.oracle_origin, OracleOrigin::PulseSequence);
    }

    #[test]
    fn empty_and_full_sets() {
        for m in ["-", "00,01,10,11"] {
            let cfg = alanine_config(m, "matrix");
            let r = run_experiment(&cfg).unwrap();
            assert_eq!(r.readout.marked, cfg.marked);
        }
    }

    #[test]
    fn counter_tracks_calls() {
        let s = SpinSystem::alanine();
        let o = compile_oracle(&s, &MarkedSet::parse("01", 2).unwrap()).unwrap();
        let c = CountingOracle::new(o);
        let st = prepare_i0_alpha(&s).unwrap();
        let once = c.apply(&st).unwrap();
        c.apply(&once).unwrap();
        assert_eq!(c.calls(), 2);
    }

    #[test]
    fn summary_digest() {
        let cfg = alanine_config("10,11", "matrix");
        let r = run_experiment(&cfg).unwrap();
        let s = Summary::new(&cfg, &r, true);
        assert_eq!(s.matches, Some(true));
        assert_eq!(s.peaks.len(), 4);
        assert_eq!(s.peaks[1].item.as_deref(), Some("10"));
        assert_eq!(s.peaks[1].sign, "down");
    }
}
