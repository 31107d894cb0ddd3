//! Interchangeable strategies, registered by name and picked at run time.
//!
//! Two families exist: spectrum engines turn the post-read-pulse state into a
//! spectrum, query backends turn a marked set into the query unitary.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::acquire::{closed_form_spectrum, dft_axis, dft_spectrum, synthesize_fid, AcqParams, Spectrum};
use crate::error::{Error, Result};
use crate::oracle::{cnot_sequence, compile_oracle, pulse_unitary, MarkedSet, OracleUnitary};
use crate::prep::DeviationDensity;
use crate::spinops::{Bits, SpinSystem};

pub trait Strategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
}

pub trait SpectrumEngine: Strategy {
    fn spectrum(&self, state: &DeviationDensity, system: &SpinSystem, params: &AcqParams) -> Result<Spectrum>;
}

pub trait QueryBackend: Strategy {
    fn build(&self, system: &SpinSystem, marked: &MarkedSet) -> Result<OracleUnitary>;
}

/// FID synthesis followed by a discrete Fourier transform.
pub struct DftEngine;

impl Strategy for DftEngine {
    fn name(&self) -> &'static str {
        "dft"
    }
    fn describe(&self) -> &'static str {
        "synthesised FID, discrete Fourier transform"
    }
}

impl SpectrumEngine for DftEngine {
    fn spectrum(&self, state: &DeviationDensity, system: &SpinSystem, params: &AcqParams) -> Result<Spectrum> {
        dft_spectrum(&synthesize_fid(state, system, params)?)
    }
}

/// Sum of complex Lorentzians evaluated on the DFT grid.
pub struct ClosedFormEngine;

impl Strategy for ClosedFormEngine {
    fn name(&self) -> &'static str {
        "closed-form"
    }
    fn describe(&self) -> &'static str {
        "analytic Lorentzian sum on the DFT frequency grid"
    }
}

impl SpectrumEngine for ClosedFormEngine {
    fn spectrum(&self, state: &DeviationDensity, system: &SpinSystem, params: &AcqParams) -> Result<Spectrum> {
        params.check()?;
        let grid = dft_axis(params.points, params.dwell, params.reference);
        closed_form_spectrum(state, system, &grid, params.scale)
    }
}

/// The ancilla-flip permutation built straight from the marked set.
pub struct MatrixBackend;

impl Strategy for MatrixBackend {
    fn name(&self) -> &'static str {
        "matrix"
    }
    fn describe(&self) -> &'static str {
        "permutation |a,x⟩ → |a⊕f(x),x⟩"
    }
}

impl QueryBackend for MatrixBackend {
    fn build(&self, system: &SpinSystem, marked: &MarkedSet) -> Result<OracleUnitary> {
        compile_oracle(system, marked)
    }
}

/// Hard-pulse controlled-NOT from one register spin onto the ancilla.
///
/// Only realises marked sets of the form "every item whose bit `c` is 1".
pub struct PulseBackend;

impl PulseBackend {
    fn control_spin(system: &SpinSystem, marked: &MarkedSet) -> Option<usize> {
        let n = system.n_register();
        (1..=n).find(|&c| {
            Bits::all(n).all(|b| marked.contains(b) == (b.bit(c) == 1))
        })
    }
}

impl Strategy for PulseBackend {
    fn name(&self) -> &'static str {
        "pulse"
    }
    fn describe(&self) -> &'static str {
        "(π/2)_-y → (π/2)_-z → 1/(2J) → (π/2)_y controlled-NOT sequence"
    }
}

impl QueryBackend for PulseBackend {
    fn build(&self, system: &SpinSystem, marked: &MarkedSet) -> Result<OracleUnitary> {
        let control = Self::control_spin(system, marked).ok_or_else(|| Error::Unsupported {
            backend: "pulse",
            reason: format!(
                "marked set {marked} is not \"bit c set\" for any register spin c"
            ),
        })?;
        let u = pulse_unitary(&cnot_sequence(system, control)?, system)?;
        Ok(OracleUnitary::from_sequence_unitary(u, marked.clone()))
    }
}

/// Name → strategy table.
pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<&'static str, Arc<T>>,
}

impl<T: ?Sized + Strategy> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, strategy: Arc<T>) {
        self.entries.insert(strategy.name(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<T>> {
        self.entries.values()
    }
}

pub const DEFAULT_ENGINE: &str = "dft";
pub const DEFAULT_BACKEND: &str = "matrix";

pub fn spectrum_engines() -> Registry<dyn SpectrumEngine> {
    let mut r: Registry<dyn SpectrumEngine> = Registry::new("spectrum engine");
    r.register(Arc::new(DftEngine));
    r.register(Arc::new(ClosedFormEngine));
    r
}

pub fn query_backends() -> Registry<dyn QueryBackend> {
    let mut r: Registry<dyn QueryBackend> = Registry::new("query backend");
    r.register(Arc::new(MatrixBackend));
    r.register(Arc::new(PulseBackend));
    r
}
