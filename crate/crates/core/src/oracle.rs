//! The query: marked sets, the ancilla-flip permutation oracle, the query
//! functional, and unitaries assembled from pulse sequences.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prep::{Axis, DelayMode, DeviationDensity, PulseEvent, Rotation};
use crate::spinops::{build_hamiltonian, embed_single_spin, BasisState, Bits, Operator, SingleSpin, SpinSystem};

/// Register items `z` with `f(z) = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MarkedSet {
    width: usize,
    items: BTreeSet<Bits>,
}

impl MarkedSet {
    pub fn empty(width: usize) -> Self {
        Self {
            width,
            items: BTreeSet::new(),
        }
    }

    pub fn new(width: usize, items: impl IntoIterator<Item = Bits>) -> Result<Self> {
        let mut set = Self::empty(width);
        for b in items {
            set.insert(b)?;
        }
        Ok(set)
    }

    /// Every one of the `2^width` items.
    pub fn all(width: usize) -> Self {
        Self {
            width,
            items: Bits::all(width).collect(),
        }
    }

    /// Parses comma-separated bitstrings such as `"10,11"`. An empty string,
    /// `-` or `none` is the empty set.
    pub fn parse(text: &str, width: usize) -> Result<Self> {
        let t = text.trim();
        if t.is_empty() || t == "-" || t.eq_ignore_ascii_case("none") {
            return Ok(Self::empty(width));
        }
        let mut set = Self::empty(width);
        for tok in t.split(',') {
            set.insert(Bits::parse(tok)?)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, b: Bits) -> Result<()> {
        if b.width() != self.width {
            return Err(Error::LengthMismatch {
                expected: self.width,
                got: b.width(),
            });
        }
        self.items.insert(b);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn contains(&self, b: Bits) -> bool {
        self.items.contains(&b)
    }

    pub fn contains_value(&self, value: usize) -> bool {
        self.items.iter().any(|b| b.value() == value)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Bits> + '_ {
        self.items.iter().copied()
    }
}

impl fmt::Display for MarkedSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.items.is_empty() {
            return f.write_str("-");
        }
        let parts: Vec<String> = self.items.iter().map(|b| b.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum OracleOrigin {
    /// Built directly from the marked set.
    Compiled,
    /// Assembled from a pulse sequence.
    PulseSequence,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleUnitary {
    matrix: Operator,
    marked: MarkedSet,
    origin: OracleOrigin,
}

impl OracleUnitary {
    /// Wraps an arbitrary unitary that is meant to realise `marked`.
    pub fn from_sequence_unitary(matrix: Operator, marked: MarkedSet) -> Self {
        Self {
            matrix,
            marked,
            origin: OracleOrigin::PulseSequence,
        }
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn marked(&self) -> &MarkedSet {
        &self.marked
    }

    pub fn origin(&self) -> &OracleOrigin {
        &self.origin
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn is_permutation(&self) -> bool {
        let m = self.matrix.matrix();
        let n = m.nrows();
        let binary = m
            .iter()
            .all(|z| z.im == 0.0 && (z.re == 0.0 || z.re == 1.0));
        binary
            && (0..n).all(|r| m.row(r).iter().filter(|z| z.re == 1.0).count() == 1)
            && (0..n).all(|c| m.column(c).iter().filter(|z| z.re == 1.0).count() == 1)
    }
}

/// `|a, x⟩ → |a ⊕ [x ∈ marked], x⟩`.
pub fn compile_oracle(system: &SpinSystem, marked: &MarkedSet) -> Result<OracleUnitary> {
    let n = system.n_register();
    if marked.width() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: marked.width(),
        });
    }
    let dim = system.dim();
    let mut m = nalgebra::DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let s = BasisState::from_index(col, n);
        let flip = u8::from(marked.contains(s.register));
        let row = BasisState::new(s.ancilla ^ flip, s.register).index();
        m[(row, col)] = Complex64::new(1.0, 0.0);
    }
    Ok(OracleUnitary {
        matrix: Operator::from_matrix(m),
        marked: marked.clone(),
        origin: OracleOrigin::Compiled,
    })
}

/// `U ρ U†`.
pub fn apply_query(state: &DeviationDensity, oracle: &OracleUnitary) -> Result<DeviationDensity> {
    if state.dim() != oracle.dim() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim(),
            got: state.dim(),
        });
    }
    Ok(state.map_matrix(|m| m.conjugate_by(oracle.matrix())))
}

fn ancilla_z(oracle: &OracleUnitary) -> Operator {
    let spins = oracle.dim().trailing_zeros() as usize;
    let sys = SpinSystem::new(spins - 1).expect("oracle dimension within limits");
    embed_single_spin(SingleSpin::Z, 0, &sys).expect("spin 0 exists")
}

fn trace_after_query(full: &Operator, oracle: &OracleUnitary) -> f64 {
    let evolved = full.conjugate_by(oracle.matrix());
    (&evolved * &ancilla_z(oracle)).trace().re
}

/// `f = Tr{U (I_0^α ⊗ ρ_in) U† I_0z}` for a register-only density `ρ_in`.
pub fn query_value(register_density: &Operator, oracle: &OracleUnitary) -> Result<f64> {
    let half = oracle.dim() / 2;
    if register_density.dim() != half {
        return Err(Error::DimensionMismatch {
            expected: half,
            got: register_density.dim(),
        });
    }
    let alpha = Operator::from_real_diagonal(&[1.0, 0.0]);
    let full = alpha.kron(register_density);
    Ok(trace_after_query(&full, oracle))
}

/// The same functional evaluated on a prepared full-space state, identity part included.
pub fn query_value_prepared(state: &DeviationDensity, oracle: &OracleUnitary) -> Result<f64> {
    if state.dim() != oracle.dim() {
        return Err(Error::DimensionMismatch {
            expected: oracle.dim(),
            got: state.dim(),
        });
    }
    Ok(trace_after_query(&state.full_density(), oracle))
}

/// Weighted sum of the functional over pure sub-ensembles.
pub fn ensemble_query(subs: &[(f64, BasisState)], oracle: &OracleUnitary) -> Result<f64> {
    let mut total = 0.0;
    for &(w, state) in subs {
        if !(w >= 0.0) {
            return Err(Error::Invalid(format!("negative sub-ensemble weight {w}")));
        }
        let idx = state.index();
        if idx >= oracle.dim() {
            return Err(Error::DimensionMismatch {
                expected: oracle.dim(),
                got: 1 << (state.register.width() + 1),
            });
        }
        let mut d = vec![0.0; oracle.dim()];
        d[idx] = 1.0;
        total += w * trace_after_query(&Operator::from_real_diagonal(&d), oracle);
    }
    Ok(total)
}

fn delay_unitary(duration: f64, system: &SpinSystem) -> Operator {
    let e = build_hamiltonian(system).real_diagonal();
    let d = nalgebra::DVector::from_iterator(
        e.len(),
        e.iter().map(|&x| Complex64::from_polar(1.0, -x * duration)),
    );
    Operator::from_matrix(nalgebra::DMatrix::from_diagonal(&d))
}

/// Net unitary of a pulse sequence; events run left to right, so the first
/// event is the rightmost factor.
pub fn pulse_unitary(sequence: &[PulseEvent], system: &SpinSystem) -> Result<Operator> {
    if sequence.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut u = Operator::identity(system.dim());
    for event in sequence {
        let step = match event {
            PulseEvent::Rotation(r) => r.unitary(system)?,
            PulseEvent::Delay { duration, mode } => {
                if !(*duration >= 0.0) {
                    return Err(Error::Invalid(format!("negative delay {duration}")));
                }
                match mode {
                    DelayMode::Full => delay_unitary(*duration, system),
                    DelayMode::Selective(pairs) => {
                        delay_unitary(*duration, &system.restricted_to(pairs)?)
                    }
                }
            }
            PulseEvent::Gradient => return Err(Error::GradientNotUnitary),
        };
        u = &step * &u;
    }
    Ok(u)
}

/// Controlled-NOT on the ancilla conditioned on register spin `control`:
/// `(π/2)_{−y}^0 → (π/2)_{−z}^{0,c} → τ → (π/2)_y^0` with `τ = 1/(2 J_0c)`,
/// evolving only under `J_0c` during `τ`.
///
/// It flips the ancilla exactly for register states with bit `control` set.
pub fn cnot_sequence(system: &SpinSystem, control: usize) -> Result<Vec<PulseEvent>> {
    if control == 0 || control > system.n_register() {
        return Err(Error::SpinIndex {
            index: control,
            spins: system.spins(),
        });
    }
    let j = system.coupling(0, control);
    if j == 0.0 {
        return Err(Error::Validation(vec![
            crate::spinops::Violation::AncillaDecoupled { spin: control },
        ]));
    }
    Ok(vec![
        PulseEvent::Rotation(Rotation::new(Axis::NegY, FRAC_PI_2, [0])),
        PulseEvent::Rotation(Rotation::new(Axis::NegZ, FRAC_PI_2, [0, control])),
        PulseEvent::Delay {
            duration: 1.0 / (2.0 * j),
            mode: DelayMode::Selective(vec![(0, control)]),
        },
        PulseEvent::Rotation(Rotation::new(Axis::Y, FRAC_PI_2, [0])),
    ])
}

/// Matrix-level difference between two unitaries, raw and modulo a global phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnitaryComparison {
    pub max_abs_diff: f64,
    pub global_phase: f64,
    pub max_abs_diff_modulo_phase: f64,
}

pub fn compare_unitaries(a: &Operator, b: &Operator) -> UnitaryComparison {
    let raw = a.max_abs_diff(b);
    let (mut best, mut at) = (0.0, (0, 0));
    for r in 0..b.dim() {
        for c in 0..b.dim() {
            let v = b.get(r, c).norm();
            if v > best {
                best = v;
                at = (r, c);
            }
        }
    }
    let phase = if best > 0.0 {
        (a.get(at.0, at.1) / b.get(at.0, at.1)).arg()
    } else {
        0.0
    };
    let rotated = Operator::from_matrix(b.matrix().map(|z| z * Complex64::from_polar(1.0, phase)));
    UnitaryComparison {
        max_abs_diff: raw,
        global_phase: phase,
        max_abs_diff_modulo_phase: a.max_abs_diff(&rotated),
    }
}
