//! Operator algebra for an ancilla spin plus an `n`-spin register.
//!
//! Spin 0 is the ancilla, spins `1..=n` form the register. Matrices are dense
//! and indexed by `(ancilla << n) | register`, so the ancilla is the most
//! significant bit and register spin 1 is the next one down. Bit value 0 is
//! `|α⟩` (the `+1/2` eigenstate of `I_z`), bit value 1 is `|β⟩`.
//!
//! Configuration values are in Hz. The Hamiltonian and energies are in rad/s;
//! [`SpinSystem::omega`] is the only place the conversion happens.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAX_REGISTER_SPINS: usize = 10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A register bitstring `i_1 i_2 … i_n`, spin 1 being the most significant bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Bits {
    value: usize,
    width: usize,
}

impl Bits {
    pub fn new(value: usize, width: usize) -> Result<Self> {
        if width > usize::BITS as usize - 1 || value >> width != 0 {
            return Err(Error::Bitstring(format!("{value} does not fit in {width} bits")));
        }
        Ok(Self { value, width })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || !s.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::Bitstring(s.to_string()));
        }
        let value = usize::from_str_radix(s, 2).map_err(|_| Error::Bitstring(s.to_string()))?;
        Self::new(value, s.len())
    }

    pub fn value(self) -> usize {
        self.value
    }

    pub fn width(self) -> usize {
        self.width
    }

    /// Bit of register spin `spin` (1-based).
    pub fn bit(self, spin: usize) -> u8 {
        debug_assert!(spin >= 1 && spin <= self.width);
        ((self.value >> (self.width - spin)) & 1) as u8
    }

    /// All `2^width` bitstrings in ascending numeric order.
    pub fn all(width: usize) -> impl Iterator<Item = Bits> {
        (0..1usize << width).map(move |value| Bits { value, width })
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.width == 0 {
            return f.write_str("-");
        }
        write!(f, "{:0width$b}", self.value, width = self.width)
    }
}

/// Product basis state `|a, i_1 … i_n⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct BasisState {
    pub ancilla: u8,
    pub register: Bits,
}

impl BasisState {
    pub fn new(ancilla: u8, register: Bits) -> Self {
        debug_assert!(ancilla <= 1);
        Self { ancilla, register }
    }

    pub fn index(self) -> usize {
        ((self.ancilla as usize) << self.register.width) | self.register.value
    }

    pub fn from_index(index: usize, n_register: usize) -> Self {
        Self {
            ancilla: ((index >> n_register) & 1) as u8,
            register: Bits {
                value: index & ((1 << n_register) - 1),
                width: n_register,
            },
        }
    }

    /// Bit of spin `spin` with the ancilla as spin 0.
    pub fn bit(self, spin: usize) -> u8 {
        if spin == 0 {
            self.ancilla
        } else {
            self.register.bit(spin)
        }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{},{}⟩", self.ancilla, self.register)
    }
}

/// Dense complex square matrix over the spin product space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(DMatrix<Complex64>);

impl Operator {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Self {
        assert!(m.is_square(), "operator must be square");
        Self(m)
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        Self(DMatrix::from_diagonal(&d))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn kron(&self, other: &Operator) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Operator) -> Self {
        Self(&u.0 * &self.0 * u.0.adjoint())
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    worst = worst.max(self.0[(r, c)].norm());
                }
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = Operator(&self.0 * self.0.adjoint());
        prod.max_abs_diff(&Operator::identity(self.dim())) <= tol
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.max_off_diagonal() <= tol
    }

    pub fn real_diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    /// Norm of `[self, other]`.
    pub fn commutator_norm(&self, other: &Operator) -> f64 {
        let c = &self.0 * &other.0 - &other.0 * &self.0;
        c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

/// Single-spin operators available for embedding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingleSpin {
    Alpha,
    Beta,
    X,
    Y,
    Z,
    /// `I^+ = I_x + i I_y`
    Raise,
}

impl SingleSpin {
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let h = Complex64::new(0.5, 0.0);
        let ih = Complex64::new(0.0, 0.5);
        match self {
            SingleSpin::Alpha => [[ONE, ZERO], [ZERO, ZERO]],
            SingleSpin::Beta => [[ZERO, ZERO], [ZERO, ONE]],
            SingleSpin::X => [[ZERO, h], [h, ZERO]],
            SingleSpin::Y => [[ZERO, -ih], [ih, ZERO]],
            SingleSpin::Z => [[h, ZERO], [ZERO, -h]],
            SingleSpin::Raise => [[ZERO, ONE], [ZERO, ZERO]],
        }
    }
}

/// Factor choices for [`product_state`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Alpha,
    Beta,
    Identity,
}

/// Collective operators `Σ_k I_k,axis` over a subset of spins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Collective {
    Fx,
    Fy,
    Fz,
    Fplus,
}

impl Collective {
    fn single(self) -> SingleSpin {
        match self {
            Collective::Fx => SingleSpin::X,
            Collective::Fy => SingleSpin::Y,
            Collective::Fz => SingleSpin::Z,
            Collective::Fplus => SingleSpin::Raise,
        }
    }
}

/// Weakly coupled spin system: chemical-shift offsets, scalar couplings and T2.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinSystem {
    n_register: usize,
    offsets: Vec<f64>,
    couplings: Vec<Vec<f64>>,
    t2: f64,
    t2_overrides: BTreeMap<Bits, f64>,
}

impl SpinSystem {
    /// Ancilla plus `n_register` register spins, all offsets and couplings zero, T2 = 1 s.
    pub fn new(n_register: usize) -> Result<Self> {
        if n_register > MAX_REGISTER_SPINS {
            return Err(Error::Validation(vec![Violation::RegisterSize(n_register)]));
        }
        let spins = n_register + 1;
        Ok(Self {
            n_register,
            offsets: vec![0.0; spins],
            couplings: vec![vec![0.0; spins]; spins],
            t2: 1.0,
            t2_overrides: BTreeMap::new(),
        })
    }

    /// The three-spin labelled-alanine working medium: ancilla coupled to the
    /// register spins with 35.1 Hz and 54.2 Hz, all offsets zero, T2 = 1 s.
    pub fn alanine() -> Self {
        let mut s = Self::new(2).expect("two register spins");
        s.set_coupling(0, 1, 35.1).unwrap();
        s.set_coupling(0, 2, 54.2).unwrap();
        s
    }

    fn check_spin(&self, spin: usize) -> Result<()> {
        if spin > self.n_register {
            Err(Error::SpinIndex {
                index: spin,
                spins: self.spins(),
            })
        } else {
            Ok(())
        }
    }

    pub fn set_offset(&mut self, spin: usize, hz: f64) -> Result<()> {
        self.check_spin(spin)?;
        self.offsets[spin] = hz;
        Ok(())
    }

    /// Sets `J_jk = J_kj = hz`.
    pub fn set_coupling(&mut self, j: usize, k: usize, hz: f64) -> Result<()> {
        self.check_spin(j)?;
        self.check_spin(k)?;
        self.couplings[j][k] = hz;
        self.couplings[k][j] = hz;
        Ok(())
    }

    /// Sets only the `[j][k]` entry; used when reading raw input that may be asymmetric.
    pub fn set_coupling_entry(&mut self, j: usize, k: usize, hz: f64) -> Result<()> {
        self.check_spin(j)?;
        self.check_spin(k)?;
        self.couplings[j][k] = hz;
        Ok(())
    }

    pub fn set_t2(&mut self, seconds: f64) {
        self.t2 = seconds;
    }

    /// Per-transition T2 for the ancilla line of register state `register`.
    pub fn set_t2_override(&mut self, register: Bits, seconds: f64) -> Result<()> {
        if register.width() != self.n_register {
            return Err(Error::LengthMismatch {
                expected: self.n_register,
                got: register.width(),
            });
        }
        self.t2_overrides.insert(register, seconds);
        Ok(())
    }

    pub fn n_register(&self) -> usize {
        self.n_register
    }

    /// Total spin count including the ancilla.
    pub fn spins(&self) -> usize {
        self.n_register + 1
    }

    pub fn dim(&self) -> usize {
        1 << self.spins()
    }

    pub fn offset(&self, spin: usize) -> f64 {
        self.offsets[spin]
    }

    pub fn coupling(&self, j: usize, k: usize) -> f64 {
        self.couplings[j][k]
    }

    /// Angular offset `ω_j = 2π·offset_j` in rad/s.
    pub fn omega(&self, spin: usize) -> f64 {
        2.0 * PI * self.offsets[spin]
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn t2_overrides(&self) -> &BTreeMap<Bits, f64> {
        &self.t2_overrides
    }

    pub fn t2_for(&self, register: Bits) -> f64 {
        self.t2_overrides.get(&register).copied().unwrap_or(self.t2)
    }

    /// Smallest T2 in use, which bounds the FID envelope.
    pub fn t2_min(&self) -> f64 {
        self.t2_overrides.values().copied().fold(self.t2, f64::min)
    }

    /// Largest T2 in use, which sets the narrowest line.
    pub fn t2_max(&self) -> f64 {
        self.t2_overrides.values().copied().fold(self.t2, f64::max)
    }

    /// Decay rate `λ = 1/T2` (s⁻¹) of the ancilla line for `register`.
    pub fn decay_rate(&self, register: Bits) -> f64 {
        1.0 / self.t2_for(register)
    }

    /// Absorption-mode full width at half maximum, `1/(π T2)` Hz, for the default T2.
    pub fn linewidth_hz(&self) -> f64 {
        1.0 / (PI * self.t2_min())
    }

    /// A copy keeping only the listed couplings, with all offsets zeroed.
    pub fn restricted_to(&self, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut out = Self::new(self.n_register)?;
        out.t2 = self.t2;
        out.t2_overrides = self.t2_overrides.clone();
        for &(j, k) in pairs {
            self.check_spin(j)?;
            self.check_spin(k)?;
            out.couplings[j][k] = self.couplings[j][k];
            out.couplings[k][j] = self.couplings[k][j];
        }
        Ok(out)
    }
}

fn embed_into(op: [[Complex64; 2]; 2], spin: usize, spins: usize, out: &mut DMatrix<Complex64>) {
    let shift = spins - 1 - spin;
    let mask = 1usize << shift;
    let dim = 1usize << spins;
    for row in 0..dim {
        let br = (row >> shift) & 1;
        for bc in 0..2 {
            let entry = op[br][bc];
            if entry != ZERO {
                let col = (row & !mask) | (bc << shift);
                out[(row, col)] += entry;
            }
        }
    }
}

/// Embeds a single-spin operator at `spin` with identities on every other spin.
pub fn embed_single_spin(kind: SingleSpin, spin: usize, system: &SpinSystem) -> Result<Operator> {
    system.check_spin(spin)?;
    let mut m = DMatrix::zeros(system.dim(), system.dim());
    embed_into(kind.matrix(), spin, system.spins(), &mut m);
    Ok(Operator(m))
}

/// Kronecker product of per-spin projector/identity factors, spin 0 first.
pub fn product_state(pattern: &[Factor]) -> Result<Operator> {
    if pattern.is_empty() {
        return Err(Error::LengthMismatch {
            expected: 1,
            got: 0,
        });
    }
    let mut diag = vec![1.0f64];
    for factor in pattern {
        let (a, b) = match factor {
            Factor::Alpha => (1.0, 0.0),
            Factor::Beta => (0.0, 1.0),
            Factor::Identity => (1.0, 1.0),
        };
        diag = diag.iter().flat_map(|&d| [d * a, d * b]).collect();
    }
    Ok(Operator::from_real_diagonal(&diag))
}

/// [`product_state`] with the pattern length checked against `system`.
pub fn product_state_for(system: &SpinSystem, pattern: &[Factor]) -> Result<Operator> {
    if pattern.len() != system.spins() {
        return Err(Error::LengthMismatch {
            expected: system.spins(),
            got: pattern.len(),
        });
    }
    product_state(pattern)
}

pub fn collective(kind: Collective, subset: &[usize], system: &SpinSystem) -> Result<Operator> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut m = DMatrix::zeros(system.dim(), system.dim());
    for &spin in subset {
        system.check_spin(spin)?;
        embed_into(kind.single().matrix(), spin, system.spins(), &mut m);
    }
    Ok(Operator(m))
}

/// Diagonal of embedded `I_z` for `spin`, read off the embedded operator.
fn iz_diagonal(spin: usize, system: &SpinSystem) -> Vec<f64> {
    let z = SingleSpin::Z.matrix();
    let shift = system.spins() - 1 - spin;
    (0..system.dim())
        .map(|idx| {
            let b = (idx >> shift) & 1;
            z[b][b].re
        })
        .collect()
}

/// Weak-coupling Hamiltonian `Σ_j ω_j I_jz + Σ_{k>j} 2π J_jk I_jz I_kz` in rad/s.
pub fn build_hamiltonian(system: &SpinSystem) -> Operator {
    let spins = system.spins();
    let iz: Vec<Vec<f64>> = (0..spins).map(|j| iz_diagonal(j, system)).collect();
    let mut diag = vec![0.0f64; system.dim()];
    for j in 0..spins {
        let w = system.omega(j);
        for (d, z) in diag.iter_mut().zip(&iz[j]) {
            *d += w * z;
        }
        for k in j + 1..spins {
            let c = 2.0 * PI * system.coupling(j, k);
            if c == 0.0 {
                continue;
            }
            for (idx, d) in diag.iter_mut().enumerate() {
                *d += c * iz[j][idx] * iz[k][idx];
            }
        }
    }
    Operator::from_real_diagonal(&diag)
}

fn parity_sign(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Closed-form eigen-energy (rad/s) of a product basis state.
pub fn eigen_energy(system: &SpinSystem, state: BasisState) -> f64 {
    let spins = system.spins();
    let mut e = 0.0;
    for j in 0..spins {
        let sj = parity_sign(state.bit(j));
        e += 0.5 * sj * system.omega(j);
        for k in j + 1..spins {
            let sk = parity_sign(state.bit(k));
            e += 0.5 * PI * system.coupling(j, k) * sj * sk;
        }
    }
    e
}

/// Ancilla line frequency (Hz) of register state `register`: `offset_0 + ½ Σ_k J_0k (−1)^{i_k}`.
pub fn ancilla_frequency(system: &SpinSystem, register: Bits) -> f64 {
    let split: f64 = (1..=system.n_register())
        .map(|k| 0.5 * system.coupling(0, k) * parity_sign(register.bit(k)))
        .sum();
    system.offset(0) + split
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransitionRow {
    pub register: Bits,
    pub freq_hz: f64,
}

/// Ancilla lines ordered left to right on a spectrum plot (descending frequency).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionTable {
    rows: Vec<TransitionRow>,
}

impl TransitionTable {
    /// Table without any degeneracy check.
    pub fn of(system: &SpinSystem) -> Self {
        let mut rows: Vec<TransitionRow> = Bits::all(system.n_register())
            .map(|register| TransitionRow {
                register,
                freq_hz: ancilla_frequency(system, register),
            })
            .collect();
        rows.sort_by(|a, b| {
            b.freq_hz
                .partial_cmp(&a.freq_hz)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.register.cmp(&b.register))
        });
        Self { rows }
    }

    pub fn rows(&self) -> &[TransitionRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn freq_of(&self, register: Bits) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.register == register)
            .map(|r| r.freq_hz)
    }

    /// Smallest gap between neighbouring lines and the pair that realises it.
    pub fn min_gap(&self) -> Option<(f64, Bits, Bits)> {
        self.rows
            .windows(2)
            .map(|w| (w[0].freq_hz - w[1].freq_hz, w[0].register, w[1].register))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))
    }

    /// (highest, lowest) line frequency.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.rows.first().map_or(0.0, |r| r.freq_hz),
            self.rows.last().map_or(0.0, |r| r.freq_hz),
        )
    }
}

fn too_close(gap: f64, resolution: f64) -> bool {
    gap == 0.0 || gap < resolution
}

/// Ancilla transition table, rejecting lines closer than `resolution` Hz.
pub fn transition_table(system: &SpinSystem, resolution: f64) -> Result<TransitionTable> {
    let table = TransitionTable::of(system);
    if let Some((gap, a, b)) = table.min_gap() {
        if too_close(gap, resolution) {
            return Err(Error::DegenerateTransitions {
                a: a.to_string(),
                b: b.to_string(),
                gap,
                resolution,
            });
        }
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Violation {
    RegisterSize(usize),
    AncillaDecoupled { spin: usize },
    Asymmetric { j: usize, k: usize },
    SelfCoupling { spin: usize },
    NonFinite(String),
    BadT2(f64),
    NearDegenerate { a: Bits, b: Bits, gap_hz: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RegisterSize(n) => write!(
                f,
                "register size {n} outside 1..={MAX_REGISTER_SPINS}"
            ),
            Violation::AncillaDecoupled { spin } => {
                write!(f, "ancilla decoupled from spin {spin}")
            }
            Violation::Asymmetric { j, k } => {
                write!(f, "coupling J.{j}.{k} differs from J.{k}.{j}")
            }
            Violation::SelfCoupling { spin } => {
                write!(f, "nonzero self-coupling on spin {spin}")
            }
            Violation::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Violation::BadT2(t2) => write!(f, "t2 must be positive, got {t2}"),
            Violation::NearDegenerate { a, b, gap_hz } => write!(
                f,
                "near-degenerate transitions {a} and {b} (gap {gap_hz:.4} Hz)"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub min_gap_hz: Option<f64>,
    pub resolution_hz: f64,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(self.violations))
        }
    }
}

/// Checks the working-medium assumptions: every register spin coupled to the
/// ancilla, symmetric couplings, and ancilla lines separated by more than `resolution` Hz.
pub fn validate(system: &SpinSystem, resolution: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let n = system.n_register();
    if n == 0 || n > MAX_REGISTER_SPINS {
        violations.push(Violation::RegisterSize(n));
    }
    if system.offsets.iter().any(|x| !x.is_finite()) {
        violations.push(Violation::NonFinite("offsets".into()));
    }
    if system.couplings.iter().flatten().any(|x| !x.is_finite()) {
        violations.push(Violation::NonFinite("couplings".into()));
    }
    if !(system.t2 > 0.0 && system.t2.is_finite()) {
        violations.push(Violation::BadT2(system.t2));
    }
    for &t2 in system.t2_overrides.values() {
        if !(t2 > 0.0 && t2.is_finite()) {
            violations.push(Violation::BadT2(t2));
        }
    }
    for j in 0..system.spins() {
        if system.coupling(j, j) != 0.0 {
            violations.push(Violation::SelfCoupling { spin: j });
        }
        for k in j + 1..system.spins() {
            if system.coupling(j, k) != system.coupling(k, j) {
                violations.push(Violation::Asymmetric { j, k });
            }
        }
    }
    for k in 1..=n {
        if system.coupling(0, k) == 0.0 {
            violations.push(Violation::AncillaDecoupled { spin: k });
        }
    }

    let table = TransitionTable::of(system);
    let min_gap = table.min_gap();
    for w in table.rows.windows(2) {
        let gap = w[0].freq_hz - w[1].freq_hz;
        if too_close(gap, resolution) {
            violations.push(Violation::NearDegenerate {
                a: w[0].register,
                b: w[1].register,
                gap_hz: gap,
            });
        }
    }

    ValidationReport {
        violations,
        min_gap_hz: min_gap.map(|g| g.0),
        resolution_hz: resolution,
    }
}
