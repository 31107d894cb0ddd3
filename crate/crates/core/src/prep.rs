//! State preparation: thermal deviation state, hard r.f. pulses, free
//! precession, an ideal gradient crusher, and the sequence that turns the
//! thermal state into `I_0^α`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spinops::{build_hamiltonian, BasisState, Operator, SingleSpin, SpinSystem};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tolerance on off-diagonal magnitude for treating a state as populations only.
pub const DIAGONAL_TOL: f64 = 1e-10;

/// Traceless deviation operator plus the scalar identity component it omits.
///
/// The identity part is invisible to detection and invariant under every
/// unitary, so it is carried only as `identity_offset` (full density =
/// `matrix + identity_offset · 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationDensity {
    matrix: Operator,
    identity_offset: f64,
}

impl DeviationDensity {
    pub fn new(matrix: Operator) -> Self {
        Self {
            matrix,
            identity_offset: 0.0,
        }
    }

    pub fn with_identity_offset(matrix: Operator, identity_offset: f64) -> Self {
        Self {
            matrix,
            identity_offset,
        }
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn identity_offset(&self) -> f64 {
        self.identity_offset
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `matrix + identity_offset · 1`.
    pub fn full_density(&self) -> Operator {
        let id = Operator::identity(self.dim()).scale(self.identity_offset);
        &self.matrix + &id
    }

    pub(crate) fn map_matrix(&self, f: impl FnOnce(&Operator) -> Operator) -> Self {
        Self {
            matrix: f(&self.matrix),
            identity_offset: self.identity_offset,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
    NegX,
    NegY,
    NegZ,
}

impl Axis {
    fn split(self) -> (SingleSpin, f64) {
        match self {
            Axis::X => (SingleSpin::X, 1.0),
            Axis::Y => (SingleSpin::Y, 1.0),
            Axis::Z => (SingleSpin::Z, 1.0),
            Axis::NegX => (SingleSpin::X, -1.0),
            Axis::NegY => (SingleSpin::Y, -1.0),
            Axis::NegZ => (SingleSpin::Z, -1.0),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::NegX => "-x",
            Axis::NegY => "-y",
            Axis::NegZ => "-z",
        })
    }
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "x" | "+x" => Ok(Axis::X),
            "y" | "+y" => Ok(Axis::Y),
            "z" | "+z" => Ok(Axis::Z),
            "-x" => Ok(Axis::NegX),
            "-y" => Ok(Axis::NegY),
            "-z" => Ok(Axis::NegZ),
            other => Err(format!("unknown axis {other:?}")),
        }
    }
}

/// Ideal hard pulse `exp(−i·angle·F_axis)` on a set of spins.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotation {
    pub axis: Axis,
    pub angle: f64,
    pub targets: Vec<usize>,
}

impl Rotation {
    pub fn new(axis: Axis, angle: f64, targets: impl Into<Vec<usize>>) -> Self {
        Self {
            axis,
            angle,
            targets: targets.into(),
        }
    }

    fn check(&self, system: &SpinSystem) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::EmptySubset);
        }
        if !self.angle.is_finite() {
            return Err(Error::Invalid(format!(
                "non-finite rotation angle {}",
                self.angle
            )));
        }
        for &t in &self.targets {
            if t >= system.spins() {
                return Err(Error::SpinIndex {
                    index: t,
                    spins: system.spins(),
                });
            }
        }
        Ok(())
    }

    /// The 2×2 single-spin factor `cos(θ/2)·1 − i sin(θ/2)·σ_axis`.
    fn single_spin_factor(&self) -> [[Complex64; 2]; 2] {
        let (op, sign) = self.axis.split();
        let theta = self.angle * sign;
        let (s, c) = (0.5 * theta).sin_cos();
        let m = op.matrix();
        let mut out = [[ZERO; 2]; 2];
        for r in 0..2 {
            for col in 0..2 {
                let id = if r == col { c } else { 0.0 };
                // σ = 2·I_axis
                out[r][col] = Complex64::new(id, 0.0) - Complex64::new(0.0, s) * (m[r][col] * 2.0);
            }
        }
        out
    }

    /// Dense unitary over the full space.
    pub fn unitary(&self, system: &SpinSystem) -> Result<Operator> {
        self.check(system)?;
        let factor = self.single_spin_factor();
        let mut u = Operator::identity(1);
        for spin in 0..system.spins() {
            let f = if self.targets.contains(&spin) {
                Operator::from_matrix(nalgebra::DMatrix::from_fn(2, 2, |r, c| factor[r][c]))
            } else {
                Operator::identity(2)
            };
            u = u.kron(&f);
        }
        Ok(u)
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let targets: Vec<String> = self.targets.iter().map(|t| t.to_string()).collect();
        write!(
            f,
            "pulse {} {} {}",
            self.axis,
            fmt_degrees(self.angle.to_degrees()),
            targets.join(",")
        )
    }
}

fn fmt_degrees(d: f64) -> String {
    if (d - d.round()).abs() < 1e-9 {
        format!("{}", d.round())
    } else {
        format!("{d}")
    }
}

/// Which terms of the Hamiltonian act during a delay.
#[derive(Clone, Debug, PartialEq)]
pub enum DelayMode {
    /// Offsets and every coupling.
    Full,
    /// Only the listed couplings; offsets and the remaining couplings are
    /// taken as refocused.
    Selective(Vec<(usize, usize)>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum PulseEvent {
    Rotation(Rotation),
    Delay { duration: f64, mode: DelayMode },
    Gradient,
}

impl fmt::Display for PulseEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PulseEvent::Rotation(r) => r.fmt(f),
            PulseEvent::Delay { duration, mode } => {
                write!(f, "delay {duration}")?;
                match mode {
                    DelayMode::Full => Ok(()),
                    DelayMode::Selective(pairs) => {
                        let p: Vec<String> =
                            pairs.iter().map(|(j, k)| format!("J.{j}.{k}")).collect();
                        write!(f, " {}", p.join(","))
                    }
                }
            }
            PulseEvent::Gradient => f.write_str("grad"),
        }
    }
}

/// Thermal deviation state `Σ_j I_jz` over ancilla and register.
pub fn thermal_state(system: &SpinSystem) -> DeviationDensity {
    let spins = system.spins();
    let diag: Vec<f64> = (0..system.dim())
        .map(|idx| {
            (0..spins)
                .map(|j| if (idx >> (spins - 1 - j)) & 1 == 0 { 0.5 } else { -0.5 })
                .sum()
        })
        .collect();
    DeviationDensity::new(Operator::from_real_diagonal(&diag))
}

/// `U ρ U†` for a 2×2 `u` acting on one spin, without forming the full unitary.
fn conjugate_local(rho: &mut nalgebra::DMatrix<Complex64>, u: &[[Complex64; 2]; 2], shift: usize) {
    let dim = rho.nrows();
    let mask = 1usize << shift;
    // rows: ρ ← U ρ
    for lo in (0..dim).filter(|i| i & mask == 0) {
        let hi = lo | mask;
        for c in 0..dim {
            let a = rho[(lo, c)];
            let b = rho[(hi, c)];
            rho[(lo, c)] = u[0][0] * a + u[0][1] * b;
            rho[(hi, c)] = u[1][0] * a + u[1][1] * b;
        }
    }
    // columns: ρ ← ρ U†
    for lo in (0..dim).filter(|i| i & mask == 0) {
        let hi = lo | mask;
        for r in 0..dim {
            let a = rho[(r, lo)];
            let b = rho[(r, hi)];
            rho[(r, lo)] = a * u[0][0].conj() + b * u[0][1].conj();
            rho[(r, hi)] = a * u[1][0].conj() + b * u[1][1].conj();
        }
    }
}

/// Applies `R ρ R†` with `R = exp(−i·angle·F_axis(targets))`.
pub fn apply_pulse(state: &DeviationDensity, pulse: &Rotation, system: &SpinSystem) -> Result<DeviationDensity> {
    pulse.check(system)?;
    if state.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: state.dim(),
        });
    }
    let u = pulse.single_spin_factor();
    let mut m = state.matrix().matrix().clone();
    let mut targets = pulse.targets.clone();
    targets.sort_unstable();
    targets.dedup();
    for t in targets {
        conjugate_local(&mut m, &u, system.spins() - 1 - t);
    }
    Ok(state.map_matrix(|_| Operator::from_matrix(m)))
}

/// Coherent evolution `e^{−iHt} ρ e^{+iHt}` under the full weak-coupling Hamiltonian, without relaxation.
pub fn free_evolve(state: &DeviationDensity, duration: f64, system: &SpinSystem) -> Result<DeviationDensity> {
    if !(duration >= 0.0) {
        return Err(Error::Invalid(format!("negative delay {duration}")));
    }
    if state.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: state.dim(),
        });
    }
    let e = build_hamiltonian(system).real_diagonal();
    let mut m = state.matrix().matrix().clone();
    let dim = m.nrows();
    for r in 0..dim {
        for c in 0..dim {
            if r != c {
                let phase = -(e[r] - e[c]) * duration;
                m[(r, c)] *= Complex64::from_polar(1.0, phase);
            }
        }
    }
    Ok(state.map_matrix(|_| Operator::from_matrix(m)))
}

/// Ideal crusher: zeroes every element with coherence order `p ≠ 0`.
pub fn gradient_crush(state: &DeviationDensity) -> DeviationDensity {
    let mut m = state.matrix().matrix().clone();
    let dim = m.nrows();
    for r in 0..dim {
        for c in 0..dim {
            if r.count_ones() != c.count_ones() {
                m[(r, c)] = ZERO;
            }
        }
    }
    state.map_matrix(|_| Operator::from_matrix(m))
}

pub fn apply_event(state: &DeviationDensity, event: &PulseEvent, system: &SpinSystem) -> Result<DeviationDensity> {
    match event {
        PulseEvent::Rotation(r) => apply_pulse(state, r, system),
        PulseEvent::Delay {
            duration,
            mode: DelayMode::Full,
        } => free_evolve(state, *duration, system),
        PulseEvent::Delay {
            duration,
            mode: DelayMode::Selective(pairs),
        } => free_evolve(state, *duration, &system.restricted_to(pairs)?),
        PulseEvent::Gradient => Ok(gradient_crush(state)),
    }
}

pub fn apply_sequence(state: &DeviationDensity, events: &[PulseEvent], system: &SpinSystem) -> Result<DeviationDensity> {
    events
        .iter()
        .try_fold(state.clone(), |s, e| apply_event(&s, e, system))
}

/// `(π/2)_y` on every register spin followed by a gradient.
pub fn i0_alpha_sequence(system: &SpinSystem) -> Vec<PulseEvent> {
    let register: Vec<usize> = (1..=system.n_register()).collect();
    let mut seq = Vec::new();
    if !register.is_empty() {
        seq.push(PulseEvent::Rotation(Rotation::new(Axis::Y, FRAC_PI_2, register)));
    }
    seq.push(PulseEvent::Gradient);
    seq
}

/// Prepares `I_0^α`: thermal state, register excitation, crush. The returned
/// matrix is `I_0z`; the `½·1` identity part is recorded as the offset.
pub fn prepare_i0_alpha(system: &SpinSystem) -> Result<DeviationDensity> {
    let out = apply_sequence(&thermal_state(system), &i0_alpha_sequence(system), system)?;
    Ok(DeviationDensity::with_identity_offset(out.matrix().clone(), 0.5))
}

/// Reads a diagonal state as weighted classical sub-ensembles, one per basis state.
pub fn sub_ensembles(state: &DeviationDensity, system: &SpinSystem) -> Result<Vec<(f64, BasisState)>> {
    if state.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: state.dim(),
        });
    }
    let off = state.matrix().max_off_diagonal();
    if off > DIAGONAL_TOL {
        return Err(Error::NotDiagonal(off));
    }
    Ok(state
        .full_density()
        .real_diagonal()
        .into_iter()
        .enumerate()
        .filter(|(_, w)| w.abs() > 1e-12)
        .map(|(idx, w)| (w, BasisState::from_index(idx, system.n_register())))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spinops::{embed_single_spin, product_state_for, Factor};
    use std::f64::consts::PI;

    fn lone(offset: f64) -> SpinSystem {
        let mut s = SpinSystem::new(0).unwrap();
        s.set_offset(0, offset).unwrap();
        s
    }

    fn op(kind: SingleSpin, spin: usize, s: &SpinSystem) -> Operator {
        embed_single_spin(kind, spin, s).unwrap()
    }

    #[test]
    fn thermal_state_examples() {
        let s = SpinSystem::new(2).unwrap();
        let t = thermal_state(&s);
        assert_eq!(
            t.matrix().real_diagonal(),
            vec![1.5, 0.5, 0.5, -0.5, 0.5, -0.5, -0.5, -1.5]
        );
        assert!(t.matrix().trace().norm() < 1e-15);
        assert_eq!(thermal_state(&lone(0.0)).matrix().real_diagonal(), vec![0.5, -0.5]);
    }

    #[test]
    fn y_pulse_turns_z_into_x() {
        let s = lone(0.0);
        let rho = DeviationDensity::new(op(SingleSpin::Z, 0, &s));
        let out = apply_pulse(&rho, &Rotation::new(Axis::Y, FRAC_PI_2, [0]), &s).unwrap();
        assert!(out.matrix().max_abs_diff(&op(SingleSpin::X, 0, &s)) < 1e-12);
    }

    #[test]
    fn zero_angle_is_identity() {
        let s = SpinSystem::alanine();
        let rho = thermal_state(&s);
        let out = apply_pulse(&rho, &Rotation::new(Axis::X, 0.0, [0, 1, 2]), &s).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn pi_x_inverts_z() {
        let s = lone(0.0);
        let rho = DeviationDensity::new(op(SingleSpin::Z, 0, &s));
        let out = apply_pulse(&rho, &Rotation::new(Axis::X, PI, [0]), &s).unwrap();
        assert!(out.matrix().max_abs_diff(&op(SingleSpin::Z, 0, &s).scale(-1.0)) < 1e-12);
    }

    #[test]
    fn empty_targets_rejected() {
        let s = lone(0.0);
        let rho = thermal_state(&s);
        assert!(matches!(
            apply_pulse(&rho, &Rotation::new(Axis::X, PI, Vec::new()), &s),
            Err(Error::EmptySubset)
        ));
    }

    #[test]
    fn free_evolution_examples() {
        let mut s = SpinSystem::alanine();
        s.set_offset(1, 13.0).unwrap();
        let rho = thermal_state(&s);
        assert_eq!(free_evolve(&rho, 0.0, &s).unwrap(), rho);
        assert!(free_evolve(&rho, 0.37, &s).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn free_precession_against_matrix_exponential() {
        // Independent route: nalgebra's general matrix exponential of −iHt.
        let f0 = 7.3;
        let t = 0.041;
        let s = lone(f0);
        let ix = op(SingleSpin::X, 0, &s);
        let iy = op(SingleSpin::Y, 0, &s);
        let h = build_hamiltonian(&s);
        let u = Operator::from_matrix(h.matrix().map(|z| z * Complex64::new(0.0, -t)).exp());
        let expect = ix.conjugate_by(&u);
        let got = free_evolve(&DeviationDensity::new(ix.clone()), t, &s).unwrap();
        assert!(got.matrix().max_abs_diff(&expect) < 1e-12);

        // I_x cos ωt + I_y sin ωt for this sign convention.
        let w = 2.0 * PI * f0 * t;
        let closed = &ix.scale(w.cos()) + &iy.scale(w.sin());
        assert!(got.matrix().max_abs_diff(&closed) < 1e-12);
    }

    #[test]
    fn crusher_examples() {
        let s = lone(0.0);
        let x = DeviationDensity::new(op(SingleSpin::X, 0, &s));
        assert!(gradient_crush(&x).matrix().max_abs() < 1e-15);

        let a = SpinSystem::alanine();
        let t = thermal_state(&a);
        assert_eq!(gradient_crush(&t), t);

        // Zero-quantum I_2^+ I_1^- survives; the single-quantum part does not.
        let zq = &op(SingleSpin::Raise, 2, &a) * &op(SingleSpin::Raise, 1, &a).adjoint();
        let mixed = DeviationDensity::new(&zq + &op(SingleSpin::X, 0, &a));
        let crushed = gradient_crush(&mixed);
        assert!(crushed.matrix().max_abs_diff(&zq) < 1e-15);
        assert_eq!(gradient_crush(&crushed), crushed);
    }

    #[test]
    fn prepared_i0_alpha_n2() {
        let s = SpinSystem::alanine();
        let p = prepare_i0_alpha(&s).unwrap();
        assert!(p.matrix().max_abs_diff(&Operator::from_real_diagonal(&[
            0.5, 0.5, 0.5, 0.5, -0.5, -0.5, -0.5, -0.5
        ])) < 1e-12);
        let expect = product_state_for(
            &s,
            &[Factor::Alpha, Factor::Identity, Factor::Identity],
        )
        .unwrap();
        assert!(p.full_density().max_abs_diff(&expect) < 1e-12);
        assert!(p.matrix().commutator_norm(&build_hamiltonian(&s)) < 1e-9);
    }

    #[test]
    fn sub_ensembles_of_i0_alpha() {
        let s = SpinSystem::alanine();
        let p = prepare_i0_alpha(&s).unwrap();
        let subs = sub_ensembles(&p, &s).unwrap();
        let got: Vec<(f64, String)> = subs.iter().map(|(w, b)| (*w, b.to_string())).collect();
        let expect: Vec<(f64, String)> = ["00", "01", "10", "11"]
            .iter()
            .map(|r| (1.0, format!("|0,{r}⟩")))
            .collect();
        assert_eq!(got.len(), 4);
        for ((w, b), (ew, eb)) in got.iter().zip(&expect) {
            assert!((w - ew).abs() < 1e-12);
            assert_eq!(b, eb);
        }
    }

    #[test]
    fn sub_ensembles_single_projector_and_rejection() {
        let s = SpinSystem::alanine();
        let p = product_state_for(&s, &[Factor::Alpha, Factor::Alpha, Factor::Alpha]).unwrap();
        let subs = sub_ensembles(&DeviationDensity::new(p), &s).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].0, 1.0);
        assert_eq!(subs[0].1.index(), 0);

        let x = DeviationDensity::new(op(SingleSpin::X, 0, &s));
        assert!(matches!(sub_ensembles(&x, &s), Err(Error::NotDiagonal(_))));
    }

    #[test]
    fn pulse_matches_dense_exponential() {
        let s = SpinSystem::alanine();
        let rho = thermal_state(&s);
        let rot = Rotation::new(Axis::NegX, 0.7, [0, 2]);
        let f = &op(SingleSpin::X, 0, &s) + &op(SingleSpin::X, 2, &s);
        let u = Operator::from_matrix(f.matrix().map(|z| z * Complex64::new(0.0, 0.7)).exp());
        let expect = rho.matrix().conjugate_by(&u);
        let got = apply_pulse(&rho, &rot, &s).unwrap();
        assert!(got.matrix().max_abs_diff(&expect) < 1e-12);
        assert!(rot.unitary(&s).unwrap().max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn axis_round_trip() {
        for a in [Axis::X, Axis::Y, Axis::Z, Axis::NegX, Axis::NegY, Axis::NegZ] {
            assert_eq!(a.to_string().parse::<Axis>().unwrap(), a);
        }
    }
}
