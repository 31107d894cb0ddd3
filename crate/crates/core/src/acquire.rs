//! Acquisition: the ancilla read pulse, FID synthesis from independent
//! per-transition precession and decay, and two routes to the spectrum.
//!
//! Both routes use the same detection operator, the ancilla raising operator
//! `I_0^+`. Its only nonzero elements connect `r = |0,i⟩` and `s = |1,i⟩`, so
//! each register state `i` contributes one line with residue `ρ_sr`,
//! frequency `ω_rs = E_r − E_s` and decay rate `1/T2`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::prep::{apply_pulse, Axis, DeviationDensity, Rotation, DIAGONAL_TOL};
use crate::spinops::{eigen_energy, BasisState, Bits, SpinSystem, TransitionTable};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcqParams {
    /// Seconds per sample.
    pub dwell: f64,
    /// Sample count, a power of two.
    pub points: usize,
    /// Rotating-frame origin in Hz.
    pub reference: f64,
    /// Overall signal constant.
    pub scale: f64,
}

pub const MIN_POINTS: usize = 16;
const MAX_AUTO_POINTS: usize = 1 << 22;

impl AcqParams {
    pub fn new(dwell: f64, points: usize) -> Result<Self> {
        let p = Self {
            dwell,
            points,
            reference: 0.0,
            scale: 1.0,
        };
        p.check()?;
        Ok(p)
    }

    pub fn with_reference(mut self, reference: f64) -> Self {
        self.reference = reference;
        self
    }

    pub fn check(&self) -> Result<()> {
        if !(self.dwell > 0.0 && self.dwell.is_finite()) {
            return Err(Error::Invalid(format!("dwell must be positive, got {}", self.dwell)));
        }
        if self.points < MIN_POINTS || !self.points.is_power_of_two() {
            return Err(Error::Invalid(format!(
                "points must be a power of two ≥ {MIN_POINTS}, got {}",
                self.points
            )));
        }
        if !self.reference.is_finite() || !self.scale.is_finite() {
            return Err(Error::Invalid("non-finite reference or scale".into()));
        }
        Ok(())
    }

    pub fn spectral_width(&self) -> f64 {
        1.0 / self.dwell
    }

    /// Frequency spacing of the DFT grid.
    pub fn resolution(&self) -> f64 {
        1.0 / (self.points as f64 * self.dwell)
    }

    pub fn acquisition_time(&self) -> f64 {
        self.points as f64 * self.dwell
    }

    /// Parameters that resolve every ancilla line of `system`: the window holds
    /// the multiplet plus 20 linewidths of margin each side, the record lasts
    /// at least `10π·T2` (grid spacing ≤ FWHM/10, and far more than 5 T2).
    pub fn auto(system: &SpinSystem, reference: f64) -> Self {
        let table = TransitionTable::of(system);
        let (hi, lo) = table.extent();
        let reach = (hi - reference).abs().max((lo - reference).abs());
        let lw = system.linewidth_hz();
        let width = 2.0 * (reach + 20.0 * lw);
        // Round the window up to a power of two in Hz for tidy axes.
        let width = 2f64.powi(width.log2().ceil() as i32).max(1.0);
        let dwell = 1.0 / width;
        let record = 10.0 * PI * system.t2_max();
        let points = ((record / dwell).ceil() as usize)
            .next_power_of_two()
            .clamp(MIN_POINTS, MAX_AUTO_POINTS);
        Self {
            dwell,
            points,
            reference,
            scale: 1.0,
        }
    }

    /// The window must cover the multiplet span plus four linewidths.
    pub fn check_against(&self, system: &SpinSystem) -> Result<()> {
        self.check()?;
        let table = TransitionTable::of(system);
        let (hi, lo) = table.extent();
        let need = (hi - lo) + 4.0 * system.linewidth_hz();
        if self.spectral_width() <= need {
            return Err(Error::Invalid(format!(
                "spectral width {:.4} Hz does not exceed span plus four linewidths ({need:.4} Hz)",
                self.spectral_width()
            )));
        }
        for row in table.rows() {
            self.check_fold(row.freq_hz)?;
        }
        Ok(())
    }

    fn check_fold(&self, freq_hz: f64) -> Result<()> {
        let nyquist = 0.5 / self.dwell;
        if (freq_hz - self.reference).abs() >= nyquist {
            return Err(Error::SpectralFold {
                freq_hz,
                nyquist_hz: nyquist,
            });
        }
        Ok(())
    }
}

/// One observable ancilla line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Line {
    pub register: Bits,
    /// Absolute frequency in Hz.
    pub freq_hz: f64,
    /// `λ = 1/T2` in s⁻¹.
    pub decay: f64,
    /// `F^+_{rs} ρ_sr`.
    #[serde(serialize_with = "ser_complex")]
    pub residue: Complex64,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeTuple;
    let mut t = s.serialize_tuple(2)?;
    t.serialize_element(&z.re)?;
    t.serialize_element(&z.im)?;
    t.end()
}

/// The ancilla lines carried by `state`, in register order.
pub fn ancilla_lines(state: &DeviationDensity, system: &SpinSystem) -> Result<Vec<Line>> {
    if state.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: state.dim(),
        });
    }
    let m = state.matrix();
    Ok(Bits::all(system.n_register())
        .map(|register| {
            let r = BasisState::new(0, register);
            let s = BasisState::new(1, register);
            let omega = eigen_energy(system, r) - eigen_energy(system, s);
            Line {
                register,
                freq_hz: omega / (2.0 * PI),
                decay: system.decay_rate(register),
                residue: m.get(s.index(), r.index()),
            }
        })
        .collect())
}

/// `(π/2)_y` on the ancilla alone, turning its population differences into coherences.
pub fn readout_pulse(state: &DeviationDensity, system: &SpinSystem) -> Result<DeviationDensity> {
    let off = state.matrix().max_off_diagonal();
    if off > DIAGONAL_TOL {
        return Err(Error::NotDiagonal(off));
    }
    apply_pulse(state, &Rotation::new(Axis::Y, FRAC_PI_2, [0]), system)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fid {
    pub samples: Vec<Complex64>,
    pub dwell: f64,
    pub reference: f64,
}

impl Fid {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dwell
    }
}

/// `s_k = scale · Σ_rs F^+_rs ρ_sr exp{(i(ω_rs − 2π·ref) − λ_rs) k·dwell}`.
pub fn synthesize_fid(state: &DeviationDensity, system: &SpinSystem, params: &AcqParams) -> Result<Fid> {
    params.check()?;
    let lines = ancilla_lines(state, system)?;
    for line in lines.iter().filter(|l| l.residue != Complex64::new(0.0, 0.0)) {
        params.check_fold(line.freq_hz)?;
    }
    let samples = (0..params.points)
        .map(|k| {
            let t = k as f64 * params.dwell;
            let mut acc = Complex64::new(0.0, 0.0);
            for line in &lines {
                let w = 2.0 * PI * (line.freq_hz - params.reference);
                acc += line.residue * Complex64::new(-line.decay * t, w * t).exp();
            }
            acc * params.scale
        })
        .collect();
    Ok(Fid {
        samples,
        dwell: params.dwell,
        reference: params.reference,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Dft,
    ClosedForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
    pub provenance: Provenance,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }

    pub fn max_abs_real(&self) -> f64 {
        self.values.iter().map(|z| z.re.abs()).fold(0.0, f64::max)
    }

    /// Largest real-part difference against another spectrum on the same grid.
    pub fn max_real_deviation(&self, other: &Spectrum) -> f64 {
        assert_eq!(self.len(), other.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a.re - b.re).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_ascending(&self) -> bool {
        self.freqs.windows(2).all(|w| w[0] < w[1])
    }
}

/// Frequency axis of the DFT, ascending over `(−SW/2, +SW/2]` around `reference`.
pub fn dft_axis(points: usize, dwell: f64, reference: f64) -> Vec<f64> {
    let df = 1.0 / (points as f64 * dwell);
    let half = (points / 2) as i64;
    (-half + 1..=half).map(|k| reference + k as f64 * df).collect()
}

/// The sequence that is actually transformed: the FID with its `t = 0`
/// sample halved. A plain sum treats the first sample as a full-width strip
/// and adds a flat `dwell/2 · Σ residue` baseline to the real part.
pub fn trapezoid_weighted(fid: &Fid) -> Vec<Complex64> {
    let mut buf = fid.samples.clone();
    if let Some(first) = buf.first_mut() {
        *first *= 0.5;
    }
    buf
}

/// Discrete Fourier transform of the FID scaled by `dwell`, so line heights
/// approximate the continuous Lorentzians.
pub fn dft_spectrum(fid: &Fid) -> Result<Spectrum> {
    let n = fid.len();
    if n < MIN_POINTS {
        return Err(Error::Invalid(format!("FID has {n} points, need ≥ {MIN_POINTS}")));
    }
    let mut buf = trapezoid_weighted(fid);
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = (n / 2) as i64;
    let values = (-half + 1..=half)
        .map(|k| buf[k.rem_euclid(n as i64) as usize] * fid.dwell)
        .collect();
    Ok(Spectrum {
        freqs: dft_axis(n, fid.dwell, fid.reference),
        values,
        provenance: Provenance::Dft,
    })
}

/// `S(ω) = scale · Σ_rs F^+_rs ρ_sr / (iΔω_rs + λ_rs)` with `Δω_rs = 2π f − ω_rs`.
pub fn closed_form_spectrum(
    state: &DeviationDensity,
    system: &SpinSystem,
    grid: &[f64],
    scale: f64,
) -> Result<Spectrum> {
    let lines = ancilla_lines(state, system)?;
    let values = grid
        .iter()
        .map(|&f| {
            let mut acc = Complex64::new(0.0, 0.0);
            for line in &lines {
                let dw = 2.0 * PI * (f - line.freq_hz);
                acc += line.residue / Complex64::new(line.decay, dw);
            }
            acc * scale
        })
        .collect();
    Ok(Spectrum {
        freqs: grid.to_vec(),
        values,
        provenance: Provenance::ClosedForm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{apply_query, compile_oracle, MarkedSet};
    use crate::prep::{prepare_i0_alpha, thermal_state};
    use crate::spinops::{embed_single_spin, Operator, SingleSpin};

    fn lone(offset: f64, t2: f64) -> SpinSystem {
        let mut s = SpinSystem::new(0).unwrap();
        s.set_offset(0, offset).unwrap();
        s.set_t2(t2);
        s
    }

    fn post_query(marked: &str) -> (SpinSystem, DeviationDensity) {
        let s = SpinSystem::alanine();
        let rho = prepare_i0_alpha(&s).unwrap();
        let u = compile_oracle(&s, &MarkedSet::parse(marked, 2).unwrap()).unwrap();
        let q = apply_query(&rho, &u).unwrap();
        (s.clone(), readout_pulse(&q, &s).unwrap())
    }

    #[test]
    fn readout_pulse_examples() {
        let s = lone(0.0, 1.0);
        let z = DeviationDensity::new(embed_single_spin(SingleSpin::Z, 0, &s).unwrap());
        let x = embed_single_spin(SingleSpin::X, 0, &s).unwrap();
        assert!(readout_pulse(&z, &s).unwrap().matrix().max_abs_diff(&x) < 1e-12);

        // Register polarisation only: ancilla populations are equal.
        let a = SpinSystem::alanine();
        let iz1 = DeviationDensity::new(embed_single_spin(SingleSpin::Z, 1, &a).unwrap());
        let out = readout_pulse(&iz1, &a).unwrap();
        assert!(ancilla_lines(&out, &a).unwrap().iter().all(|l| l.residue.norm() < 1e-15));

        let (a, out) = post_query("10,11");
        let res: Vec<f64> = ancilla_lines(&out, &a).unwrap().iter().map(|l| l.residue.re).collect();
        // register order 00, 01, 10, 11
        let expect = [0.5, 0.5, -0.5, -0.5];
        for (r, e) in res.iter().zip(expect) {
            assert!((r - e).abs() < 1e-12);
        }
    }

    #[test]
    fn readout_pulse_rejects_coherences() {
        let s = lone(0.0, 1.0);
        let x = DeviationDensity::new(embed_single_spin(SingleSpin::X, 0, &s).unwrap());
        assert!(matches!(readout_pulse(&x, &s), Err(Error::NotDiagonal(_))));
    }

    #[test]
    fn zero_state_gives_zero_fid_and_spectrum() {
        let s = SpinSystem::alanine();
        let params = AcqParams::auto(&s, 0.0);
        let zero = DeviationDensity::new(Operator::zeros(8));
        let fid = synthesize_fid(&zero, &s, &params).unwrap();
        assert!(fid.samples.iter().all(|z| z.norm() == 0.0));
        let spec = dft_spectrum(&fid).unwrap();
        assert!(spec.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn single_line_fid() {
        let (f0, t2) = (12.5, 0.3);
        let s = lone(f0, t2);
        let x = DeviationDensity::new(embed_single_spin(SingleSpin::X, 0, &s).unwrap());
        let params = AcqParams::new(1.0 / 128.0, 256).unwrap();
        let fid = synthesize_fid(&x, &s, &params).unwrap();
        // residue ρ_10 of I_x is 1/2
        for (k, z) in fid.samples.iter().enumerate() {
            let t = k as f64 / 128.0;
            let expect = Complex64::new(-t / t2, 2.0 * PI * f0 * t).exp() * 0.5;
            assert!((z - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn alanine_fid_origin() {
        let (s, out) = post_query("10,11");
        let params = AcqParams::auto(&s, 0.0);
        let fid = synthesize_fid(&out, &s, &params).unwrap();
        // (+½ + ½ − ½ − ½) at t = 0
        assert!(fid.samples[0].norm() < 1e-12);
        let (_, none) = post_query("");
        let fid = synthesize_fid(&none, &s, &params).unwrap();
        assert!((fid.samples[0] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn folding_is_an_error() {
        let s = lone(100.0, 1.0);
        let x = DeviationDensity::new(embed_single_spin(SingleSpin::X, 0, &s).unwrap());
        let params = AcqParams::new(1.0 / 128.0, 64).unwrap();
        assert!(matches!(synthesize_fid(&x, &s, &params), Err(Error::SpectralFold { .. })));
    }

    #[test]
    fn bad_params_rejected() {
        assert!(AcqParams::new(0.0, 64).is_err());
        assert!(AcqParams::new(0.01, 8).is_err());
        assert!(AcqParams::new(0.01, 100).is_err());
    }

    #[test]
    fn dft_axis_shape() {
        let ax = dft_axis(16, 0.125, 0.0);
        assert_eq!(ax.len(), 16);
        assert!((ax[0] + 3.5).abs() < 1e-12);
        assert!((ax[15] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn agreement_at_the_smallest_budget() {
        // Window of exactly span + 20 linewidths, record just over 5 T2.
        for (marked, t2) in [("10,11", 1.0), ("00", 0.3), ("-", 0.5), ("01,10,11", 0.2)] {
            let mut s = SpinSystem::alanine();
            s.set_t2(t2);
            let q = compile_oracle(&s, &MarkedSet::parse(marked, 2).unwrap()).unwrap();
            let out = readout_pulse(&apply_query(&prepare_i0_alpha(&s).unwrap(), &q).unwrap(), &s).unwrap();
            let (hi, lo) = TransitionTable::of(&s).extent();
            let dwell = 1.0 / (hi - lo + 20.0 * s.linewidth_hz());
            let points = ((5.0 * t2 / dwell).ceil() as usize).next_power_of_two().max(MIN_POINTS);
            let params = AcqParams::new(dwell, points).unwrap();
            let dft = dft_spectrum(&synthesize_fid(&out, &s, &params).unwrap()).unwrap();
            let cf = closed_form_spectrum(&out, &s, &dft.freqs, 1.0).unwrap();
            let rel = dft.max_real_deviation(&cf) / cf.max_abs_real();
            assert!(rel <= 0.02, "marked {marked}, T2 {t2}: {rel}");
        }
    }

    #[test]
    fn parseval() {
        let (s, out) = post_query("10");
        let params = AcqParams::auto(&s, 0.0);
        let fid = synthesize_fid(&out, &s, &params).unwrap();
        let spec = dft_spectrum(&fid).unwrap();
        let time: f64 = trapezoid_weighted(&fid).iter().map(|z| z.norm_sqr()).sum::<f64>() * params.dwell;
        let freq: f64 = spec.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * params.resolution();
        assert!((time - freq).abs() <= 1e-6 * time);
    }

    #[test]
    fn single_tone_peak_matches_closed_form() {
        let (f0, t2) = (10.0, 0.5);
        let s = lone(f0, t2);
        let x = DeviationDensity::new(embed_single_spin(SingleSpin::X, 0, &s).unwrap());
        let params = AcqParams::auto(&s, 0.0);
        let dft = dft_spectrum(&synthesize_fid(&x, &s, &params).unwrap()).unwrap();
        let (imax, _) = dft
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.re.partial_cmp(&b.1.re).unwrap())
            .unwrap();
        assert!((dft.freqs[imax] - f0).abs() <= params.resolution());
        let cf = closed_form_spectrum(&x, &s, &dft.freqs, 1.0).unwrap();
        assert!(dft.max_real_deviation(&cf) <= 0.02 * cf.max_abs_real());
    }

    #[test]
    fn closed_form_peak_and_half_width() {
        let (f0, t2) = (3.0, 0.8);
        let s = lone(f0, t2);
        let x = DeviationDensity::new(embed_single_spin(SingleSpin::X, 0, &s).unwrap());
        let lambda = 1.0 / t2;
        let hw_hz = lambda / (2.0 * PI);
        let spec = closed_form_spectrum(&x, &s, &[f0, f0 + hw_hz, f0 - hw_hz], 1.0).unwrap();
        let peak = 0.5 / lambda;
        assert!((spec.values[0].re - peak).abs() < 1e-12);
        assert!(spec.values[0].im.abs() < 1e-12);
        assert!((spec.values[1].re - 0.5 * peak).abs() < 1e-12);
        assert!((spec.values[2].re - 0.5 * peak).abs() < 1e-12);
    }

    #[test]
    fn alanine_closed_form_lines() {
        let (s, out) = post_query("10,11");
        let grid = [44.65, 9.55, -9.55, -44.65];
        let spec = closed_form_spectrum(&out, &s, &grid, 1.0).unwrap();
        let re = spec.real();
        assert!(re[0] > 0.0 && re[1] < 0.0 && re[2] > 0.0 && re[3] < 0.0, "{re:?}");
        for r in re {
            assert!((r.abs() - 0.5).abs() < 1e-3);
        }
    }

    #[test]
    fn thermal_readout_lines_bounded_by_register_size() {
        let s = SpinSystem::alanine();
        let out = readout_pulse(&thermal_state(&s), &s).unwrap();
        let lines = ancilla_lines(&out, &s).unwrap();
        let nonzero = lines.iter().filter(|l| l.residue.norm() > 1e-12).count();
        assert!(nonzero <= 4);
    }

    #[test]
    fn auto_params_cover_alanine() {
        let s = SpinSystem::alanine();
        let p = AcqParams::auto(&s, 0.0);
        p.check_against(&s).unwrap();
        assert!(p.acquisition_time() >= 5.0 * s.t2());
        assert!(p.resolution() <= s.linewidth_hz() / 10.0);
    }
}
