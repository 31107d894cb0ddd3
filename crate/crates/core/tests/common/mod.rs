#![allow(dead_code)]

use nmrfetch::acquire::AcqParams;
use nmrfetch::config::default_resolution;
use nmrfetch::oracle::MarkedSet;
use nmrfetch::spinops::{validate, Bits, SpinSystem};
use rand::Rng;

/// A random system whose ancilla lines pass validation at the default
/// resolution. Register-register couplings are small and optional.
pub fn random_system<R: Rng>(rng: &mut R, n: usize) -> SpinSystem {
    loop {
        let mut s = SpinSystem::new(n).unwrap();
        s.set_t2(rng.random_range(0.3..2.0));
        for j in 0..=n {
            s.set_offset(j, rng.random_range(-20.0..20.0)).unwrap();
        }
        for k in 1..=n {
            s.set_coupling(0, k, rng.random_range(5.0..90.0)).unwrap();
            for l in k + 1..=n {
                if rng.random_bool(0.5) {
                    s.set_coupling(k, l, rng.random_range(0.0..10.0)).unwrap();
                }
            }
        }
        let acq = AcqParams::auto(&s, s.offset(0));
        if validate(&s, default_resolution(&s, &acq)).is_ok() {
            return s;
        }
    }
}

pub fn random_marked<R: Rng>(rng: &mut R, n: usize) -> MarkedSet {
    let items = Bits::all(n).filter(|_| rng.random_bool(0.5));
    MarkedSet::new(n, items).unwrap()
}
