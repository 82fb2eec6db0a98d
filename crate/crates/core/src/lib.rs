//! Simulation of the building blocks of a measurement-induced cubic phase
//! gate: continuous-variable dense coding with EPR beams, a charge
//! integration photon detector (CIPD), and the circuit that composes an EPR
//! ancilla, photon counting, squeezing, QND coupling and homodyne readout.
//!
//! * [`gaussian`]: covariance-matrix engine (states, symplectic maps, loss,
//!   homodyne statistics and conditioning).
//! * [`fock`]: truncated number-basis engine (TMSV, photon counting,
//!   displacement/squeeze/cubic/QND unitaries, quadrature wavefunctions).
//! * [`dense_coding`]: EPR preparation, mirror encoding, Bell decoding,
//!   noise spectra and LO phase sweeps.
//! * [`cubic_phase`]: the post-selected cubic phase gate circuit.
//! * [`cipd`]: Monte Carlo signal chain of the photon detector.
//!
//! All quadratures use `ħ = 1`, `x = (a + a†)/√2`, so shot noise is a
//! variance of `1/2` and is the 0 dB reference of every noise figure.

// `!(x > 0.0)` also rejects NaN, which is the point of most parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cipd;
pub mod cubic_phase;
pub mod dense_coding;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod rng;
pub mod warning;

pub use error::{Error, Result};
pub use warning::NumericalWarning;

pub use num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/gaussian.md")]
    mod gaussian {}
    #[doc = include_str!("../../../book/src/fock.md")]
    mod fock {}
    #[doc = include_str!("../../../book/src/dense_coding.md")]
    mod dense_coding {}
    #[doc = include_str!("../../../book/src/cubic_phase.md")]
    mod cubic_phase {}
    #[doc = include_str!("../../../book/src/cipd.md")]
    mod cipd {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
}
