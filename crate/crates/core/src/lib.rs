//! Effective static Hamiltonians and renormalized observables for a
//! microwave-driven weakly anharmonic qubit (transmon) coupled to a single
//! quantized resonator mode.
//!
//! The library builds the driven system's effective static Hamiltonians by
//! a non-recursive sequence of frame transformations (counter-rotating
//! drive elimination, eigenbasis transform, rotating-frame reduction,
//! assigned diagonalization, frame restoration), and derives from them the
//! experimentally accessible quantities: Stark and Lamb shifts,
//! cross-nonlinearities, renormalized dipole elements, Rabi frequencies and
//! coherence times. A brute-force Lindblad spectral solver provides an
//! independent validation path.
//!
//! Conventions: every frequency-valued input and output is linear (a value
//! of `5.89` means 5.89 GHz = ω/2π); times are in ns. Angular factors enter
//! only inside time evolution.

pub mod error;
pub mod coupled;
pub mod criteria;
pub mod device;
pub mod observables;
pub mod oracle;
pub mod operator;
pub mod transmon;
pub mod two_state;

pub use error::{Error, Result};
