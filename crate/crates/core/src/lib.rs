//! Vibrational number statistics of a laser-driven trapped ion.
//!
//! The physical setting is a single ion in a harmonic trap, driven by
//! repeated cycles of optical pumping and an excitation pulse resonant with
//! the red vibrational sideband. Beyond the Lamb–Dicke regime the laser-ion
//! coupling carries a Franck–Condon-type nonlinearity `f(n; eta)` whose zeros
//! block further excitation; levels sitting on such a zero are trapping
//! states of the cycle dynamics in both the coherent and the
//! dephasing-dominated (incoherent) regime. Spontaneous photon recoil during
//! the pumping slowly heats the motion and makes those traps metastable.
//!
//! Module map:
//!
//! * [`specfun`] — Laguerre polynomials, the coupling function, displaced
//!   Fock probabilities, dipole-pattern averages.
//! * [`trapping`] — pulse-area and coupling-zero trapping conditions.
//! * [`rates`] — per-cycle excitation/survival probabilities in both regimes.
//! * [`engine`] — deterministic propagation: cycle kernels, recoil kernels,
//!   moments, the closed-form binomial regime.
//! * [`montecarlo`] — independent stochastic trajectories through the same
//!   cycle model, with reproducible parallel RNG streams.
//! * [`config`] — experiment description and its flat config-file format.
//! * [`io`] — CSV emission/parsing for all outputs.

pub mod config;
pub mod engine;
pub mod error;
pub mod io;
pub mod montecarlo;
pub mod rates;
pub mod specfun;
pub mod trapping;

pub use error::{Error, Result};
