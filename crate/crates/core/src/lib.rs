//! Simulation and security analysis of a quantum random cipher built on
//! coherent pulse position modulation with phase-mask encryption.
//!
//! The crate models PPM symbols as band-limited quantum Gaussian waveforms,
//! encrypts their mode amplitudes with keyed canonical (coherent-preserving)
//! unitaries, and quantifies what a heterodyne-measuring eavesdropper can
//! recover even when the secret key is handed over after her measurement.
//!
//! Module map:
//!
//! * [`waveform`] — PPM window spectra, mode amplitudes, envelopes, band
//!   energies, and the noise-bandwidth factor D.
//! * [`symplectic`] — the U(M) <-> O(2M) ∩ Sp(M, R) correspondence,
//!   canonical encryption of amplitudes, Gaussian mean/covariance
//!   transforms.
//! * [`keystream`] — bit-exact running-key derivation and phase masks.
//! * [`error_analysis`] — closed forms, quadrature, lower bounds, and the
//!   error exponent for both receivers.
//! * [`attack_sim`] — seeded Monte Carlo estimators, from the reduced
//!   Gaussian decoding model up to the full encrypt/measure/decrypt
//!   pipeline.
//! * [`verify`] — the named invariant suite behind the CLI's `verify`
//!   command.
//!
//! All numerical code is pure and thread-safe; Monte Carlo aggregation is
//! bit-identical for any thread count.

// guards of the form !(x > 0.0) deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack_sim;
pub mod error;
pub mod error_analysis;
pub mod keystream;
pub mod quad;
pub mod rng;
pub mod special;
pub mod symplectic;
pub mod verify;
pub mod waveform;

pub use error::{Error, Result};
