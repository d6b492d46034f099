//! Running-key derivation from a shared secret key.
//!
//! The derivation is a fixed 64-bit mixer (an FNV-style byte fold feeding a
//! SplitMix64 output stage) chosen for cross-platform bit-exactness, not for
//! cryptographic strength: the security analysis elsewhere in this crate
//! assumes the adversary is eventually handed the key anyway. The exact
//! recurrence is part of the public contract — test vectors downstream
//! depend on it byte for byte.

use crate::error::{Error, Result};
use crate::symplectic::ComplexUnitary;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub(crate) const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const FNV_OFFSET: u64 = 0xCBF2_9CE4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01B3;

/// SplitMix64 finalizer. All running-key and simulation randomness in this
/// crate bottoms out here.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Shared secret key, 1 to 64 octets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecretKey(Vec<u8>);

impl SecretKey {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self> {
        let bytes = bytes.into();
        if bytes.is_empty() || bytes.len() > 64 {
            return Err(Error::BadKeyLength { len: bytes.len() });
        }
        Ok(SecretKey(bytes))
    }

    pub fn bytes(&self) -> &[u8] {
        &self.0
    }

    /// FNV-style fold of the key bytes: s <- s * prime XOR byte.
    fn fold(&self) -> u64 {
        let mut s = FNV_OFFSET;
        for &b in &self.0 {
            s = s.wrapping_mul(FNV_PRIME) ^ u64::from(b);
        }
        s
    }
}

/// Per-symbol running key: M integers in [0, N').
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunningKey {
    nprime: u64,
    ks: Vec<u64>,
}

impl RunningKey {
    pub fn resolution(&self) -> u64 {
        self.nprime
    }

    pub fn values(&self) -> &[u64] {
        &self.ks
    }

    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }
}

/// Derive the running key k = (k_1, ..., k_M) for one symbol.
///
/// `counter` indexes the symbol within a stream so that successive symbols
/// get fresh masks. The recurrence, with all arithmetic mod 2^64:
///
/// ```text
/// s0   = fold(key) + counter * 0x9E3779B97F4A7C15
/// step = { s += 0x9E3779B97F4A7C15; k_m = splitmix_finalize(s) mod N' }
/// ```
pub fn derive_running_key(
    key: &SecretKey,
    m: usize,
    nprime: u64,
    counter: u64,
) -> Result<RunningKey> {
    if nprime == 0 {
        return Err(Error::ZeroResolution);
    }
    if m == 0 {
        return Err(Error::invalid("mode count", "M must be at least 1"));
    }
    let mut s = key.fold().wrapping_add(counter.wrapping_mul(GOLDEN));
    let ks = (0..m)
        .map(|_| {
            s = s.wrapping_add(GOLDEN);
            mix64(s) % nprime
        })
        .collect();
    Ok(RunningKey { nprime, ks })
}

/// Build the diagonal phase-mask unitary U(2 pi k_1 / N', ..., 2 pi k_M / N').
///
/// N' must be a multiple of the pulse-position count N so that the mask's
/// phase lattice refines the signal constellation.
pub fn phase_mask_from_key(rk: &RunningKey, n: u64) -> Result<ComplexUnitary> {
    if n == 0 || !rk.nprime.is_multiple_of(n) {
        return Err(Error::ResolutionNotMultiple {
            nprime: rk.nprime,
            n,
        });
    }
    let thetas: Vec<f64> = rk
        .ks
        .iter()
        .map(|&k| TAU * k as f64 / rk.nprime as f64)
        .collect();
    Ok(ComplexUnitary::phase_mask(&thetas))
}
