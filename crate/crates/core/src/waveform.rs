//! Band-limited quantum Gaussian waveforms for pulse position modulation.
//!
//! A PPM symbol is a rectangular window of a carrier tone inside one of N
//! slots of the observation interval [0, T]. Everything here works in the
//! frequency-mode picture: the window's Fourier spectrum, the coherent mode
//! amplitudes it induces on a band of modes around the carrier, band
//! energies, baseband envelopes, and the noise-bandwidth factor D that
//! scales the eavesdropper's effective noise.
//!
//! Internally hbar = 1; frequencies only ever enter through ratios
//! omega_j / omega_c, so no physics is lost.

use crate::error::{Error, Result};
use crate::special::sinc;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Frequency-mode grid: observation interval T, carrier index j_c, and the
/// encrypted band J (positive mode indices, sorted, containing j_c).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct ModeGrid {
    t: f64,
    j_c: u64,
    modes: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    t: f64,
    j_c: u64,
    modes: Vec<u64>,
}

impl From<ModeGrid> for GridRepr {
    fn from(g: ModeGrid) -> Self {
        GridRepr {
            t: g.t,
            j_c: g.j_c,
            modes: g.modes,
        }
    }
}

impl TryFrom<GridRepr> for ModeGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        ModeGrid::from_modes(r.t, r.j_c, r.modes)
    }
}

impl ModeGrid {
    /// Explicit band. Indices must be positive; j_c must belong to the band.
    pub fn from_modes(t: f64, j_c: u64, mut modes: Vec<u64>) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::invalid("observation interval", format!("T = {t}")));
        }
        if j_c == 0 {
            return Err(Error::invalid("carrier index", "j_c must be positive"));
        }
        modes.sort_unstable();
        modes.dedup();
        if modes.is_empty() {
            return Err(Error::invalid("mode set", "band is empty"));
        }
        if modes[0] == 0 {
            return Err(Error::invalid("mode set", "mode indices must be positive"));
        }
        if !modes.contains(&j_c) {
            return Err(Error::invalid(
                "mode set",
                format!("carrier j_c = {j_c} not in band"),
            ));
        }
        Ok(ModeGrid { t, j_c, modes })
    }

    /// Symmetric band {j : |j - j_c| <= half_width}.
    pub fn symmetric(t: f64, j_c: u64, half_width: u64) -> Result<Self> {
        if half_width >= j_c {
            return Err(Error::invalid(
                "band",
                format!("half width {half_width} reaches j = 0 (j_c = {j_c})"),
            ));
        }
        let modes = (j_c - half_width..=j_c + half_width).collect();
        Self::from_modes(t, j_c, modes)
    }

    /// Main-lobe band for an N-slot PPM signal: |j - j_c| <= N - 1, so
    /// M = 2N - 1 modes.
    pub fn main_lobe(t: f64, j_c: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("pulse positions", "N must be positive"));
        }
        Self::symmetric(t, j_c, n - 1)
    }

    /// Band from a total (two-sided) bandwidth in Hz:
    /// {j > 0 : |j - j_c| < bandwidth * T / 2}, endpoints excluded.
    pub fn from_bandwidth(t: f64, j_c: u64, bandwidth_hz: f64) -> Result<Self> {
        if !(bandwidth_hz > 0.0) {
            return Err(Error::invalid("bandwidth", format!("{bandwidth_hz} Hz")));
        }
        let half = bandwidth_hz * t / 2.0;
        let lo = ((j_c as f64 - half).floor() as i64 + 1).max(1) as u64;
        let hi = (j_c as f64 + half).ceil() as u64 - 1;
        Self::from_modes(t, j_c, (lo..=hi).collect())
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn carrier_index(&self) -> u64 {
        self.j_c
    }

    pub fn modes(&self) -> &[u64] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn omega(&self, j: u64) -> f64 {
        TAU * j as f64 / self.t
    }

    pub fn omega_c(&self) -> f64 {
        self.omega(self.j_c)
    }
}

/// PPM symbol parameters: N slots, mean photon number S per pulse, and the
/// transmitted message (1-based slot index).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpmConfig {
    n: u64,
    s: f64,
    message: u64,
}

impl PpmConfig {
    pub fn new(n: u64, s: f64, message: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("pulse positions", "N must be positive"));
        }
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::invalid("photon number", format!("S = {s}")));
        }
        if message == 0 || message > n {
            return Err(Error::invalid(
                "message",
                format!("slot {message} outside 1..={n}"),
            ));
        }
        Ok(PpmConfig { n, s, message })
    }

    pub fn slots(&self) -> u64 {
        self.n
    }

    pub fn photon_number(&self) -> f64 {
        self.s
    }

    pub fn message(&self) -> u64 {
        self.message
    }

    pub fn with_message(&self, message: u64) -> Result<Self> {
        Self::new(self.n, self.s, message)
    }

    /// The exact band energy identity needs 2 j_c divisible by N; callers
    /// that rely on it can enforce the assumption here.
    pub fn check_divisibility(&self, grid: &ModeGrid) -> Result<()> {
        if !(2 * grid.carrier_index()).is_multiple_of(self.n) {
            return Err(Error::invalid(
                "carrier/slot ratio",
                format!(
                    "2 j_c = {} is not divisible by N = {}",
                    2 * grid.carrier_index(),
                    self.n
                ),
            ));
        }
        Ok(())
    }
}

/// Fourier coefficients of the slot indicator window, indexed by baseband
/// offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    grid: SpectrumKey,
    amps: Vec<(i64, f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumKey {
    pub n: u64,
    pub message: u64,
}

impl Spectrum {
    pub fn offsets(&self) -> impl Iterator<Item = i64> + '_ {
        self.amps.iter().map(|&(j, _, _)| j)
    }

    pub fn coefficient(&self, offset: i64) -> Option<Complex64> {
        self.amps
            .iter()
            .find(|&&(j, _, _)| j == offset)
            .map(|&(_, re, im)| Complex64::new(re, im))
    }

    pub fn entries(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.amps
            .iter()
            .map(|&(j, re, im)| (j, Complex64::new(re, im)))
    }
}

/// Fourier coefficient of the slot window: the offset-j coefficient is
/// (1/N) exp(-i pi j (2 l - 1) / N) sinc(j pi / N).
pub fn ppm_window_coefficient(cfg: &PpmConfig, offset: i64) -> Complex64 {
    let n = cfg.n as f64;
    let j = offset as f64;
    let magnitude = sinc(j * PI / n) / n;
    let phase = -PI * j * (2 * cfg.message as i64 - 1) as f64 / n;
    Complex64::from_polar(magnitude, phase)
}

/// Window spectrum sampled on a list of baseband offsets.
pub fn ppm_window_spectrum(cfg: &PpmConfig, offsets: &[i64]) -> Spectrum {
    let amps = offsets
        .iter()
        .map(|&j| {
            let d = ppm_window_coefficient(cfg, j);
            (j, d.re, d.im)
        })
        .collect();
    Spectrum {
        grid: SpectrumKey {
            n: cfg.n,
            message: cfg.message,
        },
        amps,
    }
}

/// Coherent amplitudes of a band-limited signal state, aligned with the
/// grid's mode list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AmpsRepr", into = "AmpsRepr")]
pub struct ModeAmplitudes {
    grid: ModeGrid,
    amps: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct AmpsRepr {
    grid: ModeGrid,
    amps: Vec<(u64, f64, f64)>,
}

impl From<ModeAmplitudes> for AmpsRepr {
    fn from(a: ModeAmplitudes) -> Self {
        let amps = a
            .grid
            .modes()
            .iter()
            .zip(&a.amps)
            .map(|(&j, z)| (j, z.re, z.im))
            .collect();
        AmpsRepr { grid: a.grid, amps }
    }
}

impl TryFrom<AmpsRepr> for ModeAmplitudes {
    type Error = Error;
    fn try_from(r: AmpsRepr) -> Result<Self> {
        let mut amps = vec![Complex64::new(0.0, 0.0); r.grid.len()];
        if r.amps.len() != r.grid.len() {
            return Err(Error::invalid(
                "amplitudes",
                format!("{} entries for {} modes", r.amps.len(), r.grid.len()),
            ));
        }
        for (j, re, im) in r.amps {
            let idx = r
                .grid
                .modes()
                .binary_search(&j)
                .map_err(|_| Error::invalid("amplitudes", format!("mode {j} not in grid")))?;
            amps[idx] = Complex64::new(re, im);
        }
        Ok(ModeAmplitudes { grid: r.grid, amps })
    }
}

impl ModeAmplitudes {
    pub fn new(grid: ModeGrid, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                operator: grid.len(),
                operand: amps.len(),
            });
        }
        Ok(ModeAmplitudes { grid, amps })
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn get(&self, j: u64) -> Option<Complex64> {
        self.grid
            .modes()
            .binary_search(&j)
            .ok()
            .map(|i| self.amps[i])
    }

    pub fn is_zero(&self) -> bool {
        self.amps.iter().all(|z| z.norm_sqr() == 0.0)
    }
}

/// Whether the image-band window coefficient d_{j + j_c} is kept. For a
/// narrowband carrier it is vanishingly small and dropped by default;
/// `Keep` exists for the exact energy bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageBand {
    Drop,
    Keep,
}

/// Build the coherent amplitudes of a PPM signal on a mode grid.
///
/// alpha_j = sqrt(omega_c / omega_j) sqrt(N S) conj(d_{j + j_c} + d_{j - j_c}),
/// with the image term subject to `image`.
pub fn build_ppm_signal_with(
    cfg: &PpmConfig,
    grid: &ModeGrid,
    image: ImageBand,
) -> Result<ModeAmplitudes> {
    if cfg.n > 2 * grid.carrier_index() {
        return Err(Error::WindowTooShort {
            n: cfg.n,
            two_jc: 2 * grid.carrier_index(),
        });
    }
    let j_c = grid.carrier_index() as i64;
    let root_ns = (cfg.n as f64 * cfg.s).sqrt();
    let amps = grid
        .modes()
        .iter()
        .map(|&j| {
            let lower = ppm_window_coefficient(cfg, j as i64 - j_c);
            let upper = match image {
                ImageBand::Drop => Complex64::new(0.0, 0.0),
                ImageBand::Keep => ppm_window_coefficient(cfg, j as i64 + j_c),
            };
            let weight = (grid.omega_c() / grid.omega(j)).sqrt();
            weight * root_ns * (lower + upper).conj()
        })
        .collect();
    ModeAmplitudes::new(grid.clone(), amps)
}

/// Narrowband PPM signal (image band dropped).
pub fn build_ppm_signal(cfg: &PpmConfig, grid: &ModeGrid) -> Result<ModeAmplitudes> {
    build_ppm_signal_with(cfg, grid, ImageBand::Drop)
}

/// exp(i 2 pi j shift / n) with the angle reduced in integer arithmetic,
/// so large mode indices lose no phase precision.
pub(crate) fn mode_phase(j: u64, shift: i64, n: u64) -> Complex64 {
    let reduced = (i128::from(j) * i128::from(shift)).rem_euclid(i128::from(n)) as f64;
    Complex64::from_polar(1.0, TAU * reduced / n as f64)
}

/// Check the time-shift covariance b_j = a_j exp(i 2 pi j (lb - la) / N)
/// on every band mode.
pub fn time_shift_check(
    a: &ModeAmplitudes,
    b: &ModeAmplitudes,
    la: u64,
    lb: u64,
    n: u64,
    tol: f64,
) -> Result<bool> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch {
            left: a.grid.len(),
            right: b.grid.len(),
        });
    }
    let shift = lb as i64 - la as i64;
    Ok(a
        .grid
        .modes()
        .iter()
        .zip(a.amps.iter().zip(&b.amps))
        .all(|(&j, (aj, bj))| (bj - aj * mode_phase(j, shift, n)).norm() <= tol))
}

/// Band energy sum over omega_j |alpha_j|^2 (hbar = 1). For a PPM signal it
/// approaches omega_c S from below as the band widens.
pub fn band_energy(a: &ModeAmplitudes) -> f64 {
    a.grid
        .modes()
        .iter()
        .zip(&a.amps)
        .map(|(&j, z)| a.grid.omega(j) * z.norm_sqr())
        .sum()
}

/// Complex baseband envelope sampled uniformly on [0, T): at t_k = k T /
/// samples,
///
///   e(t_k) = sum_j alpha_j sqrt(omega_j / omega_c) exp(-i (omega_j -
///   omega_c) t_k),
///
/// i.e. the optical carrier exp(-i omega_c t) is factored out.
pub fn synthesize_envelope(a: &ModeAmplitudes, samples: usize) -> Result<Vec<(f64, Complex64)>> {
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least 2"));
    }
    let t_total = a.grid.t();
    let j_c = a.grid.carrier_index() as i64;
    let weighted: Vec<(i64, Complex64)> = a
        .grid
        .modes()
        .iter()
        .zip(&a.amps)
        .map(|(&j, z)| {
            let w = (a.grid.omega(j) / a.grid.omega_c()).sqrt();
            (j as i64 - j_c, z * w)
        })
        .collect();
    Ok((0..samples)
        .map(|k| {
            let t = k as f64 * t_total / samples as f64;
            let e = weighted
                .iter()
                .map(|&(off, z)| z * Complex64::from_polar(1.0, -TAU * off as f64 * t / t_total))
                .sum();
            (t, e)
        })
        .collect())
}

/// Render an envelope as CSV with the `t,re,im,abs` header.
pub fn envelope_to_csv(envelope: &[(f64, Complex64)]) -> String {
    let mut s = String::from("t,re,im,abs\n");
    for (t, e) in envelope {
        s.push_str(&format!(
            "{t:.16e},{:.16e},{:.16e},{:.16e}\n",
            e.re,
            e.im,
            e.norm()
        ));
    }
    s
}

/// Noise-bandwidth factor
///
///   D = sum omega_j^2 |alpha_j|^2 / (omega_c sum omega_j |alpha_j|^2),
///
/// i.e. the ratio by which off-carrier band energy inflates the projected
/// heterodyne noise. Equals 1 exactly on symmetric PPM bands (the
/// odd-in-offset terms cancel because |d_m| = |d_-m|); pruning modes below
/// the carrier, as the positive-index constraint forces for wide bands,
/// can only raise it.
pub fn noise_bandwidth_factor(a: &ModeAmplitudes) -> Result<f64> {
    if a.is_zero() {
        return Err(Error::ZeroAmplitudes);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (&j, z) in a.grid.modes().iter().zip(&a.amps) {
        let w = a.grid.omega(j);
        num += z.norm_sqr() * w * w;
        den += z.norm_sqr() * w;
    }
    Ok(num / (den * a.grid.omega_c()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_for(n: u64, j_c: u64) -> ModeGrid {
        ModeGrid::main_lobe(1.0e-7, j_c, n).unwrap()
    }

    #[test]
    fn spectrum_dc_and_zeros() {
        // d_0 = 1/N; multiples of N vanish
        for n in [1u64, 2, 3, 5, 8, 97] {
            let cfg = PpmConfig::new(n, 1.0, 1).unwrap();
            let d0 = ppm_window_coefficient(&cfg, 0);
            assert!((d0 - Complex64::new(1.0 / n as f64, 0.0)).norm() < 1e-15);
            if n > 1 {
                for k in 1..4 {
                    let d = ppm_window_coefficient(&cfg, (k * n) as i64);
                    assert!(d.norm() < 1e-15, "N={n} j={}", k * n);
                }
            }
        }
    }

    #[test]
    fn spectrum_n2_l1_j1_matches_quadrature_oracle() {
        // independent oracle: midpoint-rule evaluation of
        // (1/T) int_0^{T/2} exp(-i 2 pi t / T) dt with T = 1
        let steps = 400_000;
        let mut oracle = Complex64::new(0.0, 0.0);
        for k in 0..steps {
            let t = (k as f64 + 0.5) / steps as f64 * 0.5;
            oracle += Complex64::from_polar(1.0, -TAU * t) * (0.5 / steps as f64);
        }
        let cfg = PpmConfig::new(2, 1.0, 1).unwrap();
        let d = ppm_window_coefficient(&cfg, 1);
        assert!((d - oracle).norm() < 1e-9, "d = {d}, oracle = {oracle}");
        // analytic value -i/pi
        assert!((d - Complex64::new(0.0, -1.0 / PI)).norm() < 1e-15);
    }

    #[test]
    fn spectrum_symmetry_and_parseval() {
        for n in [2u64, 3, 7, 16] {
            for l in 1..=n.min(4) {
                let cfg = PpmConfig::new(n, 1.0, l).unwrap();
                for j in 1..(4 * n as i64) {
                    let dp = ppm_window_coefficient(&cfg, j).norm();
                    let dm = ppm_window_coefficient(&cfg, -j).norm();
                    assert!((dp - dm).abs() < 1e-14);
                }
            }
        }
        // partial Parseval sum reaches 1/N
        let n = 5u64;
        let cfg = PpmConfig::new(n, 1.0, 2).unwrap();
        let k_max = 10_000 * n as i64;
        let sum: f64 = (-k_max..=k_max)
            .map(|j| ppm_window_coefficient(&cfg, j).norm_sqr())
            .sum();
        assert!((sum - 1.0 / n as f64).abs() < 1e-3 / n as f64 * 5.0, "sum {sum}");
    }

    #[test]
    fn zero_photon_signal_is_zero() {
        let cfg = PpmConfig::new(4, 0.0, 2).unwrap();
        let a = build_ppm_signal(&cfg, &grid_for(4, 1000)).unwrap();
        assert!(a.is_zero());
    }

    #[test]
    fn single_slot_populates_only_carrier() {
        let cfg = PpmConfig::new(1, 2.5, 1).unwrap();
        let grid = ModeGrid::symmetric(1.0e-7, 1000, 3).unwrap();
        let a = build_ppm_signal_with(&cfg, &grid, ImageBand::Keep).unwrap();
        for (&j, z) in grid.modes().iter().zip(a.amplitudes()) {
            if j == 1000 {
                assert!((z - Complex64::new(2.5f64.sqrt(), 0.0)).norm() < 1e-12);
            } else {
                assert!(z.norm() < 1e-15, "mode {j} populated: {z}");
            }
        }
        assert!((band_energy(&a) - grid.omega_c() * 2.5).abs() < 1e-9 * grid.omega_c());
    }

    #[test]
    fn window_too_short_is_rejected() {
        let grid = ModeGrid::symmetric(1.0e-7, 4, 2).unwrap();
        let cfg = PpmConfig::new(16, 1.0, 1).unwrap();
        assert!(matches!(
            build_ppm_signal(&cfg, &grid),
            Err(Error::WindowTooShort { .. })
        ));
    }

    #[test]
    fn shift_covariance_between_messages() {
        let n = 4u64;
        let grid = grid_for(n, 2000);
        let a1 = build_ppm_signal(&PpmConfig::new(n, 1.0, 1).unwrap(), &grid).unwrap();
        let a3 = build_ppm_signal(&PpmConfig::new(n, 1.0, 3).unwrap(), &grid).unwrap();
        assert!(time_shift_check(&a1, &a3, 1, 3, n, 1e-12).unwrap());
        assert!(time_shift_check(&a1, &a1, 1, 1, n, 1e-12).unwrap());

        // perturb one amplitude by 10x tolerance: must fail
        let mut amps = a3.amplitudes().to_vec();
        amps[1] += Complex64::new(1e-11, 0.0);
        let bad = ModeAmplitudes::new(grid.clone(), amps).unwrap();
        assert!(!time_shift_check(&a1, &bad, 1, 3, n, 1e-12).unwrap());

        // N=2 parity relation: alpha_j^2 = alpha_j^1 * (-1)^j; exact when
        // the carrier completes whole cycles per slot (j_c multiple of N)
        let g2 = grid_for(2, 1000);
        let b1 = build_ppm_signal(&PpmConfig::new(2, 1.0, 1).unwrap(), &g2).unwrap();
        let b2 = build_ppm_signal(&PpmConfig::new(2, 1.0, 2).unwrap(), &g2).unwrap();
        for (&j, (x, y)) in g2
            .modes()
            .iter()
            .zip(b1.amplitudes().iter().zip(b2.amplitudes()))
        {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            assert!((y - x * sign).norm() < 1e-12);
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = build_ppm_signal(&PpmConfig::new(4, 1.0, 1).unwrap(), &grid_for(4, 2000)).unwrap();
        let b = build_ppm_signal(&PpmConfig::new(4, 1.0, 1).unwrap(), &grid_for(4, 2004)).unwrap();
        assert!(matches!(
            time_shift_check(&a, &b, 1, 1, 4, 1e-12),
            Err(Error::GridMismatch { .. })
        ));
    }

    #[test]
    fn band_energy_truncation_oracle() {
        // truncated main lobe vs near-exhaustive series (|offset| <= 1e6)
        let n = 8u64;
        let s = 1.0;
        let j_c = 2_000_000u64; // keeps all offsets positive out to 1e6
        let cfg = PpmConfig::new(n, s, 1).unwrap();
        let t = 1.0e-7;

        let lobe = build_ppm_signal(&cfg, &ModeGrid::main_lobe(t, j_c, n).unwrap()).unwrap();
        let got = band_energy(&lobe);

        // oracle: sum omega_j |alpha_j|^2 = omega_c N S sum |d_m|^2 over the
        // narrowband series, m = j - j_c
        let omega_c = TAU * j_c as f64 / t;
        let mut reference_fraction = 0.0;
        for m in -(n as i64 - 1)..=(n as i64 - 1) {
            reference_fraction += ppm_window_coefficient(&cfg, m).norm_sqr();
        }
        let want = omega_c * n as f64 * s * reference_fraction;
        assert!((got - want).abs() < 1e-9 * want, "got {got}, want {want}");

        // near-exhaustive series approaches omega_c * S
        let mut full_fraction = 0.0;
        for m in -1_000_000i64..=1_000_000 {
            full_fraction += ppm_window_coefficient(&cfg, m).norm_sqr();
        }
        let full = omega_c * n as f64 * s * full_fraction;
        assert!((full - omega_c * s).abs() < 1e-4 * omega_c * s);
        assert!(got < full);
    }

    #[test]
    fn band_energy_monotone_and_bounded() {
        let n = 6u64;
        let cfg = PpmConfig::new(n, 1.5, 2).unwrap();
        let t = 1.0e-7;
        let j_c = 3000u64;
        assert!(cfg.check_divisibility(&ModeGrid::main_lobe(t, j_c, n).unwrap()).is_ok());
        let mut prev = 0.0;
        for half in [1u64, 2, 5, 10, 40, 200] {
            let grid = ModeGrid::symmetric(t, j_c, half).unwrap();
            let a = build_ppm_signal_with(&cfg, &grid, ImageBand::Keep).unwrap();
            let e = band_energy(&a);
            assert!(e + 1e-12 >= prev, "half {half}: {e} < {prev}");
            assert!(e <= grid.omega_c() * 1.5 + 1e-9, "half {half}: {e}");
            prev = e;
        }
    }

    #[test]
    fn envelope_constant_for_pure_carrier() {
        let grid = ModeGrid::symmetric(1.0e-7, 500, 0).unwrap();
        let a = ModeAmplitudes::new(grid, vec![Complex64::new(2.0f64.sqrt(), 0.0)]).unwrap();
        for (_, e) in synthesize_envelope(&a, 16).unwrap() {
            assert!((e.norm() - 2.0f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_approximates_slot_window() {
        let n = 4u64;
        let s = 1.0;
        let grid = ModeGrid::symmetric(1.0e-7, 40_000, 600).unwrap();
        let cfg = PpmConfig::new(n, s, 1).unwrap();
        let a = build_ppm_signal(&cfg, &grid).unwrap();
        let env = synthesize_envelope(&a, 256).unwrap();
        let target = (n as f64 * s).sqrt();
        for (t, e) in env {
            let frac = t / grid.t();
            // stay away from the window edges where Gibbs ripple lives
            if frac > 0.03 && frac < 0.22 {
                assert!((e.norm() - target).abs() < 0.05 * target, "t {t}: {}", e.norm());
            } else if frac > 0.28 {
                assert!(e.norm() < 0.05 * target, "t {t}: {}", e.norm());
            }
        }
    }

    #[test]
    fn envelope_parseval() {
        let n = 8u64;
        let grid = ModeGrid::main_lobe(1.0e-7, 10_000, n).unwrap();
        let cfg = PpmConfig::new(n, 2.0, 3).unwrap();
        let plain = build_ppm_signal(&cfg, &grid).unwrap();
        // phase-masked variant: same energies, scrambled envelope
        let thetas: Vec<f64> = (0..grid.len()).map(|i| 0.7 * i as f64).collect();
        let mask = crate::symplectic::ComplexUnitary::phase_mask(&thetas);
        let masked = crate::symplectic::apply_encryption(&mask, &plain).unwrap();

        let samples = 8 * grid.len();
        let dt = grid.t() / samples as f64;
        for sig in [&plain, &masked] {
            let env = synthesize_envelope(sig, samples).unwrap();
            let energy: f64 = env.iter().map(|(_, e)| e.norm_sqr() * dt).sum();
            let want = band_energy(sig) * grid.t() / grid.omega_c();
            assert!((energy - want).abs() < 0.01 * want, "{energy} vs {want}");
        }
        assert!((band_energy(&masked) - band_energy(&plain)).abs() < 1e-9 * band_energy(&plain));
    }

    #[test]
    fn noise_bandwidth_factor_cases() {
        // single carrier mode: D = 1 exactly
        let grid = ModeGrid::symmetric(1.0e-7, 500, 0).unwrap();
        let a = ModeAmplitudes::new(grid, vec![Complex64::new(1.0, 0.0)]).unwrap();
        assert!((noise_bandwidth_factor(&a).unwrap() - 1.0).abs() < 1e-15);

        // symmetric main lobe: odd terms cancel, D = 1 to 1e-12
        let n = 8u64;
        let grid = ModeGrid::main_lobe(1.0e-7, 4000, n).unwrap();
        let sig = build_ppm_signal(&PpmConfig::new(n, 1.0, 1).unwrap(), &grid).unwrap();
        assert!((noise_bandwidth_factor(&sig).unwrap() - 1.0).abs() < 1e-12);

        // asymmetric two-mode band {0, +1}: direct evaluation
        let n = 4u64;
        let j_c = 1000u64;
        let cfg = PpmConfig::new(n, 1.0, 1).unwrap();
        let grid = ModeGrid::from_modes(1.0e-7, j_c, vec![j_c, j_c + 1]).unwrap();
        let sig = build_ppm_signal(&cfg, &grid).unwrap();
        let d = noise_bandwidth_factor(&sig).unwrap();
        let d0 = ppm_window_coefficient(&cfg, 0).norm_sqr();
        let d1 = ppm_window_coefficient(&cfg, 1).norm_sqr();
        let jc = j_c as f64;
        let want = (d0 * jc + d1 * (jc + 1.0)) / ((d0 + d1) * jc);
        assert!((d - want).abs() < 1e-12);
        assert!(d > 1.0);

        // all-zero amplitudes are an error
        let z = ModeAmplitudes::new(
            ModeGrid::symmetric(1.0e-7, 500, 0).unwrap(),
            vec![Complex64::new(0.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(noise_bandwidth_factor(&z), Err(Error::ZeroAmplitudes)));
    }

    #[test]
    fn noise_bandwidth_factor_at_least_one() {
        // D = 1 on symmetric windows; dropping the sub-carrier partners
        // (the positive-index constraint) or extending only upward can
        // only raise it
        let cfg = PpmConfig::new(6, 1.0, 2).unwrap();
        let cases: [(u64, Vec<u64>); 4] = [
            (3000, (2997..=3003).collect()),      // symmetric
            (4, (1..=9).collect()),               // symmetric window pruned at j = 0
            (5, (1..=12).collect()),              // wider pruned window
            (3000, vec![3000, 3001, 3002]),       // upward-only band
        ];
        for (j_c, band) in cases {
            let grid = ModeGrid::from_modes(1.0e-7, j_c, band.clone()).unwrap();
            let sig = build_ppm_signal(&cfg, &grid).unwrap();
            let d = noise_bandwidth_factor(&sig).unwrap();
            assert!(d >= 1.0 - 1e-12, "j_c {j_c}, band {band:?}: D = {d}");
        }
    }

    #[test]
    fn divisibility_assumption_check() {
        let cfg = PpmConfig::new(8, 1.0, 1).unwrap();
        assert!(cfg.check_divisibility(&grid_for(8, 4000)).is_ok());
        // 2 * 20_000_000 mod 97 = 13: the exact-energy assumption fails
        let cfg97 = PpmConfig::new(97, 1.0, 1).unwrap();
        assert!(cfg97
            .check_divisibility(&ModeGrid::main_lobe(1.0e-7, 20_000_000, 97).unwrap())
            .is_err());
    }

    #[test]
    fn grid_construction_rules() {
        assert!(ModeGrid::from_modes(1.0, 5, vec![1, 2, 3]).is_err()); // j_c missing
        assert!(ModeGrid::from_modes(1.0, 2, vec![0, 1, 2]).is_err()); // zero mode
        assert!(ModeGrid::symmetric(1.0, 3, 3).is_err()); // reaches j = 0
        assert!(ModeGrid::from_modes(-1.0, 2, vec![1, 2, 3]).is_err());

        let g = ModeGrid::from_bandwidth(1.0e-7, 20_000_000, 1.0e9).unwrap();
        assert_eq!(g.len(), 99); // |j - j_c| < 50, endpoints excluded
        assert_eq!(g.modes()[0], 20_000_000 - 49);
    }

    #[test]
    fn envelope_csv_shape() {
        let grid = ModeGrid::symmetric(1.0e-7, 500, 0).unwrap();
        let a = ModeAmplitudes::new(grid, vec![Complex64::new(1.0, -2.0)]).unwrap();
        let csv = envelope_to_csv(&synthesize_envelope(&a, 4).unwrap());
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,re,im,abs"));
        assert_eq!(lines.count(), 4);
    }

    #[test]
    fn serialization_round_trip() {
        let grid = ModeGrid::main_lobe(1.0e-7, 2000, 3).unwrap();
        let a = build_ppm_signal(&PpmConfig::new(3, 1.0, 2).unwrap(), &grid).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.contains("\"grid\""));
        assert!(json.contains("\"amps\""));
        let back: ModeAmplitudes = serde_json::from_str(&json).unwrap();
        assert_eq!(a, back);

        let spec = ppm_window_spectrum(&PpmConfig::new(3, 1.0, 2).unwrap(), &[-2, 0, 5]);
        let sjson = serde_json::to_string(&spec).unwrap();
        let sback: Spectrum = serde_json::from_str(&sjson).unwrap();
        assert_eq!(spec, sback);
    }
}
