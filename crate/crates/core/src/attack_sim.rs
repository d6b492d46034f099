//! Seeded Monte Carlo simulation of the heterodyne attack and of the
//! photon-counting receiver.
//!
//! Three estimators of the eavesdropper's symbol error coexist:
//!
//! * `simulate_eve_reduced` — the N-coordinate Gaussian decoding model
//!   (one shifted coordinate, argmax decoding), direct.
//! * `simulate_eve_conditional` — samples only the signal coordinate and
//!   averages 1 - Phi(y)^(N-1); unbiased for the same quantity with far
//!   lower variance, and usable when N is astronomically large.
//! * `HeterodynePipeline` — the full encrypt / measure / decrypt / project /
//!   decode chain on band-limited mode amplitudes, which validates the
//!   reduction end to end.
//!
//! Every trial's randomness comes from a counter-based stream keyed by
//! (seed, trial index), and aggregation walks fixed-size chunks in index
//! order, so results are bit-identical for any thread count.

use crate::error::{Error, Result};
use crate::keystream::{derive_running_key, phase_mask_from_key, SecretKey};
use crate::rng::CounterRng;
use crate::special::ln_normal_cdf;
use crate::symplectic::ComplexUnitary;
use crate::waveform::{band_energy, build_ppm_signal, noise_bandwidth_factor, ModeGrid, PpmConfig};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Shared Monte Carlo parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub trials: u64,
    pub seed: u64,
    /// Pin the transmitted message (1-based) instead of drawing it
    /// uniformly; used by the message-independence checks.
    pub fixed_message: Option<u64>,
}

impl TrialConfig {
    pub fn new(trials: u64, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::invalid("trials", "need at least 1"));
        }
        Ok(TrialConfig {
            trials,
            seed,
            fixed_message: None,
        })
    }

    pub fn with_fixed_message(mut self, message: u64) -> Self {
        self.fixed_message = Some(message);
        self
    }
}

/// Per-sent-message tally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MessageTally {
    pub sent: u64,
    pub errors: u64,
}

/// Aggregate of a Monte Carlo run.
///
/// For decoding estimators `p_hat = errors / trials` and the histogram of
/// decoded slots sums to `trials`. The conditional estimator averages a
/// continuous variable instead; it reports `p_hat` and `stderr` with
/// `errors = 0` and no histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trials: u64,
    pub errors: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub decode_histogram: Vec<u64>,
    pub per_message: Vec<MessageTally>,
}

#[derive(Clone)]
struct CountPartial {
    errors: u64,
    histogram: Vec<u64>,
    per_message: Vec<MessageTally>,
}

fn chunk_size(n_slots: u64) -> u64 {
    4096.max(n_slots)
}

/// Run a decoding estimator: `per_trial` maps a trial index to the
/// (sent, decoded) pair, both 1-based.
fn run_counting<F>(trials: u64, n_slots: u64, per_trial: F) -> TrialResult
where
    F: Fn(u64) -> (u64, u64) + Sync,
{
    let chunk = chunk_size(n_slots);
    let chunks = trials.div_ceil(chunk);
    let partials: Vec<CountPartial> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = trials.min(lo + chunk);
            let mut p = CountPartial {
                errors: 0,
                histogram: vec![0; n_slots as usize],
                per_message: vec![MessageTally::default(); n_slots as usize],
            };
            for t in lo..hi {
                let (sent, decoded) = per_trial(t);
                p.histogram[(decoded - 1) as usize] += 1;
                p.per_message[(sent - 1) as usize].sent += 1;
                if sent != decoded {
                    p.errors += 1;
                    p.per_message[(sent - 1) as usize].errors += 1;
                }
            }
            p
        })
        .collect();

    let mut errors = 0u64;
    let mut histogram = vec![0u64; n_slots as usize];
    let mut per_message = vec![MessageTally::default(); n_slots as usize];
    for p in partials {
        errors += p.errors;
        for (h, v) in histogram.iter_mut().zip(&p.histogram) {
            *h += v;
        }
        for (m, v) in per_message.iter_mut().zip(&p.per_message) {
            m.sent += v.sent;
            m.errors += v.errors;
        }
    }
    let p_hat = errors as f64 / trials as f64;
    TrialResult {
        trials,
        errors,
        p_hat,
        stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        decode_histogram: histogram,
        per_message,
    }
}

/// Run a mean estimator of a bounded per-trial statistic.
fn run_mean<F>(trials: u64, per_trial: F) -> TrialResult
where
    F: Fn(u64) -> f64 + Sync,
{
    let chunk = chunk_size(0);
    let chunks = trials.div_ceil(chunk);
    let partials: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = trials.min(lo + chunk);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for t in lo..hi {
                let v = per_trial(t);
                sum += v;
                sum_sq += v * v;
            }
            (sum, sum_sq)
        })
        .collect();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (s, s2) in partials {
        sum += s;
        sum_sq += s2;
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = if trials > 1 {
        ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    TrialResult {
        trials,
        errors: 0,
        p_hat: mean,
        stderr: (var / n).sqrt(),
        decode_histogram: Vec::new(),
        per_message: Vec::new(),
    }
}

fn draw_message(rng: &mut CounterRng, n: u64, fixed: Option<u64>) -> u64 {
    match fixed {
        Some(l) => l,
        None => 1 + rng.next_index(n),
    }
}

/// Reduced decoding model: y = (w_1, ..., A + w_l, ..., w_N) with standard
/// normal w, maximum-likelihood (argmax) decoding.
pub fn simulate_eve_reduced(cfg: &TrialConfig, n: u64, amplitude: f64) -> Result<TrialResult> {
    if n == 0 {
        return Err(Error::invalid("pulse positions", "N must be positive"));
    }
    if let Some(l) = cfg.fixed_message {
        if l == 0 || l > n {
            return Err(Error::invalid("message", format!("slot {l} outside 1..={n}")));
        }
    }
    Ok(run_counting(cfg.trials, n, |trial| {
        let mut rng = CounterRng::for_trial(cfg.seed, trial);
        let sent = draw_message(&mut rng, n, cfg.fixed_message);
        let mut best_slot = 1u64;
        let mut best = f64::NEG_INFINITY;
        for k in 1..=n {
            let mut y = rng.next_gaussian();
            if k == sent {
                y += amplitude;
            }
            if y > best {
                best = y;
                best_slot = k;
            }
        }
        (sent, best_slot)
    }))
}

/// Conditional (Rao-Blackwellized) estimator: sample only the signal
/// coordinate y = A + w and average 1 - Phi(y)^(N-1). Accepts real N, so
/// it remains usable where enumerating N coordinates is unthinkable.
pub fn simulate_eve_conditional(cfg: &TrialConfig, n: f64, amplitude: f64) -> Result<TrialResult> {
    if !(n >= 1.0) {
        return Err(Error::invalid("pulse positions", format!("N = {n}")));
    }
    Ok(run_mean(cfg.trials, |trial| {
        let mut rng = CounterRng::for_trial(cfg.seed, trial);
        let y = amplitude + rng.next_gaussian();
        -((n - 1.0) * ln_normal_cdf(y)).exp_m1()
    }))
}

/// Photon-counting receiver: an error needs a zero-photon observation and
/// a wrong uniform guess.
pub fn simulate_bob_photon_count(n: u64, s: f64, trials: u64, seed: u64) -> Result<TrialResult> {
    if n == 0 {
        return Err(Error::invalid("pulse positions", "N must be positive"));
    }
    if !(s >= 0.0) {
        return Err(Error::invalid("photon number", format!("S = {s}")));
    }
    Ok(run_counting(trials, n, |trial| {
        let mut rng = CounterRng::for_trial(seed, trial);
        let sent = 1 + rng.next_index(n);
        let photons = rng.next_poisson(s);
        let decoded = if photons == 0 {
            1 + rng.next_index(n)
        } else {
            sent
        };
        (sent, decoded)
    }))
}

/// The full heterodyne attack: encrypt the PPM amplitudes with a per-trial
/// phase mask, add complex measurement noise (each quadrature has variance
/// 1/2), decrypt with the revealed key, project onto the normalized signal
/// basis, decode by argmax.
pub struct HeterodynePipeline {
    grid: ModeGrid,
    ppm: PpmConfig,
    key: SecretKey,
    nprime: u64,
    counter_base: u64,
    noise_scale: f64,
    /// alpha^l per message, aligned with the grid modes.
    signals: Vec<Vec<Complex64>>,
    /// Projection weights omega_j conj(alpha^k_j) / ||alpha^k||.
    projectors: Vec<Vec<Complex64>>,
    norms: Vec<f64>,
    d_factor: f64,
    band_photon_number: f64,
}

impl HeterodynePipeline {
    pub fn new(
        grid: ModeGrid,
        ppm: PpmConfig,
        key: SecretKey,
        nprime: u64,
        counter_base: u64,
    ) -> Result<Self> {
        if nprime == 0 || !nprime.is_multiple_of(ppm.slots()) {
            return Err(Error::ResolutionNotMultiple {
                nprime,
                n: ppm.slots(),
            });
        }
        let n = ppm.slots();
        let mut signals = Vec::with_capacity(n as usize);
        for l in 1..=n {
            let sig = build_ppm_signal(&ppm.with_message(l)?, &grid)?;
            signals.push(sig.amplitudes().to_vec());
        }
        let reference = build_ppm_signal(&ppm.with_message(1)?, &grid)?;
        if reference.is_zero() {
            return Err(Error::ZeroAmplitudes);
        }
        let d_factor = noise_bandwidth_factor(&reference)?;
        let band_photon_number = band_energy(&reference) / grid.omega_c();

        let omegas: Vec<f64> = grid.modes().iter().map(|&j| grid.omega(j)).collect();
        let mut projectors = Vec::with_capacity(n as usize);
        let mut norms = Vec::with_capacity(n as usize);
        for sig in &signals {
            let norm_sq: f64 = sig
                .iter()
                .zip(&omegas)
                .map(|(z, &w)| w * z.norm_sqr())
                .sum();
            let norm = norm_sq.sqrt();
            norms.push(norm);
            projectors.push(
                sig.iter()
                    .zip(&omegas)
                    .map(|(z, &w)| z.conj() * (w / norm))
                    .collect(),
            );
        }
        Ok(HeterodynePipeline {
            grid,
            ppm,
            key,
            nprime,
            counter_base,
            noise_scale: 1.0,
            signals,
            projectors,
            norms,
            d_factor,
            band_photon_number,
        })
    }

    /// Scale the measurement noise (0 disables it; used by the projection
    /// statistics checks).
    pub fn with_noise_scale(mut self, scale: f64) -> Self {
        self.noise_scale = scale;
        self
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn noise_bandwidth(&self) -> f64 {
        self.d_factor
    }

    /// Photon number actually captured by the band.
    pub fn band_photon_number(&self) -> f64 {
        self.band_photon_number
    }

    /// Norm of the in-band signal, sqrt(sum omega_j |alpha_j|^2).
    pub fn signal_norm(&self) -> f64 {
        self.norms[0]
    }

    /// Decoding amplitude sqrt(2 S / D) with the nominal photon number.
    pub fn nominal_amplitude(&self) -> f64 {
        (2.0 * self.ppm.photon_number() / self.d_factor).sqrt()
    }

    /// Decoding amplitude computed from the energy the band captures.
    pub fn effective_amplitude(&self) -> f64 {
        (2.0 * self.band_photon_number / self.d_factor).sqrt()
    }

    fn mask_for_trial(&self, trial: u64) -> ComplexUnitary {
        let rk = derive_running_key(
            &self.key,
            self.grid.len(),
            self.nprime,
            self.counter_base.wrapping_add(trial),
        )
        .expect("pipeline construction validated the key parameters");
        phase_mask_from_key(&rk, self.ppm.slots())
            .expect("pipeline construction validated N' | N")
    }

    /// One trial's raw projections: returns the sent message and the
    /// decoded coordinates (y_1, ..., y_N), unnormalized (units of
    /// sqrt(omega_c)).
    pub fn trial_projections(&self, seed: u64, trial: u64, fixed: Option<u64>) -> (u64, Vec<f64>) {
        let n = self.ppm.slots();
        let mut rng = CounterRng::for_trial(seed, trial);
        let sent = draw_message(&mut rng, n, fixed);

        let mask = self.mask_for_trial(trial);
        let encrypted = mask
            .apply(&self.signals[(sent - 1) as usize])
            .expect("dimensions fixed at construction");

        // heterodyne outcome: coherent amplitude plus circular complex
        // noise, variance 1/2 per quadrature
        let sigma = 0.5f64.sqrt() * self.noise_scale;
        let measured: Vec<Complex64> = encrypted
            .iter()
            .map(|z| {
                z + Complex64::new(sigma * rng.next_gaussian(), sigma * rng.next_gaussian())
            })
            .collect();

        let decrypted = mask
            .adjoint()
            .apply(&measured)
            .expect("dimensions fixed at construction");

        let ys = self
            .projectors
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&decrypted)
                    .map(|(w, z)| (w * z).re)
                    .sum::<f64>()
            })
            .collect();
        (sent, ys)
    }

    pub fn simulate(&self, cfg: &TrialConfig) -> Result<TrialResult> {
        let n = self.ppm.slots();
        if let Some(l) = cfg.fixed_message {
            if l == 0 || l > n {
                return Err(Error::invalid("message", format!("slot {l} outside 1..={n}")));
            }
        }
        Ok(run_counting(cfg.trials, n, |trial| {
            let (sent, ys) = self.trial_projections(cfg.seed, trial, cfg.fixed_message);
            let mut best_slot = 1u64;
            let mut best = f64::NEG_INFINITY;
            for (i, &y) in ys.iter().enumerate() {
                if y > best {
                    best = y;
                    best_slot = i as u64 + 1;
                }
            }
            (sent, best_slot)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_analysis::eve_error_quadrature;
    use crate::special::normal_cdf;

    fn agree(a: &TrialResult, reference: f64, sigmas: f64) -> bool {
        (a.p_hat - reference).abs() <= sigmas * a.stderr.max(1e-12)
    }

    #[test]
    fn reduced_no_signal_is_random_guessing() {
        let cfg = TrialConfig::new(200_000, 11).unwrap();
        let r = simulate_eve_reduced(&cfg, 8, 0.0).unwrap();
        assert!(agree(&r, 0.875, 3.0), "p_hat {}", r.p_hat);
        assert_eq!(r.decode_histogram.iter().sum::<u64>(), r.trials);
    }

    #[test]
    fn reduced_matches_binary_closed_form() {
        let cfg = TrialConfig::new(400_000, 7).unwrap();
        let r = simulate_eve_reduced(&cfg, 2, 2.0).unwrap();
        let want = normal_cdf(-2f64.sqrt());
        assert!(agree(&r, want, 3.0), "p_hat {} want {want}", r.p_hat);
    }

    #[test]
    fn reduced_matches_quadrature() {
        let cfg = TrialConfig::new(200_000, 3).unwrap();
        let r = simulate_eve_reduced(&cfg, 64, 3.0).unwrap();
        let want = eve_error_quadrature(64.0, 3.0);
        assert!(agree(&r, want, 3.0), "p_hat {} want {want}", r.p_hat);
    }

    #[test]
    fn conditional_exact_mean_at_zero_amplitude() {
        // E[1 - Phi(w)^(N-1)] = 1 - 1/N
        let cfg = TrialConfig::new(300_000, 19).unwrap();
        let r = simulate_eve_conditional(&cfg, 4.0, 0.0).unwrap();
        assert!(agree(&r, 0.75, 3.0), "p_hat {}", r.p_hat);
        assert!(r.decode_histogram.is_empty());
    }

    #[test]
    fn conditional_handles_huge_n() {
        let cfg = TrialConfig::new(100_000, 23).unwrap();
        let n = 13.5f64.exp();
        let r = simulate_eve_conditional(&cfg, n, 3.0).unwrap();
        let want = eve_error_quadrature(n, 3.0);
        assert!(agree(&r, want, 3.0), "p_hat {} want {want}", r.p_hat);
    }

    #[test]
    fn estimators_cross_check() {
        let cfg = TrialConfig::new(150_000, 5).unwrap();
        let a = simulate_eve_reduced(&cfg, 8, 2.0).unwrap();
        let b = simulate_eve_conditional(&cfg, 8.0, 2.0).unwrap();
        let combined = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
        assert!(
            (a.p_hat - b.p_hat).abs() <= 3.0 * combined,
            "{} vs {}",
            a.p_hat,
            b.p_hat
        );
    }

    #[test]
    fn bob_photon_count_cases() {
        // S = 0: always guessing
        let r = simulate_bob_photon_count(4, 0.0, 100_000, 2).unwrap();
        assert!(agree(&r, 0.75, 3.0));
        // formula point
        let r = simulate_bob_photon_count(16, 2.0, 400_000, 4).unwrap();
        let want = (1.0 - 1.0 / 16.0) * (-2.0f64).exp();
        assert!(agree(&r, want, 3.0), "p_hat {} want {want}", r.p_hat);
        // huge S: photon always seen
        let r = simulate_bob_photon_count(8, 40.0, 1_000_000, 6).unwrap();
        assert_eq!(r.errors, 0);
    }

    #[test]
    fn message_independence() {
        let cfg = TrialConfig::new(400_000, 31).unwrap();
        let r = simulate_eve_reduced(&cfg, 8, 1.0).unwrap();
        let pooled = r.p_hat;
        for (i, tally) in r.per_message.iter().enumerate() {
            assert!(tally.sent > 0);
            let p = tally.errors as f64 / tally.sent as f64;
            let sigma = (pooled * (1.0 - pooled) / tally.sent as f64).sqrt();
            assert!(
                (p - pooled).abs() <= 4.0 * sigma,
                "slot {}: {p} vs {pooled}",
                i + 1
            );
        }

        // fixed-message runs reproduce the pooled rate too
        let fixed = TrialConfig::new(200_000, 37).unwrap().with_fixed_message(3);
        let rf = simulate_eve_reduced(&fixed, 8, 1.0).unwrap();
        let combined = (r.stderr.powi(2) + rf.stderr.powi(2)).sqrt();
        assert!((rf.p_hat - pooled).abs() <= 4.0 * combined);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = TrialConfig::new(50_000, 101).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_eve_reduced(&cfg, 8, 1.5).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| simulate_eve_reduced(&cfg, 8, 1.5).unwrap());
        assert_eq!(single, many);

        let c1 = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_eve_conditional(&cfg, 1.0e9, 2.5).unwrap());
        let c8 = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| simulate_eve_conditional(&cfg, 1.0e9, 2.5).unwrap());
        assert_eq!(c1, c8);
    }

    #[test]
    fn pipeline_noiseless_projection_is_diagonal() {
        let n = 4u64;
        let grid = ModeGrid::symmetric(1.0e-7, 10_000, 64).unwrap();
        let ppm = PpmConfig::new(n, 4.0, 1).unwrap();
        let key = SecretKey::new(vec![0xab, 0xcd]).unwrap();
        let pipe = HeterodynePipeline::new(grid, ppm, key, 4000, 0)
            .unwrap()
            .with_noise_scale(0.0);

        let norm = pipe.signal_norm();
        for l in 1..=n {
            let (_, ys) = pipe.trial_projections(9, l, Some(l));
            for (k, &y) in ys.iter().enumerate() {
                if k as u64 + 1 == l {
                    assert!((y - norm).abs() < 0.05 * norm, "diag {y} vs {norm}");
                } else {
                    assert!(y.abs() < 0.05 * norm, "off-diag {y}");
                }
            }
        }

        // zero errors without noise
        let cfg = TrialConfig::new(2_000, 55).unwrap();
        let r = pipe.simulate(&cfg).unwrap();
        assert_eq!(r.errors, 0);
    }

    #[test]
    fn pipeline_agrees_with_quadrature() {
        let n = 4u64;
        let s = 4.0;
        let grid = ModeGrid::symmetric(1.0e-7, 10_000, 64 * n).unwrap();
        let ppm = PpmConfig::new(n, s, 1).unwrap();
        let key = SecretKey::new(b"pipeline".to_vec()).unwrap();
        let pipe = HeterodynePipeline::new(grid, ppm, key, 9700 * 4, 0).unwrap();
        assert!((pipe.noise_bandwidth() - 1.0).abs() < 1e-12);

        let cfg = TrialConfig::new(30_000, 77).unwrap();
        let r = pipe.simulate(&cfg).unwrap();
        let want = eve_error_quadrature(n as f64, (2.0 * s / pipe.noise_bandwidth()).sqrt());
        assert!(
            (r.p_hat - want).abs() <= 3.0 * r.stderr,
            "p_hat {} want {want} stderr {}",
            r.p_hat,
            r.stderr
        );
    }

    #[test]
    fn pipeline_rejects_bad_resolution() {
        let grid = ModeGrid::main_lobe(1.0e-7, 1000, 4).unwrap();
        let ppm = PpmConfig::new(4, 1.0, 1).unwrap();
        let key = SecretKey::new(vec![1]).unwrap();
        assert!(matches!(
            HeterodynePipeline::new(grid, ppm, key, 9, 0),
            Err(Error::ResolutionNotMultiple { .. })
        ));
    }

    #[test]
    fn trial_config_validation() {
        assert!(TrialConfig::new(0, 1).is_err());
        let cfg = TrialConfig::new(10, 1).unwrap().with_fixed_message(9);
        assert!(simulate_eve_reduced(&cfg, 4, 1.0).is_err());
    }
}
