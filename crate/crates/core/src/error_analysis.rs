//! Error probabilities, bounds, and exponents for the legitimate receiver
//! and the heterodyne eavesdropper.
//!
//! Bob's probabilities are closed-form. Eve's symbol error
//!
//!   P_E = int phi(y - A) (1 - Phi(y)^(N-1)) dy
//!
//! is evaluated by adaptive Gauss-Kronrod quadrature with the power of the
//! normal CDF kept in the log domain, so N can be astronomically large
//! (e^25 and far beyond) without losing the tail. The product lower bound
//! and the exponent (sqrt R - sqrt C_E)^2 come from the same reliability
//! function argument, with each factor clamped at zero so the bound stays a
//! bound for every admissible f.

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{ln_normal_cdf, normal_pdf};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Absolute tolerance requested from the quadrature.
pub const QUAD_TOL: f64 = 1e-10;

fn clamp_probability(p: f64, context: &str) -> f64 {
    if !(0.0..=1.0).contains(&p) {
        if !(-1e-9..=1.0 + 1e-9).contains(&p) {
            log::warn!("{context}: clamping {p:e} into [0, 1]");
        } else {
            log::debug!("{context}: clamping {p:e} into [0, 1]");
        }
        p.clamp(0.0, 1.0)
    } else {
        p
    }
}

/// Optimum-receiver symbol error probability for N orthogonal coherent
/// pulses of mean photon number S:
///
///   (N-1)/N^2 [ sqrt(1 + (N-1) e^-S) - sqrt(1 - e^-S) ]^2.
///
/// Extends smoothly to real N >= 1.
pub fn bob_optimal_error(n: f64, s: f64) -> f64 {
    assert!(n >= 1.0 && s >= 0.0, "need N >= 1, S >= 0");
    let e = (-s).exp();
    let root = (1.0 + (n - 1.0) * e).sqrt() - (1.0 - e).sqrt();
    clamp_probability((n - 1.0) / (n * n) * root * root, "bob_optimal_error")
}

/// Photon-counting receiver error (1 - 1/N) e^-S: a miss happens only when
/// no photons arrive and the uniform guess is wrong.
pub fn bob_photon_count_error(n: f64, s: f64) -> f64 {
    assert!(n >= 1.0 && s >= 0.0, "need N >= 1, S >= 0");
    clamp_probability((1.0 - 1.0 / n) * (-s).exp(), "bob_photon_count_error")
}

/// Rate parametrization of the photon-counting error,
/// (1 - e^-RT) e^(-C_E T).
pub fn bob_photon_count_error_from_rates(r: f64, c_e: f64, t: f64) -> f64 {
    bob_photon_count_error((r * t).exp(), c_e * t)
}

/// Duration maximizing the photon-counting error: T = ln(1 + R/C_E) / R.
pub fn bob_peak_duration(r: f64, c_e: f64) -> f64 {
    (1.0 + r / c_e).ln() / r
}

/// 1 - Phi(y)^(N-1), evaluated as -expm1((N-1) ln Phi(y)).
fn miss_probability(n: f64, y: f64) -> f64 {
    -((n - 1.0) * ln_normal_cdf(y)).exp_m1()
}

/// Eve's symbol error probability by quadrature: the largest of N unit
/// Gaussians, one shifted to A, decides the symbol. Accepts real N >= 1
/// (curves over continuous duration extend N smoothly).
pub fn eve_error_quadrature(n: f64, a: f64) -> f64 {
    assert!(n >= 1.0 && a >= 0.0, "need N >= 1, A >= 0");
    if n == 1.0 {
        return 0.0;
    }
    let crossover = (2.0 * n.ln()).sqrt();
    let lower = a.min(0.0) - 12.0;
    let upper = a.max(crossover) + 12.0;
    // breakpoints at the density peak and the competition crossover keep
    // the adaptive rule from straddling both features in one panel
    let mut points = vec![lower, 0.0, a.min(crossover), a.max(crossover), upper];
    points.sort_by(|x, y| x.partial_cmp(y).unwrap());
    points.dedup();
    let integrand = |y: f64| normal_pdf(y - a) * miss_probability(n, y);
    let r = quad::integrate_segmented(&integrand, &points, QUAD_TOL);
    clamp_probability(r.value, "eve_error_quadrature")
}

/// Product lower bound on Eve's error at the split point y = sqrt(f ln N):
/// the probability that the signal coordinate falls below y while some
/// noise coordinate exceeds it. Each factor is clamped at zero, so the
/// result is a valid bound for every admissible f.
///
/// Requires f ln N > A^2, i.e. f > 2 C_E / R in rate terms.
pub fn eve_error_lower_bound(n: f64, a: f64, f: f64) -> Result<f64> {
    if !(n > 1.0) {
        return Err(Error::invalid(
            "pulse positions",
            format!("lower bound needs N > 1, got {n}"),
        ));
    }
    if !(f > 0.0) || !(a >= 0.0) {
        return Err(Error::invalid("bound parameters", format!("f = {f}, A = {a}")));
    }
    let ln_n = n.ln();
    if f * ln_n <= a * a {
        return Err(Error::InvalidF {
            f,
            threshold: a * a / ln_n,
        });
    }
    let y = (f * ln_n).sqrt();

    // 1 - exp[-(1 - 1/N)(1 - 1/(f ln N)) sqrt(N^(2-f) / (2 pi f ln N))],
    // with the inner power kept in log form so huge N cannot overflow.
    let log_scale = 0.5 * ((2.0 - f) * ln_n - (TAU * f * ln_n).ln());
    let weight = (1.0 - 1.0 / n) * (1.0 - 1.0 / (f * ln_n));
    let some_noise_above = 1.0 - (-weight * log_scale.exp()).exp();

    // 1 - exp(-(y - A)^2 / 2) / (sqrt(2 pi) (y - A))
    let gap = y - a;
    let signal_below = 1.0 - (-0.5 * gap * gap).exp() / (TAU.sqrt() * gap);

    Ok(some_noise_above.max(0.0) * signal_below.max(0.0))
}

/// Largest finite lower bound over a sample of admissible f values in
/// (2 C_E / R, 2); zero when the regime or every sampled f is vacuous.
pub fn best_lower_bound(n: f64, a: f64, f_lo: f64, f_samples: usize) -> f64 {
    if !(f_lo < 2.0) || f_samples == 0 || !(n > 1.0) {
        return 0.0;
    }
    let mut best = 0.0f64;
    for i in 0..f_samples {
        let f = f_lo + (2.0 - f_lo) * (i + 1) as f64 / (f_samples + 1) as f64;
        if let Ok(b) = eve_error_lower_bound(n, a, f) {
            best = best.max(b);
        }
    }
    best
}

/// Error exponent lower bound (sqrt R - sqrt C_E)^2, the optimum of the
/// product bound over 2 C_E / R < f < 2. Zero on the boundary R = C_E;
/// the regime R < C_E has no exponent and is an error.
pub fn exponent_bound(r: f64, c_e: f64) -> Result<f64> {
    if !(r > 0.0) || !(c_e > 0.0) {
        return Err(Error::invalid("rates", format!("R = {r}, C_E = {c_e}")));
    }
    if r < c_e {
        return Err(Error::Regime { r, c_e });
    }
    let root = r.sqrt() - c_e.sqrt();
    Ok(root * root)
}

/// Operating point of the system in rate terms. All error probabilities
/// depend only on (R T, C_E T, D), which is what makes the scale family
/// (g R, g C_E, T / g) equivalent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemRates {
    /// Transmission rate ln N / T [ebits/s].
    pub r: f64,
    /// Eavesdropper channel capacity P / D [ebits/s].
    pub c_e: f64,
    /// Signal duration [s].
    pub t: f64,
    /// Noise-bandwidth factor (>= 1).
    pub d: f64,
}

impl SystemRates {
    pub fn new(r: f64, c_e: f64, t: f64, d: f64) -> Result<Self> {
        if !(r > 0.0 && c_e > 0.0 && t > 0.0) {
            return Err(Error::invalid(
                "rates",
                format!("R = {r}, C_E = {c_e}, T = {t} must be positive"),
            ));
        }
        if !(d >= 1.0) {
            return Err(Error::invalid("noise-bandwidth factor", format!("D = {d} < 1")));
        }
        Ok(SystemRates { r, c_e, t, d })
    }

    /// Mean photon number S = P T = C_E D T.
    pub fn photon_number(&self) -> f64 {
        self.c_e * self.d * self.t
    }

    /// Real-valued N = e^{RT}.
    pub fn pulse_positions(&self) -> f64 {
        (self.r * self.t).exp()
    }

    /// Rounded N with a flag set when e^{RT} is more than 1e-6 away
    /// (relative) from the nearest integer.
    pub fn pulse_positions_rounded(&self) -> (f64, bool) {
        let n = self.pulse_positions();
        let rounded = n.round();
        let off = (n - rounded).abs() / rounded.max(1.0);
        if off > 1e-6 {
            log::warn!("e^(RT) = {n} is not integral (relative offset {off:.2e})");
        }
        (rounded, off > 1e-6)
    }

    /// Effective decoding amplitude A = sqrt(2 S / D) = sqrt(2 T C_E).
    pub fn amplitude(&self) -> f64 {
        (2.0 * self.t * self.c_e).sqrt()
    }

    /// Pulse duration T / N = T e^{-RT}.
    pub fn pulse_duration(&self) -> f64 {
        self.t * (-self.r * self.t).exp()
    }
}

/// Structured summary of the operating regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub rates: SystemRates,
    pub photon_number: f64,
    pub n_real: f64,
    pub n_rounded: f64,
    pub n_rounding_warning: bool,
    pub amplitude: f64,
    /// Strong converse condition C_E < R: Eve's error is forced to 1.
    pub strong_converse: bool,
    /// The equivalent photon-count form e^S < N.
    pub photon_condition: bool,
    /// The two conditions coincide exactly when D = 1.
    pub conditions_equivalent: bool,
    pub exponent_bound: Option<f64>,
    pub pulse_duration: f64,
    /// (g R, g C_E, T / g) reproduces identical error probabilities for any
    /// g > 0; only the pulse duration shrinks with g.
    pub scale_family: String,
    /// When D > 1 the beam-splitter variant of the cipher has a strictly
    /// smaller heterodyne bound; they coincide as D -> 1.
    pub beamsplitter_note: Option<String>,
}

pub fn regime_report(rates: &SystemRates) -> RegimeReport {
    let s = rates.photon_number();
    let n_real = rates.pulse_positions();
    let (n_rounded, warn) = rates.pulse_positions_rounded();
    let strong_converse = rates.c_e < rates.r;
    // e^S < N  <=>  S < ln N  <=>  C_E D < R
    let photon_condition = s < rates.r * rates.t;
    RegimeReport {
        rates: *rates,
        photon_number: s,
        n_real,
        n_rounded,
        n_rounding_warning: warn,
        amplitude: rates.amplitude(),
        strong_converse,
        photon_condition,
        conditions_equivalent: rates.d == 1.0,
        exponent_bound: exponent_bound(rates.r, rates.c_e).ok(),
        pulse_duration: rates.pulse_duration(),
        scale_family: format!(
            "identical error probabilities for (g*R, g*C_E, T/g), any g > 0; \
             pulse duration scales as 1/g (currently {:.6e} s)",
            rates.pulse_duration()
        ),
        beamsplitter_note: (rates.d > 1.0).then(|| {
            "D > 1: the beam-splitter cipher variant has a strictly smaller \
             heterodyne error bound; the two coincide as D -> 1"
                .to_string()
        }),
    }
}

/// One row of an error-probability sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    /// Real-valued N = e^{RT}.
    pub n: f64,
    pub p_b_opt: f64,
    pub p_b_count: f64,
    pub p_e_bar: f64,
    pub p_e_lower: f64,
    pub exponent_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub points: Vec<CurvePoint>,
}

/// Sweep the duration grid. Points are independent and evaluated in
/// parallel; the output order is the input order.
pub fn error_curve(rates_per_second: (f64, f64, f64), t_grid: &[f64], f_samples: usize) -> ErrorCurve {
    let (r, c_e, d) = rates_per_second;
    let exponent = exponent_bound(r, c_e).ok();
    let f_lo = 2.0 * c_e / r;
    let points = t_grid
        .par_iter()
        .map(|&t| {
            let n = (r * t).exp();
            let s = c_e * d * t;
            let a = (2.0 * c_e * t).sqrt();
            CurvePoint {
                t,
                n,
                p_b_opt: bob_optimal_error(n, s),
                p_b_count: bob_photon_count_error(n, s),
                p_e_bar: eve_error_quadrature(n, a),
                p_e_lower: best_lower_bound(n, a, f_lo, f_samples),
                exponent_bound: exponent,
            }
        })
        .collect();
    ErrorCurve { points }
}
