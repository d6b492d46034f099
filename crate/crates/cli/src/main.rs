//! `cppm` — simulate the coherent-PPM quantum random cipher and evaluate
//! its security margins from the command line.
//!
//! Subcommands: `curves` (error probabilities vs duration), `table`
//! (pulse-position counts vs duration), `waveform` (plain and encrypted
//! baseband envelopes), `simulate` (Monte Carlo attack with a built-in
//! quadrature self-check), and `verify` (the embedded invariant suite).
//!
//! Exit codes: 0 success, 1 verification or agreement failure, 2 usage or
//! configuration error.

// guards of the form !(x > 0.0) deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use config::{OutFormat, RunConfig, SimMode};
use cppm_core::attack_sim::{
    simulate_eve_conditional, simulate_eve_reduced, HeterodynePipeline, MessageTally, TrialConfig,
};
use cppm_core::error_analysis::{error_curve, eve_error_quadrature, ErrorCurve};
use cppm_core::keystream::{derive_running_key, phase_mask_from_key};
use cppm_core::symplectic::{apply_encryption, ComplexUnitary};
use cppm_core::verify::run_invariant_checks;
use cppm_core::waveform::{build_ppm_signal, noise_bandwidth_factor, synthesize_envelope, PpmConfig};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Number of f values sampled in (2 C_E / R, 2) for the lower-bound column.
const F_SAMPLES: usize = 33;

#[derive(Parser)]
#[command(
    name = "cppm",
    version,
    about = "Coherent-PPM quantum random cipher: security curves, waveforms, and attack simulation"
)]
struct Cli {
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path (stdout when omitted; overrides output.path).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override sim.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override sim.trials.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Output format where applicable.
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,

    /// Omit the timestamp field so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep the signal duration and emit both receivers' error
    /// probabilities, the eavesdropper bound, and the exponent.
    Curves {
        /// Number of grid points (overrides grid.T_range.points).
        #[arg(long)]
        points: Option<usize>,
    },
    /// Emit the (N, T) table for the configured rate.
    Table,
    /// Emit plain and phase-mask-encrypted baseband envelopes side by side.
    Waveform {
        /// Envelope samples over [0, T).
        #[arg(long, default_value_t = 2048)]
        samples: usize,
    },
    /// Run a Monte Carlo attack simulation and self-check it against the
    /// quadrature value (exit 1 when they disagree beyond 4 sigma).
    Simulate,
    /// Run the embedded invariant suite.
    Verify {
        /// Machine-readable results.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(sim) = cfg.sim.as_mut() {
        if let Some(seed) = cli.seed {
            sim.seed = seed;
        }
        if let Some(trials) = cli.trials {
            if trials == 0 {
                bail!("--trials must be at least 1");
            }
            sim.trials = trials;
        }
    }
    let out_path = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().and_then(|o| o.path.clone()));
    let format = cli
        .format
        .or_else(|| cfg.output.as_ref().and_then(|o| o.format))
        .unwrap_or_default();
    let stamp = (!cli.no_timestamp).then(unix_now);

    match cli.cmd {
        Cmd::Curves { points } => cmd_curves(&cfg, points, format, out_path.as_deref(), stamp),
        Cmd::Table => cmd_table(&cfg, format, out_path.as_deref(), stamp),
        Cmd::Waveform { samples } => cmd_waveform(&cfg, samples, format, out_path.as_deref(), stamp),
        Cmd::Simulate => cmd_simulate(&cfg, out_path.as_deref(), stamp),
        Cmd::Verify { json } => cmd_verify(json, out_path.as_deref()),
    }
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// 17 significant digits: enough to round-trip any f64.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn emit(path: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match path {
        None => {
            std::io::stdout().write_all(contents.as_bytes())?;
            Ok(())
        }
        Some(p) => {
            std::fs::write(p, contents).with_context(|| format!("writing {}", p.display()))
        }
    }
}

fn provenance(cfg: &RunConfig, stamp: Option<u64>) -> anyhow::Result<String> {
    let mut s = format!("# config: {}\n", serde_json::to_string(cfg)?);
    if let Some(t) = stamp {
        s.push_str(&format!("# generated_at_unix: {t}\n"));
    }
    Ok(s)
}

// ---------------------------------------------------------------- curves

#[derive(Serialize)]
struct CurvesJson<'a> {
    metadata: CurvesMeta,
    points: &'a [cppm_core::error_analysis::CurvePoint],
}

#[derive(Serialize)]
struct CurvesMeta {
    #[serde(rename = "R")]
    r: f64,
    #[serde(rename = "C_E")]
    c_e: f64,
    #[serde(rename = "D")]
    d: f64,
    tolerance: f64,
    version: String,
    n_treatment: String,
    f_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
    config: RunConfig,
}

fn cmd_curves(
    cfg: &RunConfig,
    points_override: Option<usize>,
    format: OutFormat,
    out: Option<&Path>,
    stamp: Option<u64>,
) -> anyhow::Result<u8> {
    let rates = cfg.rates()?;
    let range = cfg
        .grid
        .as_ref()
        .and_then(|g| g.t_range)
        .context("curves needs grid.T_range")?;
    let points = points_override.unwrap_or(range.points);
    if points == 0 {
        bail!("curves needs at least one grid point");
    }
    if !(range.min > 0.0 && range.max >= range.min) {
        bail!("grid.T_range must satisfy 0 < min <= max");
    }
    if rates.c_e >= rates.r {
        eprintln!(
            "warning: C_E = {} >= R = {}: outside the strong converse regime, \
             exponent and lower-bound columns are empty",
            rates.c_e, rates.r
        );
    }
    let t_grid: Vec<f64> = if points == 1 {
        vec![range.min]
    } else {
        (0..points)
            .map(|i| range.min + (range.max - range.min) * i as f64 / (points - 1) as f64)
            .collect()
    };
    let curve: ErrorCurve = error_curve((rates.r, rates.c_e, rates.d), &t_grid, F_SAMPLES);

    let text = match format {
        OutFormat::Csv => {
            let mut s = provenance(cfg, stamp)?;
            s.push_str("# n_treatment: N = exp(R*T), real-valued inside Q_N\n");
            s.push_str(&format!("# quadrature_tolerance: {:e}\n", cppm_core::error_analysis::QUAD_TOL));
            s.push_str("T_seconds,N,P_B_opt,P_B_count,P_E_bar,P_E_lower,exponent_bound\n");
            for p in &curve.points {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    fmt(p.t),
                    fmt(p.n),
                    fmt(p.p_b_opt),
                    fmt(p.p_b_count),
                    fmt(p.p_e_bar),
                    fmt(p.p_e_lower),
                    p.exponent_bound.map(fmt).unwrap_or_default()
                ));
            }
            s
        }
        OutFormat::Json => {
            let doc = CurvesJson {
                metadata: CurvesMeta {
                    r: rates.r,
                    c_e: rates.c_e,
                    d: rates.d,
                    tolerance: cppm_core::error_analysis::QUAD_TOL,
                    version: env!("CARGO_PKG_VERSION").to_string(),
                    n_treatment: "N = exp(R*T), real-valued inside Q_N".to_string(),
                    f_samples: F_SAMPLES,
                    generated_at_unix: stamp,
                    config: cfg.clone(),
                },
                points: &curve.points,
            };
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s
        }
    };
    emit(out, &text)?;
    Ok(0)
}

// ----------------------------------------------------------------- table

const DEFAULT_TABLE_N: [u64; 10] = [
    2,
    4,
    16,
    64,
    256,
    1024,
    4096,
    16_384,
    262_144,
    4_194_304,
];

fn cmd_table(
    cfg: &RunConfig,
    format: OutFormat,
    out: Option<&Path>,
    stamp: Option<u64>,
) -> anyhow::Result<u8> {
    let rates = cfg.rates()?;
    let ns: Vec<u64> = cfg
        .ppm
        .as_ref()
        .and_then(|p| p.n_list.clone())
        .unwrap_or_else(|| DEFAULT_TABLE_N.to_vec());
    if ns.iter().any(|&n| n < 1) {
        bail!("table N values must be positive");
    }
    let rows: Vec<(u64, f64)> = ns
        .iter()
        .map(|&n| (n, (n as f64).ln() / rates.r))
        .collect();

    let text = match format {
        OutFormat::Csv => {
            let mut s = provenance(cfg, stamp)?;
            s.push_str(&format!("# R_ebits_per_s: {}\n", fmt(rates.r)));
            s.push_str("N,T_seconds,T_microseconds\n");
            for (n, t) in &rows {
                s.push_str(&format!("{},{},{}\n", n, fmt(*t), fmt(*t * 1e6)));
            }
            s
        }
        OutFormat::Json => {
            #[derive(Serialize)]
            struct TableJson {
                #[serde(rename = "R")]
                r: f64,
                rows: Vec<TableRow>,
                #[serde(skip_serializing_if = "Option::is_none")]
                generated_at_unix: Option<u64>,
                config: RunConfig,
            }
            #[derive(Serialize)]
            struct TableRow {
                n: u64,
                t_seconds: f64,
            }
            let doc = TableJson {
                r: rates.r,
                rows: rows
                    .iter()
                    .map(|&(n, t)| TableRow { n, t_seconds: t })
                    .collect(),
                generated_at_unix: stamp,
                config: cfg.clone(),
            };
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s
        }
    };
    emit(out, &text)?;
    Ok(0)
}

// -------------------------------------------------------------- waveform

fn build_mask(
    cfg: &RunConfig,
    modes: usize,
    n: u64,
) -> anyhow::Result<(ComplexUnitary, Option<Vec<u64>>)> {
    let mask = cfg.mask.as_ref().context("config has no `mask` section")?;
    if mask.identity {
        return Ok((ComplexUnitary::identity(modes), None));
    }
    let key = cfg.secret_key()?;
    let rk = derive_running_key(&key, modes, mask.nprime, mask.counter)?;
    let unitary = phase_mask_from_key(&rk, n)?;
    Ok((unitary, Some(rk.values().to_vec())))
}

fn cmd_waveform(
    cfg: &RunConfig,
    samples: usize,
    format: OutFormat,
    out: Option<&Path>,
    stamp: Option<u64>,
) -> anyhow::Result<u8> {
    let ppm_section = cfg.ppm.as_ref().context("config has no `ppm` section")?;
    let n = ppm_section.n.context("waveform needs ppm.N")?;
    let message = ppm_section.message.unwrap_or(1);
    let ppm = PpmConfig::new(n, ppm_section.s, message)?;
    let grid = cfg.mode_grid()?;

    let plain = build_ppm_signal(&ppm, &grid)?;
    let (mask, running_key) = build_mask(cfg, grid.len(), n)?;
    let encrypted = apply_encryption(&mask, &plain)?;

    let env_plain = synthesize_envelope(&plain, samples)?;
    let env_enc = synthesize_envelope(&encrypted, samples)?;

    let rate = (n as f64).ln() / grid.t();
    let d = noise_bandwidth_factor(&plain)?;

    let text = match format {
        OutFormat::Csv => {
            let mut s = provenance(cfg, stamp)?;
            s.push_str(&format!(
                "# rate_ebits_per_s: {}\n# modes: {}\n# noise_bandwidth_D: {}\n",
                fmt(rate),
                grid.len(),
                fmt(d)
            ));
            s.push_str("t,plain_re,plain_im,plain_abs,encrypted_re,encrypted_im,encrypted_abs\n");
            for ((t, p), (_, e)) in env_plain.iter().zip(&env_enc) {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    fmt(*t),
                    fmt(p.re),
                    fmt(p.im),
                    fmt(p.norm()),
                    fmt(e.re),
                    fmt(e.im),
                    fmt(e.norm())
                ));
            }
            s
        }
        OutFormat::Json => {
            #[derive(Serialize)]
            struct WaveJson {
                rate_ebits_per_s: f64,
                modes: usize,
                noise_bandwidth_d: f64,
                /// The derived per-mode key (absent for the identity mask).
                #[serde(skip_serializing_if = "Option::is_none")]
                running_key: Option<Vec<u64>>,
                #[serde(skip_serializing_if = "Option::is_none")]
                generated_at_unix: Option<u64>,
                config: RunConfig,
                samples: Vec<WaveRow>,
            }
            #[derive(Serialize)]
            struct WaveRow {
                t: f64,
                plain: (f64, f64),
                encrypted: (f64, f64),
            }
            let doc = WaveJson {
                rate_ebits_per_s: rate,
                modes: grid.len(),
                noise_bandwidth_d: d,
                running_key,
                generated_at_unix: stamp,
                config: cfg.clone(),
                samples: env_plain
                    .iter()
                    .zip(&env_enc)
                    .map(|((t, p), (_, e))| WaveRow {
                        t: *t,
                        plain: (p.re, p.im),
                        encrypted: (e.re, e.im),
                    })
                    .collect(),
            };
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s
        }
    };
    emit(out, &text)?;
    Ok(0)
}

// -------------------------------------------------------------- simulate

#[derive(Serialize)]
struct PipelineInfo {
    modes: usize,
    noise_bandwidth_d: f64,
    band_photon_number: f64,
    nominal_amplitude: f64,
    effective_amplitude: f64,
    noise_scale: f64,
}

#[derive(Serialize)]
struct SimulateReport {
    mode: SimMode,
    n: f64,
    amplitude: f64,
    trials: u64,
    seed: u64,
    errors: u64,
    p_hat: f64,
    stderr: f64,
    reference_quadrature: f64,
    z_score: f64,
    agreement: bool,
    decode_histogram: Vec<u64>,
    per_message: Vec<MessageTally>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pipeline: Option<PipelineInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_at_unix: Option<u64>,
    config: RunConfig,
}

/// z-score with a Laplace-smoothed binomial floor so a one-trial run cannot
/// divide by zero and raise a false alarm.
fn z_score(p_hat: f64, reference: f64, errors: u64, trials: u64, stderr: f64) -> f64 {
    let smoothed = {
        let p = (errors as f64 + 1.0) / (trials as f64 + 2.0);
        (p * (1.0 - p) / trials as f64).sqrt()
    };
    let sigma = stderr.max(smoothed);
    if sigma > 0.0 && sigma.is_finite() {
        (p_hat - reference) / sigma
    } else {
        0.0
    }
}

fn cmd_simulate(cfg: &RunConfig, out: Option<&Path>, stamp: Option<u64>) -> anyhow::Result<u8> {
    let sim = cfg.sim.clone().context("config has no `sim` section")?;
    let mut trial_cfg = TrialConfig::new(sim.trials, sim.seed)?;
    if let Some(l) = sim.fixed_message {
        trial_cfg = trial_cfg.with_fixed_message(l);
    }

    let report = match sim.mode {
        SimMode::Reduced | SimMode::Conditional => {
            let n = sim.n.context("sim needs `N` for this mode")?;
            let amplitude = match (sim.a, sim.s) {
                (Some(a), _) => a,
                (None, Some(s)) => (2.0 * s / sim.d).sqrt(),
                (None, None) => bail!("sim needs either `A` or `S` (with optional `D`)"),
            };
            let result = match sim.mode {
                SimMode::Reduced => simulate_eve_reduced(&trial_cfg, n, amplitude)?,
                _ => simulate_eve_conditional(&trial_cfg, n as f64, amplitude)?,
            };
            let reference = eve_error_quadrature(n as f64, amplitude);
            let z = match sim.mode {
                SimMode::Reduced => {
                    z_score(result.p_hat, reference, result.errors, result.trials, result.stderr)
                }
                _ => {
                    if result.stderr > 0.0 {
                        (result.p_hat - reference) / result.stderr
                    } else {
                        0.0
                    }
                }
            };
            SimulateReport {
                mode: sim.mode,
                n: n as f64,
                amplitude,
                trials: result.trials,
                seed: sim.seed,
                errors: result.errors,
                p_hat: result.p_hat,
                stderr: result.stderr,
                reference_quadrature: reference,
                z_score: z,
                agreement: z.abs() <= 4.0,
                decode_histogram: result.decode_histogram,
                per_message: result.per_message,
                pipeline: None,
                generated_at_unix: stamp,
                config: cfg.clone(),
            }
        }
        SimMode::FullPipeline => {
            let ppm_section = cfg.ppm.as_ref().context("config has no `ppm` section")?;
            let n = sim
                .n
                .or(ppm_section.n)
                .context("full-pipeline needs ppm.N (or sim.N)")?;
            let s = sim.s.unwrap_or(ppm_section.s);
            let ppm = PpmConfig::new(n, s, 1)?;
            let grid = cfg.mode_grid()?;
            let mask = cfg.mask.as_ref().context("config has no `mask` section")?;
            let key = cfg.secret_key()?;
            let pipe = HeterodynePipeline::new(grid, ppm, key, mask.nprime, mask.counter)?
                .with_noise_scale(sim.noise_scale.unwrap_or(1.0));
            let result = pipe.simulate(&trial_cfg)?;
            // the reduction predicts the error at the amplitude the band
            // actually carries
            let amplitude = pipe.effective_amplitude();
            let reference = eve_error_quadrature(n as f64, amplitude);
            let z = z_score(result.p_hat, reference, result.errors, result.trials, result.stderr);
            SimulateReport {
                mode: sim.mode,
                n: n as f64,
                amplitude,
                trials: result.trials,
                seed: sim.seed,
                errors: result.errors,
                p_hat: result.p_hat,
                stderr: result.stderr,
                reference_quadrature: reference,
                z_score: z,
                agreement: z.abs() <= 4.0,
                decode_histogram: result.decode_histogram,
                per_message: result.per_message,
                pipeline: Some(PipelineInfo {
                    modes: pipe.grid().len(),
                    noise_bandwidth_d: pipe.noise_bandwidth(),
                    band_photon_number: pipe.band_photon_number(),
                    nominal_amplitude: pipe.nominal_amplitude(),
                    effective_amplitude: pipe.effective_amplitude(),
                    noise_scale: sim.noise_scale.unwrap_or(1.0),
                }),
                generated_at_unix: stamp,
                config: cfg.clone(),
            }
        }
    };

    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    emit(out, &text)?;
    if report.agreement {
        Ok(0)
    } else {
        eprintln!(
            "simulate: |z| = {:.2} > 4: Monte Carlo disagrees with quadrature",
            report.z_score.abs()
        );
        Ok(1)
    }
}

// ---------------------------------------------------------------- verify

fn cmd_verify(json: bool, out: Option<&Path>) -> anyhow::Result<u8> {
    let checks = run_invariant_checks();
    let all_passed = checks.iter().all(|c| c.passed);
    let text = if json {
        #[derive(Serialize)]
        struct VerifyJson {
            all_passed: bool,
            checks: Vec<cppm_core::verify::CheckResult>,
        }
        let mut s = serde_json::to_string_pretty(&VerifyJson { all_passed, checks })?;
        s.push('\n');
        s
    } else {
        let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut s = String::new();
        for c in &checks {
            s.push_str(&format!(
                "{:width$}  {}  {}\n",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.detail,
            ));
        }
        s.push_str(&format!(
            "{}: {} checks\n",
            if all_passed { "ok" } else { "FAILED" },
            checks.len()
        ));
        s
    };
    emit(out, &text)?;
    Ok(if all_passed { 0 } else { 1 })
}
