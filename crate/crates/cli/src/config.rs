//! JSON run configuration: schema, defaults, and resolution.
//!
//! Unknown keys are rejected with the offending key named so typos cannot
//! silently fall back to defaults. Absent sections take the documented
//! defaults (the 200 THz carrier / 10 MHz resolution / 1 GHz band operating
//! point at R = 45, C_E = 15 Mebit/s).

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub rates: Option<RatesSection>,
    pub grid: Option<GridSection>,
    pub ppm: Option<PpmSection>,
    pub mask: Option<MaskSection>,
    pub sim: Option<SimSection>,
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesSection {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "C_E")]
    pub c_e: f64,
    #[serde(rename = "D", default = "one")]
    pub d: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Observation interval in seconds; alternatively give `resolution`.
    #[serde(rename = "T")]
    pub t: Option<f64>,
    /// Frequency resolution 1/T in Hz.
    pub resolution: Option<f64>,
    /// Carrier frequency in Hz.
    pub f_c: Option<f64>,
    /// Total (two-sided) bandwidth in Hz.
    pub bandwidth: Option<f64>,
    /// Explicit symmetric half-width in mode counts; overrides `bandwidth`.
    pub half_width_modes: Option<u64>,
    /// Duration sweep for `curves`.
    #[serde(rename = "T_range")]
    pub t_range: Option<TRange>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TRange {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpmSection {
    #[serde(rename = "N")]
    pub n: Option<u64>,
    /// Explicit list of N values for `table`.
    #[serde(rename = "N_list")]
    pub n_list: Option<Vec<u64>>,
    #[serde(rename = "S", default = "one")]
    pub s: f64,
    /// Transmitted slot (1-based).
    pub message: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSection {
    #[serde(rename = "Nprime")]
    pub nprime: u64,
    pub key_hex: String,
    #[serde(default)]
    pub counter: u64,
    /// Use the identity mask instead of a keyed one.
    #[serde(default)]
    pub identity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    #[default]
    Reduced,
    Conditional,
    FullPipeline,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub mode: SimMode,
    #[serde(rename = "N")]
    pub n: Option<u64>,
    #[serde(rename = "S")]
    pub s: Option<f64>,
    #[serde(rename = "D", default = "one")]
    pub d: f64,
    /// Direct decoding amplitude; overrides sqrt(2 S / D).
    #[serde(rename = "A")]
    pub a: Option<f64>,
    pub fixed_message: Option<u64>,
    /// Noise scale for the full pipeline (1 = physical).
    pub noise_scale: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub format: Option<OutFormat>,
}

impl RunConfig {
    /// The documented defaults; every section populated.
    pub fn defaults() -> Self {
        RunConfig {
            rates: Some(RatesSection {
                r: 45.0e6,
                c_e: 15.0e6,
                d: 1.0,
            }),
            grid: Some(GridSection {
                t: None,
                resolution: Some(10.0e6),
                f_c: Some(200.0e12),
                bandwidth: Some(1.0e9),
                half_width_modes: None,
                t_range: Some(TRange {
                    min: 2.0e-9,
                    max: 1.5e-6,
                    points: 300,
                }),
            }),
            ppm: Some(PpmSection {
                n: Some(97),
                n_list: None,
                s: 1.0,
                message: None,
            }),
            mask: Some(MaskSection {
                nprime: 9700,
                key_hex: "00".to_string(),
                counter: 0,
                identity: false,
            }),
            sim: Some(SimSection {
                trials: 100_000,
                seed: 20_260_809,
                mode: SimMode::Reduced,
                n: Some(8),
                s: Some(2.0),
                d: 1.0,
                a: None,
                fixed_message: None,
                noise_scale: None,
            }),
            output: Some(OutputSection::default()),
        }
    }

    /// Load a config file (or defaults) and fill absent sections from the
    /// defaults. Parse errors carry the JSON path of the offending key.
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let mut cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                let de = &mut serde_json::Deserializer::from_str(&text);
                serde_path_to_error::deserialize(de).map_err(|e| {
                    anyhow::anyhow!(
                        "config {}: at `{}`: {}",
                        p.display(),
                        e.path(),
                        e.inner()
                    )
                })?
            }
        };
        let d = RunConfig::defaults();
        cfg.rates = cfg.rates.or(d.rates);
        cfg.grid = cfg.grid.or(d.grid);
        cfg.ppm = cfg.ppm.or(d.ppm);
        cfg.mask = cfg.mask.or(d.mask);
        cfg.sim = cfg.sim.or(d.sim);
        cfg.output = cfg.output.or(d.output);
        Ok(cfg)
    }

    pub fn rates(&self) -> anyhow::Result<RatesSection> {
        let r = self.rates.context("config has no `rates` section")?;
        if !(r.r > 0.0 && r.c_e > 0.0) {
            bail!("rates must be positive (R = {}, C_E = {})", r.r, r.c_e);
        }
        if !(r.d >= 1.0) {
            bail!("noise-bandwidth factor D must be >= 1, got {}", r.d);
        }
        Ok(r)
    }

    /// Observation interval in seconds.
    pub fn interval(&self) -> anyhow::Result<f64> {
        let g = self.grid.as_ref().context("config has no `grid` section")?;
        let t = match (g.t, g.resolution) {
            (Some(t), _) => t,
            (None, Some(res)) if res > 0.0 => 1.0 / res,
            _ => bail!("grid needs either `T` or a positive `resolution`"),
        };
        if !(t > 0.0) {
            bail!("observation interval must be positive, got {t}");
        }
        Ok(t)
    }

    /// Build the mode grid for waveform/pipeline commands.
    pub fn mode_grid(&self) -> anyhow::Result<cppm_core::waveform::ModeGrid> {
        use cppm_core::waveform::ModeGrid;
        let g = self.grid.as_ref().context("config has no `grid` section")?;
        let t = self.interval()?;
        let f_c = g.f_c.context("grid needs `f_c` (carrier frequency in Hz)")?;
        let j_c = (f_c * t).round();
        if !(j_c >= 1.0) {
            bail!("carrier index f_c * T = {j_c} must be at least 1");
        }
        let j_c = j_c as u64;
        let grid = if let Some(half) = g.half_width_modes {
            ModeGrid::symmetric(t, j_c, half)?
        } else if let Some(bw) = g.bandwidth {
            ModeGrid::from_bandwidth(t, j_c, bw)?
        } else {
            let n = self
                .ppm
                .as_ref()
                .and_then(|p| p.n)
                .context("grid needs `bandwidth`, `half_width_modes`, or ppm.N")?;
            ModeGrid::main_lobe(t, j_c, n)?
        };
        Ok(grid)
    }

    pub fn secret_key(&self) -> anyhow::Result<cppm_core::keystream::SecretKey> {
        let m = self.mask.as_ref().context("config has no `mask` section")?;
        let bytes = hex::decode(m.key_hex.trim())
            .with_context(|| format!("mask.key_hex `{}` is not valid hex", m.key_hex))?;
        Ok(cppm_core::keystream::SecretKey::new(bytes)?)
    }
}
