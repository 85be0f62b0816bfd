//! Run configuration: a scheme parameter block plus baseline, snapshot,
//! sweep and energy sections, loadable from TOML or JSON.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use nsr2d_core::scheme::SchemeParams;

/// Full configuration for `iterate` and `sweep`.
#[derive(Debug, Clone, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub scheme: SchemeParams,
    #[serde(default)]
    pub baseline: BaselineConfig,
    /// Times at which the new pair (u₁, R₁) is materialized to disk.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub energy: Option<EnergyConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

/// How the baseline (u, R) pair is manufactured.
///
/// Both variants are fractional-heat semigroup flows u(t) = e^{−νt(−Δ)^α}u₀
/// with the stress absorbing the full model residual, so the pair is exact
/// by construction for any initial datum.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaselineConfig {
    /// A fixed two-mode stream function; amplitudes are chosen so the
    /// stress stays inside the plateau zone of the matrix cutoff.
    TwoMode {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        /// Second-mode amplitude as a fraction of the first.
        #[serde(default = "default_ratio")]
        ratio: f64,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_nu_visc")]
        nu_visc: f64,
    },
    /// A random-phase divergence-free field with power-law coefficient
    /// decay, rescaled so the scanned stress sup-norm hits `target_sup`.
    Rough {
        #[serde(default = "default_seed")]
        seed: u64,
        #[serde(default = "default_rough_bw")]
        bandwidth: usize,
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default = "default_target_sup")]
        target_sup: f64,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_nu_visc")]
        nu_visc: f64,
    },
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig::TwoMode {
            amplitude: default_amplitude(),
            ratio: default_ratio(),
            alpha: default_alpha(),
            nu_visc: default_nu_visc(),
        }
    }
}

fn default_amplitude() -> f64 {
    0.004
}
fn default_ratio() -> f64 {
    0.4
}
fn default_alpha() -> f64 {
    1.5
}
fn default_nu_visc() -> f64 {
    2e-3
}
fn default_seed() -> u64 {
    1
}
fn default_rough_bw() -> usize {
    2
}
fn default_decay() -> f64 {
    1.2
}
fn default_target_sup() -> f64 {
    0.8
}

/// Energy-pumping section: a polynomial target profile e(t) = Σ cᵢ tⁱ on a
/// union of good intervals, switched on after `t_next`, at corrector
/// concentration `mu_c`.
#[derive(Debug, Clone, Deserialize)]
pub struct EnergyConfig {
    pub profile: Vec<f64>,
    pub good: Vec<(f64, f64)>,
    pub t_next: f64,
    pub mu_c: usize,
}

impl EnergyConfig {
    pub fn eval_profile(&self, t: f64) -> f64 {
        self.profile.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }
}

/// Sweep section: which knob to vary and over which values.
#[derive(Debug, Clone, Deserialize)]
pub struct SweepConfig {
    pub axis: String,
    pub values: Vec<f64>,
}

/// Load a configuration, dispatching on the file extension (.toml or
/// .json).
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let cfg: RunConfig = match ext {
        "json" => serde_json::from_str(&text)
            .with_context(|| format!("malformed JSON config {}", path.display()))?,
        "toml" | "" => toml::from_str(&text)
            .with_context(|| format!("malformed TOML config {}", path.display()))?,
        other => bail!("unsupported config extension '{other}' (use .toml or .json)"),
    };
    Ok(cfg)
}
