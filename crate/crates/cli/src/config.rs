//! JSON run configuration and experiment-grid expansion.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use stbcid_core::channel::ChannelConfig;
use stbcid_core::identifier::IdentifierConfig;
use stbcid_core::modulation::{ModulationFormat, ModulationKind};
use stbcid_core::montecarlo::Scenario;
use stbcid_core::ofdm::OfdmConfig;
use stbcid_core::stbc::Stbc;

/// A configuration value that is either a scalar or a sweep axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Axis<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Axis::One(v) => vec![v.clone()],
            Axis::Many(vs) => vs.clone(),
        }
    }
}

impl<T> Default for Axis<T>
where
    T: Default,
{
    fn default() -> Self {
        Axis::One(T::default())
    }
}

fn default_n() -> Axis<usize> {
    Axis::One(256)
}
fn default_blocks() -> Axis<usize> {
    Axis::One(100)
}
fn default_rx() -> Axis<usize> {
    Axis::One(2)
}
fn default_snr() -> Axis<f64> {
    Axis::One(0.0)
}
fn default_modulation() -> Axis<String> {
    Axis::One("qpsk".into())
}
fn default_taps() -> usize {
    4
}
fn default_decay() -> f64 {
    5.0
}
fn default_pfa() -> f64 {
    1e-3
}
fn default_trials() -> usize {
    500
}

/// Textual mirror of [`Scenario`] plus run options; unknown keys rejected.
/// Axis-typed fields may hold lists; the grid is their cartesian product.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_n")]
    pub n_subcarriers: Axis<usize>,
    /// Cyclic prefix length; defaults to `n_subcarriers / 4`.
    #[serde(default)]
    pub cp_len: Option<usize>,
    #[serde(default = "default_modulation")]
    pub modulation: Axis<String>,
    #[serde(default = "default_blocks")]
    pub n_blocks: Axis<usize>,
    #[serde(default = "default_rx")]
    pub n_rx: Axis<usize>,
    #[serde(default = "default_snr")]
    pub snr_db: Axis<f64>,
    #[serde(default = "default_taps")]
    pub n_taps: usize,
    #[serde(default = "default_decay")]
    pub pdp_decay: f64,
    #[serde(default)]
    pub rho: Axis<f64>,
    #[serde(default)]
    pub timing_mu: Axis<f64>,
    #[serde(default)]
    pub freq_offset: Axis<f64>,
    #[serde(default)]
    pub doppler: Axis<f64>,
    #[serde(default = "default_pfa")]
    pub p_fa: f64,
    /// Assumed channel length for the identifier's exclusion windows.
    #[serde(default)]
    pub assumed_path_count: Option<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub aligned_start: bool,
}

pub fn parse_modulation(name: &str) -> Result<ModulationFormat> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "qpsk" | "4psk" => ModulationFormat::qpsk(),
        "qam16" | "16qam" => ModulationFormat::qam16(),
        "qam64" | "64qam" => ModulationFormat::qam64(),
        other => {
            let order: u32 = other
                .strip_prefix("qam")
                .and_then(|s| s.parse().ok())
                .with_context(|| format!("unknown modulation '{name}'"))?;
            ModulationFormat::new(ModulationKind::Qam, order)
                .map_err(|e| anyhow::anyhow!("modulation: {e}"))?
        }
    })
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for &n in &self.n_subcarriers.values() {
            if n < 4 || !n.is_power_of_two() {
                bail!("field n_subcarriers: must be a power of two >= 4, got {n}");
            }
            if let Some(cp) = self.cp_len {
                if cp == 0 || cp >= n {
                    bail!("field cp_len: must satisfy 0 < cp_len < n_subcarriers, got cp_len={cp} with n_subcarriers={n}");
                }
            }
        }
        if !(self.p_fa > 0.0 && self.p_fa < 1.0) {
            bail!("field p_fa: must be in (0, 1), got {}", self.p_fa);
        }
        if self.trials == 0 {
            bail!("field trials: must be >= 1");
        }
        for name in self.modulation.values() {
            parse_modulation(&name)?;
        }
        Ok(())
    }

    /// Expands the cartesian product of every axis into concrete scenarios,
    /// in deterministic nesting order.
    pub fn grid(&self) -> Result<Vec<Scenario>> {
        let mut out = Vec::new();
        for n in self.n_subcarriers.values() {
            let cp = self.cp_len.unwrap_or(n / 4);
            for modulation in self.modulation.values() {
                let fmt = parse_modulation(&modulation)?;
                for n_blocks in self.n_blocks.values() {
                    for n_rx in self.n_rx.values() {
                        for rho in self.rho.values() {
                            for timing_mu in self.timing_mu.values() {
                                for freq_offset in self.freq_offset.values() {
                                    for doppler in self.doppler.values() {
                                        for snr_db in self.snr_db.values() {
                                            out.push(self.scenario_at(
                                                n, cp, fmt, n_blocks, n_rx, rho, timing_mu,
                                                freq_offset, doppler, snr_db,
                                            )?);
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn scenario_at(
        &self,
        n: usize,
        cp: usize,
        fmt: ModulationFormat,
        n_blocks: usize,
        n_rx: usize,
        rho: f64,
        timing_mu: f64,
        freq_offset: f64,
        doppler: f64,
        snr_db: f64,
    ) -> Result<Scenario> {
        let ofdm = OfdmConfig::new(n, cp, Stbc::Alamouti)
            .map_err(|e| anyhow::anyhow!("field n_subcarriers/cp_len: {e}"))?;
        let mut identifier = IdentifierConfig::new(n, cp, self.p_fa, n_rx)
            .map_err(|e| anyhow::anyhow!("identifier configuration: {e}"))?;
        if let Some(l) = self.assumed_path_count {
            identifier.assumed_path_count = l;
            identifier
                .validate()
                .map_err(|e| anyhow::anyhow!("field assumed_path_count: {e}"))?;
        }
        let channel = ChannelConfig {
            n_rx,
            n_taps: self.n_taps,
            pdp_decay: self.pdp_decay,
            rho,
            normalized_freq_offset: freq_offset,
            timing_mu,
            normalized_doppler: doppler,
        };
        channel
            .validate()
            .map_err(|e| anyhow::anyhow!("channel configuration: {e}"))?;
        let scenario = Scenario {
            ofdm,
            modulation: fmt,
            channel,
            identifier,
            snr_db,
            n_blocks,
            master_seed: self.seed,
            aligned_start: self.aligned_start,
        };
        scenario
            .validate()
            .map_err(|e| anyhow::anyhow!("scenario: {e}"))?;
        Ok(scenario)
    }
}
