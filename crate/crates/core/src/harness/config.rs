//! Experiment configuration: a sectioned key-value text file (TOML) plus
//! command-line overrides.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::error::{BicmError, Result};
use crate::rxchain::MetricKind;
use crate::txchain::{CodeSpec, FrameSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Ber,
    Outage,
    RatesPoint,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Ber => "ber",
            Mode::Outage => "outage",
            Mode::RatesPoint => "rates-point",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub subcarriers: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub gain_variance: f64,
    pub pilot_length: usize,
    pub pilot_power: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            subcarriers: 50,
            tx_antennas: 2,
            rx_antennas: 2,
            gain_variance: 1.0,
            pilot_length: 2,
            pilot_power: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodeSection {
    pub constraint_length: u32,
    pub generators_octal: Vec<u32>,
}

impl Default for CodeSection {
    fn default() -> Self {
        Self {
            constraint_length: 3,
            generators_octal: vec![0o5, 0o7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSection {
    pub bits_per_symbol: usize,
    pub interleaver_seed: u64,
}

impl Default for FrameSection {
    fn default() -> Self {
        Self {
            bits_per_symbol: 4,
            interleaver_seed: 0x5EED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub seed: u64,
    /// Eb/N0 grid for BER mode, total-SNR grid otherwise (dB).
    pub snr_grid_db: Vec<f64>,
    /// Pilot lengths swept in BER mode.
    pub pilot_lengths: Vec<usize>,
    /// Metrics simulated in BER mode.
    pub metrics: Vec<String>,
    pub iterations: usize,
    pub min_frames: u64,
    pub min_bit_errors: u64,
    /// Wall-budget cap on frames per point.
    pub max_frames: u64,
    pub chunk_frames: u64,
    /// Per-antenna data symbol power.
    pub symbol_power: f64,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            seed: 1,
            snr_grid_db: Vec::new(),
            pilot_lengths: vec![2],
            metrics: vec!["mismatched".into(), "improved".into()],
            iterations: 4,
            min_frames: 10_000,
            min_bit_errors: 100,
            max_frames: 200_000,
            chunk_frames: 500,
            symbol_power: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutageSection {
    pub gamma: f64,
    pub estimate_draws: usize,
    pub posterior_draws: usize,
}

impl Default for OutageSection {
    fn default() -> Self {
        Self {
            gamma: 0.01,
            estimate_draws: 300,
            posterior_draws: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub channel: ChannelSection,
    pub code: CodeSection,
    pub frame: FrameSection,
    pub sim: SimSection,
    pub outage: OutageSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Ber,
            channel: ChannelSection::default(),
            code: CodeSection::default(),
            frame: FrameSection::default(),
            sim: SimSection::default(),
            outage: OutageSection::default(),
        }
    }
}

impl ExperimentConfig {
    /// Stock BER setup: 2x2, 50 subcarriers, rate-1/2 (5,7), 16-QAM, 4
    /// iterations, Eb/N0 grid around the waterfall.
    pub fn default_ber() -> Self {
        let mut cfg = Self::default();
        cfg.mode = Mode::Ber;
        cfg.sim.snr_grid_db = (5..=13).map(f64::from).collect();
        cfg
    }

    /// Stock outage setup: 2x2, 16 subcarriers, N=2 pilots, gamma = 0.01.
    pub fn default_outage() -> Self {
        let mut cfg = Self::default();
        cfg.mode = Mode::Outage;
        cfg.channel.subcarriers = 16;
        cfg.sim.snr_grid_db = (5..=15).map(|i| 2.0 * i as f64).collect();
        cfg
    }

    /// Single instantaneous rate evaluation.
    pub fn default_rates_point() -> Self {
        let mut cfg = Self::default_outage();
        cfg.mode = Mode::RatesPoint;
        cfg.sim.snr_grid_db = vec![20.0];
        cfg
    }

    pub fn default_for(mode: Mode) -> Self {
        match mode {
            Mode::Ber => Self::default_ber(),
            Mode::Outage => Self::default_outage(),
            Mode::RatesPoint => Self::default_rates_point(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| BicmError::Config(format!("config parse error: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    /// Channel configuration at a given noise variance.
    pub fn channel_config(&self, noise_variance: f64, pilot_length: usize) -> ChannelConfig {
        ChannelConfig {
            subcarriers: self.channel.subcarriers,
            tx_antennas: self.channel.tx_antennas,
            rx_antennas: self.channel.rx_antennas,
            gain_variance: self.channel.gain_variance,
            noise_variance,
            pilot_length,
            pilot_power: self.channel.pilot_power,
        }
    }

    pub fn code_spec(&self) -> CodeSpec {
        CodeSpec {
            constraint_length: self.code.constraint_length,
            generators_octal: self.code.generators_octal.clone(),
        }
    }

    pub fn frame_spec(&self) -> FrameSpec {
        FrameSpec {
            subcarriers: self.channel.subcarriers,
            tx_antennas: self.channel.tx_antennas,
            bits_per_symbol: self.frame.bits_per_symbol,
            interleaver_seed: self.frame.interleaver_seed,
        }
    }

    pub fn metric_kinds(&self) -> Result<Vec<MetricKind>> {
        self.sim
            .metrics
            .iter()
            .map(|m| m.parse::<MetricKind>())
            .collect()
    }

    /// Code rate `1/outputs`.
    pub fn code_rate(&self) -> f64 {
        1.0 / self.code.generators_octal.len() as f64
    }

    /// Noise variance for one grid value: from Eb/N0 in BER mode
    /// (`σ_z² = P̄/(R_c·B·Eb/N0)`), from total SNR (`P̄·M_T/σ_z²`) otherwise.
    pub fn noise_variance_for(&self, grid_db: f64) -> f64 {
        let lin = 10f64.powf(grid_db / 10.0);
        match self.mode {
            Mode::Ber => {
                self.sim.symbol_power
                    / (self.code_rate() * self.frame.bits_per_symbol as f64 * lin)
            }
            Mode::Outage | Mode::RatesPoint => {
                self.sim.symbol_power * self.channel.tx_antennas as f64 / lin
            }
        }
    }

    /// Full validation against every module precondition; runs before any
    /// simulation.
    pub fn validate(&self) -> Result<()> {
        if self.sim.snr_grid_db.is_empty() {
            return Err(BicmError::Config("snr grid must be nonempty".into()));
        }
        if self
            .sim
            .snr_grid_db
            .iter()
            .any(|v| !v.is_finite())
        {
            return Err(BicmError::Config("snr grid contains non-finite value".into()));
        }
        if self.sim.iterations == 0 {
            return Err(BicmError::Config("iterations must be >= 1".into()));
        }
        if self.sim.min_frames == 0 || self.sim.chunk_frames == 0 || self.sim.max_frames == 0 {
            return Err(BicmError::Config("frame budgets must be positive".into()));
        }
        if self.sim.max_frames < self.sim.min_frames {
            return Err(BicmError::Config(
                "max_frames must be >= min_frames".into(),
            ));
        }
        if !(self.sim.symbol_power.is_finite() && self.sim.symbol_power > 0.0) {
            return Err(BicmError::Config("symbol power must be positive".into()));
        }
        if self.mode == Mode::Ber {
            if self.sim.pilot_lengths.is_empty() {
                return Err(BicmError::Config("pilot length list must be nonempty".into()));
            }
            if self.sim.metrics.is_empty() {
                return Err(BicmError::Config("metric list must be nonempty".into()));
            }
            self.metric_kinds()?;
        }
        if self.mode == Mode::Outage {
            if !(self.outage.gamma > 0.0 && self.outage.gamma < 1.0) {
                return Err(BicmError::Config(format!(
                    "outage probability must lie in (0,1), got {}",
                    self.outage.gamma
                )));
            }
            if self.outage.estimate_draws < 2 || self.outage.posterior_draws < 100 {
                return Err(BicmError::Config(
                    "outage needs >= 2 estimate draws and >= 100 posterior draws".into(),
                ));
            }
        }
        let code = self.code_spec();
        self.frame_spec().validate(&code)?;
        // channel preconditions at every grid point and pilot length
        let pilot_lengths: Vec<usize> = if self.mode == Mode::Ber {
            self.sim.pilot_lengths.clone()
        } else {
            vec![self.channel.pilot_length]
        };
        for &grid in &self.sim.snr_grid_db {
            let noise = self.noise_variance_for(grid);
            for &n in &pilot_lengths {
                self.channel_config(noise, n).validate()?;
            }
        }
        Ok(())
    }
}
