//! Experiment configuration.
//!
//! Files are flat `key = value` lines; `#` starts a comment and lists are
//! comma separated. Layering is defaults, then an optional preset, then the
//! file, then command-line overrides.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use squint_core::array::{optimal_upa_shape, ArrayGeometry, FrequencyGrid};
use squint_core::channel::DelayProfile;
use squint_core::hbf::LinkConfig;

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Proposed,
    Dcf,
    Dbf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Proposed, Algorithm::Dcf, Algorithm::Dbf];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Proposed => "proposed",
            Algorithm::Dcf => "dcf",
            Algorithm::Dbf => "dbf",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "proposed" => Ok(Algorithm::Proposed),
            "dcf" => Ok(Algorithm::Dcf),
            "dbf" => Ok(Algorithm::Dbf),
            other => Err(SimError::config(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// How the receive array is factored into `n_h x n_v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapePolicy {
    /// The BSR-minimizing factorization of the total count.
    Square,
    /// All elements along the horizontal axis.
    Ula,
    Explicit(usize, usize),
}

impl FromStr for ShapePolicy {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "square" => Ok(ShapePolicy::Square),
            "ula" => Ok(ShapePolicy::Ula),
            other => {
                let (h, v) = parse_dims(other)?;
                Ok(ShapePolicy::Explicit(h, v))
            }
        }
    }
}

fn parse_dims(s: &str) -> Result<(usize, usize)> {
    let (h, v) = s
        .split_once('x')
        .ok_or_else(|| SimError::config(format!("expected `<n_h>x<n_v>`, got `{s}`")))?;
    Ok((parse_scalar(h)?, parse_scalar(v)?))
}

fn parse_scalar<T: FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| SimError::config(format!("cannot parse `{}`", s.trim())))
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(parse_scalar).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub rx_total: usize,
    pub rx_shape: ShapePolicy,
    pub rx_spacing: f64,
    /// Horizontal counts for the shape sweep; `n_v = rx_total / n_h`.
    pub rsi_sweep: Vec<usize>,
    /// Receive spacings compared by the bandwidth sweep.
    pub spacing_sweep: Vec<f64>,
    pub tx_shape: (usize, usize),
    pub tx_spacing: f64,
    pub streams: usize,
    pub rf_chains: usize,
    pub snr_db: f64,
    pub snr_sweep_db: Vec<f64>,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub bandwidth_sweep_hz: Vec<f64>,
    pub subcarriers: usize,
    pub paths: usize,
    /// `None` means `K / 4`.
    pub delay_taps: Option<usize>,
    pub rolloff: f64,
    pub trials: usize,
    pub seed: u64,
    pub algorithms: Vec<Algorithm>,
}

impl Default for ExperimentConfig {
    /// Desk-scale defaults: a 16 x 16 receive array, 64 subcarriers and 50
    /// trials per sweep point.
    fn default() -> Self {
        Self {
            rx_total: 256,
            rx_shape: ShapePolicy::Square,
            rx_spacing: 0.5,
            rsi_sweep: vec![1, 2, 4, 8, 16],
            spacing_sweep: vec![0.5, 0.25],
            tx_shape: (4, 4),
            tx_spacing: 0.5,
            streams: 4,
            rf_chains: 4,
            snr_db: 10.0,
            snr_sweep_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            carrier_hz: 300e9,
            bandwidth_hz: 30e9,
            bandwidth_sweep_hz: (1..=9).map(|i| i as f64 * 5e9).collect(),
            subcarriers: 64,
            paths: 4,
            delay_taps: None,
            rolloff: 1.0,
            trials: 50,
            seed: 0x5EED_7E4A_2023,
            algorithms: Algorithm::ALL.to_vec(),
        }
    }
}

/// Which experiment a preset is tuned for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Rsi,
    Snr,
    Bandwidth,
    Single,
}

impl ExperimentConfig {
    /// Full-size setup: 128 subcarriers and 1000 trials, with a 64 x 64
    /// array except for the shape sweep, which keeps 256 elements.
    pub fn full_scale(experiment: Experiment) -> Self {
        let rx_total = match experiment {
            Experiment::Rsi => 256,
            _ => 4096,
        };
        Self {
            rx_total,
            subcarriers: 128,
            trials: 1000,
            ..Self::default()
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "rx_total" => self.rx_total = parse_scalar(value)?,
            "rx_shape" => {
                self.rx_shape = value.parse()?;
                if let ShapePolicy::Explicit(h, v) = self.rx_shape {
                    self.rx_total = h * v;
                }
            }
            "rx_spacing" => self.rx_spacing = parse_scalar(value)?,
            "rsi_sweep" => self.rsi_sweep = parse_list(value)?,
            "spacing_sweep" => self.spacing_sweep = parse_list(value)?,
            "tx_shape" => self.tx_shape = parse_dims(value)?,
            "tx_spacing" => self.tx_spacing = parse_scalar(value)?,
            "streams" => self.streams = parse_scalar(value)?,
            "rf_chains" => self.rf_chains = parse_scalar(value)?,
            "snr_db" => self.snr_db = parse_scalar(value)?,
            "snr_sweep_db" => self.snr_sweep_db = parse_list(value)?,
            "carrier_hz" => self.carrier_hz = parse_scalar(value)?,
            "bandwidth_hz" => self.bandwidth_hz = parse_scalar(value)?,
            "bandwidth_sweep_hz" => self.bandwidth_sweep_hz = parse_list(value)?,
            "subcarriers" => self.subcarriers = parse_scalar(value)?,
            "paths" => self.paths = parse_scalar(value)?,
            "delay_taps" => {
                self.delay_taps = if value == "auto" {
                    None
                } else {
                    Some(parse_scalar(value)?)
                }
            }
            "rolloff" => self.rolloff = parse_scalar(value)?,
            "trials" => self.trials = parse_scalar(value)?,
            "seed" => self.seed = parse_scalar(value)?,
            "algorithms" => self.algorithms = parse_list(value)?,
            other => return Err(SimError::config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies every setting of a config file's text.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| SimError::config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(key, value)
                .map_err(|e| SimError::config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_text(&text)
    }

    /// Default receive shape for sweeps that do not vary it.
    pub fn rx_dims(&self) -> Result<(usize, usize)> {
        match self.rx_shape {
            ShapePolicy::Square => Ok(optimal_upa_shape(self.rx_total)?),
            ShapePolicy::Ula => Ok((self.rx_total, 1)),
            ShapePolicy::Explicit(h, v) => Ok((h, v)),
        }
    }

    pub fn rx_geometry(&self, spacing: f64) -> Result<ArrayGeometry> {
        let (h, v) = self.rx_dims()?;
        Ok(ArrayGeometry::uniform(h, v, spacing)?)
    }

    pub fn tx_geometry(&self) -> Result<ArrayGeometry> {
        Ok(ArrayGeometry::uniform(self.tx_shape.0, self.tx_shape.1, self.tx_spacing)?)
    }

    pub fn grid(&self, bandwidth_hz: f64) -> Result<FrequencyGrid> {
        Ok(FrequencyGrid::new(self.carrier_hz, bandwidth_hz, self.subcarriers)?)
    }

    pub fn link(&self, snr_db: f64) -> Result<LinkConfig> {
        Ok(LinkConfig::from_snr_db(self.streams, self.rf_chains, snr_db)?)
    }

    pub fn delay_profile(&self, grid: &FrequencyGrid) -> Result<DelayProfile> {
        let base = DelayProfile::for_grid(grid, self.rolloff)?;
        match self.delay_taps {
            None => Ok(base),
            Some(taps) => Ok(DelayProfile::new(base.sampling_period_s, taps, self.rolloff)?),
        }
    }

    /// Rejects every inconsistency up front so no trial starts on a bad
    /// config.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(SimError::Config(msg));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return fail("no algorithms selected".into());
        }
        if self.rx_total == 0 {
            return fail("rx_total must be positive".into());
        }
        if let ShapePolicy::Explicit(h, v) = self.rx_shape {
            if h * v != self.rx_total {
                return fail(format!("rx_shape {h}x{v} does not hold {} elements", self.rx_total));
            }
        }
        for &n_h in &self.rsi_sweep {
            if n_h == 0 || !self.rx_total.is_multiple_of(n_h) {
                return fail(format!("rsi_sweep entry {n_h} does not divide rx_total {}", self.rx_total));
            }
        }
        if self.subcarriers == 0 || self.paths == 0 || self.delay_taps == Some(0) {
            return fail("subcarriers, paths and delay taps must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return fail(format!("rolloff {} outside [0, 1]", self.rolloff));
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return fail(format!("carrier {} must be positive", self.carrier_hz));
        }
        for &b in std::iter::once(&self.bandwidth_hz).chain(&self.bandwidth_sweep_hz) {
            if !(b > 0.0 && b < self.carrier_hz) {
                return fail(format!(
                    "bandwidth {b} must lie in (0, carrier = {})",
                    self.carrier_hz
                ));
            }
        }
        for &s in std::iter::once(&self.rx_spacing)
            .chain(&self.spacing_sweep)
            .chain(std::iter::once(&self.tx_spacing))
        {
            if !(s > 0.0 && s.is_finite()) {
                return fail(format!("antenna spacing {s} must be positive"));
            }
        }
        if self.tx_shape.0 == 0 || self.tx_shape.1 == 0 {
            return fail("tx_shape needs positive counts".into());
        }
        if self.streams == 0 || self.streams > self.rf_chains {
            return fail(format!(
                "need 1 <= streams ({}) <= rf_chains ({})",
                self.streams, self.rf_chains
            ));
        }
        let n_t = self.tx_shape.0 * self.tx_shape.1;
        if self.rf_chains > n_t.min(self.rx_total) {
            return fail(format!(
                "rf_chains ({}) exceed min(N_t = {n_t}, N_r = {})",
                self.rf_chains, self.rx_total
            ));
        }
        for &snr in std::iter::once(&self.snr_db).chain(&self.snr_sweep_db) {
            if !snr.is_finite() {
                return fail(format!("SNR {snr} dB is not finite"));
            }
        }
        Ok(())
    }
}
