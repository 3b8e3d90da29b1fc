//! Monte Carlo sweeps over array shape, SNR and bandwidth.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use squint_core::array::{bsr_closed_form, ArrayGeometry, FrequencyGrid};
use squint_core::channel::{frequency_channel, sample_paths, ChannelRealization, DelayProfile};
use squint_core::hbf::{CombinerScope, LinkConfig, PrecoderStage};

use crate::config::{Algorithm, ExperimentConfig};
use crate::error::Result;
use crate::seed::derive_trial_seed;

/// One algorithm's outcome on one trial at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub sweep_name: String,
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub trial_index: usize,
    pub seed_used: u64,
    pub average_se_bits: f64,
    /// Fully digital optimum on the same realization.
    pub r_opt_bits: f64,
    pub normalized_se: f64,
    pub bsr_closed_form: f64,
}

/// Everything that defines one sweep point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub name: String,
    pub value: f64,
    /// Index fed to the seed derivation. Points sharing it see the same
    /// path draws.
    pub seed_index: u64,
    pub rx: ArrayGeometry,
    pub tx: ArrayGeometry,
    pub grid: FrequencyGrid,
    pub profile: DelayProfile,
    pub link: LinkConfig,
    pub paths: usize,
}

impl SweepPoint {
    pub fn new(
        cfg: &ExperimentConfig,
        name: impl Into<String>,
        value: f64,
        seed_index: u64,
        rx: ArrayGeometry,
        bandwidth_hz: f64,
        snr_db: f64,
    ) -> Result<Self> {
        let grid = cfg.grid(bandwidth_hz)?;
        Ok(Self {
            name: name.into(),
            value,
            seed_index,
            rx,
            tx: cfg.tx_geometry()?,
            profile: cfg.delay_profile(&grid)?,
            grid,
            link: cfg.link(snr_db)?,
            paths: cfg.paths,
        })
    }

    /// Draws the channel of trial `trial` and returns it with the seed used.
    pub fn channel(&self, master_seed: u64, trial: usize) -> Result<(ChannelRealization, u64)> {
        let seed = derive_trial_seed(master_seed, self.seed_index, trial as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let paths = sample_paths(
            &mut rng,
            self.paths,
            self.profile.taps,
            self.profile.sampling_period_s,
        )?;
        let channel = frequency_channel(&paths, &self.rx, &self.tx, &self.grid, &self.profile);
        Ok((channel, seed))
    }

    fn bsr(&self) -> f64 {
        bsr_closed_form(&self.rx, self.grid.fractional_bandwidth())
    }

    /// Runs every algorithm in `algorithms` on one trial.
    pub fn run_trial(
        &self,
        master_seed: u64,
        trial: usize,
        algorithms: &[Algorithm],
    ) -> Result<Vec<SweepResult>> {
        let (channel, seed) = self.channel(master_seed, trial)?;
        let stage = PrecoderStage::new(&channel, &self.link)?;
        let r_opt = stage.optimal().average_se;
        let bsr = self.bsr();
        algorithms
            .iter()
            .map(|&algorithm| {
                let se = match algorithm {
                    Algorithm::Proposed => {
                        stage.finish(&channel, &self.link, CombinerScope::AllSubcarriers)?.average_se
                    }
                    Algorithm::Dcf => {
                        stage
                            .finish(&channel, &self.link, CombinerScope::CentralSubcarrier)?
                            .average_se
                    }
                    Algorithm::Dbf => r_opt,
                };
                Ok(SweepResult {
                    sweep_name: self.name.clone(),
                    sweep_value: self.value,
                    algorithm,
                    trial_index: trial,
                    seed_used: seed,
                    average_se_bits: se,
                    r_opt_bits: r_opt,
                    normalized_se: se / r_opt,
                    bsr_closed_form: bsr,
                })
            })
            .collect()
    }
}

/// Runs `cfg.trials` trials at every point in parallel.
///
/// Rows come back ordered by point, then algorithm, then trial, whatever
/// the thread count.
pub fn run_points(cfg: &ExperimentConfig, points: &[SweepPoint]) -> Result<Vec<SweepResult>> {
    let mut algorithms = cfg.algorithms.clone();
    algorithms.sort();
    algorithms.dedup();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.trials).map(move |t| (p, t)))
        .collect();
    let batches = jobs
        .par_iter()
        .map(|&(p, t)| {
            points[p]
                .run_trial(cfg.seed, t, &algorithms)
                .map(|rows| rows.into_iter().map(move |r| (p, r)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows: Vec<(usize, SweepResult)> = batches.into_iter().flatten().collect();
    rows.sort_by_key(|(p, r)| (*p, r.algorithm, r.trial_index));
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

/// Receive shapes `n_h x (N / n_h)` for every entry of `rsi_sweep`.
pub fn rsi_points(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    cfg.rsi_sweep
        .iter()
        .enumerate()
        .map(|(i, &n_h)| {
            let n_v = cfg.rx_total / n_h;
            let rx = ArrayGeometry::uniform(n_h, n_v, cfg.rx_spacing)?;
            let rsi = n_h.min(n_v) as f64 / n_h.max(n_v) as f64;
            SweepPoint::new(cfg, "rsi", rsi, i as u64, rx, cfg.bandwidth_hz, cfg.snr_db)
        })
        .collect()
}

pub fn snr_points(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let rx = cfg.rx_geometry(cfg.rx_spacing)?;
    cfg.snr_sweep_db
        .iter()
        .enumerate()
        .map(|(i, &snr)| SweepPoint::new(cfg, "snr", snr, i as u64, rx, cfg.bandwidth_hz, snr))
        .collect()
}

/// One series per entry of `spacing_sweep`. A given bandwidth uses the same
/// seed index in every series, so the spacings are compared on identical
/// path draws.
pub fn bandwidth_points(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    let mut points = Vec::new();
    for &spacing in &cfg.spacing_sweep {
        let rx = cfg.rx_geometry(spacing)?;
        for (i, &b) in cfg.bandwidth_sweep_hz.iter().enumerate() {
            points.push(SweepPoint::new(
                cfg,
                format!("bandwidth_d{spacing}"),
                b,
                i as u64,
                rx,
                b,
                cfg.snr_db,
            )?);
        }
    }
    Ok(points)
}

pub fn single_point(cfg: &ExperimentConfig) -> Result<SweepPoint> {
    cfg.validate()?;
    let rx = cfg.rx_geometry(cfg.rx_spacing)?;
    SweepPoint::new(cfg, "single", cfg.snr_db, 0, rx, cfg.bandwidth_hz, cfg.snr_db)
}

pub fn run_rsi_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepResult>> {
    run_points(cfg, &rsi_points(cfg)?)
}

pub fn run_snr_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepResult>> {
    run_points(cfg, &snr_points(cfg)?)
}

pub fn run_bandwidth_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepResult>> {
    run_points(cfg, &bandwidth_points(cfg)?)
}

pub fn run_single(cfg: &ExperimentConfig) -> Result<Vec<SweepResult>> {
    run_points(cfg, &[single_point(cfg)?])
}

/// Mean and standard error of one algorithm's average SE at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

/// Groups rows by (name, value, algorithm) in first-seen order.
pub fn summarize(rows: &[SweepResult]) -> Vec<(String, f64, Algorithm, Summary)> {
    let mut groups: Vec<(String, f64, Algorithm, Vec<f64>)> = Vec::new();
    for r in rows {
        match groups
            .iter_mut()
            .find(|g| g.0 == r.sweep_name && g.1 == r.sweep_value && g.2 == r.algorithm)
        {
            Some(g) => g.3.push(r.average_se_bits),
            None => groups.push((r.sweep_name.clone(), r.sweep_value, r.algorithm, vec![r.average_se_bits])),
        }
    }
    groups
        .into_iter()
        .map(|(name, value, alg, xs)| (name, value, alg, summary_of(&xs)))
        .collect()
}

pub fn summary_of(xs: &[f64]) -> Summary {
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Summary { mean, std_error, count: n }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            rx_total: 16,
            rsi_sweep: vec![1, 4],
            tx_shape: (2, 2),
            streams: 2,
            rf_chains: 2,
            subcarriers: 8,
            paths: 3,
            trials: 3,
            snr_sweep_db: vec![0.0, 10.0],
            bandwidth_sweep_hz: vec![10e9, 40e9],
            ..Default::default()
        }
    }

    #[test]
    fn rows_are_ordered_and_complete() {
        let cfg = small();
        let rows = run_snr_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 3);
        let keys: Vec<_> = rows
            .iter()
            .map(|r| (r.sweep_value as i64, r.algorithm, r.trial_index))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        for r in &rows {
            assert!(r.normalized_se > 0.0 && r.normalized_se <= 1.0 + 1e-9, "{r:?}");
            if r.algorithm == Algorithm::Dbf {
                assert_eq!(r.average_se_bits, r.r_opt_bits);
            }
        }
    }

    #[test]
    fn reruns_are_bit_identical() {
        let cfg = small();
        assert_eq!(run_rsi_sweep(&cfg).unwrap(), run_rsi_sweep(&cfg).unwrap());
    }

    #[test]
    fn rsi_values_and_bsr() {
        let cfg = small();
        let points = rsi_points(&cfg).unwrap();
        assert_eq!(points[0].value, 1.0 / 16.0);
        assert_eq!(points[1].value, 1.0);
        // 1 x 16 has aperture 8, 4 x 4 has aperture 2
        assert!((points[0].bsr() - 0.1 / 8.0 * 8.0).abs() < 1e-12);
        assert!((points[1].bsr() - 0.1 / 8.0 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn spacing_series_share_path_draws() {
        let cfg = small();
        let points = bandwidth_points(&cfg).unwrap();
        assert_eq!(points.len(), 4);
        assert_eq!(points[0].name, "bandwidth_d0.5");
        assert_eq!(points[2].name, "bandwidth_d0.25");
        let (a, sa) = points[1].channel(cfg.seed, 2).unwrap();
        let (b, sb) = points[3].channel(cfg.seed, 2).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(a.paths(), b.paths());
    }

    #[test]
    fn summary_statistics() {
        let s = summary_of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(summary_of(&[7.0]).std_error, 0.0);
    }
}
