//! Statistical tap-delay channel for wideband THz links.
//!
//! Each realization draws `L_p` paths with circularly symmetric complex
//! Gaussian gains, uniform delays and uniform arrival/departure angles. The
//! delay-`d` response is a sum of rank-one terms shaped by a raised-cosine
//! pulse, and the per-subcarrier channel is its `D`-point transform
//! `H[k] = sum_d H_d(f_k) exp(-j 2 pi k d / K)` with `k` running `1..=K`.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::array::{steering_vector, ArrayGeometry, Direction, FrequencyGrid};
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub gain: C64,
    pub delay_s: f64,
    pub arrival: Direction,
    pub departure: Direction,
}

/// The multipath parameters of one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    paths: Vec<Path>,
}

impl PathSet {
    pub fn new(paths: Vec<Path>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidChannel("at least one path required".into()));
        }
        Ok(Self { paths })
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Tap-delay line parameters shared by every realization of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayProfile {
    /// Sampling period `T_s` in seconds.
    pub sampling_period_s: f64,
    /// Number of delay taps `D`.
    pub taps: usize,
    /// Raised-cosine roll-off in `[0, 1]`.
    pub rolloff: f64,
}

impl DelayProfile {
    pub fn new(sampling_period_s: f64, taps: usize, rolloff: f64) -> Result<Self> {
        if !(sampling_period_s > 0.0 && sampling_period_s.is_finite()) {
            return Err(Error::InvalidChannel(format!(
                "sampling period must be positive, got {sampling_period_s}"
            )));
        }
        if taps == 0 {
            return Err(Error::InvalidChannel("at least one delay tap required".into()));
        }
        if !(0.0..=1.0).contains(&rolloff) {
            return Err(Error::InvalidChannel(format!(
                "roll-off must lie in [0, 1], got {rolloff}"
            )));
        }
        Ok(Self {
            sampling_period_s,
            taps,
            rolloff,
        })
    }

    /// `T_s = 1 / B` with `D = K / 4` taps (at least one).
    pub fn for_grid(grid: &FrequencyGrid, rolloff: f64) -> Result<Self> {
        if grid.bandwidth_hz() <= 0.0 {
            return Err(Error::InvalidChannel(
                "sampling period 1/B needs a positive bandwidth".into(),
            ));
        }
        Self::new(
            1.0 / grid.bandwidth_hz(),
            (grid.n_subcarriers() / 4).max(1),
            rolloff,
        )
    }

    /// Largest delay a path can take, `(D - 1) T_s`.
    pub fn max_delay_s(&self) -> f64 {
        (self.taps - 1) as f64 * self.sampling_period_s
    }
}

/// Draws `l_p` paths: gains `CN(0, 1)`, delays `U[0, (D-1) T_s]`, azimuths
/// `U(-pi, pi)` and elevations `U(-pi/2, pi/2)` on both link ends.
pub fn sample_paths<R: Rng + ?Sized>(
    rng: &mut R,
    l_p: usize,
    d_taps: usize,
    t_s: f64,
) -> Result<PathSet> {
    if l_p == 0 {
        return Err(Error::InvalidChannel("at least one path required".into()));
    }
    if d_taps == 0 {
        return Err(Error::InvalidChannel("at least one delay tap required".into()));
    }
    let max_delay = (d_taps - 1) as f64 * t_s;
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let paths = (0..l_p)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let delay_s = if max_delay > 0.0 {
                rng.random_range(0.0..=max_delay)
            } else {
                0.0
            };
            let arrival = Direction::new(rng.random_range(-PI..PI), rng.random_range(-PI / 2.0..PI / 2.0));
            let departure = Direction::new(rng.random_range(-PI..PI), rng.random_range(-PI / 2.0..PI / 2.0));
            Path {
                gain: C64::new(re * scale, im * scale),
                delay_s,
                arrival,
                departure,
            }
        })
        .collect();
    PathSet::new(paths)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Raised-cosine impulse response `p(t)` for `T_s`-spaced signalling.
pub fn raised_cosine(t: f64, t_s: f64, rolloff: f64) -> f64 {
    let x = t / t_s;
    let den = 1.0 - (2.0 * rolloff * x).powi(2);
    if rolloff > 0.0 && den.abs() < 1e-10 {
        // t = ±T_s / (2β)
        PI / 4.0 * sinc(1.0 / (2.0 * rolloff))
    } else {
        sinc(x) * (PI * rolloff * x).cos() / den
    }
}

/// Scaling `sqrt(N_r N_t / L_p)` applied to every tap.
fn path_scale(rx: &ArrayGeometry, tx: &ArrayGeometry, paths: &PathSet) -> f64 {
    ((rx.len() * tx.len()) as f64 / paths.len() as f64).sqrt()
}

fn accumulate_rank_one(
    h: &mut CMat,
    coef: C64,
    path: &Path,
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
    freq_hz: f64,
    carrier_hz: f64,
) {
    let a_r = steering_vector(rx, path.arrival, freq_hz, carrier_hz);
    let a_t = steering_vector(tx, path.departure, freq_hz, carrier_hz);
    h.gerc(coef, &a_r, &a_t, C64::new(1.0, 0.0));
}

/// Delay-`d` response `H_d(f_k)` for 1-based subcarrier `k`.
pub fn delay_tap_matrix(
    d: usize,
    k: usize,
    paths: &PathSet,
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
    grid: &FrequencyGrid,
    profile: &DelayProfile,
) -> CMat {
    let zeta = path_scale(rx, tx, paths);
    let f_k = grid.subcarrier_hz(k);
    let mut h = CMat::zeros(rx.len(), tx.len());
    for path in paths.paths() {
        let p = raised_cosine(
            d as f64 * profile.sampling_period_s - path.delay_s,
            profile.sampling_period_s,
            profile.rolloff,
        );
        accumulate_rank_one(&mut h, path.gain * (zeta * p), path, rx, tx, f_k, grid.carrier_hz());
    }
    h
}

/// Per-subcarrier channel matrices of one realization.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    matrices: Vec<CMat>,
    grid: FrequencyGrid,
    paths: PathSet,
    profile: DelayProfile,
}

impl ChannelRealization {
    /// Wraps externally built matrices, one per subcarrier of `grid`.
    pub fn from_matrices(
        matrices: Vec<CMat>,
        grid: FrequencyGrid,
        paths: PathSet,
        profile: DelayProfile,
    ) -> Result<Self> {
        if matrices.len() != grid.n_subcarriers() {
            return Err(Error::mismatch(
                format!("{} subcarrier matrices", grid.n_subcarriers()),
                matrices.len(),
            ));
        }
        if let Some(first) = matrices.first() {
            let shape = first.shape();
            if let Some(bad) = matrices.iter().find(|m| m.shape() != shape) {
                return Err(Error::mismatch(format!("{shape:?}"), format!("{:?}", bad.shape())));
            }
        }
        Ok(Self {
            matrices,
            grid,
            paths,
            profile,
        })
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.matrices
    }

    /// Channel of 1-based subcarrier `k`.
    pub fn subcarrier(&self, k: usize) -> &CMat {
        &self.matrices[k - 1]
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn paths(&self) -> &PathSet {
        &self.paths
    }

    pub fn profile(&self) -> &DelayProfile {
        &self.profile
    }

    pub fn n_rx(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.matrices[0].ncols()
    }

    /// Text dump: per subcarrier a `subcarrier <k> <freq_hz> <rows> <cols>`
    /// header, then one line per row of space-separated `re,im` entries.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (i, h) in self.matrices.iter().enumerate() {
            let k = i + 1;
            writeln!(
                out,
                "subcarrier {k} {:e} {} {}",
                self.grid.subcarrier_hz(k),
                h.nrows(),
                h.ncols()
            )?;
            for r in 0..h.nrows() {
                let row: Vec<String> = (0..h.ncols())
                    .map(|c| format!("{:e},{:e}", h[(r, c)].re, h[(r, c)].im))
                    .collect();
                writeln!(out, "{}", row.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Frequency response `G(k) = sum_d p(d T_s - tau) exp(-j 2 pi k d / K)` of
/// one path delay.
fn path_frequency_response(delay_s: f64, k: usize, grid: &FrequencyGrid, profile: &DelayProfile) -> C64 {
    let n = grid.n_subcarriers() as f64;
    (0..profile.taps)
        .map(|d| {
            let p = raised_cosine(
                d as f64 * profile.sampling_period_s - delay_s,
                profile.sampling_period_s,
                profile.rolloff,
            );
            C64::from_polar(p, -2.0 * PI * k as f64 * d as f64 / n)
        })
        .sum()
}

/// Per-subcarrier channels, folding the tap sum into one coefficient per path.
pub fn frequency_channel(
    paths: &PathSet,
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
    grid: &FrequencyGrid,
    profile: &DelayProfile,
) -> ChannelRealization {
    let zeta = path_scale(rx, tx, paths);
    let matrices = (1..=grid.n_subcarriers())
        .map(|k| {
            let f_k = grid.subcarrier_hz(k);
            let mut h = CMat::zeros(rx.len(), tx.len());
            for path in paths.paths() {
                let g = path_frequency_response(path.delay_s, k, grid, profile);
                accumulate_rank_one(&mut h, path.gain * g * zeta, path, rx, tx, f_k, grid.carrier_hz());
            }
            h
        })
        .collect();
    ChannelRealization {
        matrices,
        grid: *grid,
        paths: paths.clone(),
        profile: *profile,
    }
}

/// Per-subcarrier channels by the literal sum over delay taps.
pub fn frequency_channel_tap_sum(
    paths: &PathSet,
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
    grid: &FrequencyGrid,
    profile: &DelayProfile,
) -> ChannelRealization {
    let n = grid.n_subcarriers() as f64;
    let matrices = (1..=grid.n_subcarriers())
        .map(|k| {
            let mut h = CMat::zeros(rx.len(), tx.len());
            for d in 0..profile.taps {
                let phase = C64::from_polar(1.0, -2.0 * PI * k as f64 * d as f64 / n);
                h += delay_tap_matrix(d, k, paths, rx, tx, grid, profile) * phase;
            }
            h
        })
        .collect();
    ChannelRealization {
        matrices,
        grid: *grid,
        paths: paths.clone(),
        profile: *profile,
    }
}
