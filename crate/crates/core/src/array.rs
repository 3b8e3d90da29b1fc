//! Uniform planar array model and beam squint metrics.
//!
//! Element `(m, n)` of an `n_h x n_v` array (horizontal index `m`, vertical
//! index `n`) sits at position `m * n_v + n` in every steering vector,
//! i.e. the horizontal factor of the Kronecker product varies slowest.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{CVec, C64};

/// Antenna counts and wavelength-normalized spacings of a planar array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    n_h: usize,
    n_v: usize,
    spacing_h: f64,
    spacing_v: f64,
}

impl ArrayGeometry {
    pub fn new(n_h: usize, n_v: usize, spacing_h: f64, spacing_v: f64) -> Result<Self> {
        if n_h == 0 || n_v == 0 {
            return Err(Error::InvalidGeometry(format!(
                "antenna counts must be positive, got {n_h}x{n_v}"
            )));
        }
        if !(spacing_h > 0.0 && spacing_h.is_finite() && spacing_v > 0.0 && spacing_v.is_finite())
        {
            return Err(Error::InvalidGeometry(format!(
                "spacings must be positive, got ({spacing_h}, {spacing_v})"
            )));
        }
        Ok(Self {
            n_h,
            n_v,
            spacing_h,
            spacing_v,
        })
    }

    /// Array with the same spacing along both dimensions.
    pub fn uniform(n_h: usize, n_v: usize, spacing: f64) -> Result<Self> {
        Self::new(n_h, n_v, spacing, spacing)
    }

    pub fn half_wavelength(n_h: usize, n_v: usize) -> Result<Self> {
        Self::uniform(n_h, n_v, 0.5)
    }

    pub fn n_h(&self) -> usize {
        self.n_h
    }

    pub fn n_v(&self) -> usize {
        self.n_v
    }

    pub fn spacing_h(&self) -> f64 {
        self.spacing_h
    }

    pub fn spacing_v(&self) -> f64 {
        self.spacing_v
    }

    /// Total element count `n_h * n_v`.
    pub fn len(&self) -> usize {
        self.n_h * self.n_v
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Horizontal aperture in wavelengths, `n_h * spacing_h`.
    pub fn aperture_h(&self) -> f64 {
        self.n_h as f64 * self.spacing_h
    }

    pub fn aperture_v(&self) -> f64 {
        self.n_v as f64 * self.spacing_v
    }

    /// Width/length ratio in `(0, 1]`; 1 for a square array.
    pub fn shape_ratio(&self) -> f64 {
        self.n_h.min(self.n_v) as f64 / self.n_h.max(self.n_v) as f64
    }
}

/// Physical arrival or departure direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    /// Azimuth in radians.
    pub azimuth: f64,
    /// Elevation in radians.
    pub elevation: f64,
}

impl Direction {
    pub fn new(azimuth: f64, elevation: f64) -> Self {
        Self { azimuth, elevation }
    }

    /// `sin(azimuth) * sin(elevation)`, the horizontal spatial frequency.
    pub fn spatial_h(&self) -> f64 {
        self.azimuth.sin() * self.elevation.sin()
    }

    /// `cos(azimuth)`, the vertical spatial frequency.
    pub fn spatial_v(&self) -> f64 {
        self.azimuth.cos()
    }

    pub fn spatial(&self) -> SpatialFreq {
        SpatialFreq::new(self.spatial_h(), self.spatial_v())
    }
}

/// Direction expressed directly in spatial-frequency coordinates.
///
/// Not every pair in `[-1, 1]^2` corresponds to a physical direction; gain
/// maps and BSR integrals still treat the two coordinates independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialFreq {
    pub h: f64,
    pub v: f64,
}

impl SpatialFreq {
    pub fn new(h: f64, v: f64) -> Self {
        Self { h, v }
    }
}

impl From<Direction> for SpatialFreq {
    fn from(dir: Direction) -> Self {
        dir.spatial()
    }
}

impl From<&Direction> for SpatialFreq {
    fn from(dir: &Direction) -> Self {
        dir.spatial()
    }
}

/// OFDM subcarrier grid centred on the carrier.
///
/// Subcarrier indices are 1-based throughout: `f_k = f_c + (k - (K+1)/2) B/K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    carrier_hz: f64,
    bandwidth_hz: f64,
    n_subcarriers: usize,
}

impl FrequencyGrid {
    pub fn new(carrier_hz: f64, bandwidth_hz: f64, n_subcarriers: usize) -> Result<Self> {
        if !(carrier_hz > 0.0 && carrier_hz.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "carrier must be positive, got {carrier_hz}"
            )));
        }
        if !(bandwidth_hz >= 0.0 && bandwidth_hz < carrier_hz) {
            return Err(Error::InvalidGrid(format!(
                "bandwidth must lie in [0, carrier), got {bandwidth_hz}"
            )));
        }
        if n_subcarriers == 0 {
            return Err(Error::InvalidGrid("at least one subcarrier required".into()));
        }
        Ok(Self {
            carrier_hz,
            bandwidth_hz,
            n_subcarriers,
        })
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.bandwidth_hz
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    /// `B / f_c`.
    pub fn fractional_bandwidth(&self) -> f64 {
        self.bandwidth_hz / self.carrier_hz
    }

    fn offset(&self, k: usize) -> f64 {
        debug_assert!((1..=self.n_subcarriers).contains(&k));
        k as f64 - (self.n_subcarriers as f64 + 1.0) / 2.0
    }

    /// Frequency of subcarrier `k` (1-based).
    pub fn subcarrier_hz(&self, k: usize) -> f64 {
        self.carrier_hz + self.offset(k) * self.bandwidth_hz / self.n_subcarriers as f64
    }

    /// Relative deviation `f_k / f_c - 1` of subcarrier `k` (1-based).
    pub fn deviation(&self, k: usize) -> f64 {
        self.offset(k) * self.fractional_bandwidth() / self.n_subcarriers as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (1..=self.n_subcarriers).map(|k| self.subcarrier_hz(k)).collect()
    }

    pub fn deviations(&self) -> Vec<f64> {
        (1..=self.n_subcarriers).map(|k| self.deviation(k)).collect()
    }

    /// Lowest subcarrier frequency `f_1`.
    pub fn min_hz(&self) -> f64 {
        self.subcarrier_hz(1)
    }

    /// Highest subcarrier frequency `f_K`.
    pub fn max_hz(&self) -> f64 {
        self.subcarrier_hz(self.n_subcarriers)
    }

    /// 1-based index of the subcarrier closest to the carrier, the lower one
    /// on a tie.
    pub fn central_index(&self) -> usize {
        self.n_subcarriers.div_ceil(2)
    }
}

fn ula_phases(count: usize, spacing: f64, spatial: f64, ratio: f64) -> impl Iterator<Item = C64> {
    let step = 2.0 * PI * spacing * ratio * spatial;
    (0..count).map(move |i| C64::from_polar(1.0, step * i as f64))
}

/// Steering vector for the spatial direction `dir` at `freq_ratio = f / f_c`.
pub fn steering_vector_at_ratio(
    geom: &ArrayGeometry,
    dir: impl Into<SpatialFreq>,
    freq_ratio: f64,
) -> CVec {
    let s = dir.into();
    let h: Vec<C64> = ula_phases(geom.n_h, geom.spacing_h, s.h, freq_ratio).collect();
    let v: Vec<C64> = ula_phases(geom.n_v, geom.spacing_v, s.v, freq_ratio).collect();
    let scale = 1.0 / (geom.len() as f64).sqrt();
    CVec::from_iterator(
        geom.len(),
        h.iter().flat_map(|&a| v.iter().map(move |&b| a * b * scale)),
    )
}

/// Unit-norm array response `a_h(rho, f) ⊗ a_v(varrho, f)`.
pub fn steering_vector(
    geom: &ArrayGeometry,
    dir: impl Into<SpatialFreq>,
    freq_hz: f64,
    carrier_hz: f64,
) -> CVec {
    steering_vector_at_ratio(geom, dir, freq_hz / carrier_hz)
}

/// `|w^H a(dir, f)|`.
pub fn normalized_array_gain(
    w: &CVec,
    dir: impl Into<SpatialFreq>,
    freq_hz: f64,
    geom: &ArrayGeometry,
    carrier_hz: f64,
) -> Result<f64> {
    if w.len() != geom.len() {
        return Err(Error::mismatch(
            format!("combiner of length {}", geom.len()),
            format!("length {}", w.len()),
        ));
    }
    let a = steering_vector(geom, dir, freq_hz, carrier_hz);
    Ok(w.dotc(&a).norm())
}

/// Normalized Dirichlet kernel `sin(n pi x) / (n sin(pi x))`.
///
/// At integer `x` the removable singularity takes its limit `(-1)^{x(n-1)}`.
pub fn dirichlet_kernel(n: usize, x: f64) -> f64 {
    assert!(n >= 1, "dirichlet kernel order must be positive");
    let nf = n as f64;
    let den = (PI * x).sin();
    if den.abs() < 1e-12 {
        let m = x.round() as i64;
        if (m * (n as i64 - 1)).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    } else {
        (nf * PI * x).sin() / (nf * den)
    }
}

/// Closed-form gain of the beam matched to `matched` at the carrier, seen
/// from direction `observed` at `freq_ratio = f / f_c`.
pub fn beam_gain_closed_form(
    geom: &ArrayGeometry,
    matched: SpatialFreq,
    observed: SpatialFreq,
    freq_ratio: f64,
) -> f64 {
    let gh = dirichlet_kernel(geom.n_h, geom.spacing_h * (freq_ratio * observed.h - matched.h));
    let gv = dirichlet_kernel(geom.n_v, geom.spacing_v * (freq_ratio * observed.v - matched.v));
    gh.abs() * gv.abs()
}

/// Gain of the carrier-matched beam toward its own direction at relative
/// frequency deviation `xi = f / f_c - 1`.
pub fn array_gain_closed_form(geom: &ArrayGeometry, dir: impl Into<SpatialFreq>, xi: f64) -> f64 {
    let s = dir.into();
    dirichlet_kernel(geom.n_h, geom.spacing_h * xi * s.h).abs()
        * dirichlet_kernel(geom.n_v, geom.spacing_v * xi * s.v).abs()
}

/// Closed-form beam squint ratio `(b / 8) * max(N_h Δ_h, N_v Δ_v)`.
pub fn bsr_closed_form(geom: &ArrayGeometry, fractional_bandwidth: f64) -> f64 {
    fractional_bandwidth / 8.0 * geom.aperture_h().max(geom.aperture_v())
}

/// Beam squint ratio as the finite average over the subcarriers of `grid`.
///
/// Each direction integral is done analytically: `(1/2) ∫_{-1}^{1} |x| dx = 1/2`.
pub fn bsr_numerical(geom: &ArrayGeometry, grid: &FrequencyGrid) -> f64 {
    const HALF_MEAN_ABS: f64 = 0.5;
    let k = grid.n_subcarriers() as f64;
    grid.deviations()
        .iter()
        .map(|xi| {
            let h = HALF_MEAN_ABS * xi.abs() * geom.aperture_h();
            let v = HALF_MEAN_ABS * xi.abs() * geom.aperture_v();
            h.max(v)
        })
        .sum::<f64>()
        / k
}

/// Factorization `n_h * n_v = n_total` with the smallest BSR at equal
/// spacings, preferring `n_h >= n_v` on ties.
pub fn optimal_upa_shape(n_total: usize) -> Result<(usize, usize)> {
    if n_total == 0 {
        return Err(Error::InvalidGeometry("array needs at least one antenna".into()));
    }
    let mut best = (n_total, 1);
    for n_v in 1..=n_total {
        if !n_total.is_multiple_of(n_v) {
            continue;
        }
        let n_h = n_total / n_v;
        // n_v ascends, so the first factorization reaching a given maximum
        // already has n_h >= n_v
        if n_h.max(n_v) < best.0.max(best.1) {
            best = (n_h, n_v);
        }
    }
    Ok(best)
}
