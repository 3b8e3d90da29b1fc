//! Beam gain maps over the spatial-frequency plane.

use std::io::Write;

use squint_core::array::{beam_gain_closed_form, ArrayGeometry, FrequencyGrid, SpatialFreq};

use crate::error::{Result, SimError};
use crate::output::format_g;

pub const HEADER: &str = "frequency,freq_hz,rho,varrho,gain";

/// Band edges and carrier of a grid, labelled.
pub fn band_frequencies(grid: &FrequencyGrid) -> [(&'static str, f64); 3] {
    [
        ("f_min", grid.min_hz()),
        ("f_c", grid.carrier_hz()),
        ("f_max", grid.max_hz()),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSample {
    pub label: &'static str,
    pub freq_hz: f64,
    pub rho: f64,
    pub varrho: f64,
    pub gain: f64,
}

/// `resolution` evenly spaced points covering `[-1, 1]`.
pub fn axis(resolution: usize) -> Vec<f64> {
    let step = 2.0 / (resolution - 1) as f64;
    (0..resolution).map(|i| -1.0 + i as f64 * step).collect()
}

/// Gain of the beam matched to `matched` at the carrier, tabulated on a
/// `resolution x resolution` grid over `(rho, varrho)` at each of the band
/// frequencies of `grid`.
pub fn gain_map(
    geom: &ArrayGeometry,
    grid: &FrequencyGrid,
    matched: SpatialFreq,
    resolution: usize,
) -> Result<Vec<GainSample>> {
    if resolution < 2 {
        return Err(SimError::config(format!("resolution {resolution} must be at least 2")));
    }
    let pts = axis(resolution);
    let mut out = Vec::with_capacity(3 * resolution * resolution);
    for (label, f) in band_frequencies(grid) {
        let ratio = f / grid.carrier_hz();
        for &rho in &pts {
            for &varrho in &pts {
                let gain = beam_gain_closed_form(geom, matched, SpatialFreq::new(rho, varrho), ratio);
                out.push(GainSample {
                    label,
                    freq_hz: f,
                    rho,
                    varrho,
                    gain,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cut {
    /// Vary `rho` with `varrho` held at the matched value.
    Horizontal,
    /// Vary `varrho` with `rho` held at the matched value.
    Vertical,
}

/// Gain along a one-dimensional cut through the matched direction, at
/// `freq_ratio = f / f_c`.
pub fn gain_cut(
    geom: &ArrayGeometry,
    matched: SpatialFreq,
    freq_ratio: f64,
    cut: Cut,
    coords: &[f64],
) -> Vec<f64> {
    coords
        .iter()
        .map(|&c| {
            let observed = match cut {
                Cut::Horizontal => SpatialFreq::new(c, matched.v),
                Cut::Vertical => SpatialFreq::new(matched.h, c),
            };
            beam_gain_closed_form(geom, matched, observed, freq_ratio)
        })
        .collect()
}

pub fn write_gain_map<W: Write>(samples: &[GainSample], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for s in samples {
        writeln!(
            out,
            "{},{},{},{},{}",
            s.label,
            format_g(s.freq_hz),
            format_g(s.rho),
            format_g(s.varrho),
            format_g(s.gain)
        )?;
    }
    Ok(())
}
