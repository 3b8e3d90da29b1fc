//! Beam squint analysis for uniform planar arrays and hybrid beamforming
//! design for wideband MIMO-OFDM links.
//!
//! The crate is split into three layers:
//!
//! - [`array`]: array geometry, frequency-dependent steering vectors,
//!   normalized array gain and the beam squint ratio (BSR).
//! - [`channel`]: the statistical tap-delay channel and its per-subcarrier
//!   frequency-domain matrices.
//! - [`hbf`]: spectral efficiency, water-filling precoding, MMSE combining and
//!   the frequency-flat analog combiner built from the subcarrier-averaged
//!   signal subspace, plus the optimal digital and central-frequency
//!   baselines.

pub mod array;
pub mod channel;
mod error;
pub mod hbf;
pub mod linalg;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec, C64};
