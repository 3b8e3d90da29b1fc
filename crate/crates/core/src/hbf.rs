//! Hybrid beamforming for wideband MIMO-OFDM uplinks.
//!
//! The transmitter uses a fully digital precoder `F[k]` per subcarrier. The
//! receiver applies a frequency-flat, constant-modulus analog combiner `W_RF`
//! followed by per-subcarrier digital combiners `W_BB[k]`; the composite
//! `N_r x N_s` receive matrix is `W_RF * W_BB[k]`.
//!
//! The proposed design runs once, without iteration:
//!
//! 1. initialise the receive matrices with the `N_s` dominant left singular
//!    vectors `U[k]` of each `H[k]`;
//! 2. water-fill the precoders on `U[k] U[k]^H H[k]`;
//! 3. average the projectors onto the dominant subspaces `X[k]` of
//!    `H[k] F[k] F[k]^H H[k]^H` over all subcarriers, take the `N_RF` leading
//!    eigenvectors of the average and keep only their phases;
//! 4. finish with the MMSE digital combiner for every subcarrier.
//!
//! The central-frequency baseline differs only in step 3, which then uses
//! the central subcarrier alone.

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::{
    complete_orthonormal, hermitian_eigen, identity, log2_det_hpd, svd, CMat, C64,
};

/// Largest condition number accepted for combiners and MMSE normal matrices.
pub const MAX_CONDITION: f64 = 1e12;

/// Singular values below this fraction of the largest count as zero.
const RANK_TOL: f64 = 1e-10;

/// Streams, RF chains, noise variance and per-subcarrier power budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    n_s: usize,
    n_rf: usize,
    noise_var: f64,
    power: f64,
}

impl LinkConfig {
    pub fn new(n_s: usize, n_rf: usize, noise_var: f64, power: f64) -> Result<Self> {
        if n_s == 0 {
            return Err(Error::InvalidLink("at least one stream required".into()));
        }
        if n_s > n_rf {
            return Err(Error::InvalidLink(format!(
                "streams ({n_s}) exceed RF chains ({n_rf})"
            )));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::InvalidLink(format!(
                "noise variance must be positive, got {noise_var}"
            )));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(Error::InvalidLink(format!(
                "power budget must be positive, got {power}"
            )));
        }
        Ok(Self {
            n_s,
            n_rf,
            noise_var,
            power,
        })
    }

    /// Unit power budget with `noise_var = 10^(-snr_db / 10)`.
    pub fn from_snr_db(n_s: usize, n_rf: usize, snr_db: f64) -> Result<Self> {
        Self::new(n_s, n_rf, 10f64.powf(-snr_db / 10.0), 1.0)
    }

    /// Checks `n_rf <= min(n_t, n_r)`.
    pub fn check_arrays(&self, n_t: usize, n_r: usize) -> Result<()> {
        if self.n_rf > n_t.min(n_r) {
            return Err(Error::InvalidLink(format!(
                "RF chains ({}) exceed min(N_t, N_r) = {}",
                self.n_rf,
                n_t.min(n_r)
            )));
        }
        Ok(())
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    pub fn n_rf(&self) -> usize {
        self.n_rf
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.power / self.noise_var).log10()
    }
}

/// Output of a hybrid design.
#[derive(Debug, Clone)]
pub struct BeamformerSet {
    /// `N_t x N_s` precoder per subcarrier.
    pub precoders: Vec<CMat>,
    /// `N_r x N_RF`, every entry of modulus `1/sqrt(N_r)`.
    pub analog_combiner: CMat,
    /// `N_RF x N_s` per subcarrier.
    pub digital_combiners: Vec<CMat>,
}

impl BeamformerSet {
    /// Composite receive matrix `W_RF * W_BB[k]` for 0-based subcarrier `idx`.
    pub fn combiner(&self, idx: usize) -> CMat {
        &self.analog_combiner * &self.digital_combiners[idx]
    }
}

#[derive(Debug, Clone)]
pub struct HbfOutcome {
    pub beamformers: BeamformerSet,
    pub per_subcarrier_se: Vec<f64>,
    pub average_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbfOutcome {
    pub per_subcarrier_se: Vec<f64>,
    pub average_se: f64,
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// `log2 det(I + W^+ H F F^H H^H W / noise_var)` in bits/s/Hz.
///
/// Evaluated through the orthonormal basis `U` of `range(W)`: with
/// `W = U S V^H` the pseudo-inverse form is similar to
/// `I + U^H H F F^H H^H U / noise_var`, which is Hermitian positive definite.
pub fn spectral_efficiency(h: &CMat, f: &CMat, w: &CMat, noise_var: f64) -> Result<f64> {
    if f.nrows() != h.ncols() {
        return Err(Error::mismatch(
            format!("precoder with {} rows", h.ncols()),
            format!("{} rows", f.nrows()),
        ));
    }
    if w.nrows() != h.nrows() {
        return Err(Error::mismatch(
            format!("combiner with {} rows", h.nrows()),
            format!("{} rows", w.nrows()),
        ));
    }
    if w.ncols() != f.ncols() {
        return Err(Error::mismatch(
            format!("combiner with {} columns", f.ncols()),
            format!("{} columns", w.ncols()),
        ));
    }
    let dec = svd(w);
    let cond = dec.condition_number();
    if cond > MAX_CONDITION {
        return Err(Error::IllConditioned {
            what: "combiner",
            condition: cond,
        });
    }
    let g = dec.u.adjoint() * (h * f);
    let m = identity(g.nrows()) + &g * g.adjoint() / C64::new(noise_var, 0.0);
    let r = log2_det_hpd(&m).ok_or(Error::IllConditioned {
        what: "SE determinant",
        condition: f64::INFINITY,
    })?;
    Ok(r.max(0.0))
}

/// Water-filling powers `p_i = max(mu - noise_var / gain_i, 0)` summing to
/// `budget`, solved exactly by shrinking the active set.
pub fn waterfill(gains: &[f64], budget: f64, noise_var: f64) -> Result<Vec<f64>> {
    if !(budget > 0.0 && noise_var > 0.0) {
        return Err(Error::InvalidLink(format!(
            "water-filling needs positive budget and noise, got {budget}, {noise_var}"
        )));
    }
    let mut active: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    if active.is_empty() {
        return Err(Error::NoUsableStream);
    }
    active.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]));
    let mut powers = vec![0.0; gains.len()];
    for m in (1..=active.len()).rev() {
        let floors: f64 = active[..m].iter().map(|&i| noise_var / gains[i]).sum();
        let level = (budget + floors) / m as f64;
        if level - noise_var / gains[active[m - 1]] > 0.0 {
            for &i in &active[..m] {
                powers[i] = level - noise_var / gains[i];
            }
            return Ok(powers);
        }
    }
    unreachable!("a single active stream always takes the whole budget")
}

/// Squared singular values with numerically-zero modes clamped to zero.
fn mode_gains(singular_values: &[f64], count: usize) -> Vec<f64> {
    let top = singular_values.first().copied().unwrap_or(0.0);
    (0..count)
        .map(|i| match singular_values.get(i) {
            Some(&s) if s > RANK_TOL * top => s * s,
            _ => 0.0,
        })
        .collect()
}

/// Water-filling precoder `V * diag(sqrt(p))` on the `N_s` strongest right
/// singular modes of `h_eff`. Modes that receive no power give zero columns.
pub fn design_precoder(h_eff: &CMat, link: &LinkConfig) -> Result<CMat> {
    let n_s = link.n_s();
    let n_t = h_eff.ncols();
    if n_s > n_t {
        return Err(Error::mismatch(format!("at most {n_t} streams"), n_s));
    }
    let dec = svd(h_eff);
    let gains = mode_gains(&dec.singular_values, n_s);
    let powers = waterfill(&gains, link.power(), link.noise_var())?;
    let mut f = CMat::zeros(n_t, n_s);
    for (i, p) in powers.iter().enumerate() {
        if *p > 0.0 && i < dec.v.ncols() {
            f.set_column(i, &(dec.v.column(i) * C64::new(p.sqrt(), 0.0)));
        }
    }
    Ok(f)
}

/// Indices of the precoder columns that carry power.
fn active_streams(f: &CMat) -> Vec<usize> {
    (0..f.ncols()).filter(|&j| f.column(j).norm() > 0.0).collect()
}

/// MMSE digital combiner `(J J^H + noise_var W_RF^H W_RF)^-1 J` with
/// `J = W_RF^H H F`.
pub fn mmse_combiner(w_rf: &CMat, h: &CMat, f: &CMat, noise_var: f64) -> Result<CMat> {
    if w_rf.nrows() != h.nrows() || f.nrows() != h.ncols() {
        return Err(Error::mismatch(
            format!("W_RF with {} rows and F with {} rows", h.nrows(), h.ncols()),
            format!("{} and {}", w_rf.nrows(), f.nrows()),
        ));
    }
    let j = w_rf.adjoint() * (h * f);
    let a = &j * j.adjoint() + w_rf.adjoint() * w_rf * C64::new(noise_var, 0.0);
    let (eig, _) = hermitian_eigen(&a);
    let (hi, lo) = (eig[0], eig[eig.len() - 1]);
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(Error::IllConditioned {
            what: "MMSE normal matrix",
            condition: cond,
        });
    }
    let chol = a.cholesky().ok_or(Error::IllConditioned {
        what: "MMSE normal matrix",
        condition: cond,
    })?;
    Ok(chol.solve(&j))
}

/// Orthonormal basis of the signal subspace of `H F`: its left singular
/// vectors with nonzero singular value, at most `F.ncols()` of them.
pub fn signal_subspace(h: &CMat, f: &CMat) -> CMat {
    let dec = svd(&(h * f));
    let r = dec.rank(RANK_TOL).min(f.ncols());
    dec.u.columns(0, r).into_owned()
}

/// Average of the projectors `X X^H` over `subspaces`.
pub fn subspace_average(subspaces: &[CMat]) -> CMat {
    let n = subspaces[0].nrows();
    let mut t = CMat::zeros(n, n);
    for x in subspaces {
        t += x * x.adjoint();
    }
    t / C64::new(subspaces.len() as f64, 0.0)
}

/// The `n_rf` leading eigenvectors of the projector average of `subspaces`.
///
/// Eigenvectors come from whichever is smaller of `T_e = S S^H` and the Gram
/// matrix `S^H S`, where `S` stacks the subspaces side by side. If `T_e` has
/// fewer than `n_rf` nonzero eigenvalues the basis is completed
/// deterministically from the standard basis.
pub fn combiner_subspace(subspaces: &[CMat], n_r: usize, n_rf: usize) -> Result<CMat> {
    if n_rf > n_r {
        return Err(Error::mismatch(format!("at most {n_r} RF chains"), n_rf));
    }
    let cols: usize = subspaces.iter().map(|x| x.ncols()).sum();
    if cols == 0 {
        return Err(Error::NoUsableStream);
    }
    let mut stack = CMat::zeros(n_r, cols);
    let mut at = 0;
    for x in subspaces {
        if x.nrows() != n_r {
            return Err(Error::mismatch(format!("{n_r} rows"), x.nrows()));
        }
        stack.columns_mut(at, x.ncols()).copy_from(x);
        at += x.ncols();
    }
    stack /= C64::new((subspaces.len() as f64).sqrt(), 0.0);

    let basis = if n_r <= cols {
        let (vals, vecs) = hermitian_eigen(&(&stack * stack.adjoint()));
        let keep = vals
            .iter()
            .take(n_rf)
            .take_while(|&&v| v > RANK_TOL * vals[0])
            .count();
        vecs.columns(0, keep).into_owned()
    } else {
        let (vals, vecs) = hermitian_eigen(&(stack.adjoint() * &stack));
        let keep = vals
            .iter()
            .take(n_rf)
            .take_while(|&&v| v > RANK_TOL * vals[0])
            .count();
        let mut u = &stack * vecs.columns(0, keep);
        for (i, mut c) in u.column_iter_mut().enumerate() {
            c /= C64::new(vals[i].sqrt(), 0.0);
        }
        u
    };
    Ok(complete_orthonormal(basis, n_rf))
}

/// Constant-modulus projection `exp(j angle(u)) / sqrt(N_r)`, zero entries
/// taking phase 0.
pub fn phase_project(u: &CMat) -> CMat {
    let scale = 1.0 / (u.nrows() as f64).sqrt();
    u.map(|z| {
        if z.norm() == 0.0 {
            C64::new(scale, 0.0)
        } else {
            C64::from_polar(scale, z.arg())
        }
    })
}

/// Frequency-flat analog combiner from the subspaces of every subcarrier.
pub fn analog_combiner(channels: &ChannelRealization, precoders: &[CMat], n_rf: usize) -> Result<CMat> {
    if precoders.len() != channels.matrices().len() {
        return Err(Error::mismatch(
            format!("{} precoders", channels.matrices().len()),
            precoders.len(),
        ));
    }
    let xs: Vec<CMat> = channels
        .matrices()
        .iter()
        .zip(precoders)
        .map(|(h, f)| signal_subspace(h, f))
        .collect();
    let u = combiner_subspace(&xs, channels.n_rx(), n_rf)?;
    Ok(phase_project(&u))
}

/// `sum_i log2(1 + gain_i p_i / noise_var)` with water-filled powers.
fn waterfilled_rate(gains: &[f64], link: &LinkConfig) -> Result<f64> {
    let powers = waterfill(gains, link.power(), link.noise_var())?;
    Ok(gains
        .iter()
        .zip(&powers)
        .map(|(g, p)| (1.0 + g * p / link.noise_var()).log2())
        .sum())
}

fn check_link(channels: &ChannelRealization, link: &LinkConfig) -> Result<()> {
    link.check_arrays(channels.n_tx(), channels.n_rx())
}

/// Optimal fully digital benchmark: per subcarrier water-filling over the
/// `N_s` strongest singular modes of `H[k]`.
pub fn optimal_dbf(channels: &ChannelRealization, link: &LinkConfig) -> Result<DbfOutcome> {
    check_link(channels, link)?;
    let per_subcarrier_se = channels
        .matrices()
        .iter()
        .map(|h| waterfilled_rate(&mode_gains(&svd(h).singular_values, link.n_s()), link))
        .collect::<Result<Vec<_>>>()?;
    Ok(DbfOutcome {
        average_se: mean(&per_subcarrier_se),
        per_subcarrier_se,
    })
}

/// Which subcarriers feed the analog combiner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombinerScope {
    /// Average over every subcarrier (the proposed design).
    AllSubcarriers,
    /// Central subcarrier only (the HBF-DCF baseline).
    CentralSubcarrier,
}

/// Steps 1-2 of the design plus the per-subcarrier subspaces, shared between
/// the proposed design, the central-frequency baseline and the digital
/// benchmark so a trial decomposes each `H[k]` once.
#[derive(Debug, Clone)]
pub struct PrecoderStage {
    precoders: Vec<CMat>,
    subspaces: Vec<CMat>,
    optimal_se: Vec<f64>,
}

impl PrecoderStage {
    pub fn new(channels: &ChannelRealization, link: &LinkConfig) -> Result<Self> {
        check_link(channels, link)?;
        let n_s = link.n_s();
        let mut precoders = Vec::with_capacity(channels.matrices().len());
        let mut subspaces = Vec::with_capacity(channels.matrices().len());
        let mut optimal_se = Vec::with_capacity(channels.matrices().len());
        for h in channels.matrices() {
            let dec = svd(h);
            optimal_se.push(waterfilled_rate(&mode_gains(&dec.singular_values, n_s), link)?);
            let u = dec.u.columns(0, n_s);
            let h_eff = u * (u.adjoint() * h);
            let f = design_precoder(&h_eff, link)?;
            subspaces.push(signal_subspace(h, &f));
            precoders.push(f);
        }
        Ok(Self {
            precoders,
            subspaces,
            optimal_se,
        })
    }

    pub fn precoders(&self) -> &[CMat] {
        &self.precoders
    }

    /// `X[k]` for every subcarrier, in order.
    pub fn subspaces(&self) -> &[CMat] {
        &self.subspaces
    }

    pub fn optimal(&self) -> DbfOutcome {
        DbfOutcome {
            per_subcarrier_se: self.optimal_se.clone(),
            average_se: mean(&self.optimal_se),
        }
    }

    /// Steps 3-4: analog combiner for `scope`, MMSE digital combiners and
    /// the resulting spectral efficiency.
    pub fn finish(
        &self,
        channels: &ChannelRealization,
        link: &LinkConfig,
        scope: CombinerScope,
    ) -> Result<HbfOutcome> {
        let xs = match scope {
            CombinerScope::AllSubcarriers => &self.subspaces[..],
            CombinerScope::CentralSubcarrier => {
                let kc = channels.grid().central_index() - 1;
                &self.subspaces[kc..=kc]
            }
        };
        let w_rf = phase_project(&combiner_subspace(xs, channels.n_rx(), link.n_rf())?);
        let mut digital = Vec::with_capacity(self.precoders.len());
        let mut rates = Vec::with_capacity(self.precoders.len());
        for (h, f) in channels.matrices().iter().zip(&self.precoders) {
            let w_bb = mmse_combiner(&w_rf, h, f, link.noise_var())?;
            // dark streams get zero combiner columns; W^+ ignores them
            let active = active_streams(f);
            rates.push(spectral_efficiency(
                h,
                &f.select_columns(&active),
                &(&w_rf * w_bb.select_columns(&active)),
                link.noise_var(),
            )?);
            digital.push(w_bb);
        }
        Ok(HbfOutcome {
            beamformers: BeamformerSet {
                precoders: self.precoders.clone(),
                analog_combiner: w_rf,
                digital_combiners: digital,
            },
            average_se: mean(&rates),
            per_subcarrier_se: rates,
        })
    }
}

/// The proposed single-pass hybrid design.
pub fn hbf_algorithm1(channels: &ChannelRealization, link: &LinkConfig) -> Result<HbfOutcome> {
    PrecoderStage::new(channels, link)?.finish(channels, link, CombinerScope::AllSubcarriers)
}

/// Baseline whose analog combiner is designed for the central subcarrier.
pub fn hbf_dcf(channels: &ChannelRealization, link: &LinkConfig) -> Result<HbfOutcome> {
    PrecoderStage::new(channels, link)?.finish(channels, link, CombinerScope::CentralSubcarrier)
}
