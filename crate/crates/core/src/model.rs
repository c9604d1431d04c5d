//! Downlink joint-transmission signal model.
//!
//! The UE receives `y = sum_b H_b W_b x + n` with `E{xx^H} = I` and white
//! noise `E{nn^H} = N0 I`. Everything else in the crate is built on the
//! equivalent channel, the Wiener receiver and the closed-form sub-stream MSEs
//! defined here.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Per-BS channels `H_b` (each `nr x nt`) and the noise power `N0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    nt: usize,
    nr: usize,
    channels: Vec<CMatrix>,
    n0: f64,
}

impl ChannelSet {
    pub fn new(channels: Vec<CMatrix>, n0: f64) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidInput("channel set needs at least one BS".into()))?;
        let (nr, nt) = first.shape();
        if nr == 0 || nt == 0 {
            return Err(Error::InvalidInput("channel matrices must be non-empty".into()));
        }
        if let Some((b, h)) = channels.iter().enumerate().find(|(_, h)| h.shape() != (nr, nt)) {
            return Err(Error::InvalidInput(format!(
                "channel {b} is {}x{}, expected {nr}x{nt}",
                h.nrows(),
                h.ncols()
            )));
        }
        if !(n0 > 0.0) || !n0.is_finite() {
            return Err(Error::InvalidInput(format!("noise power must be positive, got {n0}")));
        }
        Ok(Self { nt, nr, channels, n0 })
    }

    /// Number of BSs in the JT set.
    pub fn bs_count(&self) -> usize {
        self.channels.len()
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn nr(&self) -> usize {
        self.nr
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn channel(&self, b: usize) -> &CMatrix {
        &self.channels[b]
    }

    pub fn channels(&self) -> &[CMatrix] {
        &self.channels
    }

    /// Same channels at a different noise power.
    pub fn with_noise(&self, n0: f64) -> Result<Self> {
        Self::new(self.channels.clone(), n0)
    }

    /// The `nr x (B nt)` global channel `[H_1, ..., H_B]`.
    pub fn global(&self) -> CMatrix {
        let mut h = CMatrix::zeros(self.nr, self.nt * self.bs_count());
        for (b, hb) in self.channels.iter().enumerate() {
            h.view_mut((0, b * self.nt), (self.nr, self.nt)).copy_from(hb);
        }
        h
    }
}

/// Per-BS precoders `W_b` (each `nt x L`) sharing one per-BS power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    precoders: Vec<CMatrix>,
    streams: usize,
    power_budget: f64,
}

impl PrecoderSet {
    pub fn new(precoders: Vec<CMatrix>, power_budget: f64) -> Result<Self> {
        let first = precoders
            .first()
            .ok_or_else(|| Error::InvalidInput("precoder set needs at least one BS".into()))?;
        let shape = first.shape();
        if shape.1 == 0 {
            return Err(Error::InvalidInput("precoders need at least one stream".into()));
        }
        if precoders.iter().any(|w| w.shape() != shape) {
            return Err(Error::InvalidInput("precoders must share one shape".into()));
        }
        if !(power_budget > 0.0) {
            return Err(Error::InvalidInput(format!(
                "power budget must be positive, got {power_budget}"
            )));
        }
        Ok(Self { streams: shape.1, precoders, power_budget })
    }

    pub fn streams(&self) -> usize {
        self.streams
    }

    pub fn power_budget(&self) -> f64 {
        self.power_budget
    }

    pub fn precoder(&self, b: usize) -> &CMatrix {
        &self.precoders[b]
    }

    pub fn precoders(&self) -> &[CMatrix] {
        &self.precoders
    }

    pub fn bs_count(&self) -> usize {
        self.precoders.len()
    }

    /// `tr{W_b^H W_b}` for each BS.
    pub fn bs_powers(&self) -> Vec<f64> {
        self.precoders.iter().map(linalg::total_power).collect()
    }

    /// Whether every BS meets `tr{W_b^H W_b} <= P` up to a relative `1e-9`.
    pub fn is_power_feasible(&self) -> bool {
        let limit = self.power_budget * (1.0 + 1e-9);
        self.bs_powers().iter().all(|&p| p <= limit)
    }

    /// Vertical stack `[W_1; ...; W_B]`.
    pub fn stacked(&self) -> CMatrix {
        let nt = self.precoders[0].nrows();
        let mut w = CMatrix::zeros(nt * self.bs_count(), self.streams);
        for (b, wb) in self.precoders.iter().enumerate() {
            w.view_mut((b * nt, 0), (nt, self.streams)).copy_from(wb);
        }
        w
    }
}

/// Which BSs take part in the current slot. The serving BS (index 0) always does.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParticipationState {
    active: Vec<bool>,
}

impl ParticipationState {
    pub fn new(active: Vec<bool>) -> Result<Self> {
        match active.first() {
            Some(true) => Ok(Self { active }),
            Some(false) => Err(Error::InvalidInput("the serving BS is always active".into())),
            None => Err(Error::InvalidInput("participation state needs at least one BS".into())),
        }
    }

    pub fn full(bs_count: usize) -> Self {
        Self { active: vec![true; bs_count.max(1)] }
    }

    /// Only the serving BS transmits.
    pub fn serving_only(bs_count: usize) -> Self {
        let mut active = vec![false; bs_count.max(1)];
        active[0] = true;
        Self { active }
    }

    pub fn is_active(&self, b: usize) -> bool {
        self.active[b]
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }
}

/// Linear receiver `F` (`L x nr`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverFilter {
    pub matrix: CMatrix,
}

/// Per-stream MSEs and the indices of the worst and best stream.
#[derive(Debug, Clone, PartialEq)]
pub struct MseReport {
    pub per_stream: Vec<f64>,
    pub max_index: usize,
    pub min_index: usize,
}

impl MseReport {
    pub fn from_values(per_stream: Vec<f64>) -> Self {
        let max_index = linalg::argmax(&per_stream);
        let min_index = linalg::argmin(&per_stream);
        Self { per_stream, max_index, min_index }
    }

    pub fn max(&self) -> f64 {
        self.per_stream[self.max_index]
    }

    pub fn min(&self) -> f64 {
        self.per_stream[self.min_index]
    }

    pub fn mean(&self) -> f64 {
        self.per_stream.iter().sum::<f64>() / self.per_stream.len() as f64
    }
}

/// `sum over active b of H_b W_b`; muted BSs contribute nothing.
pub fn build_equivalent_channel(
    ch: &ChannelSet,
    pc: &PrecoderSet,
    state: &ParticipationState,
) -> Result<CMatrix> {
    let b_count = ch.bs_count();
    if pc.bs_count() != b_count || state.len() != b_count {
        return Err(Error::InvalidInput(format!(
            "{b_count} channels but {} precoders and {} participation flags",
            pc.bs_count(),
            state.len()
        )));
    }
    if pc.precoder(0).nrows() != ch.nt() {
        return Err(Error::InvalidInput(format!(
            "precoders have {} rows, channels have {} columns",
            pc.precoder(0).nrows(),
            ch.nt()
        )));
    }
    let mut h_eq = CMatrix::zeros(ch.nr(), pc.streams());
    for b in (0..b_count).filter(|&b| state.is_active(b)) {
        h_eq += ch.channel(b) * pc.precoder(b);
    }
    Ok(h_eq)
}

/// Wiener receiver `F = H^H (H H^H + N0 I)^{-1}`.
pub fn wiener_filter(h_eq: &CMatrix, n0: f64) -> ReceiverFilter {
    let nr = h_eq.nrows();
    let mut gram = h_eq * h_eq.adjoint();
    for i in 0..nr {
        gram[(i, i)] += n0;
    }
    // The Gram matrix plus N0 I is Hermitian positive definite for N0 > 0.
    let f_adj = linalg::solve_hpd(&gram, h_eq).expect("H H^H + N0 I must be positive definite");
    ReceiverFilter { matrix: f_adj.adjoint() }
}

/// Closed-form `M_i = |F_i H - e_i|^2 + N0 |F_i|^2`.
pub fn substream_mses(f: &ReceiverFilter, h_eq: &CMatrix, n0: f64) -> MseReport {
    let fh = &f.matrix * h_eq;
    let values = (0..fh.nrows())
        .map(|i| {
            let signal: f64 = fh
                .row(i)
                .iter()
                .enumerate()
                .map(|(k, z)| if k == i { (z - 1.0).norm_sqr() } else { z.norm_sqr() })
                .sum();
            let noise: f64 = f.matrix.row(i).iter().map(|z| z.norm_sqr()).sum();
            signal + n0 * noise
        })
        .collect();
    MseReport::from_values(values)
}

/// MSEs of the Wiener receiver matched to `h_eq`.
pub fn wiener_mses(h_eq: &CMatrix, n0: f64) -> MseReport {
    substream_mses(&wiener_filter(h_eq, n0), h_eq, n0)
}
