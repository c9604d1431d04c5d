//! Sequential and incremental precoding (SIP).
//!
//! The serving BS gets the single-BS min-max-MSE precoder. Helper BSs are
//! then optimized one at a time, in descending order of participation
//! probability, with every earlier precoder frozen. Each helper runs an
//! iterative loop: find the worst stream `j` and the best stream `k` under the
//! current Wiener receiver, move a fraction `delta` of stream `k`'s power to
//! stream `j`, and re-solve column `j` in closed form from its KKT conditions.

use crate::error::{Error, Result};
use crate::gp::{eigen_precoder, gram_of, PowerAllocation};
use crate::linalg::{self, CMatrix, CVector, ZERO};
use crate::model::{wiener_filter, substream_mses, ChannelSet, PrecoderSet};
use num_complex::Complex64;

/// Iteration controls for the per-helper loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SipConfig {
    /// Fraction of the best stream's power handed to the worst stream.
    pub delta: f64,
    /// Relative max/min MSE gap below which the loop stops.
    pub xi_th: f64,
    pub n_max: usize,
}

impl Default for SipConfig {
    fn default() -> Self {
        Self { delta: 0.01, xi_th: 0.01, n_max: 100 }
    }
}

impl SipConfig {
    pub fn new(delta: f64, xi_th: f64, n_max: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Validation { field: "delta".into(), message: format!("must lie in (0, 1), got {delta}") });
        }
        if !(xi_th > 0.0) {
            return Err(Error::Validation { field: "xi_th".into(), message: format!("must be positive, got {xi_th}") });
        }
        if n_max == 0 {
            return Err(Error::Validation { field: "n_max".into(), message: "must be at least 1".into() });
        }
        Ok(Self { delta, xi_th, n_max })
    }
}

/// Current helper precoder and its per-stream powers.
#[derive(Debug, Clone, PartialEq)]
pub struct SipState {
    pub w: CMatrix,
    /// `|W_{:,l}|^2` for each stream.
    pub stream_powers: Vec<f64>,
    pub iteration: usize,
}

impl SipState {
    /// `sqrt(P/L) [I_L, 0]^T`.
    pub fn initial(nt: usize, l: usize, power: f64) -> Result<Self> {
        if l > nt {
            return Err(Error::InvalidInput(format!("{l} streams do not fit on {nt} antennas")));
        }
        let amp = Complex64::new((power / l as f64).sqrt(), 0.0);
        let w = CMatrix::from_fn(nt, l, |r, c| if r == c { amp } else { ZERO });
        Ok(Self::from_precoder(w, 1))
    }

    pub fn from_precoder(w: CMatrix, iteration: usize) -> Self {
        let stream_powers = (0..w.ncols()).map(|c| linalg::column_power(&w, c)).collect();
        Self { w, stream_powers, iteration }
    }

    pub fn total_power(&self) -> f64 {
        self.stream_powers.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    IterationCap,
}

/// Per-iteration worst-stream MSE of one helper's loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SipTrace {
    pub max_mse_history: Vec<f64>,
    pub terminated_by: Termination,
    pub iterations_used: usize,
}

/// Solution of the single-column subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    pub g: CVector,
    /// Multiplier of the column power constraint.
    pub eta: f64,
}

/// Precoder of the serving BS: the GP construction on `H_1` alone with
/// budget `P`.
pub fn serving_precoder(
    h1: &CMatrix,
    n0: f64,
    l: usize,
    power: f64,
    allocation: PowerAllocation,
) -> Result<CMatrix> {
    if l > h1.ncols() {
        return Err(Error::InvalidInput(format!("{l} streams do not fit on {} antennas", h1.ncols())));
    }
    Ok(eigen_precoder(&gram_of(h1, n0), l, power, allocation)?.w)
}

/// Column objective with everything independent of `g` dropped:
/// `|z|^2 - 2 Re z` where `z = f (h_prev + H_b g)`.
pub fn column_objective(h_prev: &CVector, h_b: &CMatrix, f_row: &[Complex64], g: &CVector) -> f64 {
    let z = row_times(f_row, &(h_prev + h_b * g));
    z.norm_sqr() - 2.0 * z.re
}

fn row_times(f_row: &[Complex64], v: &CVector) -> Complex64 {
    f_row.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}

/// Minimizes [`column_objective`] over `|g|^2 <= budget`.
///
/// The stationarity condition reads `g = (a a^H + eta I)^{-1} a c` with
/// `a = H_b^H f^H` and `c = 1 - f h_prev`. Because `a a^H` is rank one this
/// collapses to `g = a c / (eta + |a|^2)`: with `eta = 0` that is the
/// minimum-norm unconstrained optimum, otherwise `eta` is fixed by
/// `|g|^2 = budget` exactly.
pub fn kkt_column_update(h_prev: &CVector, h_b: &CMatrix, f_row: &[Complex64], budget: f64) -> KktSolution {
    let nt = h_b.ncols();
    let zero = KktSolution { g: CVector::zeros(nt), eta: 0.0 };
    if !(budget > 0.0) {
        return zero;
    }
    // a_k = conj((f H_b)_k)
    let a = CVector::from_fn(nt, |k, _| {
        f_row.iter().enumerate().map(|(r, f)| f * h_b[(r, k)]).sum::<Complex64>().conj()
    });
    let a_norm2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let c = Complex64::new(1.0, 0.0) - row_times(f_row, h_prev);
    if a_norm2 == 0.0 || c == ZERO {
        return zero;
    }
    if c.norm_sqr() / a_norm2 <= budget {
        return KktSolution { g: a.map(|z| z * c / a_norm2), eta: 0.0 };
    }
    let a_norm = a_norm2.sqrt();
    let eta = (c.norm() * a_norm / budget.sqrt() - a_norm2).max(0.0);
    let mut g = a.map(|z| z * c / (eta + a_norm2));
    // Remove rounding so the constraint holds with equality.
    let scale = (budget / g.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
    g.iter_mut().for_each(|z| *z *= scale);
    KktSolution { g, eta }
}

/// Moves `delta` of stream `k`'s power budget to stream `j`; others keep theirs.
pub fn transfer_budgets(powers: &[f64], j: usize, k: usize, delta: f64) -> Vec<f64> {
    let mut budgets = powers.to_vec();
    budgets[j] = powers[j] + delta * powers[k];
    budgets[k] = powers[k] * (1.0 - delta);
    budgets
}

/// One power-transfer step: column `k` is scaled by `sqrt(1 - delta)` and
/// column `j` is replaced by `solve_column(new budget of j)`.
///
/// Stream powers are re-read from the updated columns, so an update that
/// does not use its whole budget lowers the total.
pub fn power_transfer(
    state: &SipState,
    j: usize,
    k: usize,
    delta: f64,
    solve_column: impl FnOnce(f64) -> CVector,
) -> Result<SipState> {
    if j == k {
        return Err(Error::InvalidInput("power transfer needs two distinct streams".into()));
    }
    let budgets = transfer_budgets(&state.stream_powers, j, k, delta);
    let mut w = state.w.clone();
    let shrink = (1.0 - delta).sqrt();
    w.column_mut(k).iter_mut().for_each(|z| *z *= shrink);
    let g = solve_column(budgets[j]);
    w.set_column(j, &g);
    Ok(SipState::from_precoder(w, state.iteration + 1))
}

/// Runs the iterative loop for helper `b` with the `frozen` `(bs, precoder)`
/// pairs fixed.
pub fn sip_optimize_bs(
    ch: &ChannelSet,
    frozen: &[(usize, &CMatrix)],
    b: usize,
    l: usize,
    power: f64,
    cfg: &SipConfig,
) -> Result<(CMatrix, SipTrace)> {
    if b >= ch.bs_count() || frozen.iter().any(|&(i, w)| i == b || i >= ch.bs_count() || w.shape() != (ch.nt(), l)) {
        return Err(Error::InvalidInput(format!("bad frozen set for helper {b}")));
    }
    let n0 = ch.n0();
    let h_b = ch.channel(b);
    let mut frozen_eq = CMatrix::zeros(ch.nr(), l);
    for &(i, w) in frozen {
        frozen_eq += ch.channel(i) * w;
    }

    let mut state = SipState::initial(ch.nt(), l, power)?;
    let mut history = Vec::new();
    loop {
        let h_eq = &frozen_eq + h_b * &state.w;
        let f = wiener_filter(&h_eq, n0);
        let mse = substream_mses(&f, &h_eq, n0);
        history.push(mse.max());

        let (j, k) = (mse.max_index, mse.min_index);
        if j == k || (mse.max() - mse.min()) / mse.max() <= cfg.xi_th {
            return Ok((state.w, trace(history, Termination::Converged)));
        }
        if state.iteration >= cfg.n_max {
            return Ok((state.w, trace(history, Termination::IterationCap)));
        }

        let h_prev = frozen_eq.column(j).into_owned();
        let f_row: Vec<Complex64> = f.matrix.row(j).iter().copied().collect();
        state = power_transfer(&state, j, k, cfg.delta, |budget| {
            kkt_column_update(&h_prev, h_b, &f_row, budget).g
        })?;
    }
}

fn trace(history: Vec<f64>, terminated_by: Termination) -> SipTrace {
    SipTrace { iterations_used: history.len(), max_mse_history: history, terminated_by }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SipOutcome {
    pub precoders: PrecoderSet,
    /// One trace per helper, in optimization order, tagged with the BS index.
    pub traces: Vec<(usize, SipTrace)>,
}

/// Full SIP: serving precoder, then each helper in `order` (BS indices,
/// normally by descending participation probability).
pub fn sip_run(
    ch: &ChannelSet,
    order: &[usize],
    l: usize,
    power: f64,
    cfg: &SipConfig,
    allocation: PowerAllocation,
) -> Result<SipOutcome> {
    let b_count = ch.bs_count();
    let mut seen = vec![false; b_count];
    seen[0] = true;
    for &b in order {
        if b >= b_count || seen[b] {
            return Err(Error::InvalidInput(format!("helper order {order:?} is not a permutation of 1..{b_count}")));
        }
        seen[b] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidInput(format!("helper order {order:?} misses a BS")));
    }

    let mut precoders = vec![CMatrix::zeros(ch.nt(), l); b_count];
    precoders[0] = serving_precoder(ch.channel(0), ch.n0(), l, power, allocation)?;
    let mut done = vec![0usize];
    let mut traces = Vec::with_capacity(order.len());
    for &b in order {
        let frozen: Vec<(usize, &CMatrix)> = done.iter().map(|&i| (i, &precoders[i])).collect();
        let (w, tr) = sip_optimize_bs(ch, &frozen, b, l, power, cfg)?;
        precoders[b] = w;
        done.push(b);
        traces.push((b, tr));
    }
    Ok(SipOutcome { precoders: PrecoderSet::new(precoders, power)?, traces })
}
