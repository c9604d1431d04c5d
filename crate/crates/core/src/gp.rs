//! Global precoding (GP) under a sum power constraint and its autonomous
//! per-BS variant (AGP).
//!
//! GP treats all `B nt` antennas as one array: eigen-beamforming on
//! `R_H = H^H H / N0`, water-filling over the `L` strongest eigenmodes, then a
//! constant-modulus unitary rotation that spreads the sum MSE evenly over the
//! streams. AGP lets each BS transmit its own row block of that global
//! precoder and mute when it misses the deadline.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::{ChannelSet, ParticipationState, PrecoderSet};

/// Power loading across the selected eigenmodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerAllocation {
    WaterFilling,
    /// `sigma_i = sqrt(P / L)` on every stream (no rank adaptation).
    Equal,
}

/// `R_H = H^H R_n^{-1} H` for a white-noise channel.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub matrix: CMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillResult {
    /// Amplitudes, aligned with `selected_eigenvalues`.
    pub sigmas: Vec<f64>,
    /// `mu^{-1/2}`.
    pub water_level: f64,
    pub selected_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix {
    pub q: CMatrix,
}

/// A GP-style precoder with its equal-MSE objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPrecoder {
    pub w: CMatrix,
    /// `(1/L) tr{(I + W^H R_H W)^{-1}}`, which under the Wiener receiver is
    /// every sub-stream's MSE.
    pub min_max_mse: f64,
}

/// Gram matrix of the global channel `[H_1, ..., H_B]`.
pub fn gram(ch: &ChannelSet) -> GramMatrix {
    gram_of(&ch.global(), ch.n0())
}

pub fn gram_of(h: &CMatrix, n0: f64) -> GramMatrix {
    GramMatrix { matrix: (h.adjoint() * h).map(|z| z / n0) }
}

/// Water-filling `sigma_i^2 = (mu^{-1/2} lambda_i^{-1/2} - lambda_i^{-1})^+`
/// with the level set so the total power is met with equality.
///
/// Eigenvalues that are zero (to `1e-12` of the largest) get no power and
/// stay out of the level equation.
pub fn waterfill(eigs: &[f64], total_power: f64) -> Result<WaterfillResult> {
    if !(total_power > 0.0) {
        return Err(Error::InvalidInput(format!("total power must be positive, got {total_power}")));
    }
    let largest = eigs.iter().copied().fold(0.0f64, f64::max);
    if !(largest > 0.0) {
        return Err(Error::Degenerate("no positive eigenvalue to load power on".into()));
    }
    let floor = largest * 1e-12;
    let mut active: Vec<usize> = (0..eigs.len()).filter(|&i| eigs[i] > floor).collect();
    active.sort_by(|&a, &b| eigs[b].total_cmp(&eigs[a]));

    let level = loop {
        let inv: f64 = active.iter().map(|&i| 1.0 / eigs[i]).sum();
        let inv_sqrt: f64 = active.iter().map(|&i| 1.0 / eigs[i].sqrt()).sum();
        let level = (total_power + inv) / inv_sqrt;
        let weakest = eigs[*active.last().expect("at least one active mode")];
        if level / weakest.sqrt() - 1.0 / weakest > 0.0 || active.len() == 1 {
            break level;
        }
        active.pop();
    };

    let mut sigmas = vec![0.0; eigs.len()];
    for &i in &active {
        sigmas[i] = (level / eigs[i].sqrt() - 1.0 / eigs[i]).max(0.0).sqrt();
    }
    Ok(WaterfillResult { sigmas, water_level: level, selected_eigenvalues: eigs.to_vec() })
}

/// Unitary DFT matrix scaled by `1/sqrt(L)`. Every entry has modulus
/// `1/sqrt(L)`, so it maps any diagonal MSE matrix to one with a constant
/// diagonal.
pub fn equalizing_rotation(l: usize) -> RotationMatrix {
    let scale = 1.0 / (l as f64).sqrt();
    let q = CMatrix::from_fn(l, l, |i, k| {
        let angle = -2.0 * PI * ((i * k) % l) as f64 / l as f64;
        Complex64::from_polar(scale, angle)
    });
    RotationMatrix { q }
}

/// `(1/L) tr{(I + W^H R W)^{-1}}`.
pub fn equal_mse_value(w: &CMatrix, r: &CMatrix) -> f64 {
    let l = w.ncols();
    let mut m = w.adjoint() * r * w;
    for i in 0..l {
        m[(i, i)] += 1.0;
    }
    let inv = linalg::solve_hpd(&m, &CMatrix::identity(l, l)).expect("I + W^H R W is positive definite");
    inv.trace().re / l as f64
}

/// `W = V~ Sigma Q^H` on an arbitrary Gram matrix.
///
/// `V~` holds the eigenvectors of the `L` largest eigenvalues, in increasing
/// eigenvalue order. When the spectrum is identically zero the loading falls
/// back to equal power, since every precoder is then equally useless.
pub fn eigen_precoder(
    r: &GramMatrix,
    l: usize,
    total_power: f64,
    allocation: PowerAllocation,
) -> Result<EigenPrecoder> {
    let m = r.matrix.nrows();
    if l == 0 || l > m {
        return Err(Error::InvalidInput(format!("cannot place {l} streams on {m} antennas")));
    }
    let eig = linalg::hermitian_eig(&r.matrix)?;
    let top = &eig.values[m - l..];
    let sigmas = match allocation {
        PowerAllocation::Equal => vec![(total_power / l as f64).sqrt(); l],
        PowerAllocation::WaterFilling => match waterfill(top, total_power) {
            Ok(wf) => wf.sigmas,
            Err(Error::Degenerate(_)) => vec![(total_power / l as f64).sqrt(); l],
            Err(e) => return Err(e),
        },
    };
    let mut w_tilde = eig.vectors.columns(m - l, l).into_owned();
    for (c, s) in sigmas.iter().enumerate() {
        w_tilde.column_mut(c).iter_mut().for_each(|z| *z *= *s);
    }
    let w = w_tilde * equalizing_rotation(l).q.adjoint();
    let min_max_mse = equal_mse_value(&w, &r.matrix);
    Ok(EigenPrecoder { w, min_max_mse })
}

/// GP precoder for the stacked channel under the sum budget `total_power`
/// (`B P` when comparing against per-BS budgets `P`).
pub fn global_precoder(
    ch: &ChannelSet,
    l: usize,
    total_power: f64,
    allocation: PowerAllocation,
) -> Result<EigenPrecoder> {
    eigen_precoder(&gram(ch), l, total_power, allocation)
}

/// AGP per-BS precoders: BS `b` transmits rows `b nt .. (b+1) nt` of the
/// global precoder, or nothing when it is absent.
///
/// The blocks are not individually bounded by the per-BS budget; GP's implied
/// inter-BS power split is generally infeasible for per-BS constraints.
pub fn agp_extract(
    w_global: &CMatrix,
    state: &ParticipationState,
    nt: usize,
    power_budget: f64,
) -> Result<PrecoderSet> {
    let b_count = state.len();
    if w_global.nrows() != b_count * nt {
        return Err(Error::InvalidInput(format!(
            "global precoder has {} rows, expected {} for {b_count} BSs",
            w_global.nrows(),
            b_count * nt
        )));
    }
    let l = w_global.ncols();
    let blocks = (0..b_count)
        .map(|b| {
            if state.is_active(b) {
                w_global.rows(b * nt, nt).into_owned()
            } else {
                CMatrix::zeros(nt, l)
            }
        })
        .collect();
    PrecoderSet::new(blocks, power_budget)
}
