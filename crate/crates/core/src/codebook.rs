//! Finite-rate feedback with random orthonormal codebooks.
//!
//! With `d` bits per BS the UE picks each per-BS precoder from `2^d` random
//! candidates, sequentially in SIP order. The AGP counterpart searches a
//! global book of `2^{B d}` stacked candidates so both schemes spend the
//! same `B d` feedback bits.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{wiener_mses, ChannelSet, PrecoderSet};

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    entries: Vec<CMatrix>,
    bits: u32,
    scale: f64,
}

impl Codebook {
    /// Wraps explicit entries; `2^bits` must match the entry count.
    pub fn from_entries(entries: Vec<CMatrix>, bits: u32, scale: f64) -> Result<Self> {
        if entries.is_empty() || entries.len() != 1usize << bits {
            return Err(Error::InvalidInput(format!(
                "{} entries do not form a {bits}-bit codebook",
                entries.len()
            )));
        }
        Ok(Self { entries, bits, scale })
    }

    pub fn entries(&self) -> &[CMatrix] {
        &self.entries
    }

    pub fn entry(&self, i: usize) -> &CMatrix {
        &self.entries[i]
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// `2^d` random `rows x l` matrices with orthogonal columns of equal norm,
/// each normalized to total power `scale`.
pub fn generate_codebook<R: Rng + ?Sized>(
    rows: usize,
    l: usize,
    d: u32,
    scale: f64,
    rng: &mut R,
) -> Result<Codebook> {
    if l == 0 || l > rows {
        return Err(Error::InvalidInput(format!("cannot fit {l} orthogonal columns in {rows} rows")));
    }
    if d == 0 || d > 24 {
        return Err(Error::InvalidInput(format!("codebook bits must lie in 1..=24, got {d}")));
    }
    if !(scale > 0.0) {
        return Err(Error::InvalidInput(format!("codebook scale must be positive, got {scale}")));
    }
    let amplitude = (scale / l as f64).sqrt();
    let entries = (0..1usize << d)
        .map(|_| loop {
            if let Some(q) = orthonormalize(&gaussian(rows, l, rng)) {
                break q.map(|z| z * amplitude);
            }
        })
        .collect();
    Ok(Codebook { entries, bits: d, scale })
}

fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    })
}

/// Modified Gram-Schmidt; `None` when the columns are (numerically) dependent.
fn orthonormalize(a: &CMatrix) -> Option<CMatrix> {
    let mut q = a.clone();
    for c in 0..q.ncols() {
        for prev in 0..c {
            let proj = q.column(prev).dotc(&q.column(c));
            let p = q.column(prev).into_owned();
            q.column_mut(c).axpy(-proj, &p, Complex64::new(1.0, 0.0));
        }
        let norm = q.column(c).norm();
        if norm < 1e-10 {
            return None;
        }
        q.column_mut(c).iter_mut().for_each(|z| *z /= norm);
    }
    Some(q)
}

/// Lowest-index argmin of the worst-stream Wiener MSE.
fn best_entry(book: &Codebook, n0: f64, h_eq: impl Fn(&CMatrix) -> CMatrix) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, w) in book.entries.iter().enumerate() {
        let score = wiener_mses(&h_eq(w), n0).max();
        if score < best.1 {
            best = (i, score);
        }
    }
    best.0
}

/// Best codeword for the serving BS alone.
pub fn select_serving_codeword(book: &Codebook, h1: &CMatrix, n0: f64) -> usize {
    best_entry(book, n0, |w| h1 * w)
}

/// Best codeword for helper `b` with the `frozen` `(bs, precoder)` pairs fixed.
pub fn select_helper_codeword(book: &Codebook, ch: &ChannelSet, frozen: &[(usize, &CMatrix)], b: usize) -> usize {
    let mut fixed = CMatrix::zeros(ch.nr(), book.entry(0).ncols());
    for &(i, w) in frozen {
        fixed += ch.channel(i) * w;
    }
    let h_b = ch.channel(b);
    best_entry(book, ch.n0(), |w| &fixed + h_b * w)
}

/// Best stacked codeword against the global channel `[H_1, ..., H_B]`.
pub fn select_global_codeword(book: &Codebook, ch: &ChannelSet) -> Result<usize> {
    let rows = ch.bs_count() * ch.nt();
    if book.entry(0).nrows() != rows {
        return Err(Error::InvalidInput(format!(
            "global codewords have {} rows, expected {rows}",
            book.entry(0).nrows()
        )));
    }
    let h = ch.global();
    Ok(best_entry(book, ch.n0(), |w| &h * w))
}

/// SIP with codebook feedback: serving BS first, then each helper in `order`.
pub fn sip_codebook_run(book: &Codebook, ch: &ChannelSet, order: &[usize], power: f64) -> Result<PrecoderSet> {
    let (nt, l) = book.entry(0).shape();
    if nt != ch.nt() {
        return Err(Error::InvalidInput(format!("codewords have {nt} rows, BSs have {} antennas", ch.nt())));
    }
    let mut precoders = vec![CMatrix::zeros(nt, l); ch.bs_count()];
    precoders[0] = book.entry(select_serving_codeword(book, ch.channel(0), ch.n0())).clone();
    let mut done = vec![0usize];
    for &b in order {
        let frozen: Vec<(usize, &CMatrix)> = done.iter().map(|&i| (i, &precoders[i])).collect();
        let idx = select_helper_codeword(book, ch, &frozen, b);
        precoders[b] = book.entry(idx).clone();
        done.push(b);
    }
    PrecoderSet::new(precoders, power)
}
