//! Link-level Monte Carlo engine.
//!
//! Every realization draws i.i.d. Rayleigh channels, designs the precoders
//! of each scheme for full joint transmission, samples which helpers actually
//! make the deadline, and then measures the realized sub-stream MSEs and the
//! QPSK bit errors through the muted equivalent channel.
//!
//! Randomness is keyed by `(master seed, realization, purpose, sub-index)`,
//! so a realization is reproducible on its own and results do not depend on
//! how realizations are spread over worker threads.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::backhaul::{sample_participation, ParticipationProfile};
use crate::codebook::{generate_codebook, select_global_codeword, sip_codebook_run, Codebook};
use crate::error::{Error, Result};
use crate::gp::{agp_extract, global_precoder, PowerAllocation};
use crate::linalg::CMatrix;
use crate::model::{build_equivalent_channel, substream_mses, wiener_filter, ChannelSet, ParticipationState, PrecoderSet};
use crate::sip::{serving_precoder, sip_optimize_bs, sip_run, SipConfig};

/// Precoding scheme under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Global precoding with ideal backhaul: the sum-power reference, always
    /// transmitted by the full JT set.
    Gp,
    /// Row blocks of the global precoder; late helpers mute.
    Agp,
    /// Sequential and incremental precoding; late helpers mute.
    Sip,
    /// Serving BS alone.
    St,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Gp => "GP",
            Scheme::Agp => "AGP",
            Scheme::Sip => "SIP",
            Scheme::St => "ST",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GP" => Ok(Scheme::Gp),
            "AGP" => Ok(Scheme::Agp),
            "SIP" => Ok(Scheme::Sip),
            "ST" => Ok(Scheme::St),
            other => Err(Error::Validation { field: "schemes".into(), message: format!("unknown scheme `{other}`") }),
        }
    }
}

/// How precoders reach the BSs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feedback {
    Perfect,
    /// Random codebook with `bits` bits per BS.
    Codebook { bits: u32 },
}

impl Feedback {
    pub fn label(&self) -> &'static str {
        match self {
            Feedback::Perfect => "perfect",
            Feedback::Codebook { .. } => "codebook",
        }
    }

    pub fn bits(&self) -> u32 {
        match self {
            Feedback::Perfect => 0,
            Feedback::Codebook { bits } => *bits,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub bs_count: usize,
    pub nt: usize,
    pub nr: usize,
    pub streams: usize,
    /// Per-BS power `P`; the SINR grid sets `N0 = P / 10^{snr/10}`.
    pub power: f64,
    pub snr_db: Vec<f64>,
    pub profile: ParticipationProfile,
    pub schemes: Vec<Scheme>,
    pub feedback: Vec<Feedback>,
    pub realizations: usize,
    pub symbols_per_realization: usize,
    pub master_seed: u64,
    pub sip: SipConfig,
    /// Power loading of the serving precoder (SIP and ST).
    pub serving_allocation: PowerAllocation,
    /// Power loading of the global precoder (GP and AGP).
    pub global_allocation: PowerAllocation,
    /// Match the UE's Wiener filter to the full-JT channel instead of the
    /// realized one.
    pub filter_assumes_full_jt: bool,
}

impl SimConfig {
    /// Stream count and power loading for `nr` receive antennas:
    /// two antennas use water-filling, four fix `L = 4` with equal loading.
    pub fn for_scenario(bs_count: usize, nr: usize, helper_probs: &[f64]) -> Result<Self> {
        let allocation = default_allocation(nr);
        Ok(Self {
            bs_count,
            nt: 4,
            nr,
            streams: nr,
            power: 1.0,
            snr_db: (0..=10).map(|i| 2.0 * i as f64).collect(),
            profile: ParticipationProfile::from_helpers(helper_probs)?,
            schemes: vec![Scheme::Gp, Scheme::Agp, Scheme::Sip],
            feedback: vec![Feedback::Perfect],
            realizations: 1000,
            symbols_per_realization: 10_000,
            master_seed: 1,
            sip: SipConfig::default(),
            serving_allocation: allocation,
            global_allocation: allocation,
            filter_assumes_full_jt: false,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, message: String| Error::Validation { field: name.into(), message };
        if self.bs_count == 0 {
            return Err(field("B", "need at least one BS".into()));
        }
        if self.nt == 0 || self.nr == 0 {
            return Err(field("nt", "antenna counts must be positive".into()));
        }
        if self.streams == 0 || self.streams > self.nr.min(self.nt) {
            return Err(field("l", format!("{} streams exceed min(nr, nt) = {}", self.streams, self.nr.min(self.nt))));
        }
        if !(self.power > 0.0) {
            return Err(field("power", "must be positive".into()));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(field("snr_db", "need at least one finite SINR".into()));
        }
        if self.profile.bs_count() != self.bs_count {
            return Err(field("p", format!("{} participation probabilities for {} helpers", self.profile.bs_count() - 1, self.bs_count - 1)));
        }
        if self.schemes.is_empty() {
            return Err(field("schemes", "need at least one scheme".into()));
        }
        if self.feedback.is_empty() {
            return Err(field("feedback", "need at least one feedback mode".into()));
        }
        for f in &self.feedback {
            if let Feedback::Codebook { bits } = f {
                if *bits == 0 || (*bits as usize) * self.bs_count > 24 {
                    return Err(field("bits", format!("{bits} bits per BS is out of range")));
                }
            }
        }
        if self.realizations == 0 {
            return Err(field("realizations", "must be at least 1".into()));
        }
        if self.symbols_per_realization == 0 || !self.symbols_per_realization.is_multiple_of(self.streams) {
            return Err(field(
                "symbols",
                format!("{} symbols are not a positive multiple of {} streams", self.symbols_per_realization, self.streams),
            ));
        }
        Ok(())
    }

    /// Sweep cells in output order: feedback, then scheme, then SINR.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &feedback in &self.feedback {
            for &scheme in &self.schemes {
                for snr_index in 0..self.snr_db.len() {
                    cells.push(Cell { feedback, scheme, snr_index });
                }
            }
        }
        cells
    }

    pub fn n0(&self, snr_index: usize) -> f64 {
        self.power / 10f64.powf(self.snr_db[snr_index] / 10.0)
    }
}

pub fn default_allocation(nr: usize) -> PowerAllocation {
    if nr >= 4 {
        PowerAllocation::Equal
    } else {
        PowerAllocation::WaterFilling
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub feedback: Feedback,
    pub scheme: Scheme,
    pub snr_index: usize,
}

/// Outcome of one scheme on one realization at one SINR.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationResult {
    pub max_mse: f64,
    pub mean_mse: f64,
    pub bit_errors: u64,
    pub bits_sent: u64,
    pub participation: ParticipationState,
    /// Helper-loop iterations summed over helpers (SIP with perfect feedback only).
    pub iterations_used: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub bs_count: usize,
    pub nr: usize,
    pub feedback: Feedback,
    pub snr_db: f64,
    pub mean_max_mse: f64,
    pub mean_mse: f64,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits_sent: u64,
    pub realizations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, scheme: Scheme, feedback: Feedback, snr_db: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.feedback == feedback && r.snr_db == snr_db)
    }
}

/// Purpose tags for the per-realization random streams.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum StreamTag {
    Channel = 0,
    Participation = 1,
    Codebook = 2,
    Symbols = 3,
    Noise = 4,
}

/// Independent generator for one `(seed, realization, purpose, sub-index)` key.
pub fn stream_rng(master_seed: u64, realization: u64, tag: StreamTag, sub: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&realization.to_le_bytes());
    key[16..24].copy_from_slice(&(tag as u64).to_le_bytes());
    key[24..].copy_from_slice(&sub.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// `b` channels with i.i.d. unit-variance circularly symmetric Gaussian
/// entries, returned at unit noise power.
pub fn sample_channel<R: Rng + ?Sized>(b: usize, nt: usize, nr: usize, rng: &mut R) -> Result<ChannelSet> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let channels = (0..b)
        .map(|_| {
            CMatrix::from_fn(nr, nt, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * scale, im * scale)
            })
        })
        .collect();
    ChannelSet::new(channels, 1.0)
}

/// Gray-mapped unit-energy QPSK: the first bit sets the real sign, the second
/// the imaginary sign (0 is positive).
pub fn qpsk_map(bits: (bool, bool)) -> Complex64 {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(if bits.0 { -a } else { a }, if bits.1 { -a } else { a })
}

pub fn qpsk_demap(y: Complex64) -> (bool, bool) {
    (y.re < 0.0, y.im < 0.0)
}

/// Sends `vectors` QPSK symbol vectors through `y = H x + n` and detects them
/// with `x^ = F y`. Returns `(bit errors, bits sent)`.
pub fn transmit_qpsk<R1: Rng + ?Sized, R2: Rng + ?Sized>(
    h_eq: &CMatrix,
    filter: &CMatrix,
    n0: f64,
    vectors: usize,
    symbol_rng: &mut R1,
    noise_rng: &mut R2,
) -> (u64, u64) {
    let (nr, l) = h_eq.shape();
    debug_assert_eq!(filter.shape(), (l, nr));
    let fh = filter * h_eq;
    let gain: Vec<Complex64> = (0..l).flat_map(|i| (0..l).map(move |k| (i, k))).map(|(i, k)| fh[(i, k)]).collect();
    let f: Vec<Complex64> = (0..l).flat_map(|i| (0..nr).map(move |r| (i, r))).map(|(i, r)| filter[(i, r)]).collect();
    let sigma = (n0 / 2.0).sqrt();

    let mut x = vec![Complex64::new(0.0, 0.0); l];
    let mut sent = vec![(false, false); l];
    let mut noise = vec![Complex64::new(0.0, 0.0); nr];
    let mut errors = 0u64;
    for _ in 0..vectors {
        let word: u64 = symbol_rng.random();
        for i in 0..l {
            let bits = ((word >> (2 * i)) & 1 == 1, (word >> (2 * i + 1)) & 1 == 1);
            sent[i] = bits;
            x[i] = qpsk_map(bits);
        }
        for n in noise.iter_mut() {
            let re: f64 = noise_rng.sample(StandardNormal);
            let im: f64 = noise_rng.sample(StandardNormal);
            *n = Complex64::new(re * sigma, im * sigma);
        }
        for i in 0..l {
            let mut est = Complex64::new(0.0, 0.0);
            for k in 0..l {
                est += gain[i * l + k] * x[k];
            }
            for r in 0..nr {
                est += f[i * nr + r] * noise[r];
            }
            let got = qpsk_demap(est);
            errors += u64::from(got.0 != sent[i].0) + u64::from(got.1 != sent[i].1);
        }
    }
    (errors, 2 * (vectors * l) as u64)
}

/// Per-realization state shared by all cells.
struct Draw {
    channels: ChannelSet,
    participation: ParticipationState,
}

fn draw(cfg: &SimConfig, realization: u64) -> Result<Draw> {
    let channels = sample_channel(cfg.bs_count, cfg.nt, cfg.nr, &mut stream_rng(cfg.master_seed, realization, StreamTag::Channel, 0))?;
    let participation = sample_participation(&cfg.profile, &mut stream_rng(cfg.master_seed, realization, StreamTag::Participation, 0));
    Ok(Draw { channels, participation })
}

struct Books {
    per_bs: Codebook,
    global: Option<Codebook>,
}

fn books(cfg: &SimConfig, realization: u64, bits: u32) -> Result<Books> {
    let mut rng = stream_rng(cfg.master_seed, realization, StreamTag::Codebook, u64::from(bits));
    let per_bs = generate_codebook(cfg.nt, cfg.streams, bits, cfg.power, &mut rng)?;
    let needs_global = cfg.schemes.iter().any(|s| matches!(s, Scheme::Gp | Scheme::Agp));
    let global = if needs_global {
        let b = cfg.bs_count;
        Some(generate_codebook(b * cfg.nt, cfg.streams, bits * b as u32, b as f64 * cfg.power, &mut rng)?)
    } else {
        None
    };
    Ok(Books { per_bs, global })
}

/// Precoders designed for full JT, plus SIP iteration count.
fn design(cfg: &SimConfig, scheme: Scheme, ch: &ChannelSet, books: Option<&Books>) -> Result<(PrecoderSet, usize)> {
    let b = cfg.bs_count;
    let full = ParticipationState::full(b);
    match (scheme, books) {
        (Scheme::Gp | Scheme::Agp, None) => {
            let gp = global_precoder(ch, cfg.streams, b as f64 * cfg.power, cfg.global_allocation)?;
            Ok((agp_extract(&gp.w, &full, cfg.nt, cfg.power)?, 0))
        }
        (Scheme::Gp | Scheme::Agp, Some(books)) => {
            let global = books.global.as_ref().expect("global book exists when GP/AGP is simulated");
            let w = global.entry(select_global_codeword(global, ch)?);
            Ok((agp_extract(w, &full, cfg.nt, cfg.power)?, 0))
        }
        (Scheme::Sip, None) => {
            let out = sip_run(ch, &cfg.profile.helper_order(), cfg.streams, cfg.power, &cfg.sip, cfg.serving_allocation)?;
            let iterations = out.traces.iter().map(|(_, t)| t.iterations_used).sum();
            Ok((out.precoders, iterations))
        }
        (Scheme::Sip, Some(books)) => Ok((sip_codebook_run(&books.per_bs, ch, &cfg.profile.helper_order(), cfg.power)?, 0)),
        (Scheme::St, _) => {
            let mut ws = vec![CMatrix::zeros(cfg.nt, cfg.streams); b];
            ws[0] = match books {
                None => serving_precoder(ch.channel(0), ch.n0(), cfg.streams, cfg.power, cfg.serving_allocation)?,
                Some(books) => books
                    .per_bs
                    .entry(crate::codebook::select_serving_codeword(&books.per_bs, ch.channel(0), ch.n0()))
                    .clone(),
            };
            Ok((PrecoderSet::new(ws, cfg.power)?, 0))
        }
    }
}

/// Which BSs actually transmit for `scheme` given the slot's draw.
fn realized_state(cfg: &SimConfig, scheme: Scheme, drawn: &ParticipationState) -> ParticipationState {
    match scheme {
        Scheme::Gp => ParticipationState::full(cfg.bs_count),
        Scheme::Agp | Scheme::Sip => drawn.clone(),
        Scheme::St => ParticipationState::serving_only(cfg.bs_count),
    }
}

/// Evaluates every cell of `cfg.cells()` on one realization.
pub fn run_realization(cfg: &SimConfig, realization: u64) -> Result<Vec<RealizationResult>> {
    let d = draw(cfg, realization)?;
    let mut out = Vec::with_capacity(cfg.cells().len());
    for &feedback in &cfg.feedback {
        let books = match feedback {
            Feedback::Perfect => None,
            Feedback::Codebook { bits } => Some(books(cfg, realization, bits)?),
        };
        for &scheme in &cfg.schemes {
            for snr_index in 0..cfg.snr_db.len() {
                let ch = d.channels.with_noise(cfg.n0(snr_index))?;
                out.push(evaluate(cfg, scheme, &ch, books.as_ref(), &d.participation, realization, snr_index)?);
            }
        }
    }
    Ok(out)
}

fn evaluate(
    cfg: &SimConfig,
    scheme: Scheme,
    ch: &ChannelSet,
    books: Option<&Books>,
    drawn: &ParticipationState,
    realization: u64,
    snr_index: usize,
) -> Result<RealizationResult> {
    let n0 = ch.n0();
    let (precoders, iterations_used) = design(cfg, scheme, ch, books)?;
    let state = realized_state(cfg, scheme, drawn);
    let h_eq = build_equivalent_channel(ch, &precoders, &state)?;
    let filter = if cfg.filter_assumes_full_jt {
        wiener_filter(&build_equivalent_channel(ch, &precoders, &ParticipationState::full(cfg.bs_count))?, n0)
    } else {
        wiener_filter(&h_eq, n0)
    };
    let mse = substream_mses(&filter, &h_eq, n0);

    let sub = snr_index as u64;
    let (bit_errors, bits_sent) = transmit_qpsk(
        &h_eq,
        &filter.matrix,
        n0,
        cfg.symbols_per_realization / cfg.streams,
        &mut stream_rng(cfg.master_seed, realization, StreamTag::Symbols, sub),
        &mut stream_rng(cfg.master_seed, realization, StreamTag::Noise, sub),
    );
    Ok(RealizationResult {
        max_mse: mse.max(),
        mean_mse: mse.mean(),
        bit_errors,
        bits_sent,
        participation: state,
        iterations_used,
    })
}

/// Runs all realizations on `workers` threads (all cores when `None`) and
/// aggregates per cell. Output is identical for any worker count.
pub fn sweep(cfg: &SimConfig, workers: Option<usize>) -> Result<SweepResult> {
    cfg.validate()?;
    let per_realization: Vec<Vec<RealizationResult>> =
        in_pool(workers, || (0..cfg.realizations as u64).into_par_iter().map(|r| run_realization(cfg, r)).collect::<Result<_>>())??;
    Ok(aggregate(cfg, &per_realization))
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

/// Sums per-realization results cell by cell, in realization order.
pub fn aggregate(cfg: &SimConfig, per_realization: &[Vec<RealizationResult>]) -> SweepResult {
    let n = per_realization.len();
    let rows = cfg
        .cells()
        .into_iter()
        .enumerate()
        .map(|(c, cell)| {
            let mut max_sum = 0.0;
            let mut mean_sum = 0.0;
            let mut errors = 0u64;
            let mut bits = 0u64;
            for results in per_realization {
                let r = &results[c];
                max_sum += r.max_mse;
                mean_sum += r.mean_mse;
                errors += r.bit_errors;
                bits += r.bits_sent;
            }
            SweepRow {
                scheme: cell.scheme,
                bs_count: cfg.bs_count,
                nr: cfg.nr,
                feedback: cell.feedback,
                snr_db: cfg.snr_db[cell.snr_index],
                mean_max_mse: max_sum / n as f64,
                mean_mse: mean_sum / n as f64,
                ber: errors as f64 / bits as f64,
                bit_errors: errors,
                bits_sent: bits,
                realizations: n,
                seed: cfg.master_seed,
            }
        })
        .collect();
    SweepResult { rows }
}

/// Mean worst-stream MSE per helper-loop iteration of the first helper in
/// SIP order, averaged over `cfg.realizations` channel draws. Loops that stop
/// early hold their last value.
pub fn convergence_trace(cfg: &SimConfig, snr_db: f64, workers: Option<usize>) -> Result<Vec<f64>> {
    cfg.validate()?;
    if cfg.bs_count < 2 {
        return Err(Error::Validation { field: "B".into(), message: "a convergence trace needs a helper BS".into() });
    }
    let n0 = cfg.power / 10f64.powf(snr_db / 10.0);
    let helper = cfg.profile.helper_order()[0];
    let histories: Vec<Vec<f64>> = in_pool(workers, || {
        (0..cfg.realizations as u64)
            .into_par_iter()
            .map(|r| {
                let ch = sample_channel(cfg.bs_count, cfg.nt, cfg.nr, &mut stream_rng(cfg.master_seed, r, StreamTag::Channel, 0))?
                    .with_noise(n0)?;
                let w1 = serving_precoder(ch.channel(0), n0, cfg.streams, cfg.power, cfg.serving_allocation)?;
                let (_, trace) = sip_optimize_bs(&ch, &[(0, &w1)], helper, cfg.streams, cfg.power, &cfg.sip)?;
                Ok(trace.max_mse_history)
            })
            .collect::<Result<_>>()
    })??;
    let len = cfg.sip.n_max;
    let mut mean = vec![0.0; len];
    for h in &histories {
        for (i, m) in mean.iter_mut().enumerate() {
            *m += h.get(i).copied().unwrap_or(*h.last().expect("history is never empty"));
        }
    }
    Ok(mean.into_iter().map(|m| m / histories.len() as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::equal_mse_value;

    fn small(helpers: &[f64]) -> SimConfig {
        let mut cfg = SimConfig::for_scenario(helpers.len() + 1, 2, helpers).unwrap();
        cfg.realizations = 20;
        cfg.symbols_per_realization = 200;
        cfg.snr_db = vec![0.0, 10.0, 20.0];
        cfg
    }

    #[test]
    fn channel_moments() {
        let mut rng = stream_rng(3, 0, StreamTag::Channel, 0);
        let draws = 1_000_000 / 8;
        let (mut sum, mut sq) = (Complex64::new(0.0, 0.0), 0.0);
        for _ in 0..draws {
            let ch = sample_channel(1, 4, 2, &mut rng).unwrap();
            for z in ch.channel(0).iter() {
                sum += z;
                sq += z.norm_sqr();
            }
        }
        let n = (draws * 8) as f64;
        assert!((sq / n - 1.0).abs() <= 0.01);
        assert!((sum / n).norm() <= 0.005);
    }

    #[test]
    fn seeded_channels_replay() {
        let a = sample_channel(2, 4, 2, &mut stream_rng(1, 5, StreamTag::Channel, 0)).unwrap();
        let b = sample_channel(2, 4, 2, &mut stream_rng(1, 5, StreamTag::Channel, 0)).unwrap();
        assert_eq!(a, b);
        let c = sample_channel(2, 4, 2, &mut stream_rng(1, 6, StreamTag::Channel, 0)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn qpsk_round_trip_and_energy() {
        for bits in [(false, false), (false, true), (true, false), (true, true)] {
            assert_eq!(qpsk_demap(qpsk_map(bits)), bits);
            assert!((qpsk_map(bits).norm() - 1.0).abs() < 1e-15);
        }
        assert!((qpsk_map((false, true)) - Complex64::new(1.0, -1.0) / 2f64.sqrt()).norm() < 1e-15);
        assert!((qpsk_map((true, false)) - Complex64::new(-1.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn muted_helpers_reduce_sip_to_st() {
        let mut cfg = small(&[0.0]);
        cfg.schemes = vec![Scheme::Sip, Scheme::St];
        for r in 0..10 {
            let res = run_realization(&cfg, r).unwrap();
            let (sip, st) = res.split_at(cfg.snr_db.len());
            for (a, b) in sip.iter().zip(st) {
                assert_eq!(a.bit_errors, b.bit_errors);
                assert_eq!(a.max_mse, b.max_mse);
            }
        }
    }

    #[test]
    fn noiseless_detection_is_error_free() {
        let mut cfg = small(&[1.0]);
        cfg.snr_db = vec![120.0];
        cfg.schemes = vec![Scheme::Gp, Scheme::Sip];
        for r in 0..5 {
            for res in run_realization(&cfg, r).unwrap() {
                assert_eq!(res.bit_errors, 0);
            }
        }
    }

    #[test]
    fn gp_realized_mse_matches_closed_form() {
        let mut cfg = small(&[0.5]);
        cfg.schemes = vec![Scheme::Gp];
        for r in 0..10 {
            let res = run_realization(&cfg, r).unwrap();
            let ch = sample_channel(2, 4, 2, &mut stream_rng(cfg.master_seed, r, StreamTag::Channel, 0)).unwrap();
            for (i, out) in res.iter().enumerate() {
                let ch = ch.with_noise(cfg.n0(i)).unwrap();
                let gp = global_precoder(&ch, 2, 2.0, PowerAllocation::WaterFilling).unwrap();
                assert!((out.max_mse - gp.min_max_mse).abs() < 1e-9);
                assert!((equal_mse_value(&gp.w, &crate::gp::gram(&ch).matrix) - gp.min_max_mse).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_realization_sweep_is_that_realization() {
        let mut cfg = small(&[0.78]);
        cfg.realizations = 1;
        let res = run_realization(&cfg, 0).unwrap();
        let sweep = sweep(&cfg, Some(2)).unwrap();
        for (row, r) in sweep.rows.iter().zip(&res) {
            assert_eq!(row.mean_max_mse, r.max_mse);
            assert_eq!(row.mean_mse, r.mean_mse);
            assert_eq!(row.ber, r.bit_errors as f64 / r.bits_sent as f64);
        }
    }

    #[test]
    fn sweep_is_worker_invariant() {
        let mut cfg = small(&[0.78, 0.58]);
        cfg.feedback = vec![Feedback::Perfect, Feedback::Codebook { bits: 2 }];
        assert_eq!(sweep(&cfg, Some(1)).unwrap(), sweep(&cfg, Some(5)).unwrap());
    }

    #[test]
    fn gp_improves_with_sinr() {
        let mut cfg = small(&[1.0]);
        cfg.schemes = vec![Scheme::Gp];
        cfg.realizations = 500;
        cfg.symbols_per_realization = 2;
        cfg.snr_db = (0..=10).map(|i| 2.0 * i as f64).collect();
        let res = sweep(&cfg, None).unwrap();
        for w in res.rows.windows(2) {
            assert!(w[1].mean_max_mse < w[0].mean_max_mse);
        }
    }

    #[test]
    fn validation_names_fields() {
        let mut cfg = small(&[0.78]);
        cfg.symbols_per_realization = 3;
        assert!(matches!(cfg.validate(), Err(Error::Validation { field, .. }) if field == "symbols"));
        let mut cfg = small(&[0.78]);
        cfg.streams = 3;
        assert!(matches!(cfg.validate(), Err(Error::Validation { field, .. }) if field == "l"));
        let mut cfg = small(&[0.78]);
        cfg.bs_count = 3;
        assert!(matches!(cfg.validate(), Err(Error::Validation { field, .. }) if field == "p"));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::Gp, Scheme::Agp, Scheme::Sip, Scheme::St] {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        assert!("XYZ".parse::<Scheme>().is_err());
    }
}
