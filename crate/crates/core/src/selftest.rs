//! Golden-value checks behind the `selftest` subcommand.

use num_complex::Complex64;
use rand::Rng;

use crate::backhaul::{
    delay_pdf, ln_gamma, participation_probability_with_tolerance, BackhaulParams, Deadline, GAMMA_TOLERANCE,
};
use crate::codebook::generate_codebook;
use crate::gp::{agp_extract, global_precoder, waterfill, PowerAllocation};
use crate::linalg::{frobenius, hermitian_eig, CMatrix, CVector};
use crate::model::{build_equivalent_channel, wiener_mses, ParticipationState};
use crate::montecarlo::{qpsk_demap, qpsk_map, sample_channel, stream_rng, sweep, SimConfig, StreamTag};
use crate::sip::{column_objective, kkt_column_update, sip_run, SipConfig};

const SEED: u64 = 0x5e1f;

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestOptions {
    /// Tolerance handed to the incomplete gamma routine. Anything looser
    /// than the default is a fault injection.
    pub gamma_tolerance: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self { gamma_tolerance: GAMMA_TOLERANCE }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

pub fn run_selftest(opts: &SelftestOptions) -> Vec<Check> {
    let mut checks = Vec::new();
    for (name, t0, deadline, golden) in [
        ("pb_t0_7.5_T_11", 7.5, 11.0, 0.78),
        ("pb_t0_7.5_T_10", 7.5, 10.0, 0.58),
        ("pb_t0_8.5_T_10", 8.5, 10.0, 0.30),
        ("pb_t0_8.5_T_11", 8.5, 11.0, 0.58),
    ] {
        checks.push(pb_check(name, t0, deadline, golden, opts.gamma_tolerance));
    }
    checks.push(ln_gamma_check());
    checks.push(eigen_check());
    checks.push(waterfill_check());
    checks.push(gp_equal_mse_check());
    checks.push(agp_reassembly_check());
    checks.push(sip_bound_check());
    checks.push(kkt_check());
    checks.push(codebook_check());
    checks.push(qpsk_check());
    checks.push(determinism_check());
    checks
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

/// Closed form against the golden value and against quadrature of the pdf.
fn pb_check(name: &'static str, t0: f64, deadline: f64, golden: f64, tol: f64) -> Check {
    let params = BackhaulParams::new(1.0, 2.5, t0).expect("valid params");
    let p = participation_probability_with_tolerance(&params, Deadline::new(deadline).expect("valid deadline"), tol);
    // t = t0 + u^2 keeps the integrand smooth at the shift
    let span = (deadline - t0).sqrt();
    let n = 4000;
    let h = span / n as f64;
    let f = |u: f64| delay_pdf(&params, t0 + u * u) * 2.0 * u;
    let mut quad = f(0.0) + f(span);
    for i in 1..n {
        quad += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    quad *= h / 3.0;
    let passed = (p - golden).abs() <= 0.01 && (p - quad).abs() <= 1e-9;
    check(name, passed, format!("p = {p:.12}, quadrature {quad:.12}, expected {golden}"))
}

fn ln_gamma_check() -> Check {
    let err = [(0.5, 0.5 * std::f64::consts::PI.ln()), (5.0, 24f64.ln()), (2.5, (0.75 * std::f64::consts::PI.sqrt()).ln())]
        .iter()
        .map(|&(x, want)| (ln_gamma(x) - want).abs())
        .fold(0.0, f64::max);
    check("ln_gamma", err <= 1e-12, format!("max error {err:.2e}"))
}

fn random_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    sample_channel(1, cols, rows, rng).expect("valid shape").channel(0).clone()
}

fn eigen_check() -> Check {
    let mut rng = stream_rng(SEED, 0, StreamTag::Channel, 1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let a = random_matrix(&mut rng, 6, 6);
        let h = &a + a.adjoint();
        let err = hermitian_eig(&h).map(|e| frobenius(&(e.reconstruct() - &h)) / frobenius(&h)).unwrap_or(f64::INFINITY);
        worst = worst.max(err);
    }
    check("hermitian_eigensolver", worst <= 1e-10, format!("worst relative reconstruction error {worst:.2e}"))
}

fn waterfill_check() -> Check {
    let eigs = [0.1, 1.0, 4.0, 9.0];
    let ok = waterfill(&eigs, 2.0).map(|wf| {
        let power: f64 = wf.sigmas.iter().map(|s| s * s).sum();
        // first-order condition on every loaded mode: lambda / (1 + s^2 lambda)^2 = 1 / level^2
        let kkt = wf
            .sigmas
            .iter()
            .zip(&eigs)
            .filter(|(s, _)| **s > 0.0)
            .map(|(s, l)| (l / (1.0 + s * s * l).powi(2) - wf.water_level.powi(-2)).abs())
            .fold(0.0, f64::max);
        (power, kkt)
    });
    match ok {
        Ok((power, kkt)) => {
            check("waterfill", (power - 2.0).abs() <= 1e-12 && kkt <= 1e-12, format!("power {power}, kkt residual {kkt:.2e}"))
        }
        Err(e) => check("waterfill", false, e.to_string()),
    }
}

fn channels(i: u64, b: usize, nr: usize, n0: f64) -> crate::model::ChannelSet {
    sample_channel(b, 4, nr, &mut stream_rng(SEED, i, StreamTag::Channel, 0))
        .and_then(|c| c.with_noise(n0))
        .expect("valid channel")
}

fn gp_equal_mse_check() -> Check {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let ch = channels(i, 2, 2, 0.1);
        let gp = global_precoder(&ch, 2, 2.0, PowerAllocation::WaterFilling).expect("gp");
        let mse = wiener_mses(&(ch.global() * &gp.w), ch.n0());
        worst = worst.max(mse.max() - mse.min()).max((mse.max() - gp.min_max_mse).abs());
    }
    check("gp_equal_mse", worst <= 1e-9, format!("worst spread or bound gap {worst:.2e}"))
}

fn agp_reassembly_check() -> Check {
    let mut ok = true;
    for i in 0..20 {
        let ch = channels(i, 3, 2, 0.1);
        let gp = global_precoder(&ch, 2, 3.0, PowerAllocation::WaterFilling).expect("gp");
        let set = agp_extract(&gp.w, &ParticipationState::full(3), 4, 1.0).expect("extract");
        ok &= set.stacked() == gp.w;
    }
    check("agp_reassembles_gp", ok, "full participation stacks back to the global precoder".into())
}

fn sip_bound_check() -> Check {
    let mut worst = f64::INFINITY;
    let mut feasible = true;
    for i in 0..30 {
        let ch = channels(i, 2, 2, 0.1);
        let gp = global_precoder(&ch, 2, 2.0, PowerAllocation::WaterFilling).expect("gp");
        let sip = sip_run(&ch, &[1], 2, 1.0, &SipConfig::default(), PowerAllocation::WaterFilling).expect("sip");
        feasible &= sip.precoders.is_power_feasible();
        let h = build_equivalent_channel(&ch, &sip.precoders, &ParticipationState::full(2)).expect("h_eq");
        worst = worst.min(wiener_mses(&h, ch.n0()).max() - gp.min_max_mse);
    }
    check("sip_above_gp_bound", worst >= -1e-9 && feasible, format!("smallest SIP minus GP gap {worst:.2e}"))
}

/// Projected gradient on the column problem.
fn projected_gradient(h_prev: &CVector, h_b: &CMatrix, f: &[Complex64], budget: f64) -> CVector {
    let a = CVector::from_fn(h_b.ncols(), |k, _| f.iter().enumerate().map(|(r, x)| x * h_b[(r, k)]).sum::<Complex64>().conj());
    let step = 0.5 / a.norm_squared().max(1e-12);
    let mut g = CVector::zeros(h_b.ncols());
    for _ in 0..20_000 {
        let z: Complex64 = f.iter().zip((h_prev + h_b * &g).iter()).map(|(x, y)| x * y).sum();
        g -= a.map(|ak| ak * (z - 1.0) * step);
        let n2 = g.norm_squared();
        if n2 > budget {
            g *= Complex64::new((budget / n2).sqrt(), 0.0);
        }
    }
    g
}

fn kkt_check() -> Check {
    let mut rng = stream_rng(SEED, 0, StreamTag::Channel, 2);
    let (mut gap, mut slack) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let h_prev = random_matrix(&mut rng, 2, 1).column(0).into_owned();
        let h_b = random_matrix(&mut rng, 2, 4);
        let f: Vec<Complex64> = random_matrix(&mut rng, 1, 2).iter().copied().collect();
        let budget = 10f64.powf(rng.random_range(-3.0..1.0));
        let s = kkt_column_update(&h_prev, &h_b, &f, budget);
        let oracle = projected_gradient(&h_prev, &h_b, &f, budget);
        gap = gap.max((column_objective(&h_prev, &h_b, &f, &s.g) - column_objective(&h_prev, &h_b, &f, &oracle)).abs());
        slack = slack.max((s.eta * (s.g.norm_squared() - budget)).abs());
    }
    check("kkt_matches_projected_gradient", gap <= 1e-6 && slack <= 1e-8, format!("objective gap {gap:.2e}, slackness {slack:.2e}"))
}

fn codebook_check() -> Check {
    let mut rng = stream_rng(SEED, 0, StreamTag::Codebook, 0);
    let ok = generate_codebook(4, 2, 4, 1.0, &mut rng).map(|book| {
        book.len() == 16
            && book.entries().iter().all(|e| frobenius(&(e.adjoint() * e - CMatrix::identity(2, 2).map(|z| z * 0.5))) <= 1e-9)
    });
    check("codebook_orthogonal", ok.unwrap_or(false), "16 entries with orthogonal equal-power columns".into())
}

fn qpsk_check() -> Check {
    let ok = [(false, false), (false, true), (true, false), (true, true)]
        .iter()
        .all(|&b| qpsk_demap(qpsk_map(b)) == b && (qpsk_map(b).norm() - 1.0).abs() <= 1e-15);
    check("qpsk_gray_map", ok, "unit energy, demap inverts map".into())
}

fn determinism_check() -> Check {
    let run = |workers| {
        let mut cfg = SimConfig::for_scenario(2, 2, &[0.78]).expect("scenario");
        cfg.realizations = 16;
        cfg.symbols_per_realization = 100;
        cfg.snr_db = vec![10.0];
        sweep(&cfg, Some(workers))
    };
    let same = matches!((run(1), run(4)), (Ok(a), Ok(b)) if a == b);
    check("worker_invariance", same, "1 and 4 workers give identical sweeps".into())
}
