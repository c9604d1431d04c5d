//! Backhaul latency and helper-BS participation.
//!
//! The delay from the serving BS to a helper follows a shifted gamma law with
//! scale `alpha`, shape `beta` and shift `t0` (all in ms). A helper joins the
//! joint transmission in a slot only if its delay beats the deadline `T`, so
//! its participation probability is the delay CDF evaluated at `T`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::ParticipationState;

/// Relative tolerance of the incomplete gamma series and continued fraction.
pub const GAMMA_TOLERANCE: f64 = 1e-12;

const GAMMA_MAX_ITER: usize = 10_000;

/// Shifted gamma latency model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackhaulParams {
    alpha: f64,
    beta: f64,
    t0: f64,
}

impl BackhaulParams {
    pub fn new(alpha: f64, beta: f64, t0: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", format!("scale must be positive, got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid("beta", format!("shape must be positive, got {beta}")));
        }
        if !(t0 >= 0.0 && t0.is_finite()) {
            return Err(invalid("t0", format!("shift must be nonnegative, got {t0}")));
        }
        Ok(Self { alpha, beta, t0 })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }
}

/// The instant `T` (ms after the serving BS pushes data) at which JT happens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deadline(f64);

impl Deadline {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("deadline", format!("must be positive, got {t}")));
        }
        Ok(Self(t))
    }

    pub fn ms(&self) -> f64 {
        self.0
    }
}

fn invalid(field: &str, message: String) -> Error {
    Error::Validation { field: field.into(), message }
}

/// Latency density; zero at and before the shift.
pub fn delay_pdf(params: &BackhaulParams, t: f64) -> f64 {
    if t <= params.t0 {
        return 0.0;
    }
    let z = (t - params.t0) / params.alpha;
    ((params.beta - 1.0) * z.ln() - z - ln_gamma(params.beta)).exp() / params.alpha
}

/// Probability that the delay is below the deadline.
pub fn participation_probability(params: &BackhaulParams, deadline: Deadline) -> f64 {
    participation_probability_with_tolerance(params, deadline, GAMMA_TOLERANCE)
}

/// [`participation_probability`] with an explicit incomplete-gamma tolerance.
pub fn participation_probability_with_tolerance(
    params: &BackhaulParams,
    deadline: Deadline,
    tolerance: f64,
) -> f64 {
    if deadline.ms() <= params.t0 {
        return 0.0;
    }
    regularized_lower_gamma_with_tolerance(params.beta, (deadline.ms() - params.t0) / params.alpha, tolerance)
}

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x) = gamma(a, x) / Gamma(a)`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> f64 {
    regularized_lower_gamma_with_tolerance(a, x, GAMMA_TOLERANCE)
}

pub fn regularized_lower_gamma_with_tolerance(a: f64, x: f64, tolerance: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // Series: sum_n x^n / (a (a+1) ... (a+n)).
        let mut denom = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..GAMMA_MAX_ITER {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * tolerance {
                break;
            }
        }
        (sum.ln() + log_prefactor).exp().clamp(0.0, 1.0)
    } else {
        // Modified Lentz evaluation of the continued fraction for Q(a, x).
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let step = d * c;
            h *= step;
            if (step - 1.0).abs() < tolerance {
                break;
            }
        }
        (1.0 - (log_prefactor.exp() * h)).clamp(0.0, 1.0)
    }
}

/// Participation probabilities; entry 0 is the serving BS and is always 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationProfile {
    probs: Vec<f64>,
}

impl ParticipationProfile {
    /// Builds a profile from the helper probabilities `p_2, ..., p_B`.
    pub fn from_helpers(helpers: &[f64]) -> Result<Self> {
        if let Some(p) = helpers.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(invalid("p", format!("probability {p} is outside [0, 1]")));
        }
        let mut probs = Vec::with_capacity(helpers.len() + 1);
        probs.push(1.0);
        probs.extend_from_slice(helpers);
        Ok(Self { probs })
    }

    /// Profile implied by one latency model per helper and a common deadline.
    pub fn from_backhaul(helpers: &[BackhaulParams], deadline: Deadline) -> Self {
        let p: Vec<f64> = helpers.iter().map(|h| participation_probability(h, deadline)).collect();
        Self::from_helpers(&p).expect("probabilities from a CDF lie in [0, 1]")
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn bs_count(&self) -> usize {
        self.probs.len()
    }

    /// Helper BS indices sorted by descending probability, ties by index.
    pub fn helper_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (1..self.probs.len()).collect();
        order.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        order
    }
}

/// Independent Bernoulli draw for every helper; the serving BS is always on.
pub fn sample_participation<R: Rng + ?Sized>(
    profile: &ParticipationProfile,
    rng: &mut R,
) -> ParticipationState {
    let active = profile
        .probs
        .iter()
        .enumerate()
        .map(|(b, &p)| b == 0 || rng.random::<f64>() < p)
        .collect();
    ParticipationState::new(active).expect("serving BS is active by construction")
}
