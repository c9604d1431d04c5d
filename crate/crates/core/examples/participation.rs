//! Helper participation from the shifted-gamma backhaul delay.
//!
//! cargo run --example participation

use jtprecoding::backhaul::{participation_probability, sample_participation, BackhaulParams, Deadline, ParticipationProfile};
use jtprecoding::montecarlo::{stream_rng, StreamTag};

fn main() -> jtprecoding::Result<()> {
    for t0 in [7.5, 8.5] {
        let params = BackhaulParams::new(1.0, 2.5, t0)?;
        for deadline in [10.0, 11.0] {
            let p = participation_probability(&params, Deadline::new(deadline)?);
            println!("t0 = {t0} ms, T = {deadline} ms: p = {p:.4}");
        }
    }

    let helpers = [BackhaulParams::new(1.0, 2.5, 7.5)?, BackhaulParams::new(1.0, 2.5, 8.5)?];
    let profile = ParticipationProfile::from_backhaul(&helpers, Deadline::new(11.0)?);
    let mut rng = stream_rng(1, 0, StreamTag::Participation, 0);
    let slots = 100_000;
    let mut joined = [0usize; 3];
    for _ in 0..slots {
        let state = sample_participation(&profile, &mut rng);
        for (b, n) in joined.iter_mut().enumerate() {
            *n += usize::from(state.is_active(b));
        }
    }
    for b in 0..3 {
        println!("BS{}: p = {:.4}, observed {:.4}", b + 1, profile.probs()[b], joined[b] as f64 / slots as f64);
    }
    println!("SIP optimizes helpers in order {:?}", profile.helper_order().iter().map(|b| b + 1).collect::<Vec<_>>());
    Ok(())
}
