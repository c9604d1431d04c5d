//! Three BSs: helpers are optimized in descending participation order, each
//! against everything already fixed.
//!
//! cargo run --example sip_multi_bs

use jtprecoding::backhaul::ParticipationProfile;
use jtprecoding::gp::PowerAllocation;
use jtprecoding::model::{build_equivalent_channel, wiener_mses, ParticipationState};
use jtprecoding::montecarlo::{sample_channel, stream_rng, StreamTag};
use jtprecoding::sip::{sip_run, SipConfig};

fn main() -> jtprecoding::Result<()> {
    let n0 = 0.1;
    let ch = sample_channel(3, 4, 2, &mut stream_rng(5, 0, StreamTag::Channel, 0))?.with_noise(n0)?;
    let profile = ParticipationProfile::from_helpers(&[0.3, 0.58])?;
    let order = profile.helper_order();
    let out = sip_run(&ch, &order, 2, 1.0, &SipConfig::default(), PowerAllocation::WaterFilling)?;
    for (b, trace) in &out.traces {
        println!("BS{}: {} iterations, final max MSE {:.6}", b + 1, trace.iterations_used, trace.max_mse_history.last().unwrap());
    }
    for active in [[true, false, false], [true, false, true], [true, true, false], [true, true, true]] {
        let state = ParticipationState::new(active.to_vec())?;
        let h = build_equivalent_channel(&ch, &out.precoders, &state)?;
        println!("active {active:?}: max MSE {:.6}", wiener_mses(&h, n0).max());
    }
    Ok(())
}
