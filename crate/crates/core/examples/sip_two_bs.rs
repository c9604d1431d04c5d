//! Two-BS SIP: serving precoder first, then the helper's iterative loop.
//!
//! cargo run --example sip_two_bs

use jtprecoding::gp::{global_precoder, PowerAllocation};
use jtprecoding::model::{build_equivalent_channel, wiener_mses, ParticipationState};
use jtprecoding::montecarlo::{sample_channel, stream_rng, StreamTag};
use jtprecoding::sip::{sip_run, SipConfig};

fn main() -> jtprecoding::Result<()> {
    let n0 = 10f64.powf(-1.5); // 15 dB
    let ch = sample_channel(2, 4, 2, &mut stream_rng(3, 0, StreamTag::Channel, 0))?.with_noise(n0)?;
    let out = sip_run(&ch, &[1], 2, 1.0, &SipConfig::default(), PowerAllocation::WaterFilling)?;
    let (_, trace) = &out.traces[0];
    println!("helper loop: {} iterations, {:?}", trace.iterations_used, trace.terminated_by);
    for (n, m) in trace.max_mse_history.iter().enumerate().step_by(5) {
        println!("  n = {:3}  max MSE {m:.6}", n + 1);
    }

    let gp = global_precoder(&ch, 2, 2.0, PowerAllocation::WaterFilling)?;
    for (label, state) in [("full JT", ParticipationState::full(2)), ("helper late", ParticipationState::serving_only(2))] {
        let h = build_equivalent_channel(&ch, &out.precoders, &state)?;
        println!("SIP, {label}: max MSE {:.6}", wiener_mses(&h, n0).max());
    }
    println!("GP bound {:.6}; per-BS SIP power {:.4?}", gp.min_max_mse, out.precoders.bs_powers());
    Ok(())
}
