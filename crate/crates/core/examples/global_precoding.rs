//! Global precoding on the stacked channel, and what happens to its row
//! blocks (AGP) when the helper misses the deadline.
//!
//! cargo run --example global_precoding

use jtprecoding::gp::{agp_extract, global_precoder, gram, waterfill, PowerAllocation};
use jtprecoding::linalg::hermitian_eig;
use jtprecoding::model::{build_equivalent_channel, wiener_mses, ParticipationState};
use jtprecoding::montecarlo::{sample_channel, stream_rng, StreamTag};

fn main() -> jtprecoding::Result<()> {
    let n0 = 0.1; // 10 dB
    let ch = sample_channel(2, 4, 2, &mut stream_rng(7, 0, StreamTag::Channel, 0))?.with_noise(n0)?;

    let eig = hermitian_eig(&gram(&ch).matrix)?;
    let top = &eig.values[eig.values.len() - 2..];
    let wf = waterfill(top, 2.0)?;
    println!("top eigenvalues {top:.3?}, water level {:.4}, stream powers {:.4?}", wf.water_level, wf.sigmas.iter().map(|s| s * s).collect::<Vec<_>>());

    let gp = global_precoder(&ch, 2, 2.0, PowerAllocation::WaterFilling)?;
    let mse = wiener_mses(&(ch.global() * &gp.w), n0);
    println!("GP sub-stream MSEs {:.6?}, bound {:.6}", mse.per_stream, gp.min_max_mse);

    for (label, state) in [("full JT", ParticipationState::full(2)), ("helper late", ParticipationState::serving_only(2))] {
        let set = agp_extract(&gp.w, &ParticipationState::full(2), 4, 1.0)?;
        let h = build_equivalent_channel(&ch, &set, &state)?;
        println!("AGP, {label}: max MSE {:.6}, per-BS power {:.3?}", wiener_mses(&h, n0).max(), set.bs_powers());
    }
    Ok(())
}
