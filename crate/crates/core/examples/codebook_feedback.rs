//! Finite-rate feedback: codeword picks for SIP and AGP at equal overhead.
//!
//! cargo run --example codebook_feedback

use jtprecoding::codebook::{generate_codebook, select_global_codeword, sip_codebook_run};
use jtprecoding::gp::agp_extract;
use jtprecoding::model::{build_equivalent_channel, wiener_mses, ParticipationState};
use jtprecoding::montecarlo::{sample_channel, stream_rng, StreamTag};

fn main() -> jtprecoding::Result<()> {
    let n0 = 10f64.powf(-1.5);
    let ch = sample_channel(2, 4, 2, &mut stream_rng(9, 0, StreamTag::Channel, 0))?.with_noise(n0)?;
    let late = ParticipationState::serving_only(2);
    let full = ParticipationState::full(2);
    for d in 1..=5 {
        let mut rng = stream_rng(9, 0, StreamTag::Codebook, d as u64);
        let book = generate_codebook(4, 2, d, 1.0, &mut rng)?;
        let global = generate_codebook(8, 2, 2 * d, 2.0, &mut rng)?;

        let sip = sip_codebook_run(&book, &ch, &[1], 1.0)?;
        let agp = agp_extract(global.entry(select_global_codeword(&global, &ch)?), &full, 4, 1.0)?;
        let mse = |set, state| -> jtprecoding::Result<f64> { Ok(wiener_mses(&build_equivalent_channel(&ch, set, state)?, n0).max()) };
        println!(
            "d = {d}: SIP {:.4} (full) {:.4} (late)   AGP {:.4} (full) {:.4} (late)",
            mse(&sip, &full)?,
            mse(&sip, &late)?,
            mse(&agp, &full)?,
            mse(&agp, &late)?
        );
    }
    Ok(())
}
