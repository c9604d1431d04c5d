//! Mean worst-stream MSE against SIP iteration, averaged over channels.
//!
//! cargo run --release --example convergence_trace

use jtprecoding::montecarlo::{convergence_trace, SimConfig};

fn main() -> jtprecoding::Result<()> {
    for nr in [2, 4] {
        let mut cfg = SimConfig::for_scenario(2, nr, &[0.78])?;
        cfg.realizations = 200;
        for snr in [0.0, 10.0, 20.0] {
            let trace = convergence_trace(&cfg, snr, None)?;
            let at = |n: usize| trace[n - 1];
            println!(
                "N_R = {nr}, {snr:>2} dB: n=1 {:.5}  n=10 {:.5}  n=20 {:.5}  n=50 {:.5}  n=100 {:.5}",
                at(1),
                at(10),
                at(20),
                at(50),
                at(100)
            );
        }
    }
    Ok(())
}
