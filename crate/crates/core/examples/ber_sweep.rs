//! Monte Carlo sweep from a recipe file, scaled down, written as CSV.
//!
//! cargo run --release --example ber_sweep [recipe] [realizations]

use std::path::PathBuf;

use jtprecoding::config::ConfigFile;
use jtprecoding::montecarlo::sweep;
use jtprecoding::report::write_sweep_csv;

fn main() -> jtprecoding::Result<()> {
    let mut args = std::env::args().skip(1);
    let recipe = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("recipes/fig08.cfg"));
    let realizations = args.next().unwrap_or_else(|| "100".into());

    let mut file = ConfigFile::load(&recipe)?;
    file.set(&format!("realizations={realizations}"))?;
    file.set("symbols=10000")?;
    let cfg = file.to_sim_config()?;
    eprintln!("{}: B={} N_R={} p={:.3?}", recipe.display(), cfg.bs_count, cfg.nr, cfg.profile.probs());
    write_sweep_csv(&sweep(&cfg, None)?, &mut std::io::stdout().lock())
}
