//! Null-true and sparse-signal schemes at a single sample size.

use gprior_mix::config::ExperimentConfig;
use gprior_mix::lab::{run_scheme, Scheme};

fn main() -> gprior_mix::Result<()> {
    for scheme in [Scheme::Scheme1, Scheme::Scheme2] {
        let mut cfg = ExperimentConfig::preset(scheme);
        cfg.n_list = vec![150];
        cfg.replicates = 3;
        let report = run_scheme(&cfg)?;
        println!("{}", scheme.name());
        for r in &report.rows {
            println!(
                "  {:<14} target {:<6} {:<12} mean {:.4}",
                r.prior,
                r.target.name(),
                r.target_model,
                r.mean
            );
        }
    }
    Ok(())
}
