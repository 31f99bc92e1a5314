//! Divergence ratio of the selected model when the mean is nonlinear in the regressors.

use gprior_mix::config::ExperimentConfig;
use gprior_mix::lab::{run_model_false, Scheme};

fn main() -> gprior_mix::Result<()> {
    let mut cfg = ExperimentConfig::preset(Scheme::ModelFalse);
    cfg.p_plus_1_list = vec![7];
    cfg.replicates = 10;
    let report = run_model_false(&cfg)?;
    for r in &report.rows {
        println!(
            "{:<12} n = {:>3}: mean ratio {:.4}, median {:.4}, minimum attained in {:.0}% of replicates",
            r.prior,
            r.n,
            r.mean,
            r.median,
            100.0 * r.visit_rate
        );
    }
    Ok(())
}
