//! A reduced run of the true-model simulation table: normal errors,
//! p + 1 = 30, a handful of replicates.

use gprior_mix::config::{ExperimentConfig, OneOrMany};
use gprior_mix::lab::{run_table1, ErrorDist, Scheme};

fn main() -> gprior_mix::Result<()> {
    let mut cfg = ExperimentConfig::preset(Scheme::Table1);
    cfg.n_list = vec![50, 150];
    cfg.p_plus_1_list = vec![30];
    cfg.error_dist = OneOrMany::One(ErrorDist::Normal);
    cfg.replicates = 3;
    let report = run_table1(&cfg)?;
    print!("{}", report.summary_csv());
    Ok(())
}
