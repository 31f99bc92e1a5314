//! Prints the built-in experiment presets as TOML and resolves the priors of
//! one cell.

use gprior_mix::config::ExperimentConfig;
use gprior_mix::lab::Scheme;

fn main() -> gprior_mix::Result<()> {
    let cfg = ExperimentConfig::preset(Scheme::Table1);
    print!("{}", cfg.to_toml());
    let (n, p) = (100, cfg.regressors(30));
    println!("\npriors at n = {n}, p = {p}:");
    for spec in &cfg.priors {
        println!("  {:<14} {:?}", spec.label, spec.resolve(n, p)?);
    }
    Ok(())
}
