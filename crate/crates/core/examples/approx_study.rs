//! Relative error of the closed-form marginal approximation as n grows with p = ceil(sqrt(n)).

use gprior_mix::lab::{run_approx_study, NuChoice};

fn main() -> gprior_mix::Result<()> {
    for nu in [NuChoice::P, NuChoice::One] {
        let study = run_approx_study(0.5, &[100, 200, 400, 800], nu, 8, 10, 42)?;
        println!("{}: fitted exponent {:.3}", nu.name(), study.exponent);
        for r in &study.rows {
            println!("  n = {:>4}, p = {:>2}: median {:.3e}, max {:.3e}", r.n, r.p, r.median_rel_err, r.max_rel_err);
        }
    }
    Ok(())
}
