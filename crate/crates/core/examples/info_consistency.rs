//! Log Bayes factors against the null as `1 - R^2` shrinks, for both
//! degrees-of-freedom choices and a fixed g.

use gprior_mix::lab::{run_info_consistency, run_info_fixed_g, InfoThresholds, NuChoice};

fn main() -> gprior_mix::Result<()> {
    let p = 10;
    let th = InfoThresholds::new(p);
    println!(
        "p = {p}: stated boundaries n >= {} (nu=1) and n >= {} (nu=p); tail exponent gives {} and {}",
        th.stated_nu_one, th.stated_nu_p, th.tail_nu_one, th.tail_nu_p
    );
    for n in th.boundary_sizes() {
        for prof in [
            run_info_consistency(n, p, NuChoice::One)?,
            run_info_consistency(n, p, NuChoice::P)?,
            run_info_fixed_g(n, p, (n * n) as f64)?,
        ] {
            let vals: Vec<String> = prof.log_bf.iter().map(|v| format!("{v:8.2}")).collect();
            println!(
                "n = {n:>3} {:<14} {}  {}",
                prof.prior,
                vals.join(" "),
                if prof.plateau { "plateau" } else { "growing" }
            );
        }
    }
    Ok(())
}
