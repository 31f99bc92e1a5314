//! Densities and modes of the mixing priors on `g` for a given `n` and `p`.

use gprior_mix::prior::{Mode, RhoRule};
use gprior_mix::{make_proposed, GMixturePrior, ProposedVariant};

fn main() -> gprior_mix::Result<()> {
    let (n, p) = (100, 10);
    let priors = [
        ("proposed-I", make_proposed(n, p, ProposedVariant::I)?),
        ("proposed-II", make_proposed(n, p, ProposedVariant::II)?),
        ("zellner-siow", GMixturePrior::zellner_siow(n)?),
        ("hyper-g", GMixturePrior::hyper_g(3.0)?),
        ("hyper-g/n", GMixturePrior::hyper_g_over_n(3.0, n)?),
        ("generalized-g", GMixturePrior::generalized_g(0.25, n)?.for_model_size(4)),
        ("robust", GMixturePrior::robust(0.5, 1.0, RhoRule::InverseModelSize, n)?.for_model_size(4)),
    ];
    println!("{:<14} {:>14} {:>12} {:>12} {:>12}", "prior", "mode", "ln pi(1)", "ln pi(n)", "ln pi(n^2)");
    for (name, prior) in &priors {
        let mode = match prior.mode() {
            Mode::Interior(g) => format!("{g:.3}"),
            Mode::Boundary(g) => format!("edge {g:.3}"),
        };
        let at = |g: f64| prior.log_density(g).map_or(f64::NEG_INFINITY, |v| v);
        let nf = n as f64;
        println!(
            "{name:<14} {mode:>14} {:>12.4} {:>12.4} {:>12.4}",
            at(1.0),
            at(nf),
            at(nf * nf)
        );
    }
    Ok(())
}
