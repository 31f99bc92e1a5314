//! Log marginal likelihoods of a few models by quadrature, together with the
//! closed-form approximation for the scaled inverse chi-square prior.

use gprior_mix::lab::{generate_dataset, ErrorDist, Scheme};
use gprior_mix::marginal::DEFAULT_TOL;
use gprior_mix::{
    log_bayes_factor_vs_null, log_marginal, log_marginal_approx, log_marginal_null, make_proposed,
    GMixturePrior, ModelIndex, ProposedVariant,
};

fn main() -> gprior_mix::Result<()> {
    let (d, truth) = generate_dataset(200, 8, Scheme::Table1, ErrorDist::Normal, 7)?;
    println!("n = {}, p = {}, true model {}", d.n(), d.p(), truth.alpha_c);
    println!("null model: log m = {:.6}", log_marginal_null(&d)?.log_m);

    let prior = make_proposed(d.n(), d.p(), ProposedVariant::II)?;
    let tau2 = (d.n() * d.n()) as f64;
    let models = [truth.alpha_c.clone(), ModelIndex::prefix(2), ModelIndex::full(d.p())];
    for alpha in &models {
        let exact = log_marginal(&d, alpha, &prior, DEFAULT_TOL)?;
        let approx = log_marginal_approx(&d, alpha, d.p() as f64, tau2)?;
        let bf = log_bayes_factor_vs_null(&d, alpha, &prior)?;
        println!(
            "{alpha}: R^2 = {:.4}, log m = {:.6} (+/- {:.1e}), approximation {:.6}, log BF vs null {:.3}",
            exact.r2, exact.log_m, exact.quad_abs_err, approx.log_m, bf
        );
    }

    let zs = GMixturePrior::zellner_siow(d.n())?;
    let e = log_marginal(&d, &truth.alpha_c, &zs, DEFAULT_TOL)?;
    println!("Zellner-Siow on the true model: log m = {:.6}", e.log_m);
    Ok(())
}
