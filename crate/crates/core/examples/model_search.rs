//! Exhaustive enumeration against the Gibbs sampler on the same data.

use gprior_mix::lab::{generate_dataset, ErrorDist, Scheme};
use gprior_mix::{enumerate_all, gibbs_search, make_proposed, ModelPrior, ProposedVariant};

fn main() -> gprior_mix::Result<()> {
    let (d, truth) = generate_dataset(120, 10, Scheme::Table1, ErrorDist::Normal, 3)?;
    let prior = make_proposed(d.n(), d.p(), ProposedVariant::II)?;
    let mp = ModelPrior::Uniform;

    let exact = enumerate_all(&d, &prior, &mp, 20)?;
    let chain = gibbs_search(&d, &prior, &mp, 10_000, 5_000, 11)?;
    println!("true model {}", truth.alpha_c);
    println!("enumeration: top {} with {:.4}", exact.top, exact.prob(&exact.top));
    println!(
        "gibbs: top {} with {:.4}, {} distinct models scored, {} kept",
        chain.top,
        chain.prob(&chain.top),
        chain.visited,
        chain.probs.len()
    );
    let tv: f64 = exact
        .probs
        .iter()
        .map(|(m, w)| (w - chain.prob(m)).abs())
        .sum::<f64>()
        / 2.0;
    println!("total variation between the two: {tv:.4}");
    for (m, w) in exact.ranked(5) {
        println!("  {m:<24} exact {w:.4}  gibbs {:.4}", chain.prob(&m));
    }
    Ok(())
}
