//! Search over the model space: full enumeration, the nested chain, and a
//! systematic-scan Gibbs sampler over inclusion indicators.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::marginal::{log_marginal_with_stats, normalize_log_weights, ModelPrior, DEFAULT_TOL};
use crate::prior::GMixturePrior;
use crate::regression::{fit_stats, Dataset, ModelIndex, RegressionStats};
use crate::special::logistic;

pub const DEFAULT_MAX_P: usize = 20;
pub const DEFAULT_CHAIN_LENGTH: usize = 10_000;
pub const DEFAULT_BURN_IN: usize = 5_000;
/// Largest `p` representable by the sampler's bit-mask state.
pub const MAX_GIBBS_P: usize = 128;

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    pub probs: BTreeMap<ModelIndex, f64>,
    /// Distinct models whose marginal was evaluated.
    pub visited: usize,
    pub top: ModelIndex,
    pub chain_length: usize,
    pub burn_in: usize,
    pub seed: Option<u64>,
}

impl SearchResult {
    fn from_weights(
        entries: Vec<(ModelIndex, f64)>,
        visited: usize,
        chain_length: usize,
        burn_in: usize,
        seed: Option<u64>,
    ) -> Result<Self> {
        let logs: Vec<f64> = entries.iter().map(|(_, l)| *l).collect();
        let probs: BTreeMap<ModelIndex, f64> = entries
            .into_iter()
            .zip(normalize_log_weights(&logs)?)
            .map(|((m, _), w)| (m, w))
            .collect();
        // BTreeMap iterates in (size, lexicographic) order, so the first maximum wins ties.
        let mut top: Option<(&ModelIndex, f64)> = None;
        for (m, &w) in &probs {
            if top.is_none_or(|(_, best)| w > best) {
                top = Some((m, w));
            }
        }
        let top = top.expect("non-empty").0.clone();
        Ok(SearchResult {
            probs,
            visited,
            top,
            chain_length,
            burn_in,
            seed,
        })
    }

    /// Posterior probability of `alpha`, zero when it was never visited.
    pub fn prob(&self, alpha: &ModelIndex) -> f64 {
        self.probs.get(alpha).copied().unwrap_or(0.0)
    }

    /// The `k` most probable models, ties ordered by size then indices.
    pub fn ranked(&self, k: usize) -> Vec<(ModelIndex, f64)> {
        let mut v: Vec<(ModelIndex, f64)> =
            self.probs.iter().map(|(m, &w)| (m.clone(), w)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        v.truncate(k);
        v
    }
}

/// The chain `{}`, `{1}`, `{1,2}`, ..., `{1..p}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestedSpace {
    pub chain: Vec<ModelIndex>,
}

impl NestedSpace {
    pub fn new(p: usize) -> Self {
        NestedSpace {
            chain: (0..=p).map(ModelIndex::prefix).collect(),
        }
    }
}

/// Regression statistics shared by every search on one dataset.
///
/// Statistics do not depend on the prior, so several searches over the same
/// data can reuse them. Marginals are still cached per search.
#[derive(Default)]
pub struct StatsCache {
    map: RefCell<HashMap<u128, RegressionStats>>,
}

impl StatsCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&self, d: &Dataset, mask: u128) -> Result<RegressionStats> {
        if let Some(s) = self.map.borrow().get(&mask) {
            return Ok(*s);
        }
        let s = fit_stats(d, &ModelIndex::from_mask(mask))?;
        self.map.borrow_mut().insert(mask, s);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.map.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest `1 - R^2` over the cached non-null models, if any.
    pub fn min_one_minus_r2(&self) -> Option<f64> {
        self.map
            .borrow()
            .values()
            .filter(|s| s.p_alpha > 0)
            .map(|s| 1.0 - s.r2)
            .min_by(f64::total_cmp)
    }
}

/// Log posterior weight `ln p(M) + ln m(y)` of models given by bit masks.
struct Scorer<'a> {
    d: &'a Dataset,
    prior: &'a GMixturePrior,
    mp: ModelPrior,
    tol: f64,
    stats: &'a StatsCache,
}

impl Scorer<'_> {
    fn log_weight(&self, mask: u128) -> Result<f64> {
        let stats = self.stats.get(self.d, mask)?;
        let e = log_marginal_with_stats(self.d.n(), &stats, self.prior, self.tol)?;
        Ok(e.log_m + self.mp.log_mass(stats.p_alpha, self.d.p()))
    }
}

/// Exact posterior over all `2^p` models.
pub fn enumerate_all(
    d: &Dataset,
    prior: &GMixturePrior,
    mp: &ModelPrior,
    max_p: usize,
) -> Result<SearchResult> {
    enumerate_all_with(d, prior, mp, max_p, &StatsCache::new())
}

/// As [`enumerate_all`], drawing regression statistics from a shared cache.
pub fn enumerate_all_with(
    d: &Dataset,
    prior: &GMixturePrior,
    mp: &ModelPrior,
    max_p: usize,
    stats: &StatsCache,
) -> Result<SearchResult> {
    let p = d.p();
    if p > max_p || p >= MAX_GIBBS_P {
        return Err(Error::SpaceTooLarge { p, max_p });
    }
    let scorer = Scorer {
        d,
        prior,
        mp: *mp,
        tol: DEFAULT_TOL,
        stats,
    };
    let count = 1u128 << p;
    let mut entries = Vec::with_capacity(count as usize);
    for mask in 0..count {
        entries.push((ModelIndex::from_mask(mask), scorer.log_weight(mask)?));
    }
    SearchResult::from_weights(entries, count as usize, 0, 0, None)
}

/// Posterior restricted to the nested chain of `p + 1` models.
pub fn enumerate_nested(
    d: &Dataset,
    prior: &GMixturePrior,
    mp: &ModelPrior,
) -> Result<SearchResult> {
    let space = NestedSpace::new(d.p());
    let mut entries = Vec::with_capacity(space.chain.len());
    for alpha in space.chain {
        let stats = fit_stats(d, &alpha)?;
        let e = log_marginal_with_stats(d.n(), &stats, prior, DEFAULT_TOL)?;
        let w = e.log_m + mp.log_mass(alpha.size(), d.p());
        entries.push((alpha, w));
    }
    let visited = entries.len();
    SearchResult::from_weights(entries, visited, 0, 0, None)
}

/// Systematic-scan Gibbs sampler over inclusion indicators.
///
/// Each of the `chain_length` iterations updates indicators `1..p` in order,
/// drawing each from its full conditional. The chain starts at the null
/// model. Every state occupied after a single-coordinate update in the
/// iterations past `burn_in` enters the visited set, and the returned
/// probabilities are `p(M) m(y)` renormalized over that set.
pub fn gibbs_search(
    d: &Dataset,
    prior: &GMixturePrior,
    mp: &ModelPrior,
    chain_length: usize,
    burn_in: usize,
    seed: u64,
) -> Result<SearchResult> {
    gibbs_search_with(d, prior, mp, chain_length, burn_in, seed, &StatsCache::new())
}

/// As [`gibbs_search`], drawing regression statistics from a shared cache.
pub fn gibbs_search_with(
    d: &Dataset,
    prior: &GMixturePrior,
    mp: &ModelPrior,
    chain_length: usize,
    burn_in: usize,
    seed: u64,
    stats: &StatsCache,
) -> Result<SearchResult> {
    if chain_length <= burn_in {
        return Err(Error::InvalidInput(format!(
            "chain length {chain_length} must exceed burn-in {burn_in}"
        )));
    }
    let p = d.p();
    if p > MAX_GIBBS_P {
        return Err(Error::SpaceTooLarge {
            p,
            max_p: MAX_GIBBS_P,
        });
    }
    let scorer = Scorer {
        d,
        prior,
        mp: *mp,
        tol: DEFAULT_TOL,
        stats,
    };
    let mut cache: HashMap<u128, f64> = HashMap::new();
    let mut weight = |mask: u128| -> Result<f64> {
        if let Some(&w) = cache.get(&mask) {
            return Ok(w);
        }
        let w = scorer.log_weight(mask)?;
        cache.insert(mask, w);
        Ok(w)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state: u128 = 0;
    let mut w_state = weight(state)?;
    let mut kept: HashSet<u128> = HashSet::new();
    for iter in 0..chain_length {
        for j in 0..p {
            let bit = 1u128 << j;
            let other = state ^ bit;
            let w_other = weight(other)?;
            let (w_in, w_out) = if state & bit != 0 {
                (w_state, w_other)
            } else {
                (w_other, w_state)
            };
            let include = rng.random::<f64>() < logistic(w_in - w_out);
            if include != (state & bit != 0) {
                state = other;
                w_state = w_other;
            }
            if iter >= burn_in {
                kept.insert(state);
            }
        }
        if p == 0 && iter >= burn_in {
            kept.insert(state);
        }
    }
    let visited = cache.len();
    let mut masks: Vec<u128> = kept.into_iter().collect();
    masks.sort_unstable();
    let entries = masks
        .into_iter()
        .map(|m| (ModelIndex::from_mask(m), cache[&m]))
        .collect();
    SearchResult::from_weights(entries, visited, chain_length, burn_in, Some(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn synthetic(n: usize, p: usize, beta: &[f64], seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let y = (0..n)
            .map(|i| {
                let mut v: f64 = StandardNormal.sample(&mut rng);
                for (j, b) in beta.iter().enumerate() {
                    v += b * cols[j][i];
                }
                v
            })
            .collect();
        Dataset::new(y, cols).unwrap()
    }

    fn proposed(n: usize) -> GMixturePrior {
        GMixturePrior::scaled_inv_chisq(1.0, (n * n) as f64).unwrap()
    }

    #[test]
    fn nested_space_shape() {
        let s = NestedSpace::new(3);
        assert_eq!(s.chain.len(), 4);
        for w in s.chain.windows(2) {
            assert!(w[0].is_subset_of(&w[1]));
        }
    }

    #[test]
    fn enumeration_normalizes() {
        let d = synthetic(40, 4, &[1.0, 0.0, 0.5], 1);
        let r = enumerate_all(&d, &proposed(40), &ModelPrior::Uniform, DEFAULT_MAX_P).unwrap();
        assert_eq!(r.probs.len(), 16);
        assert_eq!(r.visited, 16);
        let total: f64 = r.probs.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let best = r.probs.values().cloned().fold(0.0, f64::max);
        assert_eq!(r.probs[&r.top], best);
    }

    #[test]
    fn enumeration_limit() {
        let d = synthetic(40, 4, &[], 2);
        assert!(matches!(
            enumerate_all(&d, &proposed(40), &ModelPrior::Uniform, 3),
            Err(Error::SpaceTooLarge { p: 4, max_p: 3 })
        ));
    }

    #[test]
    fn nested_is_renormalized_enumeration() {
        let d = synthetic(50, 3, &[0.8, 0.4], 3);
        let prior = proposed(50);
        let all = enumerate_all(&d, &prior, &ModelPrior::Uniform, DEFAULT_MAX_P).unwrap();
        let nested = enumerate_nested(&d, &prior, &ModelPrior::Uniform).unwrap();
        assert_eq!(nested.probs.len(), 4);
        let chain = NestedSpace::new(3).chain;
        let sub: f64 = chain.iter().map(|m| all.probs[m]).sum();
        for m in &chain {
            assert!((all.probs[m] / sub - nested.probs[m]).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_minimal_chain() {
        let d = synthetic(20, 1, &[1.0], 4);
        let r = gibbs_search(&d, &proposed(20), &ModelPrior::Uniform, 1, 0, 9).unwrap();
        assert!(r.probs.len() <= 2);
        assert!((r.probs.values().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(gibbs_search(&d, &proposed(20), &ModelPrior::Uniform, 5, 5, 9).is_err());
    }

    #[test]
    fn gibbs_is_deterministic_and_dominates() {
        let d = synthetic(60, 6, &[1.0, -0.7, 0.0, 0.3], 5);
        let prior = proposed(60);
        let a = gibbs_search(&d, &prior, &ModelPrior::Uniform, 300, 100, 11).unwrap();
        let b = gibbs_search(&d, &prior, &ModelPrior::Uniform, 300, 100, 11).unwrap();
        assert_eq!(a.probs, b.probs);
        assert_eq!(a.visited, b.visited);
        let exact = enumerate_all(&d, &prior, &ModelPrior::Uniform, DEFAULT_MAX_P).unwrap();
        for (m, &p) in &a.probs {
            assert!(p >= exact.probs[m] - 1e-12);
        }
    }

    #[test]
    fn shared_stats_cache_changes_nothing() {
        let d = synthetic(50, 5, &[1.0, 0.5], 6);
        let prior = proposed(50);
        let cache = StatsCache::new();
        let plain = gibbs_search(&d, &prior, &ModelPrior::Uniform, 200, 50, 3).unwrap();
        let zs = GMixturePrior::zellner_siow(50).unwrap();
        gibbs_search_with(&d, &zs, &ModelPrior::Uniform, 200, 50, 8, &cache).unwrap();
        let shared = gibbs_search_with(&d, &prior, &ModelPrior::Uniform, 200, 50, 3, &cache).unwrap();
        assert_eq!(plain.probs, shared.probs);
        assert!(!cache.is_empty());
    }

    #[test]
    fn ranking_and_tie_break() {
        let entries = vec![
            (ModelIndex::new(vec![2]).unwrap(), 0.0),
            (ModelIndex::new(vec![1]).unwrap(), 0.0),
            (ModelIndex::new(vec![1, 2]).unwrap(), 0.0),
        ];
        let r = SearchResult::from_weights(entries.clone(), 3, 0, 0, None).unwrap();
        assert_eq!(r.top, ModelIndex::new(vec![1]).unwrap());
        let mut rev = entries;
        rev.reverse();
        let r2 = SearchResult::from_weights(rev, 3, 0, 0, None).unwrap();
        assert_eq!(r2.top, r.top);
        assert_eq!(r.ranked(2)[1].0, ModelIndex::new(vec![2]).unwrap());
        assert_eq!(r.prob(&ModelIndex::null()), 0.0);
    }
}
