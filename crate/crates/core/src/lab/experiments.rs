//! Replicated experiments over simulated data.
//!
//! Replicates run in parallel on the current rayon pool. Each replicate owns
//! its dataset, caches and random streams, and results are merged in
//! replicate order, so reports do not depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::generate::{draw_dataset, draw_truth, ErrorDist, Scheme, TrueModelSpec};
use super::report::{ExperimentReport, Target};
use crate::config::{ExperimentConfig, PriorSpec, SearchMode};
use crate::error::{Error, Result};
use crate::marginal::{log_bf_from_stats, log_marginal_approx, log_marginal_quadrature, ModelPrior, DEFAULT_TOL};
use crate::prior::{make_proposed, GMixturePrior, ProposedVariant};
use crate::regression::{residual_quadratic, Dataset, ModelIndex};
use crate::search::{
    enumerate_all_with, enumerate_nested, gibbs_search_with, SearchResult, StatsCache, DEFAULT_MAX_P,
};
use crate::seed::{derive, label, stream};

/// Largest `p` for which the model-false minimum is taken over all `2^p` models.
pub const MODEL_FALSE_MAX_P: usize = 14;

/// Seed of the fixed truth for one scheme and dimension.
pub fn truth_seed(base: u64, scheme: Scheme, p: usize) -> u64 {
    derive(base, &[stream::TRUTH, scheme.stream_label(), p as u64])
}

/// Seed of one replicate's data.
pub fn replicate_seed(base: u64, scheme: Scheme, dist: ErrorDist, p: usize, n: usize, rep: usize) -> u64 {
    derive(
        base,
        &[stream::DATA, scheme.stream_label(), dist.stream_label(), p as u64, n as u64, rep as u64],
    )
}

/// Seed of the chain run for `prior_label` on a replicate.
pub fn chain_seed(rep_seed: u64, prior_label: &str) -> u64 {
    derive(rep_seed, &[stream::CHAIN, label(prior_label)])
}

/// Posterior over models for one prior under the configured search mode.
#[allow(clippy::too_many_arguments)]
pub fn search_posterior(
    d: &Dataset,
    prior: &GMixturePrior,
    mp: &ModelPrior,
    mode: SearchMode,
    chain_length: usize,
    burn_in: usize,
    seed: u64,
    stats: &StatsCache,
) -> Result<SearchResult> {
    match mode {
        SearchMode::Nested => enumerate_nested(d, prior, mp),
        SearchMode::Enumerate => enumerate_all_with(d, prior, mp, DEFAULT_MAX_P, stats),
        SearchMode::Auto if d.p() <= DEFAULT_MAX_P => enumerate_all_with(d, prior, mp, DEFAULT_MAX_P, stats),
        SearchMode::Auto | SearchMode::Gibbs => {
            gibbs_search_with(d, prior, mp, chain_length, burn_in, seed, stats)
        }
    }
}

fn targets(truth: &TrueModelSpec) -> Vec<(Target, ModelIndex)> {
    match truth.scheme {
        Scheme::Scheme1 => vec![(Target::Null, ModelIndex::null())],
        Scheme::Scheme2 => vec![
            (Target::Sparse, truth.target.clone()),
            (Target::TrueModel, truth.alpha_c.clone()),
        ],
        _ => vec![(Target::TrueModel, truth.alpha_c.clone())],
    }
}

/// Per-replicate outcome: `values[prior][target]`, `visited[prior][target]`.
struct ReplicateOutcome {
    values: Vec<Vec<f64>>,
    visited: Vec<Vec<bool>>,
    min_one_minus_r2: Option<f64>,
}

fn base_truth(cfg: &ExperimentConfig, p: usize) -> Result<TrueModelSpec> {
    let mut truth = draw_truth(cfg.scheme, p, truth_seed(cfg.base_seed, cfg.scheme, p))?;
    truth.sigma = cfg.sigma;
    if truth.mu_builder.is_some() {
        truth.mu_builder = Some(cfg.mu_builder);
    }
    Ok(truth)
}

fn resolve_priors(cfg: &ExperimentConfig, n: usize, p: usize) -> Result<Vec<GMixturePrior>> {
    cfg.priors.iter().map(|s| s.resolve(n, p)).collect()
}

/// Posterior probabilities of the tracked models, for Table 1 style schemes.
fn run_probability(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mp = cfg.model_prior.resolve()?;
    let mut report = ExperimentReport::new(cfg);
    for dist in cfg.error_dists() {
        for &pp in &cfg.p_plus_1_list {
            let p = cfg.regressors(pp);
            let truth = base_truth(cfg, p)?;
            let tracked = targets(&truth);
            for &n in &cfg.n_list {
                let priors = resolve_priors(cfg, n, p)?;
                let outcomes: Vec<ReplicateOutcome> = (0..cfg.replicates)
                    .into_par_iter()
                    .map(|rep| {
                        let seed = replicate_seed(cfg.base_seed, cfg.scheme, dist, p, n, rep);
                        let (d, _) = draw_dataset(&truth, n, dist, cfg.calibration, seed)?;
                        let stats = StatsCache::new();
                        let mut values = Vec::with_capacity(priors.len());
                        let mut visited = Vec::with_capacity(priors.len());
                        for (spec, prior) in cfg.priors.iter().zip(&priors) {
                            let res = search_posterior(
                                &d,
                                prior,
                                &mp,
                                cfg.search,
                                cfg.chain_length,
                                cfg.burn_in,
                                chain_seed(seed, &spec.label),
                                &stats,
                            )?;
                            values.push(tracked.iter().map(|(_, m)| res.prob(m)).collect());
                            visited.push(tracked.iter().map(|(_, m)| res.probs.contains_key(m)).collect());
                        }
                        Ok(ReplicateOutcome {
                            values,
                            visited,
                            min_one_minus_r2: stats.min_one_minus_r2(),
                        })
                    })
                    .collect::<Result<_>>()?;
                report.extend_cell(cfg, dist, n, pp, &tracked, &outcomes_view(&outcomes));
            }
        }
    }
    Ok(report)
}

/// Flattened view used by the report builder.
pub(crate) struct CellOutcomes {
    pub values: Vec<Vec<Vec<f64>>>,
    pub visited: Vec<Vec<Vec<bool>>>,
    pub min_one_minus_r2: Option<f64>,
}

fn outcomes_view(outcomes: &[ReplicateOutcome]) -> CellOutcomes {
    CellOutcomes {
        values: outcomes.iter().map(|o| o.values.clone()).collect(),
        visited: outcomes.iter().map(|o| o.visited.clone()).collect(),
        min_one_minus_r2: outcomes
            .iter()
            .filter_map(|o| o.min_one_minus_r2)
            .min_by(f64::total_cmp),
    }
}

/// Average and mean squared error of the true model's posterior probability.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if !matches!(cfg.scheme, Scheme::Table1 | Scheme::Nested) {
        return Err(Error::Config(format!(
            "table1 runs need scheme table1 or nested, got {}",
            cfg.scheme.name()
        )));
    }
    run_probability(cfg)
}

/// Null-true and sparse-signal schemes.
pub fn run_scheme(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if !matches!(cfg.scheme, Scheme::Scheme1 | Scheme::Scheme2 | Scheme::Nested) {
        return Err(Error::Config(format!(
            "scheme runs need scheme1, scheme2 or nested, got {}",
            cfg.scheme.name()
        )));
    }
    run_probability(cfg)
}

/// `D_n(alpha) = mu' (I - P_n(alpha)) mu / (2 sigma^2)` for every model, by mask.
pub fn divergences(d: &Dataset, mu: &[f64], sigma: f64) -> Result<Vec<f64>> {
    let p = d.p();
    (0u128..1 << p)
        .map(|mask| Ok(residual_quadratic(mu, &ModelIndex::from_mask(mask), d)? / (2.0 * sigma * sigma)))
        .collect()
}

/// `min_alpha D_n(alpha)`, rejecting means that lie in the span of the regressors.
///
/// The minimum counts as zero when it is below `1e-10` times the divergence
/// of the null model.
pub fn model_false_minimum(dn: &[f64], mu: &[f64], sigma: f64) -> Result<f64> {
    let min_d = dn.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = mu.iter().sum::<f64>() / mu.len().max(1) as f64;
    let scale = mu.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (2.0 * sigma * sigma);
    if min_d > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        Ok(min_d)
    } else {
        Err(Error::ModelFalseDesign { min_d })
    }
}

/// Ratio `D_n(alpha_hat) / min_alpha D_n(alpha)` with `alpha_hat` the
/// posterior mode of each configured prior.
pub fn run_model_false(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.scheme != Scheme::ModelFalse {
        return Err(Error::Config(format!(
            "model-false runs need scheme model-false, got {}",
            cfg.scheme.name()
        )));
    }
    cfg.validate()?;
    let mp = cfg.model_prior.resolve()?;
    let mut report = ExperimentReport::new(cfg);
    let tracked = vec![(Target::Ratio, ModelIndex::null())];
    for dist in cfg.error_dists() {
        for &pp in &cfg.p_plus_1_list {
            let p = cfg.regressors(pp);
            if p > MODEL_FALSE_MAX_P {
                return Err(Error::SpaceTooLarge { p, max_p: MODEL_FALSE_MAX_P });
            }
            let truth = base_truth(cfg, p)?;
            for &n in &cfg.n_list {
                let priors = resolve_priors(cfg, n, p)?;
                let outcomes: Vec<ReplicateOutcome> = (0..cfg.replicates)
                    .into_par_iter()
                    .map(|rep| {
                        let seed = replicate_seed(cfg.base_seed, cfg.scheme, dist, p, n, rep);
                        let (d, spec) = draw_dataset(&truth, n, dist, cfg.calibration, seed)?;
                        let dn = divergences(&d, &spec.mu, spec.sigma)?;
                        let min_d = model_false_minimum(&dn, &spec.mu, spec.sigma)?;
                        let stats = StatsCache::new();
                        let mut values = Vec::with_capacity(priors.len());
                        let mut visited = Vec::with_capacity(priors.len());
                        for (spec_p, prior) in cfg.priors.iter().zip(&priors) {
                            let res = search_posterior(
                                &d,
                                prior,
                                &mp,
                                SearchMode::Enumerate,
                                cfg.chain_length,
                                cfg.burn_in,
                                chain_seed(seed, &spec_p.label),
                                &stats,
                            )?;
                            let ratio = dn[res.top.to_mask() as usize] / min_d;
                            values.push(vec![ratio]);
                            visited.push(vec![ratio == 1.0]);
                        }
                        Ok(ReplicateOutcome {
                            values,
                            visited,
                            min_one_minus_r2: stats.min_one_minus_r2(),
                        })
                    })
                    .collect::<Result<_>>()?;
                report.extend_cell(cfg, dist, n, pp, &tracked, &outcomes_view(&outcomes));
            }
        }
    }
    Ok(report)
}

/// Degrees-of-freedom choice of the proposed prior.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NuChoice {
    One,
    P,
}

impl NuChoice {
    pub fn name(self) -> &'static str {
        match self {
            NuChoice::One => "nu=1",
            NuChoice::P => "nu=p",
        }
    }

    pub fn variant(self) -> ProposedVariant {
        match self {
            NuChoice::One => ProposedVariant::I,
            NuChoice::P => ProposedVariant::II,
        }
    }

    pub fn nu(self, p: usize) -> f64 {
        match self {
            NuChoice::One => 1.0,
            NuChoice::P => p as f64,
        }
    }
}

/// Values of `1 - R^2` at which the Bayes factor limit is probed.
pub const INFO_GRID: [f64; 6] = [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12];
/// Largest change over the last grid step that still counts as a plateau.
pub const PLATEAU_TOL: f64 = 0.1;

/// Log Bayes factor against the null as the fit saturates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfoProfile {
    pub prior: String,
    pub n: usize,
    pub p_alpha: usize,
    pub one_minus_r2: Vec<f64>,
    pub log_bf: Vec<f64>,
    /// Change in log BF over the last grid step.
    pub last_step: f64,
    pub plateau: bool,
    /// Growth rate of log BF in `-ln(1 - R^2)` implied by the integrand's tail:
    /// `max(0, (n - 1 - p_alpha - nu) / 2)`, or zero for a fixed `g`.
    pub tail_slope: f64,
}

fn profile(prior_label: &str, n: usize, p_alpha: usize, prior: &GMixturePrior, tail_slope: f64) -> Result<InfoProfile> {
    let log_bf = INFO_GRID
        .iter()
        .map(|&c| Ok(log_bf_from_stats(n, p_alpha, c, prior, DEFAULT_TOL)?.log_value))
        .collect::<Result<Vec<f64>>>()?;
    let last_step = log_bf[log_bf.len() - 1] - log_bf[log_bf.len() - 2];
    Ok(InfoProfile {
        prior: prior_label.to_string(),
        n,
        p_alpha,
        one_minus_r2: INFO_GRID.to_vec(),
        log_bf,
        last_step,
        plateau: last_step.abs() < PLATEAU_TOL,
        tail_slope,
    })
}

/// Saturation profile of the proposed prior with `nu` chosen by `nu_choice`.
pub fn run_info_consistency(n: usize, p_alpha: usize, nu_choice: NuChoice) -> Result<InfoProfile> {
    if p_alpha < 1 || n <= p_alpha {
        return Err(Error::InvalidRegime(format!(
            "need 1 <= p(alpha) < n, got p(alpha) = {p_alpha}, n = {n}"
        )));
    }
    let prior = make_proposed(n, p_alpha, nu_choice.variant())?;
    let slope = ((n as f64 - 1.0 - p_alpha as f64 - nu_choice.nu(p_alpha)) / 2.0).max(0.0);
    profile(nu_choice.name(), n, p_alpha, &prior, slope)
}

/// Saturation profile of a fixed `g`.
pub fn run_info_fixed_g(n: usize, p_alpha: usize, g: f64) -> Result<InfoProfile> {
    let prior = GMixturePrior::fixed_g(g)?;
    profile(&format!("fixed-g={g}"), n, p_alpha, &prior, 0.0)
}

/// Sample sizes above which information consistency is claimed or implied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InfoThresholds {
    pub p_alpha: usize,
    /// Stated boundary for `nu = 1`: `n >= p + 1`.
    pub stated_nu_one: usize,
    /// Stated boundary for `nu = p`: `n >= 2p`.
    pub stated_nu_p: usize,
    /// Boundary from the integrand's tail exponent: `n >= p + nu + 1`, `nu = 1`.
    pub tail_nu_one: usize,
    /// Same for `nu = p`.
    pub tail_nu_p: usize,
}

impl InfoThresholds {
    pub fn new(p_alpha: usize) -> Self {
        InfoThresholds {
            p_alpha,
            stated_nu_one: p_alpha + 1,
            stated_nu_p: 2 * p_alpha,
            tail_nu_one: p_alpha + 2,
            tail_nu_p: 2 * p_alpha + 1,
        }
    }

    /// Sample sizes around both sets of boundaries.
    pub fn boundary_sizes(&self) -> Vec<usize> {
        let p = self.p_alpha;
        let mut v = vec![p + 1, p + 2, p + 5, p + 6, 2 * p, 2 * p + 1, 2 * p + 5];
        v.retain(|&n| n > p && n >= 3);
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Profiles for both `nu` choices and fixed `g = n^2` at the boundary sizes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfoReport {
    pub thresholds: Vec<InfoThresholds>,
    pub profiles: Vec<InfoProfile>,
}

pub fn run_info_check(p_list: &[usize]) -> Result<InfoReport> {
    let mut thresholds = Vec::new();
    let mut profiles = Vec::new();
    for &p in p_list {
        let th = InfoThresholds::new(p);
        for n in th.boundary_sizes() {
            profiles.push(run_info_consistency(n, p, NuChoice::One)?);
            profiles.push(run_info_consistency(n, p, NuChoice::P)?);
            profiles.push(run_info_fixed_g(n, p, (n * n) as f64)?);
        }
        thresholds.push(th);
    }
    Ok(InfoReport { thresholds, profiles })
}

/// Error of the closed-form approximation at one sample size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxRow {
    pub n: usize,
    pub p: usize,
    pub evaluations: usize,
    pub median_rel_err: f64,
    pub mean_rel_err: f64,
    pub max_rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxStudy {
    pub nu: NuChoice,
    pub b: f64,
    pub rows: Vec<ApproxRow>,
    /// Least-squares slope of `ln median` on `ln n`.
    pub exponent: f64,
    pub median_decreasing: bool,
}

/// Model-true normal data with `p = ceil(n^b)` regressors, `floor(p / 2)`
/// active with coefficients `+-1/sqrt(p(alpha_c))` and unit noise, so the
/// population `R^2` stays near 1/2 at every `n`.
pub fn approx_dataset(n: usize, p: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let active = (p / 2).max(1);
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let coef = 1.0 / (active as f64).sqrt();
    let y = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            e + (0..active)
                .map(|j| if j % 2 == 0 { coef } else { -coef } * cols[j][i])
                .sum::<f64>()
        })
        .collect();
    Dataset::new(y, cols)
}

/// Relative error `|m / m_tilde - 1|` over random non-null models.
pub fn run_approx_study(
    b: f64,
    n_list: &[usize],
    nu_choice: NuChoice,
    datasets: usize,
    models_per_dataset: usize,
    base_seed: u64,
) -> Result<ApproxStudy> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Config(format!("b must lie in (0, 1), got {b}")));
    }
    if n_list.len() < 2 || datasets == 0 || models_per_dataset == 0 {
        return Err(Error::Config(
            "need at least two sample sizes and one model per dataset".into(),
        ));
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let p = (n as f64).powf(b).ceil() as usize;
        if p >= n {
            return Err(Error::InvalidRegime(format!("ceil(n^b) = {p} must be below n = {n}")));
        }
        let nu = nu_choice.nu(p);
        let tau2 = (n * n) as f64;
        let prior = GMixturePrior::scaled_inv_chisq(nu, tau2)?;
        let errs: Vec<Vec<f64>> = (0..datasets)
            .into_par_iter()
            .map(|k| {
                let seed = derive(base_seed, &[stream::DATA, n as u64, k as u64]);
                let d = approx_dataset(n, p, seed)?;
                let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, &[stream::MODEL]));
                (0..models_per_dataset)
                    .map(|_| {
                        let mask = loop {
                            let m = rng.random::<u128>() & ((1u128 << p) - 1);
                            if m != 0 {
                                break m;
                            }
                        };
                        let alpha = ModelIndex::from_mask(mask);
                        let exact = log_marginal_quadrature(&d, &alpha, &prior, DEFAULT_TOL)?.log_m;
                        let approx = log_marginal_approx(&d, &alpha, nu, tau2)?.log_m;
                        Ok((exact - approx).exp_m1().abs())
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        let mut all: Vec<f64> = errs.into_iter().flatten().collect();
        all.sort_by(f64::total_cmp);
        rows.push(ApproxRow {
            n,
            p,
            evaluations: all.len(),
            median_rel_err: median_sorted(&all),
            mean_rel_err: all.iter().sum::<f64>() / all.len() as f64,
            max_rel_err: *all.last().expect("non-empty"),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_rel_err.ln()).collect();
    let exponent = ols_slope(&xs, &ys);
    let median_decreasing = rows.windows(2).all(|w| w[1].median_rel_err < w[0].median_rel_err);
    Ok(ApproxStudy {
        nu: nu_choice,
        b,
        rows,
        exponent,
        median_decreasing,
    })
}

pub(crate) fn median_sorted(v: &[f64]) -> f64 {
    let k = v.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Slope of the least-squares line through `(x, y)`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Labels of the table priors that are not scaled inverse chi-square.
pub fn competitor_labels(priors: &[PriorSpec]) -> Vec<&str> {
    priors.iter().filter(|s| !s.is_proposed()).map(|s| s.label.as_str()).collect()
}
