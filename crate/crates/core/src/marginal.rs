//! Log marginal likelihoods, Bayes factors against the null model, and
//! posterior model probabilities.
//!
//! With `beta_0`, `beta_alpha` and `sigma^2` integrated out, the marginal of
//! model `alpha` is
//!
//! ```text
//! m_alpha(y) = C(n, S_y^2) * ∫ (1+g)^{(n-1-p_alpha)/2} [1 + g(1-R^2_alpha)]^{-(n-1)/2} pi(g) dg
//! C(n, S_y^2) = Gamma((n-1)/2) pi^{-(n-1)/2} n^{-1/2} (n S_y^2)^{-(n-1)/2}
//! ```
//!
//! The integral is the Bayes factor against the null model. It is evaluated
//! on `t = ln g` (the logit of `u = g/(1+g)`) with [`crate::quadrature`].

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::GMixturePrior;
use crate::quadrature::{integrate_exp, integrate_exp_adaptive, LogIntegral};
use crate::regression::{fit_stats, Dataset, ModelIndex, RegressionStats};
use crate::special::{ln_gamma, softplus};

/// Default absolute tolerance on the log scale.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Fits with `1 - R^2` below this are reported as saturated.
pub const SATURATION_FLOOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Quadrature,
    Approximation,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarginalEvaluation {
    pub log_m: f64,
    pub method: Method,
    pub r2: f64,
    pub p_alpha: usize,
    /// Estimated log-scale error; zero for closed forms.
    pub quad_abs_err: f64,
}

/// Prior probabilities over the model space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelPrior {
    #[default]
    Uniform,
    /// Each regressor enters independently with probability `q`.
    Bernoulli { q: f64 },
}

impl ModelPrior {
    pub fn bernoulli(q: f64) -> Result<Self> {
        if q > 0.0 && q < 1.0 {
            Ok(ModelPrior::Bernoulli { q })
        } else {
            Err(Error::InvalidInput(format!(
                "bernoulli inclusion probability must lie in (0,1), got {q}"
            )))
        }
    }

    /// `ln p(M_alpha)` for a model of size `p_alpha` among `p` regressors.
    pub fn log_mass(&self, p_alpha: usize, p: usize) -> f64 {
        match *self {
            ModelPrior::Uniform => -(p as f64) * std::f64::consts::LN_2,
            ModelPrior::Bernoulli { q } => {
                p_alpha as f64 * q.ln() + (p - p_alpha) as f64 * (-q).ln_1p()
            }
        }
    }
}

/// `ln C(n, S_y^2)`, the factor shared by every model's marginal.
pub fn log_prefactor(n: usize, s_y2: f64) -> f64 {
    let h = (n as f64 - 1.0) / 2.0;
    ln_gamma(h) - h * PI.ln() - 0.5 * (n as f64).ln() - h * (n as f64 * s_y2).ln()
}

fn check_tol(tol: f64) -> Result<()> {
    if (1e-12..=1e-6).contains(&tol) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "quadrature tolerance must lie in [1e-12, 1e-6], got {tol:e}"
        )))
    }
}

/// Closed-form marginal of the intercept-only model.
pub fn log_marginal_null(d: &Dataset) -> Result<MarginalEvaluation> {
    if d.is_response_degenerate() {
        return Err(Error::DegenerateResponse);
    }
    Ok(MarginalEvaluation {
        log_m: log_prefactor(d.n(), d.s_y2()),
        method: Method::ClosedForm,
        r2: 0.0,
        p_alpha: 0,
        quad_abs_err: 0.0,
    })
}

/// `ln` of the g-integral, i.e. the log Bayes factor of a model against the null,
/// from sufficient statistics.
///
/// Fixed-g priors are evaluated in closed form; all mixtures go through quadrature.
pub fn log_bf_from_stats(
    n: usize,
    p_alpha: usize,
    one_minus_r2: f64,
    prior: &GMixturePrior,
    tol: f64,
) -> Result<LogIntegral> {
    bf_integral(n, p_alpha, one_minus_r2, prior, tol, false)
}

fn bf_integral(
    n: usize,
    p_alpha: usize,
    one_minus_r2: f64,
    prior: &GMixturePrior,
    tol: f64,
    adaptive_only: bool,
) -> Result<LogIntegral> {
    if p_alpha + 1 > n {
        return Err(Error::InvalidInput(format!(
            "model size {p_alpha} too large for n = {n}"
        )));
    }
    if p_alpha > 0 && p_alpha + 1 == n {
        // A full-rank model with n - 1 regressors interpolates y, so 1 - R^2 is
        // exactly 0 and the integrand reduces to the prior density.
        return Ok(LogIntegral {
            log_value: 0.0,
            log_abs_err: 0.0,
            evaluations: 0,
        });
    }
    if !(one_minus_r2 >= SATURATION_FLOOR) {
        return Err(Error::SaturatedFit {
            p_alpha,
            one_minus_r2,
        });
    }
    let a = (n as f64 - 1.0 - p_alpha as f64) / 2.0;
    let b = (n as f64 - 1.0) / 2.0;
    let log_c = one_minus_r2.min(1.0).ln();
    if let GMixturePrior::FixedG { g } = *prior {
        prior.validate()?;
        return Ok(LogIntegral {
            log_value: a * g.ln_1p() - b * (g * one_minus_r2).ln_1p(),
            log_abs_err: 0.0,
            evaluations: 0,
        });
    }
    let prior = prior.for_model_size(p_alpha);
    prior.validate()?;
    check_tol(tol)?;
    let lower = match prior.support_lower() {
        g0 if g0 > 0.0 => Some(g0.ln()),
        _ => None,
    };
    // Peak of the likelihood factor alone, as a starting point for the mode search.
    let ghat = if p_alpha > 0 {
        let c = one_minus_r2.min(1.0);
        ((2.0 * a - 2.0 * b * c) / (p_alpha as f64 * c)).max(1.0)
    } else {
        1.0
    };
    let kernel = prior.log_scale_kernel();
    let h = |t: f64| a * softplus(t) - b * softplus(t + log_c) + kernel.eval(t);
    if adaptive_only {
        integrate_exp_adaptive(h, lower, ghat.ln(), tol)
    } else {
        integrate_exp(h, lower, ghat.ln(), tol)
    }
}

fn from_stats(
    n: usize,
    stats: &RegressionStats,
    prior: &GMixturePrior,
    tol: f64,
) -> Result<MarginalEvaluation> {
    let pre = log_prefactor(n, stats.s_y2);
    if stats.p_alpha == 0 {
        return Ok(MarginalEvaluation {
            log_m: pre,
            method: Method::ClosedForm,
            r2: 0.0,
            p_alpha: 0,
            quad_abs_err: 0.0,
        });
    }
    let bf = log_bf_from_stats(n, stats.p_alpha, 1.0 - stats.r2, prior, tol)?;
    Ok(MarginalEvaluation {
        log_m: pre + bf.log_value,
        method: if prior.is_point_mass() {
            Method::ClosedForm
        } else {
            Method::Quadrature
        },
        r2: stats.r2,
        p_alpha: stats.p_alpha,
        quad_abs_err: bf.log_abs_err,
    })
}

/// Marginal of a non-null model under a continuous mixture, by quadrature.
pub fn log_marginal_quadrature(
    d: &Dataset,
    alpha: &ModelIndex,
    prior: &GMixturePrior,
    tol: f64,
) -> Result<MarginalEvaluation> {
    if alpha.is_null() {
        return Err(Error::InvalidInput(
            "the null model has a closed-form marginal; use log_marginal_null".into(),
        ));
    }
    if prior.is_point_mass() {
        return Err(Error::Unsupported(
            "fixed g has a closed-form marginal; use log_marginal_fixed_g".into(),
        ));
    }
    check_tol(tol)?;
    let stats = fit_stats(d, alpha)?;
    from_stats(d.n(), &stats, prior, tol)
}

/// Closed-form marginal under a fixed `g`.
pub fn log_marginal_fixed_g(d: &Dataset, alpha: &ModelIndex, g: f64) -> Result<MarginalEvaluation> {
    let prior = GMixturePrior::fixed_g(g)?;
    let stats = fit_stats(d, alpha)?;
    from_stats(d.n(), &stats, &prior, DEFAULT_TOL)
}

/// Marginal of any model under any prior, choosing the evaluation route.
pub fn log_marginal(
    d: &Dataset,
    alpha: &ModelIndex,
    prior: &GMixturePrior,
    tol: f64,
) -> Result<MarginalEvaluation> {
    let stats = fit_stats(d, alpha)?;
    from_stats(d.n(), &stats, prior, tol)
}

/// As [`log_marginal`], reusing already computed regression statistics.
pub fn log_marginal_with_stats(
    n: usize,
    stats: &RegressionStats,
    prior: &GMixturePrior,
    tol: f64,
) -> Result<MarginalEvaluation> {
    from_stats(n, stats, prior, tol)
}

/// Closed-form approximation to the marginal under the scaled inverse
/// chi-square prior with `tau2 = n^2`.
///
/// Uses the same prefactor `C(n, S_y^2)` as the exact marginal, so the
/// ratio to the quadrature value depends on the g-integral only.
pub fn log_marginal_approx(
    d: &Dataset,
    alpha: &ModelIndex,
    nu: f64,
    tau2: f64,
) -> Result<MarginalEvaluation> {
    GMixturePrior::scaled_inv_chisq(nu, tau2)?;
    let n = d.n() as f64;
    if (tau2 - n * n).abs() > 1e-9 * n * n {
        return Err(Error::Unsupported(format!(
            "the closed-form approximation requires tau2 = n^2 = {}, got {tau2}",
            n * n
        )));
    }
    if alpha.is_null() {
        return log_marginal_null(d);
    }
    let stats = fit_stats(d, alpha)?;
    let c = 1.0 - stats.r2;
    if !(c >= SATURATION_FLOOR) {
        return Err(Error::SaturatedFit {
            p_alpha: stats.p_alpha,
            one_minus_r2: c,
        });
    }
    let pa = stats.p_alpha as f64;
    let log_m = log_prefactor(d.n(), stats.s_y2) - (n - 1.0) / 2.0 * c.ln()
        + ln_gamma((nu + pa) / 2.0)
        - ln_gamma(nu / 2.0)
        - pa / 2.0 * (n * n * nu / 2.0).ln();
    Ok(MarginalEvaluation {
        log_m,
        method: Method::Approximation,
        r2: stats.r2,
        p_alpha: stats.p_alpha,
        quad_abs_err: 0.0,
    })
}

/// `ln m_alpha(y) - ln m_N(y)`; the `S_y^2` prefactors cancel.
pub fn log_bayes_factor_vs_null(
    d: &Dataset,
    alpha: &ModelIndex,
    prior: &GMixturePrior,
) -> Result<f64> {
    if alpha.is_null() {
        return Err(Error::InvalidInput(
            "Bayes factor of the null model against itself is trivially 0".into(),
        ));
    }
    let stats = fit_stats(d, alpha)?;
    Ok(log_bf_from_stats(d.n(), stats.p_alpha, 1.0 - stats.r2, prior, DEFAULT_TOL)?.log_value)
}

/// Posterior probabilities normalized over the supplied models.
pub fn posterior_probs(
    evals: &[(ModelIndex, MarginalEvaluation)],
    mp: &ModelPrior,
    p: usize,
) -> Result<BTreeMap<ModelIndex, f64>> {
    if evals.is_empty() {
        return Err(Error::InvalidInput("no models supplied".into()));
    }
    let mut seen = HashSet::with_capacity(evals.len());
    for (m, _) in evals {
        if !seen.insert(m) {
            return Err(Error::InvalidInput(format!("model {m} supplied twice")));
        }
    }
    let logs: Vec<f64> = evals
        .iter()
        .map(|(m, e)| e.log_m + mp.log_mass(m.size(), p))
        .collect();
    let probs = normalize_log_weights(&logs)?;
    Ok(evals
        .iter()
        .zip(probs)
        .map(|((m, _), w)| (m.clone(), w))
        .collect())
}

/// Turns unnormalized log weights into probabilities, shifting by the maximum first.
pub fn normalize_log_weights(logs: &[f64]) -> Result<Vec<f64>> {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::InvalidInput(format!(
            "cannot normalize log weights with maximum {max}"
        )));
    }
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::RhoRule;

    fn sample_data() -> Dataset {
        // Small deterministic dataset with a clear signal on x1.
        let n = 30;
        let x1: Vec<f64> = (0..n).map(|i| ((i * 7919) % 31) as f64 / 10.0).collect();
        let x2: Vec<f64> = (0..n).map(|i| ((i * 104_729) % 17) as f64 / 5.0).collect();
        let x3: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.8 * x1[i] + 0.3 * ((i * 13) % 7) as f64 / 7.0)
            .collect();
        Dataset::new(y, vec![x1, x2, x3]).unwrap()
    }

    #[test]
    fn null_marginal_substitution() {
        // n = 5, S_y^2 = 1: y has ||y - ybar||^2 = 5.
        let v = [2.0, -1.0, -1.0, 0.5, -0.5];
        let s: f64 = v.iter().map(|a| a * a).sum();
        let y: Vec<f64> = v.iter().map(|a| a * (5.0 / s).sqrt()).collect();
        let d = Dataset::new(y, vec![vec![1.0, 3.0, 2.0, 5.0, 4.0]]).unwrap();
        assert!((d.s_y2() - 1.0).abs() < 1e-14);
        let e = log_marginal_null(&d).unwrap();
        let expected = ln_gamma(2.0) - 2.0 * PI.ln() - 0.5 * 5f64.ln() - 2.0 * 5f64.ln();
        assert!((e.log_m - expected).abs() < 1e-12);
        assert_eq!(e.method, Method::ClosedForm);
    }

    #[test]
    fn null_reduction_through_quadrature() {
        // With R^2 = 0 and p(alpha) = 0 the integrand collapses onto pi(g).
        let priors = [
            GMixturePrior::scaled_inv_chisq(1.0, 900.0).unwrap(),
            GMixturePrior::zellner_siow(30).unwrap(),
            GMixturePrior::hyper_g_over_n(3.0, 30).unwrap(),
            GMixturePrior::generalized_g(0.25, 30).unwrap(),
            GMixturePrior::robust(0.5, 1.0, RhoRule::InverseModelSize, 30).unwrap(),
        ];
        for prior in &priors {
            let r = log_bf_from_stats(30, 0, 1.0, prior, 1e-12).unwrap();
            assert!(r.log_value.abs() < 1e-10, "{prior}: {}", r.log_value);
        }
    }

    #[test]
    fn quadrature_routes_agree() {
        for n in [30usize, 100, 400] {
            let priors = [
                GMixturePrior::scaled_inv_chisq(1.0, (n * n) as f64).unwrap(),
                GMixturePrior::scaled_inv_chisq(12.0, (n * n) as f64).unwrap(),
                GMixturePrior::zellner_siow(n).unwrap(),
                GMixturePrior::hyper_g(3.0).unwrap(),
                GMixturePrior::hyper_g_over_n(3.0, n).unwrap(),
                GMixturePrior::generalized_g(0.25, n).unwrap(),
                GMixturePrior::robust(0.5, 1.0, RhoRule::InverseModelSize, n).unwrap(),
                GMixturePrior::robust(0.5, 1.0, RhoRule::Constant(0.5), n).unwrap(),
            ];
            for prior in &priors {
                for pa in [1usize, 5, 20] {
                    for c in [0.999, 0.7, 0.2, 1e-3] {
                        let fast = bf_integral(n, pa, c, prior, 1e-11, false).unwrap();
                        let slow = bf_integral(n, pa, c, prior, 1e-11, true).unwrap();
                        assert!(
                            (fast.log_value - slow.log_value).abs() < 1e-9,
                            "{prior} n={n} pa={pa} c={c}: {} vs {}",
                            fast.log_value,
                            slow.log_value
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn quadrature_rejects_fixed_g_and_null() {
        let d = sample_data();
        let fixed = GMixturePrior::fixed_g(100.0).unwrap();
        assert!(log_marginal_quadrature(&d, &ModelIndex::prefix(1), &fixed, 1e-10).is_err());
        let p = GMixturePrior::hyper_g(3.0).unwrap();
        assert!(log_marginal_quadrature(&d, &ModelIndex::null(), &p, 1e-10).is_err());
        assert!(log_marginal_quadrature(&d, &ModelIndex::prefix(1), &p, 1e-3).is_err());
    }

    #[test]
    fn fixed_g_closed_form() {
        let d = sample_data();
        let alpha = ModelIndex::new(vec![1, 3]).unwrap();
        let s = fit_stats(&d, &alpha).unwrap();
        let g: f64 = 50.0;
        let n = d.n() as f64;
        let expected = log_prefactor(d.n(), d.s_y2()) + (n - 1.0 - 2.0) / 2.0 * (1.0 + g).ln()
            - (n - 1.0) / 2.0 * (1.0 + g * (1.0 - s.r2)).ln();
        let e = log_marginal_fixed_g(&d, &alpha, g).unwrap();
        assert!((e.log_m - expected).abs() < 1e-10);
        assert_eq!(e.method, Method::ClosedForm);
    }

    #[test]
    fn approx_requires_tau_equal_n() {
        let d = sample_data();
        let alpha = ModelIndex::prefix(1);
        assert!(matches!(
            log_marginal_approx(&d, &alpha, 1.0, 100.0),
            Err(Error::Unsupported(_))
        ));
        let null = log_marginal_approx(&d, &ModelIndex::null(), 1.0, 900.0).unwrap();
        assert_eq!(null, log_marginal_null(&d).unwrap());
    }

    #[test]
    fn bayes_factor_is_marginal_difference() {
        let d = sample_data();
        let prior = GMixturePrior::scaled_inv_chisq(2.0, 900.0).unwrap();
        let alpha = ModelIndex::new(vec![1, 2]).unwrap();
        let bf = log_bayes_factor_vs_null(&d, &alpha, &prior).unwrap();
        let m = log_marginal(&d, &alpha, &prior, DEFAULT_TOL).unwrap().log_m;
        let m0 = log_marginal_null(&d).unwrap().log_m;
        assert!((bf - (m - m0)).abs() < 1e-10);
    }

    #[test]
    fn zero_fit_gives_nonpositive_bayes_factor() {
        let prior = GMixturePrior::hyper_g(3.0).unwrap();
        for pa in 1..5 {
            let r = log_bf_from_stats(40, pa, 1.0, &prior, 1e-10).unwrap();
            assert!(r.log_value <= 0.0);
        }
    }

    #[test]
    fn saturation_is_signalled() {
        let prior = GMixturePrior::scaled_inv_chisq(1.0, 400.0).unwrap();
        assert!(matches!(
            log_bf_from_stats(20, 2, 1e-15, &prior, 1e-10),
            Err(Error::SaturatedFit { .. })
        ));
    }

    #[test]
    fn posterior_probabilities() {
        let ev = |log_m: f64, p_alpha: usize| MarginalEvaluation {
            log_m,
            method: Method::ClosedForm,
            r2: 0.0,
            p_alpha,
            quad_abs_err: 0.0,
        };
        let single = posterior_probs(&[(ModelIndex::null(), ev(-3.0, 0))], &ModelPrior::Uniform, 2)
            .unwrap();
        assert_eq!(single[&ModelIndex::null()], 1.0);

        let a = ModelIndex::prefix(1);
        let b = ModelIndex::new(vec![2]).unwrap();
        let two = posterior_probs(
            &[(a.clone(), ev(-700.0, 1)), (b.clone(), ev(-700.0, 1))],
            &ModelPrior::Uniform,
            2,
        )
        .unwrap();
        assert!((two[&a] - 0.5).abs() < 1e-14 && (two[&b] - 0.5).abs() < 1e-14, "{two:?}");

        assert!(posterior_probs(&[], &ModelPrior::Uniform, 2).is_err());
        assert!(posterior_probs(
            &[(a.clone(), ev(0.0, 1)), (a.clone(), ev(0.0, 1))],
            &ModelPrior::Uniform,
            2
        )
        .is_err());
    }

    #[test]
    fn bernoulli_mass() {
        let mp = ModelPrior::bernoulli(0.3).unwrap();
        assert!((mp.log_mass(2, 5) - (0.09f64 * 0.343).ln()).abs() < 1e-14);
        assert!(ModelPrior::bernoulli(1.0).is_err());
    }
}
