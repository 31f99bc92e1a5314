//! Mixing densities on the g-prior scale `g`, plus fixed-g baselines.
//!
//! All densities are evaluated in log space. Quadrature works on `t = ln g`,
//! so every family also exposes [`GMixturePrior::log_density_log_scale`],
//! the log density of `t` (which includes the Jacobian `g`).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_gamma, softplus};

/// Default `a` for the hyper-g and hyper-g/n priors.
pub const DEFAULT_HYPER_G_A: f64 = 3.0;
/// Default `B` of the generalized g-prior; the admissible range is `B < 1/2`.
pub const DEFAULT_GENERALIZED_G_B: f64 = 0.25;
/// Robust prior defaults `A = 1/2`, `B = 1`.
pub const DEFAULT_ROBUST_A: f64 = 0.5;
pub const DEFAULT_ROBUST_B: f64 = 1.0;
/// Constant for the constant-rho variant of the robust prior.
pub const DEFAULT_ROBUST_CONSTANT_RHO: f64 = 0.5;

/// How the robust prior chooses `rho_alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoRule {
    Constant(f64),
    /// `rho_alpha = 1 / (1 + p(alpha))`.
    InverseModelSize,
}

/// A mixing distribution on `g`.
///
/// `GeneralizedG` and `Robust` depend on the size of the model being
/// scored; marginal computations call [`GMixturePrior::for_model_size`]
/// before evaluating them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GMixturePrior {
    /// Scaled inverse chi-square with `nu` degrees of freedom and scale `tau2`.
    ScaledInvChiSq { nu: f64, tau2: f64 },
    BetaPrime { gamma0: f64, gamma1: f64 },
    /// Inverse gamma with shape 1/2 and scale n/2.
    ZellnerSiow { n: usize },
    HyperG { a: f64 },
    HyperGOverN { a: f64, n: usize },
    GeneralizedG { b_param: f64, n: usize, p_alpha: usize },
    /// Truncated scaled beta prime: `(g + B) / (rho (n + B)) - 1 ~ BetaPrime(1, A)`.
    Robust {
        a_param: f64,
        b_param: f64,
        rho_rule: RhoRule,
        n: usize,
        p_alpha: usize,
    },
    FixedG { g: f64 },
}

/// Location of the maximum of a density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Interior(f64),
    /// Maximum sits on the edge of the support (0 for J-shaped densities).
    Boundary(f64),
}

/// Proposed-prior variants: `nu = 1` (I) or `nu = p` (II), both with `tau2 = n^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProposedVariant {
    I,
    II,
}

/// Scaled inverse chi-square with `tau2 = n^2` and `nu` set by `variant`.
pub fn make_proposed(n: usize, p: usize, variant: ProposedVariant) -> Result<GMixturePrior> {
    if n < 3 || p < 1 || p >= n {
        return Err(Error::InvalidRegime(format!(
            "proposed prior needs n >= 3 and 1 <= p < n, got n = {n}, p = {p}"
        )));
    }
    let nu = match variant {
        ProposedVariant::I => 1.0,
        ProposedVariant::II => p as f64,
    };
    GMixturePrior::scaled_inv_chisq(nu, (n as f64).powi(2))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be positive, got {v}")))
    }
}

impl GMixturePrior {
    pub fn scaled_inv_chisq(nu: f64, tau2: f64) -> Result<Self> {
        let p = GMixturePrior::ScaledInvChiSq { nu, tau2 };
        p.validate()?;
        Ok(p)
    }

    pub fn beta_prime(gamma0: f64, gamma1: f64) -> Result<Self> {
        let p = GMixturePrior::BetaPrime { gamma0, gamma1 };
        p.validate()?;
        Ok(p)
    }

    pub fn zellner_siow(n: usize) -> Result<Self> {
        let p = GMixturePrior::ZellnerSiow { n };
        p.validate()?;
        Ok(p)
    }

    pub fn hyper_g(a: f64) -> Result<Self> {
        let p = GMixturePrior::HyperG { a };
        p.validate()?;
        Ok(p)
    }

    pub fn hyper_g_over_n(a: f64, n: usize) -> Result<Self> {
        let p = GMixturePrior::HyperGOverN { a, n };
        p.validate()?;
        Ok(p)
    }

    pub fn generalized_g(b_param: f64, n: usize) -> Result<Self> {
        let p = GMixturePrior::GeneralizedG {
            b_param,
            n,
            p_alpha: 0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn robust(a_param: f64, b_param: f64, rho_rule: RhoRule, n: usize) -> Result<Self> {
        let p = GMixturePrior::Robust {
            a_param,
            b_param,
            rho_rule,
            n,
            p_alpha: 0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn fixed_g(g: f64) -> Result<Self> {
        let p = GMixturePrior::FixedG { g };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GMixturePrior::ScaledInvChiSq { nu, tau2 } => {
                positive("nu", nu)?;
                positive("tau2", tau2)
            }
            GMixturePrior::BetaPrime { gamma0, gamma1 } => {
                positive("gamma0", gamma0)?;
                positive("gamma1", gamma1)
            }
            GMixturePrior::ZellnerSiow { n } => positive("n", n as f64),
            GMixturePrior::HyperG { a } => {
                if a > 2.0 && a.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidInput(format!("hyper-g needs a > 2, got {a}")))
                }
            }
            GMixturePrior::HyperGOverN { a, n } => {
                positive("n", n as f64)?;
                GMixturePrior::HyperG { a }.validate()
            }
            GMixturePrior::GeneralizedG {
                b_param,
                n,
                p_alpha,
            } => {
                if !(b_param < 0.5) || !b_param.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "generalized g needs B < 1/2, got {b_param}"
                    )));
                }
                if p_alpha + 1 >= n {
                    return Err(Error::InvalidRegime(format!(
                        "generalized g needs p(alpha) < n - 1, got p(alpha) = {p_alpha}, n = {n}"
                    )));
                }
                let (g0, g1) = self.generalized_g_params();
                positive("gamma0", g0)?;
                positive("gamma1", g1)
            }
            GMixturePrior::Robust {
                a_param,
                b_param,
                rho_rule,
                n,
                ..
            } => {
                positive("A", a_param)?;
                positive("B", b_param)?;
                positive("n", n as f64)?;
                if let RhoRule::Constant(rho) = rho_rule {
                    let lower = b_param / (b_param + n as f64);
                    if !(rho > lower) || !rho.is_finite() {
                        return Err(Error::InvalidInput(format!(
                            "robust prior needs rho > B/(B+n) = {lower}, got {rho}"
                        )));
                    }
                }
                Ok(())
            }
            GMixturePrior::FixedG { g } => positive("g", g),
        }
    }

    /// Copy of the prior with the model-size dependent hyperparameters set for `p_alpha`.
    pub fn for_model_size(&self, p_alpha: usize) -> GMixturePrior {
        let mut out = self.clone();
        match &mut out {
            GMixturePrior::GeneralizedG { p_alpha: pa, .. }
            | GMixturePrior::Robust { p_alpha: pa, .. } => *pa = p_alpha,
            _ => {}
        }
        out
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            GMixturePrior::ScaledInvChiSq { .. } => "scaled-inv-chisq",
            GMixturePrior::BetaPrime { .. } => "beta-prime",
            GMixturePrior::ZellnerSiow { .. } => "zellner-siow",
            GMixturePrior::HyperG { .. } => "hyper-g",
            GMixturePrior::HyperGOverN { .. } => "hyper-g-n",
            GMixturePrior::GeneralizedG { .. } => "generalized-g",
            GMixturePrior::Robust { .. } => "robust",
            GMixturePrior::FixedG { .. } => "fixed-g",
        }
    }

    pub fn is_point_mass(&self) -> bool {
        matches!(self, GMixturePrior::FixedG { .. })
    }

    fn generalized_g_params(&self) -> (f64, f64) {
        match *self {
            GMixturePrior::GeneralizedG {
                b_param,
                n,
                p_alpha,
            } => {
                let a = (n as f64 - p_alpha as f64 - 1.0) / 2.0 - b_param;
                (a + 1.0, b_param + 1.0)
            }
            _ => unreachable!(),
        }
    }

    /// `rho_alpha * (n + B)`, the scale of the robust prior's beta prime.
    fn robust_scale(&self) -> (f64, f64, f64) {
        match *self {
            GMixturePrior::Robust {
                a_param,
                b_param,
                rho_rule,
                n,
                p_alpha,
            } => {
                let rho = match rho_rule {
                    RhoRule::Constant(r) => r,
                    RhoRule::InverseModelSize => 1.0 / (1.0 + p_alpha as f64),
                };
                (a_param, b_param, rho * (n as f64 + b_param))
            }
            _ => unreachable!(),
        }
    }

    /// Lower end of the support: 0 for all families except the truncated robust prior.
    pub fn support_lower(&self) -> f64 {
        match self {
            GMixturePrior::Robust { .. } => {
                let (_, b, k) = self.robust_scale();
                (k - b).max(0.0)
            }
            _ => 0.0,
        }
    }

    /// Inverse-gamma `(shape, scale)` for the families that are inverse gamma.
    fn inverse_gamma(&self) -> Option<(f64, f64)> {
        match *self {
            GMixturePrior::ScaledInvChiSq { nu, tau2 } => Some((nu / 2.0, tau2 * nu / 2.0)),
            GMixturePrior::ZellnerSiow { n } => Some((0.5, n as f64 / 2.0)),
            _ => None,
        }
    }

    /// Beta prime `(gamma0, gamma1, scale)` for the families that are scaled beta prime.
    fn beta_prime_form(&self) -> Option<(f64, f64, f64)> {
        match *self {
            GMixturePrior::BetaPrime { gamma0, gamma1 } => Some((gamma0, gamma1, 1.0)),
            GMixturePrior::HyperG { a } => Some((1.0, a / 2.0 - 1.0, 1.0)),
            GMixturePrior::HyperGOverN { a, n } => Some((1.0, a / 2.0 - 1.0, n as f64)),
            GMixturePrior::GeneralizedG { .. } => {
                let (g0, g1) = self.generalized_g_params();
                Some((g0, g1, 1.0))
            }
            _ => None,
        }
    }

    /// Exact log density at `g > 0`; negative infinity outside the support.
    pub fn log_density(&self, g: f64) -> Result<f64> {
        if self.is_point_mass() {
            return Err(Error::Unsupported(
                "a point mass on g has no density".into(),
            ));
        }
        if !(g > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        if let Some((shape, scale)) = self.inverse_gamma() {
            return Ok(shape * scale.ln() - ln_gamma(shape) - scale / g - (shape + 1.0) * g.ln());
        }
        if let Some((g0, g1, s)) = self.beta_prime_form() {
            let z = g / s;
            return Ok(ln_gamma(g0 + g1) - ln_gamma(g0) - ln_gamma(g1) - s.ln()
                + (g0 - 1.0) * z.ln()
                - (g0 + g1) * z.ln_1p());
        }
        let (a, b, k) = self.robust_scale();
        if g <= k - b {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(a.ln() - k.ln() - (1.0 + a) * ((g + b) / k).ln())
    }

    /// Log density of `t = ln g`, i.e. `ln pi(e^t) + t`.
    pub fn log_density_log_scale(&self, t: f64) -> f64 {
        self.log_scale_kernel().eval(t)
    }

    /// The log-scale density with its normalizing constant evaluated once.
    pub fn log_scale_kernel(&self) -> LogScaleKernel {
        if let Some((shape, scale)) = self.inverse_gamma() {
            return LogScaleKernel::InverseGamma {
                log_norm: shape * scale.ln() - ln_gamma(shape),
                shape,
                scale,
            };
        }
        if let Some((g0, g1, s)) = self.beta_prime_form() {
            return LogScaleKernel::BetaPrime {
                log_norm: ln_gamma(g0 + g1) - ln_gamma(g0) - ln_gamma(g1),
                gamma0: g0,
                gamma1: g1,
                log_scale: s.ln(),
            };
        }
        match *self {
            GMixturePrior::Robust { .. } => {
                let (a, b, k) = self.robust_scale();
                LogScaleKernel::Robust {
                    log_norm: a.ln() - k.ln(),
                    a,
                    b,
                    k,
                }
            }
            _ => LogScaleKernel::PointMass,
        }
    }

    /// Argmax of the density in `g`. J-shaped densities report a boundary mode at 0;
    /// the robust prior is decreasing on its support and reports its truncation point.
    pub fn mode(&self) -> Mode {
        if let Some((shape, scale)) = self.inverse_gamma() {
            return Mode::Interior(scale / (shape + 1.0));
        }
        if let Some((g0, g1, s)) = self.beta_prime_form() {
            return if g0 > 1.0 {
                Mode::Interior(s * (g0 - 1.0) / (g1 + 1.0))
            } else {
                Mode::Boundary(0.0)
            };
        }
        match *self {
            GMixturePrior::Robust { .. } => Mode::Boundary(self.support_lower()),
            GMixturePrior::FixedG { g } => Mode::Interior(g),
            _ => unreachable!(),
        }
    }
}

/// `ln pi(e^t) + t` for a fixed prior, see [`GMixturePrior::log_scale_kernel`].
#[derive(Clone, Copy, Debug)]
pub enum LogScaleKernel {
    InverseGamma {
        log_norm: f64,
        shape: f64,
        scale: f64,
    },
    BetaPrime {
        log_norm: f64,
        gamma0: f64,
        gamma1: f64,
        log_scale: f64,
    },
    Robust {
        log_norm: f64,
        a: f64,
        b: f64,
        k: f64,
    },
    PointMass,
}

impl LogScaleKernel {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            LogScaleKernel::InverseGamma {
                log_norm,
                shape,
                scale,
            } => log_norm - scale * (-t).exp() - shape * t,
            LogScaleKernel::BetaPrime {
                log_norm,
                gamma0,
                gamma1,
                log_scale,
            } => {
                let u = t - log_scale;
                log_norm + gamma0 * u - (gamma0 + gamma1) * softplus(u)
            }
            LogScaleKernel::Robust { log_norm, a, b, k } => {
                let g = t.exp();
                if g <= k - b {
                    return f64::NEG_INFINITY;
                }
                log_norm - (1.0 + a) * ((g + b) / k).ln() + t
            }
            LogScaleKernel::PointMass => f64::NEG_INFINITY,
        }
    }
}

impl fmt::Display for GMixturePrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GMixturePrior::ScaledInvChiSq { nu, tau2 } => {
                write!(f, "scaled-inv-chisq(nu={nu}, tau2={tau2})")
            }
            GMixturePrior::BetaPrime { gamma0, gamma1 } => {
                write!(f, "beta-prime(gamma0={gamma0}, gamma1={gamma1})")
            }
            GMixturePrior::ZellnerSiow { n } => write!(f, "zellner-siow(n={n})"),
            GMixturePrior::HyperG { a } => write!(f, "hyper-g(a={a})"),
            GMixturePrior::HyperGOverN { a, n } => write!(f, "hyper-g/n(a={a}, n={n})"),
            GMixturePrior::GeneralizedG { b_param, n, .. } => {
                write!(f, "generalized-g(B={b_param}, n={n})")
            }
            GMixturePrior::Robust {
                a_param,
                b_param,
                rho_rule,
                n,
                ..
            } => {
                let rho = match rho_rule {
                    RhoRule::Constant(r) => format!("{r}"),
                    RhoRule::InverseModelSize => "1/(1+p_alpha)".to_string(),
                };
                write!(f, "robust(A={a_param}, B={b_param}, rho={rho}, n={n})")
            }
            GMixturePrior::FixedG { g } => write!(f, "fixed-g(g={g})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn scaled_inv_chisq_direct_substitution() {
        let p = GMixturePrior::scaled_inv_chisq(1.0, 4.0).unwrap();
        let expected = (2f64.sqrt() / PI.sqrt()).ln() - 1.0 - 1.5 * 2f64.ln();
        assert!((p.log_density(2.0).unwrap() - expected).abs() < 1e-13);
    }

    #[test]
    fn beta_prime_direct_substitution() {
        let p = GMixturePrior::beta_prime(1.0, 1.0).unwrap();
        assert!((p.log_density(1.0).unwrap() + 2.0 * 2f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn robust_truncation() {
        let p = GMixturePrior::robust(0.5, 1.0, RhoRule::InverseModelSize, 20)
            .unwrap()
            .for_model_size(3);
        let g0 = 21.0 / 4.0 - 1.0;
        assert!((p.support_lower() - g0).abs() < 1e-12);
        assert_eq!(p.log_density(g0 - 0.1).unwrap(), f64::NEG_INFINITY);
        assert_eq!(p.log_density(g0).unwrap(), f64::NEG_INFINITY);
        assert!(p.log_density(g0 + 0.1).unwrap().is_finite());
        assert!(p.log_density_log_scale((g0 - 0.1).ln()).is_infinite());
    }

    #[test]
    fn fixed_g_has_no_density() {
        let p = GMixturePrior::fixed_g(10.0).unwrap();
        assert!(matches!(p.log_density(1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn modes() {
        let n = 100.0f64;
        let p = GMixturePrior::scaled_inv_chisq(1.0, n * n).unwrap();
        assert_eq!(p.mode(), Mode::Interior(10000.0 / 3.0));
        let p = GMixturePrior::scaled_inv_chisq(2.0, 100.0).unwrap();
        assert_eq!(p.mode(), Mode::Interior(50.0));
        assert_eq!(GMixturePrior::hyper_g(3.0).unwrap().mode(), Mode::Boundary(0.0));
        assert_eq!(
            GMixturePrior::hyper_g_over_n(3.0, 50).unwrap().mode(),
            Mode::Boundary(0.0)
        );
    }

    #[test]
    fn proposed_constructor() {
        assert_eq!(
            make_proposed(50, 29, ProposedVariant::I).unwrap(),
            GMixturePrior::ScaledInvChiSq { nu: 1.0, tau2: 2500.0 }
        );
        assert_eq!(
            make_proposed(150, 49, ProposedVariant::II).unwrap(),
            GMixturePrior::ScaledInvChiSq { nu: 49.0, tau2: 22500.0 }
        );
        assert!(matches!(
            make_proposed(10, 10, ProposedVariant::I),
            Err(Error::InvalidRegime(_))
        ));
    }

    #[test]
    fn hyperparameter_domains() {
        assert!(GMixturePrior::hyper_g(2.0).is_err());
        assert!(GMixturePrior::generalized_g(0.5, 50).is_err());
        assert!(GMixturePrior::robust(0.5, 1.0, RhoRule::Constant(1.0 / 51.0), 50).is_err());
        assert!(GMixturePrior::robust(0.5, 1.0, RhoRule::Constant(0.5), 50).is_ok());
        assert!(GMixturePrior::scaled_inv_chisq(0.0, 1.0).is_err());
    }

    #[test]
    fn log_scale_density_agrees_with_direct_density() {
        let priors = [
            GMixturePrior::scaled_inv_chisq(3.0, 900.0).unwrap(),
            GMixturePrior::zellner_siow(40).unwrap(),
            GMixturePrior::hyper_g(3.0).unwrap(),
            GMixturePrior::hyper_g_over_n(3.5, 40).unwrap(),
            GMixturePrior::generalized_g(0.25, 40).unwrap().for_model_size(4),
            GMixturePrior::robust(0.5, 1.0, RhoRule::InverseModelSize, 40)
                .unwrap()
                .for_model_size(4),
            GMixturePrior::beta_prime(2.0, 3.0).unwrap(),
        ];
        for prior in &priors {
            for &g in &[0.01, 0.7, 9.0, 55.0, 1e4] {
                let direct = prior.log_density(g).unwrap();
                let via_t = prior.log_density_log_scale(g.ln()) - g.ln();
                if direct.is_finite() {
                    assert!(
                        (direct - via_t).abs() < 1e-10 * direct.abs().max(1.0),
                        "{prior} at g={g}: {direct} vs {via_t}"
                    );
                } else {
                    assert!(via_t.is_infinite());
                }
            }
        }
    }
}
