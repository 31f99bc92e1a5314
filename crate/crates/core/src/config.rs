//! Declarative experiment configuration, read from TOML.
//!
//! Prior hyperparameters may be numbers or expressions in `n` and `p`
//! (`nu = "p"`, `tau2 = "n^2"`), resolved for each `(n, p)` cell.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lab::{Calibration, ErrorDist, MuBuilder, Scheme};
use crate::marginal::ModelPrior;
use crate::prior::{
    GMixturePrior, RhoRule, DEFAULT_GENERALIZED_G_B, DEFAULT_HYPER_G_A, DEFAULT_ROBUST_A,
    DEFAULT_ROBUST_B,
};
use crate::search::{DEFAULT_BURN_IN, DEFAULT_CHAIN_LENGTH};
use crate::symbolic::Expr;

/// Default number of replicates per cell.
pub const DEFAULT_REPLICATES: usize = 100;
pub const DEFAULT_BASE_SEED: u64 = 20_240_601;

/// One or several error laws; TOML accepts `"normal"` or `["normal", "t3"]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(ErrorDist),
    Many(Vec<ErrorDist>),
}

impl OneOrMany {
    pub fn to_vec(&self) -> Vec<ErrorDist> {
        match self {
            OneOrMany::One(d) => vec![*d],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// How posterior probabilities are computed in scheme runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Enumerate when `p <= 20`, Gibbs otherwise.
    #[default]
    Auto,
    Enumerate,
    Nested,
    Gibbs,
}

impl SearchMode {
    pub fn name(self) -> &'static str {
        match self {
            SearchMode::Auto => "auto",
            SearchMode::Enumerate => "enumerate",
            SearchMode::Nested => "nested",
            SearchMode::Gibbs => "gibbs",
        }
    }
}

/// Model prior as written in a config file.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelPriorSpec {
    #[default]
    Uniform,
    Bernoulli { q: f64 },
}

impl ModelPriorSpec {
    pub fn resolve(self) -> Result<ModelPrior> {
        match self {
            ModelPriorSpec::Uniform => Ok(ModelPrior::Uniform),
            ModelPriorSpec::Bernoulli { q } => ModelPrior::bernoulli(q),
        }
    }
}

/// A named prior with symbolic hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub label: String,
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Expr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau2: Option<Expr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<Expr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<Expr>,
    /// `a` of hyper-g, `A` of the robust prior.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Expr>,
    /// `B` of the generalized g and robust priors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Expr>,
    /// Robust `rho`: `"inverse-model-size"` or an expression.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Expr>,
}

pub const FAMILIES: [&str; 8] = [
    "scaled-inv-chisq",
    "beta-prime",
    "zellner-siow",
    "hyper-g",
    "hyper-g-n",
    "generalized-g",
    "robust",
    "fixed-g",
];

impl PriorSpec {
    fn bare(label: &str, family: &str) -> Self {
        PriorSpec {
            label: label.into(),
            family: family.into(),
            nu: None,
            tau2: None,
            gamma0: None,
            gamma1: None,
            a: None,
            b: None,
            rho: None,
            g: None,
        }
    }

    /// Scaled inverse chi-square with `nu = 1` and `tau2 = n^2`.
    pub fn proposed_i() -> Self {
        PriorSpec {
            nu: Some(Expr::constant(1.0)),
            tau2: Some(Expr::parse("n^2").expect("valid")),
            ..Self::bare("proposed-I", "scaled-inv-chisq")
        }
    }

    /// Scaled inverse chi-square with `nu = p` and `tau2 = n^2`.
    pub fn proposed_ii() -> Self {
        PriorSpec {
            nu: Some(Expr::parse("p").expect("valid")),
            tau2: Some(Expr::parse("n^2").expect("valid")),
            ..Self::bare("proposed-II", "scaled-inv-chisq")
        }
    }

    pub fn zellner_siow() -> Self {
        Self::bare("zellner-siow", "zellner-siow")
    }

    pub fn hyper_g() -> Self {
        Self::bare("hyper-g", "hyper-g")
    }

    pub fn hyper_g_n() -> Self {
        Self::bare("hyper-g-n", "hyper-g-n")
    }

    pub fn generalized_g() -> Self {
        Self::bare("generalized-g", "generalized-g")
    }

    pub fn robust() -> Self {
        Self::bare("robust", "robust")
    }

    /// Fixed `g = n^2`.
    pub fn fixed_g_n2() -> Self {
        PriorSpec {
            g: Some(Expr::parse("n^2").expect("valid")),
            ..Self::bare("fixed-g-n2", "fixed-g")
        }
    }

    /// The six priors compared in the simulation table, competitors first.
    pub fn table1_set() -> Vec<PriorSpec> {
        vec![
            Self::zellner_siow(),
            Self::hyper_g_n(),
            Self::generalized_g(),
            Self::robust(),
            Self::proposed_i(),
            Self::proposed_ii(),
        ]
    }

    /// True for the scaled inverse chi-square family.
    pub fn is_proposed(&self) -> bool {
        self.family == "scaled-inv-chisq"
    }

    fn value(&self, name: &str, e: &Option<Expr>, default: Option<f64>, n: usize, p: usize) -> Result<f64> {
        match (e, default) {
            (Some(e), _) => e.eval(n, p),
            (None, Some(v)) => Ok(v),
            (None, None) => Err(Error::Config(format!(
                "prior '{}' ({}) needs parameter '{name}'",
                self.label, self.family
            ))),
        }
    }

    fn unused(&self, allowed: &[&str]) -> Result<()> {
        let present = [
            ("nu", self.nu.is_some()),
            ("tau2", self.tau2.is_some()),
            ("gamma0", self.gamma0.is_some()),
            ("gamma1", self.gamma1.is_some()),
            ("a", self.a.is_some()),
            ("b", self.b.is_some()),
            ("rho", self.rho.is_some()),
            ("g", self.g.is_some()),
        ];
        let extra: Vec<&str> = present
            .iter()
            .filter(|(k, set)| *set && !allowed.contains(k))
            .map(|(k, _)| *k)
            .collect();
        if extra.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "prior '{}' ({}) does not take parameter(s): {}",
                self.label,
                self.family,
                extra.join(", ")
            )))
        }
    }

    /// Checks the family name and parameter set without resolving values.
    pub fn check(&self) -> Result<()> {
        let allowed: &[&str] = match self.family.as_str() {
            "scaled-inv-chisq" => &["nu", "tau2"],
            "beta-prime" => &["gamma0", "gamma1"],
            "zellner-siow" => &[],
            "hyper-g" | "hyper-g-n" => &["a"],
            "generalized-g" => &["b"],
            "robust" => &["a", "b", "rho"],
            "fixed-g" => &["g"],
            other => {
                return Err(Error::Config(format!(
                    "prior '{}': unknown family '{other}' (expected one of {})",
                    self.label,
                    FAMILIES.join(", ")
                )))
            }
        };
        self.unused(allowed)
    }

    /// Concrete prior for `n` observations and `p` candidate regressors.
    pub fn resolve(&self, n: usize, p: usize) -> Result<GMixturePrior> {
        self.check()?;
        let v = |name, e: &Option<Expr>, d| self.value(name, e, d, n, p);
        let prior = match self.family.as_str() {
            "scaled-inv-chisq" => GMixturePrior::scaled_inv_chisq(v("nu", &self.nu, None)?, v("tau2", &self.tau2, None)?),
            "beta-prime" => GMixturePrior::beta_prime(v("gamma0", &self.gamma0, None)?, v("gamma1", &self.gamma1, None)?),
            "zellner-siow" => GMixturePrior::zellner_siow(n),
            "hyper-g" => GMixturePrior::hyper_g(v("a", &self.a, Some(DEFAULT_HYPER_G_A))?),
            "hyper-g-n" => GMixturePrior::hyper_g_over_n(v("a", &self.a, Some(DEFAULT_HYPER_G_A))?, n),
            "generalized-g" => GMixturePrior::generalized_g(v("b", &self.b, Some(DEFAULT_GENERALIZED_G_B))?, n),
            "robust" => {
                let rho = match self.rho.as_deref() {
                    None | Some("inverse-model-size") => RhoRule::InverseModelSize,
                    Some(text) => RhoRule::Constant(Expr::parse(text)?.eval(n, p)?),
                };
                GMixturePrior::robust(
                    v("a", &self.a, Some(DEFAULT_ROBUST_A))?,
                    v("b", &self.b, Some(DEFAULT_ROBUST_B))?,
                    rho,
                    n,
                )
            }
            "fixed-g" => GMixturePrior::fixed_g(v("g", &self.g, None)?),
            _ => unreachable!("family checked above"),
        };
        prior.map_err(|e| match e {
            Error::InvalidInput(msg) => Error::Config(format!("prior '{}': {msg}", self.label)),
            other => other,
        })
    }
}

/// A replicated simulation study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub n_list: Vec<usize>,
    /// Column counts including the intercept; `p = p_plus_1 - 1` regressors.
    pub p_plus_1_list: Vec<usize>,
    #[serde(default = "default_dists")]
    pub error_dist: OneOrMany,
    #[serde(default)]
    pub calibration: Calibration,
    #[serde(default = "PriorSpec::table1_set")]
    pub priors: Vec<PriorSpec>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_chain_length")]
    pub chain_length: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    #[serde(default)]
    pub search: SearchMode,
    #[serde(default)]
    pub model_prior: ModelPriorSpec,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// When false, `p_plus_1_list` entries count regressors only.
    #[serde(default = "default_true")]
    pub intercept_counted: bool,
    #[serde(default)]
    pub mu_builder: MuBuilder,
    /// Growth exponent `b` in `p = ceil(n^b)` for the approximation study.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_exponent: Option<f64>,
    /// Separation exponent; informational, carried into reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_exponent: Option<f64>,
}

fn default_dists() -> OneOrMany {
    OneOrMany::One(ErrorDist::Normal)
}
fn default_replicates() -> usize {
    DEFAULT_REPLICATES
}
fn default_chain_length() -> usize {
    DEFAULT_CHAIN_LENGTH
}
fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}
fn default_seed() -> u64 {
    DEFAULT_BASE_SEED
}
fn default_sigma() -> f64 {
    1.0
}
fn default_true() -> bool {
    true
}

/// Keys accepted at the top level of a config file.
pub const CONFIG_KEYS: [&str; 17] = [
    "scheme",
    "n_list",
    "p_plus_1_list",
    "error_dist",
    "calibration",
    "priors",
    "replicates",
    "chain_length",
    "burn_in",
    "base_seed",
    "search",
    "model_prior",
    "sigma",
    "intercept_counted",
    "mu_builder",
    "b_exponent",
    "s_exponent",
];

const PRIOR_KEYS: [&str; 10] = ["label", "family", "nu", "tau2", "gamma0", "gamma1", "a", "b", "rho", "g"];

impl ExperimentConfig {
    /// Built-in defaults for a scheme.
    pub fn preset(scheme: Scheme) -> Self {
        let mut cfg = ExperimentConfig {
            scheme,
            n_list: vec![50, 100, 150],
            p_plus_1_list: vec![30],
            error_dist: default_dists(),
            calibration: Calibration::default(),
            priors: PriorSpec::table1_set(),
            replicates: DEFAULT_REPLICATES,
            chain_length: DEFAULT_CHAIN_LENGTH,
            burn_in: DEFAULT_BURN_IN,
            base_seed: DEFAULT_BASE_SEED,
            search: SearchMode::Gibbs,
            model_prior: ModelPriorSpec::Uniform,
            sigma: 1.0,
            intercept_counted: true,
            mu_builder: MuBuilder::default(),
            b_exponent: None,
            s_exponent: None,
        };
        match scheme {
            Scheme::Table1 => {
                cfg.p_plus_1_list = vec![30, 50];
                cfg.error_dist = OneOrMany::Many(ErrorDist::ALL.to_vec());
            }
            Scheme::Scheme1 | Scheme::Scheme2 => {}
            Scheme::ModelFalse => {
                cfg.n_list = vec![100, 200, 400];
                cfg.p_plus_1_list = vec![11];
                cfg.replicates = 50;
                cfg.search = SearchMode::Enumerate;
                cfg.priors = vec![PriorSpec::proposed_i(), PriorSpec::proposed_ii()];
            }
            Scheme::Nested => {
                cfg.search = SearchMode::Nested;
            }
        }
        cfg
    }

    /// Parses TOML text, listing every unknown key before any other error.
    pub fn from_toml(text: &str) -> Result<Self> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("TOML parse error: {}", e.message())))?;
        let mut unknown: Vec<String> = table
            .keys()
            .filter(|k| !CONFIG_KEYS.contains(&k.as_str()))
            .cloned()
            .collect();
        if let Some(toml::Value::Array(priors)) = table.get("priors") {
            for (i, entry) in priors.iter().enumerate() {
                if let toml::Value::Table(t) = entry {
                    unknown.extend(
                        t.keys()
                            .filter(|k| !PRIOR_KEYS.contains(&k.as_str()))
                            .map(|k| format!("priors[{i}].{k}")),
                    );
                }
            }
        }
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown key(s): {}", unknown.join(", "))));
        }
        let cfg: ExperimentConfig = toml::from_str(text)
            .map_err(|e| Error::Config(format!("invalid config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Canonical TOML form, the input to the manifest hash.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Number of regressors for a `p_plus_1_list` entry.
    pub fn regressors(&self, p_plus_1: usize) -> usize {
        if self.intercept_counted {
            p_plus_1.saturating_sub(1)
        } else {
            p_plus_1
        }
    }

    pub fn error_dists(&self) -> Vec<ErrorDist> {
        self.error_dist.to_vec()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replicates < 1 {
            return bad(format!("replicates must be >= 1, got {}", self.replicates));
        }
        if self.burn_in >= self.chain_length {
            return bad(format!(
                "burn_in ({}) must be smaller than chain_length ({})",
                self.burn_in, self.chain_length
            ));
        }
        if self.n_list.is_empty() || self.p_plus_1_list.is_empty() {
            return bad("n_list and p_plus_1_list must be non-empty".into());
        }
        if self.error_dists().is_empty() {
            return bad("error_dist must name at least one law".into());
        }
        if self.priors.is_empty() {
            return bad("at least one prior is required".into());
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        let mut labels = BTreeSet::new();
        for spec in &self.priors {
            spec.check()?;
            if !labels.insert(spec.label.as_str()) {
                return bad(format!("duplicate prior label '{}'", spec.label));
            }
        }
        if let Some(b) = self.b_exponent {
            if !(b > 0.0 && b < 1.0) {
                return bad(format!("b_exponent must lie in (0, 1), got {b}"));
            }
        }
        self.model_prior.resolve().map_err(|e| Error::Config(e.to_string()))?;
        for &pp in &self.p_plus_1_list {
            let p = self.regressors(pp);
            self.scheme.check_dimension(p)?;
            if self.search == SearchMode::Enumerate && p > crate::search::DEFAULT_MAX_P {
                return bad(format!("enumeration is limited to p <= {}, got p = {p}", crate::search::DEFAULT_MAX_P));
            }
            for &n in &self.n_list {
                if p >= n {
                    return bad(format!("cell n = {n}, p = {p} needs p < n"));
                }
                for spec in &self.priors {
                    spec.resolve(n, p)?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for s in [Scheme::Table1, Scheme::Scheme1, Scheme::Scheme2, Scheme::ModelFalse, Scheme::Nested] {
            ExperimentConfig::preset(s).validate().unwrap();
        }
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::preset(Scheme::Table1);
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn parses_symbolic_priors() {
        let text = r#"
            scheme = "scheme1"
            n_list = [60]
            p_plus_1_list = [30]
            error_dist = "laplace"
            replicates = 3

            [[priors]]
            label = "mine"
            family = "scaled-inv-chisq"
            nu = "p/2"
            tau2 = "n^2"

            [[priors]]
            label = "rob"
            family = "robust"
            rho = "1/2"
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.error_dists(), vec![ErrorDist::Laplace]);
        assert_eq!(
            cfg.priors[0].resolve(60, 29).unwrap(),
            GMixturePrior::ScaledInvChiSq { nu: 14.5, tau2: 3600.0 }
        );
        match cfg.priors[1].resolve(60, 29).unwrap() {
            GMixturePrior::Robust { rho_rule, .. } => assert_eq!(rho_rule, RhoRule::Constant(0.5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lists_all_unknown_keys() {
        let text = r#"
            scheme = "table1"
            n_list = [50]
            p_plus_1_list = [30]
            colour = 1
            speed = 2
            [[priors]]
            label = "x"
            family = "hyper-g"
            alpha = 3
        "#;
        let msg = ExperimentConfig::from_toml(text).unwrap_err().to_string();
        assert!(msg.contains("colour") && msg.contains("speed") && msg.contains("priors[0].alpha"), "{msg}");
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = ExperimentConfig::preset(Scheme::Table1);
        cfg.replicates = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = ExperimentConfig::preset(Scheme::Table1);
        cfg.burn_in = cfg.chain_length;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::preset(Scheme::Scheme2);
        cfg.p_plus_1_list = vec![10];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::preset(Scheme::Table1);
        cfg.priors.push(PriorSpec::proposed_i());
        assert!(cfg.validate().is_err());
        let mut spec = PriorSpec::zellner_siow();
        spec.nu = Some(Expr::constant(2.0));
        assert!(spec.check().is_err());
        let mut spec = PriorSpec::generalized_g();
        spec.b = Some(Expr::constant(0.7));
        assert!(matches!(spec.resolve(50, 10), Err(Error::Config(_))));
    }

    #[test]
    fn regressor_count_convention() {
        let mut cfg = ExperimentConfig::preset(Scheme::Scheme1);
        assert_eq!(cfg.regressors(30), 29);
        cfg.intercept_counted = false;
        assert_eq!(cfg.regressors(30), 30);
    }
}
