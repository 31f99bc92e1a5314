//! Simulated designs and responses for the replication experiments.

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::{Dataset, ModelIndex};

/// Number of active regressors in the sparse-signal scheme.
pub const SCHEME2_ACTIVE: usize = 15;
/// The large coefficients of the sparse-signal scheme sit on regressors `1..=4`.
pub const SCHEME2_SPARSE: usize = 4;
/// Range of the magnitude of the negligible coefficients in the sparse-signal scheme.
pub const SCHEME2_SMALL: (f64, f64) = (0.0005, 0.008);
/// Intercept of the null-true scheme.
pub const SCHEME1_INTERCEPT: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorDist {
    Normal,
    Laplace,
    T3,
}

impl ErrorDist {
    pub const ALL: [ErrorDist; 3] = [ErrorDist::Normal, ErrorDist::Laplace, ErrorDist::T3];

    pub fn name(self) -> &'static str {
        match self {
            ErrorDist::Normal => "normal",
            ErrorDist::Laplace => "laplace",
            ErrorDist::T3 => "t3",
        }
    }

    pub(crate) fn stream_label(self) -> u64 {
        match self {
            ErrorDist::Normal => 0,
            ErrorDist::Laplace => 1,
            ErrorDist::T3 => 2,
        }
    }
}

/// How the dispersion `sigma` maps onto each error law.
///
/// `Mixed` gives normal and Laplace errors variance `sigma^2` and uses
/// `sigma` as the scale of the t(3) law, whose variance is then `3 sigma^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Calibration {
    #[default]
    Mixed,
    /// Variance `sigma^2` for every law.
    Variance,
    /// Scale `sigma` for every law.
    Scale,
}

impl Calibration {
    pub fn name(self) -> &'static str {
        match self {
            Calibration::Mixed => "mixed",
            Calibration::Variance => "variance",
            Calibration::Scale => "scale",
        }
    }

    /// Multiplier applied to a standard draw (unit-scale Laplace, standard t(3)).
    fn multiplier(self, dist: ErrorDist, sigma: f64) -> f64 {
        let variance = match dist {
            ErrorDist::Normal => sigma,
            ErrorDist::Laplace => sigma / 2f64.sqrt(),
            ErrorDist::T3 => sigma / 3f64.sqrt(),
        };
        match (self, dist) {
            (Calibration::Variance, _) | (Calibration::Mixed, ErrorDist::Normal | ErrorDist::Laplace) => variance,
            (Calibration::Scale, _) | (Calibration::Mixed, ErrorDist::T3) => sigma,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Table1,
    Scheme1,
    Scheme2,
    ModelFalse,
    Nested,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Table1 => "table1",
            Scheme::Scheme1 => "scheme1",
            Scheme::Scheme2 => "scheme2",
            Scheme::ModelFalse => "model-false",
            Scheme::Nested => "nested",
        }
    }

    pub(crate) fn stream_label(self) -> u64 {
        match self {
            Scheme::Table1 => 0,
            Scheme::Scheme1 => 1,
            Scheme::Scheme2 => 2,
            Scheme::ModelFalse => 3,
            Scheme::Nested => 4,
        }
    }

    /// Checks that `p` regressors suit the scheme.
    pub fn check_dimension(self, p: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match self {
            Scheme::Scheme2 if p < SCHEME2_ACTIVE => bad(format!(
                "scheme2 needs at least {SCHEME2_ACTIVE} regressors, got p = {p}"
            )),
            Scheme::ModelFalse if !(3..=14).contains(&p) => bad(format!(
                "model-false needs 3 <= p <= 14 for the exhaustive divergence minimum, got p = {p}"
            )),
            _ if p == 0 => bad("at least one regressor is required".into()),
            _ => Ok(()),
        }
    }
}

/// Nonlinear mean functions for the model-false study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuBuilder {
    /// `beta_0 + 2 exp(x_1) + x_2^2`.
    #[default]
    ExpSquare,
    /// `beta_0 + 2 sin(2 x_1) + x_2 x_3`.
    SinProduct,
}

impl MuBuilder {
    pub fn name(self) -> &'static str {
        match self {
            MuBuilder::ExpSquare => "exp-square",
            MuBuilder::SinProduct => "sin-product",
        }
    }

    fn eval(self, beta0: f64, raw: &[Vec<f64>], i: usize) -> f64 {
        match self {
            MuBuilder::ExpSquare => beta0 + 2.0 * raw[0][i].exp() + raw[1][i].powi(2),
            MuBuilder::SinProduct => beta0 + 2.0 * (2.0 * raw[0][i]).sin() + raw[1][i] * raw[2][i],
        }
    }
}

/// The data-generating truth of one experiment cell.
///
/// `xi`, `alpha_c`, `beta0`, `beta` and `sigma` stay fixed across replicates;
/// `mu` is the mean for one drawn design (empty for a template).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrueModelSpec {
    pub scheme: Scheme,
    pub alpha_c: ModelIndex,
    pub beta0: f64,
    /// Coefficients of `alpha_c`, in index order.
    pub beta: Vec<f64>,
    pub sigma: f64,
    /// Means of the raw regressors.
    pub xi: Vec<f64>,
    /// Model whose posterior probability the experiment tracks.
    pub target: ModelIndex,
    pub mu_builder: Option<MuBuilder>,
    pub mu: Vec<f64>,
}

impl TrueModelSpec {
    pub fn p(&self) -> usize {
        self.xi.len()
    }

    /// Mean vector for raw (uncentered) regressor columns.
    pub fn mean_for(&self, raw: &[Vec<f64>]) -> Vec<f64> {
        let n = raw.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| match self.mu_builder {
                Some(b) => b.eval(self.beta0, raw, i),
                None => {
                    self.beta0
                        + self
                            .alpha_c
                            .indices()
                            .iter()
                            .zip(&self.beta)
                            .map(|(&j, b)| b * raw[j - 1][i])
                            .sum::<f64>()
                }
            })
            .collect()
    }
}

/// Draws the fixed part of the truth for `p` regressors.
pub fn draw_truth(scheme: Scheme, p: usize, seed: u64) -> Result<TrueModelSpec> {
    scheme.check_dimension(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xi: Vec<f64> = (1..=p).map(|k| 0.2 * k as f64).collect();
    xi.shuffle(&mut rng);
    let mut spec = TrueModelSpec {
        scheme,
        alpha_c: ModelIndex::null(),
        beta0: 0.0,
        beta: Vec::new(),
        sigma: 1.0,
        xi,
        target: ModelIndex::null(),
        mu_builder: None,
        mu: Vec::new(),
    };
    match scheme {
        Scheme::Table1 | Scheme::Nested => {
            let size = p / 2;
            let alpha = if scheme == Scheme::Nested {
                ModelIndex::prefix(size)
            } else {
                let picked = index::sample(&mut rng, p, size).into_iter().map(|j| j + 1).collect();
                ModelIndex::new(picked)?
            };
            // Coefficients come without replacement from {(-1)^k 0.2 k : k = 1..p}.
            let grid = |k: usize| if k % 2 == 0 { 0.2 * k as f64 } else { -0.2 * k as f64 };
            let mut coefs = index::sample(&mut rng, p, size + 1)
                .into_iter()
                .map(|i| grid(i + 1));
            spec.beta0 = coefs.next().expect("size + 1 >= 1 draws");
            spec.beta = coefs.collect();
            spec.alpha_c = alpha.clone();
            spec.target = alpha;
        }
        Scheme::Scheme1 => {
            spec.beta0 = SCHEME1_INTERCEPT;
        }
        Scheme::Scheme2 => {
            spec.alpha_c = ModelIndex::prefix(SCHEME2_ACTIVE);
            spec.beta0 = 1.0;
            spec.beta = (1..=SCHEME2_ACTIVE)
                .map(|i| {
                    if i <= SCHEME2_SPARSE {
                        i as f64 + 1.0
                    } else {
                        let mag = rng.random_range(SCHEME2_SMALL.0..SCHEME2_SMALL.1);
                        if rng.random::<bool>() {
                            mag
                        } else {
                            -mag
                        }
                    }
                })
                .collect();
            spec.target = ModelIndex::prefix(SCHEME2_SPARSE);
        }
        Scheme::ModelFalse => {
            spec.beta0 = 1.0;
            spec.mu_builder = Some(MuBuilder::default());
        }
    }
    Ok(spec)
}

/// Draws one replicate: a fresh design with regressor means `xi`, and errors
/// from `dist` scaled according to `calibration`.
pub fn draw_dataset(
    truth: &TrueModelSpec,
    n: usize,
    dist: ErrorDist,
    calibration: Calibration,
    seed: u64,
) -> Result<(Dataset, TrueModelSpec)> {
    let p = truth.p();
    if p >= n {
        return Err(Error::InvalidRegime(format!(
            "p < n is required, got p = {p}, n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Vec<f64>> = truth
        .xi
        .iter()
        .map(|&m| {
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + z
                })
                .collect()
        })
        .collect();
    let mu = truth.mean_for(&raw);
    let scale = calibration.multiplier(dist, truth.sigma);
    let t3 = StudentT::new(3.0).expect("valid degrees of freedom");
    let y: Vec<f64> = mu
        .iter()
        .map(|m| {
            let e: f64 = match dist {
                ErrorDist::Normal => StandardNormal.sample(&mut rng),
                ErrorDist::Laplace => {
                    let a: f64 = Exp1.sample(&mut rng);
                    let b: f64 = Exp1.sample(&mut rng);
                    a - b
                }
                ErrorDist::T3 => t3.sample(&mut rng),
            };
            m + scale * e
        })
        .collect();
    let d = Dataset::new(y, raw)?;
    let mut spec = truth.clone();
    spec.mu = mu;
    Ok((d, spec))
}

/// Truth and one replicate in a single call, seeding both from `seed`.
pub fn generate_dataset(
    n: usize,
    p: usize,
    scheme: Scheme,
    dist: ErrorDist,
    seed: u64,
) -> Result<(Dataset, TrueModelSpec)> {
    use crate::seed::{derive, stream};
    let truth = draw_truth(scheme, p, derive(seed, &[stream::TRUTH]))?;
    draw_dataset(&truth, n, dist, Calibration::default(), derive(seed, &[stream::DATA]))
}
