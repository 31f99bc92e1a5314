//! Library results checked against independently computed references.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use gprior_mix::io::{load_dataset, write_dataset};
use gprior_mix::lab::{draw_dataset, draw_truth, Calibration, ErrorDist, Scheme};
use gprior_mix::marginal::{log_prefactor, DEFAULT_TOL};
use gprior_mix::prior::RhoRule;
use gprior_mix::{
    fit_stats, log_marginal, log_marginal_quadrature, make_proposed, posterior_probs,
    residual_quadratic, Dataset, GMixturePrior, ModelIndex, ModelPrior, ProposedVariant,
};

fn random_dataset(n: usize, p: usize, seed: u64) -> (Dataset, Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    1.5 * j as f64 + z
                })
                .collect()
        })
        .collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            2.0 + e + cols.iter().take(3).enumerate().map(|(j, c)| (j as f64 - 0.8) * c[i]).sum::<f64>()
        })
        .collect();
    (Dataset::new(y.clone(), cols.clone()).unwrap(), cols, y)
}

/// Design `(1, X_alpha)` as a dense matrix.
fn design(cols: &[Vec<f64>], alpha: &ModelIndex) -> DMatrix<f64> {
    let n = cols[0].len();
    DMatrix::from_fn(n, alpha.size() + 1, |i, k| {
        if k == 0 {
            1.0
        } else {
            cols[alpha.indices()[k - 1] - 1][i]
        }
    })
}

/// `v' (I - Z (Z'Z)^{-1} Z') v` by the normal equations.
fn normal_equations_rss(z: &DMatrix<f64>, v: &[f64]) -> f64 {
    let v = DVector::from_column_slice(v);
    let ztz = z.transpose() * z;
    let coef = ztz.cholesky().unwrap().solve(&(z.transpose() * &v));
    (v - z * coef).norm_squared()
}

#[test]
fn rss_and_r2_match_normal_equations() {
    for (seed, n, p) in [(1u64, 30usize, 5usize), (2, 80, 9), (3, 12, 10)] {
        let (d, cols, y) = random_dataset(n, p, seed);
        let mean = y.iter().sum::<f64>() / n as f64;
        let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
        for mask in [1u128, 0b101, (1 << p) - 1, 0b1_1010] {
            let alpha = ModelIndex::from_mask(mask & ((1 << p) - 1));
            let s = fit_stats(&d, &alpha).unwrap();
            let rss = normal_equations_rss(&design(&cols, &alpha), &y);
            assert!((s.rss - rss).abs() <= 1e-8 * tss, "{alpha}: {} vs {rss}", s.rss);
            assert!((s.r2 - (1.0 - rss / tss)).abs() < 1e-9);
        }
    }
}

#[test]
fn residual_quadratic_matches_projector() {
    let (d, cols, _) = random_dataset(40, 6, 9);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mu: Vec<f64> = (0..40).map(|i| (i as f64 / 7.0).sin() * 3.0 + rng.random::<f64>()).collect();
    for mask in [0u128, 1, 0b110, 0b111111] {
        let alpha = ModelIndex::from_mask(mask);
        let z = design(&cols, &alpha);
        // Explicit projector P = Z (Z'Z)^{-1} Z'.
        let p = &z * (z.transpose() * &z).try_inverse().unwrap() * z.transpose();
        let m = DVector::from_column_slice(&mu);
        let oracle = (m.transpose() * (DMatrix::identity(40, 40) - p) * &m)[(0, 0)];
        let got = residual_quadratic(&mu, &alpha, &d).unwrap();
        assert!((got - oracle).abs() < 1e-9 * oracle.abs().max(1.0), "{alpha}: {got} vs {oracle}");
    }
}

/// Probabilities from pairwise differences only: `p_i = 1 / sum_j exp(l_j - l_i)`.
fn pairwise_probs(logs: &[f64]) -> Vec<f64> {
    logs.iter()
        .map(|li| 1.0 / logs.iter().map(|lj| (lj - li).exp()).sum::<f64>())
        .collect()
}

#[test]
fn posterior_probs_match_pairwise_oracle() {
    let (d, _, _) = random_dataset(50, 4, 5);
    let prior = make_proposed(50, 4, ProposedVariant::I).unwrap();
    let models: Vec<ModelIndex> = (0u128..16).map(ModelIndex::from_mask).collect();
    let evals: Vec<_> = models
        .iter()
        .map(|m| (m.clone(), log_marginal(&d, m, &prior, DEFAULT_TOL).unwrap()))
        .collect();
    let q: f64 = 0.3;
    let probs = posterior_probs(&evals, &ModelPrior::bernoulli(q).unwrap(), 4).unwrap();
    let logs: Vec<f64> = evals
        .iter()
        .map(|(m, e)| {
            let k = m.size() as f64;
            e.log_m + k * q.ln() + (4.0 - k) * (1.0 - q).ln()
        })
        .collect();
    let oracle = pairwise_probs(&logs);
    assert_eq!(probs.len(), 16);
    for ((m, _), o) in evals.iter().zip(&oracle) {
        let p = probs[m];
        assert!((p - o).abs() < 1e-13, "{m}: {p} vs {o}");
    }
}

/// `ln int exp(h(t)) dt` by composite Simpson on `[lo, hi]` with `intervals` steps.
fn dense_simpson_log(h: impl Fn(f64) -> f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    let step = (hi - lo) / intervals as f64;
    let vals: Vec<f64> = (0..=intervals).map(|k| h(lo + k as f64 * step)).collect();
    let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = vals
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let w = if k == 0 || k == intervals { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            w * (v - top).exp()
        })
        .sum();
    top + (sum * step / 3.0).ln()
}

#[test]
fn quadrature_matches_dense_grid_on_simulated_data() {
    let (d, _, _) = random_dataset(100, 5, 21);
    let prior = make_proposed(100, 5, ProposedVariant::II).unwrap();
    let alpha = ModelIndex::prefix(5);
    let s = fit_stats(&d, &alpha).unwrap();
    let (a, b) = ((100.0 - 1.0 - 5.0) / 2.0, 99.0 / 2.0);
    let c = 1.0 - s.r2;
    let h = |t: f64| {
        let g = t.exp();
        a * g.ln_1p() - b * (g * c).ln_1p() + prior.log_density(g).unwrap() + t
    };
    let oracle = log_prefactor(d.n(), d.s_y2()) + dense_simpson_log(h, -60.0, 80.0, 1_000_000);
    let got = log_marginal_quadrature(&d, &alpha, &prior, DEFAULT_TOL).unwrap().log_m;
    assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");

    let robust = GMixturePrior::robust(0.5, 1.0, RhoRule::InverseModelSize, 100)
        .unwrap()
        .for_model_size(5);
    // Density A k^A (g + B)^{-(1+A)} on g >= k - B, with k = rho (n + B) and rho = 1/(p+1).
    let (ra, rb): (f64, f64) = (0.5, 1.0);
    let k = (100.0 + rb) / 6.0;
    let g0 = robust.support_lower();
    assert!((g0 - (k - rb)).abs() < 1e-12);
    let lower = g0.ln();
    let h = |t: f64| {
        // exp(ln g0) can round below g0.
        let g = t.exp().max(g0);
        let log_pi = ra.ln() + ra * k.ln() - (1.0 + ra) * (g + rb).ln();
        a * g.ln_1p() - b * (g * c).ln_1p() + log_pi + t
    };
    let oracle = log_prefactor(d.n(), d.s_y2()) + dense_simpson_log(h, lower, 120.0, 1_000_000);
    let got = log_marginal_quadrature(&d, &alpha, &robust, DEFAULT_TOL).unwrap().log_m;
    assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
}

#[test]
fn csv_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let truth = draw_truth(Scheme::Table1, 7, 3).unwrap();
    let (d, spec) = draw_dataset(&truth, 45, ErrorDist::T3, Calibration::Mixed, 4).unwrap();
    let path = dir.path().join("d.csv");
    write_dataset(&d, &path).unwrap();
    let back = load_dataset(&path).unwrap();
    assert_eq!(back.y(), d.y());
    for prior in [
        make_proposed(45, 7, ProposedVariant::II).unwrap(),
        GMixturePrior::zellner_siow(45).unwrap(),
    ] {
        let a = log_marginal(&d, &spec.alpha_c, &prior, DEFAULT_TOL).unwrap().log_m;
        let b = log_marginal(&back, &spec.alpha_c, &prior, DEFAULT_TOL).unwrap().log_m;
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
