//! Summary and per-replicate report tables.
//!
//! Floats are written in Rust's shortest round-trip decimal form, so a
//! report body is byte-identical whenever its numbers are.

use serde::Serialize;

use super::experiments::{ApproxStudy, CellOutcomes, InfoReport};
use super::generate::ErrorDist;
use crate::config::ExperimentConfig;
use crate::regression::ModelIndex;

/// The model whose posterior probability a row summarizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Target {
    /// The data-generating model.
    TrueModel,
    Null,
    /// The sparse model carrying only the large coefficients.
    Sparse,
    /// Divergence ratio of the selected model, not a probability.
    Ratio,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::TrueModel => "true",
            Target::Null => "null",
            Target::Sparse => "sparse",
            Target::Ratio => "ratio",
        }
    }
}

/// One `(error law, p + 1, n, prior, target)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub scheme: String,
    pub error_dist: String,
    pub calibration: String,
    pub search: String,
    pub prior: String,
    pub n: usize,
    pub p_plus_1: usize,
    pub target: Target,
    pub target_model: String,
    pub mean: f64,
    /// `mean((v - 1)^2)`.
    pub mse: f64,
    pub median: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Share of replicates in which the target was visited (for ratios, in
    /// which the selected model attained the minimum divergence).
    pub visit_rate: f64,
    /// Smallest `1 - R^2` over all non-null models scored in the cell.
    pub min_one_minus_r2: f64,
}

/// One replicate's value for one prior and target.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RawRow {
    pub error_dist: String,
    pub prior: String,
    pub n: usize,
    pub p_plus_1: usize,
    pub target: Target,
    pub replicate: usize,
    pub value: f64,
    pub visited: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub scheme: String,
    pub rows: Vec<ReportRow>,
    pub raw: Vec<RawRow>,
}

/// Mean, `mean((v - 1)^2)` and median.
pub fn summarize(values: &[f64]) -> (f64, f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let mse = values.iter().map(|v| (v - 1.0).powi(2)).sum::<f64>() / k;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    (mean, mse, super::experiments::median_sorted(&sorted))
}

fn csv_line(fields: &[String]) -> String {
    let mut out = fields
        .iter()
        .map(|f| {
            if f.contains([',', '"', '\n']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                f.clone()
            }
        })
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    out
}

impl ExperimentReport {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        ExperimentReport {
            scheme: cfg.scheme.name().to_string(),
            rows: Vec::new(),
            raw: Vec::new(),
        }
    }

    pub(crate) fn extend_cell(
        &mut self,
        cfg: &ExperimentConfig,
        dist: ErrorDist,
        n: usize,
        p_plus_1: usize,
        tracked: &[(Target, ModelIndex)],
        out: &CellOutcomes,
    ) {
        let reps = out.values.len();
        for (i, spec) in cfg.priors.iter().enumerate() {
            for (t, (target, model)) in tracked.iter().enumerate() {
                let values: Vec<f64> = out.values.iter().map(|r| r[i][t]).collect();
                let hits = out.visited.iter().filter(|r| r[i][t]).count();
                let (mean, mse, median) = summarize(&values);
                self.rows.push(ReportRow {
                    scheme: self.scheme.clone(),
                    error_dist: dist.name().into(),
                    calibration: cfg.calibration.name().into(),
                    search: cfg.search.name().into(),
                    prior: spec.label.clone(),
                    n,
                    p_plus_1,
                    target: *target,
                    target_model: if *target == Target::Ratio {
                        String::new()
                    } else {
                        model.to_string()
                    },
                    mean,
                    mse,
                    median,
                    replicates: reps,
                    seed: cfg.base_seed,
                    visit_rate: hits as f64 / reps as f64,
                    min_one_minus_r2: out.min_one_minus_r2.unwrap_or(f64::NAN),
                });
                for (rep, v) in values.iter().enumerate() {
                    self.raw.push(RawRow {
                        error_dist: dist.name().into(),
                        prior: spec.label.clone(),
                        n,
                        p_plus_1,
                        target: *target,
                        replicate: rep,
                        value: *v,
                        visited: out.visited[rep][i][t],
                    });
                }
            }
        }
    }

    /// Summary row for a prior, target and cell, if present.
    pub fn find(&self, prior: &str, n: usize, p_plus_1: usize, dist: ErrorDist, target: Target) -> Option<&ReportRow> {
        self.rows.iter().find(|r| {
            r.prior == prior && r.n == n && r.p_plus_1 == p_plus_1 && r.error_dist == dist.name() && r.target == target
        })
    }

    pub fn summary_csv(&self) -> String {
        let mut s = csv_line(
            &[
                "scheme", "error_dist", "calibration", "search", "prior", "n", "p_plus_1", "target",
                "target_model", "mean", "mse", "median", "replicates", "seed", "visit_rate",
                "min_one_minus_r2",
            ]
            .map(String::from),
        );
        for r in &self.rows {
            s += &csv_line(&[
                r.scheme.clone(),
                r.error_dist.clone(),
                r.calibration.clone(),
                r.search.clone(),
                r.prior.clone(),
                r.n.to_string(),
                r.p_plus_1.to_string(),
                r.target.name().into(),
                r.target_model.clone(),
                r.mean.to_string(),
                r.mse.to_string(),
                r.median.to_string(),
                r.replicates.to_string(),
                r.seed.to_string(),
                r.visit_rate.to_string(),
                r.min_one_minus_r2.to_string(),
            ]);
        }
        s
    }

    pub fn raw_csv(&self) -> String {
        let mut s = csv_line(
            &["error_dist", "prior", "n", "p_plus_1", "target", "replicate", "value", "visited"].map(String::from),
        );
        for r in &self.raw {
            s += &csv_line(&[
                r.error_dist.clone(),
                r.prior.clone(),
                r.n.to_string(),
                r.p_plus_1.to_string(),
                r.target.name().into(),
                r.replicate.to_string(),
                r.value.to_string(),
                r.visited.to_string(),
            ]);
        }
        s
    }

    /// Long-format `(series, n, statistic, value)` table for plotting mean and
    /// mse against `n`.
    pub fn plot_csv(&self) -> String {
        let mut s = csv_line(&["series", "n", "statistic", "value"].map(String::from));
        for stat in ["mean", "mse"] {
            for r in &self.rows {
                let series = format!("{}/p+1={}/{}/{}", r.error_dist, r.p_plus_1, r.prior, r.target.name());
                let v = if stat == "mean" { r.mean } else { r.mse };
                s += &csv_line(&[series, r.n.to_string(), stat.into(), v.to_string()]);
            }
        }
        s
    }
}

impl InfoReport {
    pub fn profiles_csv(&self) -> String {
        let mut s = csv_line(
            &["prior", "n", "p_alpha", "one_minus_r2", "log_bf", "last_step", "plateau", "tail_slope"].map(String::from),
        );
        for p in &self.profiles {
            for (c, v) in p.one_minus_r2.iter().zip(&p.log_bf) {
                s += &csv_line(&[
                    p.prior.clone(),
                    p.n.to_string(),
                    p.p_alpha.to_string(),
                    c.to_string(),
                    v.to_string(),
                    p.last_step.to_string(),
                    p.plateau.to_string(),
                    p.tail_slope.to_string(),
                ]);
            }
        }
        s
    }

    pub fn thresholds_csv(&self) -> String {
        let mut s = csv_line(
            &["p_alpha", "stated_nu_one", "stated_nu_p", "tail_nu_one", "tail_nu_p"].map(String::from),
        );
        for t in &self.thresholds {
            s += &csv_line(&[
                t.p_alpha.to_string(),
                t.stated_nu_one.to_string(),
                t.stated_nu_p.to_string(),
                t.tail_nu_one.to_string(),
                t.tail_nu_p.to_string(),
            ]);
        }
        s
    }
}

impl ApproxStudy {
    pub fn csv(&self) -> String {
        let mut s = csv_line(
            &["nu", "b", "n", "p", "evaluations", "median_rel_err", "mean_rel_err", "max_rel_err"].map(String::from),
        );
        for r in &self.rows {
            s += &csv_line(&[
                self.nu.name().into(),
                self.b.to_string(),
                r.n.to_string(),
                r.p.to_string(),
                r.evaluations.to_string(),
                r.median_rel_err.to_string(),
                r.mean_rel_err.to_string(),
                r.max_rel_err.to_string(),
            ]);
        }
        s
    }
}
