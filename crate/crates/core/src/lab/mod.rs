//! Simulation studies: data generators, replicated experiments and reports.

mod experiments;
mod generate;
mod report;

pub use experiments::{
    approx_dataset, chain_seed, competitor_labels, divergences, model_false_minimum, ols_slope,
    replicate_seed, run_approx_study, run_info_check, run_info_consistency, run_info_fixed_g,
    run_model_false, run_scheme, run_table1, search_posterior, truth_seed, ApproxRow, ApproxStudy,
    InfoProfile, InfoReport, InfoThresholds, NuChoice, INFO_GRID, MODEL_FALSE_MAX_P, PLATEAU_TOL,
};
pub use generate::{
    draw_dataset, draw_truth, generate_dataset, Calibration, ErrorDist, MuBuilder, Scheme,
    TrueModelSpec, SCHEME1_INTERCEPT, SCHEME2_ACTIVE, SCHEME2_SMALL, SCHEME2_SPARSE,
};
pub use report::{summarize, ExperimentReport, RawRow, ReportRow, Target};
