//! Command-line front end. `main` only forwards to [`run`].

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ExperimentConfig, PriorSpec, SearchMode, FAMILIES};
use crate::error::{Error, Result};
use crate::io::{load_dataset, write_report_file, RunManifest};
use crate::lab::{
    run_approx_study, run_info_check, run_model_false, run_scheme, run_table1, search_posterior,
    ExperimentReport, NuChoice, Scheme,
};
use crate::marginal::ModelPrior;
use crate::search::{StatsCache, DEFAULT_BURN_IN, DEFAULT_CHAIN_LENGTH};

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "GPRIOR_MIX_THREADS";

#[derive(Debug, Parser)]
#[command(name = "gprior-mix", version, about = "Bayesian variable selection with mixtures of g-priors")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML experiment config; built-in presets are used when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for report files.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Replicates per cell, overriding the config.
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Posterior model probabilities for a CSV dataset (first column y).
    Select(SelectArgs),
    /// Posterior probability of the true model across priors, n and p.
    Table1,
    /// Null model true.
    Scheme1,
    /// Sparse signal with many negligible coefficients.
    Scheme2,
    /// Divergence ratio of the selected model under a nonlinear mean.
    ModelFalse,
    /// Bayes factor limits as R^2 tends to one.
    InfoCheck {
        /// Model sizes to probe.
        #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 29])]
        p: Vec<usize>,
    },
    /// Accuracy of the closed-form marginal approximation as n grows.
    ApproxStudy {
        /// Sample sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 200, 400, 800])]
        n: Vec<usize>,
        /// Growth exponent in p = ceil(n^b); overrides the config.
        #[arg(long)]
        b: Option<f64>,
        /// Random models scored per dataset.
        #[arg(long, default_value_t = 10)]
        models: usize,
    },
    /// Prior families, their parameters and built-in labels.
    PriorsList,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Auto,
    Enumerate,
    Nested,
    Gibbs,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Auto => SearchMode::Auto,
            ModeArg::Enumerate => SearchMode::Enumerate,
            ModeArg::Nested => SearchMode::Nested,
            ModeArg::Gibbs => SearchMode::Gibbs,
        }
    }
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    /// CSV file with a header; first column is the response.
    #[arg(long)]
    pub data: PathBuf,
    /// Built-in prior label (see `priors-list`); the first prior of --config wins.
    #[arg(long, default_value = "proposed-II")]
    pub prior: String,
    /// Search mode; auto enumerates for p <= 20.
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    /// Bernoulli model prior inclusion probability; uniform when absent.
    #[arg(long)]
    pub inclusion: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_CHAIN_LENGTH)]
    pub chain_length: usize,
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    pub burn_in: usize,
    /// Rows of the ranking table.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

/// Built-in priors addressable by label.
pub fn builtin_priors() -> Vec<PriorSpec> {
    let mut v = PriorSpec::table1_set();
    v.push(PriorSpec::hyper_g());
    v.push(PriorSpec::fixed_g_n2());
    v
}

fn find_prior(label: &str) -> Result<PriorSpec> {
    builtin_priors()
        .into_iter()
        .find(|s| s.label == label)
        .ok_or_else(|| {
            let known: Vec<String> = builtin_priors().into_iter().map(|s| s.label).collect();
            Error::Config(format!("unknown prior label '{label}' (known: {})", known.join(", ")))
        })
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))
}

fn load_config(g: &GlobalArgs, scheme: Scheme) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::preset(scheme),
    };
    if cfg.scheme != scheme && !(cfg.scheme == Scheme::Nested && scheme != Scheme::ModelFalse) {
        return Err(Error::Config(format!(
            "config scheme '{}' does not match command '{}'",
            cfg.scheme.name(),
            scheme.name()
        )));
    }
    if let Some(s) = g.seed {
        cfg.base_seed = s;
    }
    if let Some(r) = g.replicates {
        cfg.replicates = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_experiment(g: &GlobalArgs, command: &str, cfg: &ExperimentConfig, report: &ExperimentReport) -> Result<()> {
    let manifest = RunManifest::new(command, &cfg.to_toml(), cfg.base_seed);
    let dir = &g.out_dir;
    let files = [
        write_report_file(dir, &format!("{command}_summary.csv"), &manifest, &report.summary_csv())?,
        write_report_file(dir, &format!("{command}_raw.csv"), &manifest, &report.raw_csv())?,
        write_report_file(dir, &format!("{command}_plot.csv"), &manifest, &report.plot_csv())?,
    ];
    println!(
        "{:<10} {:<5} {:<8} {:<14} {:>5} {:>8} {:>10} {:>10}",
        "error", "p+1", "target", "prior", "n", "reps", "mean", "mse"
    );
    for r in &report.rows {
        println!(
            "{:<10} {:<5} {:<8} {:<14} {:>5} {:>8} {:>10.4} {:>10.4}",
            r.error_dist,
            r.p_plus_1,
            r.target.name(),
            r.prior,
            r.n,
            r.replicates,
            r.mean,
            r.mse
        );
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let pool = thread_pool(g.threads)?;
    match &cli.command {
        Command::Select(a) => pool.install(|| cmd_select(g, a)),
        Command::Table1 => {
            let cfg = load_config(g, Scheme::Table1)?;
            let report = pool.install(|| run_table1(&cfg))?;
            write_experiment(g, "table1", &cfg, &report)
        }
        Command::Scheme1 | Command::Scheme2 => {
            let (scheme, name) = match cli.command {
                Command::Scheme1 => (Scheme::Scheme1, "scheme1"),
                _ => (Scheme::Scheme2, "scheme2"),
            };
            let cfg = load_config(g, scheme)?;
            let report = pool.install(|| run_scheme(&cfg))?;
            write_experiment(g, name, &cfg, &report)
        }
        Command::ModelFalse => {
            let cfg = load_config(g, Scheme::ModelFalse)?;
            let report = pool.install(|| run_model_false(&cfg))?;
            write_experiment(g, "model-false", &cfg, &report)
        }
        Command::InfoCheck { p } => {
            let report = run_info_check(p)?;
            let resolved = format!("p = {p:?}");
            let manifest = RunManifest::new("info-check", &resolved, g.seed.unwrap_or(0));
            let a = write_report_file(&g.out_dir, "info_profiles.csv", &manifest, &report.profiles_csv())?;
            let b = write_report_file(&g.out_dir, "info_thresholds.csv", &manifest, &report.thresholds_csv())?;
            println!("{:<14} {:>4} {:>4} {:>12} {:>10} {:>8}", "prior", "p", "n", "logBF@1e-12", "last step", "plateau");
            for pr in &report.profiles {
                println!(
                    "{:<14} {:>4} {:>4} {:>12.4} {:>10.4} {:>8}",
                    pr.prior,
                    pr.p_alpha,
                    pr.n,
                    pr.log_bf.last().copied().unwrap_or(f64::NAN),
                    pr.last_step,
                    pr.plateau
                );
            }
            for t in &report.thresholds {
                println!(
                    "p = {}: stated n >= {} (nu=1), n >= {} (nu=p); tail exponent gives n >= {} (nu=1), n >= {} (nu=p)",
                    t.p_alpha, t.stated_nu_one, t.stated_nu_p, t.tail_nu_one, t.tail_nu_p
                );
            }
            println!("wrote {}\nwrote {}", a.display(), b.display());
            Ok(())
        }
        Command::ApproxStudy { n, b, models } => {
            let cfg = match &g.config {
                Some(path) => Some(ExperimentConfig::from_path(path)?),
                None => None,
            };
            let b = b.or(cfg.as_ref().and_then(|c| c.b_exponent)).unwrap_or(0.5);
            let seed = g.seed.or(cfg.as_ref().map(|c| c.base_seed)).unwrap_or(crate::config::DEFAULT_BASE_SEED);
            let reps = g.replicates.unwrap_or(20);
            let n_list = cfg.as_ref().map(|c| c.n_list.clone()).unwrap_or_else(|| n.clone());
            let mut body = String::new();
            for (i, nu) in [NuChoice::P, NuChoice::One].into_iter().enumerate() {
                let study = pool.install(|| run_approx_study(b, &n_list, nu, reps, *models, seed))?;
                let csv = study.csv();
                body += if i == 0 { &csv } else { csv.split_once('\n').map_or("", |x| x.1) };
                println!(
                    "{}: fitted exponent {:.3}, median decreasing: {}",
                    nu.name(),
                    study.exponent,
                    study.median_decreasing
                );
                for r in &study.rows {
                    println!("  n = {:>5}, p = {:>3}: median |m/m~ - 1| = {:.3e}", r.n, r.p, r.median_rel_err);
                }
            }
            let resolved = format!("b = {b}\nn = {n_list:?}\nreplicates = {reps}\nmodels = {models}");
            let manifest = RunManifest::new("approx-study", &resolved, seed);
            let f = write_report_file(&g.out_dir, "approx_study.csv", &manifest, &body)?;
            println!("wrote {}", f.display());
            Ok(())
        }
        Command::PriorsList => {
            println!("families: {}", FAMILIES.join(", "));
            println!("{:<14} {:<18} parameters", "label", "family");
            for s in builtin_priors() {
                let text = toml::to_string(&s).unwrap_or_default();
                let params: Vec<&str> = text
                    .lines()
                    .filter(|l| !l.starts_with("label") && !l.starts_with("family"))
                    .collect();
                let shown = if params.is_empty() { "(defaults)".to_string() } else { params.join(", ") };
                println!("{:<14} {:<18} {}", s.label, s.family, shown);
            }
            Ok(())
        }
    }
}

fn cmd_select(g: &GlobalArgs, a: &SelectArgs) -> Result<()> {
    let d = load_dataset(&a.data)?;
    if d.is_response_degenerate() {
        return Err(Error::DegenerateResponse);
    }
    let spec = match &g.config {
        Some(path) => first_prior(path)?,
        None => find_prior(&a.prior)?,
    };
    let prior = spec.resolve(d.n(), d.p())?;
    let mp = match a.inclusion {
        Some(q) => ModelPrior::bernoulli(q).map_err(|e| Error::Config(e.to_string()))?,
        None => ModelPrior::Uniform,
    };
    if a.burn_in >= a.chain_length {
        return Err(Error::Config(format!(
            "burn-in ({}) must be smaller than chain length ({})",
            a.burn_in, a.chain_length
        )));
    }
    let seed = g.seed.unwrap_or(crate::config::DEFAULT_BASE_SEED);
    let res = search_posterior(
        &d,
        &prior,
        &mp,
        a.mode.into(),
        a.chain_length,
        a.burn_in,
        seed,
        &StatsCache::new(),
    )?;
    println!("n = {}, p = {}, prior = {} ({})", d.n(), d.p(), spec.label, prior.family_name());
    println!("models visited: {}", res.visited);
    println!("top model: {}  posterior probability {:.6}", res.top, res.prob(&res.top));
    println!("{:>4}  {:>12}  model", "rank", "probability");
    for (i, (m, w)) in res.ranked(a.top).iter().enumerate() {
        println!("{:>4}  {:>12.6}  {m}", i + 1, w);
    }
    Ok(())
}

fn first_prior(path: &Path) -> Result<PriorSpec> {
    let cfg = ExperimentConfig::from_path(path)?;
    Ok(cfg.priors[0].clone())
}
