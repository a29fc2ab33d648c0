//! Command-line interface of the `inar` binary.
//!
//! Numbers are printed with 12 significant digits. Structured results go to
//! stdout as JSON; paths are newline-separated integers starting at 0.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::dist::InnovationSpec;
use crate::extreal::ExtReal;
use crate::inference::{
    df_statistic, df_test, efficient_estimate, efficient_test, ols_estimates, semiparam_estimate,
};
use crate::likelihood::{transition_prob, transition_split};
use crate::limitexp::{exact_tv_vs_poisson, poisson_binomial_pmf, serfling_bound, LimitExperiment};
use crate::montecarlo::{check_thresholds, rows_to_csv, run_replications, run_replications_with_threads, ExperimentConfig};
use crate::numeric::fmt_sig12;
use crate::process::{simulate_path, LocalParam, Path};

/// Environment variable capping the harness thread pool.
pub const THREADS_ENV: &str = "INAR_THREADS";

/// Exit status when an experiment breaks one of its configured thresholds.
pub const EXIT_THRESHOLD: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "inar", version, about = "Nearly unstable INAR(1) toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a path started at 0.
    Simulate(SimulateArgs),
    /// Transition probability P(X_t = to | X_{t-1} = from).
    Transition(TransitionArgs),
    /// Estimate h from a path file.
    Estimate(EstimateArgs),
    /// Test the unit root on a path file.
    Utest(UtestArgs),
    /// Quantities of the Poisson limit experiment.
    Limit(LimitArgs),
    /// Run a Monte Carlo experiment described by a JSON config.
    Experiment(ExperimentArgs),
}

/// `h,n` pair for the local parametrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HN {
    pub h: f64,
    pub n: u64,
}

fn parse_hn(s: &str) -> Result<HN, String> {
    let (h, n) = s.split_once(',').ok_or("expected h,n")?;
    Ok(HN {
        h: h.trim().parse().map_err(|_| format!("bad h '{h}'"))?,
        n: n.trim().parse().map_err(|_| format!("bad n '{n}'"))?,
    })
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated numbers")?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad number '{t}'"));
    Ok((num(a)?, num(b)?))
}

fn parse_spec(s: &str) -> Result<InnovationSpec, String> {
    s.parse().map_err(|e: crate::dist::DistError| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathFormat {
    Text,
    Csv,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_spec)]
    pub dist: InnovationSpec,
    #[arg(long, conflicts_with = "local", required_unless_present = "local")]
    pub theta: Option<f64>,
    /// Local parametrization θ = 1 - h/n².
    #[arg(long, value_parser = parse_hn, value_name = "H,N")]
    pub local: Option<HN>,
    /// Path length; defaults to the n of --local.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PathFormat::Text)]
    pub format: PathFormat,
}

#[derive(Debug, Args)]
pub struct TransitionArgs {
    #[arg(long, value_parser = parse_spec)]
    pub dist: InnovationSpec,
    #[arg(long, required_unless_present = "split")]
    pub theta: Option<f64>,
    #[arg(long)]
    pub from: u64,
    #[arg(long)]
    pub to: u64,
    /// Also report the leading/remainder split at θ = 1 - h/n².
    #[arg(long, value_parser = parse_hn, value_name = "H,N")]
    pub split: Option<HN>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateMode {
    Efficient,
    Semiparam,
    Ols,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub path: PathBuf,
    #[arg(long, value_enum)]
    pub mode: EstimateMode,
    #[arg(long)]
    pub g0: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Take g(0) and the mean from this distribution when not given explicitly.
    #[arg(long, value_parser = parse_spec)]
    pub dist: Option<InnovationSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestKind {
    Df,
    Efficient,
}

#[derive(Debug, Args)]
pub struct UtestArgs {
    #[arg(long)]
    pub path: PathBuf,
    #[arg(long, value_enum)]
    pub test: TestKind,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long, value_parser = parse_spec)]
    pub dist: Option<InnovationSpec>,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    #[arg(long, value_parser = parse_spec)]
    pub dist: Option<InnovationSpec>,
    /// Limit likelihood ratio dQ_h/dQ_h0 at --z.
    #[arg(long, requires_all = ["h0", "z"])]
    pub h: Option<f64>,
    #[arg(long)]
    pub h0: Option<f64>,
    #[arg(long)]
    pub z: Option<u64>,
    /// Power of the UMP test at h and level alpha.
    #[arg(long, value_parser = parse_pair, value_name = "H,ALPHA")]
    pub power: Option<(f64, f64)>,
    /// Total variation between a Bernoulli sum and the Poisson law with the same mean.
    #[arg(long, requires = "probs")]
    pub tv: bool,
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Directory receiving summary.csv and summary.json.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; overrides the INAR_THREADS environment variable.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Parses `args` (including the program name) and runs the command, writing to `stdout`.
/// Returns the process exit status on success.
pub fn run_cli<I, T, W>(args: I, stdout: &mut W) -> Result<u8>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = Cli::try_parse_from(args)?;
    run_command(cli.command, stdout)
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let mut stdout = std::io::stdout().lock();
    match run_command(cli.command, &mut stdout) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn run_command<W: Write>(command: Command, out: &mut W) -> Result<u8> {
    match command {
        Command::Simulate(a) => simulate(a, out),
        Command::Transition(a) => transition(a, out),
        Command::Estimate(a) => estimate(a, out),
        Command::Utest(a) => utest(a, out),
        Command::Limit(a) => limit(a, out),
        Command::Experiment(a) => experiment(a, out),
    }
}

fn num(x: f64) -> Value {
    serde_json::to_value(ExtReal::from_f64(x)).expect("plain value")
}

fn emit<W: Write>(out: &mut W, value: &Value) -> Result<u8> {
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(0)
}

fn read_path(file: &PathBuf) -> Result<Path> {
    let text = fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    Path::from_text(&text).with_context(|| format!("parsing path file {}", file.display()))
}

fn simulate<W: Write>(a: SimulateArgs, out: &mut W) -> Result<u8> {
    let (theta, n) = match (a.theta, a.local) {
        (Some(theta), _) => (theta, a.n.ok_or_else(|| anyhow!("--n is required with --theta"))?),
        (None, Some(hn)) => {
            let n = a.n.unwrap_or(hn.n);
            (LocalParam::new(hn.h, hn.n)?.theta(), n)
        }
        (None, None) => bail!("one of --theta or --local is required"),
    };
    let path = simulate_path(&a.dist, theta, n, a.seed)?;
    let text = match a.format {
        PathFormat::Text => path.to_text(),
        PathFormat::Csv => path.to_csv(),
    };
    match a.out {
        Some(file) => fs::write(&file, text).with_context(|| format!("writing {}", file.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn transition<W: Write>(a: TransitionArgs, out: &mut W) -> Result<u8> {
    let theta = match (a.theta, a.split) {
        (Some(t), _) => t,
        (None, Some(hn)) => LocalParam::new(hn.h, hn.n)?.theta(),
        (None, None) => bail!("one of --theta or --split is required"),
    };
    let mut value = json!({ "probability": num(transition_prob(&a.dist, theta, a.from, a.to)?) });
    if let Some(hn) = a.split {
        let s = transition_split(&a.dist, hn.h, hn.n, a.from, a.to)?;
        value["leading"] = num(s.leading);
        value["remainder"] = num(s.remainder);
    }
    emit(out, &value)
}

fn estimate<W: Write>(a: EstimateArgs, out: &mut W) -> Result<u8> {
    let path = read_path(&a.path)?;
    let mu = a.mu.or(a.dist.as_ref().map(InnovationSpec::mean));
    let g0 = a.g0.or(a.dist.as_ref().map(InnovationSpec::g0));
    let need_mu = || mu.ok_or_else(|| anyhow!("--mu (or --dist) is required"));
    let value = match a.mode {
        EstimateMode::Efficient => {
            let g0 = g0.ok_or_else(|| anyhow!("--g0 (or --dist) is required"))?;
            json!({ "mode": "efficient", "estimate": num(efficient_estimate(&path, g0, need_mu()?)?) })
        }
        EstimateMode::Semiparam => {
            json!({ "mode": "semiparam", "estimate": num(semiparam_estimate(&path)?) })
        }
        EstimateMode::Ols => {
            let ols = ols_estimates(&path, need_mu()?)?;
            json!({ "mode": "ols", "estimate": num(ols.h_hat_ols), "theta_hat": num(ols.theta_hat) })
        }
    };
    emit(out, &value)
}

fn utest<W: Write>(a: UtestArgs, out: &mut W) -> Result<u8> {
    let path = read_path(&a.path)?;
    let outcome = match a.test {
        TestKind::Efficient => efficient_test(&path, a.alpha)?,
        TestKind::Df => {
            let mu = a.mu.or(a.dist.as_ref().map(InnovationSpec::mean));
            let sigma2 = a.sigma2.or(a.dist.as_ref().map(InnovationSpec::variance));
            let (mu, sigma2) = mu
                .zip(sigma2)
                .ok_or_else(|| anyhow!("--mu and --sigma2 (or --dist) are required for df"))?;
            df_test(df_statistic(&path, mu, sigma2)?, a.alpha)?
        }
    };
    emit(
        out,
        &json!({
            "test": match a.test { TestKind::Df => "df", TestKind::Efficient => "efficient" },
            "statistic": outcome.statistic.map(num),
            "rejection_probability": num(outcome.rejection_probability),
            "alpha": num(outcome.alpha),
        }),
    )
}

fn limit<W: Write>(a: LimitArgs, out: &mut W) -> Result<u8> {
    let experiment = || -> Result<LimitExperiment> {
        let spec = a.dist.as_ref().ok_or_else(|| anyhow!("--dist is required"))?;
        Ok(LimitExperiment::from_spec(spec)?)
    };
    let mut value = serde_json::Map::new();
    if let (Some(h), Some(h0), Some(z)) = (a.h, a.h0, a.z) {
        let e = experiment()?;
        value.insert("lambda_unit".into(), num(e.lambda_unit()));
        value.insert("limit_lr".into(), num(e.limit_lr(z, h, h0)?));
        value.insert("estimator".into(), num(e.limit_efficient_estimator(z)));
    }
    if let Some((h, alpha)) = a.power {
        let e = experiment()?;
        value.insert("power".into(), num(e.limit_test_power(h, alpha)?));
        value.insert("variance_bound".into(), num(e.variance_bound(h)));
    }
    if a.tv {
        let probs = a.probs.unwrap_or_default();
        let pmf = poisson_binomial_pmf(&probs)?;
        let lambda: f64 = probs.iter().sum();
        value.insert("tv".into(), num(exact_tv_vs_poisson(&pmf, lambda)?));
        value.insert("bound".into(), num(serfling_bound(&probs, &[])?));
    }
    if value.is_empty() {
        bail!("nothing to compute: pass --h/--h0/--z, --power or --tv");
    }
    emit(out, &Value::Object(value))
}

fn thread_cap(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("{THREADS_ENV}='{v}'"))?;
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn experiment<W: Write>(a: ExperimentArgs, out: &mut W) -> Result<u8> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading {}", a.config.display()))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", a.config.display()))?;
    let rows = match thread_cap(a.threads)? {
        Some(t) if t > 0 => run_replications_with_threads(&config, t)?,
        _ => run_replications(&config)?,
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let csv = rows_to_csv(&rows);
    fs::write(a.out.join("summary.csv"), &csv)?;
    fs::write(a.out.join("summary.json"), serde_json::to_string_pretty(&rows)?)?;
    out.write_all(csv.as_bytes())?;
    let violations = check_thresholds(&rows, &config.thresholds);
    for v in &violations {
        eprintln!("threshold violated: {} h={} n={}: {}", v.experiment.name(), fmt_sig12(v.h), v.n, v.reason);
    }
    Ok(if violations.is_empty() { 0 } else { EXIT_THRESHOLD })
}
