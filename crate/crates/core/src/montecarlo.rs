//! Reproducible replication harness.
//!
//! Every replication draws from its own ChaCha8 stream seeded by
//! [`stream_seed`], a SplitMix64 chain over `(master_seed, experiment, h index,
//! n index, replication)`. Results are collected in replication order and
//! folded sequentially, so summaries are bit-identical for any thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::dist::InnovationSpec;
use crate::extreal::ExtReal;
use crate::inference::{df_statistic, efficient_estimate, efficient_test, ols_estimates, semiparam_estimate};
use crate::likelihood::loglr_approx;
use crate::limitexp::positive_part_tv;
use crate::numeric::{fmt_sig12, poisson_ln_pmf, round_sig12, std_normal_cdf, std_normal_quantile};
use crate::process::{
    expected_path_sum, expected_path_sum_unit_root, simulate_path_with, simulate_trace_with,
    stability_event, theoretical_moments, LocalParam,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonteCarloError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("histogram has no counts")]
    EmptyHistogram,
    #[error("no samples to summarize")]
    EmptySamples,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Law of the down-move count against its Poisson limit.
    DownMoveLaw,
    /// Likelihood ratios against the data-generating `h0`.
    LrLaw,
    /// Efficient and plug-in estimators of `h`.
    EstimatorRisk,
    /// Growth of the OLS estimator of `h`.
    OlsExplosion,
    /// Size of the Dickey–Fuller test.
    DfSize,
    /// Expected power of the down-move test.
    EfficientPower,
    /// Path moments and multiple-death frequencies.
    MomentCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::DownMoveLaw,
        Experiment::LrLaw,
        Experiment::EstimatorRisk,
        Experiment::OlsExplosion,
        Experiment::DfSize,
        Experiment::EfficientPower,
        Experiment::MomentCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::DownMoveLaw => "down_move_law",
            Experiment::LrLaw => "lr_law",
            Experiment::EstimatorRisk => "estimator_risk",
            Experiment::OlsExplosion => "ols_explosion",
            Experiment::DfSize => "df_size",
            Experiment::EfficientPower => "efficient_power",
            Experiment::MomentCheck => "moment_check",
        }
    }

    fn tag(self) -> u64 {
        // FNV-1a of the name, fixed across platforms and enum reorderings
        self.name().bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

fn default_alpha() -> f64 {
    0.05
}

/// An acceptance bound on the rows of one experiment, optionally restricted to one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub experiment: Experiment,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default)]
    pub max_discrepancy: Option<f64>,
    #[serde(default)]
    pub min_estimate: Option<f64>,
    #[serde(default)]
    pub max_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub spec: InnovationSpec,
    pub h_grid: Vec<f64>,
    /// Data-generating local parameter for `lr_law`.
    #[serde(default)]
    pub h0: f64,
    pub n_grid: Vec<u64>,
    pub replications: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub master_seed: u64,
    pub targets: Vec<Experiment>,
    #[serde(default)]
    pub thresholds: Vec<Threshold>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), MonteCarloError> {
        let bad = |msg: String| Err(MonteCarloError::Config(msg));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0,1), got {}", self.alpha));
        }
        if self.h_grid.is_empty() || self.n_grid.is_empty() {
            return bad("h_grid and n_grid must be non-empty".into());
        }
        if self.targets.is_empty() {
            return bad("no targets selected".into());
        }
        let mut hs = self.h_grid.clone();
        if self.targets.contains(&Experiment::LrLaw) {
            hs.push(self.h0);
        }
        for &n in &self.n_grid {
            for &h in &hs {
                LocalParam::new(h, n).map_err(|e| MonteCarloError::Config(e.to_string()))?;
            }
        }
        Ok(())
    }
}

/// Aggregated result of one `(experiment, h, n)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub experiment: Experiment,
    pub h: f64,
    pub n: u64,
    pub reps: u64,
    /// Replications in which some statistic of the cell could not be computed.
    /// They still contribute to the statistics that could.
    pub failures: u64,
    #[serde(serialize_with = "ser_sig12")]
    pub estimate: f64,
    #[serde(serialize_with = "ser_opt_sig12")]
    pub theory: Option<f64>,
    #[serde(serialize_with = "ser_opt_sig12")]
    pub discrepancy: Option<f64>,
    #[serde(serialize_with = "ser_sig12")]
    pub mc_se: f64,
    #[serde(serialize_with = "ser_map_sig12")]
    pub details: BTreeMap<String, f64>,
}

impl SummaryRow {
    fn new(experiment: Experiment, h: f64, n: u64, reps: u64) -> Self {
        Self {
            experiment,
            h,
            n,
            reps,
            failures: 0,
            estimate: f64::NAN,
            theory: None,
            discrepancy: None,
            mc_se: 0.0,
            details: BTreeMap::new(),
        }
    }

    fn set(&mut self, estimate: f64, theory: Option<f64>, mc_se: f64) {
        self.estimate = estimate;
        self.theory = theory;
        self.discrepancy = theory.map(|t| (estimate - t).abs());
        self.mc_se = mc_se;
    }

    fn detail(&mut self, key: &str, value: f64) {
        self.details.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.details.get(key).copied()
    }
}

fn ser_sig12<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    ExtReal::from_f64(*x).serialize(s)
}

fn ser_opt_sig12<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_sig12(v, s),
        None => s.serialize_none(),
    }
}

fn ser_map_sig12<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
    let rounded: BTreeMap<&str, ExtReal> = m
        .iter()
        .map(|(k, v)| (k.as_str(), ExtReal::from_f64(round_sig12(*v))))
        .collect();
    rounded.serialize(s)
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the stream used by one replication.
pub fn stream_seed(
    master_seed: u64,
    experiment: Experiment,
    h_index: usize,
    n_index: usize,
    replication: u64,
) -> u64 {
    [experiment.tag(), h_index as u64, n_index as u64, replication]
        .iter()
        .fold(splitmix64(master_seed), |acc, part| splitmix64(acc ^ splitmix64(*part)))
}

/// Mean, variance and moments of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimatorSummary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance (0 for a single sample).
    pub variance: f64,
    pub bias: f64,
    /// `variance / variance_bound`; `NaN` when the bound is zero.
    pub variance_ratio: f64,
    /// Standard error of the mean.
    pub mean_se: f64,
    /// Large-sample standard error of the variance, from the fourth central moment.
    pub variance_se: f64,
}

pub fn summarize_estimator(
    samples: &[f64],
    true_h: f64,
    variance_bound: f64,
) -> Result<EstimatorSummary, MonteCarloError> {
    if samples.is_empty() {
        return Err(MonteCarloError::EmptySamples);
    }
    let count = samples.len();
    let r = count as f64;
    let mean = samples.iter().sum::<f64>() / r;
    let m2 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    let m4 = samples.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / r;
    let variance = if count > 1 { m2 / (r - 1.0) } else { 0.0 };
    let pop_var = m2 / r;
    Ok(EstimatorSummary {
        count,
        mean,
        variance,
        bias: mean - true_h,
        variance_ratio: if variance_bound > 0.0 { variance / variance_bound } else { f64::NAN },
        mean_se: (variance / r).sqrt(),
        variance_se: ((m4 - pop_var * pop_var).max(0.0) / r).sqrt(),
    })
}

/// Total variation between the empirical law of `histogram` (counts at 0, 1, ...)
/// and `Poisson(lambda)`.
pub fn empirical_tv(histogram: &[u64], lambda: f64) -> Result<f64, MonteCarloError> {
    let total: u64 = histogram.iter().sum();
    if total == 0 {
        return Err(MonteCarloError::EmptyHistogram);
    }
    let pmf: Vec<f64> = histogram.iter().map(|c| *c as f64 / total as f64).collect();
    Ok(positive_part_tv(&pmf, lambda))
}

/// Kolmogorov–Smirnov distance between a sample and the standard normal law.
pub fn ks_statistic_normal(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let r = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = std_normal_cdf(*x);
            (f - i as f64 / r).max((i + 1) as f64 / r - f)
        })
        .fold(0.0, f64::max)
}

/// Critical value of the one-sample KS test at `level`, using the asymptotic
/// Kolmogorov law with the usual small-sample correction.
pub fn ks_critical(level: f64, sample_size: usize) -> f64 {
    let c = (-(level / 2.0).ln() / 2.0).sqrt();
    let sq = (sample_size as f64).sqrt();
    c / (sq + 0.12 + 0.11 / sq)
}

fn histogram(counts: impl Iterator<Item = u64>) -> Vec<u64> {
    let mut hist = Vec::new();
    for c in counts {
        let c = c as usize;
        if hist.len() <= c {
            hist.resize(c + 1, 0);
        }
        hist[c] += 1;
    }
    hist
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let r = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / r;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `|a - b|` of extended reals, zero for equal infinities.
fn ext_gap(a: ExtReal, b: ExtReal) -> f64 {
    match (a, b) {
        (ExtReal::Finite(x), ExtReal::Finite(y)) => (x - y).abs(),
        (x, y) if x == y => 0.0,
        _ => f64::INFINITY,
    }
}

/// Bins log-likelihood ratios on the atoms `drift + z log(h/h0)` of the limit
/// law and returns the total variation to `Poisson(h0 λ)` over `z`.
pub fn binned_limit_tv(loglrs: &[ExtReal], h: f64, h0: f64, lambda_unit: f64) -> Option<f64> {
    if !(h > 0.0 && h0 > 0.0 && h != h0) || loglrs.is_empty() {
        return None;
    }
    let drift = -(h - h0) * lambda_unit;
    let step = (h / h0).ln();
    let mut hist: Vec<u64> = Vec::new();
    let mut unbinned = 0u64;
    for l in loglrs {
        match l.finite() {
            Some(v) => {
                let z = ((v - drift) / step).round().max(0.0) as usize;
                if hist.len() <= z {
                    hist.resize(z + 1, 0);
                }
                hist[z] += 1;
            }
            None => unbinned += 1,
        }
    }
    let total = loglrs.len() as f64;
    let pmf: Vec<f64> = hist.iter().map(|c| *c as f64 / total).collect();
    // mass outside every atom counts fully against the match
    Some(positive_part_tv(&pmf, h0 * lambda_unit) + unbinned as f64 / total)
}

/// Runs every target on the `h_grid × n_grid` design using the global rayon pool.
pub fn run_replications(config: &ExperimentConfig) -> Result<Vec<SummaryRow>, MonteCarloError> {
    config.validate()?;
    let mut rows = Vec::new();
    let mut targets = config.targets.clone();
    targets.sort();
    targets.dedup();
    for experiment in targets {
        for (n_index, &n) in config.n_grid.iter().enumerate() {
            for (h_index, &h) in config.h_grid.iter().enumerate() {
                rows.push(run_cell(config, experiment, h_index, h, n_index, n));
            }
        }
    }
    Ok(rows)
}

/// Like [`run_replications`] on a dedicated pool of `threads` workers.
pub fn run_replications_with_threads(
    config: &ExperimentConfig,
    threads: usize,
) -> Result<Vec<SummaryRow>, MonteCarloError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| MonteCarloError::ThreadPool(e.to_string()))?;
    pool.install(|| run_replications(config))
}

fn replicate<T: Send>(
    config: &ExperimentConfig,
    experiment: Experiment,
    h_index: usize,
    n_index: usize,
    f: impl Fn(&mut ChaCha8Rng) -> T + Sync + Send,
) -> Vec<T> {
    (0..config.replications)
        .into_par_iter()
        .map(|r| {
            let seed = stream_seed(config.master_seed, experiment, h_index, n_index, r);
            f(&mut ChaCha8Rng::seed_from_u64(seed))
        })
        .collect()
}

fn run_cell(
    config: &ExperimentConfig,
    experiment: Experiment,
    h_index: usize,
    h: f64,
    n_index: usize,
    n: u64,
) -> SummaryRow {
    let spec = &config.spec;
    let (mu, sigma2) = spec.moments();
    let lambda_unit = spec.g0() * mu / 2.0;
    let theta = LocalParam::new(h, n).expect("validated").theta();
    let reps = config.replications;
    let mut row = SummaryRow::new(experiment, h, n, reps);
    let sim = |rng: &mut ChaCha8Rng| simulate_path_with(spec, theta, n, rng).expect("validated");
    macro_rules! run {
        ($f:expr) => {
            replicate(config, experiment, h_index, n_index, $f)
        };
    }

    match experiment {
        Experiment::DownMoveLaw => {
            let counts: Vec<u64> = run!(|rng: &mut ChaCha8Rng| sim(rng).down_moves());
            let hist = histogram(counts.iter().copied());
            let poisson_mean = h * lambda_unit;
            let tv = empirical_tv(&hist, poisson_mean).expect("reps >= 1");
            let se: f64 = 0.5
                * hist
                    .iter()
                    .map(|c| {
                        let p = *c as f64 / reps as f64;
                        (p * (1.0 - p) / reps as f64).sqrt()
                    })
                    .sum::<f64>();
            row.set(tv, Some(0.0), se);
            let as_f64: Vec<f64> = counts.iter().map(|c| *c as f64).collect();
            let s = summarize_estimator(&as_f64, poisson_mean, poisson_mean).expect("non-empty");
            row.detail("poisson_mean", poisson_mean);
            row.detail("mean_down_moves", s.mean);
            row.detail("var_down_moves", s.variance);
            row.detail("freq_zero", hist[0] as f64 / reps as f64);
        }
        Experiment::LrLaw => {
            let h0 = config.h0;
            let theta0 = LocalParam::new(h0, n).expect("validated").theta();
            let reports: Vec<_> = run!(|rng: &mut ChaCha8Rng| {
                let path = simulate_path_with(spec, theta0, n, rng).expect("validated");
                loglr_approx(spec, &path, h, h0).ok()
            });
            let ok: Vec<_> = reports.iter().flatten().collect();
            row.failures = (reports.len() - ok.len()) as u64;
            let lrs: Vec<f64> = ok.iter().map(|r| r.exact.exp()).collect();
            let (mean_lr, se) = mean_and_se(&lrs);
            let theory = if h0 > 0.0 { 1.0 } else { (-h * lambda_unit).exp() };
            row.set(mean_lr, Some(theory), se);
            let finite_log: Vec<f64> = ok.iter().filter_map(|r| r.exact.finite()).collect();
            row.detail("h0", h0);
            row.detail("mean_loglr", mean_and_se(&finite_log).0);
            row.detail("frac_loglr_infinite", 1.0 - finite_log.len() as f64 / ok.len().max(1) as f64);
            let gaps_leading: Vec<f64> = ok.iter().map(|r| ext_gap(r.exact, r.leading_only)).collect();
            let gaps_approx: Vec<f64> = ok.iter().map(|r| ext_gap(r.exact, r.approx)).collect();
            row.detail("mean_abs_exact_minus_leading", mean_and_se(&gaps_leading).0);
            row.detail("mean_abs_exact_minus_approx", mean_and_se(&gaps_approx).0);
            let exact: Vec<ExtReal> = ok.iter().map(|r| r.exact).collect();
            if let Some(tv) = binned_limit_tv(&exact, h, h0, lambda_unit) {
                row.detail("tv_limit_law", tv);
            }
        }
        Experiment::EstimatorRisk => {
            let g0 = spec.g0();
            let pairs: Vec<(f64, Option<f64>)> = run!(|rng: &mut ChaCha8Rng| {
                let path = sim(rng);
                let eff = efficient_estimate(&path, g0, mu).unwrap_or(f64::NAN);
                (eff, semiparam_estimate(&path).ok())
            });
            let effs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let bound = 2.0 * h / (g0 * mu);
            let s = summarize_estimator(&effs, h, bound).expect("non-empty");
            row.failures = pairs.iter().filter(|p| p.1.is_none() || p.0.is_nan()).count() as u64;
            row.set(s.mean, Some(h), s.mean_se);
            let gaps: Vec<f64> = pairs.iter().filter_map(|(e, s)| s.map(|s| (s - e).abs())).collect();
            row.detail("variance", s.variance);
            row.detail("variance_se", s.variance_se);
            row.detail("variance_bound", bound);
            if bound > 0.0 {
                row.detail("variance_ratio", s.variance_ratio);
            }
            row.detail("bias", s.bias);
            row.detail("mean_abs_semiparam_gap", mean_and_se(&gaps).0);
            row.detail("semiparam_failures", (pairs.len() - gaps.len()) as f64);
        }
        Experiment::OlsExplosion => {
            let ests: Vec<Option<f64>> = run!(|rng: &mut ChaCha8Rng| ols_estimates(&sim(rng), mu).ok().map(|o| o.h_hat_ols));
            let mut abs: Vec<f64> = ests.iter().flatten().map(|x| x.abs()).collect();
            row.failures = (ests.len() - abs.len()) as u64;
            abs.sort_by(f64::total_cmp);
            let median = quantile(&abs, 0.5);
            let (mean_abs, se_mean) = mean_and_se(&abs);
            // normal-theory standard error of a median
            row.set(median, None, se_mean * (std::f64::consts::PI / 2.0).sqrt());
            row.detail("mean_abs", mean_abs);
            row.detail("q25_abs", quantile(&abs, 0.25));
            row.detail("q75_abs", quantile(&abs, 0.75));
            row.detail("efficient_rmse", (2.0 * h / (spec.g0() * mu)).sqrt());
        }
        Experiment::DfSize => {
            let taus: Vec<Option<f64>> = run!(|rng: &mut ChaCha8Rng| df_statistic(&sim(rng), mu, sigma2).ok());
            let ok: Vec<f64> = taus.iter().flatten().copied().collect();
            row.failures = (taus.len() - ok.len()) as u64;
            let crit = std_normal_quantile(config.alpha);
            let rejections: Vec<f64> = ok.iter().map(|t| if *t < crit { 1.0 } else { 0.0 }).collect();
            let (freq, se) = mean_and_se(&rejections);
            row.set(freq, Some(config.alpha), se);
            let (mean_tau, _) = mean_and_se(&ok);
            row.detail("mean_tau", mean_tau);
            row.detail("ks_statistic", ks_statistic_normal(&ok));
            row.detail("ks_critical_0.001", ks_critical(0.001, ok.len()));
        }
        Experiment::EfficientPower => {
            let alpha = config.alpha;
            let probs: Vec<f64> = run!(|rng: &mut ChaCha8Rng| {
                efficient_test(&sim(rng), alpha).expect("validated alpha").rejection_probability
            });
            let (power, se) = mean_and_se(&probs);
            let theory = if h == 0.0 {
                alpha
            } else {
                1.0 - (1.0 - alpha) * (-h * lambda_unit).exp()
            };
            row.set(power, Some(theory), se);
            let any_down = probs.iter().filter(|p| **p == 1.0).count() as f64 / reps as f64;
            row.detail("freq_any_down", any_down);
        }
        Experiment::MomentCheck => {
            let recs: Vec<(f64, bool, bool, f64)> = run!(|rng: &mut ChaCha8Rng| {
                let trace = simulate_trace_with(spec, theta, n, rng).expect("validated");
                let sum: u64 = trace.path.values().iter().sum();
                (
                    sum as f64 / (n * n) as f64,
                    trace.has_multiple_deaths(),
                    stability_event(&trace.path, h),
                    trace.path.last() as f64,
                )
            });
            let scaled: Vec<f64> = recs.iter().map(|r| r.0).collect();
            let (mean, se) = mean_and_se(&scaled);
            row.set(mean, Some(mu / 2.0), se);
            let exact = if theta < 1.0 {
                expected_path_sum(theta, n, mu).expect("theta < 1")
            } else {
                expected_path_sum_unit_root(n, mu)
            };
            row.detail("exact_scaled_mean", exact / (n * n) as f64);
            row.detail("freq_multiple_deaths", recs.iter().filter(|r| r.1).count() as f64 / reps as f64);
            row.detail("freq_stability_event", recs.iter().filter(|r| r.2).count() as f64 / reps as f64);
            let last: Vec<f64> = recs.iter().map(|r| r.3).collect();
            let s = summarize_estimator(&last, 0.0, 0.0).expect("non-empty");
            let (m_th, v_th) = theoretical_moments(theta, n, spec).expect("validated");
            row.detail("mean_x_n", s.mean);
            row.detail("theory_mean_x_n", m_th);
            row.detail("var_x_n", s.variance);
            row.detail("theory_var_x_n", v_th);
        }
    }
    row
}

/// Rows that break a configured threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdViolation {
    pub experiment: Experiment,
    pub h: f64,
    pub n: u64,
    pub reason: String,
}

pub fn check_thresholds(rows: &[SummaryRow], thresholds: &[Threshold]) -> Vec<ThresholdViolation> {
    let mut out = Vec::new();
    for t in thresholds {
        let matching = rows.iter().filter(|r| {
            r.experiment == t.experiment
                && t.h.is_none_or(|h| h == r.h)
                && t.n.is_none_or(|n| n == r.n)
        });
        for row in matching {
            let mut fail = |reason: String| {
                out.push(ThresholdViolation {
                    experiment: row.experiment,
                    h: row.h,
                    n: row.n,
                    reason,
                })
            };
            if let Some(max) = t.max_discrepancy {
                match row.discrepancy {
                    Some(d) if d <= max => {}
                    Some(d) => fail(format!("discrepancy {} > {}", fmt_sig12(d), fmt_sig12(max))),
                    None => fail("no theory value to compare against".into()),
                }
            }
            if let Some(min) = t.min_estimate {
                if !(row.estimate >= min) {
                    fail(format!("estimate {} < {}", fmt_sig12(row.estimate), fmt_sig12(min)));
                }
            }
            if let Some(max) = t.max_estimate {
                if !(row.estimate <= max) {
                    fail(format!("estimate {} > {}", fmt_sig12(row.estimate), fmt_sig12(max)));
                }
            }
        }
    }
    out
}

pub const CSV_HEADER: &str = "experiment,h,n,reps,failures,estimate,theory,discrepancy,mc_se";

pub fn rows_to_csv(rows: &[SummaryRow]) -> String {
    let opt = |x: Option<f64>| x.map(fmt_sig12).unwrap_or_default();
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.experiment.name(),
            fmt_sig12(r.h),
            r.n,
            r.reps,
            r.failures,
            fmt_sig12(r.estimate),
            opt(r.theory),
            opt(r.discrepancy),
            fmt_sig12(r.mc_se),
        );
    }
    out
}

/// The Poisson pmf restricted to `0..len`, handy for building synthetic histograms.
pub fn poisson_weights(lambda: f64, len: usize) -> Vec<f64> {
    (0..len as u64).map(|z| poisson_ln_pmf(lambda, z).exp()).collect()
}
