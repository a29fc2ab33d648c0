//! INAR(1) paths: binomial thinning, simulation, and closed-form moments.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dist::InnovationSpec;

/// Up to this many trials the binomial sampler sums Bernoulli draws directly.
const BERNOULLI_SUM_LIMIT: u64 = 64;
/// Inversion chunk size: `(1/2)^512` is still a normal `f64`.
const INVERSION_CHUNK: u64 = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcessError {
    #[error("theta must lie in [0,1], got {0}")]
    Theta(f64),
    #[error("a path needs at least one transition")]
    Empty,
    #[error("paths start at 0, got X_0 = {0}")]
    NonZeroStart(u64),
    #[error("local parameter needs h >= 0, n >= 1 and h/n^2 <= 1 (h = {h}, n = {n})")]
    LocalParam { h: f64, n: u64 },
    #[error("t must be at least 1")]
    ZeroTime,
    #[error("closed form needs theta < 1; use the unit-root branch")]
    UnitRoot,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// An observed trajectory `X_0 = 0, X_1, ..., X_n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Path {
    values: Vec<u64>,
}

impl Path {
    pub fn new(values: Vec<u64>) -> Result<Self, ProcessError> {
        match values.first() {
            None => Err(ProcessError::Empty),
            Some(&x0) if x0 != 0 => Err(ProcessError::NonZeroStart(x0)),
            Some(_) if values.len() < 2 => Err(ProcessError::Empty),
            Some(_) => Ok(Self { values }),
        }
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// Number of transitions.
    pub fn n(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    pub fn last(&self) -> u64 {
        *self.values.last().expect("non-empty")
    }

    /// `(X_{t-1}, X_t)` for `t = 1..=n`.
    pub fn transitions(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.values.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn down_moves(&self) -> u64 {
        down_moves(self)
    }

    /// One integer per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 4);
        for x in &self.values {
            let _ = writeln!(out, "{x}");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x\n");
        for (t, x) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{t},{x}");
        }
        out
    }

    /// Parses the one-integer-per-line format; blank lines are skipped.
    pub fn from_text(text: &str) -> Result<Self, ProcessError> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let x = line.parse::<u64>().map_err(|e| ProcessError::Parse {
                line: i + 1,
                msg: format!("'{line}': {e}"),
            })?;
            values.push(x);
        }
        Self::new(values)
    }
}

/// Local parametrization `theta = 1 - h/n^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalParam {
    h: f64,
    n: u64,
}

impl LocalParam {
    pub fn new(h: f64, n: u64) -> Result<Self, ProcessError> {
        if n == 0 || !(h >= 0.0) || !h.is_finite() || h / (n as f64).powi(2) > 1.0 {
            return Err(ProcessError::LocalParam { h, n });
        }
        Ok(Self { h, n })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// Death probability per individual, `h/n^2`.
    pub fn death_prob(&self) -> f64 {
        self.h / (self.n as f64).powi(2)
    }

    pub fn theta(&self) -> f64 {
        1.0 - self.death_prob()
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<(), ProcessError> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(ProcessError::Theta(theta))
    }
}

/// Binomial thinning `theta ∘ x`: the number of survivors among `x`.
pub fn thin<R: Rng + ?Sized>(x: u64, theta: f64, rng: &mut R) -> Result<u64, ProcessError> {
    check_theta(theta)?;
    Ok(sample_binomial(x, theta, rng))
}

fn sample_binomial<R: Rng + ?Sized>(m: u64, p: f64, rng: &mut R) -> u64 {
    if p == 0.0 || m == 0 {
        return 0;
    }
    if p == 1.0 {
        return m;
    }
    if m <= BERNOULLI_SUM_LIMIT {
        return (0..m).filter(|_| rng.random::<f64>() < p).count() as u64;
    }
    let flip = p > 0.5;
    let q = if flip { 1.0 - p } else { p };
    let mut remaining = m;
    let mut draw = 0;
    while remaining > 0 {
        let chunk = remaining.min(INVERSION_CHUNK);
        draw += invert_binomial(chunk, q, rng);
        remaining -= chunk;
    }
    if flip {
        m - draw
    } else {
        draw
    }
}

/// Sequential CDF inversion for `Binomial(m, q)` with `q <= 1/2`, `m <= INVERSION_CHUNK`.
fn invert_binomial<R: Rng + ?Sized>(m: u64, q: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let odds = q / (1.0 - q);
    let mut k = 0;
    let mut term = (m as f64 * (-q).ln_1p()).exp();
    let mut cdf = term;
    while u >= cdf && k < m {
        term *= (m - k) as f64 / (k + 1) as f64 * odds;
        k += 1;
        cdf += term;
    }
    k
}

/// A simulated path together with the latent draws that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub path: Path,
    /// `ε_t` for `t = 1..=n`.
    pub innovations: Vec<u64>,
    /// `X_{t-1} - θ∘X_{t-1}` for `t = 1..=n`.
    pub deaths: Vec<u64>,
}

impl SimulationTrace {
    /// Whether any step had two or more deaths.
    pub fn has_multiple_deaths(&self) -> bool {
        self.deaths.iter().any(|d| *d >= 2)
    }
}

/// Seeds the stream used by [`simulate_path`].
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn simulate_path(
    spec: &InnovationSpec,
    theta: f64,
    n: u64,
    seed: u64,
) -> Result<Path, ProcessError> {
    simulate_path_with(spec, theta, n, &mut rng_from_seed(seed))
}

pub fn simulate_path_with<R: Rng + ?Sized>(
    spec: &InnovationSpec,
    theta: f64,
    n: u64,
    rng: &mut R,
) -> Result<Path, ProcessError> {
    check_theta(theta)?;
    if n == 0 {
        return Err(ProcessError::Empty);
    }
    let mut values = Vec::with_capacity(n as usize + 1);
    let mut x = 0;
    values.push(x);
    for _ in 0..n {
        x = sample_binomial(x, theta, rng) + spec.sample(rng);
        values.push(x);
    }
    Ok(Path { values })
}

/// Like [`simulate_path_with`], also recording innovations and deaths.
/// Consumes the stream identically, so the path matches the plain simulator.
pub fn simulate_trace_with<R: Rng + ?Sized>(
    spec: &InnovationSpec,
    theta: f64,
    n: u64,
    rng: &mut R,
) -> Result<SimulationTrace, ProcessError> {
    check_theta(theta)?;
    if n == 0 {
        return Err(ProcessError::Empty);
    }
    let mut values = Vec::with_capacity(n as usize + 1);
    let mut innovations = Vec::with_capacity(n as usize);
    let mut deaths = Vec::with_capacity(n as usize);
    let mut x = 0;
    values.push(x);
    for _ in 0..n {
        let survivors = sample_binomial(x, theta, rng);
        let eps = spec.sample(rng);
        deaths.push(x - survivors);
        innovations.push(eps);
        x = survivors + eps;
        values.push(x);
    }
    Ok(SimulationTrace {
        path: Path { values },
        innovations,
        deaths,
    })
}

/// `1 - theta^t` without cancellation near `theta = 1`.
fn one_minus_pow(theta: f64, t: u64) -> f64 {
    if t == 0 {
        0.0
    } else {
        -(t as f64 * theta.ln()).exp_m1()
    }
}

/// `(E X_t, Var X_t)` under `theta`, started from `X_0 = 0`.
pub fn theoretical_moments(
    theta: f64,
    t: u64,
    spec: &InnovationSpec,
) -> Result<(f64, f64), ProcessError> {
    check_theta(theta)?;
    if t == 0 {
        return Err(ProcessError::ZeroTime);
    }
    let (mu, sigma2) = spec.moments();
    if theta == 1.0 {
        return Ok((mu * t as f64, sigma2 * t as f64));
    }
    let one_minus = 1.0 - theta;
    let mean = mu * one_minus_pow(theta, t) / one_minus;
    let denom = one_minus * (1.0 + theta);
    let var = one_minus_pow(theta, 2 * t) / denom * sigma2
        + theta * one_minus_pow(theta, t - 1) * one_minus_pow(theta, t) / denom * mu;
    Ok((mean, var))
}

/// `E_θ Σ_{t=1}^n X_t` for `θ < 1`.
pub fn expected_path_sum(theta: f64, n: u64, mu: f64) -> Result<f64, ProcessError> {
    check_theta(theta)?;
    if theta == 1.0 {
        return Err(ProcessError::UnitRoot);
    }
    let one_minus = 1.0 - theta;
    Ok(mu * (n as f64 / one_minus - theta * one_minus_pow(theta, n) / (one_minus * one_minus)))
}

/// `E_1 Σ_{t=1}^n X_t = μ n(n+1)/2`.
pub fn expected_path_sum_unit_root(n: u64, mu: f64) -> f64 {
    mu * (n as f64) * (n as f64 + 1.0) / 2.0
}

/// Whether `h (X_t + 1)/n^2 < 1/2` for every `t < n`.
pub fn stability_event(path: &Path, h: f64) -> bool {
    let n2 = (path.n() as f64).powi(2);
    path.values[..path.values.len() - 1]
        .iter()
        .all(|&x| h * (x as f64 + 1.0) / n2 < 0.5)
}

/// Number of downward steps, `Σ 1{X_t < X_{t-1}}`.
pub fn down_moves(path: &Path) -> u64 {
    path.transitions().filter(|(a, b)| b < a).count() as u64
}
