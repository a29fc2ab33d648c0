//! Exact INAR(1) transition probabilities and log-likelihood ratios near the unit root.
//!
//! A transition `x -> y` under survival probability `θ` has probability
//! `Σ_k b_{x,1-θ}(k) g(y - x + k)`, the sum running over the number of deaths
//! `k`. All sums are accumulated in log space. Sums over deaths stop once the
//! binomial tail bound `b(r) r(1-q)/(r - xq)` drops below `e^-40` times the
//! running total, which is below `f64` resolution.

use serde::Serialize;
use thiserror::Error;

use crate::dist::InnovationSpec;
use crate::extreal::{ExtReal, LogAccumulator, Undefined};
use crate::numeric::{ln_choose, LogSumExp};
use crate::process::{check_theta, LocalParam, Path, ProcessError};

const LN_TRUNCATION: f64 = -40.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LikelihoodError {
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error("both models assign probability zero to the path")]
    BothZero,
    #[error("tail bound needs r > m p (r = {r}, m p = {mp})")]
    TailDomain { r: u64, mp: f64 },
    #[error("probability must lie in (0,1), got {0}")]
    Prob(f64),
}

impl From<Undefined> for LikelihoodError {
    fn from(_: Undefined) -> Self {
        LikelihoodError::BothZero
    }
}

/// `ln b_{m,p}(k)`; `-inf` outside `[0, m]`.
pub fn binom_ln_pmf(m: u64, p: f64, k: i64) -> f64 {
    if k < 0 || k as u64 > m {
        return f64::NEG_INFINITY;
    }
    let k = k as u64;
    let (kf, rest) = (k as f64, (m - k) as f64);
    let ln_p_part = if k == 0 { 0.0 } else { kf * p.ln() };
    let ln_q_part = if k == m { 0.0 } else { rest * (-p).ln_1p() };
    ln_choose(m, k) + ln_p_part + ln_q_part
}

/// `b_{m,p}(k)`, zero outside `[0, m]`.
pub fn binom_pmf(m: u64, p: f64, k: i64) -> f64 {
    binom_ln_pmf(m, p, k).exp()
}

/// Exact binomial upper tail next to its closed-form bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    /// `Σ_{k=r}^m b_{m,p}(k)`.
    pub exact_tail: f64,
    /// `b_{m,p}(r) r(1-p)/(r - mp)`.
    pub bound: f64,
    /// `2 b_{m,p}(r)`, offered when `r ∈ {2,3}` and `mp < 1`.
    pub doubled_term: Option<f64>,
}

pub fn binom_tail_bound(m: u64, p: f64, r: u64) -> Result<TailBound, LikelihoodError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(LikelihoodError::Prob(p));
    }
    let mp = m as f64 * p;
    if r as f64 <= mp {
        return Err(LikelihoodError::TailDomain { r, mp });
    }
    let term_r = binom_pmf(m, p, r as i64);
    // smallest terms first
    let exact_tail: f64 = (r..=m).rev().map(|k| binom_pmf(m, p, k as i64)).sum();
    // the factor is >= 1 whenever r <= m; clamping removes rounding below 1
    let factor = (r as f64 * (1.0 - p) / (r as f64 - mp)).max(1.0);
    let doubled_term = ((r == 2 || r == 3) && mp < 1.0).then_some(2.0 * term_r);
    Ok(TailBound {
        exact_tail,
        bound: term_r * factor,
        doubled_term,
    })
}

/// `ln Σ_{k=k_lo}^{k_hi} b_{m,q}(k) g(d + k)` with `g(i) = 0` for `i < 0`.
fn ln_death_sum(spec: &InnovationSpec, m: u64, q: f64, d: i64, k_lo: u64, k_hi: u64) -> f64 {
    let mut lo = k_lo.max(if d < 0 { d.unsigned_abs() } else { 0 });
    let mut hi = k_hi.min(m);
    if let Some(top) = spec.support_max() {
        let cap = top as i64 - d;
        if cap < 0 {
            return f64::NEG_INFINITY;
        }
        hi = hi.min(cap as u64);
    }
    if q == 0.0 {
        hi = 0;
    } else if q == 1.0 {
        lo = lo.max(m);
    }
    if lo > hi {
        return f64::NEG_INFINITY;
    }
    let ln_g = |k: u64| spec.ln_pmf((d + k as i64) as u64);
    if q == 0.0 || q == 1.0 {
        return ln_g(lo);
    }

    let mq = m as f64 * q;
    let ln_odds = q.ln() - (-q).ln_1p();
    let mut ln_b = binom_ln_pmf(m, q, lo as i64);
    let mut acc = LogSumExp::new();
    let mut k = lo;
    loop {
        acc.add(ln_b + ln_g(k));
        if k == hi {
            break;
        }
        let next_ln_b = ln_b + (((m - k) as f64) / ((k + 1) as f64)).ln() + ln_odds;
        let r = (k + 1) as f64;
        if r > mq {
            let ln_tail = next_ln_b + (r * (1.0 - q) / (r - mq)).ln();
            let total = acc.ln_value();
            if total > f64::NEG_INFINITY && ln_tail < total + LN_TRUNCATION {
                break;
            }
        }
        ln_b = next_ln_b;
        k += 1;
    }
    acc.ln_value()
}

fn ln_transition_q(spec: &InnovationSpec, q: f64, x_prev: u64, x_next: u64) -> f64 {
    let d = x_next as i64 - x_prev as i64;
    ln_death_sum(spec, x_prev, q, d, 0, x_prev)
}

/// Smallest admissible death count for the step `x_prev -> x_next`.
fn first_death_count(x_prev: u64, x_next: u64) -> u64 {
    x_prev.saturating_sub(x_next)
}

/// `ln P(X_t = x_next | X_{t-1} = x_prev)` under survival probability `theta`.
pub fn transition_ln_prob(
    spec: &InnovationSpec,
    theta: f64,
    x_prev: u64,
    x_next: u64,
) -> Result<f64, LikelihoodError> {
    check_theta(theta)?;
    Ok(ln_transition_q(spec, 1.0 - theta, x_prev, x_next))
}

pub fn transition_prob(
    spec: &InnovationSpec,
    theta: f64,
    x_prev: u64,
    x_next: u64,
) -> Result<f64, LikelihoodError> {
    transition_ln_prob(spec, theta, x_prev, x_next).map(f64::exp)
}

/// Transition probability at `θ = 1 - h/n^2` split by death count: the two
/// smallest admissible counts form the leading term, the rest the remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransitionSplit {
    pub leading: f64,
    pub remainder: f64,
    #[serde(skip)]
    pub ln_leading: f64,
    #[serde(skip)]
    pub ln_remainder: f64,
}

fn split_q(spec: &InnovationSpec, q: f64, x_prev: u64, x_next: u64) -> TransitionSplit {
    let d = x_next as i64 - x_prev as i64;
    let k0 = first_death_count(x_prev, x_next);
    let ln_leading = ln_death_sum(spec, x_prev, q, d, k0, k0 + 1);
    let ln_remainder = ln_death_sum(spec, x_prev, q, d, k0 + 2, x_prev);
    TransitionSplit {
        leading: ln_leading.exp(),
        remainder: ln_remainder.exp(),
        ln_leading,
        ln_remainder,
    }
}

pub fn transition_split(
    spec: &InnovationSpec,
    h: f64,
    n: u64,
    x_prev: u64,
    x_next: u64,
) -> Result<TransitionSplit, LikelihoodError> {
    let local = LocalParam::new(h, n)?;
    Ok(split_q(spec, local.death_prob(), x_prev, x_next))
}

/// Log-likelihood of the path's transitions under `theta`.
pub fn loglik(spec: &InnovationSpec, theta: f64, path: &Path) -> Result<ExtReal, LikelihoodError> {
    check_theta(theta)?;
    Ok(loglik_q(spec, 1.0 - theta, path))
}

fn loglik_q(spec: &InnovationSpec, q: f64, path: &Path) -> ExtReal {
    let mut acc = LogAccumulator::default();
    for (a, b) in path.transitions() {
        acc.add(ExtReal::from_f64(ln_transition_q(spec, q, a, b)));
    }
    acc.total().expect("log-likelihood has no +inf terms")
}

/// `ln(num) - ln(den)` for one transition's probabilities.
fn ln_ratio(ln_num: f64, ln_den: f64) -> Result<ExtReal, LikelihoodError> {
    match (ln_num == f64::NEG_INFINITY, ln_den == f64::NEG_INFINITY) {
        (true, true) => Err(LikelihoodError::BothZero),
        (true, false) => Ok(ExtReal::NegInf),
        (false, true) => Ok(ExtReal::PosInf),
        (false, false) => Ok(ExtReal::Finite(ln_num - ln_den)),
    }
}

fn loglr_q(
    spec: &InnovationSpec,
    path: &Path,
    q: f64,
    q0: f64,
) -> Result<ExtReal, LikelihoodError> {
    if q == q0 {
        return Ok(ExtReal::ZERO);
    }
    let mut acc = LogAccumulator::default();
    for (a, b) in path.transitions() {
        acc.add(ln_ratio(
            ln_transition_q(spec, q, a, b),
            ln_transition_q(spec, q0, a, b),
        )?);
    }
    Ok(acc.total()?)
}

/// `log dP_θ/dP_θ0` of the path, summed transition by transition.
pub fn loglr_theta(
    spec: &InnovationSpec,
    path: &Path,
    theta: f64,
    theta0: f64,
) -> Result<ExtReal, LikelihoodError> {
    check_theta(theta)?;
    check_theta(theta0)?;
    loglr_q(spec, path, 1.0 - theta, 1.0 - theta0)
}

fn death_probs(path: &Path, h: f64, h0: f64) -> Result<(f64, f64), LikelihoodError> {
    let n = path.n();
    Ok((
        LocalParam::new(h, n)?.death_prob(),
        LocalParam::new(h0, n)?.death_prob(),
    ))
}

/// Exact log-likelihood ratio of `θ = 1 - h/n^2` against `θ = 1 - h0/n^2`, `n` from the path.
///
/// Equals `+inf` when only the numerator model can produce the path (for
/// instance `h > 0 = h0` on a path with a down move).
pub fn loglr_exact(
    spec: &InnovationSpec,
    path: &Path,
    h: f64,
    h0: f64,
) -> Result<ExtReal, LikelihoodError> {
    let (q, q0) = death_probs(path, h, h0)?;
    loglr_q(spec, path, q, q0)
}

/// Log-likelihood ratio built from the leading terms of the transition split only.
pub fn loglr_leading(
    spec: &InnovationSpec,
    path: &Path,
    h: f64,
    h0: f64,
) -> Result<ExtReal, LikelihoodError> {
    let (q, q0) = death_probs(path, h, h0)?;
    if q == q0 {
        return Ok(ExtReal::ZERO);
    }
    let mut acc = LogAccumulator::default();
    for (a, b) in path.transitions() {
        acc.add(ln_ratio(
            split_q(spec, q, a, b).ln_leading,
            split_q(spec, q0, a, b).ln_leading,
        )?);
    }
    Ok(acc.total()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogLikelihoodReport {
    pub exact: ExtReal,
    pub leading_only: ExtReal,
    /// `drift_term + log(h/h0) · down_count` with the indicator convention at `h0 = 0`.
    pub approx: ExtReal,
    /// `-(h - h0) g(0) μ_G / 2`.
    pub drift_term: f64,
    pub down_count: u64,
}

/// `log(h/h0) · count` under `log 0 = -inf`, `log(0)·0 = 0`; for `h0 = 0 < h`
/// any down move sends the statistic to `-inf`, matching the limit ratio
/// `exp(-h g(0) μ_G/2) 1{Z = 0}`.
fn down_move_term(h: f64, h0: f64, count: u64) -> ExtReal {
    if count == 0 || h == h0 {
        ExtReal::ZERO
    } else if h == 0.0 || h0 == 0.0 {
        ExtReal::NegInf
    } else {
        ExtReal::Finite((h / h0).ln()).times_count(count)
    }
}

pub fn loglr_approx(
    spec: &InnovationSpec,
    path: &Path,
    h: f64,
    h0: f64,
) -> Result<LogLikelihoodReport, LikelihoodError> {
    let exact = loglr_exact(spec, path, h, h0)?;
    let leading_only = loglr_leading(spec, path, h, h0)?;
    let down_count = path.down_moves();
    let drift_term = -(h - h0) * spec.g0() * spec.mean() / 2.0;
    let approx = ExtReal::Finite(drift_term)
        .checked_add(down_move_term(h, h0, down_count))
        .expect("finite drift");
    Ok(LogLikelihoodReport {
        exact,
        leading_only,
        approx,
        drift_term,
        down_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pois1() -> InnovationSpec {
        InnovationSpec::poisson(1.0).unwrap()
    }

    fn path(v: &[u64]) -> Path {
        Path::new(v.to_vec()).unwrap()
    }

    #[test]
    fn binom_pmf_examples() {
        assert_eq!(binom_pmf(7, 0.0, 0), 1.0);
        assert_eq!(binom_pmf(0, 0.3, 0), 1.0);
        assert_eq!(binom_pmf(7, 0.0, 1), 0.0);
        assert_eq!(binom_pmf(4, 1.0, 4), 1.0);
        // 2·0.1·0.9, equal to the Bernoulli convolution
        assert!((binom_pmf(2, 0.1, 1) - 0.18).abs() < 1e-14);
        assert!((binom_pmf(3, 0.5, 1) - 0.375).abs() < 1e-14);
        assert!((binom_pmf(3, 0.5, 1) - binom_pmf(3, 0.5, 2)).abs() < 1e-15);
        assert_eq!(binom_pmf(3, 0.5, -1), 0.0);
        assert_eq!(binom_pmf(3, 0.5, 4), 0.0);
        // large m stays finite and sums to one
        let total: f64 = (0..=5000).map(|k| binom_pmf(5000, 0.5, k)).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn tail_bound_examples() {
        let tb = binom_tail_bound(10, 0.05, 2).unwrap();
        assert!((tb.exact_tail - 0.0861383558993164).abs() < 1e-13);
        assert!((tb.bound - 0.09453741145869138).abs() < 1e-13);
        assert!(tb.exact_tail <= tb.bound);

        let tb = binom_tail_bound(8, 0.3, 8).unwrap();
        assert!((tb.exact_tail - 0.3f64.powi(8)).abs() < 1e-18);
        assert!(tb.exact_tail <= tb.bound);

        let tb = binom_tail_bound(20, 0.04, 2).unwrap();
        let doubled = tb.doubled_term.unwrap();
        assert!(tb.bound <= doubled && tb.exact_tail <= doubled);

        assert!(binom_tail_bound(10, 0.05, 4).unwrap().doubled_term.is_none());
        assert!(matches!(binom_tail_bound(10, 0.5, 5), Err(LikelihoodError::TailDomain { .. })));
        assert!(matches!(binom_tail_bound(10, 0.0, 2), Err(LikelihoodError::Prob(_))));
    }

    #[test]
    fn transition_examples() {
        let spec = pois1();
        for d in 0..6 {
            let p = transition_prob(&spec, 1.0, 4, 4 + d).unwrap();
            assert!((p - spec.pmf(d)).abs() < 1e-15);
        }
        assert_eq!(transition_prob(&spec, 1.0, 4, 3).unwrap(), 0.0);
        for (theta, y) in [(0.3, 0), (0.9, 4), (0.0, 2)] {
            let p = transition_prob(&spec, theta, 0, y).unwrap();
            assert!((p - spec.pmf(y)).abs() < 1e-15);
        }
        // enumeration of (survivors, immigrants): 0.19 e^{-1}
        let p = transition_prob(&spec, 0.9, 2, 1).unwrap();
        assert!((p - 0.06989709382257403).abs() < 1e-14);
        assert!(transition_prob(&spec, 1.1, 2, 1).is_err());
        // theta = 0: everything dies
        let p = transition_prob(&spec, 0.0, 5, 2).unwrap();
        assert!((p - spec.pmf(2)).abs() < 1e-15);
    }

    #[test]
    fn split_examples() {
        let spec = pois1();
        let s = transition_split(&spec, 0.0, 10, 3, 5).unwrap();
        assert_eq!(s.remainder, 0.0);
        assert!((s.leading - spec.pmf(2)).abs() < 1e-15);

        for (x, y) in [(0, 3), (1, 0), (1, 4)] {
            assert_eq!(transition_split(&spec, 2.0, 10, x, y).unwrap().remainder, 0.0);
        }

        // term-by-term values frozen from an independent evaluation
        let s = transition_split(&spec, 2.0, 10, 3, 5).unwrap();
        assert!((s.leading - 0.1766557076505266).abs() < 1e-13);
        assert!((s.remainder - 1.805061791347877e-05).abs() < 1e-17);
        let full = transition_prob(&spec, 0.98, 3, 5).unwrap();
        assert!(((s.leading + s.remainder) - full).abs() < 1e-12 * full);
    }

    #[test]
    fn loglik_examples() {
        let spec = InnovationSpec::geometric(0.5).unwrap();
        let p = path(&[0, 1, 1, 4]);
        let expected: f64 = [1u64, 0, 3].iter().map(|d| spec.pmf(*d).ln()).sum();
        let got = loglik(&spec, 1.0, &p).unwrap().finite().unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert_eq!(loglik(&spec, 1.0, &path(&[0, 2, 1])).unwrap(), ExtReal::NegInf);
    }

    #[test]
    fn loglik_normalizes_over_short_paths() {
        // all paths X_0 = 0, X_1, X_2 with states <= 2M
        let spec = InnovationSpec::table(&[1.0, 2.0, 3.0]).unwrap();
        let max_state = 4;
        for theta in [0.0, 0.4, 1.0] {
            let mut total = 0.0;
            for x1 in 0..=max_state {
                for x2 in 0..=max_state {
                    total += loglik(&spec, theta, &path(&[0, x1, x2])).unwrap().exp();
                }
            }
            assert!((total - 1.0).abs() < 1e-12, "theta {theta}: {total}");
        }
    }

    #[test]
    fn loglr_examples() {
        let spec = InnovationSpec::geometric(0.5).unwrap();
        let p = path(&[0, 3, 2, 5, 4, 4]);
        assert_eq!(loglr_exact(&spec, &p, 1.5, 1.5).unwrap(), ExtReal::ZERO);
        assert_eq!(loglr_exact(&spec, &p, 0.0, 1.0).unwrap(), ExtReal::NegInf);
        assert_eq!(loglr_exact(&spec, &p, 1.0, 0.0).unwrap(), ExtReal::PosInf);
        assert_eq!(loglr_exact(&spec, &p, 0.0, 0.0).unwrap(), ExtReal::ZERO);
        assert_eq!(loglr_leading(&spec, &p, 2.0, 2.0).unwrap(), ExtReal::ZERO);
        // h/n^2 > 1
        assert!(loglr_exact(&spec, &p, 26.0, 1.0).is_err());
    }

    #[test]
    fn both_zero_is_an_error() {
        // a jump of +3 in one step is impossible for support {0,1} at any theta
        let spec = InnovationSpec::table(&[1.0, 1.0]).unwrap();
        let p = path(&[0, 1, 4]);
        assert_eq!(loglr_theta(&spec, &p, 0.5, 0.9), Err(LikelihoodError::BothZero));
    }

    #[test]
    fn leading_equals_exact_when_states_stay_small() {
        let spec = InnovationSpec::table(&[1.0, 1.0]).unwrap();
        let p = path(&[0, 1, 0, 1, 1, 0, 0, 1]);
        let exact = loglr_exact(&spec, &p, 2.0, 1.0).unwrap();
        let leading = loglr_leading(&spec, &p, 2.0, 1.0).unwrap();
        assert_eq!(exact, leading);
    }

    #[test]
    fn approx_examples() {
        let geo = InnovationSpec::geometric(0.5).unwrap();
        let up = path(&[0, 1, 3, 3, 4]);
        let r = loglr_approx(&geo, &up, 2.0, 0.0).unwrap();
        assert_eq!(r.approx, ExtReal::Finite(-0.5));
        assert_eq!(r.down_count, 0);

        let down = path(&[0, 2, 1, 3]);
        let r = loglr_approx(&geo, &down, 2.0, 0.0).unwrap();
        assert_eq!(r.approx, ExtReal::NegInf);
        assert_eq!(r.exact, ExtReal::PosInf);

        // g(0) μ_G = 1/2, h = 3, h0 = 1, two down moves
        let p = path(&[0, 3, 2, 4, 3]);
        let r = loglr_approx(&geo, &p, 3.0, 1.0).unwrap();
        assert_eq!(r.down_count, 2);
        assert!((r.approx.finite().unwrap() - 1.6972245773362196).abs() < 1e-12);
        assert_eq!(r.drift_term, -0.5);

        let r = loglr_approx(&geo, &p, 0.0, 1.0).unwrap();
        assert_eq!(r.approx, ExtReal::NegInf);
        assert_eq!(r.exact, ExtReal::NegInf);
    }
}
