//! The Poisson limit experiment: one draw `Z ~ Poisson(h λ)` with
//! `λ = g(0) μ_G / 2`, plus Poisson-approximation oracles.

use serde::Serialize;
use thiserror::Error;

use crate::dist::InnovationSpec;
use crate::numeric::poisson_ln_pmf;

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("lambda unit must be positive and finite, got {0}")]
    LambdaUnit(f64),
    #[error("likelihood ratio undefined: h = h0 = 0 with z = {0} >= 1")]
    Undefined(u64),
    #[error("h must be non-negative and finite, got {0}")]
    LocalParam(f64),
    #[error("alpha must lie in (0,1), got {0}")]
    Alpha(f64),
    #[error("probabilities must lie in [0,1], got {0}")]
    Prob(f64),
    #[error("dependence terms must be non-negative, got {0}")]
    Dependence(f64),
    #[error("distribution sums to {0}, expected 1 within 1e-12")]
    NotNormalized(f64),
    #[error("poisson mean must be non-negative, got {0}")]
    PoissonMean(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitExperiment {
    lambda_unit: f64,
}

impl LimitExperiment {
    pub fn new(lambda_unit: f64) -> Result<Self, LimitError> {
        if lambda_unit > 0.0 && lambda_unit.is_finite() {
            Ok(Self { lambda_unit })
        } else {
            Err(LimitError::LambdaUnit(lambda_unit))
        }
    }

    /// `λ = g(0) μ_G / 2`; fails when `g(0) = 0`.
    pub fn from_spec(spec: &InnovationSpec) -> Result<Self, LimitError> {
        Self::new(spec.g0() * spec.mean() / 2.0)
    }

    pub fn lambda_unit(&self) -> f64 {
        self.lambda_unit
    }

    /// Poisson mean of `Q_h`.
    pub fn mean(&self, h: f64) -> f64 {
        h * self.lambda_unit
    }

    /// `dQ_h/dQ_h0 (z)`; at `h0 = 0` the version `exp(-hλ) 1{z = 0}`.
    pub fn limit_lr(&self, z: u64, h: f64, h0: f64) -> Result<f64, LimitError> {
        check_h(h)?;
        check_h(h0)?;
        if h0 == 0.0 {
            return match (z, h == 0.0) {
                (0, _) => Ok((-h * self.lambda_unit).exp()),
                (_, true) => Err(LimitError::Undefined(z)),
                (_, false) => Ok(0.0),
            };
        }
        if h == h0 {
            return Ok(1.0);
        }
        let drift = -(h - h0) * self.lambda_unit;
        if z == 0 {
            Ok(drift.exp())
        } else if h == 0.0 {
            Ok(0.0)
        } else {
            Ok((drift + z as f64 * (h / h0).ln()).exp())
        }
    }

    /// `z/λ = 2z/(g(0) μ_G)`, unbiased for `h` under `Q_h`.
    pub fn limit_efficient_estimator(&self, z: u64) -> f64 {
        z as f64 / self.lambda_unit
    }

    /// Variance of the efficient estimator under `Q_h`, `2h/(g(0) μ_G)`.
    pub fn variance_bound(&self, h: f64) -> f64 {
        h / self.lambda_unit
    }

    /// Power `E_h φ(Z) = 1 - (1 - α) e^{-hλ}` of the UMP test; exactly `α` at `h = 0`.
    pub fn limit_test_power(&self, h: f64, alpha: f64) -> Result<f64, LimitError> {
        check_h(h)?;
        check_alpha(alpha)?;
        if h == 0.0 {
            return Ok(alpha);
        }
        Ok(1.0 - (1.0 - alpha) * (-h * self.lambda_unit).exp())
    }
}

/// The UMP level-`alpha` test in the limit experiment: `alpha` at `z = 0`, else 1.
pub fn ump_test(z: u64, alpha: f64) -> Result<f64, LimitError> {
    check_alpha(alpha)?;
    Ok(if z == 0 { alpha } else { 1.0 })
}

fn check_h(h: f64) -> Result<(), LimitError> {
    if h >= 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(LimitError::LocalParam(h))
    }
}

fn check_alpha(alpha: f64) -> Result<(), LimitError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(LimitError::Alpha(alpha))
    }
}

/// `Σ p_t² + Σ d_t`: total-variation bound between a sum of 0–1 variables with
/// means `p_t` and the Poisson law with the same mean. `d_t` are the expected
/// conditional-mean deviations; pass an empty slice for independent indicators.
pub fn serfling_bound(indicator_means: &[f64], dependence_terms: &[f64]) -> Result<f64, LimitError> {
    if let Some(p) = indicator_means.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(LimitError::Prob(*p));
    }
    if let Some(d) = dependence_terms.iter().find(|d| !(**d >= 0.0)) {
        return Err(LimitError::Dependence(*d));
    }
    Ok(indicator_means.iter().map(|p| p * p).sum::<f64>() + dependence_terms.iter().sum::<f64>())
}

/// Law of a sum of independent Bernoulli(`p_i`) by convolution.
pub fn poisson_binomial_pmf(probs: &[f64]) -> Result<Vec<f64>, LimitError> {
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(LimitError::Prob(*p));
    }
    let mut pmf = vec![1.0];
    for &p in probs {
        let mut next = vec![0.0; pmf.len() + 1];
        for (k, mass) in pmf.iter().enumerate() {
            next[k] += mass * (1.0 - p);
            next[k + 1] += mass * p;
        }
        pmf = next;
    }
    Ok(pmf)
}

/// `sup_A |P(S ∈ A) - P(Y ∈ A)|` for `S` with the given finite pmf and
/// `Y ~ Poisson(lambda)`, computed as `Σ_z (P(S=z) - P(Y=z))^+`.
pub fn exact_tv_vs_poisson(dist: &[f64], lambda: f64) -> Result<f64, LimitError> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(LimitError::PoissonMean(lambda));
    }
    if let Some(p) = dist.iter().find(|p| !(**p >= 0.0)) {
        return Err(LimitError::Prob(*p));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(LimitError::NotNormalized(total));
    }
    Ok(positive_part_tv(dist, lambda))
}

pub(crate) fn positive_part_tv(pmf: &[f64], lambda: f64) -> f64 {
    pmf.iter()
        .enumerate()
        .map(|(z, p)| (p - poisson_ln_pmf(lambda, z as u64).exp()).max(0.0))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::poisson_pmf;

    fn geo_exp() -> LimitExperiment {
        LimitExperiment::from_spec(&InnovationSpec::geometric(0.5).unwrap()).unwrap()
    }

    #[test]
    fn construction() {
        assert_eq!(geo_exp().lambda_unit(), 0.25);
        assert!(LimitExperiment::new(0.0).is_err());
        let no_zero = InnovationSpec::table(&[0.0, 1.0]).unwrap();
        assert!(LimitExperiment::from_spec(&no_zero).is_err());
    }

    #[test]
    fn limit_lr_examples() {
        let e = geo_exp();
        for z in 0..5 {
            assert_eq!(e.limit_lr(z, 1.3, 1.3).unwrap(), 1.0);
        }
        let lr = e.limit_lr(0, 2.0, 0.0).unwrap();
        // pmf-ratio oracle
        let ratio = poisson_pmf(0.5, 0) / 1.0;
        assert!((lr - ratio).abs() < 1e-15);
        assert!((lr - 0.6065306597126334).abs() < 1e-15);
        assert_eq!(e.limit_lr(1, 2.0, 0.0).unwrap(), 0.0);
        assert_eq!(e.limit_lr(1, 0.0, 0.0), Err(LimitError::Undefined(1)));
        assert_eq!(e.limit_lr(0, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(e.limit_lr(2, 0.0, 1.0).unwrap(), 0.0);
        // pmf-ratio oracle for h0 > 0
        for z in 0..8 {
            let ratio = poisson_pmf(3.0 * 0.25, z) / poisson_pmf(0.25, z);
            assert!((e.limit_lr(z, 3.0, 1.0).unwrap() - ratio).abs() < 1e-12 * ratio);
        }
    }

    #[test]
    fn change_of_measure_identity() {
        let e = geo_exp();
        for (h, h0) in [(2.0, 1.0), (0.0, 1.0), (5.0, 0.5), (0.3, 4.0)] {
            let total: f64 = (0..200)
                .map(|z| e.limit_lr(z, h, h0).unwrap() * poisson_pmf(e.mean(h0), z))
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "h={h} h0={h0}: {total}");
        }
    }

    #[test]
    fn estimator_examples() {
        let e = LimitExperiment::new(0.5 * 1.0 / 2.0).unwrap();
        assert_eq!(e.limit_efficient_estimator(0), 0.0);
        assert_eq!(e.limit_efficient_estimator(3), 12.0);
        assert_eq!(e.variance_bound(4.0), 16.0);
        for h in [0.5, 1.0, 4.0] {
            let mean: f64 = (0..300)
                .map(|z| e.limit_efficient_estimator(z) * poisson_pmf(e.mean(h), z))
                .sum();
            assert!((mean - h).abs() < 1e-10);
            let var: f64 = (0..300)
                .map(|z| (e.limit_efficient_estimator(z) - h).powi(2) * poisson_pmf(e.mean(h), z))
                .sum();
            assert!((var - e.variance_bound(h)).abs() < 1e-9);
        }
    }

    #[test]
    fn power_examples() {
        let e = LimitExperiment::new(1.0).unwrap();
        assert_eq!(e.limit_test_power(0.0, 0.05).unwrap(), 0.05);
        let power = e.limit_test_power(1.0, 0.05).unwrap();
        assert!((power - 0.6505145308871298).abs() < 1e-14);
        let by_sum: f64 = (0..100)
            .map(|z| ump_test(z, 0.05).unwrap() * poisson_pmf(1.0, z))
            .sum();
        assert!((power - by_sum).abs() < 1e-12);
        let hs = [0.0, 0.1, 0.5, 1.0, 3.0, 10.0];
        let powers: Vec<f64> = hs.iter().map(|h| e.limit_test_power(*h, 0.05).unwrap()).collect();
        assert!(powers.windows(2).all(|w| w[0] < w[1]));
        assert!(e.limit_test_power(40.0, 0.05).unwrap() > 1.0 - 1e-12);
        for h in hs {
            let alt = 0.05 + 0.95 * (1.0 - (-h * e.lambda_unit()).exp());
            assert!((e.limit_test_power(h, 0.05).unwrap() - alt).abs() < 1e-12);
        }
        assert!(e.limit_test_power(1.0, 0.0).is_err());
    }

    #[test]
    fn serfling_examples() {
        assert_eq!(serfling_bound(&[0.0, 0.0], &[]).unwrap(), 0.0);
        assert!((serfling_bound(&[0.1], &[]).unwrap() - 0.01).abs() < 1e-17);
        assert!((serfling_bound(&[0.1, 0.2], &[0.0, 0.05]).unwrap() - 0.10).abs() < 1e-15);
        assert!(serfling_bound(&[1.2], &[]).is_err());
        assert!(serfling_bound(&[0.2], &[-0.1]).is_err());
    }

    #[test]
    fn tv_examples() {
        // Poisson(2) truncated once the tail is below 1e-13
        let mut dist = Vec::new();
        let mut acc = 0.0;
        let mut z = 0;
        while 1.0 - acc > 1e-13 {
            let p = poisson_pmf(2.0, z);
            dist.push(p);
            acc += p;
            z += 1;
        }
        assert!(exact_tv_vs_poisson(&dist, 2.0).unwrap() < 1e-11);

        let tv = exact_tv_vs_poisson(&[0.9, 0.1], 0.1).unwrap();
        assert!((tv - 0.009516258196404045).abs() < 1e-15);
        assert!(tv <= serfling_bound(&[0.1], &[]).unwrap());

        let tv = exact_tv_vs_poisson(&[1.0], 1.0).unwrap();
        assert!((tv - 0.6321205588285577).abs() < 1e-15);

        assert!(matches!(exact_tv_vs_poisson(&[0.5, 0.4], 1.0), Err(LimitError::NotNormalized(_))));
        assert_eq!(exact_tv_vs_poisson(&[1.0], 0.0).unwrap(), 0.0);
    }

    #[test]
    fn poisson_binomial_matches_enumeration() {
        let ps = [0.1, 0.25, 0.3];
        let pmf = poisson_binomial_pmf(&ps).unwrap();
        let mut brute = [0.0; 4];
        for mask in 0u32..8 {
            let mut prob = 1.0;
            for (i, p) in ps.iter().enumerate() {
                prob *= if mask >> i & 1 == 1 { *p } else { 1.0 - p };
            }
            brute[mask.count_ones() as usize] += prob;
        }
        for (a, b) in pmf.iter().zip(brute) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
