//! Estimators of the local parameter `h` and unit-root tests.

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::numeric::std_normal_quantile;
use crate::process::Path;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("g(0) must lie in (0,1), got {0}")]
    G0(f64),
    #[error("mean must be positive, got {0}")]
    Mean(f64),
    #[error("variance must be positive, got {0}")]
    Variance(f64),
    #[error("alpha must lie in (0,1), got {0}")]
    Alpha(f64),
    #[error("degenerate path: plug-in estimates g0_hat = {g0_hat}, mu_hat = {mu_hat}")]
    DegeneratePath { g0_hat: f64, mu_hat: f64 },
    #[error("OLS undefined: all regressors X_0..X_(n-1) are zero")]
    UndefinedOls,
}

/// Result of a unit-root test at level `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestOutcome {
    /// Test statistic (`τ_n` or the down-move count).
    pub statistic: Option<f64>,
    /// Probability of rejecting `θ = 1`; randomized tests report `alpha` on the boundary.
    pub rejection_probability: f64,
    pub alpha: f64,
}

impl TestOutcome {
    /// Realizes the (possibly randomized) decision with a caller-owned stream.
    pub fn draw_decision<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        match self.rejection_probability {
            p if p >= 1.0 => true,
            p if p <= 0.0 => false,
            p => rng.random::<f64>() < p,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), InferenceError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(InferenceError::Alpha(alpha))
    }
}

/// `2 D_n / (g(0) μ_G)`, the efficient estimator for known `G`.
pub fn efficient_estimate(path: &Path, g0: f64, mu: f64) -> Result<f64, InferenceError> {
    if !(g0 > 0.0 && g0 < 1.0) {
        return Err(InferenceError::G0(g0));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(InferenceError::Mean(mu));
    }
    Ok(2.0 * path.down_moves() as f64 / (g0 * mu))
}

/// Consistent plug-in estimates of `g(0)` and `μ_G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PluginEstimates {
    /// Fraction of steps with `X_t = X_{t-1}`.
    pub g0_hat: f64,
    /// `X_n / n`.
    pub mu_hat: f64,
}

pub fn plugin_estimates(path: &Path) -> PluginEstimates {
    let n = path.n() as f64;
    let flat = path.transitions().filter(|(a, b)| a == b).count() as f64;
    PluginEstimates {
        g0_hat: flat / n,
        mu_hat: path.last() as f64 / n,
    }
}

/// Efficient estimator with `g(0)` and `μ_G` replaced by their plug-ins.
pub fn semiparam_estimate(path: &Path) -> Result<f64, InferenceError> {
    let down = path.down_moves();
    if down == 0 {
        return Ok(0.0);
    }
    let PluginEstimates { g0_hat, mu_hat } = plugin_estimates(path);
    if g0_hat == 0.0 || mu_hat == 0.0 {
        return Err(InferenceError::DegeneratePath { g0_hat, mu_hat });
    }
    Ok(2.0 * down as f64 / (g0_hat * mu_hat))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OlsEstimates {
    pub theta_hat: f64,
    /// `n^2 (1 - theta_hat)`; may take either sign.
    pub h_hat_ols: f64,
    #[serde(skip)]
    sum_sq: f64,
}

/// Least squares for `X_t - μ_G = θ X_{t-1} + u_t`.
pub fn ols_estimates(path: &Path, mu: f64) -> Result<OlsEstimates, InferenceError> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(InferenceError::Mean(mu));
    }
    let (mut cross, mut sum_sq) = (0.0, 0.0);
    for (prev, next) in path.transitions() {
        let prev = prev as f64;
        cross += prev * (next as f64 - mu);
        sum_sq += prev * prev;
    }
    if sum_sq == 0.0 {
        return Err(InferenceError::UndefinedOls);
    }
    let theta_hat = cross / sum_sq;
    let n = path.n() as f64;
    Ok(OlsEstimates {
        theta_hat,
        h_hat_ols: n * n * (1.0 - theta_hat),
        sum_sq,
    })
}

/// Dickey–Fuller t-statistic `(θ̂ - 1) / sqrt(σ_G² / Σ X_{t-1}²)`.
pub fn df_statistic(path: &Path, mu: f64, sigma2: f64) -> Result<f64, InferenceError> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(InferenceError::Variance(sigma2));
    }
    let ols = ols_estimates(path, mu)?;
    Ok((ols.theta_hat - 1.0) / (sigma2 / ols.sum_sq).sqrt())
}

/// One-sided Dickey–Fuller decision: reject when `tau` falls below the normal `alpha` quantile.
pub fn df_test(tau: f64, alpha: f64) -> Result<TestOutcome, InferenceError> {
    check_alpha(alpha)?;
    let reject = tau < std_normal_quantile(alpha);
    Ok(TestOutcome {
        statistic: Some(tau),
        rejection_probability: if reject { 1.0 } else { 0.0 },
        alpha,
    })
}

/// Rejects outright after any down move, otherwise with probability `alpha`.
pub fn efficient_test(path: &Path, alpha: f64) -> Result<TestOutcome, InferenceError> {
    check_alpha(alpha)?;
    let down = path.down_moves();
    Ok(TestOutcome {
        statistic: Some(down as f64),
        rejection_probability: if down >= 1 { 1.0 } else { alpha },
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::rng_from_seed;

    fn path(v: &[u64]) -> Path {
        Path::new(v.to_vec()).unwrap()
    }

    #[test]
    fn efficient_estimate_examples() {
        assert_eq!(efficient_estimate(&path(&[0, 1, 2]), 0.5, 1.0).unwrap(), 0.0);
        let p = path(&[0, 3, 2, 4, 3, 5, 4]);
        assert_eq!(p.down_moves(), 3);
        assert_eq!(efficient_estimate(&p, 0.5, 1.0).unwrap(), 12.0);
        assert_eq!(efficient_estimate(&p, 1.0, 1.0), Err(InferenceError::G0(1.0)));
        assert_eq!(efficient_estimate(&p, 0.5, 0.0), Err(InferenceError::Mean(0.0)));
    }

    #[test]
    fn plugin_examples() {
        let est = plugin_estimates(&path(&[0, 1, 1, 3]));
        assert!((est.g0_hat - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(est.mu_hat, 1.0);
    }

    #[test]
    fn semiparam_examples() {
        assert_eq!(semiparam_estimate(&path(&[0, 0, 0])).unwrap(), 0.0);
        assert!(matches!(
            semiparam_estimate(&path(&[0, 1, 1, 0])),
            Err(InferenceError::DegeneratePath { .. })
        ));
        let p = path(&[0, 2, 2, 1, 3]);
        let plug = plugin_estimates(&p);
        assert_eq!(
            semiparam_estimate(&p).unwrap(),
            efficient_estimate(&p, plug.g0_hat, plug.mu_hat).unwrap()
        );
    }

    #[test]
    fn ols_examples() {
        let est = ols_estimates(&path(&[0, 1, 2, 3]), 1.0).unwrap();
        assert_eq!(est.theta_hat, 1.0);
        assert_eq!(est.h_hat_ols, 0.0);
        let est = ols_estimates(&path(&[0, 1, 2, 2]), 1.0).unwrap();
        assert!((est.theta_hat - 0.6).abs() < 1e-15);
        assert!((est.h_hat_ols - 3.6).abs() < 1e-13);
        assert_eq!(ols_estimates(&path(&[0, 0, 0]), 1.0), Err(InferenceError::UndefinedOls));
        // deterministic drift path [0, μ, 2μ, ...]
        for mu in [2u64, 3] {
            let v: Vec<u64> = (0..8).map(|t| t * mu).collect();
            assert_eq!(ols_estimates(&path(&v), mu as f64).unwrap().theta_hat, 1.0);
        }
    }

    #[test]
    fn df_examples() {
        assert_eq!(df_statistic(&path(&[0, 1, 2, 3]), 1.0, 1.0).unwrap(), 0.0);
        let tau = df_statistic(&path(&[0, 1, 2, 2]), 1.0, 1.0).unwrap();
        assert!((tau - (-0.4 * 5f64.sqrt())).abs() < 1e-14);
        assert!(df_statistic(&path(&[0, 1, 2]), 1.0, 0.0).is_err());

        assert_eq!(df_test(0.0, 0.05).unwrap().rejection_probability, 0.0);
        assert_eq!(df_test(-3.0, 0.05).unwrap().rejection_probability, 1.0);
        assert!(df_test(-3.0, 1.0).is_err());
    }

    #[test]
    fn df_rejection_region_is_monotone_in_alpha() {
        let alphas = [0.001, 0.01, 0.05, 0.1, 0.3, 0.7];
        for tau in [-4.0, -2.0, -1.5, -1.0, 0.0, 0.3] {
            let rejects: Vec<f64> = alphas
                .iter()
                .map(|a| df_test(tau, *a).unwrap().rejection_probability)
                .collect();
            assert!(rejects.windows(2).all(|w| w[0] <= w[1]), "tau {tau}");
        }
    }

    #[test]
    fn efficient_test_examples() {
        let up = efficient_test(&path(&[0, 1, 1, 5]), 0.05).unwrap();
        assert_eq!(up.rejection_probability, 0.05);
        let down = efficient_test(&path(&[0, 2, 1]), 0.05).unwrap();
        assert_eq!(down.rejection_probability, 1.0);
        assert!(efficient_test(&path(&[0, 2, 1]), 0.0).is_err());
    }

    #[test]
    fn randomized_decision_frequency() {
        let outcome = efficient_test(&path(&[0, 1]), 0.2).unwrap();
        let mut rng = rng_from_seed(9);
        let hits = (0..20_000).filter(|_| outcome.draw_decision(&mut rng)).count();
        let freq = hits as f64 / 20_000.0;
        assert!((freq - 0.2).abs() < 4.0 * (0.2f64 * 0.8 / 20_000.0).sqrt());
        let sure = efficient_test(&path(&[0, 2, 1]), 0.2).unwrap();
        assert!(sure.draw_decision(&mut rng));
    }
}
