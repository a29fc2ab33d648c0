//! Chi-square goodness of fit of the samplers, 10^5 seeded draws each.

use inar::process::{rng_from_seed, thin};
use inar::InnovationSpec;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};

const DRAWS: usize = 100_000;

/// Pearson statistic with cells merged until each expects at least 5 draws.
/// Returns `(statistic, degrees of freedom)`.
fn pearson(counts: &[u64], probs: &[f64]) -> (f64, usize) {
    let total = counts.iter().sum::<u64>() as f64;
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (c, p) in counts.iter().zip(probs) {
        obs += *c as f64;
        exp += p * total;
        if exp >= 5.0 {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    // leftover tail mass, including everything beyond the listed support
    let tail_exp = exp + (1.0 - probs.iter().sum::<f64>()).max(0.0) * total;
    let tail_obs = obs + (total - counts.iter().sum::<u64>() as f64);
    match cells.last_mut() {
        Some(last) if tail_exp < 5.0 => {
            last.0 += tail_obs;
            last.1 += tail_exp;
        }
        _ => cells.push((tail_obs, tail_exp)),
    }
    let stat = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, cells.len() - 1)
}

fn critical_001(df: usize) -> f64 {
    ChiSquared::new(df as f64).unwrap().inverse_cdf(0.999)
}

fn check_spec(spec: InnovationSpec, seed: u64) {
    let mut rng = rng_from_seed(seed);
    let mut counts = vec![0u64; 200];
    for _ in 0..DRAWS {
        let k = spec.sample(&mut rng) as usize;
        assert!(k < counts.len(), "{spec}: draw {k} outside the tabulated range");
        counts[k] += 1;
    }
    let probs: Vec<f64> = (0..counts.len() as u64).map(|k| spec.pmf(k)).collect();
    let (stat, df) = pearson(&counts, &probs);
    assert!(stat < critical_001(df), "{spec}: chi2 {stat} on {df} df");
}

#[test]
fn poisson_sampler() {
    check_spec(InnovationSpec::poisson(1.0).unwrap(), 1);
    check_spec(InnovationSpec::poisson(3.5).unwrap(), 2);
    check_spec(InnovationSpec::poisson(40.0).unwrap(), 3);
}

#[test]
fn geometric_sampler() {
    check_spec(InnovationSpec::geometric(0.5).unwrap(), 4);
    check_spec(InnovationSpec::geometric(0.2).unwrap(), 5);
}

#[test]
fn table_sampler() {
    check_spec(InnovationSpec::table(&[0.2, 0.5, 0.3]).unwrap(), 6);
    check_spec(InnovationSpec::table(&[1.0, 1.0, 1.0, 1.0, 1.0, 5.0]).unwrap(), 7);
}

#[test]
fn thinning_sampler() {
    // small counts use Bernoulli sums, large ones inversion; p above and below 1/2
    for (x, theta, seed) in [(20u64, 0.9, 8u64), (20, 0.3, 9), (200, 0.97, 10), (1000, 0.999, 11), (500, 0.2, 12)] {
        let mut rng = rng_from_seed(seed);
        let mut counts = vec![0u64; x as usize + 1];
        for _ in 0..DRAWS {
            counts[thin(x, theta, &mut rng).unwrap() as usize] += 1;
        }
        let law = Binomial::new(theta, x).unwrap();
        let probs: Vec<f64> = (0..=x).map(|k| law.pmf(k)).collect();
        let (stat, df) = pearson(&counts, &probs);
        assert!(stat < critical_001(df), "Bin({x},{theta}): chi2 {stat} on {df} df");
    }
}
