//! Immigration (innovation) distributions on the non-negative integers.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{poisson_ln_pmf, poisson_pmf};

/// Largest Poisson rate accepted; the sequential-search sampler needs `e^{-rate}`
/// to stay a normal `f64`.
pub const MAX_POISSON_RATE: f64 = 500.0;

const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("poisson rate must be positive and at most {MAX_POISSON_RATE}, got {0}")]
    PoissonRate(f64),
    #[error("geometric success probability must lie in (0,1), got {0}")]
    GeometricProb(f64),
    #[error("table weights must be finite and non-negative with a positive sum")]
    TableWeights,
    #[error("table support must be {{0,...,M}}: weight at index {0} is zero")]
    InteriorZero(usize),
    #[error("{0}")]
    Assumption(String),
    #[error("cannot parse distribution '{0}': expected poisson:<rate>, geometric:<p> or table:<w0,w1,...>")]
    Parse(String),
}

/// The immigration law `G`, immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct InnovationSpec {
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Poisson { rate: f64 },
    /// `g(k) = p (1-p)^k`.
    Geometric { p: f64 },
    /// Normalized weights on `{0, ..., weights.len() - 1}` with trailing zeros removed.
    Table { weights: Vec<f64>, cumulative: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum SpecRepr {
    Poisson { rate: f64 },
    Geometric { p: f64 },
    Table { weights: Vec<f64> },
}

impl TryFrom<SpecRepr> for InnovationSpec {
    type Error = DistError;

    fn try_from(repr: SpecRepr) -> Result<Self, DistError> {
        match repr {
            SpecRepr::Poisson { rate } => Self::poisson(rate),
            SpecRepr::Geometric { p } => Self::geometric(p),
            SpecRepr::Table { weights } => Self::table(&weights),
        }
    }
}

impl From<InnovationSpec> for SpecRepr {
    fn from(spec: InnovationSpec) -> Self {
        match spec.kind {
            Kind::Poisson { rate } => SpecRepr::Poisson { rate },
            Kind::Geometric { p } => SpecRepr::Geometric { p },
            Kind::Table { weights, .. } => SpecRepr::Table { weights },
        }
    }
}

/// Which clause of the regularity assumption on `G` holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum AssumptionClause {
    /// Support is exactly `{0, ..., m}` with `m >= 1`.
    FiniteSupport { m: usize },
    /// Full support, finite variance, `g(k+1) <= g(k)` for all `k >= m`.
    FullSupport { m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    #[serde(flatten)]
    pub clause: AssumptionClause,
    /// Notes on conditions used downstream but not part of the assumption itself.
    pub caveat: Option<String>,
}

impl InnovationSpec {
    pub fn poisson(rate: f64) -> Result<Self, DistError> {
        if !(rate > 0.0 && rate <= MAX_POISSON_RATE) {
            return Err(DistError::PoissonRate(rate));
        }
        Ok(Self {
            kind: Kind::Poisson { rate },
        })
    }

    pub fn geometric(p: f64) -> Result<Self, DistError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(DistError::GeometricProb(p));
        }
        Ok(Self {
            kind: Kind::Geometric { p },
        })
    }

    /// Builds a finite table from raw non-negative weights; they are normalized here.
    pub fn table(raw: &[f64]) -> Result<Self, DistError> {
        if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(DistError::TableWeights);
        }
        let last = raw
            .iter()
            .rposition(|w| *w > 0.0)
            .ok_or(DistError::TableWeights)?;
        let trimmed = &raw[..=last];
        let total: f64 = trimmed.iter().sum();
        let weights: Vec<f64> = trimmed.iter().map(|w| w / total).collect();
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        debug_assert!((acc - 1.0).abs() < NORMALIZATION_TOL);
        // pin the last cumulative value so inversion never runs off the end
        *cumulative.last_mut().expect("non-empty") = 1.0;
        Ok(Self {
            kind: Kind::Table {
                weights,
                cumulative,
            },
        })
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn pmf(&self, k: u64) -> f64 {
        match &self.kind {
            Kind::Poisson { rate } => poisson_pmf(*rate, k),
            Kind::Geometric { p } => p * (1.0 - p).powf(k as f64),
            Kind::Table { weights, .. } => usize::try_from(k)
                .ok()
                .and_then(|k| weights.get(k))
                .copied()
                .unwrap_or(0.0),
        }
    }

    /// `ln g(k)`, `-inf` off the support.
    pub fn ln_pmf(&self, k: u64) -> f64 {
        match &self.kind {
            Kind::Poisson { rate } => poisson_ln_pmf(*rate, k),
            Kind::Geometric { p } => p.ln() + k as f64 * (-p).ln_1p(),
            Kind::Table { .. } => self.pmf(k).ln(),
        }
    }

    /// `g(i)` with `g(i) = 0` for negative `i`.
    pub fn pmf_signed(&self, i: i64) -> f64 {
        if i < 0 {
            0.0
        } else {
            self.pmf(i as u64)
        }
    }

    /// Largest point of the support, if finite.
    pub fn support_max(&self) -> Option<u64> {
        match &self.kind {
            Kind::Table { weights, .. } => Some(weights.len() as u64 - 1),
            _ => None,
        }
    }

    pub fn g0(&self) -> f64 {
        self.pmf(0)
    }

    pub fn mean(&self) -> f64 {
        self.moments().0
    }

    pub fn variance(&self) -> f64 {
        self.moments().1
    }

    /// `(mean, variance)`; exact summation for tables, closed forms otherwise.
    pub fn moments(&self) -> (f64, f64) {
        match &self.kind {
            Kind::Poisson { rate } => (*rate, *rate),
            Kind::Geometric { p } => ((1.0 - p) / p, (1.0 - p) / (p * p)),
            Kind::Table { weights, .. } => {
                let mean: f64 = weights.iter().enumerate().map(|(k, w)| k as f64 * w).sum();
                let var: f64 = weights
                    .iter()
                    .enumerate()
                    .map(|(k, w)| (k as f64 - mean).powi(2) * w)
                    .sum();
                (mean, var)
            }
        }
    }

    /// Checks the regularity assumption under which the Poisson limit experiment holds.
    pub fn validate_assumption31(&self) -> Result<ValidationReport, DistError> {
        let ratio_caveat = "the ratio g(k+1)/g(k) must also stay bounded for the likelihood \
                            approximations; this holds for the built-in families";
        match &self.kind {
            Kind::Table { weights, .. } => {
                if let Some(i) = weights.iter().position(|w| *w == 0.0) {
                    return Err(DistError::InteriorZero(i));
                }
                let m = weights.len() - 1;
                if m == 0 {
                    return Err(DistError::Assumption(
                        "point mass at 0: support {0,...,M} needs M >= 1".into(),
                    ));
                }
                Ok(ValidationReport {
                    clause: AssumptionClause::FiniteSupport { m },
                    caveat: None,
                })
            }
            Kind::Poisson { rate } => Ok(ValidationReport {
                // g(k+1)/g(k) = rate/(k+1) <= 1 iff k >= rate - 1
                clause: AssumptionClause::FullSupport {
                    m: (rate - 1.0).ceil().max(0.0) as usize,
                },
                caveat: Some(ratio_caveat.into()),
            }),
            Kind::Geometric { .. } => Ok(ValidationReport {
                clause: AssumptionClause::FullSupport { m: 0 },
                caveat: Some(ratio_caveat.into()),
            }),
        }
    }

    /// One draw from `G` by inversion.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        match &self.kind {
            Kind::Table { cumulative, .. } => cumulative.partition_point(|c| *c <= u) as u64,
            Kind::Geometric { p } => ((1.0 - u).ln() / (-p).ln_1p()).floor() as u64,
            Kind::Poisson { rate } => {
                let mut k = 0u64;
                let mut term = (-rate).exp();
                let mut cdf = term;
                while u >= cdf {
                    k += 1;
                    term *= rate / k as f64;
                    if term == 0.0 {
                        break;
                    }
                    cdf += term;
                }
                k
            }
        }
    }
}

impl fmt::Display for InnovationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Poisson { rate } => write!(f, "poisson:{rate}"),
            Kind::Geometric { p } => write!(f, "geometric:{p}"),
            Kind::Table { weights, .. } => {
                let ws: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                write!(f, "table:{}", ws.join(","))
            }
        }
    }
}

/// Parses the `kind:params` mini-grammar, e.g. `geometric:0.5`, `table:1,2,1`.
impl FromStr for InnovationSpec {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, DistError> {
        let parse_err = || DistError::Parse(s.to_string());
        let (kind, params) = s.trim().split_once(':').ok_or_else(parse_err)?;
        let numbers: Vec<f64> = params
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err())?;
        match (kind.trim().to_ascii_lowercase().as_str(), numbers.as_slice()) {
            ("poisson", [rate]) => Self::poisson(*rate),
            ("geometric", [p]) => Self::geometric(*p),
            ("table", ws) => Self::table(ws),
            _ => Err(parse_err()),
        }
    }
}
