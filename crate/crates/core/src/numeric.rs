//! Small numeric kernels shared by the probability modules.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::factorial::{ln_binomial, ln_factorial};

/// `ln C(m, k)` for `k <= m`.
pub(crate) fn ln_choose(m: u64, k: u64) -> f64 {
    debug_assert!(k <= m);
    if k == 0 || k == m {
        0.0
    } else {
        ln_binomial(m, k)
    }
}

/// Log of the Poisson(`rate`) mass at `k`. `rate = 0` is the point mass at zero.
pub fn poisson_ln_pmf(rate: f64, k: u64) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -rate + k as f64 * rate.ln() - ln_factorial(k)
}

pub fn poisson_pmf(rate: f64, k: u64) -> f64 {
    poisson_ln_pmf(rate, k).exp()
}

/// Lower-tail quantile of the standard normal law.
pub fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Streaming log-sum-exp accumulator.
///
/// Terms are kept relative to the running maximum so that sums of
/// probabilities far below `f64::MIN_POSITIVE` keep full relative precision.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl LogSumExp {
    pub(crate) fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub(crate) fn add(&mut self, ln_term: f64) {
        if ln_term == f64::NEG_INFINITY {
            return;
        }
        if ln_term <= self.max {
            self.scaled += (ln_term - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - ln_term).exp() + 1.0;
            self.max = ln_term;
        }
    }

    pub(crate) fn ln_value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Formats `x` like C's `%.12g`.
pub fn fmt_sig12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to 12 significant digits, the precision of all printed output.
pub fn round_sig12(x: f64) -> f64 {
    if x.is_finite() {
        fmt_sig12(x).parse().unwrap_or(x)
    } else {
        x
    }
}
