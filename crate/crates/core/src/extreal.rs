//! Extended reals for log-likelihoods.
//!
//! Conventions: `ln 0 = -inf` and `-inf * 0 = 0`. A sum that mixes `-inf`
//! and `+inf` has no value and is reported as [`Undefined`].

use std::fmt;
use std::ops::Neg;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

/// A `-inf + inf` form was encountered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Undefined;

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Lifts an `f64` logarithm, mapping IEEE infinities to the dedicated variants.
    pub fn from_f64(x: f64) -> Self {
        if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else if x == f64::INFINITY {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// `exp` of a log value; `exp(-inf) = 0`.
    pub fn exp(self) -> f64 {
        self.to_f64().exp()
    }

    /// Scales by a non-negative count with `±inf * 0 = 0`.
    pub fn times_count(self, count: u64) -> Self {
        match self {
            _ if count == 0 => ExtReal::ZERO,
            ExtReal::Finite(x) => ExtReal::Finite(x * count as f64),
            other => other,
        }
    }

    pub fn checked_add(self, other: Self) -> Result<Self, Undefined> {
        use ExtReal::*;
        match (self, other) {
            (NegInf, PosInf) | (PosInf, NegInf) => Err(Undefined),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (Finite(a), Finite(b)) => Ok(Finite(a + b)),
        }
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::Finite(x) => ExtReal::Finite(-x),
            ExtReal::PosInf => ExtReal::NegInf,
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::PosInf => f.write_str("inf"),
            ExtReal::Finite(x) => f.write_str(&crate::numeric::fmt_sig12(*x)),
        }
    }
}

/// Finite values serialize as numbers, infinities as the strings `"-inf"` / `"inf"`.
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => serializer.serialize_f64(crate::numeric::round_sig12(*x)),
            ExtReal::NegInf => serializer.serialize_str("-inf"),
            ExtReal::PosInf => serializer.serialize_str("inf"),
        }
    }
}

/// Sums log terms, tracking infinite contributions separately.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct LogAccumulator {
    finite: f64,
    neg_inf: bool,
    pos_inf: bool,
}

impl LogAccumulator {
    pub(crate) fn add(&mut self, term: ExtReal) {
        match term {
            ExtReal::NegInf => self.neg_inf = true,
            ExtReal::PosInf => self.pos_inf = true,
            ExtReal::Finite(x) => self.finite += x,
        }
    }

    pub(crate) fn total(&self) -> Result<ExtReal, Undefined> {
        match (self.neg_inf, self.pos_inf) {
            (true, true) => Err(Undefined),
            (true, false) => Ok(ExtReal::NegInf),
            (false, true) => Ok(ExtReal::PosInf),
            (false, false) => Ok(ExtReal::Finite(self.finite)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_places_infinities_at_the_ends() {
        assert!(ExtReal::NegInf < ExtReal::Finite(-1e300));
        assert!(ExtReal::Finite(1e300) < ExtReal::PosInf);
    }

    #[test]
    fn zero_count_annihilates_infinity() {
        assert_eq!(ExtReal::NegInf.times_count(0), ExtReal::ZERO);
        assert_eq!(ExtReal::NegInf.times_count(3), ExtReal::NegInf);
        assert_eq!(ExtReal::Finite(0.5).times_count(4), ExtReal::Finite(2.0));
    }

    #[test]
    fn mixed_infinities_are_undefined() {
        assert_eq!(ExtReal::NegInf.checked_add(ExtReal::PosInf), Err(Undefined));
        let mut acc = LogAccumulator::default();
        acc.add(ExtReal::Finite(1.0));
        acc.add(ExtReal::NegInf);
        assert_eq!(acc.total(), Ok(ExtReal::NegInf));
        acc.add(ExtReal::PosInf);
        assert_eq!(acc.total(), Err(Undefined));
    }

    #[test]
    fn serializes_infinities_as_strings() {
        let v = serde_json::to_string(&[ExtReal::NegInf, ExtReal::Finite(0.25)]).unwrap();
        assert_eq!(v, r#"["-inf",0.25]"#);
    }
}
