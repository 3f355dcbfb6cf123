//! Infinity-aware scalars.
//!
//! Rates and normalized log-probabilities in this crate are either finite
//! reals or `+∞`; ball log-probabilities are either finite reals or `−∞`.
//! Both are serialized with the lowercase literal `inf`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Serialized token for an infinite value.
pub const INF_TOKEN: &str = "inf";

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PlusInfinity,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal::Finite(0.0);

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn is_infinite(&self) -> bool {
        !self.is_finite()
    }

    /// The finite value, if any.
    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::PlusInfinity => None,
        }
    }

    /// Lossy view as `f64`, mapping `+∞` to `f64::INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn from_f64(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtendedReal::PlusInfinity
        } else {
            ExtendedReal::Finite(v)
        }
    }

    /// Clamp into `[lo, +∞]`.
    pub fn max_with(self, lo: f64) -> Self {
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(v.max(lo)),
            inf => inf,
        }
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: ExtendedReal) -> ExtendedReal {
        match (self, rhs) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => ExtendedReal::Finite(a + b),
            _ => ExtendedReal::PlusInfinity,
        }
    }
}

impl Add<f64> for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: f64) -> ExtendedReal {
        self + ExtendedReal::Finite(rhs)
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => a.total_cmp(b),
            (ExtendedReal::Finite(_), ExtendedReal::PlusInfinity) => Ordering::Less,
            (ExtendedReal::PlusInfinity, ExtendedReal::Finite(_)) => Ordering::Greater,
            (ExtendedReal::PlusInfinity, ExtendedReal::PlusInfinity) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PlusInfinity => f.write_str(INF_TOKEN),
        }
    }
}

impl FromStr for ExtendedReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == INF_TOKEN {
            return Ok(ExtendedReal::PlusInfinity);
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(ExtendedReal::Finite)
            .ok_or_else(|| Error::invalid("extended real", format!("cannot parse {s:?}")))
    }
}

/// JSON form: a number when finite, the string `"inf"` otherwise.
impl serde::Serialize for ExtendedReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::PlusInfinity => s.serialize_str(INF_TOKEN),
        }
    }
}

impl<'de> serde::Deserialize<'de> for ExtendedReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) if v.is_finite() => Ok(ExtendedReal::Finite(v)),
            Repr::Number(v) => Err(serde::de::Error::custom(format!("{v} is not finite"))),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A log-probability: a finite non-positive real or `−∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogProb {
    Finite(f64),
    MinusInfinity,
}

impl LogProb {
    pub fn is_finite(&self) -> bool {
        matches!(self, LogProb::Finite(_))
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            LogProb::Finite(v) => v,
            LogProb::MinusInfinity => f64::NEG_INFINITY,
        }
    }

    /// `−log_prob / n`, the per-symbol exponent.
    pub fn per_symbol_exponent(&self, n: usize) -> ExtendedReal {
        match *self {
            // `0.0 - 0.0` keeps a certain ball at +0 rather than −0.
            LogProb::Finite(v) => ExtendedReal::Finite(0.0 - v / n as f64),
            LogProb::MinusInfinity => ExtendedReal::PlusInfinity,
        }
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogProb::Finite(v) => write!(f, "{v}"),
            LogProb::MinusInfinity => write!(f, "-{INF_TOKEN}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs_addition() {
        let inf = ExtendedReal::PlusInfinity;
        assert_eq!(ExtendedReal::Finite(1.5) + inf, inf);
        assert_eq!(inf + 2.0, inf);
        assert_eq!(
            ExtendedReal::Finite(1.5) + ExtendedReal::Finite(2.0),
            ExtendedReal::Finite(3.5)
        );
    }

    #[test]
    fn infinity_is_greatest() {
        let mut v = vec![
            ExtendedReal::PlusInfinity,
            ExtendedReal::Finite(3.0),
            ExtendedReal::Finite(-1.0),
        ];
        v.sort();
        assert_eq!(v[2], ExtendedReal::PlusInfinity);
        assert_eq!(v[0], ExtendedReal::Finite(-1.0));
        assert!(ExtendedReal::Finite(f64::MAX) < ExtendedReal::PlusInfinity);
    }

    #[test]
    fn inf_token_round_trips() {
        for v in [ExtendedReal::PlusInfinity, ExtendedReal::Finite(0.368_064_2)] {
            assert_eq!(v.to_string().parse::<ExtendedReal>().unwrap(), v);
        }
        assert!("nan".parse::<ExtendedReal>().is_err());
    }

    #[test]
    fn certain_ball_has_positive_zero_exponent() {
        let l = LogProb::Finite(0.0).per_symbol_exponent(3);
        assert_eq!(l.to_string(), "0");
        assert_eq!(LogProb::MinusInfinity.per_symbol_exponent(2), ExtendedReal::PlusInfinity);
    }
}
