//! Exact rational helpers: parsing of `p/q` and decimal strings, exact
//! conversion of doubles, and the distortion level type used for all
//! regime comparisons.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Parse `"p/q"`, an integer, or a plain decimal (`"0.125"`, `"-3.5"`,
/// `"1e-3"`) into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::invalid("rational", format!("cannot parse {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(Error::invalid("rational", format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(num, den));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = digits.parse().map_err(|_| bad())?;
    if negative {
        num = -num;
    }
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let value = if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// The exact rational value of a finite double.
pub fn rational_from_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v)
        .ok_or_else(|| Error::invalid("real", format!("{v} is not a finite number")))
}

/// Exact value for a probability or transition entry given as a double:
/// the smallest-denominator rational (denominator at most `10^6`) whose
/// nearest double is `v`, so `0.6` is read as `3/5`; otherwise the exact
/// dyadic value.
pub fn probability_from_f64(v: f64) -> Result<BigRational> {
    match small_rational_for(v, 1_000_000) {
        Some((p, q)) => Ok(BigRational::new(p.into(), q.into())),
        None => rational_from_f64(v),
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// `floor(r)` for a nonnegative rational, saturating at `u64::MAX`.
pub(crate) fn floor_to_u64(r: &BigRational) -> u64 {
    if r.is_negative() {
        return 0;
    }
    let fl = r.numer().div_floor(r.denom());
    fl.to_u64().unwrap_or(u64::MAX)
}

/// Smallest-denominator rational `p/q` with `q <= max_den` whose nearest
/// double equals `v`, found by walking the continued-fraction convergents.
pub(crate) fn small_rational_for(v: f64, max_den: u64) -> Option<(u64, u64)> {
    if !v.is_finite() || v < 0.0 {
        return None;
    }
    let exact = BigRational::from_float(v)?;
    if exact.denom() <= &BigInt::from(max_den) {
        return Some((exact.numer().to_u64()?, exact.denom().to_u64()?));
    }
    // Convergents h/k of the exact binary value.
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut x = exact;
    for _ in 0..64 {
        let a = x.numer().div_floor(x.denom());
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2 > BigInt::from(max_den) {
            return None;
        }
        let candidate = BigRational::new(h2.clone(), k2.clone());
        if rational_to_f64(&candidate) == v {
            return Some((h2.to_u64()?, k2.to_u64()?));
        }
        let frac = &x - BigRational::from_integer(a);
        if frac.is_zero() {
            return None;
        }
        x = frac.recip();
        h0 = std::mem::replace(&mut h1, h2);
        k0 = std::mem::replace(&mut k1, k2);
    }
    None
}

/// A distortion level `D ≥ 0` carried exactly.
///
/// Regime boundaries (`D = D_min`, `D = D_ave`) are decided on `exact`;
/// `value` is the double used in numerical work.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionLevel {
    exact: BigRational,
    value: f64,
}

impl DistortionLevel {
    pub fn from_rational(exact: BigRational) -> Result<Self> {
        if exact.is_negative() {
            return Err(Error::invalid(
                "distortion",
                format!("D must be nonnegative, got {exact}"),
            ));
        }
        let value = rational_to_f64(&exact);
        Ok(DistortionLevel { exact, value })
    }

    /// Exact dyadic value of `v`.
    pub fn from_f64(v: f64) -> Result<Self> {
        Self::from_rational(rational_from_f64(v)?)
    }

    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("distortion", "zero denominator"));
        }
        Self::from_rational(BigRational::new(num.into(), den.into()))
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// `floor(n · D · scale)`, the integer acceptance threshold for a sum of
    /// `n` distortions expressed in units of `1/scale`.
    pub fn scaled_threshold(&self, n: usize, scale: u64) -> u64 {
        let r = &self.exact * BigRational::from_integer(BigInt::from(n) * BigInt::from(scale));
        floor_to_u64(&r)
    }

    /// Exact comparison of `total / (n · scale)` against `D`.
    pub fn compare_average(&self, total: u64, n: usize, scale: u64) -> std::cmp::Ordering {
        let lhs = BigInt::from(total) * self.exact.denom();
        let rhs = self.exact.numer() * BigInt::from(n) * BigInt::from(scale);
        lhs.cmp(&rhs)
    }

    /// Exact test `total / (n · scale) <= D`.
    pub fn admits_average(&self, total: u64, n: usize, scale: u64) -> bool {
        self.compare_average(total, n, scale).is_le()
    }
}

impl FromStr for DistortionLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let r = parse_rational(s).map_err(|_| {
            Error::invalid("distortion", format!("cannot parse {s:?} as a rational or decimal"))
        })?;
        Self::from_rational(r)
    }
}

impl TryFrom<f64> for DistortionLevel {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        Self::from_f64(v)
    }
}

impl fmt::Display for DistortionLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}
