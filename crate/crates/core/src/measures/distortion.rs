use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::{parse_rational, small_rational_for};

/// Largest denominator accepted when converting floating entries.
pub const MAX_FLOAT_DENOMINATOR: u64 = 1_000_000;

/// A nonnegative rational single-letter distortion `ρ(x, y)` on `S × T`.
///
/// Entries are stored as integers over a common denominator `scale`, so
/// `ρ(x, y) = scaled(x, y) / scale` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionMatrix {
    rows: usize,
    cols: usize,
    scale: u64,
    scaled: Vec<u64>,
    values: Vec<f64>,
}

impl DistortionMatrix {
    /// Build from `(numerator, denominator)` pairs.
    pub fn from_ratios(entries: &[Vec<(u64, u64)>]) -> Result<Self> {
        let rationals = entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&(p, q)| {
                        if q == 0 {
                            Err(Error::invalid("rho", "zero denominator"))
                        } else {
                            Ok(BigRational::new(p.into(), q.into()))
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rationals(&rationals)
    }

    pub fn from_rationals(entries: &[Vec<BigRational>]) -> Result<Self> {
        let rows = entries.len();
        if rows == 0 {
            return Err(Error::invalid("rho", "matrix has no rows"));
        }
        let cols = entries[0].len();
        if cols == 0 {
            return Err(Error::invalid("rho", "matrix has no columns"));
        }
        let mut scale = BigInt::from(1u8);
        for (x, row) in entries.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::invalid(
                    "rho",
                    format!("row {x} has {} entries, expected {cols}", row.len()),
                ));
            }
            for (y, v) in row.iter().enumerate() {
                if v.is_negative() {
                    return Err(Error::invalid("rho", format!("entry ({x},{y}) = {v} is negative")));
                }
                scale = scale.lcm(v.denom());
            }
        }
        let scale_u64 = scale
            .to_u64()
            .ok_or_else(|| Error::invalid("rho", "common denominator exceeds 64 bits"))?;
        let mut scaled = Vec::with_capacity(rows * cols);
        for row in entries {
            for v in row {
                let s = v.numer() * (&scale / v.denom());
                scaled.push(
                    s.to_u64()
                        .ok_or_else(|| Error::invalid("rho", "scaled entry exceeds 64 bits"))?,
                );
            }
        }
        let values = scaled.iter().map(|&s| s as f64 / scale_u64 as f64).collect();
        Ok(DistortionMatrix {
            rows,
            cols,
            scale: scale_u64,
            scaled,
            values,
        })
    }

    /// Build from doubles. Each entry must be the double nearest to some
    /// `p/q` with `q <= 10^6`; that rational is what gets stored.
    pub fn from_f64(entries: &[Vec<f64>]) -> Result<Self> {
        let ratios = entries
            .iter()
            .enumerate()
            .map(|(x, row)| {
                row.iter()
                    .enumerate()
                    .map(|(y, &v)| {
                        small_rational_for(v, MAX_FLOAT_DENOMINATOR).ok_or_else(|| {
                            Error::invalid(
                                "rho",
                                format!(
                                    "entry ({x},{y}) = {v} is not a nonnegative rational with denominator <= {MAX_FLOAT_DENOMINATOR}"
                                ),
                            )
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_ratios(&ratios)
    }

    /// Parse rational strings (`"p/q"` or decimals).
    pub fn from_strings(entries: &[Vec<String>]) -> Result<Self> {
        let rationals = entries
            .iter()
            .enumerate()
            .map(|(x, row)| {
                row.iter()
                    .enumerate()
                    .map(|(y, s)| {
                        parse_rational(s).map_err(|_| {
                            Error::invalid("rho", format!("entry ({x},{y}) = {s:?} is not a rational"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rationals(&rationals)
    }

    /// `ρ(x, y) = 1{x ≠ y}` on a `size × size` alphabet.
    pub fn hamming(size: usize) -> Self {
        let scaled = (0..size * size)
            .map(|i| u64::from(i / size != i % size))
            .collect::<Vec<_>>();
        Self::from_scaled(size, size, 1, scaled)
    }

    /// `ρ(x, y) = |x − y|` on `{0, …, size-1}`.
    pub fn abs_diff(size: usize) -> Self {
        let scaled = (0..size * size)
            .map(|i| (i / size).abs_diff(i % size) as u64)
            .collect::<Vec<_>>();
        Self::from_scaled(size, size, 1, scaled)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_scaled(rows, cols, 1, vec![0; rows * cols])
    }

    fn from_scaled(rows: usize, cols: usize, scale: u64, scaled: Vec<u64>) -> Self {
        let values = scaled.iter().map(|&s| s as f64 / scale as f64).collect();
        DistortionMatrix {
            rows,
            cols,
            scale,
            scaled,
            values,
        }
    }

    /// Source alphabet size `|S|`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Reproduction alphabet size `|T|`.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The common denominator.
    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[x * self.cols + y]
    }

    pub fn scaled(&self, x: usize, y: usize) -> u64 {
        self.scaled[x * self.cols + y]
    }

    pub fn exact(&self, x: usize, y: usize) -> BigRational {
        BigRational::new(self.scaled(x, y).into(), self.scale.into())
    }

    pub fn row_values(&self, x: usize) -> &[f64] {
        &self.values[x * self.cols..(x + 1) * self.cols]
    }

    pub fn row_scaled(&self, x: usize) -> &[u64] {
        &self.scaled[x * self.cols..(x + 1) * self.cols]
    }

    pub fn max_scaled(&self) -> u64 {
        self.scaled.iter().copied().max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.scaled.iter().all(Zero::is_zero)
    }

    /// Entries as `"p/q"` strings, reduced.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|x| (0..self.cols).map(|y| self.exact(x, y).to_string()).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn common_denominator() {
        let rho = DistortionMatrix::from_ratios(&[vec![(1, 2), (1, 3)], vec![(0, 1), (5, 4)]]).unwrap();
        assert_eq!(rho.scale(), 12);
        assert_eq!(rho.scaled(0, 0), 6);
        assert_eq!(rho.scaled(0, 1), 4);
        assert_eq!(rho.scaled(1, 1), 15);
        assert_eq!(rho.get(1, 1), 1.25);
    }

    #[test]
    fn float_entries_need_small_denominators() {
        let rho = DistortionMatrix::from_f64(&[vec![0.1, 0.25]]).unwrap();
        assert_eq!(rho.scale(), 20);
        assert!(DistortionMatrix::from_f64(&[vec![std::f64::consts::E]]).is_err());
        assert!(DistortionMatrix::from_f64(&[vec![-1.0]]).is_err());
    }

    #[test]
    fn rejects_ragged_and_negative() {
        assert!(DistortionMatrix::from_strings(&[vec!["1".into()], vec!["1".into(), "2".into()]]).is_err());
        assert!(DistortionMatrix::from_strings(&[vec!["-1/2".into()]]).is_err());
        assert!(DistortionMatrix::from_strings(&[vec!["x".into()]]).is_err());
    }

    #[test]
    fn named_matrices() {
        let h = DistortionMatrix::hamming(3);
        assert_eq!(h.get(1, 1), 0.0);
        assert_eq!(h.get(1, 2), 1.0);
        let a = DistortionMatrix::abs_diff(3);
        assert_eq!(a.get(0, 2), 2.0);
        assert_eq!(a.to_strings()[2][0], "2");
    }
}
