//! Numeric mode abstraction.
//!
//! Every analysis runs in one of two numeric modes: exact rational arithmetic
//! (the default for small chains and all coefficient algebra) or binary
//! floating point (a fallback for large chains). The mode is fixed per chain
//! and never mixed. [`Scalar`] is the shared surface: arithmetic, probability
//! tolerances, literal parsing, and a dense linear solve.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// A numeric literal as it appears in JSON inputs: either a rational string
/// ("p/q" or "p") or a plain number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberLit {
    Str(String),
    Num(f64),
}

/// Parse a rational string of the form `p/q` or `p` (base 10, optional sign).
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let (num_str, den_str) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num = BigInt::from_str(num_str)
        .map_err(|_| Error::Parse(format!("invalid rational numerator {num_str:?}")))?;
    let den = BigInt::from_str(den_str)
        .map_err(|_| Error::Parse(format!("invalid rational denominator {den_str:?}")))?;
    if den.is_zero() {
        return Err(Error::Parse(format!(
            "zero denominator in rational {text:?}"
        )));
    }
    Ok(BigRational::new(num, den))
}

/// Canonical rendering: `p` for integers, `p/q` in lowest terms otherwise.
pub fn format_rational(value: &BigRational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Scalar arithmetic shared by the rational and float modes.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
    + Send
    + Sync
    + 'static
{
    /// `true` when arithmetic is exact and comparisons need no tolerance.
    const EXACT: bool;
    /// Mode tag used in serialized documents.
    const MODE: &'static str;

    fn from_int(n: i64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_big_ratio(num: BigInt, den: BigInt) -> Self;
    fn to_f64(&self) -> f64;
    fn abs(&self) -> Self;

    /// Parse a literal under this mode's rules.
    fn parse_literal(lit: &NumberLit) -> Result<Self>;
    /// Canonical text form (round-trips through [`Scalar::parse_literal`]).
    fn render(&self) -> String;
    /// Literal for serialization under this mode.
    fn to_literal(&self) -> NumberLit;

    /// Tolerance for probability mass checks (row sums, distribution sums).
    fn prob_tol() -> Self;
    /// Tolerance for derived-quantity comparisons (drift checks, identities).
    fn cmp_tol() -> Self;

    /// Solve `A x = b` for each right-hand-side column. `a` is square and
    /// row-major; returns the solution columns.
    fn solve_dense(a: Vec<Vec<Self>>, rhs_cols: Vec<Vec<Self>>) -> Result<Vec<Vec<Self>>>;

    /// `|a - b| <= tol`.
    fn close_to(&self, other: &Self, tol: &Self) -> bool {
        let diff = if self >= other {
            self.clone() - other.clone()
        } else {
            other.clone() - self.clone()
        };
        diff <= *tol
    }

    /// Treat as zero probability mass (exact zero, or below [`Scalar::prob_tol`]).
    fn is_zero_prob(&self) -> bool {
        self.abs() <= Self::prob_tol()
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;
    const MODE: &'static str = "rational";

    fn from_int(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_big_ratio(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        BigRational::new(num, den)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn parse_literal(lit: &NumberLit) -> Result<Self> {
        match lit {
            NumberLit::Str(s) => parse_rational(s),
            NumberLit::Num(_) => Err(Error::Parse(
                "rational mode requires \"p/q\" string literals, got a bare number".into(),
            )),
        }
    }

    fn render(&self) -> String {
        format_rational(self)
    }

    fn to_literal(&self) -> NumberLit {
        NumberLit::Str(self.render())
    }

    fn prob_tol() -> Self {
        BigRational::zero()
    }

    fn cmp_tol() -> Self {
        BigRational::zero()
    }

    fn solve_dense(a: Vec<Vec<Self>>, rhs_cols: Vec<Vec<Self>>) -> Result<Vec<Vec<Self>>> {
        linalg::solve_rational(a, rhs_cols)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const MODE: &'static str = "float";

    fn from_int(n: i64) -> Self {
        n as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn from_big_ratio(num: BigInt, den: BigInt) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let num = num.to_f64().unwrap_or(f64::NAN);
        let den = den.to_f64().unwrap_or(f64::NAN);
        num / den
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn parse_literal(lit: &NumberLit) -> Result<Self> {
        match lit {
            NumberLit::Num(x) if x.is_finite() => Ok(*x),
            NumberLit::Num(x) => Err(Error::Parse(format!("non-finite float literal {x}"))),
            // Accept rational strings in float mode; they convert losslessly or
            // to the nearest double.
            NumberLit::Str(s) => Ok(Scalar::to_f64(&parse_rational(s)?)),
        }
    }

    fn render(&self) -> String {
        format!("{self}")
    }

    fn to_literal(&self) -> NumberLit {
        NumberLit::Num(*self)
    }

    fn prob_tol() -> Self {
        1e-12
    }

    fn cmp_tol() -> Self {
        1e-9
    }

    fn solve_dense(a: Vec<Vec<Self>>, rhs_cols: Vec<Vec<Self>>) -> Result<Vec<Vec<Self>>> {
        linalg::solve_float(a, rhs_cols)
    }
}

/// Minimum under a total order that must not observe NaN.
pub fn min_s<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

/// Maximum counterpart of [`min_s`].
pub fn max_s<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_formats_rationals() {
        let r = parse_rational("6/8").unwrap();
        assert_eq!(format_rational(&r), "3/4");
        assert_eq!(format_rational(&parse_rational("6").unwrap()), "6");
        assert_eq!(format_rational(&parse_rational("-7/3").unwrap()), "-7/3");
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/b").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn rational_mode_rejects_bare_numbers() {
        assert!(<BigRational as Scalar>::parse_literal(&NumberLit::Num(0.5)).is_err());
        let v = <BigRational as Scalar>::parse_literal(&NumberLit::Str("1/2".into())).unwrap();
        assert_eq!(v, BigRational::from_ratio(1, 2));
    }

    #[test]
    fn float_mode_accepts_both_forms() {
        assert_eq!(
            <f64 as Scalar>::parse_literal(&NumberLit::Num(0.25)).unwrap(),
            0.25
        );
        assert_eq!(
            <f64 as Scalar>::parse_literal(&NumberLit::Str("1/4".into())).unwrap(),
            0.25
        );
        assert!(<f64 as Scalar>::parse_literal(&NumberLit::Num(f64::INFINITY)).is_err());
    }
}
