//! Numbers shared by the interpreter and the formula evaluator.
//!
//! Values stay exact rationals until a square root with an irrational result
//! forces a switch to binary floating point.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Comparison tolerance for values that went through an irrational square root.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Number {
    Exact(BigRational),
    Approx(f64),
}

impl Number {
    pub fn int(v: i64) -> Self {
        Number::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Number::Approx(v) => *v,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_zero(),
            Number::Approx(v) => *v == 0.0,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Number::Exact(r) => r.is_negative(),
            Number::Approx(v) => *v < 0.0,
        }
    }

    pub fn add(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a + b),
            _ => Number::Approx(self.to_f64() + other.to_f64()),
        }
    }

    pub fn sub(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a - b),
            _ => Number::Approx(self.to_f64() - other.to_f64()),
        }
    }

    pub fn mul(&self, other: &Number) -> Number {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a * b),
            _ => Number::Approx(self.to_f64() * other.to_f64()),
        }
    }

    /// `None` on division by zero.
    pub fn div(&self, other: &Number) -> Option<Number> {
        if other.is_zero() {
            return None;
        }
        Some(match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => Number::Exact(a / b),
            _ => Number::Approx(self.to_f64() / other.to_f64()),
        })
    }

    /// `None` for negative arguments. Perfect rational squares stay exact; other
    /// results are rounded to 15 significant digits.
    pub fn sqrt(&self) -> Option<Number> {
        if self.is_negative() {
            return None;
        }
        if let Number::Exact(r) = self {
            let (n, d) = (r.numer(), r.denom());
            let (sn, sd) = (n.sqrt(), d.sqrt());
            if &(&sn * &sn) == n && &(&sd * &sd) == d {
                return Some(Number::Exact(BigRational::new(sn, sd)));
            }
        }
        Some(Number::Approx(round_significant(self.to_f64().sqrt())))
    }

    pub fn approx_eq(&self, other: &Number) -> bool {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => a == b,
            _ => approx_eq_f64(self.to_f64(), other.to_f64()),
        }
    }

    /// Ordering with tolerance once an approximate value is involved.
    pub fn compare(&self, other: &Number) -> Ordering {
        match (self, other) {
            (Number::Exact(a), Number::Exact(b)) => a.cmp(b),
            _ => {
                let (a, b) = (self.to_f64(), other.to_f64());
                if approx_eq_f64(a, b) {
                    Ordering::Equal
                } else {
                    a.partial_cmp(&b).unwrap_or(Ordering::Equal)
                }
            }
        }
    }
}

impl From<BigRational> for Number {
    fn from(r: BigRational) -> Self {
        Number::Exact(r)
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Exact(r) => f.write_str(&rational_to_string(r)),
            Number::Approx(v) => write!(f, "{v}"),
        }
    }
}

pub fn approx_eq_f64(a: f64, b: f64) -> bool {
    let scale = 1f64.max(a.abs()).max(b.abs());
    (a - b).abs() <= TOLERANCE * scale
}

fn round_significant(v: f64) -> f64 {
    format!("{v:.14e}").parse().unwrap_or(v)
}

/// Exact decimal expansion of `r`, if it terminates.
pub fn decimal_string(r: &BigRational) -> Option<String> {
    let mut denom = r.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let ten = BigInt::from(10);
    let (mut twos, mut fives) = (0u32, 0u32);
    while (&denom % &two).is_zero() {
        denom /= &two;
        twos += 1;
    }
    while (&denom % &five).is_zero() {
        denom /= &five;
        fives += 1;
    }
    if !denom.is_one() {
        return None;
    }
    let digits = twos.max(fives);
    let scaled = r * BigRational::from_integer(ten.pow(digits));
    debug_assert!(scaled.is_integer());
    let int = scaled.to_integer();
    let negative = int.is_negative();
    let mut s = int.abs().to_string();
    if digits > 0 {
        let digits = digits as usize;
        if s.len() <= digits {
            s = format!("{}{}", "0".repeat(digits - s.len() + 1), s);
        }
        s.insert(s.len() - digits, '.');
    }
    Some(if negative { format!("-{s}") } else { s })
}

/// Decimal text when the expansion terminates, `n/d` otherwise.
pub fn rational_to_string(r: &BigRational) -> String {
    decimal_string(r).unwrap_or_else(|| format!("{}/{}", r.numer(), r.denom()))
}

/// Parses unsigned decimal text such as `9.81` into an exact rational.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (int, frac) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if !frac.bytes().all(|b| b.is_ascii_digit()) || (text.contains('.') && frac.is_empty()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}").parse().ok()?;
    let scale = BigInt::from(10).pow(frac.len() as u32);
    Some(BigRational::new(digits, scale))
}

/// Exact rational value of a finite float.
pub fn rational_from_f64(v: f64) -> Option<BigRational> {
    BigRational::from_float(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(decimal_string(&q(981, 100)).as_deref(), Some("9.81"));
        assert_eq!(decimal_string(&q(-1, 2)).as_deref(), Some("-0.5"));
        assert_eq!(decimal_string(&q(1, 40)).as_deref(), Some("0.025"));
        assert_eq!(decimal_string(&q(7, 1)).as_deref(), Some("7"));
        assert_eq!(decimal_string(&q(1, 3)), None);
        assert_eq!(rational_to_string(&q(28, 17)), "28/17");
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(parse_decimal("9.81"), Some(q(981, 100)));
        assert_eq!(parse_decimal("100"), Some(q(100, 1)));
        assert_eq!(parse_decimal("1."), None);
        assert_eq!(parse_decimal(".5"), None);
    }

    #[test]
    fn sqrt_stays_exact_on_squares() {
        assert!(matches!(Number::Exact(q(9, 4)).sqrt(), Some(Number::Exact(r)) if r == q(3, 2)));
        assert!(matches!(Number::int(2).sqrt(), Some(Number::Approx(_))));
        assert!(Number::int(-1).sqrt().is_none());
        assert!(Number::int(1).div(&Number::int(0)).is_none());
    }

    #[test]
    fn approximate_comparison() {
        let root = Number::int(2).sqrt().unwrap();
        let squared = root.mul(&root);
        assert!(squared.approx_eq(&Number::int(2)));
        assert_eq!(squared.compare(&Number::int(2)), Ordering::Equal);
    }
}
