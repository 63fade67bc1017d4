//! Exact reduced fractions over `i128` with a distinguished infinity.
//!
//! Every finite value is stored in lowest terms with a positive
//! denominator. Arithmetic is checked: overflow is reported as
//! [`Error::Overflow`] instead of wrapping. The `std::ops` impls panic on the
//! same conditions and are meant for code paths whose magnitudes are known to
//! be small (Farey orders up to 255).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Repr {
    Finite { num: i128, den: i128 },
    Infinity,
}

/// An exact rational number, or positive infinity.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational(Repr);

impl Rational {
    pub const ZERO: Rational = Rational(Repr::Finite { num: 0, den: 1 });
    pub const ONE: Rational = Rational(Repr::Finite { num: 1, den: 1 });
    pub const INFINITY: Rational = Rational(Repr::Infinity);

    /// Builds `num/den` in lowest terms.
    pub fn new(num: i128, den: i128) -> Result<Self> {
        if den == 0 {
            return Err(Error::ZeroDenominator);
        }
        if num == i128::MIN || den == i128::MIN {
            return Err(Error::Overflow);
        }
        let g = num.gcd(&den);
        let (mut num, mut den) = (num / g, den / g);
        if den < 0 {
            num = -num;
            den = -den;
        }
        Ok(Rational(Repr::Finite { num, den }))
    }

    pub fn from_integer(n: i128) -> Self {
        Rational(Repr::Finite { num: n, den: 1 })
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.0, Repr::Infinity)
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// `(numerator, denominator)` of a finite value.
    pub fn parts(&self) -> Option<(i128, i128)> {
        match self.0 {
            Repr::Finite { num, den } => Some((num, den)),
            Repr::Infinity => None,
        }
    }

    /// Projective coordinates: finite values give `(num, den)`, infinity is `(1, 0)`.
    pub fn projective(&self) -> (i128, i128) {
        self.parts().unwrap_or((1, 0))
    }

    pub fn numer(&self) -> i128 {
        self.projective().0
    }

    pub fn denom(&self) -> i128 {
        self.projective().1
    }

    pub fn signum(&self) -> i32 {
        match self.0 {
            Repr::Finite { num, .. } => num.signum() as i32,
            Repr::Infinity => 1,
        }
    }

    pub fn abs(&self) -> Self {
        match self.0 {
            Repr::Finite { num, den } => Rational(Repr::Finite {
                num: num.abs(),
                den,
            }),
            Repr::Infinity => *self,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self.0 {
            Repr::Finite { num, den } => num as f64 / den as f64,
            Repr::Infinity => f64::INFINITY,
        }
    }

    fn finite(&self) -> Result<(i128, i128)> {
        self.parts().ok_or(Error::InfiniteOperand)
    }

    pub fn checked_add(&self, rhs: &Self) -> Result<Self> {
        let (a, b) = self.finite()?;
        let (c, d) = rhs.finite()?;
        let g = b.gcd(&d);
        let (bg, dg) = (b / g, d / g);
        let num = mul(a, dg)?
            .checked_add(mul(c, bg)?)
            .ok_or(Error::Overflow)?;
        Self::new(num, mul(b, dg)?)
    }

    pub fn checked_neg(&self) -> Result<Self> {
        let (a, b) = self.finite()?;
        Ok(Rational(Repr::Finite { num: -a, den: b }))
    }

    pub fn checked_sub(&self, rhs: &Self) -> Result<Self> {
        self.checked_add(&rhs.checked_neg()?)
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        let (a, b) = self.finite()?;
        let (c, d) = rhs.finite()?;
        // cross-reduce first so intermediate products stay small
        let g1 = a.gcd(&d).max(1);
        let g2 = c.gcd(&b).max(1);
        Self::new(mul(a / g1, c / g2)?, mul(b / g2, d / g1)?)
    }

    pub fn checked_div(&self, rhs: &Self) -> Result<Self> {
        let (c, d) = rhs.finite()?;
        if c == 0 {
            return Err(Error::ZeroDenominator);
        }
        self.checked_mul(&Self::new(d, c)?)
    }

    pub fn recip(&self) -> Result<Self> {
        Self::ONE.checked_div(self)
    }
}

fn mul(a: i128, b: i128) -> Result<i128> {
    a.checked_mul(b).ok_or(Error::Overflow)
}

/// Compares `a/b` with `c/d` (positive denominators) without forming products.
fn cmp_fractions(mut a: i128, mut b: i128, mut c: i128, mut d: i128) -> Ordering {
    let mut flipped = false;
    loop {
        let (qa, qc) = (a.div_euclid(b), c.div_euclid(d));
        if qa != qc {
            let ord = qa.cmp(&qc);
            return if flipped { ord.reverse() } else { ord };
        }
        let (ra, rc) = (a - qa * b, c - qc * d);
        let ord = match (ra == 0, rc == 0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => {
                // a/b - qa = ra/b; compare reciprocals b/ra and d/rc, reversed.
                (a, b, c, d) = (b, ra, d, rc);
                flipped = !flipped;
                continue;
            }
        };
        return if flipped { ord.reverse() } else { ord };
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0, other.0) {
            (Repr::Infinity, Repr::Infinity) => Ordering::Equal,
            (Repr::Infinity, _) => Ordering::Greater,
            (_, Repr::Infinity) => Ordering::Less,
            (Repr::Finite { num: a, den: b }, Repr::Finite { num: c, den: d }) => {
                cmp_fractions(a, b, c, d)
            }
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Default for Rational {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::from_integer(n as i128)
    }
}

macro_rules! panicking_op {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                match self.$checked(&rhs) {
                    Ok(v) => v,
                    Err(e) => panic!("rational {}: {e}", stringify!($method)),
                }
            }
        }
    };
}

panicking_op!(Add, add, checked_add);
panicking_op!(Sub, sub, checked_sub);
panicking_op!(Mul, mul, checked_mul);
panicking_op!(Div, div, checked_div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        self.checked_neg().expect("negating infinity")
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Repr::Finite { num, den } => write!(f, "{num}/{den}"),
            Repr::Infinity => f.write_str("inf"),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `n/m`, integers, exact decimals such as `-0.125`, and `inf`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let bad = || Error::ParseRational(s.to_string());
        if t.eq_ignore_ascii_case("inf") || t == "∞" {
            return Ok(Self::INFINITY);
        }
        if let Some((n, d)) = t.split_once('/') {
            let n: i128 = n.trim().parse().map_err(|_| bad())?;
            let d: i128 = d.trim().parse().map_err(|_| bad())?;
            return Self::new(n, d);
        }
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if (int_part.is_empty() && frac_part.is_empty())
            || !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
            || frac_part.len() > 30
        {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let num: i128 = digits.parse().map_err(|_| bad())?;
        let den = 10i128
            .checked_pow(frac_part.len() as u32)
            .ok_or(Error::Overflow)?;
        Self::new(if neg { -num } else { num }, den)
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
