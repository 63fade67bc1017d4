//! Farey sequences and the breakpoint sequences that split the ratio axis
//! `[0, ∞)` for the 2×2 max-min design.

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest PAM order for which breakpoints are generated. The Farey order is
/// then `2^8 - 1 = 255` and every product stays well inside `i128`.
pub const MAX_BREAKPOINT_PAM: u32 = 8;

/// All reduced fractions `a/b` with `0 <= a <= b <= order`, increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FareySequence {
    order: u32,
    terms: Vec<Rational>,
}

impl FareySequence {
    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn terms(&self) -> &[Rational] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn into_terms(self) -> Vec<Rational> {
        self.terms
    }
}

/// Generates the Farey sequence of order `k` with the next-term recurrence:
/// from consecutive `a/b < c/d` the successor is `(q c - a)/(q d - b)` with
/// `q = floor((k + b) / d)`.
pub fn farey_sequence(k: u32) -> Result<FareySequence> {
    if k == 0 {
        return Err(Error::InvalidOrder(k));
    }
    let n = k as i128;
    let mut terms = Vec::new();
    let (mut a, mut b, mut c, mut d) = (0i128, 1i128, 1i128, n);
    terms.push(Rational::ZERO);
    while c <= n {
        // consecutive Farey terms are always coprime
        terms.push(Rational::new(c, d)?);
        let q = (n + b) / d;
        (a, b, c, d) = (c, d, q * c - a, q * d - b);
    }
    Ok(FareySequence { order: k, terms })
}

/// The mediant `(n1 + n2)/(m1 + m2)` of two finite nonnegative fractions `a < b`.
pub fn mediant(a: Rational, b: Rational) -> Result<Rational> {
    let ordering = || Error::Ordering {
        a: a.to_string(),
        b: b.to_string(),
    };
    let ((n1, m1), (n2, m2)) = match (a.parts(), b.parts()) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(ordering()),
    };
    if a >= b || a.signum() < 0 {
        return Err(ordering());
    }
    let num = n1.checked_add(n2).ok_or(Error::Overflow)?;
    let den = m1.checked_add(m2).ok_or(Error::Overflow)?;
    Rational::new(num, den)
}

/// Like [`mediant`] but treats infinity as `1/0`, so the mediant of `n/m`
/// and infinity is `(n + 1)/m`.
pub(crate) fn projective_mediant(a: Rational, b: Rational) -> Result<Rational> {
    let (n1, m1) = a.projective();
    let (n2, m2) = b.projective();
    Rational::new(n1 + n2, m1 + m2)
}

/// Breakpoints of the candidate terms for unipolar `2^p`-PAM: the Farey
/// sequence of order `2^p - 1`, then the reciprocals of its interior terms in
/// increasing order, then infinity.
pub fn breakpoints(p: u32) -> Result<Vec<Rational>> {
    if p == 0 || p > MAX_BREAKPOINT_PAM {
        return Err(Error::InvalidPam {
            p,
            max: MAX_BREAKPOINT_PAM,
        });
    }
    let farey = farey_sequence((1u32 << p) - 1)?.into_terms();
    let mut out = Vec::with_capacity(2 * farey.len());
    out.extend_from_slice(&farey);
    let interior = &farey[1..farey.len() - 1];
    for t in interior.iter().rev() {
        out.push(t.recip()?);
    }
    out.push(Rational::INFINITY);
    Ok(out)
}
