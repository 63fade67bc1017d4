//! Unipolar PAM constellations, linear space codes `x = F s`, their error
//! sets, and the full large-scale diversity test.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::analysis::dominant_term;
use crate::channel::ChannelSpec;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest supported bits per PAM symbol.
pub const MAX_PAM: u32 = 16;

/// Enumeration guard on `p * L` for error sets and exhaustive detection.
pub const MAX_ENUMERATION_BITS: u32 = 16;

/// Componentwise tolerance used to merge real-valued error vectors.
pub const DEDUP_TOLERANCE: f64 = 1e-12;

/// Unipolar `2^p`-ary PAM with levels `{0, 1, ..., 2^p - 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Constellation {
    p: u32,
}

impl Constellation {
    pub fn pam(p: u32) -> Result<Self> {
        if p == 0 || p > MAX_PAM {
            return Err(Error::InvalidPam { p, max: MAX_PAM });
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn size(&self) -> u32 {
        1 << self.p
    }

    pub fn max_level(&self) -> u32 {
        self.size() - 1
    }

    pub fn levels(&self) -> impl Iterator<Item = u32> {
        0..self.size()
    }

    pub fn contains(&self, level: u32) -> bool {
        level < self.size()
    }

    /// Mean level under uniform symbols, `(2^p - 1) / 2`.
    pub fn mean_level(&self) -> Rational {
        Rational::new(self.max_level() as i128, 2).expect("nonzero denominator")
    }
}

pub fn pam_constellation(p: u32) -> Result<Constellation> {
    Constellation::pam(p)
}

/// A linear space code: nonnegative `N × L` matrix `F` over a PAM
/// constellation. Codes built from fractions keep the exact entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceCode {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    exact: Option<Vec<Rational>>,
    constellation: Constellation,
    power_normalized: bool,
}

impl SpaceCode {
    pub fn from_rationals(rows: Vec<Vec<Rational>>, constellation: Constellation) -> Result<Self> {
        let (r, c) = shape(&rows)?;
        let exact: Vec<Rational> = rows.into_iter().flatten().collect();
        if exact.iter().any(|x| x.is_infinite() || x.signum() < 0) {
            return Err(Error::NegativeEntry);
        }
        let values = exact.iter().map(Rational::to_f64).collect();
        let sum = exact
            .iter()
            .try_fold(Rational::ZERO, |acc, x| acc.checked_add(x))?;
        let power_normalized = sum.checked_mul(&constellation.mean_level())? == Rational::ONE;
        Ok(Self {
            rows: r,
            cols: c,
            values,
            exact: Some(exact),
            constellation,
            power_normalized,
        })
    }

    pub fn from_f64(rows: Vec<Vec<f64>>, constellation: Constellation) -> Result<Self> {
        let (r, c) = shape(&rows)?;
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if values.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::NegativeEntry);
        }
        let mean = constellation.mean_level().to_f64();
        let power_normalized = (values.iter().sum::<f64>() * mean - 1.0).abs() <= 1e-12;
        Ok(Self {
            rows: r,
            cols: c,
            values,
            exact: None,
            constellation,
            power_normalized,
        })
    }

    /// The `n × n` identity (spatial multiplexing).
    pub fn identity(n: usize, constellation: Constellation) -> Result<Self> {
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            Rational::ONE
                        } else {
                            Rational::ZERO
                        }
                    })
                    .collect()
            })
            .collect();
        Self::from_rationals(rows, constellation)
    }

    /// Parses whitespace/comma separated rows of `a/b` or decimal entries.
    /// Blank lines and `#` comments are ignored.
    pub fn parse_matrix(text: &str, constellation: Constellation) -> Result<Self> {
        let rows = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split(|c: char| c.is_whitespace() || c == ',' || c == ';')
                    .filter(|t| !t.is_empty())
                    .map(str::parse::<Rational>)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rationals(rows, constellation)
    }

    /// Number of transmit apertures `N`.
    pub fn n_tx(&self) -> usize {
        self.rows
    }

    /// Symbols per channel use `L`.
    pub fn n_symbols(&self) -> usize {
        self.cols
    }

    pub fn constellation(&self) -> Constellation {
        self.constellation
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn exact_entry(&self, i: usize, j: usize) -> Option<Rational> {
        self.exact.as_ref().map(|e| e[i * self.cols + j])
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Whether `E[Σ_i x_i] = 1` under uniformly distributed symbols.
    pub fn is_power_normalized(&self) -> bool {
        self.power_normalized
    }

    pub fn all_positive(&self) -> bool {
        match &self.exact {
            Some(e) => e.iter().all(|x| x.signum() > 0),
            None => self.values.iter().all(|x| *x > 0.0),
        }
    }

    /// Entries as strings: fractions when exact, reals otherwise.
    pub fn to_strings(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| match self.exact_entry(i, j) {
                        Some(x) => x.to_string(),
                        None => crate::format_real(self.entry(i, j)),
                    })
                    .collect()
            })
            .collect()
    }

    fn check_symbols(&self, s: &[u32]) -> Result<()> {
        if s.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: s.len(),
            });
        }
        match s.iter().find(|l| !self.constellation.contains(**l)) {
            Some(&level) => Err(Error::OutOfConstellation {
                level,
                p: self.constellation.p,
            }),
            None => Ok(()),
        }
    }

    /// The transmitted intensities `x = F s`.
    pub fn encode(&self, s: &[u32]) -> Result<Vec<f64>> {
        self.check_symbols(s)?;
        Ok(self.encode_unchecked(s))
    }

    pub(crate) fn encode_unchecked(&self, s: &[u32]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                let row = &self.values[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(s).map(|(f, &l)| f * l as f64).sum()
            })
            .collect()
    }

    /// Exact `F s` for codes built from fractions.
    pub fn encode_exact(&self, s: &[u32]) -> Result<Option<Vec<Rational>>> {
        self.check_symbols(s)?;
        let Some(exact) = &self.exact else {
            return Ok(None);
        };
        let delta: Vec<i128> = s.iter().map(|&l| l as i128).collect();
        Ok(Some(apply_exact(exact, self.rows, self.cols, &delta)?))
    }

    pub(crate) fn enumeration_bits(&self) -> u32 {
        self.constellation.p * self.cols as u32
    }
}

fn shape<T>(rows: &[Vec<T>]) -> Result<(usize, usize)> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::MalformedMatrix);
    }
    Ok((r, c))
}

fn apply_exact(f: &[Rational], rows: usize, cols: usize, v: &[i128]) -> Result<Vec<Rational>> {
    (0..rows)
        .map(|i| {
            f[i * cols..(i + 1) * cols]
                .iter()
                .zip(v)
                .try_fold(Rational::ZERO, |acc, (x, &d)| {
                    acc.checked_add(&x.checked_mul(&Rational::from_integer(d))?)
                })
        })
        .collect()
}

/// Calls `visit` with every nonzero `Δ ∈ {-(q-1), ..., q-1}^len`.
fn for_each_difference(
    q: i128,
    len: usize,
    mut visit: impl FnMut(&[i128]) -> Result<()>,
) -> Result<()> {
    let mut delta = vec![-(q - 1); len];
    loop {
        if delta.iter().any(|&d| d != 0) {
            visit(&delta)?;
        }
        let mut k = len;
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            if delta[k] < q - 1 {
                delta[k] += 1;
                break;
            }
            delta[k] = -(q - 1);
        }
    }
}

/// Distinct nonzero codeword differences `e = F(ŝ - s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSet {
    dim: usize,
    vectors: Vec<Vec<f64>>,
    exact: Option<Vec<Vec<Rational>>>,
}

impl ErrorSet {
    /// An error set given directly as real vectors (deduplicated, zeros dropped).
    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::MalformedMatrix);
        }
        if vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("error vector"));
        }
        Ok(Self {
            dim,
            vectors: dedup_real(vectors),
            exact: None,
        })
    }

    pub fn from_exact(vectors: Vec<Vec<Rational>>) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::MalformedMatrix);
        }
        if vectors.iter().flatten().any(Rational::is_infinite) {
            return Err(Error::InfiniteOperand);
        }
        let set: BTreeSet<Vec<Rational>> = vectors
            .into_iter()
            .filter(|v| v.iter().any(|x| !x.is_zero()))
            .collect();
        let exact: Vec<Vec<Rational>> = set.into_iter().collect();
        let vectors = exact
            .iter()
            .map(|v| v.iter().map(Rational::to_f64).collect())
            .collect();
        Ok(Self {
            dim,
            vectors,
            exact: Some(exact),
        })
    }

    /// Vector length `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn exact_vectors(&self) -> Option<&[Vec<Rational>]> {
        self.exact.as_deref()
    }

    /// Smallest `e_1 e_2 ... e_N` product over the set, exactly when possible.
    pub fn min_product(&self) -> Option<f64> {
        self.vectors
            .iter()
            .map(|v| v.iter().product::<f64>())
            .min_by(f64::total_cmp)
    }

    pub fn min_product_exact(&self) -> Option<Rational> {
        let exact = self.exact.as_ref()?;
        exact
            .iter()
            .map(|v| v.iter().fold(Rational::ONE, |acc, x| acc * *x))
            .min()
    }
}

fn dedup_real(mut vectors: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    vectors.retain(|v| v.iter().any(|x| x.abs() > DEDUP_TOLERANCE));
    vectors.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for v in vectors {
        // anything within tolerance must share a first coordinate within tolerance
        let dup = out
            .iter()
            .rev()
            .take_while(|u| v[0] - u[0] <= DEDUP_TOLERANCE)
            .any(|u| {
                u.iter()
                    .zip(&v)
                    .all(|(a, b)| (a - b).abs() <= DEDUP_TOLERANCE)
            });
        if !dup {
            out.push(v);
        }
    }
    out
}

/// Enumerates the error set of a linear code. Since every integer difference
/// in `{-(2^p-1), ..., 2^p-1}` is realised by some pair of PAM levels, this
/// is the set of nonzero `F Δ` over nonzero difference vectors `Δ`.
pub fn error_set(code: &SpaceCode) -> Result<ErrorSet> {
    let bits = code.enumeration_bits();
    if bits > MAX_ENUMERATION_BITS {
        return Err(Error::EnumerationTooLarge(bits));
    }
    let q = code.constellation.size() as i128;
    match &code.exact {
        Some(f) => {
            let mut set = BTreeSet::new();
            for_each_difference(q, code.cols, |delta| {
                let e = apply_exact(f, code.rows, code.cols, delta)?;
                if e.iter().any(|x| !x.is_zero()) {
                    set.insert(e);
                }
                Ok(())
            })?;
            ErrorSet::from_exact(set.into_iter().collect())
        }
        None => {
            let mut vectors = Vec::new();
            for_each_difference(q, code.cols, |delta| {
                let e: Vec<f64> = (0..code.rows)
                    .map(|i| {
                        (0..code.cols)
                            .map(|j| code.entry(i, j) * delta[j] as f64)
                            .sum()
                    })
                    .collect();
                vectors.push(e);
                Ok(())
            })?;
            Ok(ErrorSet {
                dim: code.rows,
                vectors: dedup_real(vectors),
                exact: None,
            })
        }
    }
}

/// True iff every error vector is unipolar with no zero entry, the necessary
/// and sufficient condition for full large-scale diversity.
pub fn is_fldsc(es: &ErrorSet) -> bool {
    if es.is_empty() {
        return false;
    }
    match &es.exact {
        Some(exact) => exact.iter().all(|e| {
            let s = e[0].signum();
            s != 0 && e.iter().all(|x| x.signum() == s)
        }),
        None => es
            .vectors
            .iter()
            .all(|e| e.iter().all(|x| *x > 0.0) || e.iter().all(|x| *x < 0.0)),
    }
}

/// Diversity and coding gains of an error set on a channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainReport {
    /// Large-scale diversity gain `Ω`.
    pub omega: f64,
    /// `min_e G_d(e)`; zero when some error vector has a zero entry.
    pub gd_worst: f64,
    /// `max_e G_c(e)`, absent when `G_c` is undefined for some `e`.
    pub gc_worst: Option<f64>,
    /// Number of error vectors whose `G_d <= 1`, where `ln ln G_d` is undefined.
    pub gc_undefined: usize,
}

pub fn gains(es: &ErrorSet, chan: &ChannelSpec) -> Result<GainReport> {
    if es.dim != chan.n() {
        return Err(Error::DimensionMismatch {
            expected: chan.n(),
            found: es.dim,
        });
    }
    let mut gd_worst = f64::INFINITY;
    let mut gc_worst: Option<f64> = None;
    let mut gc_undefined = 0;
    for e in &es.vectors {
        if e.contains(&0.0) {
            gd_worst = 0.0;
            gc_undefined += 1;
            continue;
        }
        let term = dominant_term(e, chan)?;
        gd_worst = gd_worst.min(term.gd);
        match term.gc {
            Some(gc) => gc_worst = Some(gc_worst.map_or(gc, |g| g.max(gc))),
            None => gc_undefined += 1,
        }
    }
    if !is_fldsc(es) {
        gd_worst = 0.0;
    }
    Ok(GainReport {
        omega: chan.omega(),
        gd_worst,
        gc_worst: if gc_undefined == 0 { gc_worst } else { None },
        gc_undefined,
    })
}

/// Rescales `F` so that `E[Σ_i x_i] = 1` with `E[s_l] = (2^p - 1)/2`.
pub fn normalize_power(code: &SpaceCode) -> Result<SpaceCode> {
    let mean = code.constellation.mean_level();
    match &code.exact {
        Some(exact) => {
            let sum = exact
                .iter()
                .try_fold(Rational::ZERO, |acc, x| acc.checked_add(x))?;
            if sum.is_zero() {
                return Err(Error::ZeroMatrix);
            }
            let scale = Rational::ONE.checked_div(&sum.checked_mul(&mean)?)?;
            let rows = exact
                .chunks(code.cols)
                .map(|row| {
                    row.iter()
                        .map(|x| x.checked_mul(&scale))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            SpaceCode::from_rationals(rows, code.constellation)
        }
        None => {
            let sum: f64 = code.values.iter().sum();
            if sum == 0.0 {
                return Err(Error::ZeroMatrix);
            }
            let scale = 1.0 / (sum * mean.to_f64());
            let mut out = code.clone();
            out.values.iter_mut().for_each(|x| *x *= scale);
            out.power_normalized = true;
            Ok(out)
        }
    }
}
