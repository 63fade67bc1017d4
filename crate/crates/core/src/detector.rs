//! Exhaustive maximum-likelihood detection for `y = H F s + n`.

use crate::channel::ChannelRealization;
use crate::codebook::{SpaceCode, MAX_ENUMERATION_BITS};
use crate::error::{Error, Result};

/// A received vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    y: Vec<f64>,
}

impl Observation {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
        Ok(Self { y })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.y
    }
}

/// Precomputed codebook `{(s, F s)}` in lexicographic order of `s`.
#[derive(Debug, Clone)]
pub struct MlDetector {
    n_tx: usize,
    symbols: Vec<Vec<u32>>,
    codewords: Vec<Vec<f64>>,
}

impl MlDetector {
    pub fn new(code: &SpaceCode) -> Result<Self> {
        let bits = code.enumeration_bits();
        if bits > MAX_ENUMERATION_BITS {
            return Err(Error::EnumerationTooLarge(bits));
        }
        let q = code.constellation().size();
        let l = code.n_symbols();
        let count = (q as usize).pow(l as u32);
        let mut symbols = Vec::with_capacity(count);
        let mut s = vec![0u32; l];
        for _ in 0..count {
            symbols.push(s.clone());
            // increment with the last symbol fastest, so index order is lexicographic
            for k in (0..l).rev() {
                s[k] += 1;
                if s[k] < q {
                    break;
                }
                s[k] = 0;
            }
        }
        let codewords = symbols.iter().map(|s| code.encode_unchecked(s)).collect();
        Ok(Self {
            n_tx: code.n_tx(),
            symbols,
            codewords,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self, index: usize) -> &[u32] {
        &self.symbols[index]
    }

    pub fn codeword(&self, index: usize) -> &[f64] {
        &self.codewords[index]
    }

    /// Index of `argmin_s ||y - H F s||^2`; ties resolve to the smallest index.
    pub fn detect_index(&self, y: &[f64], h: &ChannelRealization) -> Result<usize> {
        if h.n() != self.n_tx {
            return Err(Error::DimensionMismatch {
                expected: self.n_tx,
                found: h.n(),
            });
        }
        if y.len() != h.m() {
            return Err(Error::DimensionMismatch {
                expected: h.m(),
                found: y.len(),
            });
        }
        Ok(self.detect_index_unchecked(y, h))
    }

    pub(crate) fn detect_index_unchecked(&self, y: &[f64], h: &ChannelRealization) -> usize {
        let mut best = 0;
        let mut best_metric = f64::INFINITY;
        for (k, x) in self.codewords.iter().enumerate() {
            let mut metric = 0.0;
            for (i, yi) in y.iter().enumerate() {
                let r = yi - crate::channel::dot(h.row(i), x);
                metric += r * r;
            }
            if metric < best_metric {
                best_metric = metric;
                best = k;
            }
        }
        best
    }

    pub fn detect(&self, y: &Observation, h: &ChannelRealization) -> Result<Vec<u32>> {
        Ok(self.symbols[self.detect_index(y.as_slice(), h)?].clone())
    }
}

/// ML estimate of the transmitted symbols, assuming the receiver knows `H`.
pub fn ml_detect(y: &Observation, h: &ChannelRealization, code: &SpaceCode) -> Result<Vec<u32>> {
    MlDetector::new(code)?.detect(y, h)
}
