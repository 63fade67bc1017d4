//! Log-normal MIMO channel sampling and the optical SNR convention.
//!
//! Each path gain is `h_ij = exp(z_ij)` with independent
//! `z_ij ~ N(mu_ij, sigma_ij^2)`. Noise is white Gaussian with per-dimension
//! variance `sigma_n^2 = 1 / (N rho_op^2)` where `rho_op` is the optical SNR
//! at unit average optical power; `rho = rho_op^2` is the squared optical SNR
//! that appears in the error-probability expressions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the log-means `mu_ij` are chosen from the log-variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MuPolicy {
    /// `mu = -sigma^2 / 2`, so that `E[h] = 1`.
    #[default]
    UnitMean,
    /// `mu = 0`.
    Zero,
}

impl MuPolicy {
    pub fn mu_for(self, sigma2: f64) -> f64 {
        match self {
            MuPolicy::UnitMean => -sigma2 / 2.0,
            MuPolicy::Zero => 0.0,
        }
    }
}

impl std::str::FromStr for MuPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_mean" => Ok(MuPolicy::UnitMean),
            "zero" => Ok(MuPolicy::Zero),
            other => Err(Error::InvalidConfig(format!("unknown mu_policy {other:?}"))),
        }
    }
}

/// Dimensions and log-normal parameters of an `M × N` channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    m: usize,
    n: usize,
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl ChannelSpec {
    /// `mu` and `sigma` are row-major `M × N`; `sigma` holds standard deviations.
    pub fn new(m: usize, n: usize, mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidChannel(format!(
                "dimensions must be positive, got {m}x{n}"
            )));
        }
        for (name, v) in [("mu", &mu), ("sigma", &sigma)] {
            if v.len() != m * n {
                return Err(Error::InvalidChannel(format!(
                    "{name} has {} entries, expected {}",
                    v.len(),
                    m * n
                )));
            }
        }
        if mu.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("mu"));
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidChannel(
                "every sigma must be finite and > 0".into(),
            ));
        }
        Ok(Self { m, n, mu, sigma })
    }

    /// Identically distributed paths with log-variance `sigma2`.
    pub fn iid(m: usize, n: usize, sigma2: f64, policy: MuPolicy) -> Result<Self> {
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::InvalidChannel(format!(
                "sigma2 must be finite and > 0, got {sigma2}"
            )));
        }
        Self::new(
            m,
            n,
            vec![policy.mu_for(sigma2); m * n],
            vec![sigma2.sqrt(); m * n],
        )
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self, i: usize, j: usize) -> f64 {
        self.mu[i * self.n + j]
    }

    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.n + j]
    }

    pub fn mus(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigma
    }

    /// Large-scale diversity gain `Ω = Σ_ij σ_ij^{-2}`.
    pub fn omega(&self) -> f64 {
        self.sigma.iter().map(|s| 1.0 / (s * s)).sum()
    }

    /// `Σ_i σ_ij^{-2}` for transmit aperture `j`.
    pub fn column_precision(&self, j: usize) -> f64 {
        (0..self.m).map(|i| self.sigma(i, j).powi(-2)).sum()
    }
}

/// One draw of the `M × N` path-gain matrix; all entries strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    m: usize,
    n: usize,
    h: Vec<f64>,
}

impl ChannelRealization {
    pub fn new(m: usize, n: usize, h: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 || h.len() != m * n {
            return Err(Error::DimensionMismatch {
                expected: m * n,
                found: h.len(),
            });
        }
        if h.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidChannel(
                "path gains must be finite and > 0".into(),
            ));
        }
        Ok(Self { m, n, h })
    }

    /// Deterministic realization `h_ij = exp(mu_ij)`.
    pub fn at_log_mean(spec: &ChannelSpec) -> Self {
        Self {
            m: spec.m,
            n: spec.n,
            h: spec.mu.iter().map(|z| z.exp()).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.h[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.h[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.h
    }

    /// `H x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.m).map(|i| dot(self.row(i), x)).collect()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Draws `h_ij = exp(mu_ij + sigma_ij g)` with independent standard normal `g`.
pub fn sample_channel<R: Rng + ?Sized>(spec: &ChannelSpec, rng: &mut R) -> ChannelRealization {
    let h = spec
        .mu
        .iter()
        .zip(&spec.sigma)
        .map(|(mu, s)| {
            let g: f64 = rng.sample(StandardNormal);
            (mu + s * g).exp()
        })
        .collect();
    ChannelRealization {
        m: spec.m,
        n: spec.n,
        h,
    }
}

/// AWGN level for a given optical SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub variance_per_dim: f64,
    /// Optical SNR `rho_op` (linear).
    pub rho_op: f64,
    /// Squared optical SNR `rho = rho_op^2 = 1 / (N sigma_n^2)`.
    pub rho: f64,
}

/// Converts an optical SNR in dB (`20 log10 rho_op`, equivalently
/// `10 log10 rho`) into the per-dimension noise variance for `n` transmit
/// apertures.
pub fn noise_variance(optical_snr_db: f64, n: usize) -> Result<NoiseSpec> {
    if !optical_snr_db.is_finite() {
        return Err(Error::NonFinite("optical_snr_db"));
    }
    if n == 0 {
        return Err(Error::InvalidChannel("N must be positive".into()));
    }
    let rho_op = 10f64.powf(optical_snr_db / 20.0);
    let rho = 10f64.powf(optical_snr_db / 10.0);
    Ok(NoiseSpec {
        variance_per_dim: 1.0 / (n as f64 * rho),
        rho_op,
        rho,
    })
}

/// Squared optical SNR for an axis value in dB.
pub fn rho_from_db(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Independent random stream `stream` under `seed`. Streams never overlap,
/// so work split into numbered blocks is reproducible for any worker count.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(ChannelSpec::iid(0, 2, 0.1, MuPolicy::Zero).is_err());
        assert!(ChannelSpec::iid(2, 2, 0.0, MuPolicy::Zero).is_err());
        assert!(ChannelSpec::new(1, 2, vec![0.0, 0.0], vec![0.1, -0.1]).is_err());
        assert!(ChannelSpec::new(1, 2, vec![0.0], vec![0.1, 0.1]).is_err());
        assert!(ChannelRealization::new(1, 1, vec![0.0]).is_err());
    }

    #[test]
    fn omega_of_equal_variances() {
        let spec = ChannelSpec::iid(2, 2, 0.1, MuPolicy::UnitMean).unwrap();
        assert!((spec.omega() - 40.0).abs() < 1e-9);
        assert!((spec.mu(1, 0) + 0.05).abs() < 1e-15);
    }

    #[test]
    fn tiny_sigma_is_deterministic() {
        let spec = ChannelSpec::new(1, 2, vec![0.3, -0.2], vec![1e-12, 1e-12]).unwrap();
        let h = sample_channel(&spec, &mut substream(1, 0));
        assert!((h.get(0, 0) - 0.3f64.exp()).abs() < 1e-10);
        assert!((h.get(0, 1) - (-0.2f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn noise_examples() {
        let n = noise_variance(0.0, 2).unwrap();
        assert!((n.variance_per_dim - 0.5).abs() < 1e-15);
        let n = noise_variance(20.0, 2).unwrap();
        assert!((n.rho_op - 10.0).abs() < 1e-12);
        assert!((n.variance_per_dim - 1.0 / 200.0).abs() < 1e-15);
        for db in [-7.0, 3.3, 41.0] {
            let n = noise_variance(db, 3).unwrap();
            assert!((n.rho - n.rho_op * n.rho_op).abs() <= 1e-12 * n.rho);
        }
        assert!(noise_variance(f64::NAN, 2).is_err());
    }

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let a: u64 = substream(7, 3).random();
        let b: u64 = substream(7, 3).random();
        let c: u64 = substream(7, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
