//! Pairwise error probability of the ML receiver over log-normal fading.
//!
//! Three routes to the same quantity:
//!
//! * the asymptotic lower/upper bounds and their dominant-term
//!   decomposition into small-scale diversity and coding gains,
//! * adaptive Gauss–Hermite tensor quadrature of `E_H[Q(d(e)/2)]` over the
//!   `M N` Gaussian log-gains,
//! * a Monte Carlo average of the conditional PEP, used to cross-check the
//!   quadrature.
//!
//! Everything that can underflow is carried in the log domain. The optical
//! power `P_op` is normalised to one throughout.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use libm::erfc;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{dot, substream, ChannelRealization, ChannelSpec};
use crate::error::{Error, Result};

/// Relative change between successive node doublings accepted as converged.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

/// Default Gauss–Hermite nodes per dimension.
pub const DEFAULT_NODES: usize = 24;

/// Node counts are doubled at most up to this value.
pub const MAX_NODES: usize = 96;

/// Largest `M N` handled by the tensor quadrature.
pub const MAX_QUADRATURE_DIMS: usize = 4;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `ln Q(x)`, accurate far into the upper tail where `Q` underflows.
pub fn ln_q(x: f64) -> f64 {
    if x < 30.0 {
        return q_function(x).ln();
    }
    // asymptotic expansion of the Mills ratio
    let inv2 = 1.0 / (x * x);
    let mut term = 1.0;
    let mut series = 1.0;
    for k in 1..=8 {
        term *= -((2 * k - 1) as f64) * inv2;
        series += term;
    }
    -0.5 * x * x - x.ln() - LN_SQRT_2PI + series.ln()
}

fn ln_phi(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

/// `φ(x) / Q(x)`.
fn inverse_mills(x: f64) -> f64 {
    (ln_phi(x) - ln_q(x)).exp()
}

/// `d(e)/2` with `d^2 = (rho/N) Σ_i (h_i^T e)^2`, and `S = Σ_i (h_i^T e)^2`.
fn half_distance(h: &[f64], n: usize, e: &[f64], rho: f64) -> (f64, f64) {
    let s: f64 = h.chunks(n).map(|row| dot(row, e).powi(2)).sum();
    (0.5 * (rho * s / n as f64).sqrt(), s)
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::NonFinite("rho must be finite and > 0"));
    }
    Ok(())
}

/// `P(s -> ŝ | H) = Q(d(e)/2)`.
pub fn conditional_pep(h: &ChannelRealization, e: &[f64], rho: f64) -> Result<f64> {
    Ok(ln_conditional_pep(h, e, rho)?.exp())
}

pub fn ln_conditional_pep(h: &ChannelRealization, e: &[f64], rho: f64) -> Result<f64> {
    if e.len() != h.n() {
        return Err(Error::DimensionMismatch {
            expected: h.n(),
            found: e.len(),
        });
    }
    check_rho(rho)?;
    Ok(ln_q(half_distance(h.as_slice(), h.n(), e, rho).0))
}

fn check_vector(e: &[f64], spec: &ChannelSpec) -> Result<()> {
    if e.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            found: e.len(),
        });
    }
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("error vector"));
    }
    Ok(())
}

/// Which upper-bound term is larger at a given SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperTerm {
    Poly,
    Exp,
}

/// Lower bound `P_L` and the two upper-bound terms `P_U1`, `P_U2`, all in
/// natural-log form together with their constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PepBounds {
    pub ln_lower: f64,
    pub ln_upper_poly: f64,
    pub ln_upper_exp: f64,
    pub omega: f64,
    pub ln_c_l: f64,
    pub ln_c_u1: f64,
    pub ln_c_u2: f64,
}

impl PepBounds {
    pub fn lower(&self) -> f64 {
        self.ln_lower.exp()
    }

    pub fn upper_poly(&self) -> f64 {
        self.ln_upper_poly.exp()
    }

    pub fn upper_exp(&self) -> f64 {
        self.ln_upper_exp.exp()
    }

    /// `ln(P_U1 + P_U2)`.
    pub fn ln_upper(&self) -> f64 {
        log_add_exp(self.ln_upper_poly, self.ln_upper_exp)
    }

    pub fn upper(&self) -> f64 {
        self.ln_upper().exp()
    }

    pub fn larger_upper_term(&self) -> UpperTerm {
        if self.ln_upper_poly >= self.ln_upper_exp {
            UpperTerm::Poly
        } else {
            UpperTerm::Exp
        }
    }

    /// Whether `P_L <= P <= P_U1 + P_U2` for a probability given as `ln P`.
    pub fn brackets_ln(&self, ln_p: f64) -> bool {
        self.ln_lower <= ln_p && ln_p <= self.ln_upper()
    }

    pub fn brackets(&self, p: f64) -> bool {
        self.brackets_ln(p.ln())
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Evaluates the PEP bounds for an error vector satisfying the unipolar,
/// zero-free assumption. Requires `rho > e^2` so that `ln rho` and
/// `ln(rho / ln^2 rho)` are positive.
pub fn pep_bounds(e: &[f64], spec: &ChannelSpec, rho: f64) -> Result<PepBounds> {
    check_vector(e, spec)?;
    check_rho(rho)?;
    if !(e.iter().all(|x| *x > 0.0) || e.iter().all(|x| *x < 0.0)) {
        return Err(Error::AssumptionViolated);
    }
    if rho <= std::f64::consts::E.powi(2) {
        return Err(Error::SnrTooLow(rho));
    }
    let (m, n) = (spec.m(), spec.n());
    let mn = (m * n) as f64;
    let omega = spec.omega();
    let lr = rho.ln();
    let llr = lr.ln();
    let e2: f64 = e.iter().map(|x| x * x).sum();
    let sum_ln_sigma: f64 = spec.sigmas().iter().map(|s| s.ln()).sum();
    let sum_sigma2: f64 = spec.sigmas().iter().map(|s| s * s).sum();

    let ln_c_l = sum_ln_sigma - mn * (4.0 * PI).ln() + mn / 2.0 + ln_q(0.5 / e2.sqrt());
    let shift_l = lr + omega.ln() - (m as f64 * e2).ln();
    let ln_lower = ln_c_l
        - mn * llr
        - spec
            .sigmas()
            .iter()
            .map(|s| shift_l * shift_l / (8.0 * s * s))
            .sum::<f64>();

    let ln_c_u1 = sum_sigma2 / 2.0 - LN_2 - sum_ln_sigma - (mn / 2.0) * (e2 / n as f64).ln();
    let ln_upper_poly = ln_c_u1 - (mn / 2.0) * lr - omega * lr * lr / 8.0;

    let ln_c_u2 = mn * (n as f64).ln()
        - LN_2
        - sum_ln_sigma
        - omega / 8.0 * (n as f64 * omega / m as f64).ln().powi(2);
    let base = (rho / (lr * lr)).ln() + omega.ln();
    let mut quad = 0.0;
    for i in 0..m {
        for (j, ej) in e.iter().enumerate() {
            let t = base - (ej * ej).ln();
            quad += t * t / (8.0 * spec.sigma(i, j).powi(2));
        }
    }
    let ln_upper_exp = ln_c_u2 - mn * llr - quad;

    Ok(PepBounds {
        ln_lower,
        ln_upper_poly,
        ln_upper_exp,
        omega,
        ln_c_l,
        ln_c_u1,
        ln_c_u2,
    })
}

/// Small-scale diversity gain `G_d(e) = Π_j |e_j|^{Σ_i σ_ij^{-2}}` and, where
/// `ln ln G_d` exists, the coding gain `G_c(e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominantTerm {
    pub gd: f64,
    pub ln_gd: f64,
    pub gc: Option<f64>,
}

pub fn dominant_term(e: &[f64], spec: &ChannelSpec) -> Result<DominantTerm> {
    check_vector(e, spec)?;
    if e.contains(&0.0) {
        return Err(Error::ZeroEntry);
    }
    let (m, n) = (spec.m(), spec.n());
    let ln_gd: f64 = e
        .iter()
        .enumerate()
        .map(|(j, x)| spec.column_precision(j) * x.abs().ln())
        .sum();
    let gc = (ln_gd > 0.0).then(|| {
        let mut quad = 0.0;
        for i in 0..m {
            for (j, x) in e.iter().enumerate() {
                quad += (spec.sigma(i, j) * x.abs().ln()).powi(2);
            }
        }
        let base = n as f64 * spec.omega() / m as f64;
        (0.5 * quad + 0.5 * ln_gd.ln() * base.ln()).exp()
    });
    Ok(DominantTerm {
        gd: ln_gd.exp(),
        ln_gd,
        gc,
    })
}

/// Integrand of the average PEP in standardised coordinates
/// `z_ij = mu_ij + sigma_ij w_ij`, with `w` standard normal.
struct PepIntegrand<'a> {
    e: &'a [f64],
    mu: &'a [f64],
    sigma: &'a [f64],
    n: usize,
    rho: f64,
}

impl PepIntegrand<'_> {
    fn dims(&self) -> usize {
        self.mu.len()
    }

    fn gains(&self, w: &[f64]) -> Vec<f64> {
        w.iter()
            .zip(self.mu)
            .zip(self.sigma)
            .map(|((w, mu), s)| (mu + s * w).exp())
            .collect()
    }

    /// `ln Q(d/2)` at `w`.
    fn ln_pep(&self, w: &[f64]) -> f64 {
        ln_q(half_distance(&self.gains(w), self.n, self.e, self.rho).0)
    }

    /// `ln Q(d/2) + ln φ_d(w)`.
    fn ln_density(&self, w: &[f64]) -> f64 {
        self.ln_pep(w) + w.iter().map(|x| ln_phi(*x)).sum::<f64>()
    }

    fn gradient(&self, w: &[f64]) -> DVector<f64> {
        let h = self.gains(w);
        let (u, s) = half_distance(&h, self.n, self.e, self.rho);
        let mut g = DVector::from_iterator(w.len(), w.iter().map(|x| -x));
        if s > 0.0 && u > 0.0 {
            let lambda = inverse_mills(u);
            for (i, row) in h.chunks(self.n).enumerate() {
                let proj = dot(row, self.e);
                for (j, (hij, ej)) in row.iter().zip(self.e).enumerate() {
                    let k = i * self.n + j;
                    // d u / d z_ij = u (h_i^T e) e_j h_ij / S, chain through sigma
                    g[k] -= lambda * u * proj * ej * hij / s * self.sigma[k];
                }
            }
        }
        g
    }

    /// Negative Hessian by central differences of the analytic gradient.
    fn neg_hessian(&self, w: &[f64]) -> DMatrix<f64> {
        let d = w.len();
        let step = 1e-5;
        let mut hess = DMatrix::zeros(d, d);
        let mut probe = w.to_vec();
        for b in 0..d {
            probe[b] = w[b] + step;
            let gp = self.gradient(&probe);
            probe[b] = w[b] - step;
            let gm = self.gradient(&probe);
            probe[b] = w[b];
            for a in 0..d {
                hess[(a, b)] = -(gp[a] - gm[a]) / (2.0 * step);
            }
        }
        (&hess + hess.transpose()) * 0.5
    }

    /// Mode of the integrand and the Cholesky factor of the local covariance,
    /// found by damped Newton iterations from the prior mean.
    fn laplace(&self) -> (DVector<f64>, DMatrix<f64>) {
        let d = self.dims();
        let mut w = DVector::zeros(d);
        let mut f = self.ln_density(w.as_slice());
        for _ in 0..200 {
            let g = self.gradient(w.as_slice());
            if g.amax() < 1e-10 {
                break;
            }
            let a = self.neg_hessian(w.as_slice());
            let mut damping = 0.0;
            let mut moved = false;
            for _ in 0..60 {
                let shifted = &a + DMatrix::identity(d, d) * damping;
                if let Some(ch) = shifted.cholesky() {
                    let step = ch.solve(&g);
                    let candidate = &w + &step;
                    let fc = self.ln_density(candidate.as_slice());
                    if fc >= f {
                        moved = step.amax() > 1e-14;
                        w = candidate;
                        f = fc;
                        break;
                    }
                }
                damping = if damping == 0.0 { 1e-3 } else { damping * 4.0 };
            }
            if !moved {
                break;
            }
        }
        let a = self.neg_hessian(w.as_slice());
        let cov_factor = a
            .cholesky()
            .and_then(|ch| ch.inverse().cholesky())
            .map(|ch| ch.l())
            .unwrap_or_else(|| DMatrix::identity(d, d));
        (w, cov_factor)
    }
}

/// Average PEP from tensor quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub probability: f64,
    pub ln_probability: f64,
    /// Nodes per dimension of the reported (finest) evaluation.
    pub nodes_per_dim: usize,
    /// `|P(n) - P(n/2)| / P(n)` between the last two node counts.
    pub relative_change: f64,
}

impl QuadratureResult {
    pub fn converged(&self) -> bool {
        self.relative_change < QUADRATURE_TOLERANCE
    }
}

/// Adaptive Gauss–Hermite tensor quadrature of `E_H[Q(d(e)/2)]`.
///
/// The rule is centred on the mode of `Q(d/2) f_H` and scaled by its local
/// curvature, so that the deep-fade region that dominates at high SNR lies
/// among the nodes. Node counts start at `nodes_per_dim` and double until two
/// successive estimates agree to [`QUADRATURE_TOLERANCE`] or [`MAX_NODES`] is
/// passed.
pub fn pep_quadrature(
    e: &[f64],
    spec: &ChannelSpec,
    rho: f64,
    nodes_per_dim: usize,
) -> Result<QuadratureResult> {
    check_vector(e, spec)?;
    check_rho(rho)?;
    let dims = spec.m() * spec.n();
    if dims > MAX_QUADRATURE_DIMS {
        return Err(Error::DimensionTooLarge(dims));
    }
    if nodes_per_dim < 10 {
        return Err(Error::TooFewNodes(nodes_per_dim));
    }
    if e.iter().all(|x| *x == 0.0) {
        return Ok(QuadratureResult {
            probability: 0.5,
            ln_probability: -LN_2,
            nodes_per_dim,
            relative_change: 0.0,
        });
    }
    let integrand = PepIntegrand {
        e,
        mu: spec.mus(),
        sigma: spec.sigmas(),
        n: spec.n(),
        rho,
    };
    let (center, factor) = integrand.laplace();

    let mut nodes = nodes_per_dim;
    let mut prev = tensor_rule(&integrand, &center, &factor, nodes);
    loop {
        let next_nodes = nodes * 2;
        let next = tensor_rule(&integrand, &center, &factor, next_nodes);
        let rel = ((next - prev).exp_m1()).abs();
        nodes = next_nodes;
        if rel < QUADRATURE_TOLERANCE || nodes * 2 > MAX_NODES {
            return Ok(QuadratureResult {
                probability: next.exp(),
                ln_probability: next,
                nodes_per_dim: nodes,
                relative_change: rel,
            });
        }
        prev = next;
    }
}

/// `ln ∫ Q(d/2) φ(w) dw` with `w = center + √2 L x` on a tensor Gauss–Hermite grid.
fn tensor_rule(
    f: &PepIntegrand<'_>,
    center: &DVector<f64>,
    factor: &DMatrix<f64>,
    nodes: usize,
) -> f64 {
    let d = center.len();
    let rule = GaussHermite::new(NonZeroUsize::new(nodes).expect("nodes > 0"));
    let pairs: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, w.ln())).collect();
    let ln_jacobian = 0.5 * d as f64 * LN_2 + factor.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let reference = f.ln_density(center.as_slice());

    let partials: Vec<f64> = (0..nodes)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0usize; d];
            idx[0] = first;
            let mut x = vec![0.0; d];
            let mut w = vec![0.0; d];
            let mut acc = 0.0;
            loop {
                let mut ln_weight = 0.0;
                let mut x2 = 0.0;
                for k in 0..d {
                    x[k] = pairs[idx[k]].0;
                    ln_weight += pairs[idx[k]].1;
                    x2 += x[k] * x[k];
                }
                for a in 0..d {
                    let mut v = center[a];
                    for b in 0..=a {
                        v += SQRT_2 * factor[(a, b)] * x[b];
                    }
                    w[a] = v;
                }
                acc += (ln_weight + x2 + f.ln_density(&w) - reference).exp();
                // odometer over dimensions 1..d
                let mut k = d;
                loop {
                    k -= 1;
                    if k == 0 {
                        return acc;
                    }
                    idx[k] += 1;
                    if idx[k] < nodes {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .collect();
    reference + ln_jacobian + pairwise_sum(&partials).ln()
}

/// Sum by recursive halving; order depends only on the input length.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// How Monte Carlo draws of the log-gains are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Draw `H` from its log-normal law and average `Q(d/2)`.
    Direct,
    /// Draw from a Gaussian proposal around the integrand mode and reweight
    /// by the likelihood ratio. Unbiased for any proposal; needed once the
    /// PEP is far below `1 / samples`.
    Importance,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ln_mean: f64,
    pub samples: usize,
}

const MC_BLOCK: usize = 1 << 14;

/// Monte Carlo average of the conditional PEP `Q(d(e)/2)` over the channel.
pub fn pep_monte_carlo(
    e: &[f64],
    spec: &ChannelSpec,
    rho: f64,
    samples: usize,
    seed: u64,
    sampling: Sampling,
) -> Result<MonteCarloEstimate> {
    check_vector(e, spec)?;
    check_rho(rho)?;
    if samples < 2 {
        return Err(Error::InvalidConfig(
            "Monte Carlo needs at least 2 samples".into(),
        ));
    }
    let f = PepIntegrand {
        e,
        mu: spec.mus(),
        sigma: spec.sigmas(),
        n: spec.n(),
        rho,
    };
    let d = f.dims();
    // proposal N(center, s^2 L L^T); the direct route is center 0, L = I, s = 1
    let (center, factor, scale) = match sampling {
        Sampling::Direct => (DVector::zeros(d), DMatrix::identity(d, d), 1.0),
        Sampling::Importance => {
            let (c, l) = f.laplace();
            (c, l, 1.25)
        }
    };
    let ln_det = d as f64 * f64::ln(scale) + factor.diagonal().iter().map(|v| v.ln()).sum::<f64>();
    // log-weight at the proposal centre, used as a common scale
    let reference = f.ln_density(center.as_slice()) + d as f64 * LN_SQRT_2PI + ln_det;

    let blocks = samples.div_ceil(MC_BLOCK);
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, b as u64);
            let count = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut x = vec![0.0; d];
            let mut w = vec![0.0; d];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                for v in x.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                for a in 0..d {
                    let mut v = center[a];
                    for bb in 0..=a {
                        v += scale * factor[(a, bb)] * x[bb];
                    }
                    w[a] = v;
                }
                let ln_weight = match sampling {
                    Sampling::Direct => f.ln_pep(&w),
                    Sampling::Importance => {
                        let ln_proposal: f64 = x.iter().map(|v| ln_phi(*v)).sum::<f64>() - ln_det;
                        f.ln_density(&w) - ln_proposal
                    }
                };
                let shifted = match sampling {
                    Sampling::Direct => ln_weight.exp(),
                    Sampling::Importance => (ln_weight - reference).exp(),
                };
                s1 += shifted;
                s2 += shifted * shifted;
            }
            (s1, s2)
        })
        .collect();
    let s1 = pairwise_sum(&sums.iter().map(|s| s.0).collect::<Vec<_>>());
    let s2 = pairwise_sum(&sums.iter().map(|s| s.1).collect::<Vec<_>>());
    let nf = samples as f64;
    let mean_shifted = s1 / nf;
    let var = ((s2 / nf - mean_shifted * mean_shifted) * nf / (nf - 1.0)).max(0.0);
    let se_shifted = (var / nf).sqrt();
    let ln_scale = match sampling {
        Sampling::Direct => 0.0,
        Sampling::Importance => reference,
    };
    Ok(MonteCarloEstimate {
        mean: mean_shifted * ln_scale.exp(),
        std_error: se_shifted * ln_scale.exp(),
        ln_mean: mean_shifted.ln() + ln_scale,
        samples,
    })
}
