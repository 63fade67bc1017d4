//! Seeded Monte Carlo BER engine for FLDSC, spatial multiplexing and SISO.
//!
//! Each SNR point is simulated in fixed-size blocks of trials. Block `b` of
//! point `k` draws from substream `(seed, k << 32 | b)`, and blocks are
//! merged strictly in index order, stopping at the first block where the
//! running bit-error count reaches the target. The result therefore does
//! not depend on how many worker threads ran the blocks.

use std::fmt;
use std::io;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{dot, noise_variance, sample_channel, substream, ChannelSpec, MuPolicy};
use crate::codebook::{normalize_power, Constellation, SpaceCode};
use crate::designer::closed_form_2x2;
use crate::detector::MlDetector;
use crate::error::{Error, Result};

/// Trials per block.
pub const BLOCK_TRIALS: u64 = 4096;

/// Smallest accepted `max_trials`.
pub const MIN_TRIALS: u64 = 10_000;

/// A point is only marked converged when the target is at least this.
pub const MIN_CONVERGED_ERRORS: u64 = 50;

/// Blocks per wave double up to this.
const MAX_WAVE_BLOCKS: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// The optimal 2×2 FLDSC, power normalized.
    Fldsc,
    /// Spatial multiplexing: identity code, independent PAM per aperture.
    Sm,
    /// One aperture each side with `2^{2p}`-PAM.
    Siso,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Fldsc => "fldsc",
            Scheme::Sm => "sm",
            Scheme::Siso => "siso",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fldsc" => Ok(Scheme::Fldsc),
            "sm" => Ok(Scheme::Sm),
            "siso" => Ok(Scheme::Siso),
            other => Err(Error::InvalidConfig(format!("unknown scheme {other:?}"))),
        }
    }
}

fn default_p() -> u32 {
    1
}

fn default_seed() -> u64 {
    1
}

fn default_max_trials() -> u64 {
    1_000_000
}

fn default_target() -> u64 {
    100
}

/// One simulation sweep. `m` and `n` default to 2 (1 for `siso`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub scheme: Scheme,
    #[serde(default = "default_p")]
    pub p: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub sigma2: f64,
    #[serde(default)]
    pub mu_policy: MuPolicy,
    pub snr_db: Vec<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_max_trials")]
    pub max_trials: u64,
    #[serde(default = "default_target")]
    pub target_bit_errors: u64,
}

impl SimConfig {
    /// A config with default `p`, dimensions, policy, seed and budgets.
    pub fn new(scheme: Scheme, sigma2: f64, snr_db: Vec<f64>) -> Self {
        Self {
            scheme,
            p: default_p(),
            m: None,
            n: None,
            sigma2,
            mu_policy: MuPolicy::default(),
            snr_db,
            seed: default_seed(),
            max_trials: default_max_trials(),
            target_bit_errors: default_target(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("SimConfig always serializes")
    }

    /// `(M, N)` after defaults.
    pub fn dims(&self) -> (usize, usize) {
        let d = if self.scheme == Scheme::Siso { 1 } else { 2 };
        (self.m.unwrap_or(d), self.n.unwrap_or(d))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.max_trials < MIN_TRIALS {
            return bad(format!(
                "max_trials must be at least {MIN_TRIALS}, got {}",
                self.max_trials
            ));
        }
        if self.target_bit_errors == 0 {
            return bad("target_bit_errors must be positive".into());
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return bad(format!(
                "sigma2 must be finite and > 0, got {}",
                self.sigma2
            ));
        }
        if self.snr_db.is_empty() {
            return bad("snr_db grid is empty".into());
        }
        if self.snr_db.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("snr_db"));
        }
        if self.p == 0 {
            return bad("p must be at least 1".into());
        }
        let (m, n) = self.dims();
        if m == 0 || n == 0 {
            return bad(format!("dimensions must be positive, got {m}x{n}"));
        }
        match self.scheme {
            Scheme::Fldsc if n != 2 => bad(format!("fldsc is a 2x2 code and needs n = 2, got {n}")),
            Scheme::Siso if (m, n) != (1, 1) => bad(format!("siso needs m = n = 1, got {m}x{n}")),
            _ => Ok(()),
        }
    }

    /// The power-normalized code this scheme transmits.
    pub fn code(&self) -> Result<SpaceCode> {
        self.validate()?;
        let (_, n) = self.dims();
        let raw = match self.scheme {
            Scheme::Fldsc => closed_form_2x2(self.p)?.code,
            Scheme::Sm => SpaceCode::identity(n, Constellation::pam(self.p)?)?,
            Scheme::Siso => SpaceCode::identity(1, Constellation::pam(2 * self.p)?)?,
        };
        normalize_power(&raw)
    }

    pub fn channel(&self) -> Result<ChannelSpec> {
        let (m, n) = self.dims();
        ChannelSpec::iid(m, n, self.sigma2, self.mu_policy)
    }
}

/// Outcome at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub converged: bool,
    /// Sample mean of `Σ_i x_i`; absent when read back from CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_tx_power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_power_std_error: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    scheme: Scheme,
    snr_db: f64,
    trials: u64,
    bit_errors: u64,
    ber: f64,
    converged: bool,
}

/// A BER curve with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerCurve {
    pub scheme: Scheme,
    pub points: Vec<BerPoint>,
    /// The config that produced the curve; absent when read from CSV.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<SimConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits_per_trial: Option<u32>,
}

impl BerCurve {
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for p in &self.points {
            w.serialize(CsvRow {
                scheme: self.scheme,
                snr_db: p.snr_db,
                trials: p.trials,
                bit_errors: p.bit_errors,
                ber: p.ber,
                converged: p.converged,
            })
            .map_err(|e| Error::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn read_csv<R: io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut scheme = None;
        let mut points = Vec::new();
        for row in r.deserialize::<CsvRow>() {
            let row = row.map_err(|e| Error::Csv(e.to_string()))?;
            if *scheme.get_or_insert(row.scheme) != row.scheme {
                return Err(Error::Csv("rows mix several schemes".into()));
            }
            points.push(BerPoint {
                snr_db: row.snr_db,
                trials: row.trials,
                bit_errors: row.bit_errors,
                ber: row.ber,
                converged: row.converged,
                mean_tx_power: None,
                tx_power_std_error: None,
            });
        }
        let scheme = scheme.ok_or_else(|| Error::Csv("no data rows".into()))?;
        Ok(Self {
            scheme,
            points,
            config: None,
            code: None,
            bits_per_trial: None,
        })
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        Self::read_csv(text.as_bytes())
    }

    /// Converged points with positive BER, by increasing SNR.
    pub fn converged_points(&self) -> Vec<&BerPoint> {
        let mut pts: Vec<_> = self
            .points
            .iter()
            .filter(|p| p.converged && p.ber > 0.0)
            .collect();
        pts.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        pts
    }

    /// Least-squares slope of `log10 BER` against `log10 rho` over the
    /// `count` highest converged points.
    pub fn fit_slope(&self, count: usize) -> Result<f64> {
        let pts = self.converged_points();
        if count < 2 || pts.len() < count {
            return Err(Error::InvalidConfig(format!(
                "slope fit needs {count} >= 2 converged points, the {} curve has {}",
                self.scheme,
                pts.len()
            )));
        }
        let tail = &pts[pts.len() - count..];
        let xs: Vec<f64> = tail.iter().map(|p| p.snr_db / 10.0).collect();
        let ys: Vec<f64> = tail.iter().map(|p| p.ber.log10()).collect();
        let k = count as f64;
        let mx = xs.iter().sum::<f64>() / k;
        let my = ys.iter().sum::<f64>() / k;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::InvalidConfig(
                "slope fit needs distinct SNR values".into(),
            ));
        }
        Ok(sxy / sxx)
    }

    /// SNR in dB where the curve first crosses `target`, interpolating
    /// `log10 BER` linearly between successive converged points.
    pub fn snr_at_ber(&self, target: f64) -> Result<f64> {
        if !(target > 0.0 && target < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target BER must be in (0, 1), got {target}"
            )));
        }
        let pts = self.converged_points();
        let lt = target.log10();
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.ber == target {
                return Ok(a.snr_db);
            }
            if a.ber > target && b.ber <= target {
                let (la, lb) = (a.ber.log10(), b.ber.log10());
                return Ok(a.snr_db + (lt - la) / (lb - la) * (b.snr_db - a.snr_db));
            }
        }
        Err(Error::TargetNotBracketed {
            target,
            curve: self.scheme.to_string(),
        })
    }
}

/// SNR gap `snr_b - snr_a` in dB at `target` BER.
pub fn gap_at_ber(a: &BerCurve, b: &BerCurve, target: f64) -> Result<f64> {
    Ok(b.snr_at_ber(target)? - a.snr_at_ber(target)?)
}

#[derive(Debug, Clone, Copy, Default)]
struct Counters {
    trials: u64,
    bit_errors: u64,
    power_sum: f64,
    power_sq_sum: f64,
}

impl Counters {
    fn merge(&mut self, other: &Counters) {
        self.trials += other.trials;
        self.bit_errors += other.bit_errors;
        self.power_sum += other.power_sum;
        self.power_sq_sum += other.power_sq_sum;
    }
}

struct Link<'a> {
    spec: &'a ChannelSpec,
    detector: &'a MlDetector,
    q: u32,
    n_symbols: usize,
}

impl Link<'_> {
    fn run_block(&self, seed: u64, stream: u64, trials: u64, noise_sd: f64) -> Counters {
        let mut rng = substream(seed, stream);
        let mut c = Counters {
            trials,
            ..Counters::default()
        };
        let mut s = vec![0u32; self.n_symbols];
        let mut y = vec![0.0; self.spec.m()];
        for _ in 0..trials {
            let mut index = 0usize;
            for sl in s.iter_mut() {
                *sl = rng.random_range(0..self.q);
                index = index * self.q as usize + *sl as usize;
            }
            let x = self.detector.codeword(index);
            let h = sample_channel(self.spec, &mut rng);
            for (i, yi) in y.iter_mut().enumerate() {
                let g: f64 = rng.sample(StandardNormal);
                *yi = dot(h.row(i), x) + noise_sd * g;
            }
            let decided = self.detector.detect_index_unchecked(&y, &h);
            if decided != index {
                c.bit_errors += self
                    .detector
                    .symbols(decided)
                    .iter()
                    .zip(&s)
                    .map(|(a, b)| u64::from((a ^ b).count_ones()))
                    .sum::<u64>();
            }
            let power: f64 = x.iter().sum();
            c.power_sum += power;
            c.power_sq_sum += power * power;
        }
        c
    }
}

fn run_point(
    cfg: &SimConfig,
    link: &Link<'_>,
    point: usize,
    snr_db: f64,
    bits_per_trial: u32,
) -> Result<BerPoint> {
    let noise = noise_variance(snr_db, link.spec.n())?;
    let noise_sd = noise.variance_per_dim.sqrt();
    let n_blocks = cfg.max_trials.div_ceil(BLOCK_TRIALS);
    let mut acc = Counters::default();
    let mut next = 0;
    let mut wave = 1;
    'waves: while next < n_blocks {
        let end = (next + wave).min(n_blocks);
        let blocks: Vec<Counters> = (next..end)
            .into_par_iter()
            .map(|b| {
                let trials = BLOCK_TRIALS.min(cfg.max_trials - b * BLOCK_TRIALS);
                link.run_block(cfg.seed, ((point as u64) << 32) | b, trials, noise_sd)
            })
            .collect();
        for c in &blocks {
            acc.merge(c);
            if acc.bit_errors >= cfg.target_bit_errors {
                break 'waves;
            }
        }
        next = end;
        wave = (wave * 2).min(MAX_WAVE_BLOCKS);
    }
    let t = acc.trials as f64;
    let mean = acc.power_sum / t;
    let var = (acc.power_sq_sum / t - mean * mean).max(0.0) * t / (t - 1.0).max(1.0);
    Ok(BerPoint {
        snr_db,
        trials: acc.trials,
        bit_errors: acc.bit_errors,
        ber: acc.bit_errors as f64 / (t * f64::from(bits_per_trial)),
        converged: acc.bit_errors >= cfg.target_bit_errors
            && cfg.target_bit_errors >= MIN_CONVERGED_ERRORS,
        mean_tx_power: Some(mean),
        tx_power_std_error: Some((var / t).sqrt()),
    })
}

/// Simulates every SNR point of `cfg`. Points run in parallel, and so do
/// the blocks within a point.
pub fn run_ber(cfg: &SimConfig) -> Result<BerCurve> {
    let code = cfg.code()?;
    let spec = cfg.channel()?;
    let detector = MlDetector::new(&code)?;
    let link = Link {
        spec: &spec,
        detector: &detector,
        q: code.constellation().size(),
        n_symbols: code.n_symbols(),
    };
    let bits_per_trial = code.constellation().p() * code.n_symbols() as u32;
    let points = cfg
        .snr_db
        .par_iter()
        .enumerate()
        .map(|(k, &db)| run_point(cfg, &link, k, db, bits_per_trial))
        .collect::<Result<Vec<_>>>()?;
    Ok(BerCurve {
        scheme: cfg.scheme,
        points,
        config: Some(cfg.clone()),
        code: Some(code.to_strings()),
        bits_per_trial: Some(bits_per_trial),
    })
}
