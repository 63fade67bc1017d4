use fldsc_core::{noise_variance, rho_from_db, sample_channel, substream, ChannelSpec, MuPolicy};

const DRAWS: usize = 1_000_000;

struct Moments {
    mean: f64,
    var: f64,
}

fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Moments { mean, var }
}

fn draws(spec: &ChannelSpec, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = substream(seed, 0);
    let k = spec.m() * spec.n();
    let mut cols = vec![Vec::with_capacity(DRAWS); k];
    for _ in 0..DRAWS {
        let h = sample_channel(spec, &mut rng);
        for (c, v) in cols.iter_mut().zip(h.as_slice()) {
            c.push(*v);
        }
    }
    cols
}

#[test]
fn log_gains_have_the_requested_moments() {
    for (sigma2, policy) in [
        (0.1, MuPolicy::UnitMean),
        (0.25, MuPolicy::Zero),
        (0.01, MuPolicy::UnitMean),
    ] {
        let spec = ChannelSpec::iid(2, 2, sigma2, policy).unwrap();
        let n = DRAWS as f64;
        for (k, col) in draws(&spec, 7).iter().enumerate() {
            let logs: Vec<f64> = col.iter().map(|h| h.ln()).collect();
            let m = moments(&logs);
            let mu = policy.mu_for(sigma2);
            assert!(
                (m.mean - mu).abs() < 3.0 * (sigma2 / n).sqrt(),
                "entry {k}: mean {}",
                m.mean
            );
            // Var of the sample variance is 2σ⁴/(n-1) for Gaussian data
            let se_var = sigma2 * (2.0 / (n - 1.0)).sqrt();
            assert!(
                (m.var - sigma2).abs() < 3.0 * se_var,
                "entry {k}: var {}",
                m.var
            );
        }
    }
}

#[test]
fn unit_mean_policy_gives_unit_mean_gain() {
    let spec = ChannelSpec::iid(2, 2, 0.25, MuPolicy::UnitMean).unwrap();
    for col in draws(&spec, 11) {
        let m = moments(&col);
        assert!(
            (m.mean - 1.0).abs() < 3.0 * (m.var / DRAWS as f64).sqrt(),
            "mean {}",
            m.mean
        );
    }
}

#[test]
fn entries_are_uncorrelated() {
    let spec = ChannelSpec::iid(2, 2, 0.1, MuPolicy::UnitMean).unwrap();
    let cols = draws(&spec, 3);
    let stats: Vec<Moments> = cols.iter().map(|c| moments(c)).collect();
    let bound = 3.0 / (DRAWS as f64).sqrt();
    for a in 0..cols.len() {
        for b in a + 1..cols.len() {
            let cov = cols[a]
                .iter()
                .zip(&cols[b])
                .map(|(x, y)| (x - stats[a].mean) * (y - stats[b].mean))
                .sum::<f64>()
                / (DRAWS as f64 - 1.0);
            let r = cov / (stats[a].var * stats[b].var).sqrt();
            assert!(r.abs() < bound, "entries {a},{b}: r = {r}");
        }
    }
}

#[test]
fn substreams_are_reproducible_and_distinct() {
    let spec = ChannelSpec::iid(1, 2, 0.1, MuPolicy::Zero).unwrap();
    let a = sample_channel(&spec, &mut substream(5, 9));
    let b = sample_channel(&spec, &mut substream(5, 9));
    let c = sample_channel(&spec, &mut substream(5, 10));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn noise_follows_snr() {
    for (db, n) in [(0.0, 1), (10.0, 2), (23.5, 4)] {
        let ns = noise_variance(db, n).unwrap();
        assert!((ns.rho - rho_from_db(db)).abs() <= 1e-12 * ns.rho);
        assert!((ns.rho_op * ns.rho_op - ns.rho).abs() <= 1e-12 * ns.rho);
        assert!((ns.variance_per_dim * n as f64 * ns.rho - 1.0).abs() < 1e-12);
    }
    assert!(noise_variance(f64::NAN, 2).is_err());
    assert!(noise_variance(10.0, 0).is_err());
}
