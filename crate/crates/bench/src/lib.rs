//! Shared inputs for the benchmarks.

use fldsc_core::{
    closed_form_2x2, normalize_power, sample_channel, substream, ChannelRealization, ChannelSpec, MuPolicy,
    Observation, Scheme, SimConfig, SpaceCode,
};

/// The power-normalized optimal 2x2 code for 2^p-PAM.
pub fn fldsc_code(p: u32) -> SpaceCode {
    normalize_power(&closed_form_2x2(p).expect("closed form exists").code).expect("positive code")
}

/// A reproducible batch of channel draws with noisy observations of random codewords.
pub fn detection_inputs(code: &SpaceCode, count: usize) -> Vec<(Observation, ChannelRealization)> {
    let spec = ChannelSpec::iid(2, code.n_tx(), 0.1, MuPolicy::UnitMean).expect("valid channel");
    let mut rng = substream(1, 0);
    let q = code.constellation().size();
    (0..count)
        .map(|k| {
            let h = sample_channel(&spec, &mut rng);
            let s: Vec<u32> = (0..code.n_symbols()).map(|j| (k as u32 + j as u32) % q).collect();
            let y = h.apply(&code.encode(&s).expect("symbols in range"));
            let noisy = y.iter().enumerate().map(|(i, v)| v + 0.05 * (i as f64 - 0.5)).collect();
            (Observation::new(noisy).expect("finite"), h)
        })
        .collect()
}

/// A short simulation run: one SNR point, fixed trial count.
pub fn short_sim(scheme: Scheme) -> SimConfig {
    let mut cfg = SimConfig::new(scheme, 0.1, vec![10.0]);
    cfg.max_trials = 16_384;
    cfg.target_bit_errors = u64::MAX;
    cfg
}
