//! Design and verification of full large-scale diversity space codes
//! (FLDSC) for MIMO optical wireless links over log-normal fading.
//!
//! The crate covers exact Farey-sequence machinery, the optimal 2×2 code
//! construction, the full-diversity check and its gains, PEP bounds with
//! numerical reference values, and a seeded Monte Carlo BER engine.

pub mod analysis;
pub mod channel;
pub mod codebook;
pub mod designer;
pub mod detector;
pub mod error;
pub mod farey;
pub mod rational;
pub mod simulator;

pub use analysis::{
    conditional_pep, dominant_term, ln_q, pep_bounds, pep_monte_carlo, pep_quadrature, q_function,
    DominantTerm, MonteCarloEstimate, PepBounds, QuadratureResult, Sampling, UpperTerm,
    DEFAULT_NODES,
};
pub use channel::{
    noise_variance, rho_from_db, sample_channel, substream, ChannelRealization, ChannelSpec,
    MuPolicy, NoiseSpec,
};
pub use codebook::{
    error_set, gains, is_fldsc, normalize_power, pam_constellation, Constellation, ErrorSet,
    GainReport, SpaceCode,
};
pub use designer::{
    candidate_objective, closed_form_2x2, farey_maxmin_2x2, grid_oracle_2x2, ratio_code,
    DesignResult, GridOptimum,
};
pub use detector::{ml_detect, MlDetector, Observation};
pub use error::{Error, Result};
pub use farey::{breakpoints, farey_sequence, mediant, FareySequence};
pub use rational::Rational;
pub use simulator::{
    gap_at_ber, run_ber, BerCurve, BerPoint, Scheme, SimConfig, BLOCK_TRIALS, MIN_TRIALS,
};

/// Formats a real with 12 significant digits, `%g` style, trailing zeros
/// removed.
pub fn format_real(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let digits = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.digits$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::format_real;

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_real(2.0), "2");
        assert_eq!(format_real(-0.125), "-0.125");
        assert_eq!(format_real(123456.5), "123456.5");
        assert_eq!(format_real(1e-7), "1e-7");
        assert_eq!(format_real(2.5e15), "2.5e15");
        assert_eq!(format_real(0.0), "0");
    }
}
