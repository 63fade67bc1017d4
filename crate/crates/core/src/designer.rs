//! Max-min design of the 2×2 linear space code for unipolar `2^p`-PAM:
//! maximise `min_e e_1 e_2` over the error set subject to positive entries
//! summing to one.
//!
//! The minimum over the error set reduces to the candidate terms
//! `F_mn = (m f11 - n f12)(m f21 - n f22)`, one for every breakpoint `n/m`
//! (with `0/1` giving `f11 f21` and `1/0` giving `f12 f22`). Between two
//! successive breakpoints only the two boundary terms matter, and they are
//! equal at the mediant, so the exact search visits one candidate ratio per
//! breakpoint interval.

use rayon::prelude::*;
use serde::Serialize;

use crate::codebook::{Constellation, SpaceCode};
use crate::error::{Error, Result};
use crate::farey::{breakpoints, projective_mediant};
use crate::rational::Rational;

/// Optimal (or candidate) 2×2 code with exact entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub code: SpaceCode,
    /// `min_e e_1 e_2` over the error set.
    pub objective: Rational,
    /// Common row ratio `f11/f12 = f21/f22` of `code`.
    pub candidate_ratio: Rational,
    /// Every ratio attaining the optimum, increasing. Mirror images `r` and
    /// `1/r` correspond to swapping the columns of `F`.
    pub optimal_ratios: Vec<Rational>,
}

impl DesignResult {
    /// `F` as fraction strings.
    pub fn matrix_strings(&self) -> Vec<Vec<String>> {
        self.code.to_strings()
    }
}

/// `F` with both rows equal to `(r, 1) / (2 (1 + r))`.
pub fn ratio_code(r: Rational, p: u32) -> Result<SpaceCode> {
    if r.is_infinite() || r.signum() <= 0 {
        return Err(Error::InvalidConfig(format!(
            "row ratio must be finite and positive, got {r}"
        )));
    }
    let f12 = Rational::ONE
        .checked_div(&Rational::from_integer(2).checked_mul(&Rational::ONE.checked_add(&r)?)?)?;
    let f11 = r.checked_mul(&f12)?;
    SpaceCode::from_rationals(vec![vec![f11, f12], vec![f11, f12]], Constellation::pam(p)?)
}

/// The candidate term for breakpoint `n/m` (infinity is `1/0`) at a general
/// 2×2 matrix `[[f11, f12], [f21, f22]]`.
pub fn candidate_term(breakpoint: Rational, f: &[[Rational; 2]; 2]) -> Result<Rational> {
    let (n, m) = breakpoint.projective();
    let (n, m) = (Rational::from_integer(n), Rational::from_integer(m));
    let row = |r: &[Rational; 2]| m.checked_mul(&r[0])?.checked_sub(&n.checked_mul(&r[1])?);
    row(&f[0])?.checked_mul(&row(&f[1])?)
}

/// `min` of the candidate terms over all breakpoints of `2^p`-PAM.
pub fn reduced_min_product(f: &[[Rational; 2]; 2], p: u32) -> Result<Rational> {
    let bps = breakpoints(p)?;
    bps.iter()
        .map(|b| candidate_term(*b, f))
        .try_fold(None, |acc: Option<Rational>, t| {
            let t = t?;
            Ok(Some(acc.map_or(t, |a| a.min(t))))
        })?
        .ok_or(Error::InvalidPam {
            p,
            max: crate::farey::MAX_BREAKPOINT_PAM,
        })
}

/// Objective at a common row ratio `r` under the equal-row, equal-split
/// structure `f12 = f22 = 1/(2(1+r))`: `f12 f22 min_{n/m} (m r - n)^2`.
/// Ratios that coincide with a breakpoint give zero.
pub fn candidate_objective(r: Rational, p: u32) -> Result<Rational> {
    let bps = breakpoints(p)?;
    objective_on(&bps, r)
}

fn objective_on(bps: &[Rational], r: Rational) -> Result<Rational> {
    if r.is_infinite() || r.signum() < 0 {
        return Err(Error::InvalidConfig(format!(
            "candidate ratio must be finite and nonnegative, got {r}"
        )));
    }
    let (a, b) = r.parts().expect("finite");
    // (m r - n)^2 = (m a - n b)^2 / b^2; minimise the integer numerator
    let mut best: Option<i128> = None;
    for bp in bps {
        let (n, m) = bp.projective();
        let gap = m
            .checked_mul(a)
            .zip(n.checked_mul(b))
            .and_then(|(x, y)| x.checked_sub(y))
            .ok_or(Error::Overflow)?;
        let gap = gap.abs();
        best = Some(best.map_or(gap, |g| g.min(gap)));
    }
    let gap = Rational::from_integer(best.unwrap_or(0));
    let inv_b = Rational::new(1, b)?;
    let scaled = gap.checked_mul(&inv_b)?;
    let f12 = Rational::new(b, 2 * (a + b))?;
    f12.checked_mul(&f12)?
        .checked_mul(&scaled.checked_mul(&scaled)?)
}

/// Closed-form optimum `F = [[1, 2^p], [1, 2^p]] / (2 + 2^{p+1})` with
/// objective `1/(2 + 2^{p+1})^2`.
pub fn closed_form_2x2(p: u32) -> Result<DesignResult> {
    let constellation = Constellation::pam(p)?;
    if p > 60 {
        return Err(Error::Overflow);
    }
    let q = 1i128 << p;
    let denom = 2 + 2 * q;
    let one = Rational::new(1, denom)?;
    let big = Rational::new(q, denom)?;
    let code = SpaceCode::from_rationals(vec![vec![one, big], vec![one, big]], constellation)?;
    let r = Rational::new(1, q)?;
    Ok(DesignResult {
        code,
        objective: Rational::new(1, denom.checked_mul(denom).ok_or(Error::Overflow)?)?,
        candidate_ratio: r,
        optimal_ratios: vec![r, r.recip()?],
    })
}

/// Exact max-min over breakpoint intervals: evaluates the objective at the
/// mediant of every pair of successive breakpoints and keeps the best.
pub fn farey_maxmin_2x2(p: u32) -> Result<DesignResult> {
    let bps = breakpoints(p)?;
    let scored: Vec<(Rational, Rational)> = bps
        .par_windows(2)
        .map(|w| {
            let r = projective_mediant(w[0], w[1])?;
            Ok((r, objective_on(&bps, r)?))
        })
        .collect::<Result<_>>()?;
    let best = scored
        .iter()
        .map(|(_, o)| *o)
        .max()
        .expect("at least one interval");
    if best.signum() <= 0 {
        return Err(Error::InvalidConfig(
            "no interval admits a positive objective".into(),
        ));
    }
    let optimal_ratios: Vec<Rational> = scored
        .iter()
        .filter(|(_, o)| *o == best)
        .map(|(r, _)| *r)
        .collect();
    let candidate_ratio = optimal_ratios[0];
    Ok(DesignResult {
        code: ratio_code(candidate_ratio, p)?,
        objective: best,
        candidate_ratio,
        optimal_ratios,
    })
}

/// Best point of the brute-force simplex search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridOptimum {
    /// `[[f11, f12], [f21, f22]]`.
    pub matrix: [[f64; 2]; 2],
    pub objective: f64,
    /// Grid steps per unit; entries are multiples of `1/steps`.
    pub steps: u32,
    /// Integer grid coordinates `(i11, i12, i21)`; `i22 = steps - i11 - i12 - i21`.
    pub coords: [u32; 3],
}

/// Brute-force search of `{f >= 0, Σ f = 1}` on a grid of spacing at most
/// `resolution`, scoring each point by `min e_1 e_2` over the full error
/// set. Arithmetic is exact on the integer grid. Ties go to the
/// lexicographically smallest grid coordinates.
pub fn grid_oracle_2x2(p: u32, resolution: f64) -> Result<GridOptimum> {
    if !(resolution > 0.0 && resolution <= 0.005) {
        return Err(Error::InvalidResolution(resolution));
    }
    let constellation = Constellation::pam(p)?;
    if p > 8 {
        return Err(Error::EnumerationTooLarge(2 * p));
    }
    let steps = (1.0 / resolution - 1e-9).ceil() as i64;
    let q = constellation.size() as i64;
    let deltas: Vec<(i64, i64)> = (-(q - 1)..q)
        .flat_map(|a| (-(q - 1)..q).map(move |b| (a, b)))
        .filter(|&d| d != (0, 0))
        .collect();

    // score = min of e1*e2 over nonzero Δ, scaled by steps^2. A Δ with e = 0
    // means two symbols collide, which scores 0 just like a zero product.
    let score = |i11: i64, i12: i64, i21: i64, i22: i64| -> i64 {
        deltas
            .iter()
            .map(|&(a, b)| (i11 * a + i12 * b) * (i21 * a + i22 * b))
            .min()
            .unwrap_or(0)
    };

    type Best = (i64, [u32; 3]);
    let better = |x: Best, y: Best| -> Best {
        if x.0 > y.0 || (x.0 == y.0 && x.1 <= y.1) {
            x
        } else {
            y
        }
    };
    let best = (0..=steps)
        .into_par_iter()
        .map(|i11| {
            let mut local: Best = (i64::MIN, [u32::MAX; 3]);
            for i12 in 0..=steps - i11 {
                for i21 in 0..=steps - i11 - i12 {
                    let i22 = steps - i11 - i12 - i21;
                    local = better(
                        local,
                        (
                            score(i11, i12, i21, i22),
                            [i11 as u32, i12 as u32, i21 as u32],
                        ),
                    );
                }
            }
            local
        })
        .reduce(|| (i64::MIN, [u32::MAX; 3]), better);

    let [a, b, c] = best.1;
    let s = steps as f64;
    let d = steps as u32 - a - b - c;
    Ok(GridOptimum {
        matrix: [[a as f64 / s, b as f64 / s], [c as f64 / s, d as f64 / s]],
        objective: best.0 as f64 / (s * s),
        steps: steps as u32,
        coords: best.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{error_set, is_fldsc};

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let d = closed_form_2x2(1).unwrap();
        assert_eq!(
            d.matrix_strings(),
            vec![vec!["1/6", "1/3"], vec!["1/6", "1/3"]]
        );
        assert_eq!(d.objective, r(1, 36));
        let d = closed_form_2x2(2).unwrap();
        assert_eq!(d.code.exact_entry(0, 0), Some(r(1, 10)));
        assert_eq!(d.code.exact_entry(1, 1), Some(r(4, 10)));
        for p in 1..=6 {
            let d = closed_form_2x2(p).unwrap();
            let sum = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| d.code.exact_entry(i, j).unwrap());
            assert_eq!(sum.fold(Rational::ZERO, |a, b| a + b), Rational::ONE);
            let es = error_set(&d.code).unwrap();
            assert!(is_fldsc(&es));
            assert_eq!(es.min_product_exact().unwrap(), d.objective, "p={p}");
        }
    }

    #[test]
    fn candidate_objective_examples() {
        assert_eq!(candidate_objective(r(1, 2), 1).unwrap(), r(1, 36));
        assert_eq!(
            candidate_objective(Rational::ONE, 1).unwrap(),
            Rational::ZERO
        );
        assert_eq!(candidate_objective(r(1, 4), 2).unwrap(), r(1, 100));
        assert!(candidate_objective(Rational::INFINITY, 1).is_err());
    }

    #[test]
    fn candidate_objective_matches_full_error_set() {
        for p in 1..=3 {
            for (a, b) in [(1, 3), (2, 5), (5, 2), (7, 3), (1, 9), (11, 1)] {
                let ratio = r(a, b);
                let es = error_set(&ratio_code(ratio, p).unwrap()).unwrap();
                let full = es.min_product_exact().unwrap();
                let cand = candidate_objective(ratio, p).unwrap();
                // a breakpoint ratio makes F singular on some Δ, which the error set drops
                if breakpoints(p).unwrap().contains(&ratio) {
                    assert!(cand.is_zero());
                } else {
                    assert_eq!(full, cand, "p={p} r={ratio}");
                }
            }
        }
    }

    #[test]
    fn maxmin_examples() {
        let d = farey_maxmin_2x2(1).unwrap();
        assert_eq!(d.candidate_ratio, r(1, 2));
        assert_eq!(d.objective, r(1, 36));
        assert_eq!(d.optimal_ratios, vec![r(1, 2), r(2, 1)]);

        let d = farey_maxmin_2x2(2).unwrap();
        assert_eq!(d.objective, r(1, 100));
        assert_eq!(d.optimal_ratios, vec![r(1, 4), r(4, 1)]);

        let d = farey_maxmin_2x2(3).unwrap();
        assert_eq!(d.candidate_ratio, r(1, 8));
        assert_eq!(d.objective, r(1, 18 * 18));
    }

    #[test]
    fn candidate_term_special_breakpoints() {
        let f = [[r(1, 6), r(1, 3)], [r(1, 5), r(1, 4)]];
        assert_eq!(candidate_term(Rational::ZERO, &f).unwrap(), r(1, 30));
        assert_eq!(candidate_term(Rational::INFINITY, &f).unwrap(), r(1, 12));
        assert_eq!(
            candidate_term(Rational::ONE, &f).unwrap(),
            r(-1, 6) * r(-1, 20)
        );
    }

    #[test]
    fn grid_oracle_rejects_coarse_resolution() {
        assert!(grid_oracle_2x2(1, 0.01).is_err());
        assert!(grid_oracle_2x2(1, 0.0).is_err());
    }
}
