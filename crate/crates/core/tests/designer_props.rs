use fldsc_core::designer::{candidate_term, reduced_min_product};
use fldsc_core::{
    breakpoints, candidate_objective, closed_form_2x2, error_set, farey_maxmin_2x2, farey_sequence,
    grid_oracle_2x2, ratio_code, Constellation, Rational, SpaceCode,
};
use proptest::prelude::*;

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d).unwrap()
}

fn matrix(f: &[[Rational; 2]; 2], p: u32) -> SpaceCode {
    SpaceCode::from_rationals(
        f.iter().map(|row| row.to_vec()).collect(),
        Constellation::pam(p).unwrap(),
    )
    .unwrap()
}

/// Points strictly inside `(lo, hi)`, the upper end possibly infinite.
fn interior_points(lo: Rational, hi: Rational) -> Vec<Rational> {
    if hi.is_infinite() {
        return vec![lo + Rational::ONE, lo + r(1, 3), lo * r(3, 1) + r(7, 1)];
    }
    let w = hi - lo;
    [r(1, 7), r(1, 3), r(1, 2), r(5, 8), r(19, 20)]
        .iter()
        .map(|t| lo + w * *t)
        .collect()
}

#[test]
fn maxmin_matches_closed_form() {
    for p in 1..=4 {
        let d = farey_maxmin_2x2(p).unwrap();
        let c = closed_form_2x2(p).unwrap();
        let denom = 2 + 2 * (1i128 << p);
        assert_eq!(d.objective, r(1, denom * denom), "p={p}");
        assert_eq!(d.objective, c.objective);
        assert_eq!(d.code, c.code, "p={p}");
        assert_eq!(d.optimal_ratios, vec![r(1, 1 << p), r(1 << p, 1)]);
        // the mirror image is the column swap
        let swapped = ratio_code(d.optimal_ratios[1], p).unwrap();
        assert_eq!(swapped.exact_entry(0, 0), c.code.exact_entry(0, 1));
        assert_eq!(swapped.exact_entry(1, 1), c.code.exact_entry(1, 0));
        assert_eq!(
            error_set(&swapped).unwrap().min_product_exact(),
            Some(c.objective)
        );
    }
}

#[test]
fn p3_optimum_ratio() {
    let d = farey_maxmin_2x2(3).unwrap();
    assert_eq!(d.candidate_ratio, r(1, 8));
    assert_eq!(d.objective, r(1, 324));
}

#[test]
fn neighbouring_terms_cross_at_their_mediant() {
    for k in [1, 3, 7] {
        let t = farey_sequence(k).unwrap().into_terms();
        for w in t.windows(2) {
            let (n1, m1) = w[0].parts().unwrap();
            let (n2, m2) = w[1].parts().unwrap();
            let med = r(n1 + n2, m1 + m2);
            let term = |n: i128, m: i128, x: Rational| {
                let g = Rational::from_integer(m) * x - Rational::from_integer(n);
                g * g
            };
            assert_eq!(term(n1, m1, med), term(n2, m2, med));
            for x in interior_points(w[0], med) {
                assert!(term(n1, m1, x) < term(n2, m2, x), "k={k} x={x}");
            }
            for x in interior_points(med, w[1]) {
                assert!(term(n1, m1, x) > term(n2, m2, x), "k={k} x={x}");
            }
        }
    }
}

#[test]
fn interval_minimum_comes_from_endpoint_terms() {
    for p in 1..=3 {
        let bps = breakpoints(p).unwrap();
        for w in bps.windows(2) {
            for x in interior_points(w[0], w[1]) {
                let code = ratio_code(x, p).unwrap();
                let f = [
                    [
                        code.exact_entry(0, 0).unwrap(),
                        code.exact_entry(0, 1).unwrap(),
                    ],
                    [
                        code.exact_entry(1, 0).unwrap(),
                        code.exact_entry(1, 1).unwrap(),
                    ],
                ];
                let all = reduced_min_product(&f, p).unwrap();
                let edge = candidate_term(w[0], &f)
                    .unwrap()
                    .min(candidate_term(w[1], &f).unwrap());
                assert_eq!(all, edge, "p={p} x={x}");
                assert_eq!(candidate_objective(x, p).unwrap(), all);
            }
        }
    }
}

#[test]
fn objective_scales_quadratically() {
    for p in 1..=3 {
        let c = closed_form_2x2(p).unwrap();
        for k in [r(2, 1), r(1, 3), r(7, 5)] {
            let f: Vec<Vec<Rational>> = (0..2)
                .map(|i| {
                    (0..2)
                        .map(|j| c.code.exact_entry(i, j).unwrap() * k)
                        .collect()
                })
                .collect();
            let scaled = SpaceCode::from_rationals(f, Constellation::pam(p).unwrap()).unwrap();
            assert_eq!(
                error_set(&scaled).unwrap().min_product_exact().unwrap(),
                c.objective * k * k
            );
        }
    }
}

#[test]
fn grid_oracle_small_resolution() {
    // coarse enough for a unit test; the 0.002 run lives in the acceptance suite
    for (p, best) in [(1, r(1, 36)), (2, r(1, 100))] {
        let g = grid_oracle_2x2(p, 0.005).unwrap();
        assert!(
            g.objective <= best.to_f64() + 1e-12,
            "p={p}: {}",
            g.objective
        );
        assert!(best.to_f64() - g.objective < 5e-3, "p={p}: {}", g.objective);
        let sum: f64 = g.matrix.iter().flatten().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }
    assert!(grid_oracle_2x2(1, 0.01).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// For positive F the reduced candidate set decides the sign of the
    /// worst product, and equals it whenever that minimum is positive.
    /// Negative minima can be deeper on the full set, since k Δ scales the
    /// product by k^2.
    #[test]
    fn reduction_soundness(entries in prop::collection::vec(1i128..40, 4), p in 1u32..=3) {
        // a singular F drops its null vector from the error set
        prop_assume!(entries[0] * entries[3] != entries[1] * entries[2]);
        let f = [[r(entries[0], 40), r(entries[1], 40)], [r(entries[2], 40), r(entries[3], 40)]];
        let reduced = reduced_min_product(&f, p).unwrap();
        let es = error_set(&matrix(&f, p)).unwrap();
        let full = es.min_product_exact().unwrap();
        prop_assert!(full <= reduced);
        prop_assert_eq!(full.signum(), reduced.signum());
        if reduced.signum() > 0 {
            prop_assert_eq!(full, reduced);
        }
    }

    #[test]
    fn no_ratio_beats_the_optimum(n in 1i128..200, d in 1i128..200, p in 1u32..=3) {
        let best = closed_form_2x2(p).unwrap().objective;
        prop_assert!(candidate_objective(r(n, d), p).unwrap() <= best);
    }
}
