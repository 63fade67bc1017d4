use fldsc_core::{gap_at_ber, run_ber, BerCurve, Scheme, SimConfig, MIN_TRIALS};

fn cfg(scheme: Scheme, snr_db: Vec<f64>) -> SimConfig {
    let mut c = SimConfig::new(scheme, 0.1, snr_db);
    c.max_trials = 60_000;
    c.target_bit_errors = 200;
    c
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn curves_do_not_depend_on_thread_count() {
    for scheme in [Scheme::Fldsc, Scheme::Sm, Scheme::Siso] {
        let c = cfg(scheme, vec![5.0, 15.0, 25.0]);
        let one = in_pool(1, || run_ber(&c).unwrap());
        let four = in_pool(4, || run_ber(&c).unwrap());
        let seven = in_pool(7, || run_ber(&c).unwrap());
        assert_eq!(one.to_csv(), four.to_csv(), "{scheme}");
        assert_eq!(one.to_csv(), seven.to_csv(), "{scheme}");
    }
}

#[test]
fn seeds_change_the_sample_path() {
    let mut a = cfg(Scheme::Sm, vec![10.0]);
    a.max_trials = 20_000;
    a.target_bit_errors = u64::MAX;
    let mut b = a.clone();
    b.seed = 2;
    assert_ne!(
        run_ber(&a).unwrap().points[0].bit_errors,
        run_ber(&b).unwrap().points[0].bit_errors
    );
}

#[test]
fn transmit_power_is_unity_for_every_scheme() {
    for scheme in [Scheme::Fldsc, Scheme::Sm, Scheme::Siso] {
        let mut c = cfg(scheme, vec![0.0]);
        c.max_trials = 100_000;
        c.target_bit_errors = u64::MAX;
        let pt = &run_ber(&c).unwrap().points[0];
        let (mean, se) = (pt.mean_tx_power.unwrap(), pt.tx_power_std_error.unwrap());
        assert_eq!(pt.trials, 100_000);
        assert!((mean - 1.0).abs() < 3.0 * se, "{scheme}: {mean} ± {se}");
    }
}

#[test]
fn noiseless_links_make_no_errors() {
    for scheme in [Scheme::Fldsc, Scheme::Sm, Scheme::Siso] {
        let mut c = cfg(scheme, vec![250.0]);
        c.max_trials = MIN_TRIALS;
        let pt = &run_ber(&c).unwrap().points[0];
        assert_eq!(pt.bit_errors, 0, "{scheme}");
        assert!(!pt.converged);
    }
}

#[test]
fn ber_falls_with_snr() {
    let curve = run_ber(&cfg(Scheme::Sm, vec![0.0, 10.0, 20.0])).unwrap();
    assert!(
        curve.points.windows(2).all(|w| w[1].ber < w[0].ber),
        "{}",
        curve.to_csv()
    );
}

#[test]
fn csv_round_trip_preserves_the_gap() {
    let grid = vec![0.0, 2.5, 5.0, 7.5, 10.0];
    let a = run_ber(&cfg(Scheme::Sm, grid.clone())).unwrap();
    let b = run_ber(&cfg(Scheme::Siso, grid)).unwrap();
    let (a2, b2) = (
        BerCurve::from_csv(&a.to_csv()).unwrap(),
        BerCurve::from_csv(&b.to_csv()).unwrap(),
    );
    let ends = |c: &BerCurve| (c.points.last().unwrap().ber, c.points[0].ber);
    let ((a_lo, a_hi), (b_lo, b_hi)) = (ends(&a), ends(&b));
    let target = (a_lo.max(b_lo) * a_hi.min(b_hi)).sqrt();
    assert_eq!(
        gap_at_ber(&a, &b, target).unwrap(),
        gap_at_ber(&a2, &b2, target).unwrap()
    );
    assert_eq!(a2.to_csv(), a.to_csv());
}
