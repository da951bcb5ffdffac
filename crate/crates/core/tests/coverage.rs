use simulband_core::coverage::{run_coverage, SimScenario};

fn tol(reps: usize) -> f64 {
    // about four binomial standard errors at 0.95
    4.0 * (0.05 * 0.95 / reps as f64).sqrt()
}

#[test]
fn independent_pair_coverage() {
    let s = SimScenario::standard(2, 0.0, 500, 10_000, 0.05, 20251015);
    let r = run_coverage(&s).unwrap();
    assert_eq!(r.completed, 10_000);
    let c = r.simultaneous;
    assert!((c.pointwise - 0.9025).abs() <= 0.01, "{c:?}");
    assert!((c.supt - 0.95).abs() <= 0.01, "{c:?}");
    assert!(c.bonferroni >= 0.945, "{c:?}");
    assert!((c.ellipsoid - 0.95).abs() <= 0.01, "{c:?}");
    assert!(c.pointwise < c.supt);
    for m in &r.marginal_pointwise {
        assert!((m - 0.95).abs() <= 0.01);
    }
    assert!((r.mean_critical.supt - 2.236).abs() < 0.01);
}

#[test]
fn duplicated_coordinate_is_univariate() {
    let mut s = SimScenario::standard(2, 1.0, 200, 4_000, 0.05, 77);
    s.supt_draws = 2_000;
    let r = run_coverage(&s).unwrap();
    assert_eq!(r.failures, 0);
    let c = r.simultaneous;
    let t = tol(4_000);
    assert!((c.pointwise - 0.95).abs() <= t, "{c:?}");
    assert!((c.supt - 0.95).abs() <= t, "{c:?}");
    assert!((c.ellipsoid - 0.95).abs() <= t, "{c:?}");
    assert!((r.mean_critical.supt - 1.96).abs() < 0.02);
}

#[test]
fn correlated_triple_ellipsoid_is_calibrated() {
    let mut s = SimScenario::standard(3, 0.6, 300, 4_000, 0.05, 5);
    s.variances = vec![1.0, 4.0, 0.25];
    s.true_theta = vec![1.0, -2.0, 10.0];
    s.supt_draws = 2_000;
    let r = run_coverage(&s).unwrap();
    let c = r.simultaneous;
    let t = tol(4_000);
    assert!((c.ellipsoid - 0.95).abs() <= t, "{c:?}");
    assert!((c.supt - 0.95).abs() <= t, "{c:?}");
    assert!(c.pointwise < c.supt && c.supt <= c.bonferroni);
}

#[test]
fn report_is_independent_of_thread_count() {
    let mut s = SimScenario::standard(2, 0.4, 60, 64, 0.1, 3);
    s.supt_draws = 1_000;
    let run = |n: usize| {
        rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| run_coverage(&s).unwrap())
    };
    assert_eq!(run(1), run(6));
}
