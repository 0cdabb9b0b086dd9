use twolin::drift_matrix::Verdict;
use twolin::ea::StartRule;
use twolin::experiments::{asymmetric_spotcheck, scaling_fit, sweep, SpotcheckConfig, SweepConfig};
use twolin::stats::Interval;
use twolin::Params;

fn spot(rho: f64, ell: f64) -> SpotcheckConfig {
    SpotcheckConfig {
        rho,
        ell,
        chi_grid: vec![0.5, 1.0, 2.0, 3.5, 5.0, 8.0],
        n: 1000,
        trials: 20,
        budget_multiplier: 30.0,
        margin: 0.005,
        seed: 4,
    }
}

#[test]
fn spotcheck_agrees_away_from_the_root() {
    let r = asymmetric_spotcheck(&spot(0.5, 0.25)).unwrap();
    assert_eq!(r.rows.first().unwrap().analytic, Verdict::Efficient);
    assert!(r.rows.last().unwrap().classifier < 0.0);
    assert!(r.agreement().unwrap() >= 0.9, "{:#?}", r.rows);

    // Exchanging the parts gives the same process with the parts swapped.
    let m = asymmetric_spotcheck(&spot(0.5, 0.75)).unwrap();
    for (a, b) in r.rows.iter().zip(&m.rows) {
        assert_eq!(a.analytic, b.analytic, "chi {}", a.chi);
        let ia = twolin::stats::wilson_interval(a.successes, a.trials, twolin::stats::Z99);
        let ib = twolin::stats::wilson_interval(b.successes, b.trials, twolin::stats::Z99);
        assert!(Interval::overlaps(&ia, &ib), "chi {}: {} vs {}", a.chi, a.successes, b.successes);
    }
}

#[test]
fn runtime_scales_as_n_log_n() {
    let cfg = SweepConfig {
        base: Params::symmetric(1.0, 2).unwrap(),
        chi_grid: vec![1.0],
        n_list: vec![250, 500, 1000, 2000],
        trials: 30,
        budget_multiplier: 30.0,
        start: StartRule::UniformRandom,
        seed: 3,
    };
    let res = sweep(&cfg).unwrap();
    let fit = scaling_fit(&res, 1.0).unwrap();
    assert_eq!(fit.medians.len(), 4);
    assert!(fit.fit.r_squared >= 0.95, "{fit:?}");
    assert!(fit.fit.slope > 0.0);
}

#[test]
fn success_rate_falls_with_chi() {
    let cfg = SweepConfig {
        base: Params::symmetric(1.0, 2).unwrap(),
        chi_grid: vec![1.5, 2.5, 3.5],
        n_list: vec![300],
        trials: 20,
        budget_multiplier: 30.0,
        start: StartRule::UniformRandom,
        seed: 5,
    };
    let res = sweep(&cfg).unwrap();
    let ivs: Vec<Interval> = res.points.iter().map(|p| p.summary.wilson95).collect();
    for w in ivs.windows(2) {
        // Non-increasing up to interval overlap.
        assert!(w[1].lo <= w[0].hi, "{ivs:?}");
    }
    assert!(res.points[0].summary.success_rate > res.points[2].summary.success_rate);
}
