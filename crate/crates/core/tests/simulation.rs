//! Distributional checks of the Monte Carlo engine.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use trapwalk::exact::rat;
use trapwalk::simulator::{simulate, wald_check, Mode, SimConfig};
use trapwalk::solver::WalkDomain;

/// On `[-4, 4]` with a single trap at the start 0, each visit ends in the
/// sink with probability 1/3 and otherwise returns with probability 3/4, so
/// the visit count of sink-absorbed episodes is geometric with parameter 1/2.
#[test]
fn trap_visits_are_geometric() {
    let d = WalkDomain::new(-4, 4, [0]).unwrap();
    for mode in [Mode::Trapped, Mode::Decorrelated] {
        let est = simulate(&d, 0, mode, &SimConfig::new(200_000, 3)).unwrap();
        let hist = &est.histogram;
        let total: u64 = hist.values().sum();
        let bins = 8u64;
        let mut chi2 = 0.0;
        for k in 1..=bins {
            let observed = if k < bins {
                *hist.get(&k).unwrap_or(&0) as f64
            } else {
                hist.range(bins..).map(|(_, c)| *c).sum::<u64>() as f64
            };
            let prob = if k < bins { 0.5f64.powi(k as i32) } else { 0.5f64.powi(bins as i32 - 1) };
            let expected = total as f64 * prob;
            chi2 += (observed - expected).powi(2) / expected;
        }
        let p_value = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
        assert!(p_value > 1e-4, "{mode}: chi2 = {chi2}, p = {p_value}");
        assert!(!hist.contains_key(&0));
    }
}

#[test]
fn same_seed_same_estimate() {
    let d = WalkDomain::new(0, 20, [3, 7, 8, 15]).unwrap();
    let cfg = SimConfig::new(30_000, 17);
    let a = simulate(&d, 5, Mode::Trapped, &cfg).unwrap();
    let b = simulate(&d, 5, Mode::Trapped, &cfg.clone().with_workers(1)).unwrap();
    assert_eq!(a, b);
    let c = simulate(&d, 5, Mode::Trapped, &SimConfig::new(30_000, 18)).unwrap();
    assert_ne!(a.mean, c.mean);
}

#[test]
fn wald_identity_on_the_full_line() {
    let w = wald_check(&[-2, 0, 3], 10, &rat(1, 3), &SimConfig::new(100_000, 23)).unwrap();
    assert!(w.z_score() < 4.0, "{w:?}");
}

#[test]
fn sink_fraction_matches_exact_probability() {
    // from a lone trap, absorption at a boundary needs the walk to leave first
    let d = WalkDomain::new(-1, 1, [0]).unwrap();
    let est = simulate(&d, 0, Mode::Trapped, &SimConfig::new(90_000, 5)).unwrap();
    assert!((est.sink_fraction - 1.0 / 3.0).abs() < 4.0 * est.sink_stderr);
    assert!((est.mean - 1.0).abs() < 1e-12);
}
