//! Acceptance criteria: one PASS/FAIL line per criterion, exit code 0/1.

use std::time::{Duration, Instant};

use clap::Parser;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use trapwalk::classifier::{
    alpha_sequence, classify_family, construct_counterexample, default_targets, threshold_root, verify_counterexample,
    Status,
};
use trapwalk::cli::{execute, Cli};
use trapwalk::exact::{int_rat, rat, rat_to_f64};
use trapwalk::recursion::{compute_pq, compute_weights, r_bounds_from_prefix};
use trapwalk::sandpile::{green_comparison, run_chain, ChainConfig, Policy, SandpileState};
use trapwalk::simulator::{combine_excursions, simulate, simulate_excursion, welch_t, Mode, Side, SimConfig};
use trapwalk::solver::{green_row_sums, solve_direct, solve_halfline, WalkDomain};
use trapwalk::{Error, TrapSequence};

const Z_TOL: f64 = 4.0;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(limit: Duration, elapsed: Duration) -> Result<(), String> {
    ensure(elapsed <= limit, format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn json_rat(v: &Value) -> BigRational {
    let n: BigInt = v["num"].as_str().expect("num").parse().expect("integer");
    let d: BigInt = v["den"].as_str().expect("den").parse().expect("integer");
    BigRational::new(n, d)
}

fn json_ints(v: &Value) -> Vec<i64> {
    v.as_array().expect("array").iter().map(|s| s.as_str().expect("string").parse().expect("integer")).collect()
}

fn json_rats(v: &Value) -> Vec<BigRational> {
    v.as_array().expect("array").iter().map(json_rat).collect()
}

fn rats(v: &[(i64, i64)]) -> Vec<BigRational> {
    v.iter().map(|&(n, d)| rat(n, d)).collect()
}

fn exact_table() -> Outcome {
    let t0 = Instant::now();
    let cli = Cli::try_parse_from(["trapwalk", "analyze", "--sequence", "explicit:1,2,3", "--n", "3"]).map_err(e)?;
    let out = execute(&cli).map_err(e)?;
    let v: Value = serde_json::from_str(&out.text).map_err(e)?;
    let rec = &v["recursion"];
    let w = &v["weights"];
    ensure(json_ints(&rec["p"]) == [1, 3, 8], "p")?;
    ensure(json_ints(&rec["q"]) == [1, 6, 20], "q")?;
    ensure(json_rats(&rec["a"]) == rats(&[(1, 1), (2, 1), (5, 2)]), "a")?;
    ensure(json_ints(&w["W"]) == [3, 1, 1], "W")?;
    ensure(json_rats(&w["mu"]) == rats(&[(3, 8), (1, 4), (3, 8)]), "mu")?;
    ensure(json_rats(&w["R"]) == rats(&[(1, 1), (5, 8), (3, 8), (0, 1)]), "R")?;
    ensure(json_rat(&w["eps"]) == rat(1, 2), "eps_3")?;
    ensure(json_rat(&w["u"]) == rat(2, 1), "u_3")?;
    let dt = t0.elapsed();
    within(Duration::from_secs(1), dt)?;
    Ok(format!("p, q, a, W, mu, R, eps_3 = 1/2, u_3 = 2 exact ({dt:.2?})"))
}

fn increasing(max_len: usize, max_gap: i64) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(1..=max_gap, 1..=max_len).prop_map(|gaps| {
        gaps.iter()
            .scan(0i64, |s, g| {
                *s += g;
                Some(*s)
            })
            .collect()
    })
}

fn run_property<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, test).map_err(|err| err.to_string())
}

fn to_case(err: Error) -> TestCaseError {
    TestCaseError::fail(err.to_string())
}

/// Criteria 2 and 3 share the sample of sequences.
fn monotonicity_and_bounds() -> (Outcome, Outcome) {
    let t0 = Instant::now();
    // n <= 40 and x_k <= 40 * 2500 = 10^5
    let r = run_property(200, increasing(40, 2500), |xs| {
        let n = xs.len();
        let s = TrapSequence::explicit(xs.iter().copied()).map_err(to_case)?;
        let t = compute_pq(&s, n).map_err(to_case)?;
        let w = compute_weights(&s, n).map_err(to_case)?;
        prop_assert!(t.a.windows(2).all(|p| p[0] <= p[1]), "a_k decreases");
        prop_assert!(w.mu.iter().sum::<BigRational>() == BigRational::one(), "sum mu != 1");
        prop_assert!(t.a[n - 1] == &w.eps + &w.u, "a_n != eps_n + u_n");
        prop_assert!(w.eps.abs() <= BigRational::one(), "|eps_n| > 1");
        for k in 0..n {
            let (lo, hi) = r_bounds_from_prefix(&t.x, k);
            prop_assert!(lo <= w.r[k] && w.r[k] <= hi, "R_{} outside its bounds", k);
        }
        Ok(())
    });
    let dt = t0.elapsed();
    let r = r.and_then(|_| within(Duration::from_secs(60), dt));
    match r {
        Ok(()) => (
            Ok(format!("200 sequences: a_k monotone, sum mu = 1, a_n = eps_n + u_n, |eps_n| <= 1 ({dt:.2?})")),
            Ok("R_k inside its product bounds for all k < n on the same 200 sequences".into()),
        ),
        Err(msg) => (Err(msg.clone()), Err(msg)),
    }
}

/// Criteria 4 and 5 share the sample of prefixes.
fn solver_and_green() -> (Outcome, Outcome) {
    let t0 = Instant::now();
    let one_third = rat(1, 3);
    let green_failure = std::cell::RefCell::new(None);
    // N <= 15 and x_N <= 15 * 133 < 2000
    let r = run_property(50, increasing(15, 133), |xs| {
        let n = xs.len();
        let s = TrapSequence::explicit(xs.iter().copied()).map_err(to_case)?;
        let profile = solve_halfline(&s, n).map_err(to_case)?.profile().map_err(to_case)?;
        let d = WalkDomain::halfline(&xs).map_err(to_case)?;
        let direct = solve_direct(&d).map_err(to_case)?;
        prop_assert!(profile == direct, "profiles differ on {:?}", xs);
        for &t in &xs[..n - 1] {
            let at = |x: i64| direct.at(x).cloned().unwrap_or_else(BigRational::zero);
            prop_assert!(at(t + 1) - at(t) * rat(3, 1) + at(t - 1) == rat(-3, 1), "transmission at {}", t);
        }
        let g = green_row_sums(&d).map_err(to_case)?;
        for ((x, ev), (_, gv)) in direct.iter().zip(g.iter()) {
            if !(ev * &one_third <= *gv && gv * rat(2, 1) <= *ev) {
                green_failure.borrow_mut().get_or_insert(format!("sandwich fails at x = {x} on {xs:?}"));
            }
        }
        Ok(())
    });
    let dt = t0.elapsed();
    let r = r.and_then(|_| within(Duration::from_secs(120), dt));
    let green = match (&r, green_failure.into_inner()) {
        (_, Some(msg)) => Err(msg),
        (Ok(()), None) => Ok("E/3 <= sum_y G <= E/2 at every site of the 50 domains".into()),
        (Err(msg), None) => Err(msg.clone()),
    };
    let solver = r.map(|_| format!("50 prefixes: half-line = direct, transmission identity at every trap ({dt:.2?})"));
    (solver, green)
}

fn monte_carlo() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..20u64 {
        let left = rng.random_range(-20..=20);
        let width = rng.random_range(6..=40);
        let right = left + width;
        let ntraps = rng.random_range(1..=10.min(width as usize - 1));
        let mut traps: Vec<i64> = (left + 1..right).collect();
        for k in 0..ntraps {
            let j = rng.random_range(k..traps.len());
            traps.swap(k, j);
        }
        traps.truncate(ntraps);
        let start = rng.random_range(left + 1..right);
        let d = WalkDomain::new(left, right, traps.clone()).map_err(e)?;
        let exact = rat_to_f64(solve_direct(&d).map_err(e)?.at(start).expect("interior"));
        let cfg = SimConfig::new(100_000, 7_000 + i);
        let a = simulate(&d, start, Mode::Trapped, &cfg).map_err(e)?;
        let b = simulate(&d, start, Mode::Decorrelated, &cfg).map_err(e)?;
        let za = (a.mean - exact).abs() / a.stderr;
        let zb = (b.mean - exact).abs() / b.stderr;
        let zab = welch_t(&a, &b).abs();
        worst = (worst.0.max(za), worst.1.max(zb), worst.2.max(zab));
        ensure(
            za <= Z_TOL && zb <= Z_TOL && zab <= Z_TOL,
            format!("domain [{left}, {right}] traps {traps:?} start {start}: z = {za:.2}, {zb:.2}, {zab:.2}"),
        )?;
    }
    let dt = t0.elapsed();
    within(Duration::from_secs(300), dt)?;
    Ok(format!(
        "20 domains at 1e5 episodes: max |z| trapped {:.2}, decorrelated {:.2}, between modes {:.2} ({dt:.2?})",
        worst.0, worst.1, worst.2
    ))
}

fn excursions() -> Outcome {
    let t0 = Instant::now();
    let p = rat(1, 3);
    let target = 3.0 * (5f64.sqrt() - 1.0) / 2.0;
    let radius = 40;
    let all: Vec<i64> = (1..radius).collect();
    let exact = rat_to_f64(
        solve_direct(&WalkDomain::new(0, radius, all.clone()).map_err(e)?).map_err(e)?.at(1).expect("interior"),
    );
    let est = simulate_excursion(&all, Side::Positive, radius, &p, &SimConfig::new(1_000_000, 31)).map_err(e)?;
    let z_all = (est.mean - target).abs() / est.stderr;
    ensure(z_all <= Z_TOL, format!("all traps: mean {:.6} vs {target:.6}, z = {z_all:.2}", est.mean))?;
    ensure((exact - target).abs() < 1e-9, format!("all traps exact {exact} vs {target}"))?;

    let traps = [-3, 0, 2, 5];
    let r = 12;
    let cfg = SimConfig::new(200_000, 37);
    let plus = simulate_excursion(&traps, Side::Positive, r, &p, &cfg).map_err(e)?;
    let minus = simulate_excursion(&traps, Side::Negative, r, &p, &SimConfig { seed: 38, ..cfg }).map_err(e)?;
    let (combined, se) = combine_excursions(&traps, &p, &plus, &minus).map_err(e)?;
    let full = WalkDomain::new(-r, r, traps).map_err(e)?;
    let direct = simulate(&full, 0, Mode::Trapped, &SimConfig { seed: 39, ..cfg }).map_err(e)?;
    let z = (combined - direct.mean).abs() / (se * se + direct.stderr * direct.stderr).sqrt();
    ensure(z <= Z_TOL, format!("combined {combined:.4} vs full line {:.4}, z = {z:.2}", direct.mean))?;
    Ok(format!(
        "E_1[tau] = {:.6} (z = {z_all:.2}) vs 3(sqrt5-1)/2; combined {combined:.4} vs full line {:.4} (z = {z:.2}) ({:.2?})",
        est.mean,
        direct.mean,
        t0.elapsed()
    ))
}

fn classifier_verdicts() -> Outcome {
    let cases = [
        ("geometric:rho=2", Status::NonCritical),
        ("double-exp:lambda=2,a=2", Status::NonCritical),
        ("double-exp:lambda=1/2,a=2", Status::Critical),
        ("power-tower:a=2,b=3", Status::Critical),
        ("squared-gap:c=1,i0=2", Status::Critical),
        ("squared-gap:c=1/2,i0=4", Status::NonCritical),
    ];
    let mut parts = Vec::new();
    for (spec, want) in cases {
        let v = classify_family(&spec.parse().map_err(e)?).map_err(e)?;
        ensure(v.status == want, format!("{spec}: {} (want {want})", v.status))?;
        let rule = v.rule.ok_or_else(|| format!("{spec}: no firing rule"))?;
        ensure(!v.evidence.is_empty(), format!("{spec}: no evidence"))?;
        parts.push(format!("{spec} {} {rule}", v.status));
    }
    Ok(parts.join("; "))
}

fn counterexample() -> Outcome {
    let t0 = Instant::now();
    let y: TrapSequence = "geometric:rho=3".parse().map_err(e)?;
    let ce = construct_counterexample(&y, &default_targets(3), 200_000).map_err(e)?;
    ensure(ce.certificate.len() >= 3, "fewer than 3 jumps")?;
    for (i, c) in ce.certificate.iter().enumerate() {
        ensure(c.v >= int_rat(&BigInt::from(i + 1)), format!("v_{} < {}", i + 1, i + 1))?;
    }
    // also checks x_k <= y_k for every produced k
    let checks = verify_counterexample(&y, &ce).map_err(e)?;
    for ((n, u), c) in checks.iter().zip(&ce.certificate) {
        ensure(*u >= c.v, format!("u_{n} < v at jump {}", c.b))?;
    }
    let y2: TrapSequence = "geometric:rho=2".parse().map_err(e)?;
    match construct_counterexample(&y2, &default_targets(3), 200_000) {
        Err(Error::TargetUnreachable { .. }) => {}
        other => return Err(format!("y_k = 2^k: expected TargetUnreachable, got {other:?}")),
    }
    let dt = t0.elapsed();
    within(Duration::from_secs(120), dt)?;
    let jumps: Vec<usize> = ce.certificate.iter().map(|c| c.b).collect();
    Ok(format!("jumps at {jumps:?}, u_n >= v_i after each, 2^k unreachable ({dt:.2?})"))
}

fn threshold_constants() -> Outcome {
    let t0 = Instant::now();
    let r1 = threshold_root(1, 1.0).map_err(e)?;
    ensure((r1 - (1.0 + 2f64.sqrt())).abs() <= 1e-12, format!("threshold_root(1, 1) = {r1}"))?;
    let r20 = threshold_root(20, 0.99).map_err(e)?;
    ensure((2.58..=2.62).contains(&r20), format!("threshold_root(20, 0.99) = {r20}"))?;
    let alpha = alpha_sequence(104);
    let beta: Vec<BigInt> = alpha
        .iter()
        .scan(BigInt::zero(), |s, a| {
            *s += a;
            Some(s.clone())
        })
        .collect();
    for k in 0..=100 {
        ensure(beta[k + 2] == &beta[k + 1] * 3 - &beta[k], format!("beta recurrence at k = {k}"))?;
        ensure(alpha[k + 1] == &beta[k] + &alpha[k], format!("alpha_{} != beta_{k} + alpha_{k}", k + 1))?;
    }
    let dt = t0.elapsed();
    within(Duration::from_secs(1), dt)?;
    Ok(format!("phi(1,1) = {r1:.15}, phi(20,0.99) = {r20:.6}, beta recurrence k <= 100 ({dt:.2?})"))
}

fn sandpile() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..100u64 {
        let n = rng.random_range(1..=8i64);
        let traps: Vec<i64> = (-n..=n).filter(|_| rng.random_bool(0.3)).collect();
        let base = SandpileState::new(n, traps.clone()).map_err(e)?;
        let heights: Vec<u64> =
            base.sites().map(|x| rng.random_range(0..=3 * base.degree(x))).collect::<Vec<_>>();
        let start = base.with_heights(heights).map_err(e)?;
        let before = start.total();
        let mut results = Vec::new();
        for policy in [Policy::Fifo, Policy::LeftmostFirst, Policy::Random(case)] {
            let mut s = start.clone();
            let st = s.stabilize(policy);
            ensure(s.is_stable(), format!("case {case}: not stable"))?;
            ensure(before == s.total() + st.to_sink + st.to_boundary, format!("case {case}: grains not conserved"))?;
            results.push((s.heights().to_vec(), st.topples));
        }
        ensure(results.windows(2).all(|w| w[0] == w[1]), format!("case {case}: policies disagree"))?;
    }
    let stats = run_chain(5, &[-2, 0, 2], &ChainConfig::new(1_000_000, 5)).map_err(e)?;
    ensure(stats.conserved, "chain avalanche without conservation")?;
    let entries = green_comparison(&stats).map_err(e)?;
    let worst = entries.iter().map(|g| g.z_score()).fold(0.0, f64::max);
    ensure(worst <= Z_TOL, format!("max |z| = {worst:.2} over {} Green entries", entries.len()))?;
    let dt = t0.elapsed();
    within(Duration::from_secs(300), dt)?;
    Ok(format!(
        "100 states x 3 policies identical and conserved; {} Green entries at 1e6 steps, max |z| = {worst:.2} ({dt:.2?})",
        entries.len()
    ))
}

fn finite_trap_divergence() -> Outcome {
    let mut last = Vec::new();
    let mut n = 10;
    while n <= 100_000 {
        let d = WalkDomain::new(0, n, [1]).map_err(e)?;
        let e1 = solve_direct(&d).map_err(e)?.at(1).cloned().expect("interior");
        last.push(format!("n = {n}: {:.1}", rat_to_f64(&e1)));
        if e1 > rat(1000, 1) {
            return Ok(format!("E_1(T_n) with trap {{1}}: {}", last.join(", ")));
        }
        n *= 10;
    }
    Err(format!("E_1(T_n) stays <= 1000: {}", last.join(", ")))
}

fn main() {
    let mut lines: Vec<(usize, &str, Outcome)> = Vec::new();
    lines.push((1, "exact table reproduction", exact_table()));
    let (c2, c3) = monotonicity_and_bounds();
    lines.push((2, "monotonicity property", c2));
    lines.push((3, "R-bound sandwich", c3));
    let (c4, c5) = solver_and_green();
    lines.push((4, "solver equivalence", c4));
    lines.push((5, "Green sandwich", c5));
    lines.push((6, "Monte Carlo vs exact", monte_carlo()));
    lines.push((7, "excursion formula", excursions()));
    lines.push((8, "classifier verdicts", classifier_verdicts()));
    lines.push((9, "counterexample construction", counterexample()));
    lines.push((10, "threshold constants", threshold_constants()));
    lines.push((11, "sandpile validation", sandpile()));
    lines.push((12, "finite-trap divergence", finite_trap_divergence()));

    let mut failed = 0;
    for (k, name, outcome) in &lines {
        match outcome {
            Ok(detail) => println!("[PASS] {k:>2} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {k:>2} {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
