//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on a module error, 2 on a malformed
//! invocation. Errors are written to stderr as `{"error": {"code", "message"}}`.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::classifier::{
    classify_family, construct_counterexample, default_targets, empirical_report, verify_counterexample,
};
use crate::error::{Error, Result};
use crate::exact::{parse_rational, rat, rat_to_f64, DigitBudget, DEFAULT_DIGIT_BUDGET};
use crate::recursion::{compute_pq, compute_weights, r_bounds_from_prefix, series_from_weights};
use crate::report;
use crate::sandpile::{green_comparison, run_chain, ChainConfig, Policy};
use crate::sequence::{SequenceFamily, TrapSequence};
use crate::simulator::{simulate, Mode, SimConfig};
use crate::solver::{green_row_sums, solve_direct, solve_halfline, WalkDomain};

/// Environment variable holding the default digit budget.
pub const DIGIT_BUDGET_ENV: &str = "TRAPWALK_DIGIT_BUDGET";

#[derive(Debug, Parser)]
#[command(name = "trapwalk", version, about = "Trapped random walks on Z and the dissipative abelian sandpile")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,

    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Largest decimal size of any exact integer [default: $TRAPWALK_DIGIT_BUDGET or 2000000].
    #[arg(long, global = true)]
    pub digit_budget: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Trapped,
    Decorrelated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Fifo,
    Leftmost,
    Random,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact p_k, q_k, a_k, weights, R-bounds and series terms of a prefix.
    ///
    /// CSV columns: k, x, p, q, a, a_decimal, W, mu, R (R_k for k >= 1).
    Analyze {
        /// Sequence spec, e.g. `explicit:1,2,3` or `geometric:rho=2,scale=1`.
        #[arg(long)]
        sequence: String,
        /// Prefix length.
        #[arg(long)]
        n: usize,
        /// Add floating-point ln x_k diagnostics (not rigorous).
        #[arg(long)]
        log_domain: bool,
    },
    /// Criticality verdict for a sequence family.
    ///
    /// CSV columns: status, rule, applicable_rules.
    Classify {
        /// Family spec, e.g. `double-exp:lambda=1/2,a=2`.
        #[arg(long)]
        family: String,
        /// Also run the empirical report on the first n terms.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Exact expected absorption times.
    ///
    /// With --sequence and --N: closed-form half-line solve on [0, x_N].
    /// With --domain: direct tridiagonal solve.
    /// CSV columns: x, E, E_decimal.
    Solve {
        #[command(flatten)]
        target: DomainArgs,
        /// Also report Green row sums sum_y G(x, y) (direct solve).
        #[arg(long)]
        green: bool,
    },
    /// Monte Carlo estimate of the absorption time.
    ///
    /// CSV (with --histogram): trap_visits, sink_episodes.
    Simulate {
        #[command(flatten)]
        target: DomainArgs,
        /// Starting site.
        #[arg(long)]
        start: i64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Trapped)]
        mode: ModeArg,
        /// Worker threads (results do not depend on it); 0 = all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Emit the trap-visit histogram of sink-absorbed episodes as CSV.
        #[arg(long)]
        histogram: bool,
        /// Also report the exact mean from the direct solver.
        #[arg(long)]
        exact: bool,
    },
    /// Sandpile chain statistics on [-n, n] against exact Green entries.
    ///
    /// CSV columns: x, y, G_exact, G_exact_decimal, topples_mean, topples_stderr, z.
    Sandpile {
        /// Volume radius n (sites -n..n).
        #[arg(long)]
        volume: i64,
        /// Comma-separated trap sites.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        traps: Vec<i64>,
        #[arg(long)]
        steps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Burn-in additions [default: 10 x number of sites].
        #[arg(long)]
        burnin: Option<u64>,
        #[arg(long, default_value_t = 100)]
        batches: usize,
        #[arg(long, value_enum, default_value_t = PolicyArg::Fifo)]
        policy: PolicyArg,
    },
    /// Critical trap sequence below a growth bound, with exact certificates.
    ///
    /// CSV columns: i, a_i, b_i, x_b_plus_1, v_i, v_i_decimal, t_i.
    ConstructCounterexample {
        /// Growth bound y_k, e.g. `geometric:rho=3`.
        #[arg(long)]
        bound: String,
        /// Number of jumps (targets t_i = i).
        #[arg(long, default_value_t = 3)]
        jumps: usize,
        /// Explicit targets, overriding --jumps.
        #[arg(long, value_delimiter = ',')]
        targets: Option<Vec<String>>,
        /// Largest jump index searched.
        #[arg(long, default_value_t = 200_000)]
        horizon: usize,
        /// Check u_n >= v_i with the exact weights.
        #[arg(long)]
        verify: bool,
    },
    /// Cross-checks on built-in fixtures; prints a pass/fail table.
    ///
    /// CSV columns: check, pass, detail.
    Verify {
        /// Monte Carlo samples per simulated check.
        #[arg(long, default_value_t = 20_000)]
        samples: u64,
    },
}

/// Either a half-line prefix or an explicit interval.
#[derive(Debug, Args)]
pub struct DomainArgs {
    /// Trap sequence; the domain is [0, x_N] with traps x_1..x_(N-1).
    #[arg(long, conflicts_with = "domain")]
    pub sequence: Option<String>,
    /// Prefix length for --sequence.
    #[arg(long = "N", alias = "n")]
    pub n: Option<usize>,
    /// Interval `L..R` with absorbing ends.
    #[arg(long, allow_hyphen_values = true)]
    pub domain: Option<String>,
    /// Comma-separated interior trap sites for --domain.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub traps: Vec<i64>,
    /// Trap probability p/q in (0, 1).
    #[arg(long, default_value = "1/3")]
    pub trap_prob: String,
}

/// Parses `L..R`.
pub fn parse_interval(s: &str) -> Result<(i64, i64)> {
    let (l, r) = s
        .split_once("..")
        .ok_or_else(|| Error::Parse(format!("domain `{s}` is not of the form L..R")))?;
    let p = |t: &str| t.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad domain bound `{t}`")));
    Ok((p(l)?, p(r)?))
}

fn budget(cli: &Cli) -> Result<DigitBudget> {
    if let Some(b) = cli.digit_budget {
        return Ok(DigitBudget(b));
    }
    match std::env::var(DIGIT_BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(DigitBudget)
            .map_err(|_| Error::Parse(format!("{DIGIT_BUDGET_ENV}=`{v}` is not an integer"))),
        Err(_) => Ok(DigitBudget(DEFAULT_DIGIT_BUDGET)),
    }
}

fn sequence(spec: &str, budget: DigitBudget) -> Result<TrapSequence> {
    Ok(TrapSequence::new(spec.parse::<SequenceFamily>()?)?.with_budget(budget))
}

enum Target {
    Halfline(TrapSequence, usize),
    Domain(WalkDomain),
}

fn target(args: &DomainArgs, budget: DigitBudget) -> Result<Target> {
    let p = parse_rational(&args.trap_prob)?;
    match (&args.sequence, &args.domain) {
        (Some(spec), None) => {
            let n = args.n.ok_or_else(|| Error::Parse("--sequence needs --N".into()))?;
            Ok(Target::Halfline(sequence(spec, budget)?, n))
        }
        (None, Some(d)) => {
            let (l, r) = parse_interval(d)?;
            Ok(Target::Domain(WalkDomain::new(l, r, args.traps.iter().copied())?.with_trap_prob(p)?))
        }
        _ => Err(Error::Parse("give exactly one of --sequence or --domain".into())),
    }
}

/// Domain of a target; half-line prefixes become `[0, x_N]`.
fn target_domain(t: &Target, args: &DomainArgs) -> Result<WalkDomain> {
    match t {
        Target::Domain(d) => Ok(d.clone()),
        Target::Halfline(seq, n) => {
            let x = seq.prefix(*n)?;
            let xs: Vec<i64> = x
                .iter()
                .map(|v| i64::try_from(v).map_err(|_| Error::DomainTooLarge { sites: u64::MAX, limit: u64::MAX }))
                .collect::<Result<_>>()?;
            WalkDomain::halfline(&xs)?.with_trap_prob(parse_rational(&args.trap_prob)?)
        }
    }
}

/// Output text of one command.
pub struct Output {
    pub text: String,
    /// non-zero when a verification failed
    pub status: i32,
}

fn json_out(v: Value) -> Output {
    Output { text: format!("{}\n", serde_json::to_string_pretty(&v).expect("serializable")), status: 0 }
}

pub fn execute(cli: &Cli) -> Result<Output> {
    let budget = budget(cli)?;
    let csv = cli.format == Format::Csv;
    match &cli.command {
        Command::Analyze { sequence: spec, n, log_domain } => {
            let seq = sequence(spec, budget)?;
            let table = compute_pq(&seq, *n)?;
            let w = compute_weights(&seq, *n)?;
            if csv {
                return Ok(Output { text: report::recursion_csv(&table, Some(&w)), status: 0 });
            }
            let bounds: Vec<Value> = (0..*n)
                .map(|k| {
                    let (lo, hi) = r_bounds_from_prefix(&table.x, k);
                    json!({ "k": k, "lower": report::rational(&lo), "upper": report::rational(&hi) })
                })
                .collect();
            let mut v = json!({
                "sequence": seq.family().to_string(),
                "recursion": report::recursion(&table),
                "weights": report::weights(&w),
                "series": report::series(&series_from_weights(&w)),
                "r_bounds": bounds,
            });
            if *log_domain {
                let ln: Vec<String> = seq.ln_prefix(*n).into_iter().map(report::float).collect();
                v["log_domain"] = json!({ "ln_x": ln, "rigorous": false });
            }
            Ok(json_out(v))
        }
        Command::Classify { family, n } => {
            let fam: SequenceFamily = family.parse()?;
            let verdict = classify_family(&fam)?;
            let emp = match n {
                Some(n) => Some(empirical_report(&TrapSequence::new(fam.clone())?.with_budget(budget), *n)?),
                None => None,
            };
            if csv {
                let mut rows = vec![vec![
                    "family".to_string(),
                    verdict.status.to_string(),
                    verdict.rule.map(|r| r.to_string()).unwrap_or_default(),
                    verdict.applicable.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" "),
                ]];
                if let Some((ev, _)) = &emp {
                    rows.push(vec![
                        "empirical".into(),
                        ev.status.to_string(),
                        ev.rule.map(|r| r.to_string()).unwrap_or_default(),
                        String::new(),
                    ]);
                }
                return Ok(Output {
                    text: report::csv_string(&["level", "status", "rule", "applicable_rules"], &rows),
                    status: 0,
                });
            }
            let mut v = report::verdict(&verdict);
            if let Some((ev, data)) = emp {
                v["empirical"] = report::verdict(&ev);
                v["empirical"]["data"] = report::empirical(&data);
            }
            Ok(json_out(v))
        }
        Command::Solve { target: args, green } => {
            let t = target(args, budget)?;
            match &t {
                Target::Halfline(seq, n) if !*green => {
                    if !is_one_third(&parse_rational(&args.trap_prob)?) {
                        return Err(Error::UnsupportedTrapProb(args.trap_prob.clone()));
                    }
                    let r = solve_halfline(seq, *n)?;
                    if csv {
                        let mut rows = Vec::new();
                        for (k, e) in r.e_at_traps.iter().enumerate() {
                            rows.push(vec![r.x[k].to_string(), crate::exact::rational_string(e), crate::exact::decimal_sig(e, 17)]);
                        }
                        return Ok(Output { text: report::csv_string(&["x", "E", "E_decimal"], &rows), status: 0 });
                    }
                    Ok(json_out(report::halfline(&r)))
                }
                _ => {
                    let d = target_domain(&t, args)?;
                    let e = solve_direct(&d)?;
                    if csv {
                        return Ok(Output { text: report::site_values_csv(&e, "E"), status: 0 });
                    }
                    let mut v = json!({
                        "domain": [d.left(), d.right()],
                        "traps": d.traps().iter().collect::<Vec<_>>(),
                        "trap_prob": report::rational(d.trap_prob()),
                        "E": report::site_values(&e),
                    });
                    if *green {
                        v["green_row_sums"] = report::site_values(&green_row_sums(&d)?);
                    }
                    Ok(json_out(v))
                }
            }
        }
        Command::Simulate { target: args, start, samples, seed, mode, workers, histogram, exact } => {
            let t = target(args, budget)?;
            let d = target_domain(&t, args)?;
            let mode = match mode {
                ModeArg::Trapped => Mode::Trapped,
                ModeArg::Decorrelated => Mode::Decorrelated,
            };
            let cfg = SimConfig::new(*samples, *seed).with_workers(*workers);
            let est = simulate(&d, *start, mode, &cfg)?;
            if *histogram || csv {
                return Ok(Output { text: report::histogram_csv(&est), status: 0 });
            }
            let mut v = report::sim(&est);
            v["domain"] = json!([d.left(), d.right()]);
            v["start"] = json!(start);
            if !is_one_third(d.trap_prob()) && mode == Mode::Decorrelated {
                v["caveats"] = json!(["decorrelated mode with trap probability other than 1/3 is an extrapolation"]);
            }
            if *exact {
                let e = solve_direct(&d)?;
                let ex = e.at(*start).cloned().unwrap_or_else(BigRational::zero);
                v["exact"] = report::rational(&ex);
                let z = if est.stderr > 0.0 { (est.mean - rat_to_f64(&ex)).abs() / est.stderr } else { 0.0 };
                v["z"] = report::float_value(z);
            }
            Ok(json_out(v))
        }
        Command::Sandpile { volume, traps, steps, seed, burnin, batches, policy } => {
            let policy = match policy {
                PolicyArg::Fifo => Policy::Fifo,
                PolicyArg::Leftmost => Policy::LeftmostFirst,
                PolicyArg::Random => Policy::Random(*seed),
            };
            let cfg = ChainConfig { steps: *steps, seed: *seed, burnin: *burnin, batches: *batches, policy };
            let stats = run_chain(*volume, traps, &cfg)?;
            let entries = green_comparison(&stats)?;
            if csv {
                return Ok(Output { text: report::green_csv(&entries), status: 0 });
            }
            let mut v = report::chain(&stats);
            let worst = entries.iter().map(|e| e.z_score()).fold(0.0, f64::max);
            v["green"] = report::green_entries(&entries);
            v["green_max_z"] = report::float_value(worst);
            Ok(json_out(v))
        }
        Command::ConstructCounterexample { bound, jumps, targets, horizon, verify } => {
            let y = sequence(bound, budget)?;
            let targets: Vec<BigRational> = match targets {
                Some(t) => t.iter().map(|s| parse_rational(s)).collect::<Result<_>>()?,
                None => default_targets(*jumps),
            };
            let ce = construct_counterexample(&y, &targets, *horizon)?;
            if csv {
                return Ok(Output { text: report::counterexample_csv(&ce), status: 0 });
            }
            let checks = if *verify { Some(verify_counterexample(&y, &ce)?) } else { None };
            let mut v = report::counterexample(&ce, checks.as_deref());
            v["bound"] = json!(y.family().to_string());
            Ok(json_out(v))
        }
        Command::Verify { samples } => {
            let rows = verify_suite(*samples);
            let ok = rows.iter().all(|r| r.1);
            let text = if csv {
                let rows: Vec<Vec<String>> =
                    rows.iter().map(|(n, p, d)| vec![n.clone(), p.to_string(), d.clone()]).collect();
                report::csv_string(&["check", "pass", "detail"], &rows)
            } else {
                let mut s = String::new();
                for (name, pass, detail) in &rows {
                    s.push_str(&format!("{:<4} {name}: {detail}\n", if *pass { "PASS" } else { "FAIL" }));
                }
                s
            };
            Ok(Output { text, status: if ok { 0 } else { 1 } })
        }
    }
}

/// Built-in cross-checks: `(name, pass, detail)`.
pub fn verify_suite(samples: u64) -> Vec<(String, bool, String)> {
    let mut out = Vec::new();
    let mut check = |name: &str, r: Result<(bool, String)>| {
        let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error {}: {e}", e.code())));
        out.push((name.to_string(), pass, detail));
    };
    let fixtures: [&[i64]; 4] = [&[1, 2, 3], &[2, 6, 22], &[1, 5, 9, 40, 41], &[3, 4, 10, 11, 30, 75]];

    check("recursion vs weights (a_n = eps_n + u_n)", (|| {
        for xs in fixtures {
            let s = TrapSequence::explicit(xs.iter().copied())?;
            let t = compute_pq(&s, xs.len())?;
            let w = compute_weights(&s, xs.len())?;
            if t.a[xs.len() - 1] != &w.eps + &w.u || w.mu.iter().sum::<BigRational>() != BigRational::one() {
                return Ok((false, format!("mismatch on {xs:?}")));
            }
        }
        Ok((true, format!("{} fixtures", fixtures.len())))
    })());

    check("half-line vs direct solver", (|| {
        for xs in fixtures {
            let s = TrapSequence::explicit(xs.iter().copied())?;
            let h = solve_halfline(&s, xs.len())?.profile()?;
            let d = solve_direct(&WalkDomain::halfline(xs)?)?;
            if h != d {
                return Ok((false, format!("profiles differ on {xs:?}")));
            }
        }
        Ok((true, "profiles identical".into()))
    })());

    check("R-bound sandwich", (|| {
        for xs in fixtures {
            let s = TrapSequence::explicit(xs.iter().copied())?;
            let w = compute_weights(&s, xs.len())?;
            let x: Vec<BigInt> = xs.iter().map(|&v| BigInt::from(v)).collect();
            for k in 0..xs.len() {
                let (lo, hi) = r_bounds_from_prefix(&x, k);
                if w.r[k] < lo || w.r[k] > hi {
                    return Ok((false, format!("R_{k} outside bounds on {xs:?}")));
                }
            }
        }
        Ok((true, "all R_k within bounds".into()))
    })());

    check("Green sandwich E/3 <= sum G <= E/2", (|| {
        for xs in fixtures {
            let d = WalkDomain::halfline(xs)?;
            let e = solve_direct(&d)?;
            let g = green_row_sums(&d)?;
            for ((_, ev), (_, gv)) in e.iter().zip(g.iter()) {
                if *gv < ev / rat(3, 1) || *gv > ev / rat(2, 1) {
                    return Ok((false, format!("sandwich fails on {xs:?}")));
                }
            }
        }
        Ok((true, "all sites".into()))
    })());

    check("simulation vs exact (both modes)", (|| {
        let d = WalkDomain::new(0, 12, [2, 5, 6, 9])?;
        let exact = rat_to_f64(solve_direct(&d)?.at(4).expect("interior"));
        let mut worst: f64 = 0.0;
        for mode in [Mode::Trapped, Mode::Decorrelated] {
            let e = simulate(&d, 4, mode, &SimConfig::new(samples, 11))?;
            worst = worst.max((e.mean - exact).abs() / e.stderr);
        }
        Ok((worst < 4.0, format!("max |z| = {worst:.3}")))
    })());

    check("classifier examples", (|| {
        let cases = [
            ("geometric:rho=2", "NonCritical"),
            ("double-exp:lambda=2,a=2", "NonCritical"),
            ("double-exp:lambda=1/2,a=2", "Critical"),
            ("power-tower:a=2,b=3", "Critical"),
            ("squared-gap:c=1,i0=2", "Critical"),
            ("squared-gap:c=1/2,i0=4", "NonCritical"),
        ];
        for (spec, want) in cases {
            let v = classify_family(&spec.parse()?)?;
            if v.status.to_string() != want {
                return Ok((false, format!("{spec}: {}", v.status)));
            }
        }
        Ok((true, format!("{} families", cases.len())))
    })());
    out
}

/// Parses, runs and writes; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &out.text).map_err(|e| e.to_string()),
                None => std::io::stdout().write_all(out.text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(msg) = written {
                let e = Error::BadParams(format!("cannot write output: {msg}"));
                eprintln!("{}", report::error(&e));
                return 1;
            }
            out.status
        }
        Err(e) => {
            eprintln!("{}", report::error(&e));
            if matches!(e, Error::Parse(_)) { 2 } else { 1 }
        }
    }
}

fn is_one_third(p: &BigRational) -> bool {
    *p == rat(1, 3)
}
