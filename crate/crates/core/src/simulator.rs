//! Monte Carlo estimates for the trapped walk on a [`WalkDomain`].
//!
//! Every episode draws from its own ChaCha8 stream (`seed`, stream = episode
//! index), and per-episode results are folded into integer accumulators, so
//! estimates are bit-identical for any number of workers.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::solver::{excursion_combine_f64, SideEstimate, WalkDomain};

/// Default per-episode step cap.
pub const DEFAULT_STEP_CAP: u64 = 1_000_000_000;

const CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Trapped,
    Decorrelated,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Trapped => "trapped",
            Mode::Decorrelated => "decorrelated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub samples: u64,
    pub seed: u64,
    /// 0 uses the global rayon pool.
    pub workers: usize,
    pub step_cap: u64,
}

impl SimConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        SimConfig { samples, seed, workers: 0, step_cap: DEFAULT_STEP_CAP }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Sink,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Episode {
    pub len: u64,
    pub exit: Exit,
    /// visits to trap sites, the starting site included
    pub trap_visits: u64,
}

/// Integer sums over episodes. Merging is associative and commutative.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Accumulator {
    pub count: u64,
    pub sum_len: u128,
    pub sum_len_sq: u128,
    pub sink: u64,
    pub left: u64,
    pub right: u64,
    pub sum_len_sink: u128,
    pub sum_len_left: u128,
    pub sum_len_right: u128,
    pub cap_hits: u64,
    /// trap-visit counts of sink-absorbed episodes
    pub histogram: BTreeMap<u64, u64>,
}

impl Accumulator {
    fn push(&mut self, ep: Option<Episode>) {
        let Some(ep) = ep else {
            self.cap_hits += 1;
            return;
        };
        let l = ep.len as u128;
        self.count += 1;
        self.sum_len += l;
        self.sum_len_sq += l * l;
        match ep.exit {
            Exit::Sink => {
                self.sink += 1;
                self.sum_len_sink += l;
                *self.histogram.entry(ep.trap_visits).or_default() += 1;
            }
            Exit::Left => {
                self.left += 1;
                self.sum_len_left += l;
            }
            Exit::Right => {
                self.right += 1;
                self.sum_len_right += l;
            }
        }
    }

    pub fn merge(mut self, other: Accumulator) -> Accumulator {
        self.count += other.count;
        self.sum_len += other.sum_len;
        self.sum_len_sq += other.sum_len_sq;
        self.sink += other.sink;
        self.left += other.left;
        self.right += other.right;
        self.sum_len_sink += other.sum_len_sink;
        self.sum_len_left += other.sum_len_left;
        self.sum_len_right += other.sum_len_right;
        self.cap_hits += other.cap_hits;
        for (k, v) in other.histogram {
            *self.histogram.entry(k).or_default() += v;
        }
        self
    }

    pub fn mean(&self) -> f64 {
        self.sum_len as f64 / self.count as f64
    }

    /// Unbiased sample variance of episode length.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as u128;
        let num = n * self.sum_len_sq - self.sum_len * self.sum_len;
        num as f64 / (n * (n - 1)) as f64
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    /// Variance of the indicator of the given event count.
    fn indicator_variance(&self, hits: u64) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let p = hits as f64 / n;
        p * (1.0 - p) * n / (n - 1.0)
    }

    /// Sample covariance of length and an event indicator.
    fn covariance(&self, hits: u64, sum_len_hits: u128) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as i128;
        let num = n * sum_len_hits as i128 - self.sum_len as i128 * hits as i128;
        num as f64 / (n * (n - 1)) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub mode: Mode,
    pub sink_fraction: f64,
    pub sink_stderr: f64,
    pub left_fraction: f64,
    pub right_fraction: f64,
    pub histogram: BTreeMap<u64, u64>,
    pub accumulator: Accumulator,
}

impl SimEstimate {
    fn from_acc(acc: Accumulator, seed: u64, mode: Mode) -> Result<Self> {
        if acc.cap_hits > 0 {
            return Err(Error::StepCapHit(acc.cap_hits));
        }
        let n = acc.count as f64;
        Ok(SimEstimate {
            mean: acc.mean(),
            stderr: acc.stderr(),
            samples: acc.count,
            seed,
            mode,
            sink_fraction: acc.sink as f64 / n,
            sink_stderr: (acc.indicator_variance(acc.sink) / n).sqrt(),
            left_fraction: acc.left as f64 / n,
            right_fraction: acc.right as f64 / n,
            histogram: acc.histogram.clone(),
            accumulator: acc,
        })
    }
}

/// Fair coin flips drawn 64 at a time.
struct Bits {
    word: u64,
    left: u32,
}

impl Bits {
    fn new() -> Self {
        Bits { word: 0, left: 0 }
    }

    fn next(&mut self, rng: &mut ChaCha8Rng) -> bool {
        if self.left == 0 {
            self.word = rng.next_u64();
            self.left = 64;
        }
        let b = self.word & 1 == 1;
        self.word >>= 1;
        self.left -= 1;
        b
    }
}

/// Immutable per-run view of the domain.
struct Kernel {
    left: i64,
    right: i64,
    trap: Vec<bool>,
    /// trap probability `num/den`
    num: u64,
    den: u64,
    cap: u64,
}

impl Kernel {
    fn new(domain: &WalkDomain, cap: u64) -> Result<Self> {
        let p = domain.trap_prob();
        let (num, den) = (p.numer().to_u64(), p.denom().to_u64());
        let (Some(num), Some(den)) = (num, den) else {
            return Err(Error::BadParams("trap probability numerator/denominator exceed 64 bits".into()));
        };
        if den > u64::MAX / 2 {
            return Err(Error::BadParams("trap probability denominator too large".into()));
        }
        let len = (domain.right() - domain.left() + 1) as usize;
        let mut trap = vec![false; len];
        for &t in domain.traps() {
            trap[(t - domain.left()) as usize] = true;
        }
        Ok(Kernel { left: domain.left(), right: domain.right(), trap, num, den, cap })
    }

    fn is_trap(&self, x: i64) -> bool {
        self.trap[(x - self.left) as usize]
    }

    fn boundary(&self, x: i64) -> Option<Exit> {
        if x <= self.left {
            Some(Exit::Left)
        } else if x >= self.right {
            Some(Exit::Right)
        } else {
            None
        }
    }

    /// Bernoulli(p) with the exact rational p.
    fn absorbed(&self, rng: &mut ChaCha8Rng) -> bool {
        rng.random_range(0..self.den) < self.num
    }

    fn trapped(&self, start: i64, rng: &mut ChaCha8Rng) -> Option<Episode> {
        let mut bits = Bits::new();
        let mut x = start;
        let mut len = 0u64;
        let mut visits = 0u64;
        loop {
            if let Some(exit) = self.boundary(x) {
                return Some(Episode { len, exit, trap_visits: visits });
            }
            if len >= self.cap {
                return None;
            }
            len += 1;
            if self.is_trap(x) {
                visits += 1;
                // sink w.p. p, then left/right w.p. (1-p)/2 each
                let u = rng.random_range(0..2 * self.den);
                if u < 2 * self.num {
                    return Some(Episode { len, exit: Exit::Sink, trap_visits: visits });
                }
                x += if u - 2 * self.num < self.den - self.num { -1 } else { 1 };
            } else {
                x += if bits.next(rng) { 1 } else { -1 };
            }
        }
    }

    fn decorrelated(&self, start: i64, rng: &mut ChaCha8Rng) -> Option<Episode> {
        // N ~ Geometric(p) on {1, 2, ...}
        let mut budget = 1u64;
        while !self.absorbed(rng) {
            budget += 1;
        }
        let mut bits = Bits::new();
        let mut x = start;
        let mut len = 0u64;
        let mut visits = 0u64;
        loop {
            if let Some(exit) = self.boundary(x) {
                return Some(Episode { len, exit, trap_visits: visits });
            }
            if len >= self.cap {
                return None;
            }
            len += 1;
            if self.is_trap(x) {
                visits += 1;
                if visits == budget {
                    return Some(Episode { len, exit: Exit::Sink, trap_visits: visits });
                }
            }
            x += if bits.next(rng) { 1 } else { -1 };
        }
    }
}

fn episode_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn run<F>(cfg: &SimConfig, episode: F) -> Result<Accumulator>
where
    F: Fn(&mut ChaCha8Rng) -> Option<Episode> + Sync,
{
    if cfg.samples == 0 {
        return Err(Error::BadParams("samples must be >= 1".into()));
    }
    let chunks = cfg.samples.div_ceil(CHUNK);
    let work = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = Accumulator::default();
                for i in c * CHUNK..((c + 1) * CHUNK).min(cfg.samples) {
                    acc.push(episode(&mut episode_rng(cfg.seed, i)));
                }
                acc
            })
            .reduce(Accumulator::default, Accumulator::merge)
    };
    if cfg.workers == 0 {
        return Ok(work());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::BadParams(format!("thread pool: {e}")))?;
    Ok(pool.install(work))
}

fn check_start(domain: &WalkDomain, start: i64) -> Result<()> {
    if domain.is_interior(start) {
        Ok(())
    } else {
        Err(Error::BadStart(start))
    }
}

pub fn simulate(domain: &WalkDomain, start: i64, mode: Mode, cfg: &SimConfig) -> Result<SimEstimate> {
    check_start(domain, start)?;
    let k = Kernel::new(domain, cfg.step_cap)?;
    let acc = match mode {
        Mode::Trapped => run(cfg, |rng| k.trapped(start, rng))?,
        Mode::Decorrelated => run(cfg, |rng| k.decorrelated(start, rng))?,
    };
    SimEstimate::from_acc(acc, cfg.seed, mode)
}

pub fn simulate_trapped(domain: &WalkDomain, start: i64, cfg: &SimConfig) -> Result<SimEstimate> {
    simulate(domain, start, Mode::Trapped, cfg)
}

pub fn simulate_decorrelated(domain: &WalkDomain, start: i64, cfg: &SimConfig) -> Result<SimEstimate> {
    simulate(domain, start, Mode::Decorrelated, cfg)
}

/// Trap-visit counts of sink-absorbed episodes of the trapped walk.
pub fn trap_visit_histogram(domain: &WalkDomain, start: i64, cfg: &SimConfig) -> Result<BTreeMap<u64, u64>> {
    Ok(simulate_trapped(domain, start, cfg)?.histogram)
}

/// Welch statistic `|m1 - m2| / sqrt(se1^2 + se2^2)`.
pub fn welch_t(a: &SimEstimate, b: &SimEstimate) -> f64 {
    let se = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
    if se == 0.0 {
        if a.mean == b.mean { 0.0 } else { f64::INFINITY }
    } else {
        (a.mean - b.mean).abs() / se
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
}

/// Excursion from `+-1` until the walk hits `{0, s}`, run on `[0, r]` or
/// `[-r, 0]`; reaching `+-r` counts as a truncated, non-returning excursion.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionEstimate {
    pub side: Side,
    pub radius: i64,
    /// mean of `tau`
    pub mean: f64,
    pub stderr: f64,
    /// fraction of excursions that do not return to 0 (sink or truncation)
    pub escape: f64,
    pub escape_stderr: f64,
    /// fraction ending in the sink
    pub sink_fraction: f64,
    pub truncated: u64,
    pub samples: u64,
    /// `(var tau, var escape, cov)` of single excursions divided by `samples`
    pub side_estimate: SideEstimate,
}

/// Restriction of a full-line trap set to one side.
pub fn side_domain(traps: &[i64], side: Side, radius: i64, trap_prob: &BigRational) -> Result<WalkDomain> {
    if radius < 2 {
        return Err(Error::BadRadius(format!("radius {radius} < 2")));
    }
    let d = match side {
        Side::Positive => WalkDomain::new(0, radius, traps.iter().copied().filter(|&t| t > 0 && t < radius))?,
        Side::Negative => WalkDomain::new(-radius, 0, traps.iter().copied().filter(|&t| t < 0 && t > -radius))?,
    };
    d.with_trap_prob(trap_prob.clone())
}

pub fn simulate_excursion(
    traps: &[i64],
    side: Side,
    radius: i64,
    trap_prob: &BigRational,
    cfg: &SimConfig,
) -> Result<ExcursionEstimate> {
    let domain = side_domain(traps, side, radius, trap_prob)?;
    let start = match side {
        Side::Positive => 1,
        Side::Negative => -1,
    };
    let est = simulate_trapped(&domain, start, cfg)?;
    let acc = &est.accumulator;
    // the origin is the left end on the positive side and the right end otherwise
    let (truncated, sum_len_trunc) = match side {
        Side::Positive => (acc.right, acc.sum_len_right),
        Side::Negative => (acc.left, acc.sum_len_left),
    };
    let escape_hits = acc.sink + truncated;
    let sum_len_escape = acc.sum_len_sink + sum_len_trunc;
    let n = acc.count as f64;
    let var_escape = acc.indicator_variance(escape_hits);
    let cov = acc.covariance(escape_hits, sum_len_escape);
    Ok(ExcursionEstimate {
        side,
        radius,
        mean: est.mean,
        stderr: est.stderr,
        escape: escape_hits as f64 / n,
        escape_stderr: (var_escape / n).sqrt(),
        sink_fraction: est.sink_fraction,
        truncated,
        samples: acc.count,
        side_estimate: SideEstimate {
            duration: est.mean,
            sink_prob: escape_hits as f64 / n,
            var_duration: acc.variance() / n,
            var_sink: var_escape / n,
            cov: cov / n,
        },
    })
}

/// Runs at `r` and `2r`; rejects the radius when the two mean estimates
/// differ by at least twice their combined standard error.
pub fn simulate_excursion_checked(
    traps: &[i64],
    side: Side,
    radius: i64,
    trap_prob: &BigRational,
    cfg: &SimConfig,
) -> Result<ExcursionEstimate> {
    let near = simulate_excursion(traps, side, radius, trap_prob, cfg)?;
    let far_cfg = SimConfig { seed: cfg.seed ^ 0x9e37_79b9_7f4a_7c15, ..*cfg };
    let far = simulate_excursion(traps, side, 2 * radius, trap_prob, &far_cfg)?;
    let se = (near.stderr.powi(2) + far.stderr.powi(2)).sqrt();
    let diff = (near.mean - far.mean).abs();
    if diff >= 2.0 * se && diff > 0.0 {
        return Err(Error::BadRadius(format!(
            "estimates at radius {} and {} differ by {diff:.6} (2*stderr = {:.6}); increase the radius",
            radius,
            2 * radius,
            2.0 * se
        )));
    }
    Ok(near)
}

/// Absorption time from 0 assembled from two one-sided excursion estimates,
/// with its delta-method standard error.
pub fn combine_excursions(
    traps: &[i64],
    trap_prob: &BigRational,
    plus: &ExcursionEstimate,
    minus: &ExcursionEstimate,
) -> Result<(f64, f64)> {
    let p0 = if traps.contains(&0) { crate::exact::rat_to_f64(trap_prob) } else { 0.0 };
    excursion_combine_f64(p0, &plus.side_estimate, &minus.side_estimate)
}

/// Wald consistency on the full line `[-r, r]` started at 0: the mean
/// absorption time against (mean number of excursions from 0) times (mean
/// excursion length from independent one-sided runs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldCheck {
    pub mean_time: f64,
    pub mean_time_stderr: f64,
    pub mean_excursions: f64,
    pub mean_excursion_len: f64,
    pub product: f64,
    pub product_stderr: f64,
}

impl WaldCheck {
    pub fn z_score(&self) -> f64 {
        let se = (self.mean_time_stderr.powi(2) + self.product_stderr.powi(2)).sqrt();
        (self.mean_time - self.product).abs() / se
    }
}

pub fn wald_check(traps: &[i64], radius: i64, trap_prob: &BigRational, cfg: &SimConfig) -> Result<WaldCheck> {
    let full = WalkDomain::new(-radius, radius, traps.iter().copied().filter(|t| t.abs() < radius))?
        .with_trap_prob(trap_prob.clone())?;
    let k = Kernel::new(&full, cfg.step_cap)?;
    // departures from 0 per episode, carried in the trap-visit slot
    let acc = run(cfg, |rng| {
        let ep = k.excursion_count(0, rng)?;
        Some(Episode { exit: Exit::Sink, ..ep })
    })?;
    if acc.cap_hits > 0 {
        return Err(Error::StepCapHit(acc.cap_hits));
    }
    let time = simulate_trapped(&full, 0, cfg)?;
    let n = acc.count as f64;
    let mut s1 = 0f64;
    let mut s2 = 0f64;
    for (&v, &c) in &acc.histogram {
        s1 += v as f64 * c as f64;
        s2 += (v as f64).powi(2) * c as f64;
    }
    let mean_n = s1 / n;
    let var_n = (s2 - s1 * s1 / n) / (n - 1.0);

    let side_cfg = SimConfig { seed: cfg.seed.wrapping_add(1), ..*cfg };
    let plus = simulate_excursion(traps, Side::Positive, radius, trap_prob, &side_cfg)?;
    let minus = simulate_excursion(traps, Side::Negative, radius, trap_prob, &side_cfg)?;
    let p0 = if traps.contains(&0) { crate::exact::rat_to_f64(trap_prob) } else { 0.0 };
    let h = (1.0 - p0) / 2.0;
    let len = 1.0 + h * (plus.mean + minus.mean);
    let var_len = h * h * (plus.stderr.powi(2) + minus.stderr.powi(2));
    let product = mean_n * len;
    let product_se = (len * len * var_n / n + mean_n * mean_n * var_len).sqrt();
    Ok(WaldCheck {
        mean_time: time.mean,
        mean_time_stderr: time.stderr,
        mean_excursions: mean_n,
        mean_excursion_len: len,
        product,
        product_stderr: product_se,
    })
}

impl Kernel {
    /// Trapped episode that reports in `trap_visits` the number of
    /// departures from `origin`.
    fn excursion_count(&self, origin: i64, rng: &mut ChaCha8Rng) -> Option<Episode> {
        let mut bits = Bits::new();
        let mut x = origin;
        let mut len = 0u64;
        let mut departures = 0u64;
        loop {
            if let Some(exit) = self.boundary(x) {
                return Some(Episode { len, exit, trap_visits: departures });
            }
            if len >= self.cap {
                return None;
            }
            len += 1;
            if x == origin {
                departures += 1;
            }
            if self.is_trap(x) {
                let u = rng.random_range(0..2 * self.den);
                if u < 2 * self.num {
                    return Some(Episode { len, exit: Exit::Sink, trap_visits: departures });
                }
                x += if u - 2 * self.num < self.den - self.num { -1 } else { 1 };
            } else {
                x += if bits.next(rng) { 1 } else { -1 };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use crate::solver::solve_direct;

    fn cfg(samples: u64) -> SimConfig {
        SimConfig::new(samples, 7)
    }

    #[test]
    fn single_trap_episode_has_length_one() {
        let d = WalkDomain::new(0, 2, [1]).unwrap();
        for mode in [Mode::Trapped, Mode::Decorrelated] {
            let e = simulate(&d, 1, mode, &cfg(2000)).unwrap();
            assert_eq!(e.mean, 1.0);
            assert_eq!(e.stderr, 0.0);
        }
        let h = trap_visit_histogram(&d, 1, &cfg(2000)).unwrap();
        assert_eq!(h.keys().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn gamblers_ruin_mean() {
        let d = WalkDomain::new(0, 4, []).unwrap();
        let e = simulate_trapped(&d, 2, &cfg(100_000)).unwrap();
        assert!((e.mean - 4.0).abs() < 4.0 * e.stderr);
        assert!(e.histogram.is_empty());
    }

    #[test]
    fn matches_exact_solver() {
        let d = WalkDomain::new(0, 3, [1, 2]).unwrap();
        let exact = crate::exact::rat_to_f64(solve_direct(&d).unwrap().at(1).unwrap());
        for mode in [Mode::Trapped, Mode::Decorrelated] {
            let e = simulate(&d, 1, mode, &cfg(100_000)).unwrap();
            assert!((e.mean - exact).abs() < 4.0 * e.stderr, "{mode}: {} vs {exact}", e.mean);
        }
    }

    #[test]
    fn bad_start() {
        let d = WalkDomain::new(0, 3, [1]).unwrap();
        assert_eq!(simulate_trapped(&d, 0, &cfg(10)), Err(Error::BadStart(0)));
        assert_eq!(simulate_trapped(&d, 5, &cfg(10)), Err(Error::BadStart(5)));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let d = WalkDomain::new(-6, 9, [-2, 1, 4]).unwrap();
        let a = simulate_trapped(&d, 0, &cfg(5000).with_workers(1)).unwrap();
        let b = simulate_trapped(&d, 0, &cfg(5000).with_workers(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_cap_invalidates() {
        let d = WalkDomain::new(0, 100, []).unwrap();
        let r = simulate_trapped(&d, 50, &cfg(100).with_step_cap(10));
        assert!(matches!(r, Err(Error::StepCapHit(_))));
    }

    #[test]
    fn excursion_without_traps_is_ruin_time() {
        let e = simulate_excursion(&[], Side::Positive, 6, &rat(1, 3), &cfg(50_000)).unwrap();
        assert!((e.mean - 5.0).abs() < 4.0 * e.stderr);
        assert!(simulate_excursion(&[], Side::Positive, 1, &rat(1, 3), &cfg(10)).is_err());
    }

    #[test]
    fn accumulator_merge_is_order_free() {
        let mut a = Accumulator::default();
        let mut b = Accumulator::default();
        a.push(Some(Episode { len: 3, exit: Exit::Sink, trap_visits: 2 }));
        b.push(Some(Episode { len: 5, exit: Exit::Left, trap_visits: 0 }));
        b.push(None);
        assert_eq!(a.clone().merge(b.clone()), b.merge(a));
    }
}
