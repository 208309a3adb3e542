//! Dissipative abelian sandpile on the volume `[-n, n]`.
//!
//! `deg(x) = 2 + [x is a trap]`; a site is stable when its height is below
//! its degree. A toppling sends one grain to each neighbour and, at a trap,
//! one grain to the sink. Grains pushed past `-n` or `n` leave the system.

use std::collections::{BTreeSet, VecDeque};

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::rat_to_f64;
use crate::solver::{green_column, WalkDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// queue of unstable sites
    Fifo,
    LeftmostFirst,
    /// uniformly chosen unstable site, seeded
    Random(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SandpileState {
    n: i64,
    traps: BTreeSet<i64>,
    deg: Vec<u64>,
    heights: Vec<u64>,
}

impl SandpileState {
    /// Empty configuration on `[-n, n]`.
    pub fn new(n: i64, traps: impl IntoIterator<Item = i64>) -> Result<Self> {
        if n < 0 {
            return Err(Error::BadParams("volume radius must be >= 0".into()));
        }
        let traps: BTreeSet<i64> = traps.into_iter().collect();
        if let Some(&t) = traps.iter().find(|t| t.abs() > n) {
            return Err(Error::OutOfVolume(t));
        }
        let deg = (-n..=n).map(|x| 2 + traps.contains(&x) as u64).collect();
        Ok(SandpileState { n, traps, deg, heights: vec![0; (2 * n + 1) as usize] })
    }

    pub fn with_heights(mut self, heights: Vec<u64>) -> Result<Self> {
        if heights.len() != self.heights.len() {
            return Err(Error::BadParams(format!(
                "expected {} heights, got {}",
                self.heights.len(),
                heights.len()
            )));
        }
        self.heights = heights;
        Ok(self)
    }

    /// Every site at `deg - 1`.
    pub fn max_stable(n: i64, traps: impl IntoIterator<Item = i64>) -> Result<Self> {
        let mut s = SandpileState::new(n, traps)?;
        for x in -n..=n {
            let i = s.index(x);
            s.heights[i] = s.degree(x) - 1;
        }
        Ok(s)
    }

    pub fn radius(&self) -> i64 {
        self.n
    }

    pub fn traps(&self) -> &BTreeSet<i64> {
        &self.traps
    }

    pub fn heights(&self) -> &[u64] {
        &self.heights
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        -self.n..=self.n
    }

    pub fn size(&self) -> usize {
        self.heights.len()
    }

    fn index(&self, x: i64) -> usize {
        (x + self.n) as usize
    }

    pub fn contains(&self, x: i64) -> bool {
        x.abs() <= self.n
    }

    pub fn degree(&self, x: i64) -> u64 {
        2 + self.traps.contains(&x) as u64
    }

    pub fn height(&self, x: i64) -> Result<u64> {
        if !self.contains(x) {
            return Err(Error::OutOfVolume(x));
        }
        Ok(self.heights[self.index(x)])
    }

    pub fn total(&self) -> u64 {
        self.heights.iter().sum()
    }

    fn unstable_at(&self, i: usize) -> bool {
        self.heights[i] >= self.deg_at(i)
    }

    fn deg_at(&self, i: usize) -> u64 {
        self.deg[i]
    }

    pub fn is_stable(&self) -> bool {
        (0..self.size()).all(|i| !self.unstable_at(i))
    }

    /// Topples site index `i` once.
    fn topple(&mut self, i: usize, out: &mut Stabilization) {
        let d = self.deg_at(i);
        self.heights[i] -= d;
        out.topples[i] += 1;
        if d == 3 {
            out.to_sink += 1;
        }
        if i == 0 {
            out.to_boundary += 1;
        } else {
            self.heights[i - 1] += 1;
        }
        if i + 1 == self.size() {
            out.to_boundary += 1;
        } else {
            self.heights[i + 1] += 1;
        }
    }

    /// Topples until stable. The stable state and the topple counts do not
    /// depend on the policy.
    pub fn stabilize(&mut self, policy: Policy) -> Stabilization {
        let mut out = Stabilization { topples: vec![0; self.size()], to_sink: 0, to_boundary: 0 };
        let len = self.size();
        match policy {
            Policy::Fifo => {
                let mut queued = vec![false; len];
                let mut queue: VecDeque<usize> = VecDeque::new();
                for i in 0..len {
                    if self.unstable_at(i) {
                        queued[i] = true;
                        queue.push_back(i);
                    }
                }
                while let Some(i) = queue.pop_front() {
                    queued[i] = false;
                    if !self.unstable_at(i) {
                        continue;
                    }
                    self.topple(i, &mut out);
                    for j in [i.wrapping_sub(1), i, i + 1] {
                        if j < len && !queued[j] && self.unstable_at(j) {
                            queued[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
            }
            Policy::LeftmostFirst => {
                let mut unstable: BTreeSet<usize> = (0..len).filter(|&i| self.unstable_at(i)).collect();
                while let Some(i) = unstable.pop_first() {
                    self.topple(i, &mut out);
                    for j in [i.wrapping_sub(1), i, i + 1] {
                        if j < len && self.unstable_at(j) {
                            unstable.insert(j);
                        }
                    }
                }
            }
            Policy::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut pos = vec![usize::MAX; len];
                let mut unstable: Vec<usize> = Vec::new();
                for i in 0..len {
                    if self.unstable_at(i) {
                        pos[i] = unstable.len();
                        unstable.push(i);
                    }
                }
                while !unstable.is_empty() {
                    let k = rng.random_range(0..unstable.len());
                    let i = unstable[k];
                    self.topple(i, &mut out);
                    for j in [i.wrapping_sub(1), i, i + 1] {
                        if j >= len {
                            continue;
                        }
                        match (self.unstable_at(j), pos[j] != usize::MAX) {
                            (true, false) => {
                                pos[j] = unstable.len();
                                unstable.push(j);
                            }
                            (false, true) => {
                                let at = pos[j];
                                unstable.swap_remove(at);
                                if at < unstable.len() {
                                    pos[unstable[at]] = at;
                                }
                                pos[j] = usize::MAX;
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
        out
    }

    /// Adds a grain at `site` and stabilizes.
    pub fn add_grain(&mut self, site: i64, policy: Policy) -> Result<AvalancheRecord> {
        if !self.contains(site) {
            return Err(Error::OutOfVolume(site));
        }
        let before = self.total();
        let i = self.index(site);
        self.heights[i] += 1;
        let st = self.stabilize(policy);
        let toppled: Vec<i64> = st
            .topples
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 0)
            .map(|(i, _)| i as i64 - self.n)
            .collect();
        let emissions = st
            .topples
            .iter()
            .enumerate()
            .map(|(i, &t)| t * self.deg_at(i))
            .collect();
        Ok(AvalancheRecord {
            origin: site,
            size: toppled.len(),
            toppled,
            topples: st.topples,
            emissions,
            lost_to_sink: st.to_sink,
            lost_to_boundary: st.to_boundary,
            total_before: before,
            total_after: self.total(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stabilization {
    /// per site of `[-n, n]`
    pub topples: Vec<u64>,
    pub to_sink: u64,
    pub to_boundary: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AvalancheRecord {
    pub origin: i64,
    /// sites that toppled at least once
    pub toppled: Vec<i64>,
    /// `Av`, the number of distinct toppled sites
    pub size: usize,
    /// per site of `[-n, n]`
    pub topples: Vec<u64>,
    /// grains emitted per site, `topples * deg`
    pub emissions: Vec<u64>,
    pub lost_to_sink: u64,
    pub lost_to_boundary: u64,
    pub total_before: u64,
    pub total_after: u64,
}

impl AvalancheRecord {
    /// grains added + initial total = final total + grains lost
    pub fn conserved(&self) -> bool {
        self.total_before + 1 == self.total_after + self.lost_to_sink + self.lost_to_boundary
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub steps: u64,
    pub seed: u64,
    /// `None` uses 10 times the number of sites.
    pub burnin: Option<u64>,
    pub batches: usize,
    pub policy: Policy,
}

impl ChainConfig {
    pub fn new(steps: u64, seed: u64) -> Self {
        ChainConfig { steps, seed, burnin: None, batches: 100, policy: Policy::Fifo }
    }
}

/// Means over the recorded additions, with batch-means standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainStats {
    pub radius: i64,
    pub traps: Vec<i64>,
    pub steps: u64,
    pub burnin: u64,
    pub seed: u64,
    pub batches: usize,
    /// additions per origin
    pub additions: Vec<u64>,
    /// mean `Av` per origin
    pub mean_size: Vec<f64>,
    /// `topples[x][y]`: mean topplings at `y` per addition at `x`
    pub topples: Vec<Vec<f64>>,
    pub topples_stderr: Vec<Vec<f64>>,
    /// `emissions[x][y]`: mean grains emitted by `y` per addition at `x`
    pub emissions: Vec<Vec<f64>>,
    pub conserved: bool,
}

impl ChainStats {
    pub fn site(&self, i: usize) -> i64 {
        i as i64 - self.radius
    }
}

/// Uniform-site additions from the maximal stable configuration.
pub fn run_chain(n: i64, traps: &[i64], cfg: &ChainConfig) -> Result<ChainStats> {
    if cfg.steps == 0 {
        return Err(Error::BadParams("steps must be >= 1".into()));
    }
    let mut state = SandpileState::max_stable(n, traps.iter().copied())?;
    let m = state.size();
    let burnin = cfg.burnin.unwrap_or(10 * m as u64);
    let batches = cfg.batches.clamp(1, cfg.steps as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..burnin {
        let x = rng.random_range(0..m) as i64 - n;
        state.add_grain(x, cfg.policy)?;
    }
    // per batch: additions per origin, topple sums per (origin, site)
    let mut batch_counts = vec![vec![0u64; m]; batches];
    let mut batch_sums = vec![vec![vec![0u64; m]; m]; batches];
    let mut size_sums = vec![0u64; m];
    let mut conserved = true;
    for step in 0..cfg.steps {
        let b = (step as u128 * batches as u128 / cfg.steps as u128) as usize;
        let xi = rng.random_range(0..m);
        let rec = state.add_grain(xi as i64 - n, cfg.policy)?;
        conserved &= rec.conserved();
        batch_counts[b][xi] += 1;
        size_sums[xi] += rec.size as u64;
        for (s, t) in batch_sums[b][xi].iter_mut().zip(&rec.topples) {
            *s += t;
        }
    }
    let additions: Vec<u64> = (0..m).map(|x| batch_counts.iter().map(|c| c[x]).sum()).collect();
    let mut topples = vec![vec![0.0; m]; m];
    let mut topples_stderr = vec![vec![0.0; m]; m];
    let mut emissions = vec![vec![0.0; m]; m];
    for x in 0..m {
        for y in 0..m {
            let total: u64 = batch_sums.iter().map(|bs| bs[x][y]).sum();
            let mean = total as f64 / additions[x].max(1) as f64;
            topples[x][y] = mean;
            emissions[x][y] = mean * state.degree(y as i64 - n) as f64;
            let means: Vec<f64> = (0..batches)
                .filter(|&b| batch_counts[b][x] > 0)
                .map(|b| batch_sums[b][x][y] as f64 / batch_counts[b][x] as f64)
                .collect();
            let k = means.len() as f64;
            if k >= 2.0 {
                let avg = means.iter().sum::<f64>() / k;
                let var = means.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / (k - 1.0);
                topples_stderr[x][y] = (var / k).sqrt();
            }
        }
    }
    let mean_size = (0..m).map(|x| size_sums[x] as f64 / additions[x].max(1) as f64).collect();
    Ok(ChainStats {
        radius: n,
        traps: traps.to_vec(),
        steps: cfg.steps,
        burnin,
        seed: cfg.seed,
        batches,
        additions,
        mean_size,
        topples,
        topples_stderr,
        emissions,
        conserved,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenEntry {
    pub x: i64,
    pub y: i64,
    pub exact: BigRational,
    pub empirical: f64,
    pub stderr: f64,
}

impl GreenEntry {
    pub fn z_score(&self) -> f64 {
        let d = (self.empirical - rat_to_f64(&self.exact)).abs();
        if self.stderr == 0.0 {
            if d == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            d / self.stderr
        }
    }
}

/// Exact `G_n(x, y)` for the volume `[-n, n]`: the walk on `[-n-1, n+1]`
/// with absorbing ends and trap probability 1/3.
pub fn exact_green(n: i64, traps: &[i64]) -> Result<Vec<Vec<BigRational>>> {
    let domain = WalkDomain::new(-n - 1, n + 1, traps.iter().copied())?;
    let mut g = vec![Vec::new(); (2 * n + 1) as usize];
    for y in -n..=n {
        let col = green_column(&domain, y)?;
        for x in -n..=n {
            g[(x + n) as usize].push(col.at(x).cloned().expect("interior"));
        }
    }
    Ok(g)
}

/// Mean topplings per addition against exact Green entries.
pub fn green_comparison(stats: &ChainStats) -> Result<Vec<GreenEntry>> {
    let g = exact_green(stats.radius, &stats.traps)?;
    let m = g.len();
    let mut out = Vec::with_capacity(m * m);
    for xi in 0..m {
        for yi in 0..m {
            out.push(GreenEntry {
                x: stats.site(xi),
                y: stats.site(yi),
                exact: g[xi][yi].clone(),
                empirical: stats.topples[xi][yi],
                stderr: stats.topples_stderr[xi][yi],
            });
        }
    }
    Ok(out)
}
