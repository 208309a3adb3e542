//! Exact expected stopping times on finite volumes.
//!
//! Two independent routes:
//!
//! * [`solve_halfline`] uses the closed form `A = q_N / p_N`,
//!   `E_k = p_k A - q_k` and the piecewise quadratic
//!   `E(x) = -x^2 + A_k x + B_k` on `[x_k, x_{k+1}]`, with `x_0 = 0` and
//!   `x_N` absorbing (so `T_N` is the hitting time of `{x_0, x_N, s}`).
//! * [`solve_direct`] eliminates the tridiagonal first-step system over exact
//!   rationals for an arbitrary [`WalkDomain`] and trap probability.
//!
//! The same elimination also yields Green-function row sums and columns and
//! boundary hitting probabilities.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{int_rat, rat};
use crate::recursion::pq_from_prefix;
use crate::sequence::TrapSequence;

/// Default cap on interior sites for exact direct solves.
pub const DEFAULT_MAX_SITES: u64 = 1_000_000;

/// Walk on `left..=right` with both ends absorbing and a set of interior traps.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkDomain {
    left: i64,
    right: i64,
    traps: BTreeSet<i64>,
    trap_prob: BigRational,
    max_sites: u64,
}

impl WalkDomain {
    pub fn new(left: i64, right: i64, traps: impl IntoIterator<Item = i64>) -> Result<Self> {
        if right <= left {
            return Err(Error::BadParams(format!("empty domain [{left}, {right}]")));
        }
        let traps: BTreeSet<i64> = traps.into_iter().collect();
        if let Some(t) = traps.iter().find(|&&t| t <= left || t >= right) {
            return Err(Error::BadParams(format!("trap {t} is not strictly inside [{left}, {right}]")));
        }
        Ok(WalkDomain { left, right, traps, trap_prob: rat(1, 3), max_sites: DEFAULT_MAX_SITES })
    }

    /// Half-line truncation `[0, x_N]` with traps `x_1 .. x_{N-1}`.
    pub fn halfline(x: &[i64]) -> Result<Self> {
        let (last, inner) = x.split_last().ok_or(Error::EmptyInterior)?;
        WalkDomain::new(0, *last, inner.iter().copied())
    }

    pub fn with_trap_prob(mut self, p: BigRational) -> Result<Self> {
        if !p.is_positive() || p >= BigRational::one() {
            return Err(Error::BadParams("trap probability must lie in (0, 1)".into()));
        }
        self.trap_prob = p;
        Ok(self)
    }

    pub fn with_max_sites(mut self, max_sites: u64) -> Self {
        self.max_sites = max_sites;
        self
    }

    pub fn left(&self) -> i64 {
        self.left
    }

    pub fn right(&self) -> i64 {
        self.right
    }

    pub fn traps(&self) -> &BTreeSet<i64> {
        &self.traps
    }

    pub fn trap_prob(&self) -> &BigRational {
        &self.trap_prob
    }

    pub fn is_trap(&self, x: i64) -> bool {
        self.traps.contains(&x)
    }

    pub fn is_interior(&self, x: i64) -> bool {
        x > self.left && x < self.right
    }

    pub fn interior_len(&self) -> u64 {
        (self.right - self.left - 1) as u64
    }

    /// Graph degree in the sandpile picture: 2, plus the sink edge at traps.
    pub fn degree(&self, x: i64) -> u32 {
        2 + self.is_trap(x) as u32
    }

    /// Row scaling `d_x` such that `d_x E(x) - E(x-1) - E(x+1)` is the
    /// first-step operator: 2 off traps, `2/(1-p)` on traps.
    fn diag(&self, x: i64) -> BigRational {
        if self.is_trap(x) {
            rat(2, 1) / (BigRational::one() - &self.trap_prob)
        } else {
            rat(2, 1)
        }
    }

    fn check_size(&self) -> Result<()> {
        let m = self.interior_len();
        if m == 0 {
            return Err(Error::EmptyInterior);
        }
        if m > self.max_sites {
            return Err(Error::DomainTooLarge { sites: m, limit: self.max_sites });
        }
        Ok(())
    }
}

/// Values at every site of `left..=right`, boundaries included.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteValues {
    pub left: i64,
    pub values: Vec<BigRational>,
}

impl SiteValues {
    pub fn at(&self, x: i64) -> Option<&BigRational> {
        if x < self.left {
            return None;
        }
        self.values.get((x - self.left) as usize)
    }

    pub fn right(&self) -> i64 {
        self.left + self.values.len() as i64 - 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &BigRational)> {
        self.values.iter().enumerate().map(move |(i, v)| (self.left + i as i64, v))
    }
}

/// Solves `d_x v(x) - v(x-1) - v(x+1) = d_x g(x)` on the interior with the
/// given boundary values, i.e. `(I - P) v = g`.
fn solve_chain(
    domain: &WalkDomain,
    g: impl Fn(i64) -> BigRational,
    left_val: BigRational,
    right_val: BigRational,
) -> Result<SiteValues> {
    domain.check_size()?;
    let m = domain.interior_len() as usize;
    let site = |i: usize| domain.left + 1 + i as i64;
    // forward sweep: v_i = s_i + h_i v_{i+1}
    let mut h: Vec<BigRational> = Vec::with_capacity(m);
    let mut s: Vec<BigRational> = Vec::with_capacity(m);
    for i in 0..m {
        let x = site(i);
        let d = domain.diag(x);
        let mut rhs = &d * g(x);
        if i == 0 {
            rhs += &left_val;
        }
        if i == m - 1 {
            rhs += &right_val;
        }
        let (pivot, carry) = match (h.last(), s.last()) {
            (Some(hp), Some(sp)) => (&d - hp, rhs + sp),
            _ => (d, rhs),
        };
        let hi = pivot.recip();
        s.push(carry * &hi);
        h.push(if i + 1 < m { hi } else { BigRational::zero() });
    }
    let mut values = vec![BigRational::zero(); m + 2];
    values[0] = left_val;
    values[m + 1] = right_val;
    for i in (0..m).rev() {
        let next = &values[i + 2];
        values[i + 1] = &s[i] + &h[i] * next;
    }
    Ok(SiteValues { left: domain.left, values })
}

/// Expected absorption time `E(x)` at every site (0 on the boundary).
pub fn solve_direct(domain: &WalkDomain) -> Result<SiteValues> {
    solve_chain(domain, |_| BigRational::one(), BigRational::zero(), BigRational::zero())
}

/// `v(x) = sum_y Q(x, y) / deg(y)` at every site, with `Q` the expected
/// visit counts. For trap probability 1/3 this is `sum_y G_n(x, y)`.
pub fn green_row_sums(domain: &WalkDomain) -> Result<SiteValues> {
    solve_chain(
        domain,
        |y| rat(1, domain.degree(y) as i64),
        BigRational::zero(),
        BigRational::zero(),
    )
}

pub fn green_row_sum(domain: &WalkDomain, x: i64) -> Result<BigRational> {
    if !domain.is_interior(x) {
        return Err(Error::OutOfDomain(x.to_string()));
    }
    Ok(green_row_sums(domain)?.at(x).cloned().expect("interior site"))
}

/// Column `x -> Q(x, y) / deg(y)`; equals `G_n(x, y)` for trap probability 1/3.
pub fn green_column(domain: &WalkDomain, y: i64) -> Result<SiteValues> {
    if !domain.is_interior(y) {
        return Err(Error::OutOfDomain(y.to_string()));
    }
    let deg = domain.degree(y) as i64;
    solve_chain(
        domain,
        |x| if x == y { rat(1, deg) } else { BigRational::zero() },
        BigRational::zero(),
        BigRational::zero(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Probability of leaving through the given boundary (before the sink).
pub fn hit_probability(domain: &WalkDomain, side: Side) -> Result<SiteValues> {
    let (l, r) = match side {
        Side::Left => (BigRational::one(), BigRational::zero()),
        Side::Right => (BigRational::zero(), BigRational::one()),
    };
    solve_chain(domain, |_| BigRational::zero(), l, r)
}

/// Piecewise-quadratic coefficients on `[x_k, x_{k+1}]`:
/// `E(x) = -x^2 + a x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub a: BigRational,
    pub b: BigRational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub n: usize,
    /// `x_1 .. x_N`
    pub x: Vec<BigInt>,
    /// `A = A^(N) = q_N / p_N`
    pub a: BigRational,
    /// `E_1 .. E_N`, with `E_N = 0`.
    pub e_at_traps: Vec<BigRational>,
    /// pieces on `[x_0, x_1], ..., [x_{N-1}, x_N]`
    pub pieces: Vec<Piece>,
}

pub fn solve_halfline(seq: &TrapSequence, n: usize) -> Result<SolveResult> {
    let x = seq.prefix(n)?;
    let table = pq_from_prefix(&x, seq.budget())?;
    let a = table.a[n - 1].clone();
    let e_at_traps: Vec<BigRational> = table
        .p
        .iter()
        .zip(&table.q)
        .map(|(p, q)| &a * int_rat(p) - int_rat(q))
        .collect();
    let mut pieces = Vec::with_capacity(n);
    let (mut ak, mut bk) = (a.clone(), BigRational::zero());
    pieces.push(Piece { a: ak.clone(), b: bk.clone() });
    for k in 0..n - 1 {
        let jump = &e_at_traps[k] - BigRational::one();
        bk -= int_rat(&x[k]) * &jump;
        ak += jump;
        pieces.push(Piece { a: ak.clone(), b: bk.clone() });
    }
    Ok(SolveResult { n, x, a, e_at_traps, pieces })
}

impl SolveResult {
    /// `E(x)` for `0 <= x <= x_N`.
    pub fn profile_at(&self, x: &BigInt) -> Result<BigRational> {
        let last = self.x.last().expect("N >= 1");
        if x.is_negative() || x > last {
            return Err(Error::OutOfDomain(x.to_string()));
        }
        // piece k covers [x_k, x_{k+1}] with x_0 = 0
        let k = self.x.partition_point(|xk| xk < x);
        let piece = &self.pieces[k.min(self.n - 1)];
        let xr = int_rat(x);
        Ok(-(&xr * &xr) + &piece.a * &xr + &piece.b)
    }

    /// Profile at every integer site of `[0, x_N]`.
    pub fn profile(&self) -> Result<SiteValues> {
        let last: i64 = self
            .x
            .last()
            .and_then(|v| i64::try_from(v).ok())
            .ok_or_else(|| Error::OutOfDomain("x_N exceeds i64".into()))?;
        let values = (0..=last)
            .map(|s| self.profile_at(&BigInt::from(s)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SiteValues { left: 0, values })
    }
}

/// Expected absorption time from the origin assembled from excursions.
///
/// `p0` is the sink probability at the origin, `e_plus`/`e_minus` the
/// expected durations `E_{+-1}[tau]` measured from `+-1` until the walk hits
/// `{0, s}`, and `pplus`/`pminus` the probabilities that such an excursion
/// ends in the sink rather than back at 0. Each excursion lasts one step
/// from the origin plus `tau`, so
///
/// ```text
/// E_0[T] = (1 + (1-p0)/2 (e_plus + e_minus)) / q,
/// q      = p0 + (1-p0)/2 (pplus + pminus).
/// ```
pub fn excursion_combine(
    p0: &BigRational,
    e_plus: &BigRational,
    e_minus: &BigRational,
    pplus: &BigRational,
    pminus: &BigRational,
) -> Result<BigRational> {
    let one = BigRational::one();
    let unit = |v: &BigRational| !v.is_negative() && *v <= one;
    if p0.is_negative() || *p0 >= one || !unit(pplus) || !unit(pminus) {
        return Err(Error::BadParams("probabilities out of range".into()));
    }
    let half_out = (&one - p0) / rat(2, 1);
    let q = p0 + &half_out * (pplus + pminus);
    if q.is_zero() {
        return Err(Error::ZeroAbsorption);
    }
    Ok((one + half_out * (e_plus + e_minus)) / q)
}

/// f64 version of [`excursion_combine`] with the delta-method standard error
/// for independent estimates of the two sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideEstimate {
    pub duration: f64,
    pub sink_prob: f64,
    pub var_duration: f64,
    pub var_sink: f64,
    pub cov: f64,
}

pub fn excursion_combine_f64(p0: f64, plus: &SideEstimate, minus: &SideEstimate) -> Result<(f64, f64)> {
    let h = (1.0 - p0) / 2.0;
    let q = p0 + h * (plus.sink_prob + minus.sink_prob);
    if q <= 0.0 {
        return Err(Error::ZeroAbsorption);
    }
    let value = (1.0 + h * (plus.duration + minus.duration)) / q;
    let de = h / q;
    let dp = -value * h / q;
    let var = |s: &SideEstimate| de * de * s.var_duration + dp * dp * s.var_sink + 2.0 * de * dp * s.cov;
    Ok((value, (var(plus) + var(minus)).max(0.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamblers_ruin_quadratic() {
        let d = WalkDomain::new(0, 4, []).unwrap();
        let e = solve_direct(&d).unwrap();
        let want: Vec<BigRational> = [0, 3, 4, 3, 0].iter().map(|&v| rat(v, 1)).collect();
        assert_eq!(e.values, want);
    }

    #[test]
    fn single_trap_between_boundaries() {
        for p in [rat(1, 3), rat(1, 2), rat(9, 10)] {
            let d = WalkDomain::new(0, 2, [1]).unwrap().with_trap_prob(p).unwrap();
            assert_eq!(solve_direct(&d).unwrap().at(1), Some(&rat(1, 1)));
        }
    }

    #[test]
    fn empty_interior() {
        let d = WalkDomain::new(0, 1, []).unwrap();
        assert_eq!(solve_direct(&d), Err(Error::EmptyInterior));
        assert!(WalkDomain::new(0, 4, [4]).is_err());
        assert!(WalkDomain::new(0, 4, [2]).unwrap().with_trap_prob(rat(1, 1)).is_err());
    }

    #[test]
    fn size_guard() {
        let d = WalkDomain::new(0, 100, []).unwrap().with_max_sites(50);
        assert!(matches!(solve_direct(&d), Err(Error::DomainTooLarge { .. })));
    }

    #[test]
    fn halfline_examples() {
        let s = TrapSequence::explicit([1, 2]).unwrap();
        let r = solve_halfline(&s, 2).unwrap();
        assert_eq!(r.a, rat(2, 1));
        assert_eq!(r.e_at_traps, vec![rat(1, 1), rat(0, 1)]);
        assert_eq!(r.profile_at(&BigInt::from(1)).unwrap(), rat(1, 1));
        assert_eq!(r.profile_at(&BigInt::from(0)).unwrap(), rat(0, 1));
        assert!(r.profile_at(&BigInt::from(3)).is_err());

        let s = TrapSequence::explicit([1, 2, 3]).unwrap();
        let r = solve_halfline(&s, 3).unwrap();
        assert_eq!(r.a, rat(5, 2));
        assert_eq!(r.e_at_traps, vec![rat(3, 2), rat(3, 2), rat(0, 1)]);

        let s = TrapSequence::explicit([5, 9]).unwrap();
        let r = solve_halfline(&s, 1).unwrap();
        assert_eq!(r.a, rat(5, 1));
        assert_eq!(r.e_at_traps, vec![rat(0, 1)]);
    }

    #[test]
    fn halfline_profile_matches_direct() {
        let s = TrapSequence::explicit([2, 6]).unwrap();
        let r = solve_halfline(&s, 2).unwrap();
        let d = solve_direct(&WalkDomain::halfline(&[2, 6]).unwrap()).unwrap();
        assert_eq!(r.profile().unwrap(), d);
        assert_eq!(r.profile_at(&BigInt::from(1)).unwrap(), r.a.clone() - rat(1, 1));
    }

    #[test]
    fn green_examples() {
        let d = WalkDomain::new(0, 2, [1]).unwrap();
        assert_eq!(green_row_sum(&d, 1).unwrap(), rat(1, 3));
        let d = WalkDomain::new(0, 4, []).unwrap();
        assert_eq!(green_row_sum(&d, 2).unwrap(), rat(2, 1));
        assert!(green_row_sum(&d, 0).is_err());
    }

    #[test]
    fn green_columns_sum_to_row_sums() {
        let d = WalkDomain::new(-3, 4, [-1, 1, 2]).unwrap();
        let rows = green_row_sums(&d).unwrap();
        let mut total = vec![BigRational::zero(); rows.values.len()];
        for y in -2..=3 {
            let col = green_column(&d, y).unwrap();
            for (t, v) in total.iter_mut().zip(&col.values) {
                *t += v;
            }
        }
        assert_eq!(total, rows.values);
    }

    #[test]
    fn hitting_probabilities_complement_sink() {
        let d = WalkDomain::new(0, 6, [2, 3]).unwrap();
        let l = hit_probability(&d, Side::Left).unwrap();
        let r = hit_probability(&d, Side::Right).unwrap();
        // without traps the two would sum to one
        assert!(&l.values[1] + &r.values[1] < rat(1, 1));
        let plain = WalkDomain::new(0, 6, []).unwrap();
        let l = hit_probability(&plain, Side::Left).unwrap();
        assert_eq!(l.at(2), Some(&rat(2, 3)));
    }

    #[test]
    fn excursion_formula_examples() {
        // every excursion: one step out, one step to the sink
        let one = rat(1, 1);
        let v = excursion_combine(&rat(1, 3), &one, &one, &one, &one).unwrap();
        assert_eq!(v, rat(5, 3));
        // no sink at 0, symmetric sides
        let (e, p) = (rat(7, 2), rat(1, 4));
        assert_eq!(excursion_combine(&rat(0, 1), &e, &e, &p, &p).unwrap(), (one.clone() + &e) / &p);
        let z = rat(0, 1);
        assert_eq!(excursion_combine(&z, &one, &one, &z, &z), Err(Error::ZeroAbsorption));
    }

    #[test]
    fn excursion_formula_on_finite_volume() {
        // full line [-R, R] vs the two half-lines [0, R] and [-R, 0]
        let traps = [-5, -2, 0, 3, 4, 7];
        let r = 9;
        let full = WalkDomain::new(-r, r, traps).unwrap();
        let e0 = solve_direct(&full).unwrap().at(0).cloned().unwrap();
        let plus = WalkDomain::new(0, r, traps.iter().copied().filter(|&t| t > 0)).unwrap();
        let minus = WalkDomain::new(-r, 0, traps.iter().copied().filter(|&t| t < 0)).unwrap();
        let e_plus = solve_direct(&plus).unwrap().at(1).cloned().unwrap();
        let e_minus = solve_direct(&minus).unwrap().at(-1).cloned().unwrap();
        // probability of not returning to 0
        let one = rat(1, 1);
        let p_plus = &one - hit_probability(&plus, Side::Left).unwrap().at(1).unwrap();
        let p_minus = &one - hit_probability(&minus, Side::Right).unwrap().at(-1).unwrap();
        let combined = excursion_combine(&rat(1, 3), &e_plus, &e_minus, &p_plus, &p_minus).unwrap();
        assert_eq!(combined, e0);
    }
}
