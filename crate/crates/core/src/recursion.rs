//! Exact integer recursions `p_n`, `q_n` and the barycentric weight machinery.
//!
//! For traps `x_1 < ... < x_n`:
//!
//! ```text
//! p_1 = x_1,    p_k = x_k   + sum_{i<k} (x_k - x_i) p_i
//! q_1 = x_1^2,  q_k = x_k^2 + sum_{i<k} (x_k - x_i) (q_i + 1)
//! ```
//!
//! and `a_k = q_k / p_k` is the truncated boundary slope; the walk has an
//! infinite expected lifetime iff `a_k -> infinity`. The weights
//! `W_k = sum_{j>k} W_j (x_j - x_k)`, `W_n = 1` express the same quantities as
//! `p_n = sum W_k x_k` and `q_n = -1 + sum W_k (x_k^2 + 1)`.
//!
//! Both sums are evaluated with running totals (`x_k * sum p_i - sum x_i p_i`),
//! which is the same arithmetic reordered, so each table costs O(n) big-integer
//! operations rather than O(n^2).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{int_rat, DigitBudget};
use crate::sequence::TrapSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionTable {
    pub n: usize,
    pub x: Vec<BigInt>,
    pub p: Vec<BigInt>,
    pub q: Vec<BigInt>,
    /// `a_k = q_k / p_k`, lowest terms.
    pub a: Vec<BigRational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    pub n: usize,
    pub x: Vec<BigInt>,
    /// `W_1^(n) .. W_n^(n)`
    pub w: Vec<BigInt>,
    pub p_n: BigInt,
    /// `mu_k = x_k W_k / p_n`
    pub mu: Vec<BigRational>,
    /// `R_0 .. R_n`, `R_k = sum_{j>k} mu_j`
    pub r: Vec<BigRational>,
    pub eps: BigRational,
    pub u: BigRational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTerms {
    /// `R_k (x_{k+1} - x_k)` for k = 1..n-1
    pub terms: Vec<BigRational>,
    pub partial_sums: Vec<BigRational>,
}

fn check_prefix(x: &[BigInt]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::PrefixTooShort { requested: 1, available: 0 });
    }
    if x[0] < BigInt::one() {
        return Err(Error::NonMonotonic { k: 1 });
    }
    if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotonic { k: i + 2 });
    }
    Ok(())
}

pub fn compute_pq(seq: &TrapSequence, n: usize) -> Result<RecursionTable> {
    let x = seq.prefix(n)?;
    pq_from_prefix(&x, seq.budget())
}

/// [`compute_pq`] on an already materialized prefix.
pub fn pq_from_prefix(x: &[BigInt], budget: DigitBudget) -> Result<RecursionTable> {
    check_prefix(x)?;
    let n = x.len();
    let (mut p, mut q) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let (mut sp, mut sxp) = (BigInt::zero(), BigInt::zero());
    let (mut sq, mut sxq) = (BigInt::zero(), BigInt::zero());
    for (k, xk) in x.iter().enumerate() {
        let est = (2 * xk.bits()).max(xk.bits() + sq.bits()) + 2;
        budget.check_bits(est, k + 1)?;
        let pk = xk + xk * &sp - &sxp;
        let qk = xk * xk + xk * &sq - &sxq;
        sp += &pk;
        sxp += xk * &pk;
        let q1 = &qk + 1u32;
        sxq += xk * &q1;
        sq += q1;
        p.push(pk);
        q.push(qk);
    }
    let a = p
        .iter()
        .zip(&q)
        .map(|(pk, qk)| BigRational::new(qk.clone(), pk.clone()))
        .collect();
    Ok(RecursionTable { n, x: x.to_vec(), p, q, a })
}

/// Backward weights `W_k^(n)`, with `W_n = 1`.
fn weights(x: &[BigInt], budget: DigitBudget) -> Result<Vec<BigInt>> {
    let n = x.len();
    let mut w = vec![BigInt::zero(); n];
    w[n - 1] = BigInt::one();
    let (mut sw, mut swx) = (BigInt::one(), x[n - 1].clone());
    for k in (0..n - 1).rev() {
        budget.check_bits(swx.bits() + 1, k + 1)?;
        let wk = &swx - &x[k] * &sw;
        sw += &wk;
        swx += &wk * &x[k];
        w[k] = wk;
    }
    Ok(w)
}

pub fn compute_weights(seq: &TrapSequence, n: usize) -> Result<WeightTable> {
    let x = seq.prefix(n)?;
    weights_from_prefix(&x, seq.budget())
}

pub fn weights_from_prefix(x: &[BigInt], budget: DigitBudget) -> Result<WeightTable> {
    check_prefix(x)?;
    let n = x.len();
    let w = weights(x, budget)?;
    let p_n: BigInt = w.iter().zip(x).map(|(wk, xk)| wk * xk).sum();
    let mu: Vec<BigRational> = w
        .iter()
        .zip(x)
        .map(|(wk, xk)| BigRational::new(wk * xk, p_n.clone()))
        .collect();
    let mut r = vec![BigRational::zero(); n + 1];
    for k in (0..n).rev() {
        r[k] = &r[k + 1] + &mu[k];
    }
    let w_sum: BigInt = w.iter().sum();
    let eps = BigRational::new(w_sum - 1u32, p_n.clone());
    let u_num: BigInt = w.iter().zip(x).map(|(wk, xk)| wk * xk * xk).sum();
    let u = BigRational::new(u_num, p_n.clone());
    Ok(WeightTable { n, x: x.to_vec(), w, p_n, mu, r, eps, u })
}

/// `u_n = sum mu_k x_k` without materializing the `mu`, `R` tables; suitable
/// for long prefixes where only the barycenter is needed.
pub fn barycenter(x: &[BigInt], budget: DigitBudget) -> Result<BigRational> {
    check_prefix(x)?;
    let n = x.len();
    // single backward pass: W_k from the running sums of W_j and W_j x_j
    let (mut sw, mut swx) = (BigInt::one(), x[n - 1].clone());
    let mut num = &x[n - 1] * &x[n - 1];
    for k in (0..n - 1).rev() {
        budget.check_bits(swx.bits() + 1, k + 1)?;
        let wk = &swx - &x[k] * &sw;
        let t = &wk * &x[k];
        num += &t * &x[k];
        sw += &wk;
        swx += t;
    }
    // the denominator sum W_k x_k equals swx
    Ok(BigRational::new(num, swx))
}

pub fn series_terms(seq: &TrapSequence, n: usize) -> Result<SeriesTerms> {
    let table = compute_weights(seq, n)?;
    Ok(series_from_weights(&table))
}

pub fn series_from_weights(table: &WeightTable) -> SeriesTerms {
    let x = &table.x;
    let terms: Vec<BigRational> = (1..table.n)
        .map(|k| &table.r[k] * int_rat(&(&x[k] - &x[k - 1])))
        .collect();
    let mut acc = BigRational::zero();
    let partial_sums = terms
        .iter()
        .map(|t| {
            acc += t;
            acc.clone()
        })
        .collect();
    SeriesTerms { terms, partial_sums }
}

/// n-independent bounds on `R_k`:
/// `prod_{r<=k} 1/(1+x_r) <= R_k <= prod_{r<=k} 1/(1 + x_r (1 - x_r/x_{r+1}))`.
pub fn r_bounds(seq: &TrapSequence, k: usize) -> Result<(BigRational, BigRational)> {
    let x = seq.prefix(k + 1)?;
    Ok(r_bounds_from_prefix(&x, k))
}

pub fn r_bounds_from_prefix(x: &[BigInt], k: usize) -> (BigRational, BigRational) {
    assert!(x.len() > k, "need x_1..x_(k+1)");
    let one = BigRational::one();
    let mut lower = one.clone();
    let mut upper = one.clone();
    for r in 0..k {
        let xr = int_rat(&x[r]);
        lower /= &one + &xr;
        let drop = &one - BigRational::new(x[r].clone(), x[r + 1].clone());
        upper /= &one + &xr * drop;
    }
    (lower, upper)
}

/// Cumulative lower products `L_m = prod_{r<=m} 1/(1+x_r)` for m = 0..len.
pub fn lower_products(x: &[BigInt]) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(x.len() + 1);
    let mut acc = BigRational::one();
    out.push(acc.clone());
    for xr in x {
        acc /= BigRational::from_integer(xr + 1u32);
        out.push(acc.clone());
    }
    out
}
