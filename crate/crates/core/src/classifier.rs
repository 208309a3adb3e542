//! Criticality verdicts for sequence families and finite prefixes, the
//! threshold constants `phi_{kappa,lambda}`, and the construction of critical
//! sequences below a prescribed growth bound.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{
    below_golden_square, decimal_sig, golden_square, int_rat, ln_big, ln_rat, rat,
    rat_to_f64, rational_string, DigitBudget,
};
use crate::recursion::{barycenter, lower_products, pq_from_prefix};
use crate::sequence::{SequenceFamily, TrapSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Critical,
    NonCritical,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Critical => "Critical",
            Status::NonCritical => "NonCritical",
            Status::Inconclusive => "Inconclusive",
        })
    }
}

/// Criticality rules.
///
/// * `R1`: `x_k = O(rho^k)` with `rho < (3+sqrt 5)/2` gives non-critical.
/// * `R2`: `limsup x_{k+1}/x_k^2 < 1` gives non-critical.
/// * `R3`: `liminf x_{k+1}/x_k^2 > 1` gives critical.
/// * `R4`: divergence of `sum x_n prod_{r<n} 1/(1+x_r)` gives critical.
/// * `R5`: eventual domination of every `a^(2^k)` gives critical.
/// * `Emp`: certificate from the exact prefix plus the family's closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
    R5,
    Emp,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::R1 => "R1",
            Rule::R2 => "R2",
            Rule::R3 => "R3",
            Rule::R4 => "R4",
            Rule::R5 => "R5",
            Rule::Emp => "EMP",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub status: Status,
    pub rule: Option<Rule>,
    /// Every rule whose hypothesis holds, in evaluation order.
    pub applicable: Vec<Rule>,
    pub evidence: BTreeMap<String, String>,
    pub caveats: Vec<String>,
}

impl Verdict {
    fn inconclusive(evidence: BTreeMap<String, String>, caveats: Vec<String>) -> Self {
        Verdict { status: Status::Inconclusive, rule: None, applicable: vec![], evidence, caveats }
    }
}

/// Limit of `x_{k+1} / x_k^2` along the family.
#[derive(Debug, Clone, PartialEq)]
pub enum RatioLimit {
    Finite(BigRational),
    Infinite,
}

impl RatioLimit {
    fn render(&self) -> String {
        match self {
            RatioLimit::Finite(v) => rational_string(v),
            RatioLimit::Infinite => "+inf".into(),
        }
    }

    fn cmp_one(&self) -> std::cmp::Ordering {
        match self {
            RatioLimit::Finite(v) => v.cmp(&BigRational::one()),
            RatioLimit::Infinite => std::cmp::Ordering::Greater,
        }
    }
}

/// `x_k = A_k (1 + eps_k)` with `A_k = a^(2^k)` and `sum |eps_k| < infinity`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleExpBase {
    /// `a^2`
    pub a_sq: BigRational,
    /// closed form of `eps`, for the evidence
    pub eps: String,
}

impl DoubleExpBase {
    /// `A_k = a^(2^k) = (a^2)^(2^(k-1))`.
    fn base_term(&self, k: usize, budget: &DigitBudget) -> Result<BigRational> {
        let e = 1usize
            .checked_shl(k as u32 - 1)
            .filter(|_| k < 63)
            .ok_or(Error::DigitBudgetExceeded { k, digits: u64::MAX, budget: budget.0 })?;
        budget.check_bits((e as u64).saturating_mul(crate::exact::rational_bits(&self.a_sq)), k)?;
        Ok(num_traits::pow(self.a_sq.clone(), e))
    }
}

/// Symbolic asymptotic descriptors of a family.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptors {
    /// `rho` with `x_k = O(rho^k)`, when the family grows at most geometrically.
    pub growth: Option<BigRational>,
    pub ratio_limit: RatioLimit,
    /// Eventually above every `a^(2^k)`.
    pub dominates_double_exp: bool,
    /// Present when the product identity decides the R4 series.
    pub double_exp_base: Option<DoubleExpBase>,
}

pub fn descriptors(family: &SequenceFamily) -> Result<Descriptors> {
    let one = BigRational::one();
    let two = rat(2, 1);
    let plain = |ratio_limit| Descriptors {
        growth: None,
        ratio_limit,
        dominates_double_exp: false,
        double_exp_base: None,
    };
    Ok(match family {
        SequenceFamily::Explicit(_) => {
            return Err(Error::UnsupportedFamily("explicit lists carry no asymptotic descriptor".into()))
        }
        SequenceFamily::Geometric { ratio, .. } => Descriptors {
            growth: Some(ratio.clone()),
            ..plain(RatioLimit::Finite(BigRational::zero()))
        },
        SequenceFamily::PowerTower { a, b } => {
            if *b < two {
                plain(RatioLimit::Finite(BigRational::zero()))
            } else if *b == two {
                Descriptors {
                    double_exp_base: Some(DoubleExpBase { a_sq: a * a, eps: "rounding only".into() }),
                    ..plain(RatioLimit::Finite(one))
                }
            } else {
                Descriptors { dominates_double_exp: true, ..plain(RatioLimit::Infinite) }
            }
        }
        SequenceFamily::DoubleExp { lambda, a } => {
            let base = (*lambda == one)
                .then(|| DoubleExpBase { a_sq: a * a, eps: "rounding only".into() });
            Descriptors { double_exp_base: base, ..plain(RatioLimit::Finite(lambda.recip())) }
        }
        SequenceFamily::SquaredGap { c, i0 } => {
            let m = c * i0;
            if m < one {
                return Err(Error::UnsupportedFamily(
                    "squared-gap with c*i0 < 1 has shrinking gaps and is not strictly increasing".into(),
                ));
            }
            if m == one {
                // constant gaps: x_k = k * i0
                Descriptors { growth: Some(two), ..plain(RatioLimit::Finite(BigRational::zero())) }
            } else {
                // x_k ~ |I_{k-1}| = (1/c) m^(2^(k-1)), so x_{k+1}/x_k^2 -> c
                let base = (*c == one).then(|| DoubleExpBase {
                    a_sq: i0.clone(),
                    eps: "sum_{j<k-1} |I_j| / |I_{k-1}|".into(),
                });
                Descriptors { double_exp_base: base, ..plain(RatioLimit::Finite(c.clone())) }
            }
        }
        SequenceFamily::Perturbed { a, eps } => {
            let total: BigRational = eps.iter().map(|e| e.abs()).sum();
            Descriptors {
                double_exp_base: Some(DoubleExpBase {
                    a_sq: a * a,
                    eps: format!("finitely supported, sum |eps_k| = {}", rational_string(&total)),
                }),
                ..plain(RatioLimit::Finite(one))
            }
        }
    })
}

fn dec(r: &BigRational) -> String {
    decimal_sig(r, 20)
}

/// Family-level verdict. Rules are tried in the order R1, R2, R3, R5, R4;
/// the first that fires decides and all applicable rules are listed.
pub fn classify_family(family: &SequenceFamily) -> Result<Verdict> {
    if family.is_explicit() {
        let mut ev = BTreeMap::new();
        ev.insert("family".into(), family.kind().into());
        return Ok(Verdict::inconclusive(
            ev,
            vec!["explicit finite data cannot decide asymptotics; use the empirical report".into()],
        ));
    }
    TrapSequence::new(family.clone())?;
    let d = descriptors(family)?;
    let mut ev = BTreeMap::new();
    ev.insert("family".into(), family.to_string());
    ev.insert("ratio_limit".into(), d.ratio_limit.render());
    let mut applicable = Vec::new();

    if let Some(rho) = &d.growth {
        ev.insert("growth_rho".into(), rational_string(rho));
        ev.insert("golden_square".into(), format!("{:.17}", golden_square()));
        if below_golden_square(rho) {
            applicable.push(Rule::R1);
            if let Some((kappa, lambda, phi)) = r1_witness(rat_to_f64(rho)) {
                ev.insert("r1_witness_kappa".into(), kappa.to_string());
                ev.insert("r1_witness_lambda".into(), format!("{lambda}"));
                ev.insert("r1_witness_phi".into(), format!("{phi:.17}"));
            }
        }
    }
    if d.ratio_limit.cmp_one().is_lt() {
        applicable.push(Rule::R2);
    }
    if d.ratio_limit.cmp_one().is_gt() {
        applicable.push(Rule::R3);
    }
    if d.dominates_double_exp {
        applicable.push(Rule::R5);
        if let SequenceFamily::PowerTower { b, .. } = family {
            ev.insert("exponent_ratio".into(), format!("(b/2)^k with b/2 = {}", rational_string(&(b / rat(2, 1)))));
        }
    }
    if let Some(base) = &d.double_exp_base {
        applicable.push(Rule::R4);
        let a_sq_m1 = &base.a_sq - BigRational::one();
        ev.insert("r4_term_limit".into(), rational_string(&a_sq_m1));
        ev.insert("r4_eps".into(), base.eps.clone());
    }
    let mut caveats = vec!["asymptotic rule applied to the family descriptor, not to a prefix".to_string()];
    let Some(&rule) = applicable.first() else {
        caveats.push("no rule applies to this family".into());
        return Ok(Verdict::inconclusive(ev, caveats));
    };
    let status = match rule {
        Rule::R1 | Rule::R2 => Status::NonCritical,
        _ => Status::Critical,
    };
    if rule == Rule::R1 && !ev.contains_key("r1_witness_kappa") {
        caveats.push("no floating-point witness (kappa, lambda) found; exact comparison only".into());
    }
    Ok(Verdict { status, rule: Some(rule), applicable, evidence: ev, caveats })
}

/// `(kappa, lambda, phi_{kappa,lambda})` with `phi > rho`.
fn r1_witness(rho: f64) -> Option<(u32, f64, f64)> {
    for j in 1..40 {
        let lambda = 1.0 - 0.5f64.powi(j);
        let kappa = 4 * j as u32;
        let phi = threshold_root(kappa, lambda).ok()?;
        if phi > rho * (1.0 + 1e-12) {
            return Some((kappa, lambda, phi));
        }
    }
    None
}

/// Data behind [`empirical_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalData {
    pub x: Vec<BigInt>,
    /// `a_1 .. a_n`
    pub a: Vec<BigRational>,
    /// partial sums of `(x_{k+1} - x_k) prod_{r<=k} 1/(1+x_r)`, k = 1..n-1
    pub lower_partial_sums: Vec<BigRational>,
    /// `x_n prod_{r<n} 1/(1+x_r)`, n = 1..len
    pub r4_terms: Vec<BigRational>,
    /// `x_{k+1} / (x_k (1 + x_k))`, k = 1..n-1
    pub lower_ratios: Vec<BigRational>,
    /// successive-term ratios of `sum x_{k+1} prod_{r<=k} 1/(1+x_r(1-x_r/x_{r+1}))`
    pub upper_ratios: Vec<BigRational>,
}

/// Exact prefix diagnostics plus a verdict that is only definite when the
/// family's closed form extends the computed pattern.
pub fn empirical_report(seq: &TrapSequence, n_budget: usize) -> Result<(Verdict, EmpiricalData)> {
    if n_budget == 0 {
        return Err(Error::BadParams("n_budget must be >= 1".into()));
    }
    let x = seq.prefix(n_budget)?;
    let table = pq_from_prefix(&x, seq.budget())?;
    let lower = lower_products(&x);
    let n = x.len();
    let one = BigRational::one();

    let mut lower_partial_sums = Vec::new();
    let mut acc = BigRational::zero();
    for k in 1..n {
        acc += int_rat(&(&x[k] - &x[k - 1])) * &lower[k];
        lower_partial_sums.push(acc.clone());
    }
    let r4_terms: Vec<BigRational> = (0..n).map(|i| int_rat(&x[i]) * &lower[i]).collect();
    let lower_ratios: Vec<BigRational> = x
        .windows(2)
        .map(|w| BigRational::new(w[1].clone(), &w[0] * (&w[0] + 1u32)))
        .collect();
    let mut upper_ratios = Vec::new();
    for k in 1..n.saturating_sub(1) {
        // t_k / t_{k-1} = (x_{k+1}/x_k) / (1 + x_k (1 - x_k/x_{k+1})), 0-based x
        let xk = int_rat(&x[k]);
        let shrink = &one + &xk * (&one - BigRational::new(x[k].clone(), x[k + 1].clone()));
        upper_ratios.push(BigRational::new(x[k + 1].clone(), x[k].clone()) / shrink);
    }
    let data = EmpiricalData {
        x: x.clone(),
        a: table.a.clone(),
        lower_partial_sums,
        r4_terms,
        lower_ratios,
        upper_ratios,
    };

    let mut ev = BTreeMap::new();
    ev.insert("n".into(), n.to_string());
    ev.insert("a_n".into(), rational_string(&table.a[n - 1]));
    ev.insert("a_n_decimal".into(), dec(&table.a[n - 1]));
    if let Some(s) = data.lower_partial_sums.last() {
        ev.insert("lower_partial_sum".into(), dec(s));
    }
    if let Some(r) = data.lower_ratios.last() {
        ev.insert("last_lower_ratio".into(), dec(r));
    }
    if let Some(r) = data.upper_ratios.last() {
        ev.insert("last_upper_ratio".into(), dec(r));
    }
    let mut caveats = Vec::new();
    if n < 2 {
        caveats.push("a single term carries no asymptotic information".into());
        return Ok((Verdict::inconclusive(ev, caveats), data));
    }
    if seq.family().is_explicit() {
        caveats.push("explicit finite data; trends are reported but no limit is claimed".into());
        return Ok((Verdict::inconclusive(ev, caveats), data));
    }
    let d = descriptors(seq.family())?;
    ev.insert("ratio_limit".into(), d.ratio_limit.render());
    caveats.push("computed prefix extended by the family's closed form".into());

    let definite = |status, ev, caveats| Verdict {
        status,
        rule: Some(Rule::Emp),
        applicable: vec![Rule::Emp],
        evidence: ev,
        caveats,
    };
    // the tail of the computed ratios must already sit on the side of 1
    // dictated by the symbolic limit
    let tail = |v: &[BigRational]| v[v.len() / 2..].to_vec();
    if d.ratio_limit.cmp_one().is_gt() && tail(&data.lower_ratios).iter().all(|r| *r > one) {
        return Ok((definite(Status::Critical, ev, caveats), data));
    }
    if d.ratio_limit.cmp_one().is_lt()
        && !data.upper_ratios.is_empty()
        && tail(&data.upper_ratios).iter().all(|r| *r < one)
    {
        return Ok((definite(Status::NonCritical, ev, caveats), data));
    }
    if let Some(base) = &d.double_exp_base {
        // x_n prod_{r<n} 1/(1+x_r) >= (a^2-1)(1+eps_n) / prod_{1<=r<n}(1+|eps_r|)
        let a_sq_m1 = &base.a_sq - &one;
        ev.insert("r4_term_limit".into(), rational_string(&a_sq_m1));
        let mut eps_prod = one.clone();
        let mut all_hold = true;
        let mut last_bound = None;
        for k in 1..=n {
            let ak = base.base_term(k, &seq.budget())?;
            let eps_k = int_rat(&x[k - 1]) / &ak - &one;
            if k >= 2 {
                let bound = &a_sq_m1 * (&one + &eps_k) / &eps_prod;
                all_hold &= data.r4_terms[k - 1] >= bound;
                last_bound = Some(bound);
            }
            eps_prod *= &one + eps_k.abs();
        }
        if let Some(b) = last_bound {
            ev.insert("r4_last_term".into(), dec(&data.r4_terms[n - 1]));
            ev.insert("r4_last_bound".into(), dec(&b));
        }
        if all_hold && a_sq_m1.is_positive() {
            return Ok((definite(Status::Critical, ev, caveats), data));
        }
    }
    caveats.push("prefix pattern does not certify a verdict".into());
    Ok((Verdict::inconclusive(ev, caveats), data))
}

/// Unique positive root of `X^(kappa+1) - X^kappa - lambda (X^kappa + ... + 1)`.
pub fn threshold_root(kappa: u32, lambda: f64) -> Result<f64> {
    if kappa == 0 {
        return Err(Error::BadParams("kappa must be >= 1".into()));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::BadParams("lambda must lie in (0, 1]".into()));
    }
    // X - 1 - lambda sum_{j<=kappa} X^(-j), increasing in X
    let f = |x: f64| {
        let inv = 1.0 / x;
        let mut s = 0.0;
        let mut p = 1.0;
        for _ in 0..=kappa {
            s += p;
            p *= inv;
        }
        x - 1.0 - lambda * s
    };
    let (mut lo, mut hi) = (1.0 + lambda, 4.0);
    while hi - lo > 1e-16 * lo {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `phi_lambda = (2 + lambda + sqrt(lambda^2 + 4 lambda)) / 2`, the limit of
/// `phi_{kappa,lambda}` as `kappa -> infinity`.
pub fn phi_limit(lambda: f64) -> f64 {
    (2.0 + lambda + (lambda * lambda + 4.0 * lambda).sqrt()) / 2.0
}

/// `alpha_0 = 1`, `alpha_{k+1} = sum_{j<=k} alpha_j + alpha_k`.
pub fn alpha_sequence(len: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(len);
    let mut partial = BigInt::zero();
    for k in 0..len {
        let next = if k == 0 { BigInt::one() } else { &partial + &out[k - 1] };
        partial += &next;
        out.push(next);
    }
    out
}

/// `Prod_{r<k} (1 + a^(2^r)) == (a^(2^k) - 1)/(a - 1)`, evaluated exactly.
pub fn product_identity_holds(a: &BigRational, k: u32) -> bool {
    let one = BigRational::one();
    let mut lhs = one.clone();
    let mut power = a.clone();
    for _ in 0..k {
        lhs *= &one + &power;
        power = &power * &power;
    }
    lhs == (power - &one) / (a - &one)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateEntry {
    /// index of the previous jump (1 before the first jump)
    pub a: usize,
    pub b: usize,
    /// `x_{b+1} = y_b`
    pub jump_value: BigInt,
    /// exact lower bound on `R_b x_{b+1}`
    pub v: BigRational,
    pub target: BigRational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub x: Vec<BigInt>,
    pub certificate: Vec<CertificateEntry>,
    pub caveats: Vec<String>,
}

impl Counterexample {
    pub fn sequence(&self) -> Result<TrapSequence> {
        TrapSequence::from_values(self.x.clone())
    }
}

/// Targets `t_i = i` for `i = 1..=jumps`.
pub fn default_targets(jumps: usize) -> Vec<BigRational> {
    (1..=jumps as i64).map(|i| rat(i, 1)).collect()
}

/// Builds `x` with unit steps and jumps `x_{b+1} = y_b`, choosing for each
/// target the smallest `b > a + 1` (with `a` the previous jump) such that
/// `v = L_{a+1} y_b / (alpha_{b-a-1} x_b) >= t_i`, where
/// `L_m = prod_{r<=m} 1/(1+x_r)`. Every jump certifies `R_b x_{b+1} >= v`.
pub fn construct_counterexample(
    bound: &TrapSequence,
    targets: &[BigRational],
    horizon: usize,
) -> Result<Counterexample> {
    let budget = bound.budget();
    let y = |k: usize| bound.term(k);
    if y(1)? < BigInt::one() || y(2)? < BigInt::from(2) {
        return Err(Error::BadParams("bound needs y_1 >= 1 and y_2 >= 2".into()));
    }
    let horizon = match bound.len() {
        Some(len) => horizon.min(len.saturating_sub(1)),
        None => horizon,
    };
    let mut x: Vec<BigInt> = vec![BigInt::one(), BigInt::from(2)];
    let mut certificate = Vec::new();
    let mut caveats = vec![
        "growth hypothesis k*((3+sqrt5)/2)^k = o(y_k) is only checked numerically on the range".to_string(),
    ];
    let golden_ln = golden_square().ln();
    let mut hypothesis_ok = true;

    let mut a = 1usize;
    for t in targets {
        if !t.is_positive() {
            return Err(Error::BadParams("targets must be positive".into()));
        }
        let l_exact = lower_products(&x[..a + 1]).pop().expect("nonempty");
        budget.check_bits(crate::exact::rational_bits(&l_exact), a + 1)?;
        let ln_l = ln_rat(&l_exact);
        let ln_t = ln_rat(t);
        let x_a1 = x[a].clone();
        let mut alpha = AlphaWalk::new();
        let mut found = None;
        for b in a + 2..=horizon {
            let m = b - a - 1;
            alpha.advance_to(m);
            // unit steps from x_{a+1}: x_b = x_{a+1} + (b - a - 1)
            let x_b = &x_a1 + m;
            let ln_y = bound.family().ln_term(b);
            let ln_v = ln_l + ln_y - alpha.ln() - ln_big(&x_b);
            if ln_v < ln_t - 1e-6 * (1.0 + ln_v.abs()) {
                continue;
            }
            let y_b = y(b)?;
            if y_b <= x_b {
                continue;
            }
            let v = &l_exact * int_rat(&y_b) / int_rat(&(alpha.value() * &x_b));
            if v >= *t {
                found = Some((b, y_b, v));
                break;
            }
        }
        let Some((b, y_b, v)) = found else {
            return Err(Error::TargetUnreachable { horizon, target: rational_string(t) });
        };
        while x.len() < b {
            let next = x.last().expect("nonempty") + 1u32;
            x.push(next);
        }
        x.push(y_b.clone());
        certificate.push(CertificateEntry { a, b, jump_value: y_b, v, target: t.clone() });
        let kb = b as f64;
        if kb.ln() + kb * golden_ln > bound.family().ln_term(b) {
            hypothesis_ok = false;
        }
        a = b;
    }
    if !hypothesis_ok {
        caveats.push("k*((3+sqrt5)/2)^k exceeds y_k at some jump index".into());
    }
    Ok(Counterexample { x, certificate, caveats })
}

/// Rolling `alpha_m` with its partial sum; `ln` is tracked in floating point.
struct AlphaWalk {
    m: usize,
    value: BigInt,
    partial: BigInt,
}

impl AlphaWalk {
    fn new() -> Self {
        AlphaWalk { m: 0, value: BigInt::one(), partial: BigInt::one() }
    }

    fn advance_to(&mut self, m: usize) {
        while self.m < m {
            self.value = &self.partial + &self.value;
            self.partial += &self.value;
            self.m += 1;
        }
    }

    fn value(&self) -> &BigInt {
        &self.value
    }

    fn ln(&self) -> f64 {
        ln_big(&self.value)
    }
}

/// Checks a construction against the exact weights: `x_k <= y_k` for every
/// produced `k`, and `u_n >= v_i` at `n = b_i + 1`.
pub fn verify_counterexample(bound: &TrapSequence, ce: &Counterexample) -> Result<Vec<(usize, BigRational)>> {
    for (k, xk) in ce.x.iter().enumerate() {
        // exact comparison only where the logarithms are close
        let (lx, ly) = (ln_big(xk), bound.family().ln_term(k + 1));
        if lx < ly - 1e-6 * (1.0 + ly.abs()) {
            continue;
        }
        let yk = bound.term(k + 1)?;
        if *xk > yk {
            return Err(Error::BadParams(format!("x_{} exceeds y_{}", k + 1, k + 1)));
        }
    }
    let mut out = Vec::new();
    for entry in &ce.certificate {
        let n = entry.b + 1;
        let u = barycenter(&ce.x[..n], bound.budget())?;
        out.push((n, u));
    }
    Ok(out)
}

/// Approximate digits of the certificate value, for table output.
pub fn certificate_decimal(v: &BigRational) -> String {
    decimal_sig(v, 20)
}
