//! Trap-position sequences `x_1 < x_2 < ...` on the positive half-line.
//!
//! A sequence is either an explicit finite list or one of the closed-form
//! families below. Family terms are exact rationals rounded half-up to
//! integers; a prefix is only handed out after positivity and strict
//! monotonicity have been re-checked on the rounded values.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exact::{
    int_rat, ln_big, ln_rat, parse_rational, rat, rational_bits, rational_string,
    round_half_up, DigitBudget,
};

/// Closed-form or explicit description of a trap sequence (1-indexed).
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceFamily {
    Explicit(Vec<BigInt>),
    /// `round(scale * ratio^k)`
    Geometric { ratio: BigRational, scale: BigRational },
    /// `round(a^(b^k))`
    PowerTower { a: BigRational, b: BigRational },
    /// `round(lambda * a^(2^k))`
    DoubleExp { lambda: BigRational, a: BigRational },
    /// Gaps `|I_0| = i0`, `|I_{j+1}| = c |I_j|^2`, and `x_k = |I_0| + ... + |I_{k-1}|`.
    SquaredGap { c: BigRational, i0: BigRational },
    /// `round(a^(2^k) (1 + eps_k))`, `eps` padded with zeros.
    Perturbed { a: BigRational, eps: Vec<BigRational> },
}

impl SequenceFamily {
    pub fn explicit<I: IntoIterator<Item = i64>>(xs: I) -> Self {
        SequenceFamily::Explicit(xs.into_iter().map(BigInt::from).collect())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SequenceFamily::Explicit(_) => "explicit",
            SequenceFamily::Geometric { .. } => "geometric",
            SequenceFamily::PowerTower { .. } => "power-tower",
            SequenceFamily::DoubleExp { .. } => "double-exp",
            SequenceFamily::SquaredGap { .. } => "squared-gap",
            SequenceFamily::Perturbed { .. } => "perturbed",
        }
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self, SequenceFamily::Explicit(_))
    }

    fn validate(&self) -> Result<()> {
        let one = BigRational::one();
        let bad = |m: &str| Err(Error::BadParams(m.to_string()));
        match self {
            SequenceFamily::Explicit(xs) => {
                if xs.is_empty() {
                    return bad("explicit list is empty");
                }
                check_increasing(xs)
            }
            SequenceFamily::Geometric { ratio, scale } => {
                if *ratio <= one {
                    return bad("geometric ratio must be > 1");
                }
                if !scale.is_positive() {
                    return bad("geometric scale must be > 0");
                }
                Ok(())
            }
            SequenceFamily::PowerTower { a, b } => {
                if *a <= one || *b <= one {
                    return bad("power-tower requires a > 1 and b > 1");
                }
                Ok(())
            }
            SequenceFamily::DoubleExp { lambda, a } => {
                if !lambda.is_positive() || *a <= one {
                    return bad("double-exp requires lambda > 0 and a > 1");
                }
                Ok(())
            }
            SequenceFamily::SquaredGap { c, i0 } => {
                if !c.is_positive() || *i0 < one {
                    return bad("squared-gap requires c > 0 and i0 >= 1");
                }
                Ok(())
            }
            SequenceFamily::Perturbed { a, eps } => {
                if *a <= one {
                    return bad("perturbed requires a > 1");
                }
                if eps.iter().any(|e| !(e + &one).is_positive()) {
                    return bad("perturbed requires 1 + eps_k > 0");
                }
                Ok(())
            }
        }
    }

    /// Exact (unrounded) value of the k-th term, k >= 1.
    pub fn exact_term(&self, k: usize, budget: &DigitBudget) -> Result<BigRational> {
        assert!(k >= 1);
        match self {
            SequenceFamily::Explicit(xs) => xs
                .get(k - 1)
                .map(int_rat)
                .ok_or(Error::PrefixTooShort { requested: k, available: xs.len() }),
            SequenceFamily::Geometric { ratio, scale } => {
                budget.check_bits(k as u64 * rational_bits(ratio) + rational_bits(scale), k)?;
                Ok(scale * num_traits::pow(ratio.clone(), k))
            }
            SequenceFamily::PowerTower { a, b } => {
                power_tower_value(a, b, k, budget).map(|v| int_rat(&v))
            }
            SequenceFamily::DoubleExp { lambda, a } => {
                let e = pow2_exponent(k, rational_bits(a), budget)?;
                Ok(lambda * num_traits::pow(a.clone(), e))
            }
            SequenceFamily::SquaredGap { c, i0 } => {
                let m = c * i0;
                let mut sum = BigRational::zero();
                for j in 0..k {
                    // |I_j| = i0 * m^(2^j - 1)
                    let e = pow2_exponent(j, rational_bits(&m), budget)? - 1;
                    budget.check_bits(e as u64 * rational_bits(&m) + rational_bits(i0), k)?;
                    sum += i0 * num_traits::pow(m.clone(), e);
                }
                Ok(sum)
            }
            SequenceFamily::Perturbed { a, eps } => {
                let e = pow2_exponent(k, rational_bits(a), budget)?;
                let one = BigRational::one();
                let factor = eps.get(k - 1).map(|x| &one + x).unwrap_or(one);
                Ok(num_traits::pow(a.clone(), e) * factor)
            }
        }
    }

    /// Approximate `ln x_k` in double precision. Not rigorous: rounding is
    /// ignored and large exponents are handled in the log domain only.
    pub fn ln_term(&self, k: usize) -> f64 {
        match self {
            SequenceFamily::Explicit(xs) => xs.get(k - 1).map(ln_big).unwrap_or(f64::NAN),
            SequenceFamily::Geometric { ratio, scale } => ln_rat(scale) + k as f64 * ln_rat(ratio),
            SequenceFamily::PowerTower { a, b } => (k as f64 * ln_rat(b)).exp() * ln_rat(a),
            SequenceFamily::DoubleExp { lambda, a } => ln_rat(lambda) + 2f64.powi(k as i32) * ln_rat(a),
            SequenceFamily::SquaredGap { c, i0 } => {
                let lm = ln_rat(&(c * i0));
                let li0 = ln_rat(i0);
                // log-sum-exp over ln|I_j| = ln i0 + (2^j - 1) ln m
                let logs: Vec<f64> = (0..k).map(|j| li0 + (2f64.powi(j as i32) - 1.0) * lm).collect();
                let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln()
            }
            SequenceFamily::Perturbed { a, eps } => {
                let le = eps.get(k - 1).map(|e| crate::exact::rat_to_f64(e).ln_1p()).unwrap_or(0.0);
                2f64.powi(k as i32) * ln_rat(a) + le
            }
        }
    }
}

fn pow2_exponent(k: usize, base_bits: u64, budget: &DigitBudget) -> Result<usize> {
    if k >= 63 {
        return Err(Error::DigitBudgetExceeded { k, digits: u64::MAX, budget: budget.0 });
    }
    let e = 1usize << k;
    budget.check_bits((e as u64).saturating_mul(base_bits), k)?;
    Ok(e)
}

/// `round(a^(b^k))` exactly; non-integer `b` goes through an integer root.
fn power_tower_value(a: &BigRational, b: &BigRational, k: usize, budget: &DigitBudget) -> Result<BigInt> {
    let p = num_traits::pow(b.numer().magnitude().clone(), k);
    let q = num_traits::pow(b.denom().magnitude().clone(), k);
    let too_big = || Error::DigitBudgetExceeded { k, digits: u64::MAX, budget: budget.0 };
    let p_us = p.to_u64().ok_or_else(too_big)?;
    budget.check_bits(p_us.saturating_mul(rational_bits(a)), k)?;
    let p_us = p_us as usize;
    let num = num_traits::pow(a.numer().magnitude().clone(), p_us);
    let den = num_traits::pow(a.denom().magnitude().clone(), p_us);
    if q.is_one() {
        let v = BigRational::new(BigInt::from(num), BigInt::from(den));
        return Ok(round_half_up(&v));
    }
    let q32 = q.to_u32().ok_or_else(too_big)?;
    // floor(y) for y = (num/den)^(1/q) is the integer root of floor(num/den)
    let m: BigUint = (&num / &den).nth_root(q32);
    // round up iff y >= m + 1/2  <=>  num * 2^q >= den * (2m+1)^q
    let lhs = &num << q32 as usize;
    let rhs = &den * num_traits::pow(&m * 2u32 + 1u32, q32 as usize);
    let r = if lhs >= rhs { m + 1u32 } else { m };
    Ok(BigInt::from(r))
}

fn check_increasing(xs: &[BigInt]) -> Result<()> {
    if let Some(first) = xs.first() {
        if *first < BigInt::one() {
            return Err(Error::NonMonotonic { k: 1 });
        }
    }
    for (i, w) in xs.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::NonMonotonic { k: i + 2 });
        }
    }
    Ok(())
}

/// A validated trap sequence. Immutable; prefixes are materialized on request.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapSequence {
    family: SequenceFamily,
    budget: DigitBudget,
}

impl TrapSequence {
    pub fn new(family: SequenceFamily) -> Result<Self> {
        family.validate()?;
        Ok(TrapSequence { family, budget: DigitBudget::default() })
    }

    pub fn explicit<I: IntoIterator<Item = i64>>(xs: I) -> Result<Self> {
        Self::new(SequenceFamily::explicit(xs))
    }

    pub fn from_values(xs: Vec<BigInt>) -> Result<Self> {
        Self::new(SequenceFamily::Explicit(xs))
    }

    pub fn with_budget(mut self, budget: DigitBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn family(&self) -> &SequenceFamily {
        &self.family
    }

    pub fn budget(&self) -> DigitBudget {
        self.budget
    }

    /// Number of terms available, `None` for infinite families.
    pub fn len(&self) -> Option<usize> {
        match &self.family {
            SequenceFamily::Explicit(xs) => Some(xs.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// The rounded k-th term (k >= 1), without monotonicity checks.
    pub fn term(&self, k: usize) -> Result<BigInt> {
        match &self.family {
            SequenceFamily::Explicit(xs) => xs
                .get(k - 1)
                .cloned()
                .ok_or(Error::PrefixTooShort { requested: k, available: xs.len() }),
            f => Ok(round_half_up(&f.exact_term(k, &self.budget)?)),
        }
    }

    /// `(x_1, ..., x_n)`, validated positive and strictly increasing.
    pub fn prefix(&self, n: usize) -> Result<Vec<BigInt>> {
        if n == 0 {
            return Err(Error::BadParams("prefix length must be >= 1".into()));
        }
        if let Some(len) = self.len() {
            if n > len {
                return Err(Error::PrefixTooShort { requested: n, available: len });
            }
        }
        let xs = (1..=n).map(|k| self.term(k)).collect::<Result<Vec<_>>>()?;
        check_increasing(&xs)?;
        Ok(xs)
    }

    /// Log-domain prefix `ln x_1, ..., ln x_n` for terms too large to
    /// materialize. Results are approximate.
    pub fn ln_prefix(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.family.ln_term(k)).collect()
    }

    /// `x_{k+1} / x_k^2` for k = 1..n-1.
    pub fn ratio_descriptors(&self, n: usize) -> Result<Vec<BigRational>> {
        if n < 2 {
            return Err(Error::PrefixTooShort { requested: n, available: 1 });
        }
        let xs = self.prefix(n)?;
        Ok(xs
            .windows(2)
            .map(|w| BigRational::new(w[1].clone(), &w[0] * &w[0]))
            .collect())
    }
}

impl fmt::Display for SequenceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = rational_string;
        match self {
            SequenceFamily::Explicit(xs) => {
                let items: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
                write!(f, "explicit:{}", items.join(","))
            }
            SequenceFamily::Geometric { ratio, scale } => {
                write!(f, "geometric:rho={},scale={}", r(ratio), r(scale))
            }
            SequenceFamily::PowerTower { a, b } => write!(f, "power-tower:a={},b={}", r(a), r(b)),
            SequenceFamily::DoubleExp { lambda, a } => {
                write!(f, "double-exp:lambda={},a={}", r(lambda), r(a))
            }
            SequenceFamily::SquaredGap { c, i0 } => write!(f, "squared-gap:c={},i0={}", r(c), r(i0)),
            SequenceFamily::Perturbed { a, eps } => {
                let items: Vec<String> = eps.iter().map(r).collect();
                write!(f, "perturbed:a={},eps={}", r(a), items.join(","))
            }
        }
    }
}

fn parse_params(body: &str) -> Result<Vec<(String, Vec<String>)>> {
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    for tok in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((k, v)) = tok.split_once('=') {
            out.push((k.trim().to_ascii_lowercase(), vec![v.trim().to_string()]));
        } else if let Some(last) = out.last_mut() {
            last.1.push(tok.to_string());
        } else {
            return Err(Error::Parse(format!("expected key=value, got `{tok}`")));
        }
    }
    Ok(out)
}

impl FromStr for SequenceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, body) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("sequence spec `{s}` lacks `kind:`")))?;
        let kind = kind.trim().to_ascii_lowercase();
        if kind == "explicit" {
            let xs = body
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<BigInt>().map_err(|_| Error::Parse(format!("bad integer `{t}`"))))
                .collect::<Result<Vec<_>>>()?;
            return Ok(SequenceFamily::Explicit(xs));
        }
        let params = parse_params(body)?;
        let get = |name: &str, default: Option<BigRational>| -> Result<BigRational> {
            match params.iter().find(|(k, _)| k == name) {
                Some((_, v)) if v.len() == 1 => parse_rational(&v[0]),
                Some(_) => Err(Error::Parse(format!("parameter `{name}` takes one value"))),
                None => default.ok_or_else(|| Error::Parse(format!("missing parameter `{name}`"))),
            }
        };
        let known: &[&str] = match kind.as_str() {
            "geometric" => &["rho", "scale"],
            "power-tower" => &["a", "b"],
            "double-exp" => &["lambda", "a"],
            "squared-gap" => &["c", "i0"],
            "perturbed" => &["a", "eps"],
            _ => return Err(Error::Parse(format!("unknown sequence kind `{kind}`"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(Error::Parse(format!("unknown parameter `{k}` for {kind}")));
        }
        Ok(match kind.as_str() {
            "geometric" => SequenceFamily::Geometric {
                ratio: get("rho", None)?,
                scale: get("scale", Some(rat(1, 1)))?,
            },
            "power-tower" => SequenceFamily::PowerTower { a: get("a", None)?, b: get("b", None)? },
            "double-exp" => SequenceFamily::DoubleExp {
                lambda: get("lambda", Some(rat(1, 1)))?,
                a: get("a", None)?,
            },
            "squared-gap" => SequenceFamily::SquaredGap { c: get("c", None)?, i0: get("i0", None)? },
            _ => {
                let eps = params
                    .iter()
                    .find(|(k, _)| k == "eps")
                    .map(|(_, v)| v.iter().map(|e| parse_rational(e)).collect::<Result<Vec<_>>>())
                    .transpose()?
                    .unwrap_or_default();
                SequenceFamily::Perturbed { a: get("a", None)?, eps }
            }
        })
    }
}

impl FromStr for TrapSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TrapSequence::new(s.parse()?)
    }
}
