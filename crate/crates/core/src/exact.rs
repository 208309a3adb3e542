//! Small exact-arithmetic helpers shared by every module: rational parsing,
//! rounding, digit estimates and fixed-significance decimal rendering.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default ceiling on the decimal size of any single exact integer.
pub const DEFAULT_DIGIT_BUDGET: u64 = 2_000_000;

const LOG10_2: f64 = std::f64::consts::LOG10_2;

/// Upper limit on the decimal digits of any single integer produced by the
/// exact routines. Exceeding it yields [`Error::DigitBudgetExceeded`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DigitBudget(pub u64);

impl Default for DigitBudget {
    fn default() -> Self {
        DigitBudget(DEFAULT_DIGIT_BUDGET)
    }
}

impl DigitBudget {
    pub fn digits_for_bits(bits: u64) -> u64 {
        (bits as f64 * LOG10_2).ceil() as u64
    }

    /// Checks an estimated bit length against the budget; `k` is the index
    /// reported on failure.
    pub fn check_bits(&self, bits: u64, k: usize) -> Result<()> {
        let digits = Self::digits_for_bits(bits);
        if digits > self.0 {
            Err(Error::DigitBudgetExceeded { k, digits, budget: self.0 })
        } else {
            Ok(())
        }
    }
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int_rat(n: &BigInt) -> BigRational {
    BigRational::from_integer(n.clone())
}

/// `floor(r + 1/2)`.
pub fn round_half_up(r: &BigRational) -> BigInt {
    (r + rat(1, 2)).floor().to_integer()
}

pub fn rational_bits(r: &BigRational) -> u64 {
    r.numer().bits().max(r.denom().bits())
}

/// Natural logarithm of |n| using the leading 64 bits; `-inf` for zero.
pub fn ln_big(n: &BigInt) -> f64 {
    let bits = n.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 64 {
        return n.abs().to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (n.abs() >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_rat(r: &BigRational) -> f64 {
    ln_big(r.numer()) - ln_big(r.denom())
}

/// Lossy conversion that survives numerators and denominators beyond f64 range.
pub fn rat_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && d != 0.0 {
            return n / d;
        }
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    sign * ln_rat(&r.abs()).exp()
}

/// Parses an exact rational: `7`, `-3`, `5/2`, `0.125`, `1e-3`, `2.5e2`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| Error::Parse(format!("bad numerator in `{s}`")))?;
        let d: BigInt = d.trim().parse().map_err(|_| Error::Parse(format!("bad denominator in `{s}`")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in `{s}`")));
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = s[i + 1..].parse().map_err(|_| Error::Parse(format!("bad exponent in `{s}`")))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("bad number `{s}`")));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("bad number `{s}`")));
    }
    let digits: BigInt = format!("0{int_part}{frac_part}").parse().expect("digits only");
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

/// `p/q` (or `p` when q = 1), reduced.
pub fn rational_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn pow10(e: u64) -> BigInt {
    num_traits::pow(BigInt::from(10), e as usize)
}

/// Decimal rendering rounded half-up to `sig` significant digits.
/// Positional notation for moderate magnitudes, `d.ddde±N` otherwise.
pub fn decimal_sig(r: &BigRational, sig: usize) -> String {
    assert!(sig >= 1);
    if r.is_zero() {
        return "0".to_string();
    }
    let neg = r.is_negative();
    let a = r.abs();
    // first guess at floor(log10 |r|) from digit counts, then correct
    let dn = a.numer().to_string().len() as i64;
    let dd = a.denom().to_string().len() as i64;
    let mut e = dn - dd;
    let ge_pow = |e: i64| -> bool {
        // a >= 10^e
        if e >= 0 {
            a.numer() >= &(a.denom() * pow10(e as u64))
        } else {
            a.numer() * pow10((-e) as u64) >= *a.denom()
        }
    };
    while !ge_pow(e) {
        e -= 1;
    }
    while ge_pow(e + 1) {
        e += 1;
    }
    let shift = sig as i64 - 1 - e;
    let scaled = if shift >= 0 {
        &a * BigRational::from_integer(pow10(shift as u64))
    } else {
        &a / BigRational::from_integer(pow10((-shift) as u64))
    };
    let mut m = round_half_up(&scaled);
    if m >= pow10(sig as u64) {
        m = m.div_floor(&BigInt::from(10));
        e += 1;
    }
    let digits = m.to_string();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if (-7..sig as i64).contains(&e) {
        if e >= 0 {
            let (ip, fp) = digits.split_at(e as usize + 1);
            out.push_str(ip);
            let fp = fp.trim_end_matches('0');
            if !fp.is_empty() {
                out.push('.');
                out.push_str(fp);
            }
        } else {
            out.push_str("0.");
            for _ in 0..(-e - 1) {
                out.push('0');
            }
            out.push_str(digits.trim_end_matches('0'));
        }
    } else {
        let (lead, rest) = digits.split_at(1);
        out.push_str(lead);
        let rest = rest.trim_end_matches('0');
        if !rest.is_empty() {
            out.push('.');
            out.push_str(rest);
        }
        out.push_str(&format!("e{e}"));
    }
    out
}

/// `sign(r)` as i32.
pub fn signum(r: &BigRational) -> i32 {
    match r.numer().sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

/// Exact test of `r < (3 + √5)/2`.
pub fn below_golden_square(r: &BigRational) -> bool {
    // r < (3+√5)/2  <=>  2r - 3 < √5
    let t = r * rat(2, 1) - rat(3, 1);
    if !t.is_positive() {
        return true;
    }
    &t * &t < rat(5, 1)
}

pub fn golden_square() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}
