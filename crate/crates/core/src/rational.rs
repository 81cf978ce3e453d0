//! Helpers around [`BigRational`]: parsing `"p/q"` strings, exact conversion
//! from `f64`, exact square roots, and fixed-point natural logarithms with a
//! few hundred bits of precision for comparing likelihoods whose exponents are
//! not integers.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let den: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let num: BigInt = digits
            .parse()
            .map_err(|_| Error::Parse(format!("bad decimal {s:?}")))?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let q = BigRational::new(num, den);
        return Ok(if negative { -q } else { q });
    }
    let num: BigInt = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational {s:?}")))?;
    Ok(BigRational::from_integer(num))
}

/// Exact rational value of a finite `f64`.
pub fn from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(format!("non-finite value {x}")))
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn from_int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Returns the exponent as `u64` when `x` is a nonnegative integer.
pub fn as_exponent(x: f64) -> Option<u64> {
    (x >= 0.0 && x.fract() == 0.0 && x < 9.0e15).then_some(x as u64)
}

/// Exact square root when both numerator and denominator are perfect squares.
pub fn exact_sqrt(q: &BigRational) -> Option<BigRational> {
    if q.is_negative() {
        return None;
    }
    let num = q.numer().magnitude().sqrt();
    let den = q.denom().magnitude().sqrt();
    let num = BigInt::from_biguint(Sign::Plus, num);
    let den = BigInt::from_biguint(Sign::Plus, den);
    (&num * &num == *q.numer() && &den * &den == *q.denom()).then(|| BigRational::new(num, den))
}

pub fn pow(q: &BigRational, e: u64) -> BigRational {
    let mut base = q.clone();
    let mut e = e;
    let mut acc = BigRational::one();
    while e > 0 {
        if e & 1 == 1 {
            acc *= &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc
}

pub fn serialize_rational<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(q)
}

pub fn deserialize_rational<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
    let s = String::deserialize(d)?;
    parse_rational(&s).map_err(serde::de::Error::custom)
}

pub fn serialize_rationals<S: Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|q| q.to_string()))
}

pub fn deserialize_rationals<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<BigRational>, D::Error> {
    let v = Vec::<String>::deserialize(d)?;
    v.iter()
        .map(|s| parse_rational(s).map_err(serde::de::Error::custom))
        .collect()
}

/// Working precision, in bits, of [`PreciseLog`] values.
pub const LOG_BITS: u32 = 256;
const GUARD_BITS: u32 = 32;

/// A real number held as a fixed-point integer scaled by `2^LOG_BITS`.
///
/// Used for natural logarithms of rationals; 256 bits is well beyond the 50
/// decimal digits needed to separate candidate likelihoods.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PreciseLog(BigInt);

impl PreciseLog {
    pub fn zero() -> Self {
        PreciseLog(BigInt::zero())
    }

    /// `ln(q)` for a positive rational.
    pub fn ln(q: &BigRational) -> Result<Self> {
        if !q.is_positive() {
            return Err(Error::InvalidArgument(format!("log of nonpositive {q}")));
        }
        let bits = LOG_BITS + GUARD_BITS;
        let num = q.numer().clone();
        let den = q.denom().clone();
        // q = 2^k * x with x in [1, 2)
        let mut k = num.bits() as i64 - den.bits() as i64;
        let (mut xn, xd) = if k >= 0 { (num, den << k as usize) } else { (num << (-k) as usize, den) };
        if xn < xd {
            xn <<= 1;
            k -= 1;
        }
        // ln x = 2 atanh((x - 1) / (x + 1)), argument in [0, 1/3)
        let yn = &xn - &xd;
        let yd = &xn + &xd;
        let lnx = atanh_fixed(&yn, &yd, bits) << 1;
        let total = lnx + ln2_fixed(bits) * BigInt::from(k);
        Ok(PreciseLog(total >> GUARD_BITS as usize))
    }

    /// Multiplies by an exact rational, rounding toward negative infinity.
    pub fn scale(&self, q: &BigRational) -> Self {
        let v = &self.0 * q.numer();
        PreciseLog(num_integer::Integer::div_floor(&v, q.denom()))
    }

    pub fn to_f64(&self) -> f64 {
        let shift = self.0.bits().saturating_sub(60);
        let top = (&self.0 >> shift as usize).to_f64().unwrap_or(f64::NAN);
        top * 2f64.powi(shift as i32 - LOG_BITS as i32)
    }

    /// True when `|self - other|` is below `2^-(LOG_BITS - slack_bits)`.
    pub fn near(&self, other: &Self, slack_bits: u32) -> bool {
        let diff = (&self.0 - &other.0).abs();
        diff.bits() <= slack_bits as u64
    }

    /// Decimal rendering with `digits` significant digits in scientific form.
    pub fn to_scientific(&self, digits: usize) -> String {
        if self.0.is_zero() {
            return format!("0.{}e0", "0".repeat(digits.saturating_sub(1)));
        }
        let negative = self.0.is_negative();
        let mag = self.0.abs();
        let approx = self.to_f64().abs();
        let mut exp10 = approx.log10().floor() as i64;
        loop {
            let shift = digits as i64 - 1 - exp10;
            let scaled = if shift >= 0 {
                (&mag * num_traits::pow(BigInt::from(10), shift as usize)) >> (LOG_BITS - 1) as usize
            } else {
                ((&mag >> (LOG_BITS - 1) as usize) / num_traits::pow(BigInt::from(10), (-shift) as usize))
                    .clone()
            };
            // round half up using the extra bit kept above
            let rounded: BigInt = (scaled + BigInt::one()) >> 1usize;
            let text = rounded.to_string();
            match text.len().cmp(&digits) {
                Ordering::Greater => exp10 += 1,
                Ordering::Less => exp10 -= 1,
                Ordering::Equal => {
                    let sign = if negative { "-" } else { "" };
                    let (head, tail) = text.split_at(1);
                    return format!("{sign}{head}.{tail}e{exp10}");
                }
            }
        }
    }
}

impl std::ops::Add for PreciseLog {
    type Output = PreciseLog;
    fn add(self, rhs: Self) -> Self {
        PreciseLog(self.0 + rhs.0)
    }
}

impl std::ops::Sub for &PreciseLog {
    type Output = PreciseLog;
    fn sub(self, rhs: Self) -> PreciseLog {
        PreciseLog(&self.0 - &rhs.0)
    }
}

impl fmt::Display for PreciseLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_scientific(30))
    }
}

/// `atanh(yn / yd) * 2^bits` for `0 <= yn / yd < 1`, series summed until
/// terms vanish at this precision.
fn atanh_fixed(yn: &BigInt, yd: &BigInt, bits: u32) -> BigInt {
    let mut power = (yn << bits as usize) / yd;
    let yn2 = yn * yn;
    let yd2 = yd * yd;
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    while !power.is_zero() {
        sum += &power / BigInt::from(2 * k + 1);
        power = &power * &yn2 / &yd2;
        k += 1;
    }
    sum
}

fn ln2_fixed(bits: u32) -> BigInt {
    atanh_fixed(&BigInt::one(), &BigInt::from(3), bits) << 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("3/40").unwrap(), BigRational::new(3.into(), 40.into()));
        assert_eq!(parse_rational("-6/4").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert_eq!(parse_rational("7").unwrap(), from_int(7));
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational("-1.5").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn exact_sqrt_only_for_squares() {
        let q = BigRational::new(16.into(), 225.into());
        assert_eq!(exact_sqrt(&q).unwrap(), BigRational::new(4.into(), 15.into()));
        assert!(exact_sqrt(&BigRational::new(1.into(), 5.into())).is_none());
        assert!(exact_sqrt(&from_int(-4)).is_none());
    }

    #[test]
    fn precise_log_matches_f64() {
        for (p, q) in [(6i64, 5i64), (4, 5), (3, 40), (1, 20), (16, 15), (1, 1), (1000, 3)] {
            let r = BigRational::new(p.into(), q.into());
            let got = PreciseLog::ln(&r).unwrap().to_f64();
            let want = (p as f64 / q as f64).ln();
            assert!((got - want).abs() <= 1e-15 * (1.0 + want.abs()), "{p}/{q}: {got} vs {want}");
        }
    }

    #[test]
    fn precise_log_is_additive_to_high_precision() {
        let a = BigRational::new(6.into(), 5.into());
        let b = BigRational::new(4.into(), 5.into());
        let lhs = PreciseLog::ln(&(&a * &b)).unwrap();
        let rhs = PreciseLog::ln(&a).unwrap() + PreciseLog::ln(&b).unwrap();
        assert!(lhs.near(&rhs, 8));
    }

    #[test]
    fn ln2_digits() {
        let l = PreciseLog::ln(&from_int(2)).unwrap();
        assert_eq!(l.to_scientific(30), "6.93147180559945309417232121458e-1");
    }
}
