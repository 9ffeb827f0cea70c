//! Exact number helpers shared by every module.
//!
//! Endogenous values and noise values are small rationals ([`Value`]);
//! probabilities and expectations are arbitrary-precision rationals
//! ([`BigRational`]) so that products over many noise draws never overflow.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// A value of an endogenous variable, a noise, or a unit feature.
pub type Value = Rational64;

/// Lift a [`Value`] into an exact probability-space rational.
pub fn to_big(v: &Value) -> BigRational {
    BigRational::new(BigInt::from(*v.numer()), BigInt::from(*v.denom()))
}

/// Narrow an exact rational back into a [`Value`], if it fits.
pub fn from_big(r: &BigRational) -> Option<Value> {
    let n = r.numer().to_i64()?;
    let d = r.denom().to_i64()?;
    Some(Value::new(n, d))
}

pub fn int(n: i64) -> Value {
    Value::from_integer(n)
}

pub fn frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn big_one() -> BigRational {
    BigRational::one()
}

pub fn big_zero() -> BigRational {
    BigRational::zero()
}

/// Parse `7`, `-3/10` or `0.25` into an exact rational.
pub fn parse_big(text: &str) -> Option<BigRational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let value = if let Some((whole, fraction)) = body.split_once('.') {
        if fraction.is_empty() && whole.is_empty() {
            return None;
        }
        if !whole.chars().all(|c| c.is_ascii_digit()) || !fraction.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let digits = format!("{whole}{fraction}");
        let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
        let d = num_traits::pow(BigInt::from(10), fraction.len());
        BigRational::new(n, d)
    } else {
        if !body.chars().all(|c| c.is_ascii_digit()) {
            return None;
        }
        BigRational::from_integer(body.parse().ok()?)
    };
    Some(if neg { -value } else { value })
}

pub fn parse_value(text: &str) -> Option<Value> {
    from_big(&parse_big(text)?)
}

/// `3`, `-1/2`: integers bare, everything else as `p/q`.
pub fn fmt_value(v: &Value) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Always `p/q`, including `1/1`.
pub fn fmt_fraction(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Terminating decimals as decimals (`0.5`), otherwise `p/q`. Used for CSV cells.
pub fn fmt_value_decimal(v: &Value) -> String {
    if v.is_integer() {
        return v.numer().to_string();
    }
    let mut d = *v.denom();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return fmt_value(v);
    }
    let places = twos.max(fives) as usize;
    fmt_fixed(&to_big(v), places)
}

fn fmt_fixed(r: &BigRational, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = round_half_away(&(r * BigRational::from_integer(scale.clone())));
    let neg = scaled.sign() == Sign::Minus;
    let digits = scaled.abs().to_string();
    let digits = if digits.len() <= places { format!("{}{}", "0".repeat(places + 1 - digits.len()), digits) } else { digits };
    let (whole, fraction) = digits.split_at(digits.len() - places);
    let sign = if neg { "-" } else { "" };
    if places == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{fraction}")
    }
}

fn round_half_away(r: &BigRational) -> BigInt {
    let (q, rem) = r.numer().div_rem(r.denom());
    let twice = rem.abs() * 2;
    if twice >= *r.denom() {
        if r.is_negative() {
            q - 1
        } else {
            q + 1
        }
    } else {
        q
    }
}

/// Decimal rendering with `sig` significant digits, computed exactly.
///
/// `13/60` with five digits is `0.21667`; `1` is `1.0000`.
pub fn fmt_decimal(r: &BigRational, sig: usize) -> String {
    let sig = sig.max(1);
    if r.is_zero() {
        return fmt_fixed(r, sig - 1);
    }
    let abs = r.abs();
    let ten = BigRational::from_integer(BigInt::from(10));
    let pow10 = |k: i64| -> BigRational {
        if k >= 0 {
            num_traits::pow(ten.clone(), k as usize)
        } else {
            num_traits::pow(ten.clone(), (-k) as usize).recip()
        }
    };
    // exponent e with 10^e <= |r| < 10^(e+1)
    let mut e: i64 = abs.numer().to_string().len() as i64 - abs.denom().to_string().len() as i64;
    while pow10(e) > abs {
        e -= 1;
    }
    while pow10(e + 1) <= abs {
        e += 1;
    }
    let limit = num_traits::pow(BigInt::from(10), sig);
    let mut scaled = round_half_away(&(r * pow10(sig as i64 - 1 - e)));
    if scaled.abs() >= limit {
        // rounding carried into a new leading digit
        e += 1;
        scaled = round_half_away(&(r * pow10(sig as i64 - 1 - e)));
    }
    let places = sig as i64 - 1 - e;
    if places >= 0 {
        fmt_fixed(&(BigRational::from_integer(scaled) / pow10(places)), places as usize)
    } else {
        (BigRational::from_integer(scaled) * pow10(-places)).to_integer().to_string()
    }
}

/// JSON shape for an exact rational: `{"num": "7", "den": "20"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactJson {
    pub num: String,
    pub den: String,
}

impl From<&BigRational> for ExactJson {
    fn from(r: &BigRational) -> Self {
        ExactJson { num: r.numer().to_string(), den: r.denom().to_string() }
    }
}

impl ExactJson {
    pub fn to_big(&self) -> Option<BigRational> {
        let n: BigInt = self.num.parse().ok()?;
        let d: BigInt = self.den.parse().ok()?;
        (!d.is_zero()).then(|| BigRational::new(n, d))
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_integers_fractions_and_decimals() {
        assert_eq!(parse_value("-1"), Some(int(-1)));
        assert_eq!(parse_value("3/10"), Some(Value::new(3, 10)));
        assert_eq!(parse_value("0.25"), Some(Value::new(1, 4)));
        assert_eq!(parse_value("-2.5"), Some(Value::new(-5, 2)));
        assert_eq!(parse_value("1/0"), None);
        assert_eq!(parse_value("abc"), None);
        assert_eq!(parse_value(""), None);
    }

    #[test]
    fn five_significant_digits() {
        assert_eq!(fmt_decimal(&frac(13, 60), 5), "0.21667");
        assert_eq!(fmt_decimal(&frac(7, 20), 5), "0.35000");
        assert_eq!(fmt_decimal(&frac(1, 1), 5), "1.0000");
        assert_eq!(fmt_decimal(&frac(4, 1), 5), "4.0000");
        assert_eq!(fmt_decimal(&frac(-1, 2), 5), "-0.50000");
        assert_eq!(fmt_decimal(&frac(0, 1), 5), "0.0000");
        assert_eq!(fmt_decimal(&frac(123456, 1), 5), "123460");
        assert_eq!(fmt_decimal(&frac(999999, 100000), 5), "10.000");
        assert_eq!(fmt_decimal(&frac(1, 3000), 5), "0.00033333");
    }

    #[test]
    fn decimal_cells() {
        assert_eq!(fmt_value_decimal(&Value::new(1, 2)), "0.5");
        assert_eq!(fmt_value_decimal(&Value::new(-3, 20)), "-0.15");
        assert_eq!(fmt_value_decimal(&Value::new(1, 3)), "1/3");
        assert_eq!(fmt_value_decimal(&int(-2)), "-2");
    }
}
