//! Exact rational parameters (ε, δ, grid times) and their text forms.

use num_traits::{ToPrimitive, Zero};
use std::fmt;

/// Exact rational used for times and thresholds.
pub type Rational = num_rational::Ratio<i64>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational {text:?}: {reason}")]
pub struct RationalParseError {
    pub text: String,
    pub reason: &'static str,
}

/// Parses `p/q` or a bare integer `p`. Decimal and exponent forms are
/// rejected so thresholds stay exact.
pub fn parse_rational(text: &str) -> Result<Rational, RationalParseError> {
    let err = |reason| RationalParseError {
        text: text.to_string(),
        reason,
    };
    let t = text.trim();
    if t.contains(['.', 'e', 'E']) {
        return Err(err("floating-point notation is not accepted; write p/q"));
    }
    let (num, den) = match t.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (t, "1"),
    };
    let p: i64 = num.parse().map_err(|_| err("numerator is not an integer"))?;
    let q: i64 = den.parse().map_err(|_| err("denominator is not an integer"))?;
    if q == 0 {
        return Err(err("zero denominator"));
    }
    Ok(Rational::new(p, q))
}

/// `p/q` in lowest terms; integers print without a denominator.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact decimal expansion when the denominator has only factors 2 and 5,
/// otherwise `p/q`.
pub fn exact_decimal(r: &Rational) -> String {
    DecimalForm(*r).to_string()
}

struct DecimalForm(Rational);

impl fmt::Display for DecimalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.0;
        let mut den = *r.denom();
        let (mut twos, mut fives) = (0u32, 0u32);
        while den % 2 == 0 {
            den /= 2;
            twos += 1;
        }
        while den % 5 == 0 {
            den /= 5;
            fives += 1;
        }
        if den != 1 {
            return write!(f, "{}/{}", r.numer(), r.denom());
        }
        let digits = twos.max(fives);
        if digits == 0 {
            return write!(f, "{}", r.numer());
        }
        // scale numerator so that numer * 10^digits / denom is integral
        let scale = 10i128.pow(digits);
        let scaled = (*r.numer() as i128) * scale / (*r.denom() as i128);
        let sign = if scaled < 0 { "-" } else { "" };
        let abs = scaled.unsigned_abs();
        let int = abs / scale as u128;
        let frac = abs % scale as u128;
        write!(f, "{sign}{int}.{frac:0width$}", width = digits as usize)
    }
}

/// ⌊r⌋ as an integer.
pub fn floor(r: &Rational) -> i64 {
    r.floor().to_integer()
}

/// Fractional part in `[0, 1)`.
pub fn fract(r: &Rational) -> Rational {
    *r - Rational::from_integer(floor(r))
}

pub fn is_integer(r: &Rational) -> bool {
    fract(r).is_zero()
}
