//! Exact fixed-point decimals for measure values.
//!
//! Measures are either integers or decimals. Decimal values keep their
//! serialized representation (`10.50` stays scale 2), sums are exact integer
//! arithmetic over aligned mantissas, and averages divide the exact sum by
//! the count with half-even rounding at [`AVG_SCALE`] fractional digits.

use alloc::string::String;
use core::cmp::Ordering;
use core::fmt;

/// Fractional digits of an average result.
pub const AVG_SCALE: u8 = 6;

/// Most fractional digits a parsed decimal may carry.
pub const MAX_SCALE: u8 = 12;

/// A signed decimal `mantissa * 10^-scale`.
///
/// Equality and the derived ordering are representational: `1.5` and `1.50`
/// compare unequal (the derive exists for deterministic collections). Use
/// [`Decimal::cmp_numeric`] for value comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Decimal {
    mantissa: i128,
    scale: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecimalError {
    Parse(String),
    Overflow,
}

impl fmt::Display for DecimalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecimalError::Parse(input) => write!(f, "not a decimal number: '{input}'"),
            DecimalError::Overflow => write!(f, "decimal arithmetic overflow"),
        }
    }
}

impl core::error::Error for DecimalError {}

const POW10: [i128; 13] = [
    1,
    10,
    100,
    1_000,
    10_000,
    100_000,
    1_000_000,
    10_000_000,
    100_000_000,
    1_000_000_000,
    10_000_000_000,
    100_000_000_000,
    1_000_000_000_000,
];

impl Decimal {
    pub const ZERO: Decimal = Decimal { mantissa: 0, scale: 0 };

    pub fn new(mantissa: i128, scale: u8) -> Result<Decimal, DecimalError> {
        if scale > MAX_SCALE {
            return Err(DecimalError::Overflow);
        }
        Ok(Decimal { mantissa, scale })
    }

    pub fn from_int(value: i64) -> Decimal {
        Decimal {
            mantissa: value as i128,
            scale: 0,
        }
    }

    pub fn mantissa(&self) -> i128 {
        self.mantissa
    }

    pub fn scale(&self) -> u8 {
        self.scale
    }

    /// Parses `-12.30` style literals, keeping the written scale.
    pub fn parse(input: &str) -> Result<Decimal, DecimalError> {
        let err = || DecimalError::Parse(String::from(input));
        let rest = input.strip_prefix('-').unwrap_or(input);
        let negative = rest.len() != input.len();
        let (int_part, frac_part) = match rest.split_once('.') {
            Some((i, f)) => (i, f),
            None => (rest, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit())
            || !frac_part.bytes().all(|b| b.is_ascii_digit())
        {
            return Err(err());
        }
        if frac_part.len() > MAX_SCALE as usize {
            return Err(err());
        }
        let mut mantissa: i128 = 0;
        for b in int_part.bytes().chain(frac_part.bytes()) {
            mantissa = mantissa
                .checked_mul(10)
                .and_then(|m| m.checked_add((b - b'0') as i128))
                .ok_or(DecimalError::Overflow)?;
        }
        if negative {
            mantissa = -mantissa;
        }
        Ok(Decimal {
            mantissa,
            scale: frac_part.len() as u8,
        })
    }

    /// Exact sum; the result carries the wider scale of the two operands.
    pub fn checked_add(self, other: Decimal) -> Result<Decimal, DecimalError> {
        let scale = self.scale.max(other.scale);
        let a = self.rescaled_mantissa(scale)?;
        let b = other.rescaled_mantissa(scale)?;
        Ok(Decimal {
            mantissa: a.checked_add(b).ok_or(DecimalError::Overflow)?,
            scale,
        })
    }

    fn rescaled_mantissa(self, scale: u8) -> Result<i128, DecimalError> {
        debug_assert!(scale >= self.scale);
        self.mantissa
            .checked_mul(POW10[(scale - self.scale) as usize])
            .ok_or(DecimalError::Overflow)
    }

    /// `self / count` rounded half-even at [`AVG_SCALE`] digits.
    pub fn div_count_half_even(self, count: u64) -> Result<Decimal, DecimalError> {
        debug_assert!(count > 0);
        let (numerator, denominator) = if self.scale <= AVG_SCALE {
            let numerator = self
                .mantissa
                .checked_mul(POW10[(AVG_SCALE - self.scale) as usize])
                .ok_or(DecimalError::Overflow)?;
            (numerator, count as i128)
        } else {
            let denominator = (count as i128)
                .checked_mul(POW10[(self.scale - AVG_SCALE) as usize])
                .ok_or(DecimalError::Overflow)?;
            (self.mantissa, denominator)
        };
        Ok(Decimal {
            mantissa: div_half_even(numerator, denominator),
            scale: AVG_SCALE,
        })
    }

    pub fn cmp_numeric(&self, other: &Decimal) -> Ordering {
        let scale = self.scale.max(other.scale);
        // Panic-free: rescaling to <= MAX_SCALE only overflows near i128::MAX,
        // which checked_add already keeps out of stored values.
        let a = self.mantissa.saturating_mul(POW10[(scale - self.scale) as usize]);
        let b = other.mantissa.saturating_mul(POW10[(scale - other.scale) as usize]);
        a.cmp(&b)
    }

    /// Approximate value for clustering and cost arithmetic.
    pub fn to_f64(&self) -> f64 {
        self.mantissa as f64 / POW10[self.scale as usize] as f64
    }
}

/// Rounds `n / d` (d > 0) to the nearest integer, ties to even.
fn div_half_even(n: i128, d: i128) -> i128 {
    debug_assert!(d > 0);
    let q = n.div_euclid(d);
    let r = n.rem_euclid(d);
    match (2 * r).cmp(&d) {
        Ordering::Less => q,
        Ordering::Greater => q + 1,
        Ordering::Equal => {
            if q % 2 == 0 {
                q
            } else {
                q + 1
            }
        }
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.scale == 0 {
            return write!(f, "{}", self.mantissa);
        }
        let sign = if self.mantissa < 0 { "-" } else { "" };
        let abs = self.mantissa.unsigned_abs();
        let div = POW10[self.scale as usize] as u128;
        let (int_part, frac_part) = (abs / div, abs % div);
        write!(
            f,
            "{sign}{int_part}.{frac_part:0width$}",
            width = self.scale as usize
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn parse_and_display_keep_scale() {
        for s in ["0", "-0.50", "12.345", "7", "-13", "0.000001"] {
            assert_eq!(Decimal::parse(s).unwrap().to_string(), s);
        }
        assert_eq!(Decimal::parse("10.50").unwrap().scale(), 2);
    }

    #[test]
    fn parse_rejects_garbage() {
        for s in ["", "-", ".", "1.2.3", "1e5", " 1", "1 ", "--2", "1.1234567890123"] {
            assert!(Decimal::parse(s).is_err(), "accepted '{s}'");
        }
    }

    #[test]
    fn add_aligns_scales() {
        let a = Decimal::parse("1.5").unwrap();
        let b = Decimal::parse("2.25").unwrap();
        assert_eq!(a.checked_add(b).unwrap().to_string(), "3.75");
        let c = Decimal::parse("-1.50").unwrap();
        assert_eq!(a.checked_add(c).unwrap().to_string(), "0.00");
    }

    #[test]
    fn representational_vs_numeric_equality() {
        let a = Decimal::parse("1.5").unwrap();
        let b = Decimal::parse("1.50").unwrap();
        assert_ne!(a, b);
        assert_eq!(a.cmp_numeric(&b), Ordering::Equal);
        assert_eq!(a.cmp_numeric(&Decimal::parse("1.51").unwrap()), Ordering::Less);
    }

    #[test]
    fn half_even_division() {
        assert_eq!(div_half_even(25, 10), 2);
        assert_eq!(div_half_even(35, 10), 4);
        assert_eq!(div_half_even(26, 10), 3);
        assert_eq!(div_half_even(-25, 10), -2);
        assert_eq!(div_half_even(-35, 10), -4);
        assert_eq!(div_half_even(-26, 10), -3);
    }

    #[test]
    fn average_at_documented_scale() {
        let sum = Decimal::parse("10").unwrap();
        let avg = sum.div_count_half_even(3).unwrap();
        assert_eq!(avg.to_string(), "3.333333");
        let sum = Decimal::parse("0.0000000025").unwrap();
        assert_eq!(sum.div_count_half_even(1).unwrap().to_string(), "0.000000");
    }

    #[test]
    fn overflow_is_reported() {
        let big = Decimal::new(i128::MAX, 0).unwrap();
        assert_eq!(big.checked_add(big), Err(DecimalError::Overflow));
    }
}
