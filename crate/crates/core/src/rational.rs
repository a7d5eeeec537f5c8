//! Exact probability arithmetic and its report rendering.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = BigRational;

pub fn ratio(numer: u64, denom: u64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(value: u64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

pub fn pow2(n: usize) -> BigInt {
    BigInt::one() << n
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Round half away from zero to four places.
pub fn round4(value: f64) -> f64 {
    (value * 1e4).round() / 1e4
}

/// True for values in the half-open interval (0, 1].
pub fn is_probability(value: &Rational) -> bool {
    *value > Rational::zero() && *value <= Rational::one()
}

/// `numer/denom` text form, `7` for integers.
pub fn format_exact(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn parse_exact(text: &str) -> Option<Rational> {
    let text = text.trim();
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Rational::new(n, d))
        }
        None => text.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// A metric carried as an exact rational together with its decimal views.
///
/// Serializes as `{"exact": "1/12", "decimal": 0.0833, "value": 0.08333333333333333}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricValue(pub Rational);

impl MetricValue {
    pub fn exact(&self) -> &Rational {
        &self.0
    }

    pub fn value(&self) -> f64 {
        to_f64(&self.0)
    }

    pub fn decimal(&self) -> f64 {
        round4(self.value())
    }
}

impl From<Rational> for MetricValue {
    fn from(value: Rational) -> Self {
        MetricValue(value)
    }
}

#[derive(Serialize, Deserialize)]
struct MetricValueRepr {
    exact: String,
    decimal: f64,
    value: f64,
}

impl Serialize for MetricValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MetricValueRepr {
            exact: format_exact(&self.0),
            decimal: self.decimal(),
            value: self.value(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MetricValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = MetricValueRepr::deserialize(deserializer)?;
        parse_exact(&repr.exact)
            .map(MetricValue)
            .ok_or_else(|| serde::de::Error::custom(format!("bad rational `{}`", repr.exact)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_text_round_trips() {
        let v = ratio(63, 782);
        assert_eq!(format_exact(&v), "63/782");
        assert_eq!(parse_exact("63/782"), Some(v));
        assert_eq!(parse_exact("1"), Some(integer(1)));
        assert_eq!(parse_exact("1/0"), None);
        assert_eq!(parse_exact("x"), None);
    }

    #[test]
    fn metric_value_json_shape() {
        let json = serde_json::to_string(&MetricValue(ratio(1, 12))).unwrap();
        assert_eq!(
            json,
            r#"{"exact":"1/12","decimal":0.0833,"value":0.08333333333333333}"#
        );
        let back: MetricValue = serde_json::from_str(&json).unwrap();
        assert_eq!(back.0, ratio(1, 12));
    }

    #[test]
    fn probability_bounds() {
        assert!(is_probability(&integer(1)));
        assert!(is_probability(&ratio(1, 44)));
        assert!(!is_probability(&integer(0)));
        assert!(!is_probability(&ratio(45, 44)));
    }

    #[test]
    fn small_factorials() {
        assert_eq!(factorial(0), BigInt::one());
        assert_eq!(factorial(6), BigInt::from(720));
        assert_eq!(pow2(6), BigInt::from(64));
    }
}
