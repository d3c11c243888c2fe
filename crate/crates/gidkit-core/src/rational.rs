//! Exact rational arithmetic helpers.
//!
//! All probabilities in this crate are arbitrary-precision rationals so that
//! model comparisons are exact: two distributions are equal iff every cell
//! compares equal, with no tolerance anywhere.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// The scalar type used for every probability and weight in the crate.
pub type Rat = BigRational;

/// Build a rational from an integer numerator/denominator pair.
///
/// Panics if `den == 0`; intended for literals in code and tests.
pub fn rat(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Render a rational as `"p/q"` in lowest terms (`"3"` stays `"3/1"`).
///
/// The representation is canonical: the sign lives on the numerator and the
/// denominator is positive, so equal rationals always serialize identically.
pub fn format_rat(r: &Rat) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parse a rational from the `"p/q"` form produced by [`format_rat`].
///
/// Also accepts a bare integer `"p"` as `p/1`. Rejects zero denominators.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let (num_str, den_str) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let num: BigInt = num_str
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("malformed rational `{s}`")))?;
    let den: BigInt = den_str
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("malformed rational `{s}`")))?;
    if den.is_zero() {
        return Err(Error::InvalidArgument(format!(
            "zero denominator in rational `{s}`"
        )));
    }
    Ok(BigRational::new(num, den))
}

/// True iff `r` lies in the closed unit interval.
pub fn is_probability(r: &Rat) -> bool {
    !r.is_negative() && *r <= Rat::one()
}

/// Serde adapter for a [`Rat`] field, using the `"p/q"` string form.
/// Use as `#[serde(with = "crate::rational::serde_rat")]`.
pub mod serde_rat {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_rat, parse_rat, Rat};

    pub fn serialize<S: Serializer>(r: &Rat, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&format_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(de)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for a `Vec<Rat>` field, elementwise `"p/q"` strings.
/// Use as `#[serde(with = "crate::rational::serde_rat_vec")]`.
pub mod serde_rat_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    use super::{format_rat, parse_rat, Rat};

    pub fn serialize<S: Serializer>(v: &[Rat], ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_seq(v.iter().map(|r| format_rat(r)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<Rat>, D::Error> {
        let strings = Vec::<String>::deserialize(de)?;
        strings
            .iter()
            .map(|s| parse_rat(s).map_err(serde::de::Error::custom))
            .collect()
    }
}
