//! Exact rationals backed by GMP.

use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::error::{Error, Result};

/// Parse `"p/q"`, `"p"` or a finite decimal such as `"0.25"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Config("empty rational".into()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: Integer = p
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad numerator in {text:?}")))?;
        let q: Integer = q
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad denominator in {text:?}")))?;
        if q == 0 {
            return Err(Error::Config(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::from((p, q)));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Config(format!("bad decimal {text:?}")));
        }
        let mut num: Integer = digits.parse().unwrap();
        if neg {
            num = -num;
        }
        let den = Integer::from(Integer::u_pow_u(10, frac.len() as u32));
        return Ok(Rational::from((num, den)));
    }
    let p: Integer = s
        .parse()
        .map_err(|_| Error::Config(format!("bad rational {text:?}")))?;
    Ok(Rational::from(p))
}

/// Canonical `"p/q"` form; always carries the denominator.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Nearest f64, correctly rounded.
pub fn rational_to_f64(q: &Rational) -> f64 {
    q.to_f64()
}

/// `base^n` for a non-negative integer exponent.
pub fn rational_pow(base: &Rational, n: u32) -> Rational {
    Rational::from(base.pow(n))
}

pub fn min_rational<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max_rational<'a>(a: &'a Rational, b: &'a Rational) -> &'a Rational {
    if a >= b {
        a
    } else {
        b
    }
}

/// Serde adapter for a single rational stored as a string.
pub mod serde_rational {
    use rug::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for an optional rational.
pub mod serde_rational_opt {
    use rug::Rational;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(q: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match q {
            Some(q) => s.serialize_some(&super::format_rational(q)),
            None => s.serialize_none(),
        }
    }
}

/// Serde adapter for a list of rationals.
pub mod serde_rational_vec {
    use rug::Rational;
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for q in v {
            seq.serialize_element(&super::format_rational(q))?;
        }
        seq.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        assert_eq!(parse_rational("3/6").unwrap(), Rational::from((1, 2)));
        assert_eq!(parse_rational("-2").unwrap(), Rational::from(-2));
        assert_eq!(parse_rational("0.25").unwrap(), Rational::from((1, 4)));
        assert_eq!(parse_rational(" 7 / 21 ").unwrap(), Rational::from((1, 3)));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn formats_lowest_terms() {
        assert_eq!(format_rational(&Rational::from((10, 4))), "5/2");
        assert_eq!(format_rational(&Rational::from(3)), "3/1");
        assert_eq!(format_rational(&Rational::from((-1, 3))), "-1/3");
    }

    #[test]
    fn integer_power() {
        assert_eq!(rational_pow(&Rational::from((2, 3)), 3), Rational::from((8, 27)));
        assert_eq!(rational_pow(&Rational::from((2, 3)), 0), Rational::from(1));
    }
}
