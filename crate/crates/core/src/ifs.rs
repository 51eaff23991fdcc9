//! Affine maps, words and validated IFS specifications.

use std::fmt;

use rug::Rational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{format_rational, parse_rational, serde_rational};

/// `x ↦ ratio·x + offset`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AffineMap {
    #[serde(rename = "rho", with = "serde_rational")]
    pub ratio: Rational,
    #[serde(rename = "b", with = "serde_rational")]
    pub offset: Rational,
}

impl AffineMap {
    pub fn new(ratio: Rational, offset: Rational) -> Self {
        AffineMap { ratio, offset }
    }

    pub fn identity() -> Self {
        AffineMap { ratio: Rational::from(1), offset: Rational::from(0) }
    }

    pub fn apply(&self, x: &Rational) -> Rational {
        Rational::from(&self.ratio * x) + &self.offset
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            ratio: Rational::from(&self.ratio * &inner.ratio),
            offset: Rational::from(&self.ratio * &inner.offset) + &self.offset,
        }
    }

    pub fn inverse_apply(&self, y: &Rational) -> Rational {
        Rational::from(y - &self.offset) / &self.ratio
    }

    /// Left endpoint of the image of [0,1].
    pub fn left(&self) -> &Rational {
        &self.offset
    }

    /// Right endpoint of the image of [0,1].
    pub fn right(&self) -> Rational {
        Rational::from(&self.offset + &self.ratio)
    }
}

impl fmt::Display for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·x + {}", format_rational(&self.ratio), format_rational(&self.offset))
    }
}

/// A finite word over the alphabet `1..=m`; empty means identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Word(pub Vec<u16>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn extended(&self, symbol: u16) -> Word {
        let mut v = self.0.clone();
        v.push(symbol);
        Word(v)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

/// Shortlex order: shorter words first, then lexicographic.
impl Ord for Word {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Sigma,
    Lambda,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "standard")]
    Standard,
    #[serde(rename = "relaxed-b")]
    AssumptionBRelaxed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub alpha_tol: f64,
    pub dist_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { alpha_tol: 1e-12, dist_tol: 1e-15 }
    }
}

/// A validated IFS with maps sorted by image position.
#[derive(Clone, Debug, Serialize)]
pub struct IfsSpec {
    pub maps: Vec<AffineMap>,
    pub scheme: Scheme,
    pub mode: Mode,
    pub tolerances: Tolerances,
    /// `permutation[j]` is the 0-based input position of sorted map `j`.
    pub permutation: Vec<usize>,
}

impl IfsSpec {
    pub fn new(maps: Vec<AffineMap>, scheme: Scheme, mode: Mode, tolerances: Tolerances) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::Config("at least two maps are required".into()));
        }
        for (i, f) in maps.iter().enumerate() {
            if f.ratio == 0 {
                return Err(Error::RatioOutOfRange { index: i + 1, ratio: format_rational(&f.ratio) });
            }
            if f.ratio < 0 {
                return Err(Error::NegativeRatio { index: i + 1 });
            }
            if f.ratio >= 1 {
                return Err(Error::RatioOutOfRange { index: i + 1, ratio: format_rational(&f.ratio) });
            }
            if f.offset < 0 || f.right() > 1 {
                return Err(Error::ImageOutOfUnit { index: i + 1 });
            }
        }
        if !(tolerances.alpha_tol > 0.0 && tolerances.dist_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        let mut order: Vec<usize> = (0..maps.len()).collect();
        order.sort_by(|&a, &b| {
            let (fa, fb) = (&maps[a], &maps[b]);
            fa.offset.cmp(&fb.offset).then_with(|| fa.right().cmp(&fb.right())).then(a.cmp(&b))
        });
        let sorted: Vec<AffineMap> = order.iter().map(|&i| maps[i].clone()).collect();
        for w in sorted.windows(2) {
            if w[0] == w[1] {
                return Err(Error::Config(format!("duplicate map {}", w[0])));
            }
        }
        if sorted[0].offset != 0 {
            return Err(Error::Normalization("S_1(0) must equal 0".into()));
        }
        if sorted[sorted.len() - 1].right() != 1 {
            return Err(Error::Normalization("S_m(1) must equal 1".into()));
        }
        Ok(IfsSpec { maps: sorted, scheme, mode, tolerances, permutation: order })
    }

    pub fn m(&self) -> usize {
        self.maps.len()
    }

    pub fn rho_first(&self) -> &Rational {
        &self.maps[0].ratio
    }

    pub fn rho_last(&self) -> &Rational {
        &self.maps[self.maps.len() - 1].ratio
    }

    pub fn rho_min(&self) -> Rational {
        self.maps.iter().map(|f| f.ratio.clone()).min().unwrap()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapDoc {
    rho: String,
    b: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigDoc {
    #[serde(default)]
    #[allow(dead_code)]
    name: Option<String>,
    maps: Vec<MapDoc>,
    #[serde(default = "default_scheme")]
    scheme: Scheme,
    #[serde(default = "default_mode")]
    mode: Mode,
    alpha_tol: Option<f64>,
    dist_tol: Option<f64>,
}

fn default_scheme() -> Scheme {
    Scheme::Sigma
}

fn default_mode() -> Mode {
    Mode::Standard
}

/// Parse and validate a JSON config document.
pub fn parse_spec(text: &str) -> Result<IfsSpec> {
    let doc: ConfigDoc = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let mut maps = Vec::with_capacity(doc.maps.len());
    for m in &doc.maps {
        maps.push(AffineMap::new(parse_rational(&m.rho)?, parse_rational(&m.b)?));
    }
    let defaults = Tolerances::default();
    let tol = Tolerances {
        alpha_tol: doc.alpha_tol.unwrap_or(defaults.alpha_tol),
        dist_tol: doc.dist_tol.unwrap_or(defaults.dist_tol),
    };
    IfsSpec::new(maps, doc.scheme, doc.mode, tol)
}

/// `S_{w_1} ∘ ⋯ ∘ S_{w_n}`.
pub fn compose_word(spec: &IfsSpec, w: &Word) -> Result<AffineMap> {
    let m = spec.m();
    let mut acc = AffineMap::identity();
    for &s in &w.0 {
        let s = s as usize;
        if s == 0 || s > m {
            return Err(Error::SymbolOutOfRange { symbol: s, m });
        }
        acc = acc.compose(&spec.maps[s - 1]);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn cantor() -> IfsSpec {
        parse_spec(r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/3","b":"2/3"}]}"#).unwrap()
    }

    #[test]
    fn cantor_parses() {
        let s = cantor();
        assert_eq!(s.m(), 2);
        assert_eq!(s.scheme, Scheme::Sigma);
        assert_eq!(s.mode, Mode::Standard);
    }

    #[test]
    fn four_quarters_parses_and_sorts() {
        let s = parse_spec(
            r#"{"maps":[{"rho":"1/4","b":"3/4"},{"rho":"1/4","b":"1/4"},
                        {"rho":"1/4","b":"0"},{"rho":"1/4","b":"3/8"}]}"#,
        )
        .unwrap();
        assert_eq!(s.m(), 4);
        assert_eq!(s.maps[1].offset, q(1, 4));
        assert_eq!(s.permutation, vec![2, 1, 3, 0]);
    }

    #[test]
    fn ratio_one_rejected() {
        let e = parse_spec(r#"{"maps":[{"rho":"1","b":"0"},{"rho":"1/3","b":"2/3"}]}"#).unwrap_err();
        assert!(e.to_string().contains("contraction ratio out of range"));
    }

    #[test]
    fn negative_ratio_rejected() {
        let e = parse_spec(r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"-1/3","b":"1"}]}"#).unwrap_err();
        assert!(matches!(e, Error::NegativeRatio { .. }));
    }

    #[test]
    fn escaping_image_rejected() {
        let e = parse_spec(r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/2","b":"2/3"}]}"#).unwrap_err();
        assert!(matches!(e, Error::ImageOutOfUnit { .. }));
    }

    #[test]
    fn normalization_enforced() {
        let e = parse_spec(r#"{"maps":[{"rho":"1/3","b":"1/9"},{"rho":"1/3","b":"2/3"}]}"#).unwrap_err();
        assert!(matches!(e, Error::Normalization(_)));
    }

    #[test]
    fn malformed_document() {
        assert!(matches!(parse_spec("{"), Err(Error::Config(_))));
        assert!(matches!(parse_spec(r#"{"maps":[],"bogus":1}"#), Err(Error::Config(_))));
    }

    #[test]
    fn compose_cantor_12() {
        let f = compose_word(&cantor(), &Word(vec![1, 2])).unwrap();
        assert_eq!(f.ratio, q(1, 9));
        assert_eq!(f.offset, q(2, 9));
    }

    #[test]
    fn empty_word_is_identity() {
        assert_eq!(compose_word(&cantor(), &Word::empty()).unwrap(), AffineMap::identity());
    }

    #[test]
    fn out_of_range_symbol() {
        assert!(matches!(
            compose_word(&cantor(), &Word(vec![3])),
            Err(Error::SymbolOutOfRange { symbol: 3, m: 2 })
        ));
    }

    #[test]
    fn lambda_ninth_identity() {
        let s = parse_spec(
            r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/9","b":"8/27"},{"rho":"1/3","b":"2/3"}],
                "scheme":"lambda"}"#,
        )
        .unwrap();
        let a = compose_word(&s, &Word(vec![1, 3, 3])).unwrap();
        let b = compose_word(&s, &Word(vec![2, 1])).unwrap();
        assert_eq!(a, b);
    }
}
