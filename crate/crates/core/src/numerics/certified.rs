//! Interval arithmetic on MPFR floats with outward rounding.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::{Round, Special};
use rug::ops::{AddAssignRound, AssignRound, DivAssignRound, MulAssignRound, PowAssignRound, SubAssignRound};
use rug::{Float, Rational};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_PRECISION: u32 = 128;
pub const MAX_PRECISION: u32 = 1024;

/// A real number known to lie in `[lo, hi]`.
#[derive(Clone, PartialEq)]
pub struct CertifiedReal {
    lo: Float,
    hi: Float,
}

fn round_to(prec: u32, x: &Float, round: Round) -> Float {
    Float::with_val_round(prec, x, round).0
}

impl CertifiedReal {
    pub fn new(lo: Float, hi: Float) -> Self {
        assert!(lo <= hi, "CertifiedReal requires lo <= hi");
        CertifiedReal { lo, hi }
    }

    pub fn point(x: Float) -> Self {
        CertifiedReal { lo: x.clone(), hi: x }
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        let lo = Float::with_val_round(prec, q, Round::Down).0;
        let hi = Float::with_val_round(prec, q, Round::Up).0;
        CertifiedReal { lo, hi }
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        Self::point(Float::with_val(prec.max(53), x))
    }

    pub fn from_int(n: i64, prec: u32) -> Self {
        Self::point(Float::with_val(prec.max(64), n))
    }

    pub fn zero(prec: u32) -> Self {
        Self::from_int(0, prec)
    }

    pub fn one(prec: u32) -> Self {
        Self::from_int(1, prec)
    }

    /// The whole extended real line; used when a division is undefined.
    pub fn entire(prec: u32) -> Self {
        CertifiedReal {
            lo: Float::with_val(prec, Special::NegInfinity),
            hi: Float::with_val(prec, Special::Infinity),
        }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn mid(&self) -> Float {
        let p = self.prec() + 1;
        let mut m = Float::with_val(p, &self.lo + &self.hi);
        m /= 2u32;
        m
    }

    pub fn mid_f64(&self) -> f64 {
        if !self.is_finite() {
            return f64::NAN;
        }
        self.mid().to_f64()
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64_round(Round::Down)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64_round(Round::Up)
    }

    pub fn width(&self) -> Float {
        let mut w = Float::with_val(self.prec(), 0);
        w.assign_round(&self.hi - &self.lo, Round::Up);
        w
    }

    pub fn width_f64(&self) -> f64 {
        self.width().to_f64_round(Round::Up)
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0
    }

    pub fn is_negative(&self) -> bool {
        self.hi < 0
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lo <= x && self.hi >= x
    }

    pub fn contains_rational(&self, q: &Rational) -> bool {
        self.lo <= *q && self.hi >= *q
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &CertifiedReal) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn overlaps(&self, other: &CertifiedReal) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Ordering when the enclosures decide it; `None` when they overlap.
    /// Two identical points compare equal.
    pub fn compare(&self, other: &CertifiedReal) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && other.lo == other.hi && self.lo == other.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Decide `self < q`, `self > q`, or report overlap.
    pub fn compare_rational(&self, q: &Rational) -> Option<Ordering> {
        if self.hi < *q {
            Some(Ordering::Less)
        } else if self.lo > *q {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && self.lo == *q {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn hull(&self, other: &CertifiedReal) -> CertifiedReal {
        let lo = if self.lo <= other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi >= other.hi { self.hi.clone() } else { other.hi.clone() };
        CertifiedReal { lo, hi }
    }

    /// Enclosure of `min(x, y)` for `x ∈ self`, `y ∈ other`.
    pub fn min(&self, other: &CertifiedReal) -> CertifiedReal {
        let lo = if self.lo <= other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi <= other.hi { self.hi.clone() } else { other.hi.clone() };
        CertifiedReal { lo, hi }
    }

    /// Enclosure of `max(x, y)`.
    pub fn max(&self, other: &CertifiedReal) -> CertifiedReal {
        let lo = if self.lo >= other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi >= other.hi { self.hi.clone() } else { other.hi.clone() };
        CertifiedReal { lo, hi }
    }

    /// Intersection, if non-empty.
    pub fn intersect(&self, other: &CertifiedReal) -> Option<CertifiedReal> {
        let lo = if self.lo >= other.lo { self.lo.clone() } else { other.lo.clone() };
        let hi = if self.hi <= other.hi { self.hi.clone() } else { other.hi.clone() };
        if lo <= hi {
            Some(CertifiedReal { lo, hi })
        } else {
            None
        }
    }

    pub fn with_prec(&self, prec: u32) -> CertifiedReal {
        CertifiedReal {
            lo: round_to(prec, &self.lo, Round::Down),
            hi: round_to(prec, &self.hi, Round::Up),
        }
    }

    fn add_impl(&self, o: &CertifiedReal) -> CertifiedReal {
        let p = self.prec().max(o.prec());
        let mut lo = Float::with_val(p, &self.lo);
        lo.add_assign_round(&o.lo, Round::Down);
        let mut hi = Float::with_val(p, &self.hi);
        hi.add_assign_round(&o.hi, Round::Up);
        CertifiedReal { lo, hi }
    }

    fn sub_impl(&self, o: &CertifiedReal) -> CertifiedReal {
        let p = self.prec().max(o.prec());
        let mut lo = Float::with_val(p, &self.lo);
        lo.sub_assign_round(&o.hi, Round::Down);
        let mut hi = Float::with_val(p, &self.hi);
        hi.sub_assign_round(&o.lo, Round::Up);
        CertifiedReal { lo, hi }
    }

    fn mul_impl(&self, o: &CertifiedReal) -> CertifiedReal {
        let p = self.prec().max(o.prec());
        let prod = |a: &Float, b: &Float, r: Round| {
            let mut x = Float::with_val(p, a);
            x.mul_assign_round(b, r);
            x
        };
        // Nonnegative operands dominate this code base; take the short path.
        if self.lo >= 0 && o.lo >= 0 {
            return CertifiedReal {
                lo: prod(&self.lo, &o.lo, Round::Down),
                hi: prod(&self.hi, &o.hi, Round::Up),
            };
        }
        let pairs = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let d = prod(a, b, Round::Down);
            let u = prod(a, b, Round::Up);
            lo = Some(match lo {
                Some(l) if l <= d => l,
                _ => d,
            });
            hi = Some(match hi {
                Some(h) if h >= u => h,
                _ => u,
            });
        }
        CertifiedReal { lo: lo.unwrap(), hi: hi.unwrap() }
    }

    /// `1/self`; fails when the enclosure touches zero.
    pub fn recip(&self) -> Result<CertifiedReal> {
        if self.contains_zero() {
            return Err(Error::Domain("reciprocal of an interval containing 0".into()));
        }
        let p = self.prec();
        let mut lo = Float::with_val(p, 1);
        lo.div_assign_round(&self.hi, Round::Down);
        let mut hi = Float::with_val(p, 1);
        hi.div_assign_round(&self.lo, Round::Up);
        Ok(CertifiedReal { lo, hi })
    }

    pub fn checked_div(&self, o: &CertifiedReal) -> Result<CertifiedReal> {
        if o.contains_zero() {
            return Err(Error::Domain("division by an interval containing 0".into()));
        }
        let p = self.prec().max(o.prec());
        let q = |a: &Float, b: &Float, r: Round| {
            let mut x = Float::with_val(p, a);
            x.div_assign_round(b, r);
            x
        };
        if self.lo >= 0 && o.lo > 0 {
            return Ok(CertifiedReal {
                lo: q(&self.lo, &o.hi, Round::Down),
                hi: q(&self.hi, &o.lo, Round::Up),
            });
        }
        Ok(self.mul_impl(&o.recip()?.with_prec(p)))
    }

    /// `self^e` for `self > 0`, monotone in each argument on each orthant,
    /// so the extremes sit at the four corners.
    pub fn pow(&self, e: &CertifiedReal) -> Result<CertifiedReal> {
        if !(self.lo > 0) {
            return Err(Error::Domain("power of a non-positive base".into()));
        }
        let p = self.prec().max(e.prec());
        let corner = |b: &Float, x: &Float, r: Round| {
            let mut y = Float::with_val(p, b);
            y.pow_assign_round(x, r);
            y
        };
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for b in [&self.lo, &self.hi] {
            for x in [&e.lo, &e.hi] {
                let d = corner(b, x, Round::Down);
                let u = corner(b, x, Round::Up);
                lo = Some(match lo {
                    Some(l) if l <= d => l,
                    _ => d,
                });
                hi = Some(match hi {
                    Some(h) if h >= u => h,
                    _ => u,
                });
            }
        }
        Ok(CertifiedReal { lo: lo.unwrap(), hi: hi.unwrap() })
    }

    /// Integer power by repeated multiplication.
    pub fn powi(&self, n: u32) -> CertifiedReal {
        let mut acc = CertifiedReal::one(self.prec());
        for _ in 0..n {
            acc = acc.mul_impl(self);
        }
        acc
    }

    pub fn ln(&self) -> Result<CertifiedReal> {
        if !(self.lo > 0) {
            return Err(Error::Domain("logarithm of a non-positive value".into()));
        }
        let p = self.prec();
        let mut lo = Float::with_val(p, &self.lo);
        lo.ln_round(Round::Down);
        let mut hi = Float::with_val(p, &self.hi);
        hi.ln_round(Round::Up);
        Ok(CertifiedReal { lo, hi })
    }

    pub fn exp(&self) -> CertifiedReal {
        let p = self.prec();
        let mut lo = Float::with_val(p, &self.lo);
        lo.exp_round(Round::Down);
        let mut hi = Float::with_val(p, &self.hi);
        hi.exp_round(Round::Up);
        CertifiedReal { lo, hi }
    }

    pub fn sqrt(&self) -> Result<CertifiedReal> {
        if self.lo < 0 {
            return Err(Error::Domain("square root of a negative value".into()));
        }
        let p = self.prec();
        let mut lo = Float::with_val(p, &self.lo);
        lo.sqrt_round(Round::Down);
        let mut hi = Float::with_val(p, &self.hi);
        hi.sqrt_round(Round::Up);
        Ok(CertifiedReal { lo, hi })
    }

    /// Decimal strings with `lo` rounded down and `hi` rounded up.
    pub fn to_decimal_pair(&self) -> (String, String) {
        let digits = decimal_digits(self.prec());
        (
            float_to_decimal(&self.lo, digits, Round::Down),
            float_to_decimal(&self.hi, digits, Round::Up),
        )
    }
}

fn decimal_digits(prec: u32) -> usize {
    ((prec as f64) * std::f64::consts::LOG10_2).ceil() as usize + 1
}

fn float_to_decimal(x: &Float, digits: usize, round: Round) -> String {
    if x.is_zero() {
        return "0".into();
    }
    if x.is_infinite() {
        return if x.is_sign_negative() { "-inf".into() } else { "inf".into() };
    }
    x.to_string_radix_round(10, Some(digits), round)
}

/// `base^exp` with a rational base.
pub fn pow_certified(base: &Rational, exp: &CertifiedReal) -> Result<CertifiedReal> {
    if *base <= 0 {
        return Err(Error::Domain(format!("pow_certified base {base} is not positive")));
    }
    let p = exp.prec();
    if *base == 1 {
        return Ok(CertifiedReal::one(p));
    }
    CertifiedReal::from_rational(base, p).pow(exp)
}

impl fmt::Debug for CertifiedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = self.to_decimal_pair();
        write!(f, "[{lo}, {hi}]")
    }
}

impl fmt::Display for CertifiedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12}", self.mid_f64())
    }
}

impl Serialize for CertifiedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let (lo, hi) = self.to_decimal_pair();
        let mut st = s.serialize_struct("CertifiedReal", 2)?;
        st.serialize_field("lo", &lo)?;
        st.serialize_field("hi", &hi)?;
        st.end()
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $imp:ident) => {
        impl $tr<&CertifiedReal> for &CertifiedReal {
            type Output = CertifiedReal;
            fn $method(self, o: &CertifiedReal) -> CertifiedReal {
                self.$imp(o)
            }
        }
        impl $tr<CertifiedReal> for CertifiedReal {
            type Output = CertifiedReal;
            fn $method(self, o: CertifiedReal) -> CertifiedReal {
                (&self).$imp(&o)
            }
        }
        impl $tr<&CertifiedReal> for CertifiedReal {
            type Output = CertifiedReal;
            fn $method(self, o: &CertifiedReal) -> CertifiedReal {
                (&self).$imp(o)
            }
        }
        impl $tr<CertifiedReal> for &CertifiedReal {
            type Output = CertifiedReal;
            fn $method(self, o: CertifiedReal) -> CertifiedReal {
                self.$imp(&o)
            }
        }
    };
}

impl CertifiedReal {
    fn div_total(&self, o: &CertifiedReal) -> CertifiedReal {
        self.checked_div(o)
            .unwrap_or_else(|_| CertifiedReal::entire(self.prec().max(o.prec())))
    }
}

forward_binop!(Add, add, add_impl);
forward_binop!(Sub, sub, sub_impl);
forward_binop!(Mul, mul, mul_impl);
forward_binop!(Div, div, div_total);

impl Neg for CertifiedReal {
    type Output = CertifiedReal;
    fn neg(self) -> CertifiedReal {
        CertifiedReal { lo: -self.hi, hi: -self.lo }
    }
}

impl Neg for &CertifiedReal {
    type Output = CertifiedReal;
    fn neg(self) -> CertifiedReal {
        CertifiedReal { lo: Float::with_val(self.hi.prec(), -&self.hi), hi: Float::with_val(self.lo.prec(), -&self.lo) }
    }
}

impl num_traits::Zero for CertifiedReal {
    fn zero() -> Self {
        CertifiedReal::zero(64)
    }
    fn is_zero(&self) -> bool {
        self.lo.is_zero() && self.hi.is_zero()
    }
}

impl num_traits::One for CertifiedReal {
    fn one() -> Self {
        CertifiedReal::one(64)
    }
}
