//! Scalar abstraction shared by the certified and the fast (f64) evaluators.

use std::fmt::Debug;

use std::ops::{Add, Div, Mul, Sub};

use num_traits::{One, Zero};
use rug::Rational;

use super::certified::{pow_certified, CertifiedReal};

/// The operations the measure and density code needs from a scalar.
pub trait Real:
    Clone + Debug + Send + Sync + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    fn from_rational(q: &Rational, prec: u32) -> Self;

    /// `base^exp` for a positive rational base.
    fn pow_rational(base: &Rational, exp: &Self) -> Self;

    /// `self^exp` for `self > 0`.
    fn powr(&self, exp: &Self) -> Self;

    fn to_f64(&self) -> f64;

    fn min_r(&self, other: &Self) -> Self;

    fn max_r(&self, other: &Self) -> Self;
}

impl Real for f64 {
    fn from_rational(q: &Rational, _prec: u32) -> Self {
        q.to_f64()
    }

    fn pow_rational(base: &Rational, exp: &Self) -> Self {
        base.to_f64().powf(*exp)
    }

    fn powr(&self, exp: &Self) -> Self {
        self.powf(*exp)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn min_r(&self, other: &Self) -> Self {
        self.min(*other)
    }

    fn max_r(&self, other: &Self) -> Self {
        self.max(*other)
    }
}

impl Real for CertifiedReal {
    fn from_rational(q: &Rational, prec: u32) -> Self {
        CertifiedReal::from_rational(q, prec)
    }

    fn pow_rational(base: &Rational, exp: &Self) -> Self {
        pow_certified(base, exp).expect("pow_rational requires a positive base")
    }

    fn powr(&self, exp: &Self) -> Self {
        self.pow(exp).expect("powr requires a positive base")
    }

    fn to_f64(&self) -> f64 {
        self.mid_f64()
    }

    fn min_r(&self, other: &Self) -> Self {
        self.min(other)
    }

    fn max_r(&self, other: &Self) -> Self {
        self.max(other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic_density<R: Real>(mass_len: &Rational, len: &Rational, alpha: &R) -> R {
        R::pow_rational(mass_len, alpha) / R::pow_rational(len, alpha)
    }

    #[test]
    fn f64_and_certified_agree() {
        let a = Rational::from((1, 4));
        let l = Rational::from((1, 2));
        let fast = generic_density(&a, &l, &0.6309);
        let cert = generic_density(&a, &l, &CertifiedReal::from_f64(0.6309, 128));
        assert!(cert.contains_f64(fast) || (cert.mid_f64() - fast).abs() < 1e-15);
    }
}
