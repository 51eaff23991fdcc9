//! Exact rationals, certified intervals and monotone root finding.

mod certified;
mod rational;
mod real;
mod root;

pub use certified::{pow_certified, CertifiedReal, DEFAULT_PRECISION, MAX_PRECISION};
pub use rational::{
    format_rational, max_rational, min_rational, parse_rational, rational_pow, rational_to_f64,
    serde_rational, serde_rational_opt, serde_rational_vec,
};
pub use real::Real;
pub use root::{solve_monotone_root, RootOptions};
pub use rug::{Float, Integer, Rational};
