//! Certified bisection for strictly decreasing functions.

use std::cmp::Ordering;

use rug::Float;

use super::certified::{CertifiedReal, DEFAULT_PRECISION, MAX_PRECISION};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct RootOptions {
    pub tol: f64,
    pub prec: u32,
    pub max_prec: u32,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { tol: 1e-12, prec: DEFAULT_PRECISION, max_prec: MAX_PRECISION, max_iter: 400 }
    }
}

/// Bits needed to hold `x` exactly.
fn needed_bits(x: &Float) -> u32 {
    match x.get_significand() {
        Some(sig) if sig.cmp0() != std::cmp::Ordering::Equal => {
            let sig = sig.as_abs().clone();
            sig.significant_bits() - sig.find_one(0).unwrap_or(0)
        }
        _ => 1,
    }
}

/// Sign of `f` at the exact point `x`, escalating precision while the
/// enclosure straddles zero.
fn sign_at<F>(f: &mut F, x: &Float, prec: &mut u32, max_prec: u32) -> Result<Option<Ordering>>
where
    F: FnMut(&CertifiedReal) -> Result<CertifiedReal>,
{
    loop {
        let point = CertifiedReal::point(Float::with_val((*prec).max(needed_bits(x)), x));
        let v = f(&point)?;
        if v.is_positive() {
            return Ok(Some(Ordering::Greater));
        }
        if v.is_negative() {
            return Ok(Some(Ordering::Less));
        }
        if *prec >= max_prec {
            return Ok(None);
        }
        *prec = (*prec * 2).min(max_prec);
    }
}

/// Find the root of a strictly decreasing `f` on `bracket`, returning an
/// interval `[a, b]` with `f(a) > 0 > f(b)` and `b - a <= tol`.
///
/// `f` receives an exact point carrying the working precision and must
/// return a certified enclosure of its value there.
pub fn solve_monotone_root<F>(mut f: F, bracket: (f64, f64), opts: &RootOptions) -> Result<CertifiedReal>
where
    F: FnMut(&CertifiedReal) -> Result<CertifiedReal>,
{
    let mut prec = opts.prec;
    let work = opts.max_prec + 64;
    let mut lo = Float::with_val(work, bracket.0);
    let mut hi = Float::with_val(work, bracket.1);
    if lo >= hi {
        return Err(Error::Domain("empty bracket".into()));
    }
    match sign_at(&mut f, &lo, &mut prec, opts.max_prec)? {
        Some(Ordering::Greater) => {}
        Some(_) => return Err(Error::NoSignChange),
        None => {
            return Err(Error::Undecidable { bits: prec, what: "sign at lower bracket end".into() })
        }
    }
    match sign_at(&mut f, &hi, &mut prec, opts.max_prec)? {
        Some(Ordering::Less) => {}
        Some(_) => return Err(Error::NoSignChange),
        None => {
            return Err(Error::Undecidable { bits: prec, what: "sign at upper bracket end".into() })
        }
    }
    let tol = Float::with_val(work, opts.tol);
    for _ in 0..opts.max_iter {
        let width = Float::with_val(work, &hi - &lo);
        if width <= tol {
            return Ok(CertifiedReal::new(
                Float::with_val(prec.max(needed_bits(&lo)), &lo),
                Float::with_val(prec.max(needed_bits(&hi)), &hi),
            ));
        }
        let mut decided = false;
        // Midpoint first; off-centre splits if the midpoint stays undecided.
        for frac in [0.5f64, 0.375, 0.625] {
            let x = Float::with_val(work, &lo + Float::with_val(work, &width * frac));
            match sign_at(&mut f, &x, &mut prec, opts.max_prec)? {
                Some(Ordering::Greater) => {
                    lo = x;
                    decided = true;
                }
                Some(Ordering::Less) => {
                    hi = x;
                    decided = true;
                }
                Some(Ordering::Equal) => unreachable!(),
                None => continue,
            }
            break;
        }
        if !decided {
            return Err(Error::Undecidable { bits: prec, what: "bisection sign".into() });
        }
    }
    Err(Error::NoConvergence { best: CertifiedReal::new(lo, hi) })
}
