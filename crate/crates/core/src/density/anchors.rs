//! Edge anchors of each overlap type and the commensurability test for the
//! outer ratios.

use rug::{Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::{AffineMap, IfsSpec};
use crate::numerics::{format_rational, rational_pow, serde_rational};
use crate::typing::TypeTable;

#[derive(Clone, Debug, Serialize)]
pub struct TypeAnchors {
    #[serde(rename = "type")]
    pub type_id: usize,
    pub v0: AffineMap,
    pub v1: AffineMap,
    pub i0_len: u32,
    pub i1_len: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeAnchors {
    pub per_type: Vec<TypeAnchors>,
    #[serde(with = "serde_rational")]
    pub eta1: Rational,
    #[serde(with = "serde_rational")]
    pub eta2: Rational,
    #[serde(with = "serde_rational")]
    pub eta: Rational,
}

/// Smallest `k ≥ 1` with `ratio · ρ^k < room`.
fn burrow_depth(ratio: &Rational, rho: &Rational, room: &Rational) -> u32 {
    let mut k = 1;
    let mut len = Rational::from(ratio * rho);
    while len >= *room {
        len *= rho;
        k += 1;
    }
    k
}

pub fn edge_anchors(spec: &IfsSpec, table: &TypeTable) -> Result<EdgeAnchors> {
    let rho1 = spec.rho_first();
    let rhom = spec.rho_last();
    let mut per_type = Vec::new();
    let mut eta1: Option<Rational> = None;
    let mut eta2: Option<Rational> = None;
    let min = |acc: Option<Rational>, x: Rational| Some(match acc {
        Some(a) if a <= x => a,
        _ => x,
    });
    for t in &table.types {
        let rep = &t.representative;
        let vs = &rep.vertices;
        let culprit = || Error::AssumptionA { left: format_rational(&rep.left), right: format_rational(&rep.right) };
        let firsts: Vec<&AffineMap> = vs.iter().filter(|v| v.offset == rep.left).collect();
        let lasts: Vec<&AffineMap> = vs.iter().filter(|v| v.right() == rep.right).collect();
        if firsts.len() != 1 || lasts.len() != 1 {
            return Err(culprit());
        }
        let (v0, v1) = (firsts[0].clone(), lasts[0].clone());
        let (i0_len, i1_len) = if vs.len() == 1 {
            (0, 0)
        } else {
            let next_left = vs.iter().filter(|v| **v != v0).map(|v| v.offset.clone()).min().unwrap();
            let prev_right = vs.iter().filter(|v| **v != v1).map(|v| v.right()).max().unwrap();
            let room0 = Rational::from(&next_left - &rep.left);
            let room1 = Rational::from(&rep.right - &prev_right);
            if room0 <= 0 || room1 <= 0 {
                return Err(culprit());
            }
            (burrow_depth(&v0.ratio, rho1, &room0), burrow_depth(&v1.ratio, rhom, &room1))
        };
        let len = Rational::from(&rep.right - &rep.left);
        eta1 = min(eta1, Rational::from(&v0.ratio / &len));
        eta1 = min(eta1, Rational::from(&v1.ratio / &len));
        eta2 = min(eta2, rational_pow(rho1, i0_len));
        eta2 = min(eta2, rational_pow(rhom, i1_len));
        per_type.push(TypeAnchors { type_id: t.id, v0, v1, i0_len, i1_len });
    }
    let eta1 = eta1.unwrap_or_else(|| Rational::from(1));
    let eta2 = eta2.unwrap_or_else(|| Rational::from(1));
    let eta = Rational::from(&eta1 * &eta2);
    Ok(EdgeAnchors { per_type, eta1, eta2, eta })
}

/// Pairwise coprime factors whose products give every input.
fn coprime_base(nums: &[Integer]) -> Vec<Integer> {
    let mut base: Vec<Integer> = nums.iter().filter(|n| **n > 1).cloned().collect();
    loop {
        base.sort();
        base.dedup();
        let mut split = None;
        'outer: for i in 0..base.len() {
            for j in i + 1..base.len() {
                let g = Integer::from(base[i].gcd_ref(&base[j]));
                if g > 1 {
                    split = Some((i, j, g));
                    break 'outer;
                }
            }
        }
        let Some((i, j, g)) = split else { return base };
        let a = Integer::from(&base[i] / &g);
        let b = Integer::from(&base[j] / &g);
        base.remove(j);
        base.remove(i);
        base.extend([a, b, g].into_iter().filter(|x| *x > 1));
    }
}

fn exponents(n: &Integer, base: &[Integer]) -> Vec<i64> {
    let mut n = n.clone();
    base.iter()
        .map(|p| {
            let mut e = 0;
            while n.is_divisible(p) {
                n /= p;
                e += 1;
            }
            e
        })
        .collect()
}

/// Smallest positive `(n1, nm)` with `rho1^n1 = rhom^nm`, if any.
pub fn commensurability(rho1: &Rational, rhom: &Rational) -> Option<(u64, u64)> {
    let parts = [rho1.numer().clone(), rho1.denom().clone(), rhom.numer().clone(), rhom.denom().clone()];
    let base = coprime_base(&parts);
    let vec_of = |q: &Rational| -> Vec<i64> {
        let n = exponents(q.numer(), &base);
        let d = exponents(q.denom(), &base);
        n.iter().zip(&d).map(|(a, b)| a - b).collect()
    };
    let v1 = vec_of(rho1);
    let vm = vec_of(rhom);
    let i = v1.iter().position(|&x| x != 0)?;
    if vm[i] == 0 || (v1[i] > 0) != (vm[i] > 0) {
        return None;
    }
    let g = gcd(v1[i].unsigned_abs(), vm[i].unsigned_abs());
    let n1 = vm[i].unsigned_abs() / g;
    let nm = v1[i].unsigned_abs() / g;
    let ok = v1.iter().zip(&vm).all(|(a, b)| *a as i128 * n1 as i128 == *b as i128 * nm as i128);
    ok.then_some((n1, nm))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
