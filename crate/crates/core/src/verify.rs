//! Checks of the two structural assumptions, and an unpruned oracle for the
//! density search.

use rug::Rational;
use serde::Serialize;

use crate::density::{dist_to_attractor, DensityWitness, Sense};
use crate::error::{Error, Result};
use crate::generation::GenerationFrame;
use crate::ifs::IfsSpec;
use crate::measure::{CertifiedModel, FramePrefix};
use crate::numerics::{format_rational, CertifiedReal};
use crate::tree::{TreeIsland, TypedTree};
use crate::typing::TypeTable;

pub const DEFAULT_B_DEPTH: usize = 8;
pub const BRUTE_FORCE_ENDPOINTS: usize = 5000;
/// Islands per generation beyond which the Assumption B scan gives up.
const B_ISLAND_CAP: usize = 1 << 21;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum AStatus {
    Holds,
    Violated { island: [String; 2], pair: [[String; 2]; 2] },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    First,
    Last,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BStatus {
    VerifiedToDepth {
        depth: usize,
        #[serde(with = "crate::numerics::serde_rational")]
        residual_length: Rational,
    },
    ViolationFound {
        #[serde(with = "crate::numerics::serde_rational")]
        point: Rational,
        edge: Edge,
        generation: usize,
    },
    Inconclusive {
        depth: usize,
    },
}

impl BStatus {
    pub fn is_verified(&self) -> bool {
        matches!(self, BStatus::VerifiedToDepth { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub a: AStatus,
    pub b: BStatus,
}

fn pair(l: &Rational, r: &Rational) -> [String; 2] {
    [format_rational(l), format_rational(r)]
}

/// Exact containment test between the constitutive intervals of every type
/// representative. Every island is similar to one of them.
pub fn check_assumption_a(table: &TypeTable) -> AStatus {
    for t in &table.types {
        let rep = &t.representative;
        for (i, u) in rep.vertices.iter().enumerate() {
            for v in &rep.vertices[i + 1..] {
                let (ul, ur) = (u.offset.clone(), u.right());
                let (vl, vr) = (v.offset.clone(), v.right());
                let nested = (ul <= vl && vr <= ur) || (vl <= ul && ur <= vr);
                if nested {
                    return AStatus::Violated {
                        island: pair(&rep.left, &rep.right),
                        pair: [pair(&ul, &ur), pair(&vl, &vr)],
                    };
                }
            }
        }
    }
    AStatus::Holds
}

/// Merge sorted closed intervals into disjoint ones.
fn union(mut iv: Vec<(Rational, Rational)>) -> Vec<(Rational, Rational)> {
    iv.sort();
    let mut out: Vec<(Rational, Rational)> = Vec::with_capacity(iv.len());
    for (l, r) in iv {
        match out.last_mut() {
            Some(last) if l <= last.1 => {
                if r > last.1 {
                    last.1 = r;
                }
            }
            _ => out.push((l, r)),
        }
    }
    out
}

/// Length of `a \ b` for disjoint sorted unions.
fn difference_length(a: &[(Rational, Rational)], b: &[(Rational, Rational)]) -> Rational {
    let mut total = Rational::new();
    let mut j = 0;
    for (l, r) in a {
        let mut cur = l.clone();
        while j < b.len() && b[j].1 <= cur {
            j += 1;
        }
        let mut k = j;
        while cur < *r {
            if k >= b.len() || b[k].0 >= *r {
                total += Rational::from(r - &cur);
                break;
            }
            if b[k].0 > cur {
                total += Rational::from(&b[k].0 - &cur);
            }
            cur = cur.max(b[k].1.clone());
            k += 1;
        }
    }
    total
}

fn covered(x: &Rational, cover: &[(Rational, Rational)]) -> bool {
    let i = cover.partition_point(|(l, _)| l <= x);
    i > 0 && *x <= cover[i - 1].1
}

enum SideScan {
    Residuals(Vec<Rational>),
    Violation(Rational, usize),
    GaveUp(usize),
}

/// Scan one edge on a tree whose first map has ratio `rho`: compare the
/// generation-`k` islands inside `[0, ρ]` against the image under `x ↦ ρx`
/// of generation `k−1`, which covers the image of the attractor.
fn scan_edge(tree: &TypedTree, rho: &Rational, depth: usize) -> SideScan {
    let zero = Rational::new();
    let mut prev: Vec<TreeIsland> = vec![tree.root(0)];
    let mut residuals = Vec::new();
    for k in 1..=depth {
        let next: Vec<TreeIsland> = prev.iter().flat_map(|n| tree.child_islands(n).collect::<Vec<_>>()).collect();
        if next.len() > B_ISLAND_CAP {
            return SideScan::GaveUp(k - 1);
        }
        let here = union(
            next.iter()
                .filter(|n| n.left < *rho)
                .map(|n| (n.left.clone(), n.right().min(rho.clone())))
                .collect(),
        );
        let image = union(prev.iter().map(|n| (Rational::from(&n.left * rho), Rational::from(&n.right() * rho))).collect());
        // Endpoints of islands lie in K; one outside the image cover is outside ρK.
        for n in &next {
            for x in [n.left.clone(), n.right()] {
                if x >= zero && x <= *rho && !covered(&x, &image) {
                    return SideScan::Violation(x, k);
                }
            }
        }
        residuals.push(difference_length(&here, &image));
        prev = next;
    }
    SideScan::Residuals(residuals)
}

/// Finite-depth check of `S₁([0,1]) ∩ K = S₁K` and its mirror image.
pub fn check_assumption_b(spec: &IfsSpec, tree: &TypedTree, depth: usize) -> BStatus {
    let maps = &spec.maps;
    let first = &maps[0];
    let last = &maps[maps.len() - 1];
    let isolated = |m: &crate::ifs::AffineMap| {
        maps.iter().filter(|o| *o != m).all(|o| o.right() <= m.offset || m.right() <= o.offset)
    };
    if isolated(first) && isolated(last) {
        return BStatus::VerifiedToDepth { depth: 1, residual_length: Rational::new() };
    }
    let mirror = tree.mirrored();
    let mut worst = Rational::new();
    let mut reached = depth;
    for (edge, t, rho) in [(Edge::First, tree, spec.rho_first()), (Edge::Last, &mirror, spec.rho_last())] {
        match scan_edge(t, rho, depth) {
            SideScan::Violation(x, generation) => {
                let point = match edge {
                    Edge::First => x,
                    Edge::Last => Rational::from(1) - x,
                };
                return BStatus::ViolationFound { point, edge, generation };
            }
            SideScan::GaveUp(k) => reached = reached.min(k),
            SideScan::Residuals(r) => {
                let shrinking = r.windows(2).all(|w| w[1] < w[0] || w[1] == 0);
                if !shrinking {
                    reached = 0;
                }
                if let Some(l) = r.last() {
                    if *l > worst {
                        worst = l.clone();
                    }
                }
            }
        }
    }
    if reached < depth {
        BStatus::Inconclusive { depth: reached }
    } else {
        BStatus::VerifiedToDepth { depth, residual_length: worst }
    }
}

/// Extremal density over the field intervals of one frame by a plain double
/// loop. For `Min`, only intervals centred within `dist_tol` of the
/// attractor are considered.
pub fn brute_force_extremum(
    model: &CertifiedModel,
    tree: &TypedTree,
    frame: &GenerationFrame,
    sense: Sense,
    dist_tol: &Rational,
) -> Result<Option<(CertifiedReal, DensityWitness)>> {
    let n = frame.islands.len();
    if 2 * n > BRUTE_FORCE_ENDPOINTS {
        return Err(Error::SizeGuard(format!("{} endpoints exceed {}", 2 * n, BRUTE_FORCE_ENDPOINTS)));
    }
    let prefix = FramePrefix::new(model, frame)?;
    let mut best: Option<(CertifiedReal, usize, usize)> = None;
    for i in 0..n {
        for j in i..n {
            let (x, y) = (&frame.islands[i].left, &frame.islands[j].right);
            if sense == Sense::Min {
                let mid = Rational::from(x + y) / 2;
                let d = dist_to_attractor(tree, &mid, dist_tol, 200);
                if d.hi > *dist_tol {
                    continue;
                }
            }
            let len = CertifiedReal::from_rational(&Rational::from(y - x), model.prec);
            let v = prefix.measure(x, y)?.checked_div(&len.pow(&model.alpha)?)?;
            let better = match &best {
                None => true,
                Some((b, _, _)) => match sense {
                    Sense::Max => v.mid_f64() > b.mid_f64(),
                    Sense::Min => v.mid_f64() < b.mid_f64(),
                },
            };
            if better {
                best = Some((v, i, j));
            }
        }
    }
    Ok(best.map(|(v, i, j)| {
        let parts = frame.islands[i..=j].iter().map(|s| (s.type_id.expect("typed frame"), s.length())).collect();
        let w = DensityWitness::from_pairs(model, frame.islands[i].left.clone(), frame.islands[j].right.clone(), parts);
        (v, w)
    }))
}
