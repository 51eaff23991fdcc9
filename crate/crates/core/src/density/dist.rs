//! Distance from a rational point to the attractor.

use rug::Rational;

use crate::numerics::CertifiedReal;
use crate::tree::{TreeIsland, TypedTree};

#[derive(Clone, Debug)]
pub struct Distance {
    /// Exact bracket `lo ≤ dist(x, K) ≤ hi`.
    pub lo: Rational,
    pub hi: Rational,
    /// A point of `K` at distance `hi` from `x`.
    pub nearest: Rational,
}

impl Distance {
    pub fn enclosure(&self, prec: u32) -> CertifiedReal {
        let lo = CertifiedReal::from_rational(&self.lo, prec);
        let hi = CertifiedReal::from_rational(&self.hi, prec);
        lo.hull(&hi)
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }
}

fn gap_to(x: &Rational, isl: &TreeIsland) -> Rational {
    let r = isl.right();
    if *x < isl.left {
        Rational::from(&isl.left - x)
    } else if *x > r {
        Rational::from(x - &r)
    } else {
        Rational::new()
    }
}

/// Bracket `dist(x, K)` to width `eps` by descending into the islands that
/// may still hold the nearest point. Island endpoints lie in `K`, which
/// gives the upper bound; the union of islands covers `K`, which gives the
/// lower bound.
pub fn dist_to_attractor(tree: &TypedTree, x: &Rational, eps: &Rational, max_depth: usize) -> Distance {
    let mut nodes = vec![tree.root(0)];
    let mut hi: Option<(Rational, Rational)> = None;
    let offer = |p: Rational, hi: &mut Option<(Rational, Rational)>| {
        let d = Rational::from(x - &p).abs();
        let better = match hi {
            Some((h, q)) => d < *h || (d == *h && p < *q),
            None => true,
        };
        if better {
            *hi = Some((d, p));
        }
    };
    for n in &nodes {
        offer(n.left.clone(), &mut hi);
        offer(n.right(), &mut hi);
    }
    for depth in 0..=max_depth {
        let (h, _) = hi.clone().unwrap();
        nodes.retain(|n| gap_to(x, n) <= h);
        let lo = nodes.iter().map(|n| gap_to(x, n)).min().unwrap_or_else(|| h.clone());
        if Rational::from(&h - &lo) <= *eps || depth == max_depth {
            let (h, p) = hi.unwrap();
            return Distance { lo, hi: h, nearest: p };
        }
        let next: Vec<TreeIsland> = nodes.iter().flat_map(|n| tree.child_islands(n).collect::<Vec<_>>()).collect();
        for n in &next {
            offer(n.left.clone(), &mut hi);
            offer(n.right(), &mut hi);
        }
        nodes = next;
    }
    unreachable!()
}
