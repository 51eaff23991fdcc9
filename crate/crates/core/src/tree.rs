//! Islands generated lazily from the type table instead of from vertex maps.
//!
//! Generation `k` of the covering is the set of depth-`k` descendants of the
//! root type, so statistics and sub-frames at depths far beyond what the
//! vertex-level construction can hold are available exactly.

use rug::Rational;

use crate::error::{Error, Result};
use crate::generation::FrameStats;
use crate::typing::{ChildDescriptor, TypeTable};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeIsland {
    pub type_id: usize,
    pub left: Rational,
    pub len: Rational,
}

impl TreeIsland {
    pub fn right(&self) -> Rational {
        Rational::from(&self.left + &self.len)
    }
}

/// Geometry of the depth-`d` descendants of a unit island of one type.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeStats {
    pub first: Rational,
    pub last: Rational,
    pub min: Rational,
    pub max: Rational,
    /// Smallest gap between consecutive descendants (zero when touching).
    pub gap_min: Option<Rational>,
    pub gap_min_pos: Option<Rational>,
    pub count: f64,
}

fn min_opt(a: Option<Rational>, b: Option<Rational>) -> Option<Rational> {
    match (a, b) {
        (Some(a), Some(b)) => Some(if a <= b { a } else { b }),
        (a, None) => a,
        (None, b) => b,
    }
}

#[derive(Clone, Debug)]
pub struct TypedTree {
    pub children: Vec<Vec<ChildDescriptor>>,
}

impl TypedTree {
    pub fn new(table: &TypeTable) -> Self {
        TypedTree { children: table.types.iter().map(|t| t.children.clone()).collect() }
    }

    pub fn q(&self) -> usize {
        self.children.len()
    }

    /// The same structure reflected through `x ↦ 1 − x`.
    pub fn mirrored(&self) -> Self {
        let one = Rational::from(1);
        let children = self
            .children
            .iter()
            .map(|kids| {
                kids.iter()
                    .rev()
                    .map(|c| ChildDescriptor {
                        type_id: c.type_id,
                        offset: Rational::from(&one - &c.offset) - &c.ratio,
                        ratio: c.ratio.clone(),
                    })
                    .collect()
            })
            .collect();
        TypedTree { children }
    }

    pub fn child_islands(&self, node: &TreeIsland) -> impl Iterator<Item = TreeIsland> + '_ {
        let left = node.left.clone();
        let len = node.len.clone();
        self.children[node.type_id].iter().map(move |c| TreeIsland {
            type_id: c.type_id,
            left: Rational::from(&c.offset * &len) + &left,
            len: Rational::from(&c.ratio * &len),
        })
    }

    pub fn root(&self, type_id: usize) -> TreeIsland {
        TreeIsland { type_id, left: Rational::from(0), len: Rational::from(1) }
    }

    /// All depth-`depth` descendants of a unit island of `root_type`.
    pub fn materialize(&self, root_type: usize, depth: usize) -> Vec<TreeIsland> {
        let mut level = vec![self.root(root_type)];
        for _ in 0..depth {
            level = level.iter().flat_map(|n| self.child_islands(n).collect::<Vec<_>>()).collect();
        }
        level
    }

    /// Maximal tree islands inside `[x, y]`. Fails when an endpoint is not a
    /// boundary point of some generation up to `max_depth`.
    pub fn decompose(&self, x: &Rational, y: &Rational, max_depth: usize) -> Result<Vec<TreeIsland>> {
        self.decompose_from(0, x, y, max_depth)
    }

    /// As [`TypedTree::decompose`], inside a unit island of `root_type`.
    pub fn decompose_from(&self, root_type: usize, x: &Rational, y: &Rational, max_depth: usize) -> Result<Vec<TreeIsland>> {
        let mut out = Vec::new();
        self.decompose_into(&self.root(root_type), x, y, 0, max_depth, &mut out)?;
        Ok(out)
    }

    /// Follow child indices down from a unit island of `root_type`.
    pub fn follow(&self, root_type: usize, path: &[u16]) -> TreeIsland {
        let mut node = self.root(root_type);
        for &i in path {
            node = self.child_islands(&node).nth(i as usize).expect("path index in range");
        }
        node
    }

    fn decompose_into(
        &self,
        node: &TreeIsland,
        x: &Rational,
        y: &Rational,
        depth: usize,
        max_depth: usize,
        out: &mut Vec<TreeIsland>,
    ) -> Result<()> {
        let right = node.right();
        if right <= *x || node.left >= *y {
            return Ok(());
        }
        if *x <= node.left && right <= *y {
            out.push(node.clone());
            return Ok(());
        }
        if depth >= max_depth {
            let culprit = if node.left < *x { x } else { y };
            return Err(Error::NotFieldPoint(crate::numerics::format_rational(culprit)));
        }
        for c in self.child_islands(node) {
            self.decompose_into(&c, x, y, depth + 1, max_depth, out)?;
        }
        Ok(())
    }
}

/// Per-type statistics by depth, extended on demand.
#[derive(Clone, Debug)]
pub struct StatsLadder {
    levels: Vec<Vec<NodeStats>>,
}

impl StatsLadder {
    pub fn new(tree: &TypedTree) -> Self {
        let one = Rational::from(1);
        let base = NodeStats {
            first: one.clone(),
            last: one.clone(),
            min: one.clone(),
            max: one,
            gap_min: None,
            gap_min_pos: None,
            count: 1.0,
        };
        StatsLadder { levels: vec![vec![base; tree.q()]] }
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn extend_to(&mut self, tree: &TypedTree, depth: usize) {
        while self.levels.len() <= depth {
            let prev = self.levels.last().unwrap();
            let next = tree.children.iter().map(|kids| Self::combine(kids, prev)).collect();
            self.levels.push(next);
        }
    }

    fn combine(kids: &[ChildDescriptor], prev: &[NodeStats]) -> NodeStats {
        let f = &kids[0];
        let l = kids.last().unwrap();
        let mut min: Option<Rational> = None;
        let mut max: Option<Rational> = None;
        let mut gap_min: Option<Rational> = None;
        let mut gap_min_pos: Option<Rational> = None;
        let mut count = 0.0;
        for (i, c) in kids.iter().enumerate() {
            let s = &prev[c.type_id];
            let lo = Rational::from(&c.ratio * &s.min);
            let hi = Rational::from(&c.ratio * &s.max);
            min = min_opt(min, Some(lo));
            max = Some(match max {
                Some(m) if m >= hi => m,
                _ => hi,
            });
            gap_min = min_opt(gap_min, s.gap_min.as_ref().map(|g| Rational::from(&c.ratio * g)));
            gap_min_pos = min_opt(gap_min_pos, s.gap_min_pos.as_ref().map(|g| Rational::from(&c.ratio * g)));
            if let Some(n) = kids.get(i + 1) {
                let gap = Rational::from(&n.offset - &c.offset) - &c.ratio;
                if gap > 0 {
                    gap_min_pos = min_opt(gap_min_pos, Some(gap.clone()));
                }
                gap_min = min_opt(gap_min, Some(gap));
            }
            count += s.count;
        }
        NodeStats {
            first: Rational::from(&f.ratio * &prev[f.type_id].first),
            last: Rational::from(&l.ratio * &prev[l.type_id].last),
            min: min.unwrap(),
            max: max.unwrap(),
            gap_min,
            gap_min_pos,
            count,
        }
    }

    pub fn get(&self, depth: usize, type_id: usize) -> &NodeStats {
        &self.levels[depth][type_id]
    }

    /// Frame statistics of generation `k` (depth `k` below the root).
    pub fn frame_stats(&mut self, tree: &TypedTree, k: usize) -> FrameStats {
        self.extend_to(tree, k);
        let s = &self.levels[k][0];
        FrameStats {
            beta_first: s.first.clone(),
            beta_last: s.last.clone(),
            beta_min: s.min.clone(),
            beta_max: s.max.clone(),
            gamma_min: s.gap_min.clone(),
            gamma_min_pos: s.gap_min_pos.clone(),
            island_count: s.count.min(usize::MAX as f64) as usize,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::{build_frame, frame_stats};
    use crate::ifs::parse_spec;
    use crate::typing::classify_types;

    const LAMBDA_NINTH: &str =
        r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/9","b":"8/27"},{"rho":"1/3","b":"2/3"}],"scheme":"lambda"}"#;
    const FOUR_QUARTERS: &str = r#"{"maps":[{"rho":"1/4","b":"0"},{"rho":"1/4","b":"1/4"},{"rho":"1/4","b":"3/8"},{"rho":"1/4","b":"3/4"}]}"#;

    #[test]
    fn tree_reproduces_frames() {
        for text in [LAMBDA_NINTH, FOUR_QUARTERS] {
            let spec = parse_spec(text).unwrap();
            let table = classify_types(&spec, 12).unwrap();
            let tree = TypedTree::new(&table);
            let mut ladder = StatsLadder::new(&tree);
            for k in 0..=5 {
                let frame = build_frame(&spec, k).unwrap();
                let islands = tree.materialize(0, k);
                assert_eq!(islands.len(), frame.islands.len());
                for (a, b) in islands.iter().zip(&frame.islands) {
                    assert_eq!(a.left, b.left);
                    assert_eq!(a.right(), b.right);
                }
                assert_eq!(ladder.frame_stats(&tree, k), frame_stats(&frame));
            }
        }
    }

    #[test]
    fn mirror_reflects() {
        let spec = parse_spec(FOUR_QUARTERS).unwrap();
        let tree = TypedTree::new(&classify_types(&spec, 12).unwrap());
        let m = tree.mirrored();
        let a = tree.materialize(0, 3);
        let b = m.materialize(0, 3);
        for (x, y) in a.iter().zip(b.iter().rev()) {
            assert_eq!(x.type_id, y.type_id);
            assert_eq!(Rational::from(1) - x.right(), y.left);
        }
    }

    #[test]
    fn decompose_field_interval() {
        let spec = parse_spec(FOUR_QUARTERS).unwrap();
        let tree = TypedTree::new(&classify_types(&spec, 12).unwrap());
        let parts = tree.decompose(&Rational::from((1, 4)), &Rational::from(1), 6).unwrap();
        let total: Rational = parts.iter().fold(Rational::new(), |acc, p| acc + &p.len);
        // [1/4, 5/8] and [3/4, 1].
        assert_eq!(parts.len(), 2);
        assert_eq!(total, Rational::from((5, 8)));
        assert!(tree.decompose(&Rational::from((1, 3)), &Rational::from(1), 6).is_err());
    }
}
