//! Branch-and-bound over the typed tree.
//!
//! Bounds are evaluated in f64 and only used for pruning. Every leaf whose
//! f64 value lies within a relative margin of the final optimum is kept and
//! re-evaluated exactly, so the result and its witness do not depend on the
//! order in which workers visit the tree.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use rug::Rational;

use super::DensityWitness;
use crate::error::{Error, Result};
use crate::measure::CertifiedModel;
use crate::numerics::{rational_to_f64, CertifiedReal};
use crate::tree::{StatsLadder, TreeIsland, TypedTree};

/// Relative slack between the f64 estimate and the pruning threshold.
const MARGIN: f64 = 1e-9;
const FRONTIER: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Debug, Default)]
pub struct SearchOptions {
    /// Worker threads; `None` reads `GFTC_WORKERS` or uses all cores.
    pub workers: Option<usize>,
    pub deadline: Option<Instant>,
}

impl SearchOptions {
    fn pool(&self) -> Result<rayon::ThreadPool> {
        let n = self
            .workers
            .or_else(|| std::env::var("GFTC_WORKERS").ok().and_then(|v| v.parse().ok()))
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub value: CertifiedReal,
    pub witness: DensityWitness,
    pub nodes: u64,
    pub candidates: usize,
}

struct FastChild {
    type_id: usize,
    offset: f64,
    ratio: f64,
    /// `ratio^α`.
    scale: f64,
    /// Unit-parent mass of the earlier siblings.
    before: f64,
}

#[derive(Clone, Debug)]
struct Node {
    t: usize,
    depth: usize,
    left: f64,
    len: f64,
    /// `len^α`.
    scale: f64,
    /// Mass strictly left of `left`.
    cum: f64,
    path: Vec<u16>,
}

impl Node {
    fn right(&self) -> f64 {
        self.left + self.len
    }
}

/// f64 mirror of the tree used for bounding.
struct FastTree {
    alpha: f64,
    perron: Vec<f64>,
    kids: Vec<Vec<FastChild>>,
    /// `minrel[r][t]`: shortest depth-`r` descendant of a unit type-`t` island.
    minrel: Vec<Vec<f64>>,
    k: usize,
}

impl FastTree {
    fn new(tree: &TypedTree, ladder: &mut StatsLadder, model: &CertifiedModel, k: usize) -> Self {
        let fast = model.to_fast();
        let alpha = fast.alpha;
        let perron = fast.perron;
        let kids = tree
            .children
            .iter()
            .map(|cs| {
                let mut before = 0.0;
                cs.iter()
                    .map(|c| {
                        let ratio = rational_to_f64(&c.ratio);
                        let scale = ratio.powf(alpha);
                        let fc = FastChild { type_id: c.type_id, offset: rational_to_f64(&c.offset), ratio, scale, before };
                        before += perron[c.type_id] * scale;
                        fc
                    })
                    .collect()
            })
            .collect();
        ladder.extend_to(tree, k);
        let minrel = (0..=k)
            .map(|r| (0..tree.q()).map(|t| rational_to_f64(&ladder.get(r, t).min)).collect())
            .collect();
        FastTree { alpha, perron, kids, minrel, k }
    }

    fn root(&self, t: usize) -> Node {
        Node { t, depth: 0, left: 0.0, len: 1.0, scale: 1.0, cum: 0.0, path: Vec::new() }
    }

    fn mass(&self, n: &Node) -> f64 {
        self.perron[n.t] * n.scale
    }

    fn min_leaf(&self, n: &Node) -> f64 {
        n.len * self.minrel[self.k - n.depth][n.t]
    }

    fn children(&self, n: &Node) -> Vec<Node> {
        self.kids[n.t]
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut path = n.path.clone();
                path.push(i as u16);
                Node {
                    t: c.type_id,
                    depth: n.depth + 1,
                    left: n.left + c.offset * n.len,
                    len: c.ratio * n.len,
                    scale: c.scale * n.scale,
                    cum: n.cum + c.before * n.scale,
                    path,
                }
            })
            .collect()
    }

    fn density(&self, mass: f64, len: f64) -> f64 {
        mass / len.powf(self.alpha)
    }
}

/// Intervals starting at a depth-`k` left endpoint inside `a` and ending at
/// a depth-`k` right endpoint inside `b` (`a` before `b`, or `a == b`).
#[derive(Clone, Debug)]
struct PairItem {
    a: Node,
    b: Node,
    same: bool,
    bound: f64,
}

struct Shared {
    best: AtomicU64,
    nodes: AtomicU64,
    aborted: AtomicBool,
    deadline: Option<Instant>,
}

impl Shared {
    fn best(&self) -> f64 {
        f64::from_bits(self.best.load(AtomicOrdering::Relaxed))
    }

    /// Nonnegative f64 bit patterns order like the values.
    fn offer(&self, v: f64) {
        self.best.fetch_max(v.to_bits(), AtomicOrdering::Relaxed);
    }

    fn tick(&self) -> bool {
        let n = self.nodes.fetch_add(1, AtomicOrdering::Relaxed);
        if n % 4096 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() > d {
                    self.aborted.store(true, AtomicOrdering::Relaxed);
                }
            }
        }
        !self.aborted.load(AtomicOrdering::Relaxed)
    }
}

struct PairSearch<'a> {
    fast: &'a FastTree,
    min_len: f64,
}

impl PairSearch<'_> {
    fn item(&self, a: Node, b: Node, same: bool) -> Option<PairItem> {
        let f = self.fast;
        let floor = self.min_len * (1.0 - 1e-12);
        let (mass, len_lb, len_ub) = if same {
            (f.mass(&a), f.min_leaf(&a), a.len)
        } else {
            let gap = b.left - a.right();
            (b.cum + f.mass(&b) - a.cum, gap + f.min_leaf(&a) + f.min_leaf(&b), b.right() - a.left)
        };
        if len_ub < floor {
            return None;
        }
        let bound = f.density(mass, len_lb.max(self.min_len).max(f64::MIN_POSITIVE)) * (1.0 + MARGIN);
        Some(PairItem { a, b, same, bound })
    }

    fn is_leaf(&self, it: &PairItem) -> bool {
        it.a.depth == self.fast.k && it.b.depth == self.fast.k
    }

    fn leaf_value(&self, it: &PairItem) -> Option<f64> {
        let f = self.fast;
        let (mass, len) = if it.same {
            (f.mass(&it.a), it.a.len)
        } else {
            (it.b.cum + f.mass(&it.b) - it.a.cum, it.b.right() - it.a.left)
        };
        (len >= self.min_len * (1.0 - 1e-12)).then(|| f.density(mass, len))
    }

    fn split(&self, it: &PairItem) -> Vec<PairItem> {
        let f = self.fast;
        let mut out = Vec::new();
        if it.same {
            let cs = f.children(&it.a);
            for i in 0..cs.len() {
                for j in i..cs.len() {
                    out.extend(self.item(cs[i].clone(), cs[j].clone(), i == j));
                }
            }
        } else {
            let split_a = it.a.depth < f.k && (it.b.depth == f.k || it.a.len >= it.b.len);
            if split_a {
                for c in f.children(&it.a) {
                    out.extend(self.item(c, it.b.clone(), false));
                }
            } else {
                for c in f.children(&it.b) {
                    out.extend(self.item(it.a.clone(), c, false));
                }
            }
        }
        out
    }

    fn explore(&self, start: PairItem, shared: &Shared, found: &mut Vec<(f64, PairItem)>) {
        let mut stack = vec![start];
        while let Some(it) = stack.pop() {
            if !shared.tick() {
                return;
            }
            let best = shared.best();
            if it.bound < best * (1.0 - MARGIN) {
                continue;
            }
            if self.is_leaf(&it) {
                if let Some(v) = self.leaf_value(&it) {
                    if v >= best * (1.0 - MARGIN) {
                        shared.offer(v);
                        found.push((v, it));
                    }
                }
                continue;
            }
            let mut kids = self.split(&it);
            // Highest bound popped first.
            kids.sort_by(|x, y| x.bound.total_cmp(&y.bound));
            stack.extend(kids);
        }
    }
}

fn budget_error(shared: &Shared, started: Instant) -> Error {
    Error::BudgetExceeded { seconds: started.elapsed().as_secs_f64(), best: shared.best() }
}

/// Certify the candidates and pick the largest (or smallest) value, with ties
/// going to the smallest `(left, right)`.
fn certify<F>(cands: Vec<(Rational, Rational)>, sense: Sense, eval: F) -> Result<(CertifiedReal, usize, Vec<(Rational, Rational)>)>
where
    F: Fn(&Rational, &Rational) -> Result<CertifiedReal>,
{
    let mut cands = cands;
    cands.sort();
    cands.dedup();
    let values: Vec<CertifiedReal> = cands.iter().map(|(l, r)| eval(l, r)).collect::<Result<_>>()?;
    let idx = match sense {
        Sense::Max => {
            let top = values.iter().map(|v| v.lo().clone()).max_by(|a, b| a.partial_cmp(b).unwrap()).unwrap();
            values.iter().position(|v| *v.hi() >= top).unwrap()
        }
        Sense::Min => {
            let bottom = values.iter().map(|v| v.hi().clone()).min_by(|a, b| a.partial_cmp(b).unwrap()).unwrap();
            values.iter().position(|v| *v.lo() <= bottom).unwrap()
        }
    };
    Ok((values[idx].clone(), idx, cands))
}

fn witness_for(
    tree: &TypedTree,
    model: &CertifiedModel,
    root_type: usize,
    left: &Rational,
    right: &Rational,
    depth: usize,
) -> Result<DensityWitness> {
    let parts = tree.decompose_from(root_type, left, right, depth)?;
    Ok(DensityWitness::from_parts(model, left.clone(), right.clone(), &parts))
}

/// Largest density over field intervals of generation `k` of length at least
/// `min_len`. The interval `[0,1]` is a field interval of every generation.
pub fn field_max(
    tree: &TypedTree,
    ladder: &mut StatsLadder,
    model: &CertifiedModel,
    k: usize,
    min_len: &Rational,
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    let started = Instant::now();
    let fast = FastTree::new(tree, ladder, model, k);
    let search = PairSearch { fast: &fast, min_len: rational_to_f64(min_len) };
    let shared = Shared {
        best: AtomicU64::new(0f64.to_bits()),
        nodes: AtomicU64::new(0),
        aborted: AtomicBool::new(false),
        deadline: opts.deadline,
    };
    let root = fast.root(0);
    let Some(start) = search.item(root.clone(), root, true) else {
        return Err(Error::Domain("no field interval meets the length constraint".into()));
    };

    // Breadth-first frontier for the workers.
    let mut frontier = vec![start];
    let mut leaves = Vec::new();
    while frontier.len() < FRONTIER {
        let (inner, done): (Vec<_>, Vec<_>) = frontier.into_iter().partition(|it| !search.is_leaf(it));
        leaves.extend(done);
        if inner.is_empty() {
            frontier = Vec::new();
            break;
        }
        frontier = inner.iter().flat_map(|it| search.split(it)).collect();
    }
    frontier.extend(leaves);
    frontier.sort_by(|x, y| y.bound.total_cmp(&x.bound));

    let found = Mutex::new(Vec::new());
    opts.pool()?.install(|| {
        frontier.into_par_iter().for_each(|it| {
            let mut local = Vec::new();
            search.explore(it, &shared, &mut local);
            found.lock().unwrap().extend(local);
        })
    });
    if shared.aborted.load(AtomicOrdering::Relaxed) {
        return Err(budget_error(&shared, started));
    }
    let found = found.into_inner().unwrap();
    let best = shared.best();
    let cands: Vec<(Rational, Rational)> = found
        .into_iter()
        .filter(|(v, _)| *v >= best * (1.0 - MARGIN))
        .map(|(_, it)| {
            let a = tree.follow(0, &it.a.path);
            let b = tree.follow(0, &it.b.path);
            (a.left, b.right())
        })
        .collect();
    if cands.is_empty() {
        return Err(Error::Domain("search produced no candidate".into()));
    }
    let n = cands.len();
    let eval = |l: &Rational, r: &Rational| -> Result<CertifiedReal> { Ok(witness_for(tree, model, 0, l, r, k)?.value) };
    let (value, idx, cands) = certify(cands, Sense::Max, eval)?;
    let (l, r) = &cands[idx];
    Ok(SearchOutcome {
        value,
        witness: witness_for(tree, model, 0, l, r, k)?,
        nodes: shared.nodes.load(AtomicOrdering::Relaxed),
        candidates: n,
    })
}

/// Extremal density of prefixes `[0, x]` of a unit island of `root_type`,
/// with `x` ranging over the generation-`k` field points of that island.
pub fn prefix_extremum(
    tree: &TypedTree,
    ladder: &mut StatsLadder,
    model: &CertifiedModel,
    root_type: usize,
    k: usize,
    sense: Sense,
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    let started = Instant::now();
    let fast = FastTree::new(tree, ladder, model, k);
    let shared = Shared {
        best: AtomicU64::new(0),
        nodes: AtomicU64::new(0),
        aborted: AtomicBool::new(false),
        deadline: opts.deadline,
    };
    let root = fast.root(root_type);
    // Values as (f64, node, endpoint is the node's left end).
    let whole = fast.density(fast.mass(&root), 1.0);
    let mut best = whole;
    let mut found: Vec<(f64, Vec<u16>, bool)> = vec![(whole, Vec::new(), false)];
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if !shared.tick() {
            return Err(budget_error(&shared, started));
        }
        let minleaf = fast.min_leaf(&n);
        let bound = match sense {
            Sense::Min if n.left == 0.0 => 0.0,
            Sense::Min => fast.density(n.cum, (n.right() - minleaf).max(n.left)) * (1.0 - MARGIN),
            Sense::Max => fast.density(n.cum + fast.mass(&n), n.left + minleaf) * (1.0 + MARGIN),
        };
        let hopeless = match sense {
            Sense::Min => bound > best * (1.0 + MARGIN),
            Sense::Max => bound < best * (1.0 - MARGIN),
        };
        if hopeless {
            continue;
        }
        if n.depth == k {
            let v = match sense {
                Sense::Min if n.left > 0.0 => Some(fast.density(n.cum, n.left)),
                Sense::Min => None,
                Sense::Max => Some(fast.density(n.cum + fast.mass(&n), n.right())),
            };
            if let Some(v) = v {
                let keep = match sense {
                    Sense::Min => v <= best * (1.0 + MARGIN),
                    Sense::Max => v >= best * (1.0 - MARGIN),
                };
                if keep {
                    best = match sense {
                        Sense::Min => best.min(v),
                        Sense::Max => best.max(v),
                    };
                    found.push((v, n.path.clone(), sense == Sense::Min));
                }
            }
            continue;
        }
        let mut kids = fast.children(&n);
        if sense == Sense::Max {
            kids.reverse();
        }
        stack.extend(kids);
    }
    let keep = |v: f64| match sense {
        Sense::Min => v <= best * (1.0 + MARGIN),
        Sense::Max => v >= best * (1.0 - MARGIN),
    };
    let zero = Rational::new();
    let cands: Vec<(Rational, Rational)> = found
        .into_iter()
        .filter(|(v, _, _)| keep(*v))
        .map(|(_, path, at_left)| {
            let node = tree.follow(root_type, &path);
            let x = if at_left { node.left.clone() } else { node.right() };
            (zero.clone(), x)
        })
        .collect();
    let n = cands.len();
    let eval = |l: &Rational, r: &Rational| -> Result<CertifiedReal> {
        Ok(witness_for(tree, model, root_type, l, r, k)?.value)
    };
    let (value, idx, cands) = certify(cands, sense, eval)?;
    let (l, r) = &cands[idx];
    Ok(SearchOutcome {
        value,
        witness: witness_for(tree, model, root_type, l, r, k)?,
        nodes: shared.nodes.load(AtomicOrdering::Relaxed),
        candidates: n,
    })
}

/// Plain double loop over all depth-`k` field intervals, for cross-checks.
pub fn brute_field_max(tree: &TypedTree, model: &CertifiedModel, k: usize, min_len: &Rational) -> f64 {
    let fast = model.to_fast();
    let islands: Vec<TreeIsland> = tree.materialize(0, k);
    let mut cum = vec![0.0];
    for isl in &islands {
        let m = fast.measure(isl.type_id, &isl.len);
        cum.push(cum.last().unwrap() + m);
    }
    let min_len = rational_to_f64(min_len) * (1.0 - 1e-12);
    let mut best: f64 = 0.0;
    for i in 0..islands.len() {
        let l = rational_to_f64(&islands[i].left);
        for j in i..islands.len() {
            let len = rational_to_f64(&islands[j].right()) - l;
            if len >= min_len {
                best = best.max((cum[j + 1] - cum[i]) / len.powf(fast.alpha));
            }
        }
    }
    best
}
