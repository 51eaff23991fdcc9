//! Boundary densities and the extremal densities `d_max`, `d_min`.

pub mod anchors;
pub mod dist;
pub mod search;

use std::cmp::Ordering;

use rug::Rational;
use serde::{Serialize, Serializer};

pub use anchors::{commensurability, edge_anchors, EdgeAnchors};
pub use dist::{dist_to_attractor, Distance};
pub use search::{brute_field_max, field_max, prefix_extremum, SearchOptions, SearchOutcome, Sense};

use crate::error::{Error, Result};
use crate::generation::FrameStats;
use crate::ifs::{IfsSpec, Mode};
use crate::measure::CertifiedModel;
use crate::numerics::{rational_pow, serde_rational, CertifiedReal, Real};
use crate::tree::{StatsLadder, TreeIsland, TypedTree};
use crate::typing::TypeTable;

/// Largest generation examined when looking for a threshold.
pub const THRESHOLD_SEARCH_LIMIT: usize = 4000;
pub const DEFAULT_MAX_GENERATION: usize = 30;
const DIST_MAX_DEPTH: usize = 400;

fn one_based<S: Serializer>(t: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(*t as u64 + 1)
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessPart {
    #[serde(rename = "type", serialize_with = "one_based")]
    pub type_id: usize,
    #[serde(with = "serde_rational")]
    pub length: Rational,
}

/// An interval whose density is `Σ a_t |I|^α / |J|^α` over its islands.
#[derive(Clone, Debug, Serialize)]
pub struct DensityWitness {
    #[serde(with = "serde_rational")]
    pub left: Rational,
    #[serde(with = "serde_rational")]
    pub right: Rational,
    pub islands: Vec<WitnessPart>,
    pub value: CertifiedReal,
}

impl DensityWitness {
    pub fn from_pairs(model: &CertifiedModel, left: Rational, right: Rational, parts: Vec<(usize, Rational)>) -> Self {
        let len = Rational::from(&right - &left);
        let value = model.density(&parts, &len);
        let islands = parts.into_iter().map(|(type_id, length)| WitnessPart { type_id, length }).collect();
        DensityWitness { left, right, islands, value }
    }

    pub fn from_parts(model: &CertifiedModel, left: Rational, right: Rational, parts: &[TreeIsland]) -> Self {
        let pairs = parts.iter().map(|p| (p.type_id, p.len.clone())).collect();
        Self::from_pairs(model, left, right, pairs)
    }

    /// Density recomputed from the stored islands.
    pub fn recompute(&self, model: &CertifiedModel) -> CertifiedReal {
        let parts: Vec<(usize, Rational)> = self.islands.iter().map(|p| (p.type_id, p.length.clone())).collect();
        model.density(&parts, &Rational::from(&self.right - &self.left))
    }

    /// Reflect a witness found on the mirrored tree.
    fn reflected(mut self) -> Self {
        let one = Rational::from(1);
        let (l, r) = (Rational::from(&one - &self.right), Rational::from(&one - &self.left));
        self.left = l;
        self.right = r;
        self.islands.reverse();
        self
    }

    /// Copy with every island length multiplied by `s`, placed at `[left, right]`.
    fn scaled(&self, model: &CertifiedModel, s: &Rational, left: Rational, right: Rational) -> Self {
        let parts = self.islands.iter().map(|p| (p.type_id, Rational::from(&p.length * s))).collect();
        Self::from_pairs(model, left, right, parts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    SeparatedLakes,
    TouchingArithmetic,
    TouchingNonArithmetic,
    Degenerate,
}

#[derive(Clone, Debug, Serialize)]
pub struct Boundary {
    pub value: CertifiedReal,
    pub generation: usize,
    pub witness: DensityWitness,
}

#[derive(Clone, Debug, Serialize)]
pub struct Thresholds {
    /// Generations used for the lower boundary densities.
    pub boundary_left: Option<usize>,
    pub boundary_right: Option<usize>,
    /// Search generation for `d_max`.
    pub k: Option<usize>,
    pub k1: Option<usize>,
    pub k2: Option<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityReport {
    pub d0_under: Option<Boundary>,
    pub d1_under: Option<Boundary>,
    pub d0_over: Option<Boundary>,
    pub d1_over: Option<Boundary>,
    /// Per-type lower boundary densities, relaxed mode only.
    pub d0_under_per_type: Option<Vec<CertifiedReal>>,
    pub d1_under_per_type: Option<Vec<CertifiedReal>>,
    pub case_taken: Option<Case>,
    pub thresholds: Thresholds,
    #[serde(serialize_with = "crate::numerics::serde_rational_opt::serialize")]
    pub eta: Option<Rational>,
    pub commensurability: Option<(u64, u64)>,
    #[serde(serialize_with = "crate::numerics::serde_rational_opt::serialize")]
    pub min_length: Option<Rational>,
    pub d_max: Option<CertifiedReal>,
    pub d_max_witness: Option<DensityWitness>,
    /// `(D̄₀^{1/(1−α)} + D̄₁^{1/(1−α)})^{1−α}` in the non-arithmetic case.
    pub d_max_combined: Option<CertifiedReal>,
    pub d_min: Option<CertifiedReal>,
    pub d_min_witness: Option<DensityWitness>,
    /// Minimum over the pairs of generation `k0+1`; absent when there is no pair.
    pub pair_minimum: Option<CertifiedReal>,
    pub hausdorff: Option<CertifiedReal>,
    pub packing: Option<CertifiedReal>,
    /// Varies with the worker count, so kept out of the serialized report.
    #[serde(skip)]
    pub search_nodes: Option<u64>,
}

#[derive(Clone, Copy, Debug)]
pub struct Request {
    pub hausdorff: bool,
    pub packing: bool,
}

pub struct DensityEngine<'a> {
    pub spec: &'a IfsSpec,
    pub table: &'a TypeTable,
    pub model: &'a CertifiedModel,
    pub tree: TypedTree,
    pub mirror: TypedTree,
    ladder: StatsLadder,
    mirror_ladder: StatsLadder,
    pub opts: SearchOptions,
    pub max_generation: usize,
}

#[derive(Clone, Debug)]
pub struct DmaxResult {
    pub value: CertifiedReal,
    pub witness: DensityWitness,
    pub case: Case,
    pub k: usize,
    pub k1: Option<usize>,
    pub k2: Option<usize>,
    pub min_length: Rational,
    pub eta: Option<Rational>,
    pub commensurability: Option<(u64, u64)>,
    pub combined: Option<CertifiedReal>,
    pub d0_over: Option<Boundary>,
    pub d1_over: Option<Boundary>,
    pub nodes: u64,
}

#[derive(Clone, Debug)]
pub struct DminResult {
    pub value: CertifiedReal,
    pub witness: Option<DensityWitness>,
    pub pair_minimum: Option<(CertifiedReal, DensityWitness)>,
}

#[derive(Clone, Debug)]
pub struct LowerBoundaries {
    pub d0: Boundary,
    pub d1: Boundary,
    pub d0_per_type: Option<Vec<CertifiedReal>>,
    pub d1_per_type: Option<Vec<CertifiedReal>>,
}

impl LowerBoundaries {
    /// `min{D̲₀, D̲₁}`, or `D̲₁` alone in relaxed mode.
    pub fn kappa(&self, mode: Mode) -> CertifiedReal {
        match mode {
            Mode::Standard => self.d0.value.min(&self.d1.value),
            Mode::AssumptionBRelaxed => self.d1.value.clone(),
        }
    }
}

/// Pick the extreme enclosure; among ties the earliest entry wins.
fn pick(values: &[CertifiedReal], sense: Sense) -> usize {
    match sense {
        Sense::Min => {
            let bottom = values.iter().map(|v| v.hi().clone()).min_by(|a, b| a.partial_cmp(b).unwrap()).unwrap();
            values.iter().position(|v| *v.lo() <= bottom).unwrap()
        }
        Sense::Max => {
            let top = values.iter().map(|v| v.lo().clone()).max_by(|a, b| a.partial_cmp(b).unwrap()).unwrap();
            values.iter().position(|v| *v.hi() >= top).unwrap()
        }
    }
}

impl<'a> DensityEngine<'a> {
    pub fn new(spec: &'a IfsSpec, table: &'a TypeTable, model: &'a CertifiedModel) -> Self {
        let tree = TypedTree::new(table);
        let mirror = tree.mirrored();
        let ladder = StatsLadder::new(&tree);
        let mirror_ladder = StatsLadder::new(&mirror);
        DensityEngine {
            spec,
            table,
            model,
            tree,
            mirror,
            ladder,
            mirror_ladder,
            opts: SearchOptions::default(),
            max_generation: DEFAULT_MAX_GENERATION,
        }
    }

    fn prec(&self) -> u32 {
        self.model.prec
    }

    fn alpha(&self) -> &CertifiedReal {
        &self.model.alpha
    }

    pub fn stats(&mut self, k: usize) -> FrameStats {
        self.ladder.frame_stats(&self.tree, k)
    }

    /// Smallest `k` whose first (or last) island is no longer than `ρ₁`
    /// (or `ρ_m`).
    pub fn boundary_generation(&mut self, side: Side) -> Result<usize> {
        let rho = match side {
            Side::Left => self.spec.rho_first().clone(),
            Side::Right => self.spec.rho_last().clone(),
        };
        for k in 0..=THRESHOLD_SEARCH_LIMIT {
            let st = self.stats(k);
            let beta = match side {
                Side::Left => st.beta_first,
                Side::Right => st.beta_last,
            };
            if beta <= rho {
                return Ok(k);
            }
        }
        Err(Error::ThresholdInfeasible { k: THRESHOLD_SEARCH_LIMIT, cap: THRESHOLD_SEARCH_LIMIT })
    }

    fn boundary_search(&mut self, side: Side, root_type: usize, k: usize, sense: Sense) -> Result<Boundary> {
        let out = match side {
            Side::Left => prefix_extremum(&self.tree, &mut self.ladder, self.model, root_type, k, sense, &self.opts)?,
            Side::Right => {
                prefix_extremum(&self.mirror, &mut self.mirror_ladder, self.model, root_type, k, sense, &self.opts)?
            }
        };
        let witness = match side {
            Side::Left => out.witness,
            Side::Right => out.witness.reflected(),
        };
        Ok(Boundary { value: out.value, generation: k, witness })
    }

    /// `D̲₀` (left) or `D̲₁` (right).
    pub fn boundary_min(&mut self, side: Side) -> Result<Boundary> {
        let k = self.boundary_generation(side)?;
        self.boundary_search(side, 0, k, Sense::Min)
    }

    /// Per-type lower boundary densities, each the smaller of the values at
    /// the boundary generation and the one after it.
    pub fn boundary_min_per_type(&mut self, side: Side) -> Result<Vec<CertifiedReal>> {
        let k = self.boundary_generation(side)?;
        (0..self.tree.q())
            .map(|t| {
                let a = self.boundary_search(side, t, k, Sense::Min)?.value;
                let b = self.boundary_search(side, t, k + 1, Sense::Min)?.value;
                Ok(a.min(&b))
            })
            .collect()
    }

    pub fn lower_boundaries(&mut self) -> Result<LowerBoundaries> {
        let d0 = self.boundary_min(Side::Left)?;
        let d1 = self.boundary_min(Side::Right)?;
        if self.spec.mode == Mode::Standard {
            return Ok(LowerBoundaries { d0, d1, d0_per_type: None, d1_per_type: None });
        }
        let p0 = self.boundary_min_per_type(Side::Left)?;
        let p1 = self.boundary_min_per_type(Side::Right)?;
        let fold = |v: &[CertifiedReal]| v.iter().skip(1).fold(v[0].clone(), |acc, x| acc.min(x));
        let (m0, m1) = (fold(&p0), fold(&p1));
        let mut d0 = d0;
        let mut d1 = d1;
        d0.value = d0.value.min(&m0);
        d1.value = d1.value.min(&m1);
        if d1.value.compare(&d0.value) == Some(Ordering::Greater) {
            return Err(Error::RelaxedGuard(format!(
                "right boundary density {} exceeds left boundary density {}",
                d1.value, d0.value
            )));
        }
        Ok(LowerBoundaries { d0, d1, d0_per_type: Some(p0), d1_per_type: Some(p1) })
    }

    /// Smallest `k ≥ start` with `factor · β_max^(k) ≤ rhs`.
    fn threshold(&mut self, start: usize, factor: u32, rhs: &CertifiedReal, what: &str) -> Result<usize> {
        for k in start..=THRESHOLD_SEARCH_LIMIT {
            let lhs = Rational::from(factor) * self.stats(k).beta_max;
            match rhs.compare_rational(&lhs) {
                Some(Ordering::Greater) | Some(Ordering::Equal) => return Ok(k),
                Some(Ordering::Less) => {}
                None => {
                    return Err(Error::Undecidable { bits: self.prec(), what: format!("{what} threshold at k={k}") })
                }
            }
        }
        Err(Error::ThresholdInfeasible { k: THRESHOLD_SEARCH_LIMIT + 1, cap: self.max_generation })
    }

    /// `x^{1/(1−α)}` for `x > 0`.
    fn blow(&self, x: &CertifiedReal) -> Result<CertifiedReal> {
        let p = self.prec();
        let e = (CertifiedReal::one(p) - self.alpha()).recip()?;
        x.pow(&e)
    }

    /// `D̄₀` or `D̄₁`, evaluated at the threshold generation for that edge.
    pub fn boundary_max(&mut self, side: Side, lower: &LowerBoundaries) -> Result<Boundary> {
        let p = self.prec();
        let (rho, opposite) = match side {
            Side::Left => (self.spec.rho_first().clone(), &lower.d1.value),
            Side::Right => (self.spec.rho_last().clone(), &lower.d0.value),
        };
        let rhs = self.blow(&(CertifiedReal::from_rational(&rho, p) * opposite))?;
        let k = self.threshold(0, 1, &rhs, "upper boundary")?;
        if k > self.max_generation {
            return Err(Error::ThresholdInfeasible { k, cap: self.max_generation });
        }
        self.boundary_search(side, 0, k, Sense::Max)
    }

    pub fn anchors(&self) -> Result<EdgeAnchors> {
        edge_anchors(self.spec, self.table)
    }

    pub fn compute_dmax(&mut self, lower: &LowerBoundaries) -> Result<DmaxResult> {
        let p = self.prec();
        let k0 = self.table.k0;
        let st = self.stats(k0 + 1);
        let kappa = lower.kappa(self.spec.mode);
        let gamma = st.gamma_min.clone().unwrap_or_else(|| Rational::from(1));
        let (case, start, min_length, eta, comm) = if gamma > 0 {
            (Case::SeparatedLakes, k0 + 1, gamma, None, None)
        } else {
            let eta = self.anchors()?.eta;
            match commensurability(self.spec.rho_first(), self.spec.rho_last()) {
                Some((n1, nm)) => {
                    let a0 = Rational::from(&eta * &st.beta_min) * rational_pow(self.spec.rho_first(), n1 as u32);
                    (Case::TouchingArithmetic, 0, a0, Some(eta), Some((n1, nm)))
                }
                None => {
                    let inner = match &st.gamma_min_pos {
                        Some(g) if *g < st.beta_min => g.clone(),
                        _ => st.beta_min.clone(),
                    };
                    (Case::TouchingNonArithmetic, 0, Rational::from(&eta * &inner), Some(eta), None)
                }
            }
        };
        let rhs = self.blow(&(CertifiedReal::from_rational(&min_length, p) * &kappa))?;
        let k = self.threshold(start, 2, &rhs, "maximal density")?;
        if k > self.max_generation {
            return Err(Error::ThresholdInfeasible { k, cap: self.max_generation });
        }
        let (mut combined, mut d0_over, mut d1_over, mut k1, mut k2) = (None, None, None, None, None);
        if case == Case::TouchingNonArithmetic {
            let b0 = self.boundary_max(Side::Left, lower)?;
            let b1 = self.boundary_max(Side::Right, lower)?;
            let s = (self.blow(&b0.value)? + self.blow(&b1.value)?).pow(&(CertifiedReal::one(p) - self.alpha()))?;
            k1 = Some(b0.generation);
            k2 = Some(b1.generation);
            combined = Some(s);
            d0_over = Some(b0);
            d1_over = Some(b1);
        }
        let out = field_max(&self.tree, &mut self.ladder, self.model, k, &min_length, &self.opts)?;
        let value = match &combined {
            Some(c) if c.compare(&out.value) == Some(Ordering::Greater) => c.clone(),
            _ => out.value.clone(),
        };
        Ok(DmaxResult {
            value,
            witness: out.witness,
            case,
            k,
            k1,
            k2,
            min_length,
            eta,
            commensurability: comm,
            combined,
            d0_over,
            d1_over,
            nodes: out.nodes,
        })
    }

    /// Centred interval of density `2^{-α} D̲`: a scaled copy of the boundary
    /// witness placed against the first positive lake of generation 1.
    fn centred_boundary_witness(&self, side: Side, b: &Boundary) -> Option<DensityWitness> {
        let f = self.table.frame(1);
        let i = (0..f.islands.len().saturating_sub(1)).find(|&i| f.islands[i + 1].left > f.islands[i].right)?;
        let gap = Rational::from(&f.islands[i + 1].left - &f.islands[i].right);
        let anchors = self.anchors().ok()?;
        let (isl, rho) = match side {
            Side::Left => (&f.islands[i + 1], self.spec.rho_first().clone()),
            Side::Right => (&f.islands[i], self.spec.rho_last().clone()),
        };
        let ta = &anchors.per_type[isl.type_id?];
        let (anchor, v, depth) = match side {
            Side::Left => (isl.left.clone(), isl.vertices.iter().find(|v| v.offset == isl.left)?, ta.i0_len),
            Side::Right => (isl.right.clone(), isl.vertices.iter().find(|v| v.right() == isl.right)?, ta.i1_len),
        };
        let x0 = Rational::from(&b.witness.right - &b.witness.left);
        let mut s = Rational::from(&v.ratio * &rational_pow(&rho, depth));
        while Rational::from(&s * &x0) >= gap {
            s *= &rho;
        }
        let half = Rational::from(&s * &x0);
        Some(b.witness.scaled(self.model, &s, Rational::from(&anchor - &half), Rational::from(&anchor + &half)))
    }

    /// Minimum over pairs of generation-`k0+1` islands of the centred lake
    /// density.
    fn pair_minimum(&self) -> Result<Option<(CertifiedReal, DensityWitness)>> {
        let p = self.prec();
        let f = self.table.frame(self.table.k0 + 1);
        let l = f.islands.len();
        if l < 3 {
            return Ok(None);
        }
        let masses: Vec<CertifiedReal> = f.islands.iter().map(|i| self.model.island_measure(i)).collect::<Result<_>>()?;
        let mut cum = vec![CertifiedReal::zero(p)];
        for m in &masses {
            cum.push(cum.last().unwrap() + m);
        }
        let tol = Rational::from_f64(self.spec.tolerances.dist_tol).unwrap_or_else(|| Rational::from((1, 1u64 << 50)));
        let mut values = Vec::new();
        let mut witnesses = Vec::new();
        for j1 in 0..l - 1 {
            for j2 in j1 + 1..l - 1 {
                let b = &f.islands[j1].right;
                let a = &f.islands[j2 + 1].left;
                let mid = Rational::from(a + b) / 2;
                let d = dist_to_attractor(&self.tree, &mid, &tol, DIST_MAX_DEPTH);
                let span = Rational::from(a - b);
                let den = CertifiedReal::from_rational(&span, p) - CertifiedReal::from_int(2, p) * d.enclosure(p);
                if !den.is_positive() {
                    return Err(Error::Undecidable { bits: p, what: "centred interval length".into() });
                }
                let num = &cum[j2 + 1] - &cum[j1 + 1];
                values.push(num.checked_div(&den.pow(self.alpha())?)?);
                // Centre at the nearest point of K, radius to the nearer lake end.
                let c = d.nearest.clone();
                let r = Rational::from(&c - b).min(Rational::from(a - &c));
                let parts = f.islands[j1 + 1..=j2]
                    .iter()
                    .map(|i| (i.type_id.expect("typed frame"), i.length()))
                    .collect();
                witnesses.push(DensityWitness::from_pairs(
                    self.model,
                    Rational::from(&c - &r),
                    Rational::from(&c + &r),
                    parts,
                ));
            }
        }
        let idx = pick(&values, Sense::Min);
        Ok(Some((values[idx].clone(), witnesses.swap_remove(idx))))
    }

    pub fn compute_dmin(&mut self, lower: &LowerBoundaries) -> Result<DminResult> {
        let p = self.prec();
        let half = pow_half(self.alpha(), p)?;
        let mut cands: Vec<(CertifiedReal, Option<DensityWitness>)> = Vec::new();
        if self.spec.mode == Mode::Standard {
            cands.push((&half * &lower.d0.value, self.centred_boundary_witness(Side::Left, &lower.d0)));
        }
        cands.push((&half * &lower.d1.value, self.centred_boundary_witness(Side::Right, &lower.d1)));
        let pair = self.pair_minimum()?;
        if let Some((v, w)) = &pair {
            cands.push((v.clone(), Some(w.clone())));
        }
        let values: Vec<CertifiedReal> = cands.iter().map(|c| c.0.clone()).collect();
        let idx = pick(&values, Sense::Min);
        let (value, witness) = cands.swap_remove(idx);
        Ok(DminResult { value, witness, pair_minimum: pair })
    }

    pub fn report(&mut self, req: Request) -> Result<DensityReport> {
        let p = self.prec();
        let mut rep = DensityReport {
            d0_under: None,
            d1_under: None,
            d0_over: None,
            d1_over: None,
            d0_under_per_type: None,
            d1_under_per_type: None,
            case_taken: None,
            thresholds: Thresholds { boundary_left: None, boundary_right: None, k: None, k1: None, k2: None },
            eta: None,
            commensurability: None,
            min_length: None,
            d_max: None,
            d_max_witness: None,
            d_max_combined: None,
            d_min: None,
            d_min_witness: None,
            pair_minimum: None,
            hausdorff: None,
            packing: None,
            search_nodes: None,
        };
        if self.model.is_degenerate() {
            // K = [0,1]: every interval has density one.
            rep.case_taken = Some(Case::Degenerate);
            let one = CertifiedReal::one(p);
            if req.hausdorff {
                rep.d_max = Some(one.clone());
                rep.hausdorff = Some(one.clone());
            }
            if req.packing {
                rep.d_min = Some(one.clone());
                rep.packing = Some(one);
            }
            return Ok(rep);
        }
        let lower = self.lower_boundaries()?;
        rep.thresholds.boundary_left = Some(lower.d0.generation);
        rep.thresholds.boundary_right = Some(lower.d1.generation);
        rep.d0_under = Some(lower.d0.clone());
        rep.d1_under = Some(lower.d1.clone());
        rep.d0_under_per_type = lower.d0_per_type.clone();
        rep.d1_under_per_type = lower.d1_per_type.clone();
        if req.packing {
            let r = self.compute_dmin(&lower)?;
            rep.packing = Some(r.value.recip()?);
            rep.d_min = Some(r.value);
            rep.d_min_witness = r.witness;
            rep.pair_minimum = r.pair_minimum.map(|(v, _)| v);
        }
        if req.hausdorff {
            let r = self.compute_dmax(&lower)?;
            rep.case_taken = Some(r.case);
            rep.thresholds.k = Some(r.k);
            rep.thresholds.k1 = r.k1;
            rep.thresholds.k2 = r.k2;
            rep.eta = r.eta;
            rep.commensurability = r.commensurability;
            rep.min_length = Some(r.min_length);
            rep.hausdorff = Some(r.value.recip()?);
            rep.d_max = Some(r.value);
            rep.d_max_witness = Some(r.witness);
            rep.d_max_combined = r.combined;
            rep.d0_over = r.d0_over;
            rep.d1_over = r.d1_over;
            rep.search_nodes = Some(r.nodes);
        }
        Ok(rep)
    }
}

/// `2^{-α}`.
fn pow_half(alpha: &CertifiedReal, _p: u32) -> Result<CertifiedReal> {
    Ok(CertifiedReal::pow_rational(&Rational::from((1, 2)), alpha))
}

/// Human-readable endpoints of a witness.
pub fn witness_label(w: &DensityWitness) -> String {
    format!("[{}, {}]", w.left, w.right)
}

#[cfg(test)]
mod tests;
