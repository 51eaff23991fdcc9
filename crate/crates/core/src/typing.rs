//! Overlap types: signatures, partition refinement, the incidence template.

use std::collections::{BTreeMap, HashMap};

use rug::Rational;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generation::{FrameBuilder, GenerationFrame, Island, DEFAULT_VERTEX_CAP};
use crate::ifs::{AffineMap, IfsSpec, Scheme};
use crate::numerics::{rational_pow, serde_rational, serde_rational_opt};

pub const DEFAULT_MAX_GENERATIONS: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SignatureEntry {
    #[serde(with = "serde_rational")]
    pub offset: Rational,
    #[serde(with = "serde_rational")]
    pub ratio: Rational,
    /// Lambda scheme only: `ρ_v / ρ_min^k`.
    #[serde(with = "serde_rational_opt")]
    pub residual: Option<Rational>,
}

/// Constitutive maps of an island renormalized to `[0,1]`, sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct TypeSignature(pub Vec<SignatureEntry>);

pub fn signature(spec: &IfsSpec, island: &Island) -> TypeSignature {
    let len = island.length();
    let ladder = match spec.scheme {
        Scheme::Sigma => None,
        Scheme::Lambda => Some(rational_pow(&spec.rho_min(), island.generation as u32)),
    };
    let mut entries: Vec<SignatureEntry> = island
        .vertices
        .iter()
        .map(|v| SignatureEntry {
            offset: Rational::from(&v.offset - &island.left) / &len,
            ratio: Rational::from(&v.ratio / &len),
            residual: ladder.as_ref().map(|t| Rational::from(&v.ratio / t)),
        })
        .collect();
    entries.sort();
    TypeSignature(entries)
}

/// A child island relative to its parent: `left = parent.left + offset·|parent|`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ChildDescriptor {
    #[serde(rename = "type", serialize_with = "serialize_child_type")]
    pub type_id: usize,
    #[serde(with = "serde_rational")]
    pub offset: Rational,
    #[serde(with = "serde_rational")]
    pub ratio: Rational,
}

fn serialize_child_type<S: serde::Serializer>(t: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(*t as u64 + 1)
}

#[derive(Clone, Debug, Serialize)]
pub struct Representative {
    #[serde(with = "serde_rational")]
    pub left: Rational,
    #[serde(with = "serde_rational")]
    pub right: Rational,
    pub generation: usize,
    pub vertices: Vec<AffineMap>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OverlapType {
    #[serde(serialize_with = "serialize_child_type")]
    pub id: usize,
    pub signature: TypeSignature,
    pub representative: Representative,
    /// Children in left-to-right order.
    pub children: Vec<ChildDescriptor>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TypeTable {
    pub q: usize,
    pub k0: usize,
    pub types: Vec<OverlapType>,
    /// Typed frames `0..=k0+1`.
    #[serde(skip)]
    pub frames: Vec<GenerationFrame>,
}

impl TypeTable {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("type table serializes")
    }

    pub fn frame(&self, k: usize) -> &GenerationFrame {
        &self.frames[k]
    }
}

fn children_of(parent: &Island, next: &GenerationFrame) -> Vec<usize> {
    let start = next.islands.partition_point(|c| c.left < parent.left);
    let mut out = Vec::new();
    for (i, c) in next.islands.iter().enumerate().skip(start) {
        if c.left >= parent.right {
            break;
        }
        out.push(i);
    }
    out
}

fn descriptor(parent: &Island, child: &Island, class: usize) -> ChildDescriptor {
    let len = parent.length();
    ChildDescriptor {
        type_id: class,
        offset: Rational::from(&child.left - &parent.left) / &len,
        ratio: child.length() / len,
    }
}

/// Classify islands into overlap types with the default vertex cap.
pub fn classify_types(spec: &IfsSpec, max_generations: usize) -> Result<TypeTable> {
    classify_types_capped(spec, max_generations, DEFAULT_VERTEX_CAP)
}

pub fn classify_types_capped(spec: &IfsSpec, max_generations: usize, cap: usize) -> Result<TypeTable> {
    let mut builder = FrameBuilder::new(spec, cap);
    let mut frames = vec![builder.frame()];
    let mut sig_ids: HashMap<TypeSignature, usize> = HashMap::new();
    let mut sigs: Vec<TypeSignature> = Vec::new();
    let mut classes: Vec<Vec<usize>> = Vec::new();

    let assign = |frame: &GenerationFrame, sig_ids: &mut HashMap<TypeSignature, usize>, sigs: &mut Vec<TypeSignature>| {
        let mut fresh = false;
        let ids = frame
            .islands
            .iter()
            .map(|isl| {
                let s = signature(spec, isl);
                *sig_ids.entry(s.clone()).or_insert_with(|| {
                    fresh = true;
                    sigs.push(s);
                    sigs.len() - 1
                })
            })
            .collect::<Vec<_>>();
        (ids, fresh)
    };

    classes.push(assign(&frames[0], &mut sig_ids, &mut sigs).0);
    let k0 = loop {
        let k = frames.len() - 1;
        if k >= max_generations {
            return Err(Error::GftcNotConfirmed { generations: max_generations });
        }
        builder.advance()?;
        frames.push(builder.frame());
        let (ids, fresh) = assign(&frames[k + 1], &mut sig_ids, &mut sigs);
        classes.push(ids);
        if !fresh {
            break k;
        }
    };

    let classes = refine(&frames, classes, k0)?;
    let q = classes.iter().flatten().max().unwrap() + 1;

    let mut types: Vec<Option<OverlapType>> = vec![None; q];
    for g in 0..=k0 {
        for (i, isl) in frames[g].islands.iter().enumerate() {
            let t = classes[g][i];
            if types[t].is_some() {
                continue;
            }
            let children = children_of(isl, &frames[g + 1])
                .into_iter()
                .map(|c| descriptor(isl, &frames[g + 1].islands[c], classes[g + 1][c]))
                .collect();
            types[t] = Some(OverlapType {
                id: t,
                signature: signature(spec, isl),
                representative: Representative {
                    left: isl.left.clone(),
                    right: isl.right.clone(),
                    generation: g,
                    vertices: isl.vertices.clone(),
                },
                children,
            });
        }
    }
    let types: Vec<OverlapType> = types
        .into_iter()
        .map(|t| t.ok_or_else(|| Error::RefinementUnstable("type without representative".into())))
        .collect::<Result<_>>()?;

    for (g, frame) in frames.iter_mut().enumerate() {
        for (i, isl) in frame.islands.iter_mut().enumerate() {
            isl.type_id = Some(classes[g][i]);
        }
    }
    Ok(TypeTable { q, k0, types, frames })
}

/// Split signature classes by their children until stable, then renumber
/// in order of first appearance. Islands of the last frame have no known
/// children and keep their signature class, which is only sound when no
/// signature class was split.
fn refine(frames: &[GenerationFrame], mut classes: Vec<Vec<usize>>, k0: usize) -> Result<Vec<Vec<usize>>> {
    let sig_count = classes.iter().flatten().max().unwrap() + 1;
    let mut count = sig_count;
    loop {
        let mut keys: BTreeMap<(usize, Vec<ChildDescriptor>), usize> = BTreeMap::new();
        let mut next = classes.clone();
        for g in 0..=k0 {
            for (i, isl) in frames[g].islands.iter().enumerate() {
                let kids = children_of(isl, &frames[g + 1])
                    .into_iter()
                    .map(|c| descriptor(isl, &frames[g + 1].islands[c], classes[g + 1][c]))
                    .collect();
                let n = keys.len();
                next[g][i] = *keys.entry((classes[g][i], kids)).or_insert(n);
            }
        }
        let new_count = keys.len();
        // Blocks only split; an unchanged count is a fixed point.
        if new_count == count {
            break;
        }
        if new_count < count {
            return Err(Error::RefinementUnstable("partition merged blocks".into()));
        }
        count = new_count;
        classes = next;
    }
    if count != sig_count {
        return Err(Error::RefinementUnstable(format!(
            "{sig_count} signature classes split into {count} blocks"
        )));
    }
    // Renumber by first appearance (generation, then left to right).
    let mut order: HashMap<usize, usize> = HashMap::new();
    for row in &classes {
        for &c in row {
            let n = order.len();
            order.entry(c).or_insert(n);
        }
    }
    Ok(classes.into_iter().map(|row| row.into_iter().map(|c| order[&c]).collect()).collect())
}

/// `entries[i][j]` holds the ratios `r` with `A_α(i,j) = Σ r^α`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncidenceTemplate {
    pub q: usize,
    #[serde(serialize_with = "serialize_entries")]
    pub entries: Vec<Vec<Vec<Rational>>>,
}

fn serialize_entries<S: serde::Serializer>(
    e: &[Vec<Vec<Rational>>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let v: Vec<Vec<Vec<String>>> = e
        .iter()
        .map(|row| row.iter().map(|c| c.iter().map(crate::numerics::format_rational).collect()).collect())
        .collect();
    v.serialize(s)
}

impl IncidenceTemplate {
    pub fn from_entries(entries: Vec<Vec<Vec<Rational>>>) -> Self {
        IncidenceTemplate { q: entries.len(), entries }
    }

    /// Child-count matrix, the template at `α = 0`.
    pub fn counts(&self) -> Vec<Vec<usize>> {
        self.entries.iter().map(|row| row.iter().map(Vec::len).collect()).collect()
    }

    pub fn eval_f64(&self, alpha: f64) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|row| row.iter().map(|c| c.iter().map(|r| r.to_f64().powf(alpha)).sum()).collect())
            .collect()
    }
}

pub fn incidence_template(table: &TypeTable) -> IncidenceTemplate {
    let mut entries = vec![vec![Vec::new(); table.q]; table.q];
    for t in &table.types {
        for c in &t.children {
            entries[t.id][c.type_id].push(c.ratio.clone());
        }
    }
    for row in &mut entries {
        for cell in row.iter_mut() {
            cell.sort();
        }
    }
    IncidenceTemplate::from_entries(entries)
}

/// Strong connectivity of the graph with an edge `i → j` for each nonempty entry.
pub fn check_irreducible(template: &IncidenceTemplate) -> bool {
    let q = template.q;
    if q == 0 {
        return false;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; q];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..q {
                let edge = if forward { &template.entries[i][j] } else { &template.entries[j][i] };
                if !edge.is_empty() && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    if q == 1 {
        return !template.entries[0][0].is_empty();
    }
    reach(true) && reach(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::parse_spec;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn spec(text: &str) -> IfsSpec {
        parse_spec(text).unwrap()
    }

    fn pair_family(rho: (i64, i64), r: (i64, i64)) -> IfsSpec {
        let rho = q(rho.0, rho.1);
        let r = q(r.0, r.1);
        let b2 = Rational::from(&rho * (Rational::from(1) - &r));
        let b3 = Rational::from(1) - &r;
        let f = crate::numerics::format_rational;
        spec(&format!(
            r#"{{"maps":[{{"rho":"{}","b":"0"}},{{"rho":"{}","b":"{}"}},{{"rho":"{}","b":"{}"}}]}}"#,
            f(&rho),
            f(&r),
            f(&b2),
            f(&r),
            f(&b3)
        ))
    }

    fn lambda_ninth() -> IfsSpec {
        spec(r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/9","b":"8/27"},{"rho":"1/3","b":"2/3"}],"scheme":"lambda"}"#)
    }

    fn four_quarters() -> IfsSpec {
        spec(r#"{"maps":[{"rho":"1/4","b":"0"},{"rho":"1/4","b":"1/4"},{"rho":"1/4","b":"3/8"},{"rho":"1/4","b":"3/4"}]}"#)
    }

    #[test]
    fn pair_family_two_types() {
        let t = classify_types(&pair_family((1, 3), (1, 4)), 12).unwrap();
        assert_eq!((t.q, t.k0), (2, 1));
        let tpl = incidence_template(&t);
        // ρ + r − ρr = 1/2 for ρ = 1/3, r = 1/4.
        assert_eq!(tpl.entries[0][0], vec![q(1, 4)]);
        assert_eq!(tpl.entries[0][1], vec![q(1, 2)]);
        assert_eq!(tpl.entries[1][0], vec![q(1, 8)]);
        assert_eq!(tpl.entries[1][1], vec![q(1, 4), q(1, 3)]);
        assert!(check_irreducible(&tpl));
    }

    #[test]
    fn lambda_ninth_three_types() {
        let t = classify_types(&lambda_ninth(), 12).unwrap();
        assert_eq!(t.q, 3);
        let tpl = incidence_template(&t);
        assert_eq!(tpl.counts(), vec![vec![1, 2, 1], vec![1, 3, 1], vec![1, 3, 2]]);
        assert_eq!(tpl.entries[0][1], vec![q(11, 81), q(11, 81)]);
        assert_eq!(tpl.entries[2][0], vec![q(1, 15)]);
    }

    #[test]
    fn four_quarters_template() {
        let t = classify_types(&four_quarters(), 12).unwrap();
        assert_eq!((t.q, t.k0), (3, 2));
        let tpl = incidence_template(&t);
        assert!(tpl.entries[0][2].is_empty());
        assert_eq!(tpl.entries[0][1], vec![q(3, 8)]);
        assert_eq!(tpl.entries[1][2], vec![q(1, 3)]);
        assert_eq!(tpl.entries[2][1], vec![q(3, 16)]);
        assert!(check_irreducible(&tpl));
    }

    #[test]
    fn osc_is_single_type() {
        let t = classify_types(&spec(r#"{"maps":[{"rho":"1/3","b":"0"},{"rho":"1/3","b":"2/3"}]}"#), 12).unwrap();
        assert_eq!((t.q, t.k0), (1, 0));
        let tpl = incidence_template(&t);
        assert_eq!(tpl.entries[0][0], vec![q(1, 3), q(1, 3)]);
        assert!(check_irreducible(&tpl));
    }

    #[test]
    fn reducible_patterns() {
        let diag = IncidenceTemplate::from_entries(vec![
            vec![vec![q(1, 2)], vec![]],
            vec![vec![], vec![q(1, 2)]],
        ]);
        assert!(!check_irreducible(&diag));
        let empty = IncidenceTemplate::from_entries(vec![vec![vec![]]]);
        assert!(!check_irreducible(&empty));
    }

    #[test]
    fn budget_exhausted() {
        let e = classify_types(&four_quarters(), 1).unwrap_err();
        assert!(matches!(e, Error::GftcNotConfirmed { generations: 1 }));
    }

    #[test]
    fn same_type_same_children() {
        let t = classify_types(&lambda_ninth(), 12).unwrap();
        for g in 0..=t.k0 {
            let f = &t.frames[g];
            for isl in &f.islands {
                let ty = &t.types[isl.type_id.unwrap()];
                let kids: Vec<ChildDescriptor> = children_of(isl, &t.frames[g + 1])
                    .into_iter()
                    .map(|c| {
                        let ch = &t.frames[g + 1].islands[c];
                        descriptor(isl, ch, ch.type_id.unwrap())
                    })
                    .collect();
                assert_eq!(kids, ty.children);
            }
        }
    }
}
