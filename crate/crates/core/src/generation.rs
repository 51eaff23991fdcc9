//! Generation frames: vertices, islands and lakes of the k-th covering.

use std::collections::{BTreeMap, BTreeSet};

use rug::Rational;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ifs::{compose_word, AffineMap, IfsSpec, Scheme, Word};
use crate::numerics::{rational_pow, serde_rational, serde_rational_opt};

pub const DEFAULT_VERTEX_CAP: usize = 10_000_000;

/// Serialize a 0-based type index as the 1-based id used in reports.
pub fn serialize_type_id<S: Serializer>(t: &Option<usize>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match t {
        Some(t) => s.serialize_some(&(t + 1)),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Vertex {
    pub map: AffineMap,
    /// Shortlex-smallest word producing this map.
    pub word: Word,
}

#[derive(Clone, Debug, Serialize)]
pub struct Island {
    #[serde(with = "serde_rational")]
    pub left: Rational,
    #[serde(with = "serde_rational")]
    pub right: Rational,
    /// Constitutive maps sorted by image position.
    pub vertices: Vec<AffineMap>,
    pub generation: usize,
    #[serde(serialize_with = "serialize_type_id")]
    pub type_id: Option<usize>,
}

impl Island {
    pub fn length(&self) -> Rational {
        Rational::from(&self.right - &self.left)
    }

    pub fn contains_interval(&self, left: &Rational, right: &Rational) -> bool {
        self.left <= *left && *right <= self.right
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Lake {
    #[serde(with = "serde_rational")]
    pub left: Rational,
    #[serde(with = "serde_rational")]
    pub right: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenerationFrame {
    pub k: usize,
    pub vertices: Vec<Vertex>,
    pub islands: Vec<Island>,
    /// Gaps of positive length only.
    pub lakes: Vec<Lake>,
    /// `touching[i]` is true when islands `i` and `i+1` share an endpoint.
    pub touching: Vec<bool>,
}

impl GenerationFrame {
    /// Sorted island boundary points.
    pub fn endpoints(&self) -> Vec<Rational> {
        let mut pts: Vec<Rational> = Vec::with_capacity(2 * self.islands.len());
        for isl in &self.islands {
            if pts.last() != Some(&isl.left) {
                pts.push(isl.left.clone());
            }
            pts.push(isl.right.clone());
        }
        pts
    }

    /// Index of the island containing `[left, right]`, if any.
    pub fn island_containing(&self, left: &Rational, right: &Rational) -> Option<usize> {
        let idx = self.islands.partition_point(|i| i.right < *right);
        (idx < self.islands.len() && self.islands[idx].contains_interval(left, right)).then_some(idx)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("frame serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameStats {
    #[serde(with = "serde_rational")]
    pub beta_first: Rational,
    #[serde(with = "serde_rational")]
    pub beta_last: Rational,
    #[serde(with = "serde_rational")]
    pub beta_min: Rational,
    #[serde(with = "serde_rational")]
    pub beta_max: Rational,
    /// Smallest gap between consecutive islands, zero when some touch;
    /// `None` for a single island.
    #[serde(with = "serde_rational_opt")]
    pub gamma_min: Option<Rational>,
    /// Smallest positive lake.
    #[serde(with = "serde_rational_opt")]
    pub gamma_min_pos: Option<Rational>,
    pub island_count: usize,
}

/// `M_{k+1}` from `M_k` at the word level.
pub fn advance_index_set(spec: &IfsSpec, current: &BTreeSet<Word>, k: usize) -> BTreeSet<Word> {
    let m = spec.m() as u16;
    let mut next = BTreeSet::new();
    match spec.scheme {
        Scheme::Sigma => {
            for w in current {
                for j in 1..=m {
                    next.insert(w.extended(j));
                }
            }
        }
        Scheme::Lambda => {
            let threshold = rational_pow(&spec.rho_min(), (k + 1) as u32);
            for w in current {
                let ratio = compose_word(spec, w).expect("valid word").ratio;
                extend_until(spec, w.clone(), ratio, &threshold, &mut |w, _| {
                    next.insert(w);
                });
            }
        }
    }
    next
}

fn extend_until(
    spec: &IfsSpec,
    word: Word,
    ratio: Rational,
    threshold: &Rational,
    emit: &mut dyn FnMut(Word, Rational),
) {
    if ratio <= *threshold {
        emit(word, ratio);
        return;
    }
    for (j, f) in spec.maps.iter().enumerate() {
        let r = Rational::from(&ratio * &f.ratio);
        extend_until(spec, word.extended(j as u16 + 1), r, threshold, emit);
    }
}

/// Incremental frame construction over deduplicated vertex maps.
pub struct FrameBuilder<'a> {
    spec: &'a IfsSpec,
    k: usize,
    vertices: BTreeMap<AffineMap, Word>,
    cap: usize,
}

impl<'a> FrameBuilder<'a> {
    pub fn new(spec: &'a IfsSpec, cap: usize) -> Self {
        let mut vertices = BTreeMap::new();
        vertices.insert(AffineMap::identity(), Word::empty());
        FrameBuilder { spec, k: 0, vertices, cap }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    fn insert(next: &mut BTreeMap<AffineMap, Word>, map: AffineMap, word: Word) {
        match next.get_mut(&map) {
            Some(w) if *w <= word => {}
            Some(w) => *w = word,
            None => {
                next.insert(map, word);
            }
        }
    }

    /// Move to generation `k + 1`.
    pub fn advance(&mut self) -> Result<()> {
        let spec = self.spec;
        let mut next: BTreeMap<AffineMap, Word> = BTreeMap::new();
        match spec.scheme {
            Scheme::Sigma => {
                for (map, word) in &self.vertices {
                    for (j, f) in spec.maps.iter().enumerate() {
                        Self::insert(&mut next, map.compose(f), word.extended(j as u16 + 1));
                    }
                    if next.len() > self.cap {
                        return Err(Error::GenerationTooLarge { k: self.k + 1, count: next.len(), cap: self.cap });
                    }
                }
            }
            Scheme::Lambda => {
                let threshold = rational_pow(&spec.rho_min(), (self.k + 1) as u32);
                for (map, word) in &self.vertices {
                    let mut stack = vec![(map.clone(), word.clone())];
                    while let Some((g, w)) = stack.pop() {
                        if g.ratio <= threshold {
                            Self::insert(&mut next, g, w);
                        } else {
                            for (j, f) in spec.maps.iter().enumerate() {
                                stack.push((g.compose(f), w.extended(j as u16 + 1)));
                            }
                        }
                    }
                    if next.len() > self.cap {
                        return Err(Error::GenerationTooLarge { k: self.k + 1, count: next.len(), cap: self.cap });
                    }
                }
            }
        }
        self.vertices = next;
        self.k += 1;
        Ok(())
    }

    /// Materialize the current generation.
    pub fn frame(&self) -> GenerationFrame {
        let mut verts: Vec<Vertex> =
            self.vertices.iter().map(|(m, w)| Vertex { map: m.clone(), word: w.clone() }).collect();
        verts.sort_by(|a, b| a.map.offset.cmp(&b.map.offset).then_with(|| a.map.right().cmp(&b.map.right())));
        let mut islands: Vec<Island> = Vec::new();
        let mut lakes = Vec::new();
        let mut touching = Vec::new();
        for v in &verts {
            let (l, r) = (v.map.offset.clone(), v.map.right());
            if let Some(cur) = islands.last_mut() {
                if l < cur.right {
                    if r > cur.right {
                        cur.right = r;
                    }
                    cur.vertices.push(v.map.clone());
                    continue;
                }
                if l == cur.right {
                    touching.push(true);
                } else {
                    touching.push(false);
                    lakes.push(Lake { left: cur.right.clone(), right: l.clone() });
                }
            }
            islands.push(Island {
                left: l,
                right: r,
                vertices: vec![v.map.clone()],
                generation: self.k,
                type_id: None,
            });
        }
        GenerationFrame { k: self.k, vertices: verts, islands, lakes, touching }
    }
}

/// Frame of generation `k` with the default vertex cap.
pub fn build_frame(spec: &IfsSpec, k: usize) -> Result<GenerationFrame> {
    build_frame_capped(spec, k, DEFAULT_VERTEX_CAP)
}

pub fn build_frame_capped(spec: &IfsSpec, k: usize, cap: usize) -> Result<GenerationFrame> {
    let mut b = FrameBuilder::new(spec, cap);
    for _ in 0..k {
        b.advance()?;
    }
    Ok(b.frame())
}

/// Frames `0..=k`.
pub fn build_frames(spec: &IfsSpec, k: usize, cap: usize) -> Result<Vec<GenerationFrame>> {
    let mut b = FrameBuilder::new(spec, cap);
    let mut out = vec![b.frame()];
    for _ in 0..k {
        b.advance()?;
        out.push(b.frame());
    }
    Ok(out)
}

pub fn frame_stats(frame: &GenerationFrame) -> FrameStats {
    let lens: Vec<Rational> = frame.islands.iter().map(|i| i.length()).collect();
    let beta_min = lens.iter().min().unwrap().clone();
    let beta_max = lens.iter().max().unwrap().clone();
    let gamma_min_pos = frame.lakes.iter().map(|l| Rational::from(&l.right - &l.left)).min();
    let gamma_min = if frame.islands.len() < 2 {
        None
    } else if frame.touching.iter().any(|&t| t) {
        Some(Rational::from(0))
    } else {
        gamma_min_pos.clone()
    };
    FrameStats {
        beta_first: lens[0].clone(),
        beta_last: lens[lens.len() - 1].clone(),
        beta_min,
        beta_max,
        gamma_min,
        gamma_min_pos,
        island_count: frame.islands.len(),
    }
}
