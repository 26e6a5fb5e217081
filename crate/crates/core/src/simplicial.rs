//! Levelwise-finite based simplicial sets with cone, Kan suspension and Moore loops.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fplinalg::{ChainComplexFp, Direction, Field, FpMatrix, LinalgError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimplicialError {
    #[error("dimension {dim} exceeds cutoff {cutoff}")]
    Cutoff { dim: usize, cutoff: usize },
    #[error("simplicial identity {0} fails")]
    Identity(String),
    #[error("map is not simplicial: {0}")]
    NotSimplicial(String),
    #[error("malformed simplicial set: {0}")]
    Malformed(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, SimplicialError>;

/// Read access to a truncated based simplicial set.
pub trait SimplicialData {
    fn cutoff(&self) -> usize;
    fn count(&self, d: usize) -> usize;
    /// `d_i` on a simplex of dimension `d >= 1`.
    fn face(&self, d: usize, x: usize, i: usize) -> usize;
    /// `s_i` on a simplex of dimension `d < cutoff`.
    fn degen(&self, d: usize, x: usize, i: usize) -> usize;
    fn basepoint(&self, d: usize) -> usize;
    fn is_degenerate(&self, d: usize, x: usize) -> bool;
    fn label(&self, d: usize, x: usize) -> String;

    /// Nondegenerate simplices other than the basepoint.
    fn nondegenerate(&self, d: usize) -> Vec<usize> {
        let b = self.basepoint(d);
        (0..self.count(d)).filter(|&x| x != b && !self.is_degenerate(d, x)).collect()
    }

    /// `θ^* x` for a monotone `θ: [d'] → [d]` given by its values.
    fn apply_op(&self, d: usize, x: usize, theta: &[usize]) -> usize {
        let mut y = x;
        let mut dim = d;
        let image: BTreeSet<usize> = theta.iter().copied().collect();
        for k in (0..=d).rev() {
            if !image.contains(&k) {
                y = self.face(dim, y, k);
                dim -= 1;
            }
        }
        for u in 0..theta.len().saturating_sub(1) {
            if theta[u] == theta[u + 1] {
                y = self.degen(dim, y, u);
                dim += 1;
            }
        }
        y
    }

    fn vertex(&self, d: usize, x: usize, k: usize) -> usize {
        self.apply_op(d, x, &[k])
    }
}

/// Coface `δ^i: [d-1] → [d]` as a value list.
pub fn coface(d: usize, i: usize) -> Vec<usize> {
    (0..d).map(|t| if t < i { t } else { t + 1 }).collect()
}

/// Codegeneracy `σ^i: [d+1] → [d]` as a value list.
pub fn codegeneracy(d: usize, i: usize) -> Vec<usize> {
    (0..d + 2).map(|t| if t <= i { t } else { t - 1 }).collect()
}

/// Explicit based simplicial set with all simplices up to a cutoff.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasedSimplicialSet {
    cutoff: usize,
    labels: Vec<Vec<String>>,
    faces: Vec<Vec<u32>>,
    degens: Vec<Vec<u32>>,
    basepoint: Vec<usize>,
    degenerate: Vec<Vec<bool>>,
}

impl SimplicialData for BasedSimplicialSet {
    fn cutoff(&self) -> usize {
        self.cutoff
    }
    fn count(&self, d: usize) -> usize {
        self.labels[d].len()
    }
    fn face(&self, d: usize, x: usize, i: usize) -> usize {
        self.faces[d][x * (d + 1) + i] as usize
    }
    fn degen(&self, d: usize, x: usize, i: usize) -> usize {
        assert!(d < self.cutoff, "degeneracy beyond cutoff");
        self.degens[d][x * (d + 1) + i] as usize
    }
    fn basepoint(&self, d: usize) -> usize {
        self.basepoint[d]
    }
    fn is_degenerate(&self, d: usize, x: usize) -> bool {
        self.degenerate[d][x]
    }
    fn label(&self, d: usize, x: usize) -> String {
        self.labels[d][x].clone()
    }
}

impl BasedSimplicialSet {
    /// Builds explicit tables from operator functions. Degeneracy flags use
    /// `x` degenerate iff `x = s_i d_i x` for some `i`.
    pub fn build(
        cutoff: usize,
        labels: Vec<Vec<String>>,
        basepoint: Vec<usize>,
        face: impl Fn(usize, usize, usize) -> usize,
        degen: impl Fn(usize, usize, usize) -> usize,
    ) -> Result<BasedSimplicialSet> {
        if labels.len() != cutoff + 1 || basepoint.len() != cutoff + 1 {
            return Err(SimplicialError::Malformed("dimension lists do not match cutoff".into()));
        }
        let mut faces = vec![Vec::new()];
        for d in 1..=cutoff {
            let n = labels[d].len();
            let mut t = Vec::with_capacity(n * (d + 1));
            for x in 0..n {
                for i in 0..=d {
                    let y = face(d, x, i);
                    if y >= labels[d - 1].len() {
                        return Err(SimplicialError::Malformed(format!("face out of range in dim {d}")));
                    }
                    t.push(y as u32);
                }
            }
            faces.push(t);
        }
        let mut degens = Vec::new();
        for d in 0..cutoff {
            let n = labels[d].len();
            let mut t = Vec::with_capacity(n * (d + 1));
            for x in 0..n {
                for i in 0..=d {
                    let y = degen(d, x, i);
                    if y >= labels[d + 1].len() {
                        return Err(SimplicialError::Malformed(format!("degeneracy out of range in dim {d}")));
                    }
                    t.push(y as u32);
                }
            }
            degens.push(t);
        }
        degens.push(Vec::new());
        let mut s = BasedSimplicialSet { cutoff, labels, faces, degens, basepoint, degenerate: Vec::new() };
        let mut flags = vec![vec![false; s.count(0)]];
        for d in 1..=cutoff {
            let f = (0..s.count(d)).map(|x| (0..d).any(|i| s.degens[d - 1][s.face(d, x, i) * d + i] as usize == x)).collect();
            flags.push(f);
        }
        s.degenerate = flags;
        Ok(s)
    }

    pub fn labels(&self, d: usize) -> &[String] {
        &self.labels[d]
    }

    pub fn index_of(&self, d: usize, label: &str) -> Option<usize> {
        self.labels[d].iter().position(|l| l == label)
    }

    /// Nondegenerate counts per dimension, optionally counting the basepoint vertex.
    pub fn nondegenerate_counts(&self, include_basepoint: bool) -> Vec<usize> {
        (0..=self.cutoff)
            .map(|d| {
                let n = self.nondegenerate(d).len();
                if include_basepoint && d == 0 {
                    n + 1
                } else {
                    n
                }
            })
            .collect()
    }

    /// Exhaustive check of the simplicial identities and basepoint stability.
    pub fn validate(&self) -> Result<()> {
        let dd = self.cutoff;
        for d in 0..=dd {
            let b = self.basepoint[d];
            if b >= self.count(d) {
                return Err(SimplicialError::Malformed(format!("basepoint missing in dim {d}")));
            }
            if d >= 1 && (0..=d).any(|i| self.face(d, b, i) != self.basepoint[d - 1]) {
                return Err(SimplicialError::Identity("faces of basepoint".into()));
            }
            if d < dd && (0..=d).any(|i| self.degen(d, b, i) != self.basepoint[d + 1]) {
                return Err(SimplicialError::Identity("degeneracies of basepoint".into()));
            }
        }
        for d in 0..=dd {
            for x in 0..self.count(d) {
                if d >= 2 {
                    for j in 1..=d {
                        for i in 0..j {
                            if self.face(d - 1, self.face(d, x, j), i) != self.face(d - 1, self.face(d, x, i), j - 1) {
                                return Err(SimplicialError::Identity(format!("d_{i} d_{j} in dim {d}")));
                            }
                        }
                    }
                }
                if d < dd {
                    for j in 0..=d {
                        let sx = self.degen(d, x, j);
                        if self.face(d + 1, sx, j) != x || self.face(d + 1, sx, j + 1) != x {
                            return Err(SimplicialError::Identity(format!("d s_{j} = id in dim {d}")));
                        }
                        for i in 0..=d + 1 {
                            let lhs = self.face(d + 1, sx, i);
                            if i < j {
                                let rhs = self.degen(d - 1, self.face(d, x, i), j - 1);
                                if lhs != rhs {
                                    return Err(SimplicialError::Identity(format!("d_{i} s_{j} in dim {d}")));
                                }
                            } else if i > j + 1 {
                                let rhs = self.degen(d - 1, self.face(d, x, i - 1), j);
                                if lhs != rhs {
                                    return Err(SimplicialError::Identity(format!("d_{i} s_{j} in dim {d}")));
                                }
                            }
                        }
                    }
                }
                if d + 1 < dd {
                    for j in 0..=d {
                        for i in 0..=j {
                            let lhs = self.degen(d + 1, self.degen(d, x, j), i);
                            let rhs = self.degen(d + 1, self.degen(d, x, i), j + 1);
                            if lhs != rhs {
                                return Err(SimplicialError::Identity(format!("s_{i} s_{j} in dim {d}")));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Restriction to dimensions `<= d`.
    pub fn truncate(&self, d: usize) -> Result<BasedSimplicialSet> {
        if d > self.cutoff {
            return Err(SimplicialError::Cutoff { dim: d, cutoff: self.cutoff });
        }
        let mut degens = self.degens[..d].to_vec();
        degens.push(Vec::new());
        Ok(BasedSimplicialSet {
            cutoff: d,
            labels: self.labels[..=d].to_vec(),
            faces: self.faces[..=d].to_vec(),
            degens,
            basepoint: self.basepoint[..=d].to_vec(),
            degenerate: self.degenerate[..=d].to_vec(),
        })
    }

    /// Based simplicial set of a simplicial complex on vertices `0..n`, with the
    /// subcomplex generated by `collapse` identified to the basepoint. An empty
    /// `collapse` adds a disjoint basepoint.
    pub fn from_complex(n: usize, facets: &[Vec<usize>], collapse: &[Vec<usize>], cutoff: usize) -> Result<BasedSimplicialSet> {
        let close = |fs: &[Vec<usize>]| -> Result<BTreeSet<Vec<usize>>> {
            let mut out = BTreeSet::new();
            for f in fs {
                let mut f = f.clone();
                f.sort_unstable();
                f.dedup();
                if f.iter().any(|&v| v >= n) {
                    return Err(SimplicialError::Malformed("vertex out of range".into()));
                }
                for mask in 1u32..(1 << f.len()) {
                    out.insert(f.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|e| *e.1).collect());
                }
            }
            Ok(out)
        };
        let k = close(facets)?;
        let l = close(collapse)?;
        if !l.is_subset(&k) {
            return Err(SimplicialError::Malformed("collapsed subcomplex not contained in complex".into()));
        }
        let mut seqs: Vec<Vec<Vec<usize>>> = Vec::new();
        let mut index: Vec<HashMap<Vec<usize>, usize>> = Vec::new();
        for e in 0..=cutoff {
            let mut list = vec![Vec::new()];
            let mut map = HashMap::new();
            let mut cur = vec![0usize; e + 1];
            loop {
                let set: Vec<usize> = {
                    let mut s = cur.clone();
                    s.dedup();
                    s
                };
                if k.contains(&set) && !l.contains(&set) {
                    map.insert(cur.clone(), list.len());
                    list.push(cur.clone());
                }
                let mut pos = e as isize;
                while pos >= 0 && cur[pos as usize] == n - 1 {
                    pos -= 1;
                }
                if pos < 0 {
                    break;
                }
                let v = cur[pos as usize] + 1;
                for c in cur.iter_mut().skip(pos as usize) {
                    *c = v;
                }
            }
            seqs.push(list);
            index.push(map);
        }
        let labels = seqs
            .iter()
            .map(|l| l.iter().enumerate().map(|(i, s)| if i == 0 { "*".to_string() } else { tuple_label(s) }).collect())
            .collect();
        let lookup = |d: usize, s: Vec<usize>| -> usize { index[d].get(&s).copied().unwrap_or(0) };
        BasedSimplicialSet::build(
            cutoff,
            labels,
            vec![0; cutoff + 1],
            |d, x, i| {
                if x == 0 {
                    return 0;
                }
                let mut s = seqs[d][x].clone();
                s.remove(i);
                lookup(d - 1, s)
            },
            |d, x, i| {
                if x == 0 {
                    return 0;
                }
                let mut s = seqs[d][x].clone();
                s.insert(i, s[i]);
                lookup(d + 1, s)
            },
        )
    }

    /// `Δ_d` based at vertex 0.
    pub fn standard_simplex(d: usize, cutoff: usize) -> Result<BasedSimplicialSet> {
        BasedSimplicialSet::from_complex(d + 1, &[(0..=d).collect()], &[vec![0]], cutoff)
    }

    /// `Δ_{d+}`: the standard simplex with a disjoint basepoint.
    pub fn standard_simplex_plus(d: usize, cutoff: usize) -> Result<BasedSimplicialSet> {
        BasedSimplicialSet::from_complex(d + 1, &[(0..=d).collect()], &[], cutoff)
    }

    /// `m` points plus a disjoint basepoint.
    pub fn points_plus(m: usize, cutoff: usize) -> Result<BasedSimplicialSet> {
        let facets: Vec<Vec<usize>> = (0..m).map(|v| vec![v]).collect();
        BasedSimplicialSet::from_complex(m.max(1), &facets, &[], cutoff)
    }

    /// `S^n = Δ_n/∂Δ_n`; `S^0` is one point plus the basepoint.
    pub fn sphere(n: usize, cutoff: usize) -> Result<BasedSimplicialSet> {
        if n == 0 {
            return BasedSimplicialSet::points_plus(1, cutoff);
        }
        let top: Vec<usize> = (0..=n).collect();
        let boundary: Vec<Vec<usize>> = (0..=n).map(|i| top.iter().copied().filter(|&v| v != i).collect()).collect();
        BasedSimplicialSet::from_complex(n + 1, &[top], &boundary, cutoff)
    }

    /// The point `*`.
    pub fn point(cutoff: usize) -> Result<BasedSimplicialSet> {
        BasedSimplicialSet::from_complex(1, &[vec![0]], &[vec![0]], cutoff)
    }

    /// Minimal six-vertex triangulation of the real projective plane.
    pub fn rp2_facets() -> Vec<Vec<usize>> {
        vec![
            vec![0, 1, 2],
            vec![0, 2, 3],
            vec![0, 3, 4],
            vec![0, 4, 5],
            vec![0, 5, 1],
            vec![1, 2, 4],
            vec![2, 3, 5],
            vec![3, 4, 1],
            vec![4, 5, 2],
            vec![5, 1, 3],
        ]
    }

    /// `RP^2_+` from the six-vertex triangulation.
    pub fn rp2_plus(cutoff: usize) -> Result<BasedSimplicialSet> {
        BasedSimplicialSet::from_complex(6, &BasedSimplicialSet::rp2_facets(), &[], cutoff)
    }

    /// `RP^2` based at vertex 0.
    pub fn rp2(cutoff: usize) -> Result<BasedSimplicialSet> {
        BasedSimplicialSet::from_complex(6, &BasedSimplicialSet::rp2_facets(), &[vec![0]], cutoff)
    }

    /// Random quotient `K/L` of a random complex on at most `max_vertices` vertices.
    pub fn random(rng: &mut impl Rng, max_vertices: usize, max_facet_dim: usize, cutoff: usize) -> Result<BasedSimplicialSet> {
        let n = rng.gen_range(1..=max_vertices.max(1));
        let nf = rng.gen_range(1..=4);
        let mut facets = Vec::new();
        for _ in 0..nf {
            let size = rng.gen_range(1..=(max_facet_dim + 1).min(n));
            let mut vs: Vec<usize> = (0..n).collect();
            for i in 0..size {
                let j = rng.gen_range(i..n);
                vs.swap(i, j);
            }
            vs.truncate(size);
            facets.push(vs);
        }
        let collapse: Vec<Vec<usize>> = match rng.gen_range(0..3) {
            0 => vec![],
            1 => vec![vec![facets[0][0]]],
            _ => vec![facets[0].iter().take(2).copied().collect()],
        };
        BasedSimplicialSet::from_complex(n, &facets, &collapse, cutoff)
    }

    pub fn to_json(&self) -> SimplicialJson {
        SimplicialJson {
            cutoff: self.cutoff,
            dims: self.labels.clone(),
            faces: (0..=self.cutoff)
                .map(|d| (0..self.count(d)).map(|x| if d == 0 { vec![] } else { (0..=d).map(|i| self.face(d, x, i)).collect() }).collect())
                .collect(),
            degens: (0..=self.cutoff)
                .map(|d| {
                    (0..self.count(d))
                        .map(|x| if d == self.cutoff { vec![] } else { (0..=d).map(|i| self.degen(d, x, i)).collect() })
                        .collect()
                })
                .collect(),
            basepoint: self.labels[0][self.basepoint[0]].clone(),
        }
    }

    pub fn from_json(j: &SimplicialJson) -> Result<BasedSimplicialSet> {
        let cutoff = j.cutoff;
        if j.dims.len() != cutoff + 1 || j.faces.len() != cutoff + 1 || j.degens.len() < cutoff {
            return Err(SimplicialError::Malformed("table lengths do not match cutoff".into()));
        }
        let b0 = j.dims[0]
            .iter()
            .position(|l| *l == j.basepoint)
            .ok_or_else(|| SimplicialError::Malformed("basepoint not a 0-simplex".into()))?;
        let mut base = vec![b0];
        for d in 0..cutoff {
            let row = j.degens[d].get(base[d]).ok_or_else(|| SimplicialError::Malformed("degeneracy table short".into()))?;
            base.push(*row.first().ok_or_else(|| SimplicialError::Malformed("degeneracy table short".into()))?);
        }
        for d in 0..=cutoff {
            if j.faces[d].len() != j.dims[d].len() || j.faces[d].iter().any(|r| r.len() != if d == 0 { 0 } else { d + 1 }) {
                return Err(SimplicialError::Malformed(format!("face table malformed in dim {d}")));
            }
            if d < cutoff && (j.degens[d].len() != j.dims[d].len() || j.degens[d].iter().any(|r| r.len() != d + 1)) {
                return Err(SimplicialError::Malformed(format!("degeneracy table malformed in dim {d}")));
            }
        }
        let s = BasedSimplicialSet::build(cutoff, j.dims.clone(), base, |d, x, i| j.faces[d][x][i], |d, x, i| j.degens[d][x][i])?;
        s.validate()?;
        Ok(s)
    }
}

pub fn tuple_label(s: &[usize]) -> String {
    let parts: Vec<String> = s.iter().map(|v| v.to_string()).collect();
    format!("({})", parts.join(","))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplicialJson {
    pub cutoff: usize,
    pub dims: Vec<Vec<String>>,
    pub faces: Vec<Vec<Vec<usize>>>,
    pub degens: Vec<Vec<Vec<usize>>>,
    pub basepoint: String,
}

/// Indexing of the wedge summands `(j, x)` used by cones and suspensions.
#[derive(Clone, Debug)]
pub struct WedgeIndex {
    quotient: bool,
    nonbase: Vec<Vec<usize>>,
    position: Vec<HashMap<usize, usize>>,
    offsets: Vec<Vec<usize>>,
    counts: Vec<usize>,
}

impl WedgeIndex {
    pub fn new(s: &impl SimplicialData, cutoff: usize, quotient: bool) -> WedgeIndex {
        let inner = s.cutoff();
        let nonbase: Vec<Vec<usize>> = (0..=inner).map(|j| (0..s.count(j)).filter(|&x| x != s.basepoint(j)).collect()).collect();
        let position = nonbase.iter().map(|l| l.iter().enumerate().map(|(i, &x)| (x, i)).collect()).collect();
        let mut offsets = Vec::new();
        let mut counts = Vec::new();
        for e in 0..=cutoff {
            let top = if quotient { e.checked_sub(1) } else { Some(e) };
            let mut off = Vec::new();
            let mut c = 1;
            if let Some(top) = top {
                for nb in nonbase.iter().take(top.min(inner) + 1) {
                    off.push(c);
                    c += nb.len();
                }
            }
            offsets.push(off);
            counts.push(c);
        }
        WedgeIndex { quotient, nonbase, position, offsets, counts }
    }

    pub fn count(&self, e: usize) -> usize {
        self.counts[e]
    }

    /// `(j, x)` for a non-basepoint id, `None` for the basepoint.
    pub fn decode(&self, e: usize, id: usize) -> Option<(usize, usize)> {
        if id == 0 {
            return None;
        }
        let off = &self.offsets[e];
        let j = off.partition_point(|&o| o <= id) - 1;
        Some((j, self.nonbase[j][id - off[j]]))
    }

    pub fn encode(&self, e: usize, j: usize, x: usize) -> usize {
        self.offsets[e][j] + self.position[j][&x]
    }

    /// The restriction rule: `θ^*(j, x)`.
    pub fn act(&self, s: &impl SimplicialData, e: usize, id: usize, theta: &[usize]) -> usize {
        let Some((j, x)) = self.decode(e, id) else { return 0 };
        let dp = theta.len() - 1;
        let m = theta.iter().filter(|&&t| t + j >= e).count();
        if m == 0 {
            return 0;
        }
        let jp = m - 1;
        if self.quotient && jp == dp {
            return 0;
        }
        let restricted: Vec<usize> = (0..=jp).map(|t| theta[dp - jp + t] + j - e).collect();
        let y = s.apply_op(j, x, &restricted);
        if y == s.basepoint(jp) {
            0
        } else {
            self.encode(dp, jp, y)
        }
    }
}

fn wedge_tower(s: &BasedSimplicialSet, cutoff: usize, quotient: bool) -> Result<BasedSimplicialSet> {
    let w = WedgeIndex::new(s, cutoff, quotient);
    let labels = (0..=cutoff)
        .map(|e| {
            (0..w.count(e))
                .map(|id| match w.decode(e, id) {
                    None => "*".to_string(),
                    Some((j, x)) => format!("({j},{})", s.label(j, x)),
                })
                .collect()
        })
        .collect();
    BasedSimplicialSet::build(
        cutoff,
        labels,
        vec![0; cutoff + 1],
        |e, id, i| w.act(s, e, id, &coface(e, i)),
        |e, id, i| w.act(s, e, id, &codegeneracy(e, i)),
    )
}

/// Cone `C(S)`, with `C(S)_d = S_d ∨ ⋯ ∨ S_0`.
pub fn cone(s: &BasedSimplicialSet) -> Result<BasedSimplicialSet> {
    wedge_tower(s, s.cutoff, false)
}

/// Kan suspension `ΣS = C(S)/S`; the cutoff grows by one.
pub fn kan_suspension(s: &BasedSimplicialSet) -> Result<BasedSimplicialSet> {
    wedge_tower(s, s.cutoff + 1, true)
}

/// Moore loops `ΩS` together with the inclusion `(ΩS)_d → S_{d+1}`.
pub fn moore_loop_with_inclusion(s: &BasedSimplicialSet) -> Result<(BasedSimplicialSet, Vec<Vec<usize>>)> {
    if s.cutoff == 0 {
        return Err(SimplicialError::Cutoff { dim: 1, cutoff: 0 });
    }
    let cutoff = s.cutoff - 1;
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut pos: Vec<HashMap<usize, usize>> = Vec::new();
    for d in 0..=cutoff {
        let b = s.basepoint(d + 1);
        let mut list = vec![b];
        for x in 0..s.count(d + 1) {
            if x != b && s.face(d + 1, x, 0) == s.basepoint(d) && s.vertex(d + 1, x, 0) == s.basepoint(0) {
                list.push(x);
            }
        }
        pos.push(list.iter().enumerate().map(|(i, &x)| (x, i)).collect());
        members.push(list);
    }
    let labels = members.iter().enumerate().map(|(d, l)| l.iter().map(|&x| s.label(d + 1, x)).collect()).collect();
    let set = BasedSimplicialSet::build(
        cutoff,
        labels,
        vec![0; cutoff + 1],
        |d, x, i| pos[d - 1][&s.face(d + 1, members[d][x], i + 1)],
        |d, x, i| pos[d + 1][&s.degen(d + 1, members[d][x], i + 1)],
    )?;
    Ok((set, members))
}

pub fn moore_loop(s: &BasedSimplicialSet) -> Result<BasedSimplicialSet> {
    Ok(moore_loop_with_inclusion(s)?.0)
}

/// A based simplicial map given by per-dimension id tables.
#[derive(Clone, Debug)]
pub struct SimplexMap {
    pub source: BasedSimplicialSet,
    pub target: BasedSimplicialSet,
    pub table: Vec<Vec<usize>>,
}

impl SimplexMap {
    pub fn new(source: BasedSimplicialSet, target: BasedSimplicialSet, table: Vec<Vec<usize>>) -> Result<SimplexMap> {
        let m = SimplexMap { source, target, table };
        m.validate()?;
        Ok(m)
    }

    fn top(&self) -> usize {
        self.source.cutoff.min(self.target.cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        let top = self.top();
        if self.table.len() < top + 1 {
            return Err(SimplicialError::NotSimplicial("table shorter than cutoff".into()));
        }
        for d in 0..=top {
            let t = &self.table[d];
            if t.len() != self.source.count(d) || t.iter().any(|&y| y >= self.target.count(d)) {
                return Err(SimplicialError::NotSimplicial(format!("table malformed in dim {d}")));
            }
            if t[self.source.basepoint(d)] != self.target.basepoint(d) {
                return Err(SimplicialError::NotSimplicial("basepoint not preserved".into()));
            }
            for x in 0..self.source.count(d) {
                if d >= 1 {
                    for i in 0..=d {
                        if self.table[d - 1][self.source.face(d, x, i)] != self.target.face(d, t[x], i) {
                            return Err(SimplicialError::NotSimplicial(format!("face d_{i} in dim {d}")));
                        }
                    }
                }
                if d < top {
                    for i in 0..=d {
                        if self.table[d + 1][self.source.degen(d, x, i)] != self.target.degen(d, t[x], i) {
                            return Err(SimplicialError::NotSimplicial(format!("degeneracy s_{i} in dim {d}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_injective(&self) -> bool {
        self.table.iter().all(|t| {
            let mut seen = BTreeSet::new();
            t.iter().all(|y| seen.insert(*y))
        })
    }

    pub fn is_bijective(&self) -> bool {
        self.is_injective() && (0..=self.top()).all(|d| self.table[d].len() == self.target.count(d))
    }

    /// `Σf: ΣS → ΣT`.
    pub fn suspend(&self) -> Result<SimplexMap> {
        let ss = kan_suspension(&self.source)?;
        let st = kan_suspension(&self.target)?;
        let ws = WedgeIndex::new(&self.source, ss.cutoff, true);
        let wt = WedgeIndex::new(&self.target, st.cutoff, true);
        let top = ss.cutoff.min(st.cutoff);
        let table = (0..=top)
            .map(|e| {
                (0..ss.count(e))
                    .map(|id| match ws.decode(e, id) {
                        None => 0,
                        Some((j, x)) => {
                            let y = self.table[j][x];
                            if y == self.target.basepoint(j) {
                                0
                            } else {
                                wt.encode(e, j, y)
                            }
                        }
                    })
                    .collect()
            })
            .collect();
        SimplexMap::new(ss, st, table)
    }
}

/// Unit `S → ΩΣS`, `s ↦ (d, s)`.
pub fn unit_map(s: &BasedSimplicialSet) -> Result<SimplexMap> {
    let sig = kan_suspension(s)?;
    let w = WedgeIndex::new(s, sig.cutoff, true);
    let (om, inc) = moore_loop_with_inclusion(&sig)?;
    let pos: Vec<HashMap<usize, usize>> = inc.iter().map(|l| l.iter().enumerate().map(|(i, &x)| (x, i)).collect()).collect();
    let table = (0..=s.cutoff)
        .map(|d| (0..s.count(d)).map(|x| if x == s.basepoint(d) { 0 } else { pos[d][&w.encode(d + 1, d, x)] }).collect())
        .collect();
    SimplexMap::new(s.clone(), om, table)
}

/// Counit `ΣΩS → S`.
pub fn counit_map(s: &BasedSimplicialSet) -> Result<SimplexMap> {
    let (om, inc) = moore_loop_with_inclusion(s)?;
    let sig = kan_suspension(&om)?;
    let w = WedgeIndex::new(&om, sig.cutoff, true);
    let top = sig.cutoff.min(s.cutoff);
    let table = (0..=top)
        .map(|e| {
            (0..sig.count(e))
                .map(|id| match w.decode(e, id) {
                    None => s.basepoint(e),
                    Some((j, y)) => {
                        let theta: Vec<usize> = (0..=e).map(|t| if t + j < e { 0 } else { t + j + 1 - e }).collect();
                        s.apply_op(j + 1, inc[j][y], &theta)
                    }
                })
                .collect()
        })
        .collect();
    SimplexMap::new(sig, s.clone(), table)
}

/// Normalized reduced chains on the window `[-1, cutoff]`; basis is the
/// nondegenerate non-basepoint simplices.
pub fn normalized_chains<S: SimplicialData + ?Sized>(s: &S, field: Field) -> Result<ChainComplexFp> {
    let top = s.cutoff();
    let nd: Vec<Vec<usize>> = (0..=top).map(|d| s.nondegenerate(d)).collect();
    let mut basis = vec![Vec::new()];
    for (d, l) in nd.iter().enumerate() {
        basis.push(l.iter().map(|&x| s.label(d, x)).collect());
    }
    let mut diffs = BTreeMap::new();
    for d in 1..=top {
        let pos: HashMap<usize, usize> = nd[d - 1].iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let cols = nd[d]
            .iter()
            .map(|&x| (0..=d).filter_map(|i| pos.get(&s.face(d, x, i)).map(|&r| (r, field.sign(i as i64)))).collect())
            .collect();
        diffs.insert(d as i64, FpMatrix::from_columns(field, nd[d - 1].len(), cols));
    }
    Ok(ChainComplexFp::new(field, Direction::Chain, -1, top as i64, basis, diffs)?)
}
