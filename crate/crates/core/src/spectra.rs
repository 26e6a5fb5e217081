//! Sequential spectra with Kan-suspension structure maps, Eilenberg–MacLane
//! spectra from cocycle simplices, and spectral (co)chains.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fplinalg::{ChainComplexFp, Direction, Echelon, Field, FpMatrix, LinalgError};
use crate::simplicial::{
    codegeneracy, coface, kan_suspension, moore_loop_with_inclusion, BasedSimplicialSet, SimplexMap, SimplicialData, SimplicialError,
    SimplicialJson, WedgeIndex,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectrumError {
    #[error("cutoff {cutoff} cannot hold dimension {need}")]
    Cutoff { need: usize, cutoff: usize },
    #[error("enumeration budget {budget} exceeded at level {level}, dimension {dim}: {count} simplices")]
    Budget { level: usize, dim: usize, count: u128, budget: u64 },
    #[error("window {lo}..{hi} needs dimension {need} at level {level}, cutoff is {cutoff}")]
    Window { lo: i64, hi: i64, level: usize, need: i64, cutoff: usize },
    #[error("levels do not match: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Simplicial(#[from] SimplicialError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, SpectrumError>;

/// Normalized cochains of degree `q` on `Δ_d`: one coordinate per `(q+1)`-subset of `[d]`.
#[derive(Clone, Debug)]
struct SimplexCochains {
    subsets: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl SimplexCochains {
    fn new(d: usize, q: usize) -> SimplexCochains {
        let mut subsets = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, d: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            for v in start..=d {
                if d + 1 - v < left {
                    break;
                }
                cur.push(v);
                rec(v + 1, d, left - 1, cur, out);
                cur.pop();
            }
        }
        rec(0, d, q + 1, &mut cur, &mut subsets);
        let index = subsets.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        SimplexCochains { subsets, index }
    }

    fn len(&self) -> usize {
        self.subsets.len()
    }
}

fn coboundary(field: Field, d: usize, q: usize) -> FpMatrix {
    let src = SimplexCochains::new(d, q);
    let tgt = SimplexCochains::new(d, q + 1);
    let cols = (0..src.len())
        .map(|c| {
            let mut col: Vec<(usize, u32)> = Vec::new();
            for (r, s) in tgt.subsets.iter().enumerate() {
                for i in 0..s.len() {
                    let mut t = s.clone();
                    t.remove(i);
                    if src.index.get(&t) == Some(&c) {
                        col.push((r, field.sign(i as i64)));
                    }
                }
            }
            col
        })
        .collect();
    FpMatrix::from_columns(field, tgt.len(), cols)
}

/// Cocycles `Z^q(Δ_d; F_p)` with a reduced basis, so coordinates are values at pivots.
#[derive(Clone, Debug)]
struct CocycleSpace {
    cochains: SimplexCochains,
    pivots: Vec<usize>,
    rows: Vec<Vec<u32>>,
}

impl CocycleSpace {
    fn new(field: Field, d: usize, q: usize) -> CocycleSpace {
        let cochains = SimplexCochains::new(d, q);
        let kernel = coboundary(field, d, q).kernel_basis();
        let mut ech = Echelon::new(field, cochains.len());
        for v in &kernel {
            ech.insert_sparse(v);
        }
        let (pivots, rows) = ech.sorted_basis().into_iter().unzip();
        CocycleSpace { cochains, pivots, rows }
    }

    fn dim(&self) -> usize {
        self.rows.len()
    }

    fn coords(&self, v: &[u32]) -> Vec<u32> {
        self.pivots.iter().map(|&c| v[c]).collect()
    }

    fn vector(&self, field: Field, coords: &[u32]) -> Vec<u32> {
        let mut v = vec![0u32; self.cochains.len()];
        for (row, &c) in self.rows.iter().zip(coords) {
            if c != 0 {
                for (x, &r) in v.iter_mut().zip(row) {
                    *x = field.add(*x, field.mul(c, r));
                }
            }
        }
        v
    }
}

/// `K(F_p, q)` through dimension `cutoff`, with simplices as cocycle vectors.
#[derive(Clone, Debug)]
pub struct EmLevel {
    pub field: Field,
    pub q: usize,
    pub cutoff: usize,
    spaces: Vec<CocycleSpace>,
}

impl EmLevel {
    pub fn new(field: Field, q: usize, cutoff: usize) -> EmLevel {
        let spaces = (0..=cutoff + 1).map(|d| CocycleSpace::new(field, d, q)).collect();
        EmLevel { field, q, cutoff, spaces }
    }

    /// `dim Z^q(Δ_d)`.
    pub fn cocycle_dim(&self, d: usize) -> usize {
        self.spaces[d].dim()
    }

    pub fn simplex_count(&self, d: usize) -> u128 {
        (self.field.p() as u128).saturating_pow(self.cocycle_dim(d) as u32)
    }

    /// Cocycle basis of `Z^q(Δ_d)` as dense cochain vectors.
    pub fn cocycle_basis(&self, d: usize) -> Vec<Vec<u32>> {
        self.spaces[d].rows.clone()
    }

    /// `θ^*α` for `θ: [d'] → [d]` given by its values.
    pub fn pullback(&self, d: usize, alpha: &[u32], theta: &[usize]) -> Vec<u32> {
        let dp = theta.len() - 1;
        let src = &self.spaces[d].cochains;
        let tgt = SimplexCochains::new(dp, self.q);
        tgt.subsets
            .iter()
            .map(|s| {
                let img: Vec<usize> = s.iter().map(|&t| theta[t]).collect();
                if img.windows(2).any(|w| w[0] >= w[1]) {
                    0
                } else {
                    alpha[src.index[&img]]
                }
            })
            .collect()
    }

    pub fn coords(&self, d: usize, alpha: &[u32]) -> Vec<u32> {
        self.spaces[d].coords(alpha)
    }

    pub fn vector(&self, d: usize, coords: &[u32]) -> Vec<u32> {
        self.spaces[d].vector(self.field, coords)
    }

    pub fn is_cocycle(&self, d: usize, alpha: &[u32]) -> bool {
        let v: Vec<(usize, u32)> = alpha.iter().enumerate().filter(|(_, &x)| x != 0).map(|(i, &x)| (i, x)).collect();
        coboundary(self.field, d, self.q).apply_sparse(&v).is_empty()
    }

    fn encode(&self, coords: &[u32]) -> usize {
        coords.iter().rev().fold(0usize, |acc, &c| acc * self.field.p() as usize + c as usize)
    }

    fn decode(&self, d: usize, mut id: usize) -> Vec<u32> {
        let p = self.field.p() as usize;
        (0..self.cocycle_dim(d))
            .map(|_| {
                let c = (id % p) as u32;
                id /= p;
                c
            })
            .collect()
    }

    /// Explicit simplicial set; every dimension must fit the budget.
    pub fn to_simplicial(&self, level: usize, budget: u64) -> Result<BasedSimplicialSet> {
        for d in 0..=self.cutoff {
            let count = self.simplex_count(d);
            if count > budget as u128 {
                return Err(SpectrumError::Budget { level, dim: d, count, budget });
            }
        }
        let labels = (0..=self.cutoff)
            .map(|d| {
                (0..self.simplex_count(d) as usize)
                    .map(|id| {
                        if id == 0 {
                            "*".to_string()
                        } else {
                            let c: Vec<String> = self.decode(d, id).iter().map(|x| x.to_string()).collect();
                            format!("z[{}]", c.join(""))
                        }
                    })
                    .collect()
            })
            .collect();
        // operators are linear in cocycle coordinates: tabulate images of basis vectors
        let matrix = |d: usize, theta: Vec<usize>| -> Vec<Vec<u32>> {
            let dp = theta.len() - 1;
            self.cocycle_basis(d).iter().map(|b| self.coords(dp, &self.pullback(d, b, &theta))).collect()
        };
        let faces: Vec<Vec<Vec<Vec<u32>>>> =
            (0..=self.cutoff).map(|d| if d == 0 { Vec::new() } else { (0..=d).map(|i| matrix(d, coface(d, i))).collect() }).collect();
        let degens: Vec<Vec<Vec<Vec<u32>>>> = (0..self.cutoff).map(|d| (0..=d).map(|i| matrix(d, codegeneracy(d, i))).collect()).collect();
        let p = self.field.p() as usize;
        let apply = |m: &[Vec<u32>], mut id: usize, out_dim: usize| -> usize {
            let mut acc = vec![0u32; out_dim];
            for col in m {
                let c = (id % p) as u32;
                id /= p;
                if c != 0 {
                    for (a, &x) in acc.iter_mut().zip(col) {
                        *a = self.field.add(*a, self.field.mul(c, x));
                    }
                }
            }
            self.encode(&acc)
        };
        Ok(BasedSimplicialSet::build(
            self.cutoff,
            labels,
            vec![0; self.cutoff + 1],
            |d, x, i| apply(&faces[d][i], x, self.cocycle_dim(d - 1)),
            |d, x, i| apply(&degens[d][i], x, self.cocycle_dim(d + 1)),
        )?)
    }
}

/// `σ(α)(s) = α(s_1−1, …, s_{q+1}−1)` when `s_0 = 0`, else 0: an `(q+1)`-cochain on `Δ_{d+1}`.
pub fn em_sigma(lower: &EmLevel, d: usize, alpha: &[u32]) -> Vec<u32> {
    let src = &lower.spaces[d].cochains;
    let tgt = SimplexCochains::new(d + 1, lower.q + 1);
    tgt.subsets
        .iter()
        .map(|s| {
            if s[0] != 0 {
                return 0;
            }
            let t: Vec<usize> = s[1..].iter().map(|&v| v - 1).collect();
            alpha[src.index[&t]]
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct SigmaCheck {
    pub q: usize,
    pub dim: usize,
    pub source_dim: usize,
    pub loop_dim: usize,
    pub rank: usize,
    pub lands_in_loops: bool,
    pub simplicial: bool,
    pub bijective: bool,
}

/// Linear check that `σ: K(F_p,q)_d → (ΩK(F_p,q+1))_d` is a bijection.
pub fn check_em_sigma(field: Field, q: usize, d: usize) -> SigmaCheck {
    let lower = EmLevel::new(field, q, d);
    let upper = EmLevel::new(field, q + 1, d + 1);
    let basis = lower.cocycle_basis(d);
    let images: Vec<Vec<u32>> = basis.iter().map(|a| em_sigma(&lower, d, a)).collect();
    let mut ech = Echelon::new(field, upper.spaces[d + 1].cochains.len());
    for v in &images {
        ech.insert_dense(v);
    }
    // loops: cocycles on Δ_{d+1} vanishing on every face away from vertex 0
    let cochains = &upper.spaces[d + 1].cochains;
    let mut cols: Vec<Vec<(usize, u32)>> = vec![Vec::new(); cochains.len()];
    for (r, c, v) in coboundary(field, d + 1, q + 1).triplets() {
        cols[c].push((r, v));
    }
    let nrows_delta = SimplexCochains::new(d + 1, q + 2).len();
    let mut extra = 0;
    for (c, s) in cochains.subsets.iter().enumerate() {
        if s[0] != 0 {
            cols[c].push((nrows_delta + extra, 1));
            extra += 1;
        }
    }
    for col in cols.iter_mut() {
        col.sort_unstable();
    }
    let loops = FpMatrix::from_columns(field, nrows_delta + extra, cols).kernel_basis().len();
    let lands = images.iter().all(|b| upper.is_cocycle(d + 1, b) && cochains.subsets.iter().zip(b).all(|(s, &x)| s[0] == 0 || x == 0));
    let mut simplicial = true;
    if d >= 1 {
        let thetas: Vec<Vec<usize>> = (0..=d).map(|i| coface(d, i)).collect();
        for a in &basis {
            for th in &thetas {
                let lhs = em_sigma(&lower, d - 1, &lower.pullback(d, a, th));
                let plus: Vec<usize> = std::iter::once(0).chain(th.iter().map(|&t| t + 1)).collect();
                let rhs = upper.pullback(d + 1, &em_sigma(&lower, d, a), &plus);
                simplicial &= lhs == rhs;
            }
        }
    }
    let rank = ech.rank();
    SigmaCheck {
        q,
        dim: d,
        source_dim: basis.len(),
        loop_dim: loops,
        rank,
        lands_in_loops: lands,
        simplicial,
        bijective: lands && rank == basis.len() && rank == loops,
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct FundamentalClassCheck {
    pub m: usize,
    pub cocycle: bool,
    pub compatible: bool,
}

/// `k_m(α) = α(id_[m])` is a cocycle on `K(F_p, m)`, and `k_{m+1}∘σ = k_m`.
pub fn check_fundamental_class(field: Field, m: usize) -> FundamentalClassCheck {
    let lower = EmLevel::new(field, m, m + 1);
    let top: Vec<usize> = (0..=m).collect();
    let k = |lvl: &EmLevel, d: usize, alpha: &[u32]| alpha[lvl.spaces[d].cochains.index[&top[..]]];
    // δk_m(x) = Σ (−1)^i k_m(d_i x), linear in x
    let cocycle = lower.cocycle_basis(m + 1).iter().all(|x| {
        let mut acc = 0u32;
        for i in 0..=m + 1 {
            let face = lower.pullback(m + 1, x, &coface(m + 1, i));
            acc = field.add(acc, field.mul(field.sign(i as i64), k(&lower, m, &face)));
        }
        acc == 0
    });
    let upper = EmLevel::new(field, m + 1, m + 1);
    let top_up: Vec<usize> = (0..=m + 1).collect();
    let compatible = lower.cocycle_basis(m).iter().all(|a| {
        let b = em_sigma(&lower, m, a);
        b[upper.spaces[m + 1].cochains.index[&top_up[..]]] == k(&lower, m, a)
    });
    FundamentalClassCheck { m, cocycle, compatible }
}

/// A sequential spectrum `E_0, …, E_L` with `ρ_n: ΣE_n → E_{n+1}`, all truncated at one cutoff.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub name: String,
    pub cutoff: usize,
    pub levels: Vec<BasedSimplicialSet>,
    pub rho: Vec<SimplexMap>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SpectrumJson {
    pub cutoff: usize,
    pub levels: Vec<SimplicialJson>,
    pub rho: Vec<Vec<Vec<usize>>>,
}

fn truncate_map(m: &SimplexMap, d: usize) -> Result<SimplexMap> {
    Ok(SimplexMap::new(m.source.truncate(d)?, m.target.truncate(d)?, m.table[..=d].to_vec())?)
}

impl Spectrum {
    pub fn top_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Checks every structure map and the shared cutoff.
    pub fn validate(&self) -> Result<()> {
        if self.rho.len() + 1 != self.levels.len() {
            return Err(SpectrumError::Mismatch("need one structure map per consecutive pair".into()));
        }
        for (n, e) in self.levels.iter().enumerate() {
            if e.cutoff() != self.cutoff {
                return Err(SpectrumError::Mismatch(format!("level {n} has cutoff {}", e.cutoff())));
            }
        }
        for (n, r) in self.rho.iter().enumerate() {
            if r.source != kan_suspension(&self.levels[n])? || r.target != self.levels[n + 1] {
                return Err(SpectrumError::Mismatch(format!("ρ_{n} has the wrong ends")));
            }
            r.validate()?;
        }
        Ok(())
    }

    /// Adjoint `σ_n: E_n → ΩE_{n+1}` through dimension `cutoff − 1`.
    pub fn adjoint(&self, n: usize) -> Result<SimplexMap> {
        let top = self.cutoff.checked_sub(1).ok_or(SpectrumError::Cutoff { need: 1, cutoff: 0 })?;
        let e = &self.levels[n];
        let w = WedgeIndex::new(e, self.cutoff + 1, true);
        let (om, inc) = moore_loop_with_inclusion(&self.levels[n + 1])?;
        let pos: Vec<HashMap<usize, usize>> = inc.iter().map(|l| l.iter().enumerate().map(|(i, &x)| (x, i)).collect()).collect();
        let mut table = Vec::new();
        for d in 0..=top {
            let mut row = Vec::new();
            for x in 0..e.count(d) {
                if x == e.basepoint(d) {
                    row.push(0);
                    continue;
                }
                let y = self.rho[n].table[d + 1][w.encode(d + 1, d, x)];
                row.push(*pos[d].get(&y).ok_or_else(|| SpectrumError::Mismatch(format!("σ_{n} misses loops in dim {d}")))?);
            }
            table.push(row);
        }
        Ok(SimplexMap::new(e.truncate(top)?, om, table)?)
    }

    /// Image of a nondegenerate generator `[n, e, x]` at level `n+1`, or `None` if it dies.
    pub fn push_up(&self, n: usize, e: usize, x: usize) -> Option<usize> {
        if e + 1 > self.cutoff {
            return None;
        }
        let w = WedgeIndex::new(&self.levels[n], self.cutoff + 1, true);
        let y = self.rho[n].table[e + 1][w.encode(e + 1, e, x)];
        let t = &self.levels[n + 1];
        (y != t.basepoint(e + 1) && !t.is_degenerate(e + 1, y)).then_some(y)
    }

    pub fn to_json(&self) -> SpectrumJson {
        SpectrumJson {
            cutoff: self.cutoff,
            levels: self.levels.iter().map(|l| l.to_json()).collect(),
            rho: self.rho.iter().map(|r| r.table.clone()).collect(),
        }
    }

    pub fn from_json(name: &str, j: &SpectrumJson) -> Result<Spectrum> {
        let levels: Vec<BasedSimplicialSet> = j.levels.iter().map(BasedSimplicialSet::from_json).collect::<std::result::Result<_, _>>()?;
        if levels.is_empty() || j.rho.len() + 1 != levels.len() {
            return Err(SpectrumError::Mismatch("need one structure map per consecutive pair".into()));
        }
        let rho = j
            .rho
            .iter()
            .enumerate()
            .map(|(n, t)| Ok(SimplexMap::new(kan_suspension(&levels[n])?, levels[n + 1].clone(), t.clone())?))
            .collect::<Result<Vec<_>>>()?;
        let s = Spectrum { name: name.to_string(), cutoff: j.cutoff, levels, rho };
        s.validate()?;
        Ok(s)
    }
}

fn constant_map(source: BasedSimplicialSet, target: BasedSimplicialSet, top: usize) -> Result<SimplexMap> {
    let table = (0..=top).map(|d| vec![target.basepoint(d); source.count(d)]).collect();
    Ok(SimplexMap::new(source, target, table)?)
}

/// `Σ^{∞−n}S` on levels `0..=levels`: level `m` is `Σ^{m−n}S` for `m ≥ n`, the point below.
pub fn suspension_spectrum(s: &BasedSimplicialSet, shift: usize, levels: usize, cutoff: usize) -> Result<Spectrum> {
    if s.cutoff() < cutoff {
        return Err(SpectrumError::Cutoff { need: cutoff, cutoff: s.cutoff() });
    }
    let base = s.truncate(cutoff)?;
    let point = BasedSimplicialSet::point(cutoff)?;
    let mut lv = Vec::new();
    for m in 0..=levels {
        lv.push(if m < shift {
            point.clone()
        } else if m == shift {
            base.clone()
        } else {
            kan_suspension(&lv[m - 1])?.truncate(cutoff)?
        });
    }
    let mut rho = Vec::new();
    for m in 0..levels {
        let src = kan_suspension(&lv[m])?;
        rho.push(if m + 1 <= shift {
            constant_map(src, lv[m + 1].clone(), cutoff)?
        } else {
            let table = (0..=cutoff).map(|d| (0..lv[m + 1].count(d)).collect()).collect();
            SimplexMap::new(src, lv[m + 1].clone(), table)?
        });
    }
    Ok(Spectrum { name: format!("susp{shift}"), cutoff, levels: lv, rho })
}

/// `Σ^n HF_p` on levels `0..=levels`: level `m` is `K(F_p, n+m)`, the point when `n+m < 0`.
pub fn em_spectrum(field: Field, n: i64, levels: usize, cutoff: usize, budget: u64) -> Result<Spectrum> {
    let point = BasedSimplicialSet::point(cutoff)?;
    let em: Vec<Option<EmLevel>> = (0..=levels)
        .map(|m| {
            let q = n + m as i64;
            (q >= 0).then(|| EmLevel::new(field, q as usize, cutoff))
        })
        .collect();
    let mut lv = Vec::new();
    for (m, e) in em.iter().enumerate() {
        lv.push(match e {
            Some(e) => e.to_simplicial(m, budget)?,
            None => point.clone(),
        });
    }
    let mut rho = Vec::new();
    for m in 0..levels {
        let src = kan_suspension(&lv[m])?;
        let (Some(lower), Some(upper)) = (&em[m], &em[m + 1]) else {
            rho.push(constant_map(src, lv[m + 1].clone(), cutoff)?);
            continue;
        };
        let w = WedgeIndex::new(&lv[m], cutoff + 1, true);
        let mut table = Vec::new();
        for e in 0..=cutoff {
            let row = (0..src.count(e))
                .map(|id| match w.decode(e, id) {
                    None => 0,
                    Some((j, x)) => {
                        let beta = em_sigma(lower, j, &lower.vector(j, &lower.decode(j, x)));
                        let theta: Vec<usize> = (0..=e).map(|t| if t + j < e { 0 } else { t + j + 1 - e }).collect();
                        let v = upper.pullback(j + 1, &beta, &theta);
                        upper.encode(&upper.coords(e, &v))
                    }
                })
                .collect();
            table.push(row);
        }
        rho.push(SimplexMap::new(src, lv[m + 1].clone(), table)?);
    }
    Ok(Spectrum { name: format!("HF{}[{n}]", field.p()), cutoff, levels: lv, rho })
}

/// A levelwise map of spectra commuting with the structure maps.
#[derive(Clone, Debug)]
pub struct SpectrumMap {
    pub source: Spectrum,
    pub target: Spectrum,
    pub levels: Vec<SimplexMap>,
}

impl SpectrumMap {
    pub fn new(source: Spectrum, target: Spectrum, levels: Vec<SimplexMap>) -> Result<SpectrumMap> {
        let m = SpectrumMap { source, target, levels };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let (s, t) = (&self.source, &self.target);
        if s.levels.len() != t.levels.len() || self.levels.len() != s.levels.len() || s.cutoff != t.cutoff {
            return Err(SpectrumError::Mismatch("spectra and map have different lengths".into()));
        }
        for (n, f) in self.levels.iter().enumerate() {
            f.validate()?;
            if f.source != s.levels[n] || f.target != t.levels[n] {
                return Err(SpectrumError::Mismatch(format!("f_{n} has the wrong ends")));
            }
        }
        for n in 0..s.rho.len() {
            let sf = self.levels[n].suspend()?;
            for e in 0..=s.cutoff {
                for id in 0..s.rho[n].source.count(e) {
                    if self.levels[n + 1].table[e][s.rho[n].table[e][id]] != t.rho[n].table[e][sf.table[e][id]] {
                        return Err(SpectrumError::Mismatch(format!("square at level {n} fails in dim {e}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `Σ^{∞−n}g`.
    pub fn suspension(g: &SimplexMap, shift: usize, levels: usize, cutoff: usize) -> Result<SpectrumMap> {
        let source = suspension_spectrum(&g.source, shift, levels, cutoff)?;
        let target = suspension_spectrum(&g.target, shift, levels, cutoff)?;
        let mut maps: Vec<SimplexMap> = Vec::new();
        for m in 0..=levels {
            maps.push(if m < shift {
                constant_map(source.levels[m].clone(), target.levels[m].clone(), cutoff)?
            } else if m == shift {
                truncate_map(g, cutoff)?
            } else {
                truncate_map(&maps[m - 1].suspend()?, cutoff)?
            });
        }
        SpectrumMap::new(source, target, maps)
    }

    pub fn identity(e: &Spectrum) -> Result<SpectrumMap> {
        let maps = e
            .levels
            .iter()
            .map(|l| SimplexMap::new(l.clone(), l.clone(), (0..=e.cutoff).map(|d| (0..l.count(d)).collect()).collect()))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        SpectrumMap::new(e.clone(), e.clone(), maps)
    }

    pub fn from_point(e: &Spectrum) -> Result<SpectrumMap> {
        let point = BasedSimplicialSet::point(e.cutoff)?;
        let n = e.levels.len();
        let trivial = Spectrum {
            name: "*".into(),
            cutoff: e.cutoff,
            levels: vec![point.clone(); n],
            rho: (0..n - 1).map(|_| constant_map(kan_suspension(&point)?, point.clone(), e.cutoff)).collect::<Result<_>>()?,
        };
        let maps = e.levels.iter().map(|l| constant_map(point.clone(), l.clone(), e.cutoff)).collect::<Result<_>>()?;
        SpectrumMap::new(trivial, e.clone(), maps)
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct CofibrationReport {
    pub cofibration: bool,
    pub failing_level: Option<usize>,
    pub witness: Option<String>,
}

/// Injectivity of `f_0` and of each corner map `E_{n+1} ⨿_{ΣE_n} ΣF_n → F_{n+1}`.
pub fn validate_cofibration(f: &SpectrumMap) -> CofibrationReport {
    let reject = |n: usize, w: String| CofibrationReport { cofibration: false, failing_level: Some(n), witness: Some(w) };
    let f0 = &f.levels[0];
    for d in 0..=f.source.cutoff {
        let mut seen = HashMap::new();
        for (x, &y) in f0.table[d].iter().enumerate() {
            if let Some(x0) = seen.insert(y, x) {
                return reject(0, format!("dim {d}: {} and {} collide", f0.source.label(d, x0), f0.source.label(d, x)));
            }
        }
    }
    for n in 0..f.source.rho.len() {
        let (re, rf) = (&f.source.rho[n], &f.target.rho[n]);
        let Ok(sf) = f.levels[n].suspend() else {
            return reject(n + 1, "cannot suspend f".into());
        };
        for e in 0..=f.source.cutoff {
            // nodes: E_{n+1} simplices, then ΣF_n simplices
            let a = f.source.levels[n + 1].count(e);
            let b = rf.source.count(e);
            let mut parent: Vec<usize> = (0..a + b).collect();
            fn find(p: &mut [usize], x: usize) -> usize {
                let mut r = x;
                while p[r] != r {
                    r = p[r];
                }
                let mut y = x;
                while p[y] != r {
                    let nx = p[y];
                    p[y] = r;
                    y = nx;
                }
                r
            }
            for id in 0..re.source.count(e) {
                let (u, v) = (find(&mut parent, re.table[e][id]), find(&mut parent, a + sf.table[e][id]));
                parent[u] = v;
            }
            let image = |node: usize| if node < a { f.levels[n + 1].table[e][node] } else { rf.table[e][node - a] };
            let mut by_target: HashMap<usize, usize> = HashMap::new();
            for node in 0..a + b {
                let root = find(&mut parent, node);
                if let Some(&other) = by_target.get(&image(node)) {
                    if find(&mut parent, other) != root {
                        return reject(
                            n + 1,
                            format!("dim {e}: two pushout simplices map to {}", f.target.levels[n + 1].label(e, image(node))),
                        );
                    }
                } else {
                    by_target.insert(image(node), node);
                }
            }
        }
    }
    CofibrationReport { cofibration: true, failing_level: None, witness: None }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct StabilizationWitness {
    pub lower_level: usize,
    pub upper_level: usize,
    /// Push-up is a bijection of generators in every window degree.
    pub complexes_isomorphic: bool,
    /// Push-up induces an isomorphism on homology in every window degree.
    pub homology_isomorphic: bool,
    pub lower_betti: Vec<usize>,
    pub upper_betti: Vec<usize>,
}

/// Spectral chains in a degree window, canonicalized at the top stored level.
#[derive(Clone, Debug)]
pub struct SpectralChains {
    pub level: usize,
    pub window: (i64, i64),
    /// Degrees `lo−1 ..= hi+1`, so homology is defined on the window.
    pub complex: ChainComplexFp,
    /// Simplex ids at `level`, per complex degree.
    pub generators: Vec<Vec<usize>>,
    pub witness: Option<StabilizationWitness>,
}

impl SpectralChains {
    pub fn approximate(&self) -> bool {
        !self.witness.as_ref().is_some_and(|w| w.homology_isomorphic)
    }

    pub fn index_of(&self, d: i64, x: usize) -> Option<usize> {
        let k = (d - self.window.0 + 1) as usize;
        self.generators.get(k)?.iter().position(|&y| y == x)
    }
}

/// `C_•(E_n)[−n]` on degrees `lo..=hi`, with differential `(−1)^n ∂`.
fn level_chains_over(field: Field, e: &Spectrum, n: usize, lo: i64, hi: i64) -> Result<(ChainComplexFp, Vec<Vec<usize>>)> {
    let s = &e.levels[n];
    let gens: Vec<Vec<usize>> = (lo..=hi)
        .map(|d| {
            let dim = d + n as i64;
            if dim < 0 {
                Vec::new()
            } else {
                s.nondegenerate(dim as usize)
            }
        })
        .collect();
    let basis = (lo..=hi)
        .zip(&gens)
        .map(|(d, g)| g.iter().map(|&x| format!("[{n},{},{}]", d + n as i64, s.label((d + n as i64) as usize, x))).collect())
        .collect();
    let sign = field.sign(n as i64);
    let mut diffs = std::collections::BTreeMap::new();
    for d in lo + 1..=hi {
        let dim = d + n as i64;
        if dim < 1 {
            continue;
        }
        let k = (d - lo) as usize;
        let pos: HashMap<usize, usize> = gens[k - 1].iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let cols = gens[k]
            .iter()
            .map(|&x| {
                let mut col: Vec<(usize, u32)> = Vec::new();
                for i in 0..=dim as usize {
                    if let Some(&r) = pos.get(&s.face(dim as usize, x, i)) {
                        col.push((r, field.mul(sign, field.sign(i as i64))));
                    }
                }
                col.sort_unstable();
                let mut merged: Vec<(usize, u32)> = Vec::new();
                for (r, v) in col {
                    match merged.last_mut() {
                        Some((lr, lv)) if *lr == r => *lv = field.add(*lv, v),
                        _ => merged.push((r, v)),
                    }
                }
                merged.retain(|&(_, v)| v != 0);
                merged
            })
            .collect();
        diffs.insert(d, FpMatrix::from_columns(field, gens[k - 1].len(), cols));
    }
    Ok((ChainComplexFp::new(field, Direction::Chain, lo, hi, basis, diffs)?, gens))
}

fn check_window(e: &Spectrum, lo: i64, hi: i64, level: usize) -> Result<()> {
    let need = hi + 1 + level as i64;
    if need > e.cutoff as i64 || lo > hi {
        return Err(SpectrumError::Window { lo, hi, level, need, cutoff: e.cutoff });
    }
    Ok(())
}

/// Spectral chains over `field` in degrees `lo..=hi`, certified against the level below the top.
pub fn spectral_chains(field: Field, e: &Spectrum, lo: i64, hi: i64) -> Result<SpectralChains> {
    let top = e.top_level();
    check_window(e, lo, hi, top)?;
    let (complex, generators) = level_chains_over(field, e, top, lo - 1, hi + 1)?;
    let witness = if top == 0 {
        None
    } else {
        let (lower, lgens) = level_chains_over(field, e, top - 1, lo - 1, hi + 1)?;
        let mut complexes_isomorphic = true;
        let mut homology_isomorphic = true;
        let (mut lb, mut ub) = (Vec::new(), Vec::new());
        for d in lo..=hi {
            let k = (d - lo + 1) as usize;
            let hl = lower.homology(d)?;
            let hu = complex.homology(d)?;
            lb.push(hl.betti);
            ub.push(hu.betti);
            let pos: HashMap<usize, usize> = generators[k].iter().enumerate().map(|(i, &x)| (x, i)).collect();
            let dim = (d + top as i64 - 1) as usize;
            let images: Vec<Option<usize>> = lgens[k].iter().map(|&x| e.push_up(top - 1, dim, x).map(|y| pos[&y])).collect();
            let mut hit: Vec<usize> = images.iter().flatten().copied().collect();
            hit.sort_unstable();
            hit.dedup();
            complexes_isomorphic &= images.iter().all(Option::is_some) && hit.len() == lgens[k].len() && hit.len() == generators[k].len();
            let push = |v: &[(usize, u32)]| -> Vec<(usize, u32)> {
                let mut out: Vec<(usize, u32)> = v.iter().filter_map(|&(i, c)| images[i].map(|j| (j, c))).collect();
                out.sort_unstable();
                out
            };
            let mut ech = Echelon::new(field, generators[k].len());
            for b in &hu.boundary_basis {
                ech.insert_sparse(b);
            }
            let base = ech.rank();
            for z in &hl.representatives {
                ech.insert_sparse(&push(z));
            }
            homology_isomorphic &= hl.betti == hu.betti && ech.rank() - base == hu.betti;
        }
        Some(StabilizationWitness {
            lower_level: top - 1,
            upper_level: top,
            complexes_isomorphic,
            homology_isomorphic,
            lower_betti: lb,
            upper_betti: ub,
        })
    };
    Ok(SpectralChains { level: top, window: (lo, hi), complex, generators, witness })
}

/// Spectral chains over F_2.
pub fn spectral_chains_f2(e: &Spectrum, lo: i64, hi: i64) -> Result<SpectralChains> {
    spectral_chains(Field::new(2).expect("prime"), e, lo, hi)
}

/// Cochains: dual-then-dagger of the chains; degree `d` pairs with chain degree `d`.
pub fn spectral_cochains(chains: &SpectralChains) -> ChainComplexFp {
    chains.complex.dualize().dagger()
}

/// `⟨f, v⟩` for a cochain and a chain of the same degree, in the dual bases.
pub fn pairing(field: Field, f: &[(usize, u32)], v: &[(usize, u32)]) -> u32 {
    let mut acc = 0;
    let mut j = 0;
    for &(i, a) in f {
        while j < v.len() && v[j].0 < i {
            j += 1;
        }
        if j < v.len() && v[j].0 == i {
            acc = field.add(acc, field.mul(a, v[j].1));
        }
    }
    acc
}
