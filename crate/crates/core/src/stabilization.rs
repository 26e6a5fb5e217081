//! Stabilization maps Ψ, suspension towers and the canonical arity-2 elements.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::fplinalg::{ChainComplexFp, Direction, Field, FpMatrix, KeyedComplex, LinComb, LinalgError};
use crate::operads::*;

#[derive(Debug, Error)]
pub enum StabError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Operad(#[from] OperadError),
    #[error("{what}: needs {count}, budget is {budget}")]
    Budget { what: String, count: usize, budget: usize },
    #[error("window: {0}")]
    Window(String),
    #[error("requires p = 2, got p = {0}")]
    NeedsTwo(u32),
    #[error("tower element: {0}")]
    Tower(String),
}

pub type Result<T> = std::result::Result<T, StabError>;

/// Ψ on a surjection of arity n: permutation-prefix test, then the tail from position n.
pub fn psi_ms_basis(field: Field, f: &Surjection) -> MsElt {
    let n = f.arity;
    if n == 0 || f.seq.len() < n || !is_perm(&f.seq[..n]) {
        return MsElt::zero(field);
    }
    let tail = Surjection::raw(n, f.seq[n - 1..].to_vec());
    if tail.is_valid() {
        MsElt::single(field, tail, 1)
    } else {
        MsElt::zero(field)
    }
}

pub fn psi_ms(e: &MsElt) -> MsElt {
    linear(e, |f| psi_ms_basis(e.field(), f))
}

/// Ψ on a tuple of arity n: first-column permutation test, then drop n−1 entries.
/// The sign of the first-column permutation makes Ψ∂ = (−1)^{n−1}∂Ψ.
pub fn psi_be_basis(field: Field, a: &PermTuple) -> BeElt {
    let n = a.arity;
    if n == 0 || a.perms.len() < n {
        return BeElt::zero(field);
    }
    let firsts: Vec<u8> = a.perms[..n].iter().map(|r| r[0]).collect();
    if !is_perm(&firsts) {
        return BeElt::zero(field);
    }
    BeElt::single(field, PermTuple { arity: n, perms: a.perms[n - 1..].to_vec() }, perm_sign(&firsts))
}

pub fn psi_be(e: &BeElt) -> BeElt {
    linear(e, |a| psi_be_basis(e.field(), a))
}

pub fn psi(e: &OperadElt) -> OperadElt {
    match e {
        OperadElt::Ms { arity, elt } => OperadElt::Ms { arity: *arity, elt: psi_ms(elt) },
        OperadElt::Be { arity, elt } => OperadElt::Be { arity: *arity, elt: psi_be(elt) },
    }
}

/// A Ψ-preimage obtained by prefixing the other n−1 values in increasing order.
pub fn psi_ms_preimage(f: &Surjection) -> Surjection {
    let mut seq: Vec<u8> = (1..=f.arity as u8).filter(|&v| v != f.seq[0]).collect();
    seq.extend_from_slice(&f.seq);
    Surjection::raw(f.arity, seq)
}

pub fn psi_be_preimage(a: &PermTuple) -> PermTuple {
    let n = a.arity;
    let head = a.perms[0][0];
    let mut perms: Vec<Perm> = (1..=n as u8)
        .filter(|&v| v != head)
        .map(|v| {
            let mut p = vec![v];
            p.extend((1..=n as u8).filter(|&w| w != v));
            p
        })
        .collect();
    perms.extend(a.perms.iter().cloned());
    PermTuple { arity: n, perms }
}

/// Number of basis elements of the given flavor, or an upper bound for MS.
pub fn basis_size_bound(flavor: Flavor, n: usize, d: i64) -> usize {
    if d < 0 {
        return 0;
    }
    let d = d as u32;
    match flavor {
        Flavor::Be => {
            let f: usize = (1..=n.max(1)).product();
            f.saturating_mul(f.saturating_sub(1).saturating_pow(d))
        }
        Flavor::Ms => {
            if n == 0 {
                return usize::from(d == 0);
            }
            let m = n as u32 + d;
            n.saturating_mul((n - 1).saturating_pow(m - 1))
        }
    }
}

/// Dense matrix cells allowed per unit of budget when eliminating one differential.
pub const ELIMINATION_CELLS_PER_UNIT: usize = 4096;

/// Arity-n component of an operad as a chain complex on internal degrees `[lo, hi]`.
pub enum OperadComplex {
    Ms(KeyedComplex<Surjection>),
    Be(KeyedComplex<PermTuple>),
}

impl OperadComplex {
    pub fn build(flavor: Flavor, field: Field, n: usize, lo: i64, hi: i64, budget: usize) -> Result<OperadComplex> {
        for d in lo..=hi {
            let c = basis_size_bound(flavor, n, d);
            if c > budget {
                return Err(StabError::Budget { what: format!("{flavor:?}({n}) in degree {d}"), count: c, budget });
            }
            if d > lo {
                let cells = c.saturating_mul(basis_size_bound(flavor, n, d - 1));
                if cells / ELIMINATION_CELLS_PER_UNIT > budget {
                    return Err(StabError::Budget {
                        what: format!("elimination of {flavor:?}({n}) degrees {d} → {}", d - 1),
                        count: cells / ELIMINATION_CELLS_PER_UNIT,
                        budget,
                    });
                }
            }
        }
        Ok(match flavor {
            Flavor::Ms => {
                let keys = (lo..=hi).map(|d| ms_basis(n, d)).collect();
                OperadComplex::Ms(KeyedComplex::build(field, Direction::Chain, lo, keys, |f| ms_differential_basis(field, f))?)
            }
            Flavor::Be => {
                let keys = (lo..=hi).map(|d| be_basis(n, d)).collect();
                OperadComplex::Be(KeyedComplex::build(field, Direction::Chain, lo, keys, |a| be_differential_basis(field, a))?)
            }
        })
    }

    pub fn complex(&self) -> &ChainComplexFp {
        match self {
            OperadComplex::Ms(k) => &k.complex,
            OperadComplex::Be(k) => &k.complex,
        }
    }

    pub fn to_vector(&self, d: i64, e: &OperadElt) -> Result<Vec<(usize, u32)>> {
        Ok(match (self, e) {
            (OperadComplex::Ms(k), OperadElt::Ms { elt, .. }) => k.to_vector(d, elt)?,
            (OperadComplex::Be(k), OperadElt::Be { elt, .. }) => k.to_vector(d, elt)?,
            _ => return Err(StabError::Window("flavor mismatch".into())),
        })
    }

    pub fn from_vector(&self, n: usize, d: i64, v: &[(usize, u32)]) -> Result<OperadElt> {
        Ok(match self {
            OperadComplex::Ms(k) => OperadElt::Ms { arity: n, elt: k.from_vector(d, v)? },
            OperadComplex::Be(k) => OperadElt::Be { arity: n, elt: k.from_vector(d, v)? },
        })
    }
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct LevelInfo {
    pub level: usize,
    pub internal_degree: i64,
    pub dim: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ConnectingMap {
    pub from: usize,
    pub to: usize,
    pub rank: usize,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TowerHomology {
    pub flavor: Flavor,
    pub p: u32,
    pub arity: usize,
    pub degree: i64,
    pub levels: Vec<LevelInfo>,
    pub connecting: Vec<ConnectingMap>,
    /// Dimension at the deepest level.
    pub limit_dim: usize,
    /// The map from the deepest level to the one below it is an isomorphism.
    pub stabilized: bool,
}

/// `H_d(Σ^k 𝒫(n))` for `k ≤ levels` with the Ψ connecting maps.
pub fn tower_homology(flavor: Flavor, field: Field, n: usize, d: i64, levels: usize, budget: usize) -> Result<TowerHomology> {
    if levels == 0 {
        return Err(StabError::Window("at least one level is needed for a stabilization witness".into()));
    }
    let shift = n as i64 - 1;
    let mut infos = Vec::new();
    let mut connecting = Vec::new();
    let mut prev: Option<(OperadComplex, crate::fplinalg::Homology, i64)> = None;
    for k in 0..=levels {
        let dk = d + k as i64 * shift;
        let oc = OperadComplex::build(flavor, field, n, dk - 1, dk + 1, budget)?;
        let h = oc.complex().homology(dk)?;
        infos.push(LevelInfo { level: k, internal_degree: dk, dim: h.betti });
        if let Some((poc, ph, pd)) = &prev {
            let mut cols = Vec::new();
            for z in &h.representatives {
                let img = psi(&oc.from_vector(n, dk, z)?);
                let v = poc.to_vector(*pd, &img)?;
                cols.push(crate::fplinalg::dense_to_sparse(&ph.classify(&v)?));
            }
            let m = FpMatrix::from_columns(field, ph.betti, cols);
            connecting.push(ConnectingMap { from: k, to: k - 1, rank: m.rank() });
        }
        prev = Some((oc, h, dk));
    }
    let last = connecting.last().expect("levels ≥ 1");
    let top = infos[levels].dim;
    let stabilized = top == infos[levels - 1].dim && last.rank == top;
    Ok(TowerHomology { flavor, p: field.p(), arity: n, degree: d, levels: infos, connecting, limit_dim: top, stabilized })
}

/// `e_d^un = (1, τ, 1, τ, …)` with `|d|+1` entries, in cochain degree `d ≤ 0`; zero for `d > 0`.
pub fn e_un(field: Field, d: i64) -> BeElt {
    if d > 0 {
        return BeElt::zero(field);
    }
    let perms = (0..=(-d) as usize).map(|i| if i % 2 == 0 { vec![1, 2] } else { vec![2, 1] }).collect();
    BeElt::single(field, PermTuple { arity: 2, perms }, 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Unstable,
    Stable,
}

/// Closed form for `e_d^un` and `e_d^st` (cochain degree `d`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CanonicalE {
    pub degree: i64,
    pub side: Side,
}

impl CanonicalE {
    pub fn new(degree: i64, side: Side) -> CanonicalE {
        CanonicalE { degree, side }
    }

    /// Level-k component, `e_{d−k}^un · τ^k`.
    pub fn component(&self, field: Field, k: usize) -> Result<BeElt> {
        match self.side {
            Side::Unstable if k > 0 => Err(StabError::Tower("unstable elements have only level 0".into())),
            Side::Unstable => Ok(e_un(field, self.degree)),
            Side::Stable => {
                if field.p() != 2 {
                    return Err(StabError::NeedsTwo(field.p()));
                }
                let e = e_un(field, self.degree - k as i64);
                Ok(if k % 2 == 1 { act_be_elt(&[2, 1], &e) } else { e })
            }
        }
    }

    pub fn tower(&self, field: Field, levels: usize) -> Result<TowerElt> {
        let top = if self.side == Side::Unstable { 0 } else { levels };
        let mut components = BTreeMap::new();
        for k in 0..=top {
            components.insert(k, OperadElt::Be { arity: 2, elt: self.component(field, k)? });
        }
        Ok(TowerElt { flavor: Flavor::Be, arity: 2, degree: -self.degree, components, tail: Some(*self) })
    }
}

/// A Ψ-coherent window `(α_0, …, α_K)` of a stable element; `degree` is the chain-side external degree.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerElt {
    pub flavor: Flavor,
    pub arity: usize,
    pub degree: i64,
    pub components: BTreeMap<usize, OperadElt>,
    pub tail: Option<CanonicalE>,
}

impl TowerElt {
    pub fn internal_degree(&self, k: usize) -> i64 {
        self.degree + k as i64 * (self.arity as i64 - 1)
    }

    pub fn component(&self, field: Field, k: usize) -> Result<OperadElt> {
        if let Some(c) = self.components.get(&k) {
            return Ok(c.clone());
        }
        match &self.tail {
            Some(t) => Ok(OperadElt::Be { arity: 2, elt: t.component(field, k)? }),
            None => Err(StabError::Tower(format!("no component stored at level {k}"))),
        }
    }

    /// Checks degrees and `Ψ(α_{k+1}) = α_k` on consecutive stored levels.
    pub fn check(&self) -> Result<()> {
        for (k, c) in &self.components {
            if c.flavor() != self.flavor || c.arity() != self.arity {
                return Err(StabError::Tower(format!("level {k} has the wrong flavor or arity")));
            }
            if let Some((_, d)) = c.arity_degree() {
                if d != self.internal_degree(*k) {
                    return Err(StabError::Tower(format!("level {k} has internal degree {d}, expected {}", self.internal_degree(*k))));
                }
            }
            if let Some(next) = self.components.get(&(k + 1)) {
                if psi(next) != *c {
                    return Err(StabError::Tower(format!("Ψ(α_{}) ≠ α_{k}", k + 1)));
                }
            }
        }
        Ok(())
    }
}

/// `𝓔_st†(2)` at p = 2: `F_2[Σ_2]` in each degree with coboundary `1+τ`, and its coinvariants.
pub struct Est2 {
    pub free: ChainComplexFp,
    pub coinvariant: ChainComplexFp,
}

pub fn est2_complex(field: Field, lo: i64, hi: i64) -> Result<Est2> {
    if field.p() != 2 {
        return Err(StabError::NeedsTwo(field.p()));
    }
    let basis = (lo..=hi).map(|d| vec![format!("e{d}"), format!("e{d}·τ")]).collect();
    let mut diffs = BTreeMap::new();
    for d in lo..hi {
        diffs.insert(d, FpMatrix::from_triplets(field, 2, 2, &[(0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 1)])?);
    }
    let free = ChainComplexFp::new(field, Direction::Cochain, lo, hi, basis, diffs)?;
    let mut rel = BTreeMap::new();
    for d in lo..=hi {
        rel.insert(d, vec![vec![(0, 1), (1, 1)]]);
    }
    let coinvariant = free.quotient(&rel)?.complex;
    Ok(Est2 { free, coinvariant })
}

/// `𝓔†(2)/Σ_2` on cochain degrees `[lo, hi]`, built from the Barratt–Eccles basis.
pub fn unstable_e2_coinvariants(field: Field, lo: i64, hi: i64) -> Result<ChainComplexFp> {
    let oc = OperadComplex::build(Flavor::Be, field, 2, -hi, -lo, usize::MAX)?;
    let OperadComplex::Be(k) = &oc else { unreachable!() };
    let mut rel = BTreeMap::new();
    for d in -hi..=-lo {
        let mut rs = Vec::new();
        for a in k.keys[(d + hi) as usize].iter() {
            let mut v = LinComb::single(field, act_be(&[2, 1], a), 1);
            v.add_term(a.clone(), -1);
            rs.push(k.to_vector(d, &v)?);
        }
        rel.insert(d, rs);
    }
    Ok(k.complex.quotient(&rel)?.complex.dagger())
}
