//! Operad coactions on spectral chains, the operations `P^s` at p = 2, and
//! truncated free-algebra homology over suspended Barratt–Eccles operads.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::fplinalg::{dense_to_sparse, Echelon, Field, FpMatrix, Homology, KeyedComplex, LinComb, LinalgError};
use crate::operads::*;
use crate::simplicial::{BasedSimplicialSet, SimplicialData};
use crate::spectra::{SpectralChains, Spectrum, SpectrumError, SpectrumMap};
use crate::stabilization::{psi_be_basis, CanonicalE, Side, StabError, TowerElt};
use crate::steenrod::{basis_bk, Mono};

#[derive(Debug, Error)]
pub enum ActionError {
    #[error("window: {0}")]
    Window(String),
    #[error("requires p = 2, got p = {0}")]
    NeedsTwo(u32),
    #[error("{what}: {count} basis elements exceed the budget {budget}")]
    Budget { what: String, count: usize, budget: usize },
    #[error("not a cocycle in degree {0}")]
    NotCocycle(i64),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Stab(#[from] StabError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Operad(#[from] OperadError),
}

pub type Result<T> = std::result::Result<T, ActionError>;

fn need_two(field: Field) -> Result<()> {
    if field.p() != 2 {
        return Err(ActionError::NeedsTwo(field.p()));
    }
    Ok(())
}

/// The surjection-operad image of an operad element (BE elements pass through TR).
pub fn as_surjections(e: &OperadElt) -> MsElt {
    match e {
        OperadElt::Ms { elt, .. } => elt.clone(),
        OperadElt::Be { elt, .. } => tr(elt),
    }
}

/// `μ(α, [n, e, x]) = α_n(x)`: the level-n component acting through AW on `C_•(E_n)`.
pub fn coact(field: Field, alpha: &TowerElt, e: &Spectrum, level: usize, dim: usize, x: usize) -> Result<LinComb<SimplexTensor>> {
    if level >= e.levels.len() {
        return Err(ActionError::Window(format!("level {level} is not stored")));
    }
    let comp = alpha.component(field, level)?;
    Ok(aw_evaluate_elt(&as_surjections(&comp), &e.levels[level], dim, x))
}

/// Pushes every factor of a level-n tensor to level n+1; terms with a dying factor vanish.
pub fn push_tensor(e: &Spectrum, level: usize, t: &LinComb<SimplexTensor>) -> LinComb<SimplexTensor> {
    t.map_keys(|term| {
        let up: Option<SimplexTensor> = term.iter().map(|&(d, y)| e.push_up(level, d, y).map(|z| (d + 1, z))).collect();
        up.map(|u| (u, 1))
    })
}

/// Cohomology of the spectral cochains in one degree, computed from chain-side data:
/// a functional is a cocycle iff it kills the boundaries, and its class is read off
/// on the homology representatives.
#[derive(Clone, Debug)]
pub struct WindowCohomology {
    pub degree: i64,
    pub homology: Homology,
    /// Dense functionals on the degree generators, dual to `homology.representatives`.
    pub cocycles: Vec<Vec<u32>>,
}

impl WindowCohomology {
    pub fn new(chains: &SpectralChains, q: i64) -> Result<WindowCohomology> {
        let field = chains.complex.field();
        let h = chains.complex.homology(q)?;
        let n = chains.complex.dim(q)?;
        let items: Vec<&Vec<(usize, u32)>> = h.boundary_basis.iter().chain(&h.representatives).collect();
        let mut ech = Echelon::new(field, n);
        for v in &items {
            ech.insert_sparse(v);
        }
        let pivots: Vec<usize> = ech.sorted_basis().into_iter().map(|(c, _)| c).collect();
        let m = pivots.len();
        let col_of: HashMap<usize, usize> = pivots.iter().enumerate().map(|(k, &c)| (c, k)).collect();
        // N[t][k] = item_t at pivot c_k; solve N w = e_target through tagged reduction
        let mut solver = Echelon::with_tags(field, m);
        for v in &items {
            let row: Vec<(usize, u32)> = v.iter().filter_map(|&(c, x)| col_of.get(&c).map(|&k| (k, x))).collect();
            solver.insert_sparse(&row);
        }
        let b = h.boundary_basis.len();
        let mut cocycles = vec![vec![0u32; n]; h.betti];
        for (j, &c) in pivots.iter().enumerate() {
            let (_, coeffs) = solver.reduce(&[(j, 1)]);
            let coeffs = coeffs.expect("tags kept");
            for (i, a) in cocycles.iter_mut().enumerate() {
                a[c] = coeffs[b + i];
            }
        }
        Ok(WindowCohomology { degree: q, homology: h, cocycles })
    }

    pub fn dim(&self) -> usize {
        self.cocycles.len()
    }

    fn eval(field: Field, f: &[u32], v: &[(usize, u32)]) -> u32 {
        v.iter().fold(0, |acc, &(i, c)| field.add(acc, field.mul(f[i], c)))
    }

    /// Class coordinates of a cochain, or an error if it is not a cocycle.
    pub fn classify(&self, field: Field, f: &[u32]) -> Result<Vec<u32>> {
        if self.homology.boundary_basis.iter().any(|b| Self::eval(field, f, b) != 0) {
            return Err(ActionError::NotCocycle(self.degree));
        }
        Ok(self.homology.representatives.iter().map(|r| Self::eval(field, f, r)).collect())
    }

    /// `δb` for a cochain `b` of degree `q−1`.
    pub fn coboundary(chains: &SpectralChains, q: i64, b: &[u32]) -> Result<Vec<u32>> {
        let field = chains.complex.field();
        let d = chains.complex.differential(q)?;
        Ok((0..d.cols()).map(|c| Self::eval(field, b, &d.column_vec(c))).collect())
    }
}

/// `(α)_*(a, a)` as a cochain of degree `q + shift` on the top level, where `α` is given by surjections.
pub fn square_cochain(chains: &SpectralChains, e: &Spectrum, alpha: &MsElt, q: i64, out: i64, a: &[u32]) -> Result<Vec<u32>> {
    let field = chains.complex.field();
    let l = chains.level as i64;
    let (lo, hi) = chains.window;
    if q < lo - 1 || q > hi + 1 || out < lo - 1 || out > hi + 1 {
        return Err(ActionError::Window(format!("degrees {q} and {out} leave the window {lo}..{hi}")));
    }
    let s = &e.levels[chains.level];
    let gens = &chains.generators[(out - lo + 1) as usize];
    let qdim = (q + l) as usize;
    let mut val = Vec::with_capacity(gens.len());
    for &z in gens {
        let t = aw_evaluate_elt(alpha, s, (out + l) as usize, z);
        let mut acc = 0u32;
        for (term, c) in &t.terms {
            if term.iter().any(|&(d, _)| d != qdim) {
                continue;
            }
            let mut prod = *c;
            for &(_, y) in term {
                let i = chains.index_of(q, y).expect("nondegenerate factor is a generator");
                prod = field.mul(prod, a[i]);
            }
            acc = field.add(acc, prod);
        }
        val.push(acc);
    }
    Ok(val)
}

/// Matrix of a squaring operation `H^q → H^{q+s}` in the representative bases.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct OperationTable {
    pub s: i64,
    pub source_degree: i64,
    pub target_degree: i64,
    /// `columns[i]` = coordinates of the image of the i-th source class.
    pub columns: Vec<Vec<u32>>,
    pub rank: usize,
}

impl OperationTable {
    pub fn is_identity(&self) -> bool {
        self.columns.iter().enumerate().all(|(i, c)| c.iter().enumerate().all(|(j, &x)| x == u32::from(i == j)))
            && self.columns.len() == self.columns.first().map_or(0, Vec::len)
    }
}

fn table_for(chains: &SpectralChains, e: &Spectrum, alpha: &MsElt, s: i64, q: i64) -> Result<OperationTable> {
    let field = chains.complex.field();
    let src = WindowCohomology::new(chains, q)?;
    let tgt = WindowCohomology::new(chains, q + s)?;
    let mut columns = Vec::new();
    for a in &src.cocycles {
        let f = square_cochain(chains, e, alpha, q, q + s, a)?;
        columns.push(tgt.classify(field, &f)?);
    }
    let m = FpMatrix::from_columns(field, tgt.dim(), columns.iter().map(|c| dense_to_sparse(c)).collect());
    Ok(OperationTable { s, source_degree: q, target_degree: q + s, rank: m.rank(), columns })
}

fn check_degrees(chains: &SpectralChains, q: i64, s: i64) -> Result<()> {
    let (lo, hi) = chains.window;
    if q < lo || q + s > hi || q > hi || q + s < lo {
        return Err(ActionError::Window(format!("P^{s} on H^{q} needs degrees {q} and {} inside {lo}..{hi}", q + s)));
    }
    Ok(())
}

/// Stable `P^s: H^q → H^{q+s}` at p = 2 through `e_{s−q}^st` at the top level.
pub fn stable_p(chains: &SpectralChains, e: &Spectrum, s: i64, q: i64) -> Result<OperationTable> {
    let field = chains.complex.field();
    need_two(field)?;
    check_degrees(chains, q, s)?;
    let l = chains.level as i64;
    if s - q > l {
        return Err(ActionError::Window(format!("e_{}^st vanishes below level {}; top level is {l}", s - q, s - q)));
    }
    let comp = CanonicalE::new(s - q, Side::Stable).component(field, chains.level)?;
    table_for(chains, e, &tr(&comp), s, q)
}

/// Unstable `P^s` on a space (a one-level spectrum) through `e_{s−q}^un`.
pub fn unstable_p(chains: &SpectralChains, e: &Spectrum, s: i64, q: i64) -> Result<OperationTable> {
    let field = chains.complex.field();
    need_two(field)?;
    check_degrees(chains, q, s)?;
    if chains.level != 0 {
        return Err(ActionError::Window("unstable operations act on level 0 only".into()));
    }
    let comp = CanonicalE::new(s - q, Side::Unstable).component(field, 0)?;
    table_for(chains, e, &tr(&comp), s, q)
}

/// The squaring attached to one arity-2 surjection `f`, evaluated directly by AW on the top level:
/// `H^q → H^{2q + L − |f|}`.
pub fn surjection_square(chains: &SpectralChains, e: &Spectrum, f: &Surjection, q: i64) -> Result<OperationTable> {
    let field = chains.complex.field();
    need_two(field)?;
    let s = q + chains.level as i64 - f.degree();
    check_degrees(chains, q, s)?;
    table_for(chains, e, &MsElt::single(field, f.clone(), 1), s, q)
}

/// A space as a one-level spectrum.
pub fn space_spectrum(s: &BasedSimplicialSet) -> Spectrum {
    Spectrum { name: "space".into(), cutoff: s.cutoff(), levels: vec![s.clone()], rho: Vec::new() }
}

/// `f^*` on top-level cochains: `(f^*a)(x) = a(f(x))`, zero when `f(x)` dies.
pub fn pull_back(map: &SpectrumMap, source: &SpectralChains, target: &SpectralChains, d: i64, a: &[u32]) -> Vec<u32> {
    let l = source.level;
    let dim = (d + l as i64) as usize;
    let f = &map.levels[l];
    let k = (d - source.window.0 + 1) as usize;
    source.generators[k]
        .iter()
        .map(|&x| {
            let y = f.table[dim][x];
            target.index_of(d, y).map_or(0, |i| a[i])
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Free algebras over Σ^k E†

/// Subgroup `Σ_{j_1} × ⋯ × Σ_{j_r}` of `Σ_j` acting on consecutive blocks.
pub fn young_subgroup(parts: &[usize]) -> Vec<Perm> {
    let n: usize = parts.iter().sum();
    let mut out = vec![identity_perm(n)];
    let mut start = 0;
    for &j in parts {
        let mut next = Vec::new();
        for g in &out {
            for h in all_perms(j) {
                let mut p = g.clone();
                for (i, &v) in h.iter().enumerate() {
                    p[start + i] = (start as u8) + v;
                }
                next.push(p);
            }
        }
        out = next;
        start += j;
    }
    out.sort();
    out
}

/// Coinvariants `E(n) ⊗_G (sign^twist)` of the Barratt–Eccles operad, on orbit representatives.
#[derive(Clone, Debug)]
pub struct Coinvariants {
    pub field: Field,
    pub arity: usize,
    pub group: Vec<Perm>,
    pub twist: u32,
    pub keyed: KeyedComplex<PermTuple>,
}

impl Coinvariants {
    /// Internal chain degrees `lo..=hi`; free orbits, so the basis is tuples whose first entry is orbit-minimal.
    pub fn build(field: Field, n: usize, group: Vec<Perm>, twist: u32, lo: i64, hi: i64, budget: usize) -> Result<Coinvariants> {
        let perms = all_perms(n);
        let firsts: Vec<Perm> = perms.iter().filter(|p| group.iter().all(|g| compose_perm(g, p) >= **p)).cloned().collect();
        // one empty degree below keeps homology defined at the bottom
        let lo = lo.max(0) - 1;
        let nf = perms.len().saturating_sub(1);
        for d in 0..=hi {
            let count = firsts.len().saturating_mul(nf.saturating_pow(d as u32));
            if count > budget {
                return Err(ActionError::Budget { what: format!("E({n}) coinvariants in degree {d}"), count, budget });
            }
        }
        let keys: Vec<Vec<PermTuple>> = (lo..=hi)
            .map(|d| {
                let mut out = Vec::new();
                if d < 0 {
                    return out;
                }
                for f in &firsts {
                    let mut cur = vec![f.clone()];
                    extend_tuples(n, d as usize + 1, &perms, &mut cur, &mut out);
                }
                out
            })
            .collect();
        let proto = Coinvariants {
            field,
            arity: n,
            group,
            twist,
            keyed: KeyedComplex::build(field, crate::fplinalg::Direction::Chain, lo, vec![Vec::new(); keys.len()], |_| {
                LinComb::zero(field)
            })?,
        };
        let keyed = KeyedComplex::build(field, crate::fplinalg::Direction::Chain, lo, keys, |a| {
            proto.normalize_elt(&be_differential_basis(field, a))
        })?;
        Ok(Coinvariants { keyed, ..proto })
    }

    /// Orbit representative of `a` with the character coefficient.
    pub fn normalize(&self, a: &PermTuple) -> (PermTuple, i64) {
        let mut best: Option<(Perm, &Perm)> = None;
        for g in &self.group {
            let c = compose_perm(g, &a.perms[0]);
            if best.as_ref().map_or(true, |(b, _)| c < *b) {
                best = Some((c, g));
            }
        }
        let g = best.expect("group is nonempty").1;
        let sign = if self.twist % 2 == 1 { perm_sign(g) } else { 1 };
        (act_be(g, a), sign)
    }

    pub fn normalize_elt(&self, e: &BeElt) -> BeElt {
        let mut out = BeElt::zero(self.field);
        for (a, c) in &e.terms {
            let (b, s) = self.normalize(a);
            out.add_term(b, s * *c as i64);
        }
        out
    }

    pub fn vector(&self, d: i64, e: &BeElt) -> Result<Vec<(usize, u32)>> {
        Ok(self.keyed.to_vector(d, &self.normalize_elt(e))?)
    }
}

fn extend_tuples(n: usize, len: usize, perms: &[Perm], cur: &mut Vec<Perm>, out: &mut Vec<PermTuple>) {
    if cur.len() == len {
        out.push(PermTuple { arity: n, perms: cur.clone() });
        return;
    }
    for p in perms {
        if cur.last() != Some(p) {
            cur.push(p.clone());
            extend_tuples(n, len, perms, cur, out);
            cur.pop();
        }
    }
}

/// Cohomological degree of the class of an internal-degree-`d` element of `Σ^k E(n)` applied to `c^{⊗n}`, `|c| = q`.
pub fn total_degree(n: usize, q: i64, k: usize, d: i64) -> i64 {
    n as i64 * q + k as i64 * (n as i64 - 1) - d
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ArityDims {
    pub arity: usize,
    /// `(total degree, internal degree, dimension)` for each valid internal degree.
    pub dims: Vec<(i64, i64, usize)>,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct PredictedClass {
    pub label: String,
    pub arity: usize,
    pub degree: i64,
    pub product: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct FreeAlgebraReport {
    pub p: u32,
    pub q: i64,
    pub k: usize,
    pub t: usize,
    pub arities: Vec<ArityDims>,
    /// Monomial basis predicted in the computed window (p = 2 only).
    pub predicted: Option<Vec<PredictedClass>>,
    pub matches: Option<bool>,
}

/// Internal-degree ceiling per arity: homology is reported for degrees below it.
pub fn default_ceiling(n: usize) -> i64 {
    match n {
        0..=2 => 7,
        3 => 6,
        _ => 3,
    }
}

fn twist(field: Field, q: i64, k: usize) -> u32 {
    if field.p() == 2 {
        0
    } else {
        (q + k as i64).rem_euclid(2) as u32
    }
}

/// `F_t H((Σ^k E†) 𝕊^q)`, arity by arity, with the p = 2 monomial prediction.
pub fn free_algebra_truncation_h(field: Field, q: i64, k: usize, t: usize, budget: usize) -> Result<FreeAlgebraReport> {
    if t > 4 {
        return Err(ActionError::Window(format!("arity bound {t} exceeds 4")));
    }
    let tw = twist(field, q, k);
    let mut arities = Vec::new();
    for n in 0..=t {
        let top = default_ceiling(n);
        let c = Coinvariants::build(field, n, all_perms(n), tw, 0, top, budget)?;
        let dims = (0..top).map(|d| Ok((total_degree(n, q, k, d), d, c.keyed.complex.homology(d)?.betti))).collect::<Result<Vec<_>>>()?;
        arities.push(ArityDims { arity: n, dims });
    }
    let (predicted, matches) = if field.p() == 2 {
        let pred = predicted_basis(q, k, t);
        let ok = arities
            .iter()
            .all(|a| a.dims.iter().all(|&(deg, _, dim)| pred.iter().filter(|c| c.arity == a.arity && c.degree == deg).count() == dim));
        let in_window: Vec<PredictedClass> =
            pred.into_iter().filter(|c| arities[c.arity].dims.iter().any(|&(deg, _, _)| deg == c.degree)).collect();
        (Some(in_window), Some(ok))
    } else {
        (None, None)
    };
    Ok(FreeAlgebraReport { p: field.p(), q, k, t, arities, predicted, matches })
}

/// Monomials `(P^{I_1}c)⋯(P^{I_r}c)` with `Σ 2^{l(I_j)} ≤ t`, `I_j` admissible, `e(I_j) < q + k` (p = 2),
/// limited to the internal-degree ceilings of [`default_ceiling`].
pub fn predicted_basis(q: i64, k: usize, t: usize) -> Vec<PredictedClass> {
    let qp = q + k as i64;
    // atoms: (weight, defect below the top degree, label)
    let mut atoms: Vec<(usize, i64, String)> = vec![(1, 0, "c".into())];
    let mut w = 2;
    let mut len = 1;
    while w <= t {
        let ceiling = default_ceiling(w);
        for d in 0..ceiling {
            let deg = (w as i64 - 1) * qp - d;
            for m in basis_bk(2, qp - 1, deg, len) {
                if m.len() == len {
                    atoms.push((w, d, format!("{}c", mono_label(&m))));
                }
            }
        }
        w *= 2;
        len += 1;
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = Vec::new();
    fn rec(
        atoms: &[(usize, i64, String)],
        start: usize,
        weight: usize,
        t: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<(usize, i64, Vec<usize>)>,
    ) {
        let d: i64 = cur.iter().map(|&i| atoms[i].1).sum();
        out.push((weight, d, cur.clone()));
        for i in start..atoms.len() {
            if weight + atoms[i].0 <= t {
                cur.push(i);
                rec(atoms, i, weight + atoms[i].0, t, cur, out);
                cur.pop();
            }
        }
    }
    let mut raw = Vec::new();
    rec(&atoms, 0, 0, t, &mut cur, &mut raw);
    for (n, d, idx) in raw {
        if d >= default_ceiling(n) {
            continue;
        }
        let label = if idx.is_empty() { "1".to_string() } else { idx.iter().map(|&i| atoms[i].2.clone()).collect::<Vec<_>>().join("·") };
        out.push(PredictedClass { label, arity: n, degree: total_degree(n, q, k, d), product: idx.len() != 1 });
    }
    out.sort_by(|a, b| (a.arity, -a.degree, &a.label).cmp(&(b.arity, -b.degree, &b.label)));
    out
}

fn mono_label(m: &Mono) -> String {
    m.0.iter().map(|&(_, i)| format!("P^{i}")).collect::<Vec<_>>().join(" ") + " "
}

/// `P^s c` in the free `Σ^k E†`-algebra on `c`, `|c| = q`: the class of `e_{s−q}^{(k)} ⊗ c ⊗ c` (p = 2).
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct FreeOperation {
    pub q: i64,
    pub k: usize,
    pub s: i64,
    pub internal_degree: i64,
    pub nonzero: bool,
}

pub fn free_algebra_operation(field: Field, q: i64, k: usize, s: i64) -> Result<FreeOperation> {
    need_two(field)?;
    let d = k as i64 + q - s;
    let comp = CanonicalE::new(s - q, Side::Stable).component(field, k)?;
    let nonzero = if d < 0 || comp.is_zero() {
        false
    } else {
        let c = Coinvariants::build(field, 2, all_perms(2), 0, d - 1, d + 1, usize::MAX)?;
        let v = c.vector(d, &comp)?;
        let h = c.keyed.complex.homology(d)?;
        !h.is_boundary(&v)?
    };
    Ok(FreeOperation { q, k, s, internal_degree: d, nonzero })
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct TowerMapRank {
    pub arity: usize,
    pub degree: i64,
    pub source_dim: usize,
    pub target_dim: usize,
    pub rank: usize,
    /// Non-product classes predicted one level up in this degree.
    pub predicted_rank: usize,
}

/// Ranks of `F_t H((Σ^{k+1}E†)𝕊^q) → F_t H((Σ^k E†)𝕊^q)` induced by Ψ (p = 2).
pub fn free_algebra_tower_map(field: Field, q: i64, k: usize, t: usize, budget: usize) -> Result<Vec<TowerMapRank>> {
    need_two(field)?;
    // Ψ runs from level k+1 down to k: source products die, the rest survive
    let pred = predicted_basis(q, k + 1, t);
    let mut out = Vec::new();
    for n in 0..=t {
        let top = default_ceiling(n);
        let shift = n as i64 - 1;
        let lower = Coinvariants::build(field, n, all_perms(n), 0, 0, top, budget)?;
        let upper = &lower;
        for d in 0..top {
            let deg = total_degree(n, q, k, d);
            let hl = lower.keyed.complex.homology(d)?;
            let du = d + shift;
            let (source_dim, rank) = if du < 0 {
                (0, 0)
            } else if du >= top {
                continue;
            } else {
                let hu = upper.keyed.complex.homology(du)?;
                let mut cols = Vec::new();
                for z in &hu.representatives {
                    let elt = upper.keyed.from_vector(du, z)?;
                    let img = lower.normalize_elt(&linear(&elt, |a| psi_be_basis(field, a)));
                    let v = lower.keyed.to_vector(d, &img)?;
                    cols.push(dense_to_sparse(&hl.classify(&v)?));
                }
                (hu.betti, FpMatrix::from_columns(field, hl.betti, cols).rank())
            };
            let predicted_rank = pred.iter().filter(|c| c.arity == n && c.degree == deg && !c.product).count();
            out.push(TowerMapRank { arity: n, degree: deg, source_dim, target_dim: hl.betti, rank, predicted_rank });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct PartitionTower {
    pub parts: Vec<usize>,
    pub degree: i64,
    pub dims: Vec<usize>,
    pub step_ranks: Vec<usize>,
    /// Rank of the composite from the top level down to level 0.
    pub limit_dim: usize,
    /// The same rank from one level lower: the image at level 0 has stabilized.
    pub stabilized: bool,
}

/// Tower `H_{d+k(j−1)}(Σ^k E(j) / Σ_{j_1}×⋯)` for `k ≤ levels` with Ψ maps (p = 2).
pub fn partition_tower(field: Field, parts: &[usize], d: i64, levels: usize, budget: usize) -> Result<PartitionTower> {
    need_two(field)?;
    if levels < 1 {
        return Err(ActionError::Window("need two levels".into()));
    }
    let j: usize = parts.iter().sum();
    let shift = j as i64 - 1;
    let group = young_subgroup(parts);
    let top_deg = d + levels as i64 * shift;
    let c = Coinvariants::build(field, j, group, 0, 0, top_deg + 1, budget)?;
    let mut hs = Vec::new();
    for k in 0..=levels {
        let dk = d + k as i64 * shift;
        hs.push(if dk < 0 { None } else { Some(c.keyed.complex.homology(dk)?) });
    }
    let dims: Vec<usize> = hs.iter().map(|h| h.as_ref().map_or(0, |h| h.betti)).collect();
    // step matrices: level k+1 → level k, in representative coordinates
    let mut steps: Vec<FpMatrix> = Vec::new();
    for k in 0..levels {
        let (dl, du) = (d + k as i64 * shift, d + (k as i64 + 1) * shift);
        let cols = match (&hs[k], &hs[k + 1]) {
            (Some(hl), Some(hu)) => hu
                .representatives
                .iter()
                .map(|z| {
                    let elt = c.keyed.from_vector(du, z)?;
                    let img = c.normalize_elt(&linear(&elt, |a| psi_be_basis(field, a)));
                    Ok(dense_to_sparse(&hl.classify(&c.keyed.to_vector(dl, &img)?)?))
                })
                .collect::<Result<Vec<_>>>()?,
            _ => vec![Vec::new(); dims[k + 1]],
        };
        steps.push(FpMatrix::from_columns(field, dims[k], cols));
    }
    let composite = |from: usize| -> Result<usize> {
        let mut m = FpMatrix::identity(field, dims[from]);
        for k in (0..from).rev() {
            m = steps[k].compose(&m)?;
        }
        Ok(m.rank())
    };
    let limit_dim = composite(levels)?;
    let stabilized = limit_dim == composite(levels - 1)?;
    Ok(PartitionTower {
        parts: parts.to_vec(),
        degree: d,
        dims,
        step_ranks: steps.iter().map(FpMatrix::rank).collect(),
        limit_dim,
        stabilized,
    })
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct AdditivityReport {
    pub towers: Vec<PartitionTower>,
    pub mixed_vanish: bool,
    pub extremes_match: bool,
    pub additive: bool,
}

/// Stable limit of `H(E_st(j)/Σ_j)` in each degree at p = 2, from the one-generator free algebra.
pub fn stable_single_generator_dim(j: usize) -> usize {
    usize::from(j == 1 || j == 2)
}

/// `F_t(X ⊕ Y)` splits by partitions of the arity: mixed partitions must die in the limit,
/// extreme ones carry the one-generator pattern.
pub fn additivity_check(
    field: Field,
    arities: &[usize],
    degrees: (i64, i64),
    levels: &dyn Fn(usize) -> usize,
    budget: usize,
) -> Result<AdditivityReport> {
    let mut towers = Vec::new();
    let mut mixed_vanish = true;
    let mut extremes_match = true;
    for &j in arities {
        let mut partitions: Vec<Vec<usize>> = vec![vec![j]];
        for a in 1..j {
            partitions.push(vec![a, j - a]);
        }
        if j == 3 {
            partitions.push(vec![1, 1, 1]);
        }
        for parts in partitions {
            for d in degrees.0..=degrees.1 {
                let tw = partition_tower(field, &parts, d, levels(j), budget)?;
                if parts.len() == 1 {
                    extremes_match &= tw.stabilized && tw.limit_dim == stable_single_generator_dim(j);
                } else {
                    mixed_vanish &= tw.stabilized && tw.limit_dim == 0;
                }
                towers.push(tw);
            }
        }
    }
    Ok(AdditivityReport { towers, mixed_vanish, extremes_match, additive: mixed_vanish && extremes_match })
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ProductDisappearance {
    /// `Ψ(e_0^un) = 0`, whatever level it sits at.
    pub psi_kills_e0: bool,
    pub d_e0_st_nonzero: bool,
    pub tower_maps: Vec<(usize, Vec<TowerMapRank>)>,
    pub products_killed: bool,
}

/// `Ψ(e_0^un) = 0` at every level, `∂e_0^st ≠ 0`, and tower maps on `F_t H` kill products.
pub fn product_disappearance(field: Field, q: i64, t: usize, max_k: usize, budget: usize) -> Result<ProductDisappearance> {
    need_two(field)?;
    let e0 = OperadElt::Be { arity: 2, elt: crate::stabilization::e_un(field, 0) };
    let psi_kills_e0 = psi_is_zero(&e0);
    let st = CanonicalE::new(0, Side::Stable);
    let d_e0_st_nonzero = (1..=max_k + 1).any(|k| st.component(field, k).map(|c| !be_differential(&c).is_zero()).unwrap_or(false));
    let mut tower_maps = Vec::new();
    let mut products_killed = true;
    for k in 0..=max_k {
        let ranks = free_algebra_tower_map(field, q, k, t, budget)?;
        products_killed &= ranks.iter().all(|r| r.rank == r.predicted_rank);
        tower_maps.push((k, ranks));
    }
    Ok(ProductDisappearance { psi_kills_e0, d_e0_st_nonzero, tower_maps, products_killed })
}

fn psi_is_zero(e: &OperadElt) -> bool {
    match crate::stabilization::psi(e) {
        OperadElt::Be { elt, .. } => elt.is_zero(),
        OperadElt::Ms { elt, .. } => elt.is_zero(),
    }
}

/// Dense cochain helpers for tests and reports.
pub fn random_cochain(field: Field, n: usize, rng: &mut impl rand::Rng) -> Vec<u32> {
    (0..n).map(|_| rng.gen_range(0..field.p())).collect()
}

pub fn add_cochains(field: Field, a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(&x, &y)| field.add(x, y)).collect()
}

/// `H^q` dimensions from chains: the universal-coefficient count.
pub fn cohomology_dims(chains: &SpectralChains) -> Result<BTreeMap<i64, usize>> {
    let (lo, hi) = chains.window;
    (lo..=hi).map(|d| Ok((d, chains.complex.homology(d)?.betti))).collect()
}
