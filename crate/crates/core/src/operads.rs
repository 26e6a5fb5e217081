//! Barratt–Eccles and McClure–Smith operads, TR, AW co-operations and operadic suspension.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fplinalg::{Direction, Field, LinComb, LinalgError};
use crate::simplicial::SimplicialData;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OperadError {
    #[error("composition index {r} out of range for arity {arity}")]
    IndexOutOfRange { r: usize, arity: usize },
    #[error("invalid surjection {0:?}")]
    BadSurjection(Vec<u8>),
    #[error("invalid permutation tuple: {0}")]
    BadTuple(String),
    #[error("arity mismatch: {0} vs {1}")]
    ArityMismatch(usize, usize),
    #[error("malformed element: {0}")]
    Malformed(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, OperadError>;

/// A permutation of `(n)` as its image sequence `(ρ(1), …, ρ(n))`, 1-based.
pub type Perm = Vec<u8>;

pub fn identity_perm(n: usize) -> Perm {
    (1..=n as u8).collect()
}

pub fn is_perm(p: &[u8]) -> bool {
    let n = p.len();
    let mut seen = vec![false; n + 1];
    p.iter().all(|&v| {
        let v = v as usize;
        v >= 1 && v <= n && !std::mem::replace(&mut seen[v], true)
    })
}

/// All permutations of `(n)` in lexicographic order.
pub fn all_perms(n: usize) -> Vec<Perm> {
    let mut out = Vec::new();
    let mut cur = identity_perm(n);
    loop {
        out.push(cur.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else { break };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// `(σ∘ρ)(v) = σ(ρ(v))`.
pub fn compose_perm(sigma: &[u8], rho: &[u8]) -> Perm {
    rho.iter().map(|&v| sigma[v as usize - 1]).collect()
}

pub fn inverse_perm(p: &[u8]) -> Perm {
    let mut out = vec![0; p.len()];
    for (i, &v) in p.iter().enumerate() {
        out[v as usize - 1] = (i + 1) as u8;
    }
    out
}

pub fn perm_sign(p: &[u8]) -> i64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Substitution of sequences: value `r` of `f` replaced by the block `g + (r-1)`
/// and values above `r` shifted by `arity(g) - 1`.
fn substitute(f: &[u8], r: usize, g_block: &[u8], m: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(f.len() + g_block.len());
    for &v in f {
        let v = v as usize;
        if v == r {
            out.extend(g_block.iter().map(|&w| (w as usize + r - 1) as u8));
        } else if v > r {
            out.push((v + m - 1) as u8);
        } else {
            out.push(v as u8);
        }
    }
    out
}

/// Block composite `ρ ∘_r π` of permutations.
pub fn perm_compose_at(rho: &[u8], r: usize, pi: &[u8]) -> Perm {
    substitute(rho, r, pi, pi.len())
}

/// A nondegenerate surjection `(m) → (n)` written as its value sequence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Surjection {
    pub arity: usize,
    pub seq: Vec<u8>,
}

impl Surjection {
    pub fn new(arity: usize, seq: Vec<u8>) -> Result<Surjection> {
        let s = Surjection { arity, seq };
        if !s.is_surjective() || s.is_degenerate() {
            return Err(OperadError::BadSurjection(s.seq));
        }
        Ok(s)
    }

    /// Constructs without checks; callers filter with `is_valid`.
    pub fn raw(arity: usize, seq: Vec<u8>) -> Surjection {
        Surjection { arity, seq }
    }

    pub fn degree(&self) -> i64 {
        self.seq.len() as i64 - self.arity as i64
    }

    pub fn is_surjective(&self) -> bool {
        let mut seen = vec![false; self.arity + 1];
        for &v in &self.seq {
            let v = v as usize;
            if v == 0 || v > self.arity {
                return false;
            }
            seen[v] = true;
        }
        seen[1..].iter().all(|&b| b)
    }

    pub fn is_degenerate(&self) -> bool {
        self.seq.windows(2).any(|w| w[0] == w[1])
    }

    pub fn is_valid(&self) -> bool {
        self.is_surjective() && !self.is_degenerate()
    }

    pub fn identity(n: usize) -> Surjection {
        Surjection { arity: n, seq: identity_perm(n) }
    }
}

impl std::fmt::Display for Surjection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.seq.iter().map(|v| v.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A normalized simplex `(ρ_0, …, ρ_d)` of `EΣ_n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PermTuple {
    pub arity: usize,
    pub perms: Vec<Perm>,
}

impl PermTuple {
    pub fn new(arity: usize, perms: Vec<Perm>) -> Result<PermTuple> {
        if perms.is_empty() {
            return Err(OperadError::BadTuple("empty tuple".into()));
        }
        if perms.iter().any(|p| p.len() != arity || !is_perm(p)) {
            return Err(OperadError::BadTuple(format!("{perms:?} are not permutations of ({arity})")));
        }
        let t = PermTuple { arity, perms };
        if t.is_degenerate() {
            return Err(OperadError::BadTuple("adjacent entries coincide".into()));
        }
        Ok(t)
    }

    pub fn degree(&self) -> i64 {
        self.perms.len() as i64 - 1
    }

    pub fn is_degenerate(&self) -> bool {
        self.perms.windows(2).any(|w| w[0] == w[1])
    }

    pub fn identity(n: usize) -> PermTuple {
        PermTuple { arity: n, perms: vec![identity_perm(n)] }
    }
}

impl std::fmt::Display for PermTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.perms.iter().map(|p| p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("")).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub type MsElt = LinComb<Surjection>;
pub type BeElt = LinComb<PermTuple>;

/// Nondegenerate surjections `(n+d) → (n)` in lexicographic order.
pub fn ms_basis(n: usize, d: i64) -> Vec<Surjection> {
    if d < 0 || (n == 0 && d > 0) {
        return Vec::new();
    }
    let m = n + d as usize;
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(m);
    fn rec(n: usize, m: usize, cur: &mut Vec<u8>, out: &mut Vec<Surjection>) {
        if cur.len() == m {
            let s = Surjection { arity: n, seq: cur.clone() };
            if s.is_surjective() {
                out.push(s);
            }
            return;
        }
        for v in 1..=n as u8 {
            if cur.last() != Some(&v) {
                cur.push(v);
                rec(n, m, cur, out);
                cur.pop();
            }
        }
    }
    rec(n, m, &mut cur, &mut out);
    out
}

/// Nondegenerate `(d+1)`-tuples of permutations of `(n)`.
pub fn be_basis(n: usize, d: i64) -> Vec<PermTuple> {
    if d < 0 {
        return Vec::new();
    }
    let perms = all_perms(n);
    let mut out = Vec::new();
    let mut cur: Vec<Perm> = Vec::new();
    fn rec(n: usize, len: usize, perms: &[Perm], cur: &mut Vec<Perm>, out: &mut Vec<PermTuple>) {
        if cur.len() == len {
            out.push(PermTuple { arity: n, perms: cur.clone() });
            return;
        }
        for p in perms {
            if cur.last() != Some(p) {
                cur.push(p.clone());
                rec(n, len, perms, cur, out);
                cur.pop();
            }
        }
    }
    rec(n, d as usize + 1, &perms, &mut cur, &mut out);
    out
}

/// `∂f = Σ (−1)^{τ_f(i) − f(i)} (f(1), …, f̂(i), …, f(m))`.
pub fn ms_differential_basis(field: Field, f: &Surjection) -> MsElt {
    let mut out = MsElt::zero(field);
    let m = f.seq.len();
    for i in 0..m {
        let fi = f.seq[i];
        let tau = (0..m).filter(|&j| f.seq[j] < fi || (f.seq[j] == fi && j <= i)).count() as i64;
        let mut s = f.seq.clone();
        s.remove(i);
        let g = Surjection::raw(f.arity, s);
        if g.is_valid() {
            out.add_term(g, sign(tau - fi as i64));
        }
    }
    out
}

pub fn ms_differential(e: &MsElt) -> MsElt {
    linear(e, |f| ms_differential_basis(e.field(), f))
}

/// Alternating-face differential on normalized chains of `EΣ_n`.
pub fn be_differential_basis(field: Field, a: &PermTuple) -> BeElt {
    let mut out = BeElt::zero(field);
    if a.perms.len() <= 1 {
        return out;
    }
    for i in 0..a.perms.len() {
        let mut perms = a.perms.clone();
        perms.remove(i);
        let t = PermTuple { arity: a.arity, perms };
        if !t.is_degenerate() {
            out.add_term(t, sign(i as i64));
        }
    }
    out
}

pub fn be_differential(e: &BeElt) -> BeElt {
    linear(e, |a| be_differential_basis(e.field(), a))
}

fn sign(e: i64) -> i64 {
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Extends a basis map linearly.
pub fn linear<K: Ord + Clone, K2: Ord + Clone>(e: &LinComb<K>, mut f: impl FnMut(&K) -> LinComb<K2>) -> LinComb<K2> {
    let mut out = LinComb::zero(e.field());
    for (k, c) in &e.terms {
        out.add_scaled(&f(k), *c);
    }
    out
}

/// Extends a basis pairing bilinearly.
pub fn bilinear<A: Ord + Clone, B: Ord + Clone, K: Ord + Clone>(
    a: &LinComb<A>,
    b: &LinComb<B>,
    mut f: impl FnMut(&A, &B) -> Result<LinComb<K>>,
) -> Result<LinComb<K>> {
    let field = a.field();
    let mut out = LinComb::zero(field);
    for (x, c) in &a.terms {
        for (y, d) in &b.terms {
            out.add_scaled(&f(x, y)?, field.mul(*c, *d));
        }
    }
    Ok(out)
}

/// `f ∘_r g` in the McClure–Smith operad.
pub fn ms_compose(field: Field, f: &Surjection, r: usize, g: &Surjection) -> Result<MsElt> {
    if r == 0 || r > f.arity {
        return Err(OperadError::IndexOutOfRange { r, arity: f.arity });
    }
    let m = g.arity;
    let big_m = g.seq.len();
    let arity = f.arity + m - 1;
    let occ: Vec<usize> = (0..f.seq.len()).filter(|&i| f.seq[i] as usize == r).collect();
    let t = occ.len();
    let mut out = MsElt::zero(field);
    if big_m == 0 {
        return Ok(out);
    }
    // interior cut points 1 = j_0 ≤ j_1 ≤ … ≤ j_t = M
    let mut cuts = vec![1usize; t + 1];
    cuts[t] = big_m;
    loop {
        let mut seq = Vec::with_capacity(f.seq.len() + big_m - 1);
        let mut k = 0;
        for &v in &f.seq {
            let v = v as usize;
            if v == r {
                for j in cuts[k]..=cuts[k + 1] {
                    seq.push((g.seq[j - 1] as usize + r - 1) as u8);
                }
                k += 1;
            } else if v > r {
                seq.push((v + m - 1) as u8);
            } else {
                seq.push(v as u8);
            }
        }
        let s = Surjection::raw(arity, seq);
        if s.is_valid() {
            out.add_term(s, 1);
        }
        if t < 2 {
            break;
        }
        // advance j_1..j_{t-1} as a nondecreasing sequence in [1, M]
        let mut pos = t - 1;
        while pos >= 1 && cuts[pos] == big_m {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        let v = cuts[pos] + 1;
        for c in cuts.iter_mut().take(t).skip(pos) {
            *c = v;
        }
    }
    Ok(out)
}

pub fn ms_compose_elt(a: &MsElt, r: usize, b: &MsElt) -> Result<MsElt> {
    let field = a.field();
    bilinear(a, b, |f, g| ms_compose(field, f, r, g))
}

/// `(a, b)`-shuffles as lattice paths: for each step, true = advance the first factor.
pub fn shuffles(a: usize, b: usize) -> Vec<(Vec<bool>, i64)> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(a + b);
    fn rec(a: usize, b: usize, cur: &mut Vec<bool>, ys: usize, sgn: usize, out: &mut Vec<(Vec<bool>, i64)>) {
        if a == 0 && b == 0 {
            out.push((cur.clone(), if sgn % 2 == 0 { 1 } else { -1 }));
            return;
        }
        if a > 0 {
            cur.push(true);
            rec(a - 1, b, cur, ys, sgn + ys, out);
            cur.pop();
        }
        if b > 0 {
            cur.push(false);
            rec(a, b - 1, cur, ys + 1, sgn, out);
            cur.pop();
        }
    }
    rec(a, b, &mut cur, 0, 0, &mut out);
    out
}

/// `a ∘_r b` in the Barratt–Eccles operad: shuffle product of the simplices
/// followed by levelwise block composition.
pub fn be_compose(field: Field, a: &PermTuple, r: usize, b: &PermTuple) -> Result<BeElt> {
    if r == 0 || r > a.arity {
        return Err(OperadError::IndexOutOfRange { r, arity: a.arity });
    }
    let p = a.perms.len() - 1;
    let q = b.perms.len() - 1;
    let arity = a.arity + b.arity - 1;
    let mut out = BeElt::zero(field);
    for (path, sgn) in shuffles(p, q) {
        let (mut i, mut j) = (0, 0);
        let mut perms = Vec::with_capacity(p + q + 1);
        perms.push(perm_compose_at(&a.perms[0], r, &b.perms[0]));
        for step in path {
            if step {
                i += 1;
            } else {
                j += 1;
            }
            perms.push(perm_compose_at(&a.perms[i], r, &b.perms[j]));
        }
        let t = PermTuple { arity, perms };
        if !t.is_degenerate() {
            out.add_term(t, sgn);
        }
    }
    Ok(out)
}

pub fn be_compose_elt(a: &BeElt, r: usize, b: &BeElt) -> Result<BeElt> {
    let field = a.field();
    bilinear(a, b, |x, y| be_compose(field, x, r, y))
}

/// Postcomposition action `σ·f`.
pub fn act_ms(sigma: &[u8], f: &Surjection) -> Surjection {
    Surjection { arity: f.arity, seq: compose_perm(sigma, &f.seq) }
}

pub fn act_be(sigma: &[u8], a: &PermTuple) -> PermTuple {
    PermTuple { arity: a.arity, perms: a.perms.iter().map(|p| compose_perm(sigma, p)).collect() }
}

pub fn act_ms_elt(sigma: &[u8], e: &MsElt) -> MsElt {
    e.map_keys(|f| Some((act_ms(sigma, f), 1)))
}

pub fn act_be_elt(sigma: &[u8], e: &BeElt) -> BeElt {
    e.map_keys(|a| Some((act_be(sigma, a), 1)))
}

/// Block permutation with `(σ·f) ∘_r g = σ̃·(f ∘_{σ^{-1}(r)} g)` where `m = arity(g)`.
pub fn block_outer(sigma: &[u8], r: usize, m: usize) -> Perm {
    let n = sigma.len();
    let rp = inverse_perm(sigma)[r - 1] as usize;
    let shift = |w: usize| if w > r { w + m - 1 } else { w };
    let mut out = Vec::with_capacity(n + m - 1);
    for v in 1..=n + m - 1 {
        let w = if v < rp {
            shift(sigma[v - 1] as usize)
        } else if v < rp + m {
            r + (v - rp)
        } else {
            shift(sigma[v - m] as usize)
        };
        out.push(w as u8);
    }
    out
}

/// Block permutation with `f ∘_r (τ·g) = τ̃·(f ∘_r g)` for `arity(f) = n`.
pub fn block_inner(n: usize, r: usize, tau: &[u8]) -> Perm {
    let m = tau.len();
    (1..=n + m - 1).map(|v| if v >= r && v < r + m { (r - 1 + tau[v - r] as usize) as u8 } else { v as u8 }).collect()
}

/// `TR: E → M` (table reduction).
pub fn tr_basis(field: Field, a: &PermTuple) -> MsElt {
    let n = a.arity;
    let d = a.perms.len() - 1;
    let mut out = MsElt::zero(field);
    let total = n + d;
    let mut parts = vec![0usize; d + 1];
    fn rec(i: usize, remaining: usize, n: usize, parts: &mut Vec<usize>, a: &PermTuple, out: &mut MsElt) {
        let d = parts.len() - 1;
        if i == d {
            if remaining == 0 || remaining > n {
                return;
            }
            parts[d] = remaining;
            let mut used = vec![false; n + 1];
            let mut seq = Vec::with_capacity(n + d);
            for (k, &rk) in parts.iter().enumerate() {
                let avail: Vec<u8> = a.perms[k].iter().copied().filter(|&v| !used[v as usize]).collect();
                if avail.len() < rk {
                    return;
                }
                seq.extend_from_slice(&avail[..rk]);
                for &v in &avail[..rk - 1] {
                    used[v as usize] = true;
                }
            }
            let s = Surjection::raw(n, seq);
            if s.is_valid() {
                out.add_term(s, 1);
            }
            return;
        }
        let max = remaining.saturating_sub(d - i).min(n);
        for r in 1..=max {
            parts[i] = r;
            rec(i + 1, remaining - r, n, parts, a, out);
        }
    }
    rec(0, total, n, &mut parts, a, &mut out);
    out
}

pub fn tr(e: &BeElt) -> MsElt {
    linear(e, |a| tr_basis(e.field(), a))
}

/// A tensor of simplices `y_1 ⊗ ⋯ ⊗ y_n`, each given as `(dimension, id)`.
pub type SimplexTensor = Vec<(usize, usize)>;

/// `⟨f⟩(σ)`: sum over overlapping partitions of `[e]` into `m` intervals,
/// with cut points enumerated lexicographically.
pub fn aw_evaluate<S: SimplicialData + ?Sized>(field: Field, f: &Surjection, s: &S, e: usize, x: usize) -> LinComb<SimplexTensor> {
    let mut out = LinComb::zero(field);
    if !f.is_valid() {
        return out;
    }
    let m = f.seq.len();
    let n = f.arity;
    let mut cuts = vec![0usize; m + 1];
    cuts[m] = e;
    loop {
        let mut factors: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut ok = true;
        for j in 0..m {
            let fac = &mut factors[f.seq[j] as usize - 1];
            for v in cuts[j]..=cuts[j + 1] {
                if fac.last().is_some_and(|&l| l >= v) {
                    ok = false;
                }
                fac.push(v);
            }
        }
        if ok {
            let mut term = Vec::with_capacity(n);
            for verts in &factors {
                let dim = verts.len() - 1;
                let y = s.apply_op(e, x, verts);
                if y == s.basepoint(dim) || s.is_degenerate(dim, y) {
                    ok = false;
                    break;
                }
                term.push((dim, y));
            }
            if ok {
                out.add_term(term, 1);
            }
        }
        if m < 2 {
            break;
        }
        let mut pos = m - 1;
        while pos >= 1 && cuts[pos] == e {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        let v = cuts[pos] + 1;
        for c in cuts.iter_mut().take(m).skip(pos) {
            *c = v;
        }
    }
    out
}

pub fn aw_evaluate_elt<S: SimplicialData + ?Sized>(a: &MsElt, s: &S, e: usize, x: usize) -> LinComb<SimplexTensor> {
    let field = a.field();
    let mut out = LinComb::zero(field);
    for (f, c) in &a.terms {
        out.add_scaled(&aw_evaluate(field, f, s, e, x), *c);
    }
    out
}

/// Boundary of a simplex in reduced normalized chains, as `(id, coefficient)` terms.
pub fn simplex_boundary<S: SimplicialData + ?Sized>(s: &S, d: usize, x: usize) -> Vec<(usize, i64)> {
    if d == 0 {
        return Vec::new();
    }
    (0..=d)
        .filter_map(|i| {
            let y = s.face(d, x, i);
            if y == s.basepoint(d - 1) || s.is_degenerate(d - 1, y) {
                None
            } else {
                Some((y, sign(i as i64)))
            }
        })
        .collect()
}

/// Leibniz boundary on tensors of normalized chains.
pub fn tensor_boundary<S: SimplicialData + ?Sized>(field: Field, s: &S, t: &LinComb<SimplexTensor>) -> LinComb<SimplexTensor> {
    let mut out = LinComb::zero(field);
    for (term, c) in &t.terms {
        let mut before = 0i64;
        for (k, &(d, y)) in term.iter().enumerate() {
            for (z, sg) in simplex_boundary(s, d, y) {
                let mut nt = term.clone();
                nt[k] = (d - 1, z);
                out.add_term(nt, sg * sign(before) * *c as i64);
            }
            before += d as i64;
        }
    }
    out
}

/// Degree bookkeeping for an element of `Σ^k P` (chain) or `Σ^k P†` (cochain).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuspendedOperadRef {
    pub flavor: Flavor,
    pub k: i64,
    pub direction: Direction,
}

impl SuspendedOperadRef {
    /// External degree of an arity-`n` term of internal degree `internal`.
    pub fn external_degree(&self, n: usize, internal: i64) -> i64 {
        let shift = self.k * (1 - n as i64);
        match self.direction {
            Direction::Chain => internal + shift,
            Direction::Cochain => -internal - shift,
        }
    }

    pub fn internal_degree(&self, n: usize, external: i64) -> i64 {
        let shift = self.k * (1 - n as i64);
        match self.direction {
            Direction::Chain => external - shift,
            Direction::Cochain => -external - shift,
        }
    }

    pub fn dagger(&self) -> SuspendedOperadRef {
        SuspendedOperadRef { flavor: self.flavor, k: self.k, direction: self.direction.flip() }
    }

    pub fn suspend(&self, k: i64) -> SuspendedOperadRef {
        SuspendedOperadRef { flavor: self.flavor, k: self.k + k, direction: self.direction }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    #[serde(rename = "BE")]
    Be,
    #[serde(rename = "MS")]
    Ms,
}

/// An operad element of either flavor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OperadElt {
    Ms { arity: usize, elt: MsElt },
    Be { arity: usize, elt: BeElt },
}

/// A suspended element: the underlying terms plus degree bookkeeping.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuspendedElt {
    pub elt: OperadElt,
    pub reference: SuspendedOperadRef,
}

impl SuspendedElt {
    pub fn external_degree(&self) -> Option<i64> {
        let (n, d) = self.elt.arity_degree()?;
        Some(self.reference.external_degree(n, d))
    }
}

pub fn suspend_operad_elt(e: &OperadElt, k: i64, direction: Direction) -> SuspendedElt {
    SuspendedElt { elt: e.clone(), reference: SuspendedOperadRef { flavor: e.flavor(), k, direction } }
}

impl OperadElt {
    pub fn flavor(&self) -> Flavor {
        match self {
            OperadElt::Ms { .. } => Flavor::Ms,
            OperadElt::Be { .. } => Flavor::Be,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            OperadElt::Ms { arity, .. } | OperadElt::Be { arity, .. } => *arity,
        }
    }

    /// Arity and internal degree of a homogeneous nonzero element.
    pub fn arity_degree(&self) -> Option<(usize, i64)> {
        match self {
            OperadElt::Ms { arity, elt } => elt.terms.keys().next().map(|f| (*arity, f.degree())),
            OperadElt::Be { arity, elt } => elt.terms.keys().next().map(|a| (*arity, a.degree())),
        }
    }

    pub fn differential(&self) -> OperadElt {
        match self {
            OperadElt::Ms { arity, elt } => OperadElt::Ms { arity: *arity, elt: ms_differential(elt) },
            OperadElt::Be { arity, elt } => OperadElt::Be { arity: *arity, elt: be_differential(elt) },
        }
    }

    pub fn to_json(&self) -> ElementJson {
        match self {
            OperadElt::Ms { arity, elt } => ElementJson {
                flavor: Flavor::Ms,
                p: elt.p,
                arity: *arity,
                terms: elt.terms.iter().map(|(f, c)| TermJson { coef: *c, seq: serde_json::json!(f.seq) }).collect(),
            },
            OperadElt::Be { arity, elt } => ElementJson {
                flavor: Flavor::Be,
                p: elt.p,
                arity: *arity,
                terms: elt.terms.iter().map(|(a, c)| TermJson { coef: *c, seq: serde_json::json!(a.perms) }).collect(),
            },
        }
    }

    pub fn from_json(j: &ElementJson) -> Result<OperadElt> {
        let field = Field::new(j.p)?;
        match j.flavor {
            Flavor::Ms => {
                let mut elt = MsElt::zero(field);
                for t in &j.terms {
                    let seq: Vec<u8> = serde_json::from_value(t.seq.clone()).map_err(|e| OperadError::Malformed(e.to_string()))?;
                    elt.add_term(Surjection::new(j.arity, seq)?, t.coef as i64);
                }
                Ok(OperadElt::Ms { arity: j.arity, elt })
            }
            Flavor::Be => {
                let mut elt = BeElt::zero(field);
                for t in &j.terms {
                    let perms: Vec<Perm> = serde_json::from_value(t.seq.clone()).map_err(|e| OperadError::Malformed(e.to_string()))?;
                    elt.add_term(PermTuple::new(j.arity, perms)?, t.coef as i64);
                }
                Ok(OperadElt::Be { arity: j.arity, elt })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub coef: u32,
    pub seq: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementJson {
    pub flavor: Flavor,
    pub p: u32,
    pub arity: usize,
    pub terms: Vec<TermJson>,
}

/// Parses `"1,2,1"` or `"121"` into a sequence.
pub fn parse_seq(s: &str) -> Result<Vec<u8>> {
    let s = s.trim().trim_start_matches('(').trim_end_matches(')');
    let parts: Vec<String> =
        if s.contains(',') { s.split(',').map(|x| x.trim().to_string()).collect() } else { s.chars().map(String::from).collect() };
    parts.iter().map(|p| p.parse::<u8>().map_err(|_| OperadError::Malformed(format!("bad entry {p:?}")))).collect()
}

pub fn random_perm(rng: &mut impl Rng, n: usize) -> Perm {
    let mut p = identity_perm(n);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Uniform-ish random nondegenerate surjection of the given arity and degree.
pub fn random_surjection(rng: &mut impl Rng, n: usize, d: usize) -> Surjection {
    assert!(n >= 2 || d == 0, "no nondegenerate surjection onto ({n}) in degree {d}");
    loop {
        let mut seq: Vec<u8> = Vec::with_capacity(n + d);
        while seq.len() < n + d {
            let v = rng.gen_range(1..=n as u8);
            if seq.last() != Some(&v) {
                seq.push(v);
            }
        }
        let s = Surjection { arity: n, seq };
        if s.is_valid() {
            return s;
        }
    }
}

pub fn random_tuple(rng: &mut impl Rng, n: usize, d: usize) -> PermTuple {
    assert!(n >= 2 || d == 0, "no nondegenerate tuple in arity {n}, degree {d}");
    loop {
        let perms: Vec<Perm> = (0..=d).map(|_| random_perm(rng, n)).collect();
        let t = PermTuple { arity: n, perms };
        if !t.is_degenerate() {
            return t;
        }
    }
}
