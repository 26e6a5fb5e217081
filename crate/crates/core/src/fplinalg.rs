//! Exact linear algebra over prime fields and homology of windowed complexes.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("modulus {0} is not one of the supported primes")]
    NotPrime(u32),
    #[error("degree {degree} outside stored window [{lo}, {hi}]")]
    OutOfWindow { degree: i64, lo: i64, hi: i64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("differentials do not square to zero at degree {0}")]
    NotAComplex(i64),
    #[error("vector is not a cycle")]
    NotACycle,
    #[error("moduli differ: {0} vs {1}")]
    ModulusMismatch(u32, u32),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// A prime field context. Only small primes are supported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Field {
    p: u32,
}

impl Field {
    pub fn new(p: u32) -> Result<Field> {
        if p < 2 || p > 251 || (2..p).take_while(|d| d * d <= p).any(|d| p % d == 0) {
            return Err(LinalgError::NotPrime(p));
        }
        Ok(Field { p })
    }

    pub fn p(self) -> u32 {
        self.p
    }

    pub fn reduce(self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    pub fn add(self, a: u32, b: u32) -> u32 {
        (a + b) % self.p
    }

    pub fn sub(self, a: u32, b: u32) -> u32 {
        (a + self.p - b) % self.p
    }

    pub fn neg(self, a: u32) -> u32 {
        (self.p - a) % self.p
    }

    pub fn mul(self, a: u32, b: u32) -> u32 {
        (a * b) % self.p
    }

    pub fn inv(self, a: u32) -> u32 {
        assert!(a % self.p != 0, "inverse of zero");
        self.pow(a, self.p - 2)
    }

    pub fn pow(self, mut a: u32, mut e: u32) -> u32 {
        let mut r = 1 % self.p;
        a %= self.p;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    /// `(-1)^e` as a field element.
    pub fn sign(self, e: i64) -> u32 {
        if e.rem_euclid(2) == 0 {
            1 % self.p
        } else {
            self.p - 1
        }
    }
}

/// A residue together with its modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FpScalar {
    pub value: u32,
    pub p: u32,
}

impl FpScalar {
    pub fn new(field: Field, v: i64) -> FpScalar {
        FpScalar { value: field.reduce(v), p: field.p() }
    }
}

impl fmt::Display for FpScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mod {}", self.value, self.p)
    }
}

/// Finite formal F_p-combination of keys, kept sorted with no zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinComb<K: Ord> {
    pub p: u32,
    pub terms: BTreeMap<K, u32>,
}

impl<K: Ord + Clone> LinComb<K> {
    pub fn zero(field: Field) -> Self {
        LinComb { p: field.p(), terms: BTreeMap::new() }
    }

    pub fn single(field: Field, k: K, c: i64) -> Self {
        let mut s = Self::zero(field);
        s.add_term(k, c);
        s
    }

    pub fn field(&self) -> Field {
        Field { p: self.p }
    }

    pub fn add_term(&mut self, k: K, c: i64) {
        let f = self.field();
        let c = f.reduce(c);
        if c == 0 {
            return;
        }
        let e = self.terms.entry(k.clone()).or_insert(0);
        *e = f.add(*e, c);
        if *e == 0 {
            self.terms.remove(&k);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (k, c) in &other.terms {
            self.add_term(k.clone(), *c as i64);
        }
    }

    pub fn add_scaled(&mut self, other: &Self, s: u32) {
        for (k, c) in &other.terms {
            self.add_term(k.clone(), (*c as i64) * (s as i64));
        }
    }

    pub fn scaled(&self, s: i64) -> Self {
        let mut out = Self::zero(self.field());
        for (k, c) in &self.terms {
            out.add_term(k.clone(), (*c as i64) * s);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, k: &K) -> u32 {
        self.terms.get(k).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn map_keys<K2: Ord + Clone>(&self, mut f: impl FnMut(&K) -> Option<(K2, i64)>) -> LinComb<K2> {
        let mut out = LinComb::zero(self.field());
        for (k, c) in &self.terms {
            if let Some((k2, s)) = f(k) {
                out.add_term(k2, s * (*c as i64));
            }
        }
        out
    }
}

/// Compressed sparse column matrix over F_p. No stored entry is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FpMatrix {
    p: u32,
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    vals: Vec<u8>,
}

impl FpMatrix {
    pub fn zero(field: Field, rows: usize, cols: usize) -> FpMatrix {
        FpMatrix { p: field.p(), rows, cols, col_ptr: vec![0; cols + 1], row_idx: vec![], vals: vec![] }
    }

    pub fn identity(field: Field, n: usize) -> FpMatrix {
        FpMatrix::from_columns(field, n, (0..n).map(|i| vec![(i, 1)]).collect())
    }

    /// Builds from unsorted triplets; duplicate positions are summed.
    pub fn from_triplets(field: Field, rows: usize, cols: usize, trips: &[(usize, usize, i64)]) -> Result<FpMatrix> {
        let mut columns: Vec<Vec<(usize, i64)>> = vec![Vec::new(); cols];
        for &(r, c, v) in trips {
            if r >= rows || c >= cols {
                return Err(LinalgError::Dimension(format!("entry ({r},{c}) outside {rows}x{cols}")));
            }
            columns[c].push((r, v));
        }
        let cols_red = columns.into_iter().map(|col| col.into_iter().map(|(r, v)| (r, field.reduce(v))).collect()).collect();
        Ok(FpMatrix::from_columns(field, rows, cols_red))
    }

    /// Builds from per-column sparse entries (any order, duplicates summed).
    pub fn from_columns(field: Field, rows: usize, columns: Vec<Vec<(usize, u32)>>) -> FpMatrix {
        let cols = columns.len();
        let mut col_ptr = Vec::with_capacity(cols + 1);
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_unstable_by_key(|e| e.0);
            let mut i = 0;
            while i < col.len() {
                let r = col[i].0;
                let mut v = 0u32;
                while i < col.len() && col[i].0 == r {
                    v = field.add(v, col[i].1 % field.p());
                    i += 1;
                }
                if v != 0 {
                    assert!(r < rows, "row index out of range");
                    row_idx.push(r as u32);
                    vals.push(v as u8);
                }
            }
            col_ptr.push(row_idx.len());
        }
        FpMatrix { p: field.p(), rows, cols, col_ptr, row_idx, vals }
    }

    pub fn field(&self) -> Field {
        Field { p: self.p }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        let (a, b) = (self.col_ptr[c], self.col_ptr[c + 1]);
        self.row_idx[a..b].iter().zip(&self.vals[a..b]).map(|(&r, &v)| (r as usize, v as u32))
    }

    pub fn column_vec(&self, c: usize) -> Vec<(usize, u32)> {
        self.column(c).collect()
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.column(c).find(|e| e.0 == r).map(|e| e.1).unwrap_or(0)
    }

    pub fn triplets(&self) -> Vec<(usize, usize, u32)> {
        let mut out = Vec::with_capacity(self.nnz());
        for c in 0..self.cols {
            for (r, v) in self.column(c) {
                out.push((r, c, v));
            }
        }
        out.sort_unstable();
        out
    }

    pub fn transpose(&self) -> FpMatrix {
        let mut cols: Vec<Vec<(usize, u32)>> = vec![Vec::new(); self.rows];
        for c in 0..self.cols {
            for (r, v) in self.column(c) {
                cols[r].push((c, v));
            }
        }
        FpMatrix::from_columns(self.field(), self.cols, cols)
    }

    pub fn scaled(&self, s: i64) -> FpMatrix {
        let f = self.field();
        let s = f.reduce(s);
        let cols = (0..self.cols).map(|c| self.column(c).map(|(r, v)| (r, f.mul(v, s))).collect()).collect();
        FpMatrix::from_columns(f, self.rows, cols)
    }

    /// Applies the matrix to a sparse vector.
    pub fn apply_sparse(&self, v: &[(usize, u32)]) -> Vec<(usize, u32)> {
        let f = self.field();
        let mut acc: BTreeMap<usize, u32> = BTreeMap::new();
        for &(c, x) in v {
            for (r, m) in self.column(c) {
                let e = acc.entry(r).or_insert(0);
                *e = f.add(*e, f.mul(m, x));
            }
        }
        acc.into_iter().filter(|e| e.1 != 0).collect()
    }

    /// `self * other`.
    pub fn compose(&self, other: &FpMatrix) -> Result<FpMatrix> {
        if self.cols != other.rows {
            return Err(LinalgError::Dimension(format!("cannot compose {}x{} with {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let cols = (0..other.cols).map(|c| self.apply_sparse(&other.column_vec(c))).collect();
        Ok(FpMatrix::from_columns(self.field(), self.rows, cols))
    }

    pub fn is_zero(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn density(&self) -> f64 {
        if self.rows == 0 || self.cols == 0 {
            0.0
        } else {
            self.nnz() as f64 / (self.rows as f64 * self.cols as f64)
        }
    }

    pub fn rank(&self) -> usize {
        let mut e = Echelon::new(self.field(), self.rows);
        for c in 0..self.cols {
            e.insert_sparse(&self.column_vec(c));
            if e.rank() == self.rows {
                break;
            }
        }
        e.rank()
    }

    /// Row-reduced echelon form, its rank and pivot columns.
    pub fn rref(&self) -> Rref {
        let t = self.transpose();
        let mut e = Echelon::new(self.field(), self.cols);
        for r in 0..self.rows {
            e.insert_sparse(&t.column_vec(r));
        }
        let basis = e.sorted_basis();
        let pivots: Vec<usize> = basis.iter().map(|b| b.0).collect();
        let rank = pivots.len();
        let mut trips = Vec::new();
        for (i, (_, row)) in basis.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if *v != 0 {
                    trips.push((i, c, *v as i64));
                }
            }
        }
        let reduced = FpMatrix::from_triplets(self.field(), self.rows, self.cols, &trips).expect("in range");
        Rref { reduced, rank, pivot_cols: pivots }
    }

    /// Basis of the null space, as sparse vectors in the column space.
    pub fn kernel_basis(&self) -> Vec<Vec<(usize, u32)>> {
        let t = self.transpose();
        let mut e = Echelon::new(self.field(), self.cols);
        for r in 0..self.rows {
            e.insert_sparse(&t.column_vec(r));
            if e.rank() == self.cols {
                break;
            }
        }
        e.null_space()
    }

    /// Basis of the column space (echelon-reduced).
    pub fn image_basis(&self) -> Vec<Vec<(usize, u32)>> {
        let mut e = Echelon::new(self.field(), self.rows);
        for c in 0..self.cols {
            e.insert_sparse(&self.column_vec(c));
            if e.rank() == self.rows {
                break;
            }
        }
        e.sorted_basis().into_iter().map(|(_, v)| dense_to_sparse(&v)).collect()
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            p: self.p,
            rows: self.rows,
            cols: self.cols,
            entries: self.triplets().into_iter().map(|(r, c, v)| [r as i64, c as i64, v as i64]).collect(),
        }
    }

    pub fn from_json(j: &MatrixJson) -> Result<FpMatrix> {
        let field = Field::new(j.p)?;
        let mut trips = Vec::with_capacity(j.entries.len());
        for e in &j.entries {
            if e[0] < 0 || e[1] < 0 {
                return Err(LinalgError::Malformed("negative index".into()));
            }
            trips.push((e[0] as usize, e[1] as usize, e[2]));
        }
        FpMatrix::from_triplets(field, j.rows, j.cols, &trips)
    }
}

/// Result of row reduction.
#[derive(Clone, Debug)]
pub struct Rref {
    pub reduced: FpMatrix,
    pub rank: usize,
    pub pivot_cols: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub p: u32,
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[i64; 3]>,
}

pub fn dense_to_sparse(v: &[u32]) -> Vec<(usize, u32)> {
    v.iter().enumerate().filter(|e| *e.1 != 0).map(|(i, x)| (i, *x)).collect()
}

pub fn sparse_to_dense(v: &[(usize, u32)], n: usize) -> Vec<u32> {
    let mut out = vec![0; n];
    for &(i, x) in v {
        out[i] = x;
    }
    out
}

#[derive(Clone, Debug)]
enum Store {
    Bits { words: usize, rows: Vec<Vec<u64>> },
    Bytes { rows: Vec<Vec<u8>> },
}

/// Incremental fully-reduced row echelon basis of a subspace of F_p^n,
/// optionally tracking each basis row as a combination of inserted vectors.
#[derive(Clone, Debug)]
pub struct Echelon {
    field: Field,
    n: usize,
    store: Store,
    pivots: Vec<usize>,
    pivot_row: Vec<usize>,
    pivot_mask: Vec<u64>,
    tags: Option<Vec<Vec<u32>>>,
    inserted: usize,
}

const NONE: usize = usize::MAX;

enum Work {
    Bits(Vec<u64>),
    Bytes(Vec<u8>),
}

impl Echelon {
    pub fn new(field: Field, n: usize) -> Echelon {
        let store =
            if field.p() == 2 { Store::Bits { words: n.div_ceil(64), rows: Vec::new() } } else { Store::Bytes { rows: Vec::new() } };
        Echelon {
            field,
            n,
            store,
            pivots: Vec::new(),
            pivot_row: vec![NONE; n],
            pivot_mask: vec![0; n.div_ceil(64)],
            tags: None,
            inserted: 0,
        }
    }

    /// Like `new`, but records how each basis row arises from inserted vectors.
    pub fn with_tags(field: Field, n: usize) -> Echelon {
        let mut e = Echelon::new(field, n);
        e.tags = Some(Vec::new());
        e
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn inserted(&self) -> usize {
        self.inserted
    }

    fn work_from_sparse(&self, v: &[(usize, u32)]) -> Work {
        match &self.store {
            Store::Bits { words, .. } => {
                let mut w = vec![0u64; *words];
                for &(i, x) in v {
                    if x % 2 == 1 {
                        w[i / 64] ^= 1 << (i % 64);
                    }
                }
                Work::Bits(w)
            }
            Store::Bytes { .. } => {
                let mut w = vec![0u8; self.n];
                for &(i, x) in v {
                    w[i] = self.field.add(w[i] as u32, x % self.field.p()) as u8;
                }
                Work::Bytes(w)
            }
        }
    }

    fn work_to_dense(&self, w: &Work) -> Vec<u32> {
        match w {
            Work::Bits(b) => (0..self.n).map(|i| ((b[i / 64] >> (i % 64)) & 1) as u32).collect(),
            Work::Bytes(b) => b.iter().map(|&x| x as u32).collect(),
        }
    }

    /// Reduces `w` against the basis; returns the multipliers used per row.
    fn reduce_work(&self, w: &mut Work, track: bool) -> Vec<(usize, u32)> {
        let mut used = Vec::new();
        match (w, &self.store) {
            (Work::Bits(b), Store::Bits { rows, .. }) => {
                let hits: Vec<usize> = b
                    .iter()
                    .zip(&self.pivot_mask)
                    .enumerate()
                    .flat_map(|(wi, (x, m))| {
                        let mut bits = x & m;
                        let mut out = Vec::new();
                        while bits != 0 {
                            let t = bits.trailing_zeros() as usize;
                            out.push(wi * 64 + t);
                            bits &= bits - 1;
                        }
                        out
                    })
                    .collect();
                for c in hits {
                    let r = self.pivot_row[c];
                    for (x, y) in b.iter_mut().zip(&rows[r]) {
                        *x ^= y;
                    }
                    if track {
                        used.push((r, 1));
                    }
                }
            }
            (Work::Bytes(b), Store::Bytes { rows }) => {
                let f = self.field;
                for (r, &c) in self.pivots.iter().enumerate() {
                    let x = b[c] as u32;
                    if x != 0 {
                        let row = &rows[r];
                        for (bi, &ri) in b.iter_mut().zip(row.iter()) {
                            if ri != 0 {
                                *bi = f.sub(*bi as u32, f.mul(x, ri as u32)) as u8;
                            }
                        }
                        if track {
                            used.push((r, x));
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        used
    }

    fn first_nonzero(w: &Work) -> Option<usize> {
        match w {
            Work::Bits(b) => b.iter().enumerate().find(|e| *e.1 != 0).map(|(i, x)| i * 64 + x.trailing_zeros() as usize),
            Work::Bytes(b) => b.iter().position(|&x| x != 0),
        }
    }

    pub fn insert_dense(&mut self, v: &[u32]) -> bool {
        self.insert_sparse(&dense_to_sparse(v))
    }

    /// Inserts a vector; returns true if it enlarged the span.
    pub fn insert_sparse(&mut self, v: &[(usize, u32)]) -> bool {
        let f = self.field;
        let item = self.inserted;
        self.inserted += 1;
        let mut w = self.work_from_sparse(v);
        let track = self.tags.is_some();
        let used = self.reduce_work(&mut w, track);
        let Some(c) = Echelon::first_nonzero(&w) else {
            return false;
        };
        let mut tag = Vec::new();
        if let Some(tags) = &self.tags {
            tag = vec![0u32; item + 1];
            tag[item] = 1;
            for (r, m) in used {
                for (t, x) in tags[r].iter().enumerate() {
                    tag[t] = f.sub(tag[t], f.mul(m, *x));
                }
            }
        }
        // normalize pivot to 1
        if let Work::Bytes(b) = &mut w {
            let inv = f.inv(b[c] as u32);
            for x in b.iter_mut() {
                *x = f.mul(*x as u32, inv) as u8;
            }
            for x in tag.iter_mut() {
                *x = f.mul(*x, inv);
            }
        }
        // eliminate column c from existing rows
        let newrow = self.rank();
        match (&mut self.store, w) {
            (Store::Bits { rows, .. }, Work::Bits(b)) => {
                for (ri, row) in rows.iter_mut().enumerate() {
                    if (row[c / 64] >> (c % 64)) & 1 == 1 {
                        for (x, y) in row.iter_mut().zip(&b) {
                            *x ^= y;
                        }
                        if let Some(tags) = &mut self.tags {
                            let tr = &mut tags[ri];
                            tr.resize(item + 1, 0);
                            for (t, x) in tag.iter().enumerate() {
                                tr[t] = f.sub(tr[t], *x);
                            }
                        }
                    }
                }
                rows.push(b);
            }
            (Store::Bytes { rows }, Work::Bytes(b)) => {
                for (ri, row) in rows.iter_mut().enumerate() {
                    let x = row[c] as u32;
                    if x != 0 {
                        for (ri2, &bi) in row.iter_mut().zip(b.iter()) {
                            if bi != 0 {
                                *ri2 = f.sub(*ri2 as u32, f.mul(x, bi as u32)) as u8;
                            }
                        }
                        if let Some(tags) = &mut self.tags {
                            let tr = &mut tags[ri];
                            tr.resize(item + 1, 0);
                            for (t, y) in tag.iter().enumerate() {
                                tr[t] = f.sub(tr[t], f.mul(x, *y));
                            }
                        }
                    }
                }
                rows.push(b);
            }
            _ => unreachable!(),
        }
        if let Some(tags) = &mut self.tags {
            tags.push(tag);
        }
        self.pivots.push(c);
        self.pivot_row[c] = newrow;
        self.pivot_mask[c / 64] |= 1 << (c % 64);
        true
    }

    pub fn contains(&self, v: &[(usize, u32)]) -> bool {
        let mut w = self.work_from_sparse(v);
        self.reduce_work(&mut w, false);
        Echelon::first_nonzero(&w).is_none()
    }

    /// Reduces `v`; returns the residual and, when tags are kept, coefficients
    /// `c` with `v = sum_t c[t] * item_t + residual`.
    pub fn reduce(&self, v: &[(usize, u32)]) -> (Vec<u32>, Option<Vec<u32>>) {
        let f = self.field;
        let mut w = self.work_from_sparse(v);
        let used = self.reduce_work(&mut w, self.tags.is_some());
        let coeffs = self.tags.as_ref().map(|tags| {
            let mut c = vec![0u32; self.inserted];
            for (r, m) in used {
                for (t, x) in tags[r].iter().enumerate() {
                    c[t] = f.add(c[t], f.mul(m, *x));
                }
            }
            c
        });
        (self.work_to_dense(&w), coeffs)
    }

    pub fn row_dense(&self, r: usize) -> Vec<u32> {
        match &self.store {
            Store::Bits { rows, .. } => (0..self.n).map(|i| ((rows[r][i / 64] >> (i % 64)) & 1) as u32).collect(),
            Store::Bytes { rows } => rows[r].iter().map(|&x| x as u32).collect(),
        }
    }

    /// Basis rows sorted by pivot column, paired with the pivot.
    pub fn sorted_basis(&self) -> Vec<(usize, Vec<u32>)> {
        let mut idx: Vec<usize> = (0..self.rank()).collect();
        idx.sort_by_key(|&r| self.pivots[r]);
        idx.into_iter().map(|r| (self.pivots[r], self.row_dense(r))).collect()
    }

    /// Null space of the linear functionals given by the basis rows.
    pub fn null_space(&self) -> Vec<Vec<(usize, u32)>> {
        let f = self.field;
        let rows: Vec<(usize, Vec<u32>)> = self.sorted_basis();
        let mut out = Vec::new();
        for free in 0..self.n {
            if self.pivot_row[free] != NONE {
                continue;
            }
            let mut v = vec![(free, 1u32)];
            for (pc, row) in &rows {
                let x = row[free];
                if x != 0 {
                    v.push((*pc, f.neg(x)));
                }
            }
            v.sort_unstable();
            out.push(v);
        }
        out
    }
}

/// Direction of a graded complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Chain,
    Cochain,
}

impl Direction {
    pub fn step(self) -> i64 {
        match self {
            Direction::Chain => -1,
            Direction::Cochain => 1,
        }
    }

    pub fn flip(self) -> Direction {
        match self {
            Direction::Chain => Direction::Cochain,
            Direction::Cochain => Direction::Chain,
        }
    }
}

/// A finite graded complex over F_p stored on an explicit degree window `[lo, hi]`.
/// Differentials are stored between window degrees only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainComplexFp {
    field: Field,
    direction: Direction,
    lo: i64,
    hi: i64,
    basis: Vec<Vec<String>>,
    diffs: Vec<Option<FpMatrix>>,
}

/// Homology of a complex in one degree.
#[derive(Clone, Debug)]
pub struct Homology {
    pub degree: i64,
    pub betti: usize,
    pub cycle_basis: Vec<Vec<(usize, u32)>>,
    pub boundary_basis: Vec<Vec<(usize, u32)>>,
    /// Cycles whose classes form a basis of homology (first-pivot rule).
    pub representatives: Vec<Vec<(usize, u32)>>,
    classifier: Echelon,
    boundary_rank: usize,
}

impl Homology {
    /// Coordinates of the class of `v` in the representative basis.
    pub fn classify(&self, v: &[(usize, u32)]) -> Result<Vec<u32>> {
        let (res, coeffs) = self.classifier.reduce(v);
        if res.iter().any(|&x| x != 0) {
            return Err(LinalgError::NotACycle);
        }
        let c = coeffs.expect("classifier keeps tags");
        Ok(c[self.boundary_rank..self.boundary_rank + self.betti].to_vec())
    }

    pub fn is_boundary(&self, v: &[(usize, u32)]) -> Result<bool> {
        Ok(self.classify(v)?.iter().all(|&x| x == 0))
    }
}

impl ChainComplexFp {
    /// Builds a complex; `diffs` maps a source degree to its outgoing differential.
    pub fn new(
        field: Field,
        direction: Direction,
        lo: i64,
        hi: i64,
        basis: Vec<Vec<String>>,
        mut diffs: BTreeMap<i64, FpMatrix>,
    ) -> Result<ChainComplexFp> {
        if hi < lo {
            return Err(LinalgError::Dimension(format!("empty window [{lo}, {hi}]")));
        }
        let len = (hi - lo + 1) as usize;
        if basis.len() != len {
            return Err(LinalgError::Dimension(format!("{} basis lists for window of length {len}", basis.len())));
        }
        let step = direction.step();
        let mut stored = Vec::with_capacity(len);
        for d in lo..=hi {
            let t = d + step;
            let m = diffs.remove(&d);
            if t < lo || t > hi {
                if m.is_some() {
                    return Err(LinalgError::Dimension(format!("differential from {d} leaves the window")));
                }
                stored.push(None);
                continue;
            }
            let src = basis[(d - lo) as usize].len();
            let tgt = basis[(t - lo) as usize].len();
            let m = m.unwrap_or_else(|| FpMatrix::zero(field, tgt, src));
            if m.p() != field.p() {
                return Err(LinalgError::ModulusMismatch(m.p(), field.p()));
            }
            if m.rows() != tgt || m.cols() != src {
                return Err(LinalgError::Dimension(format!(
                    "differential from degree {d} is {}x{}, expected {tgt}x{src}",
                    m.rows(),
                    m.cols()
                )));
            }
            stored.push(Some(m));
        }
        if let Some((d, _)) = diffs.into_iter().next() {
            return Err(LinalgError::OutOfWindow { degree: d, lo, hi });
        }
        let c = ChainComplexFp { field, direction, lo, hi, basis, diffs: stored };
        c.check_square_zero()?;
        Ok(c)
    }

    fn check_square_zero(&self) -> Result<()> {
        let step = self.direction.step();
        for d in self.lo..=self.hi {
            if let (Some(a), Some(b)) = (self.diff_opt(d), self.diff_opt(d + step)) {
                if !b.compose(a)?.is_zero() {
                    return Err(LinalgError::NotAComplex(d));
                }
            }
        }
        Ok(())
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    fn check(&self, d: i64) -> Result<usize> {
        if d < self.lo || d > self.hi {
            Err(LinalgError::OutOfWindow { degree: d, lo: self.lo, hi: self.hi })
        } else {
            Ok((d - self.lo) as usize)
        }
    }

    pub fn basis(&self, d: i64) -> Result<&[String]> {
        Ok(&self.basis[self.check(d)?])
    }

    pub fn dim(&self, d: i64) -> Result<usize> {
        Ok(self.basis(d)?.len())
    }

    fn diff_opt(&self, d: i64) -> Option<&FpMatrix> {
        if d < self.lo || d > self.hi {
            None
        } else {
            self.diffs[(d - self.lo) as usize].as_ref()
        }
    }

    /// Outgoing differential from degree `d`, if its target is in the window.
    pub fn differential(&self, d: i64) -> Result<&FpMatrix> {
        self.check(d)?;
        let t = d + self.direction.step();
        self.diff_opt(d).ok_or(LinalgError::OutOfWindow { degree: t, lo: self.lo, hi: self.hi })
    }

    pub fn homology(&self, d: i64) -> Result<Homology> {
        let step = self.direction.step();
        let n = self.dim(d)?;
        let out = self.differential(d)?;
        let inc = self.differential(d - step)?;
        let cycles = out.kernel_basis();
        let mut span = Echelon::new(self.field, n);
        let mut boundary_basis = Vec::new();
        for c in 0..inc.cols() {
            let v = inc.column_vec(c);
            if span.insert_sparse(&v) {
                boundary_basis.push(v);
            }
        }
        let mut cls2 = Echelon::with_tags(self.field, n);
        for b in &boundary_basis {
            cls2.insert_sparse(b);
        }
        let boundary_rank = boundary_basis.len();
        let mut reps = Vec::new();
        for z in &cycles {
            if span.insert_sparse(z) {
                cls2.insert_sparse(z);
                reps.push(z.clone());
            }
        }
        Ok(Homology {
            degree: d,
            betti: reps.len(),
            cycle_basis: cycles,
            boundary_basis,
            representatives: reps,
            classifier: cls2,
            boundary_rank,
        })
    }

    pub fn betti(&self, d: i64) -> Result<usize> {
        let step = self.direction.step();
        let n = self.dim(d)?;
        let out = self.differential(d)?;
        let inc = self.differential(d - step)?;
        Ok(n - out.rank() - inc.rank())
    }

    /// Reindexing `(X†)^p = X_{-p}`; flips direction.
    pub fn dagger(&self) -> ChainComplexFp {
        let mut basis = self.basis.clone();
        basis.reverse();
        let mut diffs = self.diffs.clone();
        diffs.reverse();
        ChainComplexFp { field: self.field, direction: self.direction.flip(), lo: -self.hi, hi: -self.lo, basis, diffs }
    }

    /// Linear dual `X^∨ = F(X, k[0])`: degree `d` is the dual of degree `-d`, and
    /// `(∂f) = -(-1)^{|f|} f∘∂`.
    pub fn dualize(&self) -> ChainComplexFp {
        if self.direction == Direction::Cochain {
            return self.dagger().dualize().dagger();
        }
        let mut basis = self.basis.clone();
        basis.reverse();
        let (lo, hi) = (-self.hi, -self.lo);
        let mut diffs = Vec::with_capacity(basis.len());
        for d in lo..=hi {
            let m = self.diff_opt(1 - d).filter(|_| d - 1 >= lo).map(|m| m.transpose().scaled(self.field.sign(d + 1) as i64));
            diffs.push(m);
        }
        ChainComplexFp { field: self.field, direction: Direction::Chain, lo, hi, basis, diffs }
    }

    pub fn shift(&self, k: i64) -> ChainComplexFp {
        ChainComplexFp {
            field: self.field,
            direction: self.direction,
            lo: self.lo + k,
            hi: self.hi + k,
            basis: self.basis.clone(),
            diffs: self.diffs.iter().map(|m| m.as_ref().map(|m| m.scaled(self.field.sign(k) as i64))).collect(),
        }
    }

    pub fn direct_sum(&self, other: &ChainComplexFp) -> Result<ChainComplexFp> {
        if self.direction != other.direction || self.window() != other.window() || self.field != other.field {
            return Err(LinalgError::Dimension("direct sum of incompatible complexes".into()));
        }
        let mut basis = Vec::new();
        let mut diffs = BTreeMap::new();
        for d in self.lo..=self.hi {
            let mut b: Vec<String> = self.basis(d)?.iter().map(|s| format!("L:{s}")).collect();
            b.extend(other.basis(d)?.iter().map(|s| format!("R:{s}")));
            basis.push(b);
        }
        for d in self.lo..=self.hi {
            if let (Some(a), Some(b)) = (self.diff_opt(d), other.diff_opt(d)) {
                let mut cols: Vec<Vec<(usize, u32)>> = (0..a.cols()).map(|c| a.column_vec(c)).collect();
                for c in 0..b.cols() {
                    cols.push(b.column(c).map(|(r, v)| (r + a.rows(), v)).collect());
                }
                diffs.insert(d, FpMatrix::from_columns(self.field, a.rows() + b.rows(), cols));
            }
        }
        ChainComplexFp::new(self.field, self.direction, self.lo, self.hi, basis, diffs)
    }

    /// Sphere complex: one generator in degree `n`, zero elsewhere in the window.
    pub fn sphere(field: Field, direction: Direction, n: i64, lo: i64, hi: i64) -> Result<ChainComplexFp> {
        let basis = (lo..=hi).map(|d| if d == n { vec![format!("s{n}")] } else { vec![] }).collect();
        ChainComplexFp::new(field, direction, lo, hi, basis, BTreeMap::new())
    }

    /// Disk complex: generators in degrees `n-1` and `n` joined by the identity
    /// (for cochains, in degrees `n` and `n+1`... mirrored via the step).
    pub fn disk(field: Field, direction: Direction, n: i64, lo: i64, hi: i64) -> Result<ChainComplexFp> {
        let top = n;
        let bottom = n + direction.step();
        let basis = (lo..=hi)
            .map(|d| {
                if d == top {
                    vec![format!("d{n}")]
                } else if d == bottom {
                    vec![format!("b{n}")]
                } else {
                    vec![]
                }
            })
            .collect();
        let mut diffs = BTreeMap::new();
        if (lo..=hi).contains(&top) && (lo..=hi).contains(&bottom) {
            diffs.insert(top, FpMatrix::identity(field, 1));
        }
        ChainComplexFp::new(field, direction, lo, hi, basis, diffs)
    }

    pub fn to_json(&self) -> ComplexJson {
        ComplexJson {
            p: self.field.p(),
            direction: self.direction,
            lo: self.lo,
            hi: self.hi,
            basis: self.basis.clone(),
            differentials: (self.lo..=self.hi)
                .filter_map(|d| self.diff_opt(d).map(|m| DiffJson { from: d, matrix: m.to_json() }))
                .collect(),
        }
    }

    pub fn from_json(j: &ComplexJson) -> Result<ChainComplexFp> {
        let field = Field::new(j.p)?;
        let mut diffs = BTreeMap::new();
        for dj in &j.differentials {
            diffs.insert(dj.from, FpMatrix::from_json(&dj.matrix)?);
        }
        ChainComplexFp::new(field, j.direction, j.lo, j.hi, j.basis.clone(), diffs)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffJson {
    pub from: i64,
    pub matrix: MatrixJson,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexJson {
    pub p: u32,
    pub direction: Direction,
    pub lo: i64,
    pub hi: i64,
    pub basis: Vec<Vec<String>>,
    pub differentials: Vec<DiffJson>,
}

/// A quotient complex `X / R` for a subcomplex `R` given by spanning vectors.
#[derive(Clone, Debug)]
pub struct Quotient {
    pub complex: ChainComplexFp,
    /// Original basis indices kept as quotient basis, per window degree.
    pub kept: Vec<Vec<usize>>,
    relations: Vec<Echelon>,
    lo: i64,
}

impl Quotient {
    /// Image of a vector of the original complex in quotient coordinates.
    pub fn project(&self, d: i64, v: &[(usize, u32)]) -> Result<Vec<(usize, u32)>> {
        let i = (d - self.lo) as usize;
        if i >= self.kept.len() || d < self.lo {
            return Err(LinalgError::OutOfWindow { degree: d, lo: self.lo, hi: self.lo + self.kept.len() as i64 - 1 });
        }
        let (res, _) = self.relations[i].reduce(v);
        Ok(self.kept[i].iter().enumerate().filter(|(_, &k)| res[k] != 0).map(|(j, &k)| (j, res[k])).collect())
    }
}

impl ChainComplexFp {
    /// Quotient by the span of `relations[d]` in each degree; the span must be a subcomplex.
    pub fn quotient(&self, relations: &BTreeMap<i64, Vec<Vec<(usize, u32)>>>) -> Result<Quotient> {
        let mut echs = Vec::new();
        let mut kept = Vec::new();
        for d in self.lo..=self.hi {
            let mut e = Echelon::new(self.field, self.dim(d)?);
            if let Some(rs) = relations.get(&d) {
                for r in rs {
                    e.insert_sparse(r);
                }
            }
            kept.push((0..self.dim(d)?).filter(|&c| e.pivot_row[c] == NONE).collect::<Vec<_>>());
            echs.push(e);
        }
        let basis: Vec<Vec<String>> = (self.lo..=self.hi)
            .map(|d| {
                let b = &self.basis[(d - self.lo) as usize];
                kept[(d - self.lo) as usize].iter().map(|&k| b[k].clone()).collect()
            })
            .collect();
        let mut q = Quotient {
            complex: ChainComplexFp::sphere(self.field, self.direction, self.lo, self.lo, self.hi)?,
            kept,
            relations: echs,
            lo: self.lo,
        };
        let step = self.direction.step();
        let mut diffs = BTreeMap::new();
        for d in self.lo..=self.hi {
            if let Some(m) = self.diff_opt(d) {
                let i = (d - self.lo) as usize;
                let mut cols = Vec::new();
                for &k in &q.kept[i] {
                    cols.push(q.project(d + step, &m.column_vec(k))?);
                }
                diffs.insert(d, FpMatrix::from_columns(self.field, q.kept[(d + step - self.lo) as usize].len(), cols));
            }
        }
        for (d, rs) in relations {
            if let Ok(m) = self.differential(*d) {
                for r in rs {
                    if !q.project(d + step, &m.apply_sparse(r))?.is_empty() {
                        return Err(LinalgError::Dimension(format!("relations in degree {d} do not span a subcomplex")));
                    }
                }
            }
        }
        q.complex = ChainComplexFp::new(self.field, self.direction, self.lo, self.hi, basis, diffs)?;
        Ok(q)
    }
}

/// A complex whose basis is indexed by keys of type `K`.
#[derive(Clone, Debug)]
pub struct KeyedComplex<K: Ord + Clone> {
    pub complex: ChainComplexFp,
    pub keys: Vec<Vec<K>>,
    index: Vec<BTreeMap<K, usize>>,
}

impl<K: Ord + Clone + fmt::Display> KeyedComplex<K> {
    /// Builds the complex spanned by `keys[d - lo]` with differential `diff` extended linearly.
    pub fn build(
        field: Field,
        direction: Direction,
        lo: i64,
        keys: Vec<Vec<K>>,
        mut diff: impl FnMut(&K) -> LinComb<K>,
    ) -> Result<KeyedComplex<K>> {
        let hi = lo + keys.len() as i64 - 1;
        let index: Vec<BTreeMap<K, usize>> = keys.iter().map(|ks| ks.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect()).collect();
        let basis = keys.iter().map(|ks| ks.iter().map(|k| k.to_string()).collect()).collect();
        let mut diffs = BTreeMap::new();
        let step = direction.step();
        for d in lo..=hi {
            let t = d + step;
            if t < lo || t > hi {
                continue;
            }
            let tix = &index[(t - lo) as usize];
            let mut cols = Vec::new();
            for k in &keys[(d - lo) as usize] {
                let img = diff(k);
                let mut col = Vec::with_capacity(img.len());
                for (key, c) in &img.terms {
                    let i = tix.get(key).ok_or_else(|| LinalgError::Malformed(format!("differential of {k} leaves the basis")))?;
                    col.push((*i, *c));
                }
                col.sort_unstable();
                cols.push(col);
            }
            diffs.insert(d, FpMatrix::from_columns(field, tix.len(), cols));
        }
        let complex = ChainComplexFp::new(field, direction, lo, hi, basis, diffs)?;
        Ok(KeyedComplex { complex, keys, index })
    }

    pub fn index_of(&self, d: i64, k: &K) -> Option<usize> {
        let (lo, hi) = self.complex.window();
        if d < lo || d > hi {
            return None;
        }
        self.index[(d - lo) as usize].get(k).copied()
    }

    pub fn to_vector(&self, d: i64, e: &LinComb<K>) -> Result<Vec<(usize, u32)>> {
        let mut v = Vec::with_capacity(e.len());
        for (k, c) in &e.terms {
            let i = self.index_of(d, k).ok_or_else(|| LinalgError::Malformed(format!("{k} is not a basis key in degree {d}")))?;
            v.push((i, *c));
        }
        v.sort_unstable();
        Ok(v)
    }

    pub fn from_vector(&self, d: i64, v: &[(usize, u32)]) -> Result<LinComb<K>> {
        let (lo, _) = self.complex.window();
        self.complex.check(d)?;
        let ks = &self.keys[(d - lo) as usize];
        let mut out = LinComb::zero(self.complex.field());
        for &(i, c) in v {
            out.add_term(ks[i].clone(), c as i64);
        }
        Ok(out)
    }
}
