//! The algebra B of generalized Steenrod operations, its completion B̂ on finite
//! windows, and the Steenrod algebra A.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::fplinalg::{Echelon, Field, LinComb};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SteenrodError {
    #[error("cannot parse monomial {0:?}")]
    Parse(String),
    #[error("moduli differ: {0} vs {1}")]
    Modulus(u32, u32),
    #[error("window too narrow: need excess ceilings ({first}, {second}), have ({have_first}, {have_second})")]
    Window { first: i64, second: i64, have_first: i64, have_second: i64 },
    #[error("excess ceiling {have} too low for the projection; need at least {need}")]
    Projection { need: i64, have: i64 },
    #[error("action table lacks {0}")]
    Incomplete(String),
    #[error("Bockstein letters need an odd prime")]
    BocksteinAtTwo,
}

pub type Result<T> = std::result::Result<T, SteenrodError>;

/// `β^ε P^i` as the pair `(ε, i)`; at p = 2 every ε is 0.
pub type Letter = (u8, i64);

/// A multi-index, read as the monomial `P^I`. The empty monomial is the unit.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Mono(pub Vec<Letter>);

impl Mono {
    pub fn unit() -> Mono {
        Mono(Vec::new())
    }

    pub fn from_entries(entries: &[i64]) -> Mono {
        Mono(entries.iter().map(|&i| (0, i)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first_entry(&self) -> Option<i64> {
        self.0.first().map(|l| l.1)
    }

    pub fn last_entry(&self) -> Option<i64> {
        self.0.last().map(|l| l.1)
    }

    pub fn has_negative(&self) -> bool {
        self.0.iter().any(|l| l.1 < 0)
    }

    pub fn concat(&self, other: &Mono) -> Mono {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Mono(v)
    }

    pub fn parse(s: &str) -> Result<Mono> {
        let mut out = Vec::new();
        for tok in s.split_whitespace() {
            let (eps, rest) = match tok.strip_prefix('b') {
                Some(r) => (1, r),
                None => (0, tok),
            };
            let n = rest.strip_prefix("P^").ok_or_else(|| SteenrodError::Parse(s.to_string()))?;
            let i: i64 = n.parse().map_err(|_| SteenrodError::Parse(s.to_string()))?;
            out.push((eps, i));
        }
        Ok(Mono(out))
    }
}

impl fmt::Display for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.0.iter().map(|&(e, i)| format!("{}P^{i}", if e == 1 { "b" } else { "" })).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Degree of a letter: `i` at p = 2, `2i(p−1)+ε` otherwise.
pub fn letter_degree(p: u32, l: Letter) -> i64 {
    if p == 2 {
        l.1
    } else {
        2 * l.1 * (p as i64 - 1) + l.0 as i64
    }
}

pub fn degree(p: u32, m: &Mono) -> i64 {
    m.0.iter().map(|&l| letter_degree(p, l)).sum()
}

/// Excess; `None` stands for −∞ (the empty monomial).
pub fn excess(p: u32, m: &Mono) -> Option<i64> {
    let (&first, rest) = m.0.split_first()?;
    let lead = if p == 2 { first.1 } else { 2 * first.1 + first.0 as i64 };
    Some(lead - rest.iter().map(|&l| letter_degree(p, l)).sum::<i64>())
}

fn pair_admissible(p: u32, a: Letter, b: Letter) -> bool {
    if p == 2 {
        a.1 >= 2 * b.1
    } else {
        a.1 >= p as i64 * b.1 + b.0 as i64
    }
}

pub fn is_admissible(p: u32, m: &Mono) -> bool {
    m.0.windows(2).all(|w| pair_admissible(p, w[0], w[1]))
}

/// Binomial coefficient mod p for any integer top argument, via Lucas' theorem;
/// `binom(n, k) = (−1)^k binom(k−n−1, k)` for `n < 0`.
pub fn binom_mod(p: u32, n: i64, k: i64) -> u32 {
    if k < 0 {
        return 0;
    }
    if n < 0 {
        let b = binom_mod(p, k - n - 1, k);
        return if k % 2 == 1 { (p - b) % p } else { b };
    }
    if k > n {
        return 0;
    }
    let p64 = p as i64;
    let (mut n, mut k) = (n, k);
    let mut acc = 1u64;
    while k > 0 || n > 0 {
        let (a, b) = (n % p64, k % p64);
        if b > a {
            return 0;
        }
        acc = acc * small_binom(a as u64, b as u64, p as u64) % p as u64;
        n /= p64;
        k /= p64;
    }
    acc as u32
}

fn small_binom(n: u64, k: u64, p: u64) -> u64 {
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num = num * ((n - i) % p) % p;
        den = den * ((i + 1) % p) % p;
    }
    let f = Field::new(p as u32).expect("prime");
    num * f.inv(den as u32) as u64 % p
}

/// One Adem rewrite of the non-admissible pair `a b`, as signed letter pairs.
/// `nonneg` restricts the sum to `i ≥ 0` (the relations in A).
fn adem_pair(p: u32, a: Letter, b: Letter, nonneg: bool) -> Vec<(i64, Letter, Letter)> {
    let (r, s) = (a.1, b.1);
    let mut out = Vec::new();
    if p == 2 {
        let lo = if nonneg { (r - s + 1).max(0) } else { r - s + 1 };
        for i in lo..=r.div_euclid(2) {
            let c = binom_mod(2, s - i - 1, r - 2 * i);
            if c != 0 {
                out.push((c as i64, (0, r + s - i), (0, i)));
            }
        }
        return out;
    }
    let pp = p as i64;
    let q = pp - 1;
    let hi = r.div_euclid(pp);
    let lo = if nonneg { (r - q * s).max(0) - 1 } else { r - q * s - 1 };
    let sgn = |i: i64| if (r + i).rem_euclid(2) == 0 { 1 } else { -1 };
    for i in lo.min(hi)..=hi {
        match (a.0, b.0) {
            (e, 0) => {
                let c = binom_mod(p, q * (s - i) - 1, r - pp * i) as i64;
                if c != 0 {
                    out.push((sgn(i) * c, (e, r + s - i), (0, i)));
                }
            }
            (0, 1) => {
                let c1 = binom_mod(p, q * (s - i), r - pp * i) as i64;
                if c1 != 0 {
                    out.push((sgn(i) * c1, (1, r + s - i), (0, i)));
                }
                let c2 = binom_mod(p, q * (s - i) - 1, r - pp * i - 1) as i64;
                if c2 != 0 {
                    out.push((-sgn(i) * c2, (0, r + s - i), (1, i)));
                }
            }
            _ => {
                // β applied to the mixed relation: the sign is (−1)^{r+i+1}
                let c = binom_mod(p, q * (s - i) - 1, r - pp * i - 1) as i64;
                if c != 0 {
                    out.push((-sgn(i) * c, (1, r + s - i), (1, i)));
                }
            }
        }
    }
    if nonneg {
        out.retain(|t| t.2 .1 >= 0);
    }
    out
}

/// The Adem rewriting engine for B over a fixed prime, with a memo table.
pub struct Adem {
    field: Field,
    memo: RefCell<HashMap<Mono, LinComb<Mono>>>,
}

impl Adem {
    pub fn new(field: Field) -> Adem {
        Adem { field, memo: RefCell::new(HashMap::new()) }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn p(&self) -> u32 {
        self.field.p()
    }

    fn check_letters(&self, m: &Mono) -> Result<()> {
        if self.p() == 2 && m.0.iter().any(|l| l.0 != 0) {
            return Err(SteenrodError::BocksteinAtTwo);
        }
        Ok(())
    }

    /// Admissible monomials expansion of `P^I`.
    pub fn expand(&self, m: &Mono) -> LinComb<Mono> {
        if let Some(v) = self.memo.borrow().get(m) {
            return v.clone();
        }
        let p = self.p();
        let out = match (0..m.len().saturating_sub(1)).find(|&j| !pair_admissible(p, m.0[j], m.0[j + 1])) {
            None => LinComb::single(self.field, m.clone(), 1),
            Some(j) => {
                let mut acc = LinComb::zero(self.field);
                for (c, x, y) in adem_pair(p, m.0[j], m.0[j + 1], false) {
                    let mut w = m.0[..j].to_vec();
                    w.push(x);
                    w.push(y);
                    w.extend_from_slice(&m.0[j + 2..]);
                    acc.add_scaled(&self.expand(&Mono(w)), self.field.reduce(c));
                }
                acc
            }
        };
        self.memo.borrow_mut().insert(m.clone(), out.clone());
        out
    }

    pub fn expand_checked(&self, m: &Mono) -> Result<LinComb<Mono>> {
        self.check_letters(m)?;
        Ok(self.expand(m))
    }

    /// Expansion rewriting a randomly chosen non-admissible pair at every step, without memo.
    pub fn expand_random(&self, m: &Mono, rng: &mut impl Rng) -> LinComb<Mono> {
        let p = self.p();
        let bad: Vec<usize> = (0..m.len().saturating_sub(1)).filter(|&j| !pair_admissible(p, m.0[j], m.0[j + 1])).collect();
        if bad.is_empty() {
            return LinComb::single(self.field, m.clone(), 1);
        }
        let j = bad[rng.gen_range(0..bad.len())];
        let mut acc = LinComb::zero(self.field);
        for (c, x, y) in adem_pair(p, m.0[j], m.0[j + 1], false) {
            let mut w = m.0[..j].to_vec();
            w.push(x);
            w.push(y);
            w.extend_from_slice(&m.0[j + 2..]);
            acc.add_scaled(&self.expand_random(&Mono(w), rng), self.field.reduce(c));
        }
        acc
    }

    pub fn expand_sum(&self, a: &LinComb<Mono>) -> LinComb<Mono> {
        let mut acc = LinComb::zero(self.field);
        for (m, c) in &a.terms {
            acc.add_scaled(&self.expand(m), *c);
        }
        acc
    }

    /// Product in B: concatenate, then expand.
    pub fn multiply(&self, a: &LinComb<Mono>, b: &LinComb<Mono>) -> LinComb<Mono> {
        let f = self.field;
        let mut acc = LinComb::zero(f);
        for (x, cx) in &a.terms {
            for (y, cy) in &b.terms {
                acc.add_scaled(&self.expand(&x.concat(y)), f.mul(*cx, *cy));
            }
        }
        acc
    }

    /// Normal form in the Steenrod algebra A, where `P^0 = 1` and `β² = 0`.
    pub fn expand_a(&self, m: &Mono) -> LinComb<Mono> {
        let p = self.p();
        let f = self.field;
        if m.0.iter().any(|l| l.1 < 0) {
            return LinComb::zero(f);
        }
        let Some(w) = normalize_a(m) else { return LinComb::zero(f) };
        match (0..w.len().saturating_sub(1)).find(|&j| !pair_admissible(p, w.0[j], w.0[j + 1])) {
            None => LinComb::single(f, w, 1),
            Some(j) => {
                let mut acc = LinComb::zero(f);
                for (c, x, y) in adem_pair(p, w.0[j], w.0[j + 1], true) {
                    let mut v = w.0[..j].to_vec();
                    v.push(x);
                    v.push(y);
                    v.extend_from_slice(&w.0[j + 2..]);
                    acc.add_scaled(&self.expand_a(&Mono(v)), f.reduce(c));
                }
                acc
            }
        }
    }

    pub fn multiply_a(&self, a: &LinComb<Mono>, b: &LinComb<Mono>) -> LinComb<Mono> {
        let f = self.field;
        let mut acc = LinComb::zero(f);
        for (x, cx) in &a.terms {
            for (y, cy) in &b.terms {
                acc.add_scaled(&self.expand_a(&x.concat(y)), f.mul(*cx, *cy));
            }
        }
        acc
    }

    /// `B̂ → A`: keep the monomials with no negative entry, read them in A.
    pub fn project_to_a(&self, a: &LinComb<Mono>) -> LinComb<Mono> {
        let mut acc = LinComb::zero(self.field);
        for (m, c) in &self.expand_sum(a).terms {
            if !m.has_negative() {
                acc.add_scaled(&self.expand_a(m), *c);
            }
        }
        acc
    }
}

/// Drops `P^0` letters and merges a freed β into the next letter; `None` if `β²` appears.
fn normalize_a(m: &Mono) -> Option<Mono> {
    let mut out: Vec<Letter> = Vec::new();
    let mut pending_beta = false;
    for &(e, i) in &m.0 {
        if i == 0 {
            if e == 1 {
                if pending_beta {
                    return None;
                }
                pending_beta = true;
            }
            continue;
        }
        if pending_beta {
            if e == 1 {
                return None;
            }
            out.push((1, i));
            pending_beta = false;
        } else {
            out.push((e, i));
        }
    }
    if pending_beta {
        out.push((1, 0));
    }
    Some(Mono(out))
}

fn unit_of(p: u32) -> i64 {
    if p == 2 {
        1
    } else {
        2 * (p as i64 - 1)
    }
}

/// Admissible monomials of degree `d` and length exactly `len` whose first entry is at most `upper`.
fn admissible_tails(p: u32, d: i64, len: usize, upper: i64, out: &mut Vec<Mono>, cur: &mut Vec<Letter>) {
    if len == 0 {
        if d == 0 {
            out.push(Mono(cur.clone()));
        }
        return;
    }
    let u = unit_of(p);
    let eps_max = if p == 2 { 0 } else { 1 };
    let pf = p as f64;
    let c: f64 = (0..len).map(|j| pf.powi(-(j as i32))).sum();
    let slack = if p == 2 { 0 } else { len as i64 };
    let lower = (((d - slack) as f64) / (u as f64 * c)).floor() as i64 - 1;
    for i in lower..=upper {
        for e in 0..=eps_max {
            if let Some(&prev) = cur.last() {
                if !pair_admissible(p, prev, (e, i)) {
                    continue;
                }
            }
            let ld = letter_degree(p, (e, i));
            cur.push((e, i));
            let next_upper = if p == 2 { i.div_euclid(2) } else { i.div_euclid(p as i64) };
            admissible_tails(p, d - ld, len - 1, next_upper, out, cur);
            cur.pop();
        }
    }
}

/// Admissible monomials of degree `d`, length at most `max_len`, excess at most `k`.
pub fn basis_bk(p: u32, k: i64, d: i64, max_len: usize) -> Vec<Mono> {
    let mut out = Vec::new();
    if d == 0 {
        out.push(Mono::unit());
    }
    for len in 1..=max_len {
        // e(I) = 2p·i_1 + 2ε_1 − d bounds the first entry from above
        let upper = if p == 2 { (k + d).div_euclid(2) } else { (k + d).div_euclid(2 * p as i64) };
        let mut found = Vec::new();
        admissible_tails(p, d, len, upper, &mut found, &mut Vec::new());
        found.retain(|m| excess(p, m).is_none_or(|e| e <= k));
        out.extend(found);
    }
    out.sort();
    out
}

/// Cartan–Serre basis of A in degree `d` with at most `max_len` letters.
pub fn basis_a(p: u32, d: i64, max_len: usize) -> Vec<Mono> {
    if d < 0 {
        return Vec::new();
    }
    // positive admissible words, plus a trailing bare β at odd p
    let mut out: Vec<Mono> = basis_bk(p, d, d, max_len).into_iter().filter(|m| m.0.iter().all(|l| l.1 > 0)).collect();
    if p != 2 && d >= 1 {
        for mut m in basis_bk(p, d, d - 1, max_len.saturating_sub(1)) {
            if m.0.iter().all(|l| l.1 > 0) {
                m.0.push((1, 0));
                out.push(m);
            }
        }
    }
    out.sort();
    out
}

/// A finite window of an element of B̂: the terms of excess below `ceiling` with `p^{l(I)} ≤ t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BHatWindow {
    pub p: u32,
    pub degree: i64,
    pub ceiling: i64,
    pub t: u64,
    pub terms: LinComb<Mono>,
}

pub fn max_len_for(p: u32, t: u64) -> usize {
    let mut l = 0;
    let mut q = p as u64;
    while q <= t {
        l += 1;
        q = q.saturating_mul(p as u64);
    }
    l
}

impl BHatWindow {
    /// Restricts an admissible sum to the window, dropping terms outside it.
    pub fn new(field: Field, degree: i64, ceiling: i64, t: u64, sum: &LinComb<Mono>) -> BHatWindow {
        let p = field.p();
        let maxl = max_len_for(p, t);
        let terms = sum.map_keys(|m| {
            let ok = self::degree(p, m) == degree && m.len() <= maxl && excess(p, m).is_none_or(|e| e < ceiling);
            ok.then(|| (m.clone(), 1))
        });
        BHatWindow { p, degree, ceiling, t, terms }
    }

    /// The window of `Σ_{k≥0} P^k P^{−k}`.
    pub fn sum_pk_pmk(field: Field, ceiling: i64) -> BHatWindow {
        let p = field.p();
        let mut sum = LinComb::zero(field);
        let mut k = 0;
        loop {
            let m = Mono::from_entries(&[k, -k]);
            if excess(p, &m).unwrap() >= ceiling {
                break;
            }
            sum.add_term(m, 1);
            k += 1;
        }
        BHatWindow::new(field, 0, ceiling, (p * p) as u64, &sum)
    }

    pub fn restrict(&self, field: Field, ceiling: i64) -> BHatWindow {
        BHatWindow::new(field, self.degree, ceiling.min(self.ceiling), self.t, &self.terms)
    }
}

/// Product of windows, exact for output excess below `k0`.
pub fn bhat_multiply(adem: &Adem, a: &BHatWindow, b: &BHatWindow, k0: i64) -> Result<BHatWindow> {
    if a.p != b.p || a.p != adem.p() {
        return Err(SteenrodError::Modulus(a.p, b.p));
    }
    let need_a = k0 + b.degree;
    if a.ceiling < need_a || b.ceiling < k0 {
        return Err(SteenrodError::Window { first: need_a, second: k0, have_first: a.ceiling, have_second: b.ceiling });
    }
    let prod = adem.multiply(&a.terms, &b.terms);
    let t = a.t.saturating_mul(b.t);
    Ok(BHatWindow::new(adem.field(), a.degree + b.degree, k0, t, &prod))
}

/// Smallest ceiling that keeps every non-negative admissible term of degree `d` and length ≤ `max_len`.
pub fn projection_ceiling(p: u32, d: i64, max_len: usize) -> i64 {
    if d < 0 {
        return i64::MIN;
    }
    basis_bk(p, d.max(0) * 2 + 2, d, max_len)
        .iter()
        .filter(|m| !m.has_negative())
        .filter_map(|m| excess(p, m))
        .max()
        .map_or(i64::MIN, |e| e + 1)
}

pub fn project_window(adem: &Adem, w: &BHatWindow) -> Result<LinComb<Mono>> {
    let need = projection_ceiling(w.p, w.degree, max_len_for(w.p, w.t));
    if w.ceiling < need {
        return Err(SteenrodError::Projection { need, have: w.ceiling });
    }
    Ok(adem.project_to_a(&w.terms))
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ExcessViolation {
    pub input: String,
    pub output: String,
    pub rule: String,
}

/// Checks the first-entry, final-entry and excess lemmas on the expansions of the given words,
/// and the product lemmas on the given admissible pairs.
pub fn excess_lemmas_check(adem: &Adem, words: &[Mono], pairs: &[(Mono, Mono)]) -> Vec<ExcessViolation> {
    let p = adem.p();
    let mut bad = Vec::new();
    let mut flag =
        |i: &Mono, k: &Mono, rule: &str| bad.push(ExcessViolation { input: i.to_string(), output: k.to_string(), rule: rule.to_string() });
    for w in words {
        for k in adem.expand(w).terms.keys() {
            if k.len() != w.len() {
                flag(w, k, "length");
            }
            if degree(p, k) != degree(p, w) {
                flag(w, k, "degree");
            }
            if !w.is_empty() {
                if k.first_entry() < w.first_entry() {
                    flag(w, k, "first entry");
                }
                if k.last_entry() > w.last_entry() {
                    flag(w, k, "final entry");
                }
                if excess(p, k) < excess(p, w) {
                    flag(w, k, "excess");
                }
            }
        }
    }
    for (i, j) in pairs {
        let neg = i.has_negative() || j.has_negative();
        for k in adem.expand(&i.concat(j)).terms.keys() {
            if excess(p, k) < excess(p, j) {
                flag(&i.concat(j), k, "excess of right factor");
            }
            if neg && k.last_entry().is_none_or(|e| e >= 0) {
                flag(&i.concat(j), k, "negative final entry");
            }
        }
    }
    bad
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ExactnessReport {
    pub p: u32,
    pub degree: i64,
    pub ceiling: i64,
    pub max_len: usize,
    pub domain_dim: usize,
    pub image_rank: usize,
    pub middle_dim: usize,
    pub kernel_dim: usize,
    pub a_dim: usize,
    pub projection_rank: usize,
    pub composite_zero: bool,
    /// `dim(im ∩ F_{L+1})` for the domain of length `max_len + closing_length`.
    pub image_in_middle: usize,
    /// Extra domain length needed before every kernel element of the middle term is hit.
    pub closing_length: Option<usize>,
}

/// `0 → F B_{≤K} → F B_{≤K} → F A_{≤K} → 0` with right multiplication by `1 − P^0`.
pub fn exactness_check(adem: &Adem, d: i64, ceiling: i64, max_len: usize) -> ExactnessReport {
    let p = adem.p();
    let f = adem.field();
    let one_minus = {
        let mut s = LinComb::single(f, Mono::unit(), 1);
        s.add_term(Mono::from_entries(&[0]), -1);
        s
    };
    let keep = |s: &LinComb<Mono>| s.map_keys(|m| excess(p, m).is_none_or(|e| e <= ceiling).then(|| (m.clone(), 1)));
    let image_of = |len: usize| -> Vec<LinComb<Mono>> {
        basis_bk(p, ceiling, d, len).into_iter().map(|m| keep(&adem.multiply(&LinComb::single(f, m, 1), &one_minus))).collect()
    };
    let domain = basis_bk(p, ceiling, d, max_len);
    let middle = basis_bk(p, ceiling, d, max_len + 1);
    let a_basis: Vec<Mono> = basis_a(p, d, max_len + 1).into_iter().filter(|m| excess(p, m).is_none_or(|e| e <= ceiling)).collect();
    let mid_ix: std::collections::BTreeMap<&Mono, usize> = middle.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let a_ix: std::collections::BTreeMap<&Mono, usize> = a_basis.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let to_mid = |s: &LinComb<Mono>| -> Vec<(usize, u32)> {
        let mut v: Vec<(usize, u32)> = s.terms.iter().filter_map(|(m, c)| mid_ix.get(m).map(|&i| (i, *c))).collect();
        v.sort_unstable();
        v
    };
    let images = image_of(max_len);
    let mut img = Echelon::new(f, middle.len());
    let mut composite_zero = true;
    for s in &images {
        img.insert_sparse(&to_mid(s));
        if !adem.project_to_a(s).is_zero() {
            composite_zero = false;
        }
    }
    // projection matrix columns and its kernel
    let mut proj_cols = Vec::new();
    for m in &middle {
        let pr = adem.project_to_a(&LinComb::single(f, m.clone(), 1));
        let mut v: Vec<(usize, u32)> = pr
            .terms
            .iter()
            .filter_map(|(k, c)| {
                let k = if excess(p, k).is_none_or(|e| e <= ceiling) { a_ix.get(k) } else { None };
                k.map(|&i| (i, *c))
            })
            .collect();
        v.sort_unstable();
        proj_cols.push(v);
    }
    let proj = crate::fplinalg::FpMatrix::from_columns(f, a_basis.len(), proj_cols);
    let kernel = proj.kernel_basis();
    let projection_rank = proj.rank();
    let mut closing = None;
    let mut image_in_middle = 0;
    for extra in 0..=3usize {
        let imgs = image_of(max_len + extra);
        let big = basis_bk(p, ceiling, d, max_len + extra + 1);
        let big_ix: std::collections::BTreeMap<&Mono, usize> = big.iter().enumerate().map(|(i, m)| (m, i)).collect();
        let mut ech = Echelon::new(f, big.len());
        for s in &imgs {
            let mut v: Vec<(usize, u32)> = s.terms.iter().map(|(m, c)| (big_ix[m], *c)).collect();
            v.sort_unstable();
            ech.insert_sparse(&v);
        }
        // dim(im ∩ F_{L+1}) = rank(im) + dim F_{L+1} − rank(im + F_{L+1})
        let mut both = ech.clone();
        for m in &middle {
            both.insert_sparse(&[(big_ix[m], 1)]);
        }
        image_in_middle = ech.rank() + middle.len() - both.rank();
        if image_in_middle == kernel.len() {
            closing = Some(extra);
            break;
        }
    }
    ExactnessReport {
        p,
        degree: d,
        ceiling,
        max_len,
        domain_dim: domain.len(),
        image_rank: img.rank(),
        middle_dim: middle.len(),
        kernel_dim: kernel.len(),
        a_dim: a_basis.len(),
        projection_rank,
        composite_zero,
        image_in_middle,
        closing_length: closing,
    }
}

/// A finite unstable module given by an action table on letters.
#[derive(Clone, Debug)]
pub struct ActionTable {
    pub field: Field,
    pub labels: Vec<String>,
    pub degrees: Vec<i64>,
    /// `(letter, basis index) → image`, for letters with entries in `[min_entry, max_entry]`.
    pub table: HashMap<(Letter, usize), Vec<(usize, u32)>>,
    pub min_entry: i64,
    pub max_entry: i64,
}

impl ActionTable {
    /// `H^•(RP^n; F_2)` with `P^i x^k = binom(k, i) x^{k+i}`, `P^i = 0` for `i < 0`.
    pub fn rp(n: usize, min_entry: i64, max_entry: i64) -> ActionTable {
        let field = Field::new(2).expect("prime");
        let labels: Vec<String> = (1..=n).map(|k| format!("x^{k}")).collect();
        let degrees: Vec<i64> = (1..=n as i64).collect();
        let mut table = HashMap::new();
        for (b, &k) in degrees.iter().enumerate() {
            for i in min_entry..=max_entry {
                let img = if i < 0 || k + i > n as i64 || binom_mod(2, k, i) == 0 { vec![] } else { vec![((k + i - 1) as usize, 1)] };
                table.insert(((0, i), b), img);
            }
        }
        ActionTable { field, labels, degrees, table, min_entry, max_entry }
    }

    fn act_letter(&self, l: Letter, v: &[(usize, u32)]) -> Result<Vec<(usize, u32)>> {
        let f = self.field;
        let mut acc = std::collections::BTreeMap::new();
        for &(b, c) in v {
            let img =
                self.table.get(&(l, b)).ok_or_else(|| SteenrodError::Incomplete(format!("{} on {}", Mono(vec![l]), self.labels[b])))?;
            for &(t, x) in img {
                let e = acc.entry(t).or_insert(0u32);
                *e = f.add(*e, f.mul(c, x));
            }
        }
        Ok(acc.into_iter().filter(|&(_, x)| x != 0).collect())
    }

    pub fn act_mono(&self, m: &Mono, v: &[(usize, u32)]) -> Result<Vec<(usize, u32)>> {
        let mut cur = v.to_vec();
        for &l in m.0.iter().rev() {
            cur = self.act_letter(l, &cur)?;
        }
        Ok(cur)
    }

    /// Action of a window on a homogeneous basis element: only terms with `e(I) ≤ |x|` are used.
    pub fn unstable_extension_act(&self, w: &BHatWindow, x: usize) -> Result<Vec<(usize, u32)>> {
        let f = self.field;
        let dx = self.degrees[x];
        if w.ceiling <= dx {
            return Err(SteenrodError::Window { first: dx + 1, second: dx + 1, have_first: w.ceiling, have_second: w.ceiling });
        }
        let mut acc = std::collections::BTreeMap::new();
        for (m, c) in &w.terms.terms {
            if excess(w.p, m).is_some_and(|e| e > dx) {
                continue;
            }
            for (t, y) in self.act_mono(m, &[(x, 1)])? {
                let e = acc.entry(t).or_insert(0u32);
                *e = f.add(*e, f.mul(*c, y));
            }
        }
        Ok(acc.into_iter().filter(|&(_, v)| v != 0).collect())
    }
}
