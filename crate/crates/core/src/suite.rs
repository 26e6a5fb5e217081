//! The acceptance battery: criteria 1 to 16 as library jobs, plus the determinism rerun (17).

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::actions::*;
use crate::fplinalg::{Echelon, Field, LinComb};
use crate::operads::*;
use crate::simplicial::*;
use crate::spectra::*;
use crate::stabilization::*;
use crate::steenrod::*;

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_SEED: u64 = 20240917;

type Outcome = std::result::Result<Value, Box<dyn std::error::Error + Send + Sync>>;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CriterionReport {
    pub id: usize,
    pub name: String,
    pub pass: bool,
    pub checks: u64,
    pub failure_count: u64,
    /// First few failing checks.
    pub failures: Vec<String>,
    pub error: Option<String>,
    pub details: Value,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SuiteReport {
    pub schema_version: u32,
    pub seed: u64,
    pub budget: usize,
    pub criteria: Vec<CriterionReport>,
    pub all_pass: bool,
}

pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub limit: Duration,
    run: fn(&mut Ctx) -> Outcome,
}

/// Check collector handed to each criterion.
pub struct Ctx {
    seed: u64,
    budget: usize,
    checks: u64,
    failure_count: u64,
    failures: Vec<String>,
}

impl Ctx {
    fn new(seed: u64, budget: usize) -> Ctx {
        Ctx { seed, budget, checks: 0, failure_count: 0, failures: Vec::new() }
    }

    /// Counter-based stream keyed by `(seed, name)`.
    fn rng(&self, name: &str) -> ChaCha8Rng {
        let mut h: u64 = 0xcbf29ce484222325;
        for b in name.bytes() {
            h = (h ^ b as u64).wrapping_mul(0x100000001b3);
        }
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(h);
        r
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) -> bool {
        self.checks += 1;
        if !ok {
            self.failure_count += 1;
            if self.failures.len() < 8 {
                self.failures.push(what());
            }
        }
        ok
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

pub fn criteria() -> Vec<Criterion> {
    let c = |id, name, limit, run| Criterion { id, name, limit, run };
    vec![
        c(1, "differentials square to zero", secs(30), c1 as fn(&mut Ctx) -> Outcome),
        c(2, "operad axioms", secs(60), c2),
        c(3, "TR and AW chain maps, stabilization squares", secs(60), c3),
        c(4, "tower homology and limits", secs(120), c4),
        c(5, "stable arity-2 complex", secs(5), c5),
        c(6, "Adem engine", secs(60), c6),
        c(7, "completed algebra windows", secs(60), c7),
        c(8, "exactness of 1 - P^0", secs(60), c8),
        c(9, "Kan suspension and loops", secs(60), c9),
        c(10, "Eilenberg-MacLane spectra", secs(120), c10),
        c(11, "spectral chains of suspension spectra", secs(60), c11),
        c(12, "P^0 acts by the identity", secs(600), c12),
        c(13, "Sq^1 on the suspension spectrum of RP^2_+", secs(60), c13),
        c(14, "instability disappearance", secs(120), c14),
        c(15, "product disappearance", secs(60), c15),
        c(16, "additivity shadow", secs(120), c16),
    ]
}

pub const DETERMINISM_ID: usize = 17;
pub const DETERMINISM_LIMIT: Duration = Duration::from_secs(1200);

pub fn run_criterion(c: &Criterion, seed: u64, budget: usize) -> (CriterionReport, Duration) {
    let mut cx = Ctx::new(seed, budget);
    let start = Instant::now();
    let out = (c.run)(&mut cx);
    let elapsed = start.elapsed();
    let (details, error) = match out {
        Ok(v) => (v, None),
        Err(e) => (Value::Null, Some(e.to_string())),
    };
    let pass = error.is_none() && cx.failure_count == 0 && cx.checks > 0;
    let report = CriterionReport {
        id: c.id,
        name: c.name.to_string(),
        pass,
        checks: cx.checks,
        failure_count: cx.failure_count,
        failures: cx.failures,
        error,
        details,
    };
    (report, elapsed)
}

pub struct SuiteRun {
    pub report: SuiteReport,
    /// Wall time per criterion id; kept out of the report.
    pub elapsed: BTreeMap<usize, Duration>,
}

fn run_once(seed: u64, budget: usize, only: Option<&[usize]>, elapsed: &mut BTreeMap<usize, Duration>) -> Vec<CriterionReport> {
    criteria()
        .iter()
        .filter(|c| only.is_none_or(|o| o.contains(&c.id)))
        .map(|c| {
            let (r, t) = run_criterion(c, seed, budget);
            elapsed.insert(c.id, t);
            r
        })
        .collect()
}

/// Runs the selected criteria; with `repeat`, runs them a second time and adds criterion 17.
pub fn run_suite(seed: u64, budget: usize, only: Option<&[usize]>, repeat: bool) -> SuiteRun {
    let start = Instant::now();
    let mut elapsed = BTreeMap::new();
    let mut criteria = run_once(seed, budget, only, &mut elapsed);
    if repeat {
        let first = serde_json::to_vec(&criteria).expect("serializable");
        let mut scratch = BTreeMap::new();
        let second = serde_json::to_vec(&run_once(seed, budget, only, &mut scratch)).expect("serializable");
        let identical = first == second;
        let first_difference = first.iter().zip(&second).position(|(a, b)| a != b);
        criteria.push(CriterionReport {
            id: DETERMINISM_ID,
            name: "determinism".into(),
            pass: identical,
            checks: 1,
            failure_count: u64::from(!identical),
            failures: if identical { Vec::new() } else { vec![format!("reports differ at byte {first_difference:?}")] },
            error: None,
            details: json!({ "bytes": [first.len(), second.len()], "identical": identical }),
        });
        elapsed.insert(DETERMINISM_ID, start.elapsed());
    }
    let all_pass = criteria.iter().all(|c| c.pass);
    SuiteRun { report: SuiteReport { schema_version: SCHEMA_VERSION, seed, budget, criteria, all_pass }, elapsed }
}

pub fn limit_of(id: usize) -> Option<Duration> {
    if id == DETERMINISM_ID {
        return Some(DETERMINISM_LIMIT);
    }
    criteria().into_iter().find(|c| c.id == id).map(|c| c.limit)
}

fn f(p: u32) -> Field {
    Field::new(p).expect("supported prime")
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// One tuple per equality pattern of `d+1` entries with no two adjacent equal:
/// the differential only sees which entries coincide.
fn be_patterns(n: usize, d: usize) -> Vec<PermTuple> {
    let perms = all_perms(n);
    let mut out = Vec::new();
    let mut cur = vec![0usize];
    fn go(cur: &mut Vec<usize>, len: usize, blocks: usize, perms: &[Perm], n: usize, out: &mut Vec<PermTuple>) {
        if cur.len() == len {
            let t = cur.iter().map(|&b| perms[b].clone()).collect();
            out.push(PermTuple::new(n, t).expect("nondegenerate pattern"));
            return;
        }
        let used = cur.iter().max().map_or(0, |m| m + 1);
        for b in 0..=used.min(blocks - 1) {
            if Some(&b) != cur.last() {
                cur.push(b);
                go(cur, len, blocks, perms, n, out);
                cur.pop();
            }
        }
    }
    if perms.len() == 1 && d > 0 {
        return out;
    }
    go(&mut cur, d + 1, perms.len(), &perms, n, &mut out);
    out
}

fn c1(cx: &mut Ctx) -> Outcome {
    let mut ms_count = 0usize;
    let mut be_rows = Vec::new();
    for p in [2, 3] {
        let field = f(p);
        for n in 1..=4usize {
            for d in 0..=(7 - n as i64) {
                for x in ms_basis(n, d) {
                    ms_count += 1;
                    let dd = ms_differential(&ms_differential_basis(field, &x));
                    cx.check(dd.is_zero(), || format!("MS ∂² ≠ 0 on {x} at p={p}"));
                }
            }
            for d in 0..=6usize {
                let nf = factorial(n);
                let full = (nf as u128) * ((nf.saturating_sub(1)) as u128).pow(d as u32);
                let (mode, basis) =
                    if full <= cx.budget as u128 { ("exhaustive", be_basis(n, d as i64)) } else { ("patterns", be_patterns(n, d)) };
                for x in &basis {
                    let dd = be_differential(&be_differential_basis(field, x));
                    cx.check(dd.is_zero(), || format!("BE ∂² ≠ 0 on {x} at p={p}"));
                }
                be_rows
                    .push(json!({ "p": p, "arity": n, "degree": d, "mode": mode, "count": basis.len(), "basis_size": full.to_string() }));
            }
        }
    }
    Ok(json!({ "ms_elements": ms_count, "be": be_rows }))
}

fn random_degree(rng: &mut ChaCha8Rng, arity: usize) -> usize {
    if arity == 1 {
        0
    } else {
        rng.gen_range(0..=3)
    }
}

fn axioms_ms(cx: &mut Ctx, rng: &mut ChaCha8Rng, field: Field) -> Outcome {
    let (n, m, l) = (rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3));
    let (dn, dm, dl) = (random_degree(rng, n), random_degree(rng, m), random_degree(rng, l));
    let a = LinComb::single(field, random_surjection(rng, n, dn), 1);
    let b = LinComb::single(field, random_surjection(rng, m, dm), 1);
    let c = LinComb::single(field, random_surjection(rng, l, dl), 1);
    let one = LinComb::single(field, Surjection::identity(1), 1);
    let tag = || format!("MS a={:?} b={:?} c={:?}", a.terms.keys().next(), b.terms.keys().next(), c.terms.keys().next());
    cx.check(ms_compose_elt(&one, 1, &a)? == a, || format!("left unit, {}", tag()));
    for r in 1..=n {
        cx.check(ms_compose_elt(&a, r, &one)? == a, || format!("right unit, {}", tag()));
    }
    let r = rng.gen_range(1..=n);
    let sigma = random_perm(rng, n);
    let tau = random_perm(rng, m);
    let rp = inverse_perm(&sigma)[r - 1] as usize;
    let lhs = ms_compose_elt(&act_ms_elt(&sigma, &a), r, &b)?;
    let rhs = act_ms_elt(&block_outer(&sigma, r, m), &ms_compose_elt(&a, rp, &b)?);
    cx.check(lhs == rhs, || format!("outer equivariance, {}", tag()));
    let lhs = ms_compose_elt(&a, r, &act_ms_elt(&tau, &b))?;
    let rhs = act_ms_elt(&block_inner(n, r, &tau), &ms_compose_elt(&a, r, &b)?);
    cx.check(lhs == rhs, || format!("inner equivariance, {}", tag()));
    let s = rng.gen_range(1..=m);
    let lhs = ms_compose_elt(&ms_compose_elt(&a, r, &b)?, r + s - 1, &c)?;
    let rhs = ms_compose_elt(&a, r, &ms_compose_elt(&b, s, &c)?)?;
    cx.check(lhs == rhs, || format!("nested associativity, {}", tag()));
    if n >= 2 {
        let sgn = if (dm * dl) % 2 == 0 { 1 } else { -1 };
        let r1 = rng.gen_range(1..n);
        let s1 = rng.gen_range(r1 + 1..=n);
        let lhs = ms_compose_elt(&ms_compose_elt(&a, r1, &b)?, s1 + m - 1, &c)?;
        let rhs = ms_compose_elt(&ms_compose_elt(&a, s1, &c)?, r1, &b)?.scaled(sgn);
        cx.check(lhs == rhs, || format!("parallel associativity, {}", tag()));
    }
    Ok(Value::Null)
}

fn axioms_be(cx: &mut Ctx, rng: &mut ChaCha8Rng, field: Field) -> Outcome {
    let (n, m, l) = (rng.gen_range(1..=3), rng.gen_range(1..=3), rng.gen_range(1..=3));
    let (dn, dm, dl) = (random_degree(rng, n), random_degree(rng, m), random_degree(rng, l));
    let a = LinComb::single(field, random_tuple(rng, n, dn), 1);
    let b = LinComb::single(field, random_tuple(rng, m, dm), 1);
    let c = LinComb::single(field, random_tuple(rng, l, dl), 1);
    let one = LinComb::single(field, PermTuple::identity(1), 1);
    let p = field.p();
    let tag = || format!("BE p={p} a={:?} b={:?}", a.terms.keys().next(), b.terms.keys().next());
    cx.check(be_compose_elt(&one, 1, &a)? == a, || format!("left unit, {}", tag()));
    for r in 1..=n {
        cx.check(be_compose_elt(&a, r, &one)? == a, || format!("right unit, {}", tag()));
    }
    let r = rng.gen_range(1..=n);
    let sigma = random_perm(rng, n);
    let tau = random_perm(rng, m);
    let rp = inverse_perm(&sigma)[r - 1] as usize;
    let lhs = be_compose_elt(&act_be_elt(&sigma, &a), r, &b)?;
    let rhs = act_be_elt(&block_outer(&sigma, r, m), &be_compose_elt(&a, rp, &b)?);
    cx.check(lhs == rhs, || format!("outer equivariance, {}", tag()));
    let lhs = be_compose_elt(&a, r, &act_be_elt(&tau, &b))?;
    let rhs = act_be_elt(&block_inner(n, r, &tau), &be_compose_elt(&a, r, &b)?);
    cx.check(lhs == rhs, || format!("inner equivariance, {}", tag()));
    let s = rng.gen_range(1..=m);
    let lhs = be_compose_elt(&be_compose_elt(&a, r, &b)?, r + s - 1, &c)?;
    let rhs = be_compose_elt(&a, r, &be_compose_elt(&b, s, &c)?)?;
    cx.check(lhs == rhs, || format!("nested associativity, {}", tag()));
    if n >= 2 {
        let sgn = if (dm * dl) % 2 == 0 { 1 } else { -1 };
        let r1 = rng.gen_range(1..n);
        let s1 = rng.gen_range(r1 + 1..=n);
        let lhs = be_compose_elt(&be_compose_elt(&a, r1, &b)?, s1 + m - 1, &c)?;
        let rhs = be_compose_elt(&be_compose_elt(&a, s1, &c)?, r1, &b)?.scaled(sgn);
        cx.check(lhs == rhs, || format!("parallel associativity, {}", tag()));
    }
    let lhs = be_differential(&be_compose_elt(&a, r, &b)?);
    let mut rhs = be_compose_elt(&be_differential(&a), r, &b)?;
    rhs.add_assign(&be_compose_elt(&a, r, &be_differential(&b))?.scaled(if dn % 2 == 0 { 1 } else { -1 }));
    cx.check(lhs == rhs, || format!("Leibniz, {}", tag()));
    Ok(Value::Null)
}

fn c2(cx: &mut Ctx) -> Outcome {
    const TRIPLES: usize = 500;
    let mut rng = cx.rng("operad axioms");
    for _ in 0..TRIPLES {
        axioms_ms(cx, &mut rng, f(2))?;
    }
    for p in [2, 3] {
        for _ in 0..TRIPLES {
            axioms_be(cx, &mut rng, f(p))?;
        }
    }
    Ok(json!({ "triples": { "ms_p2": TRIPLES, "be_p2": TRIPLES, "be_p3": TRIPLES } }))
}

/// `Ψ⟨g⟩(x)` computed through the Kan suspension: evaluate on `Σx`, then desuspend each factor.
fn aw_through_suspension(
    field: Field,
    g: &Surjection,
    s: &BasedSimplicialSet,
    sig: &BasedSimplicialSet,
    e: usize,
    x: usize,
) -> Option<LinComb<SimplexTensor>> {
    let sx = sig.index_of(e + 1, &format!("({},{})", e, s.label(e, x)))?;
    let mut ok = true;
    let out = aw_evaluate(field, g, sig, e + 1, sx).map_keys(|t| {
        let mut v = Vec::new();
        for &(d, y) in t {
            let label = sig.label(d, y);
            let inner = &label[1..label.len() - 1];
            match inner.split_once(',').and_then(|(_, rest)| s.index_of(d - 1, rest)) {
                Some(z) => v.push((d - 1, z)),
                None => ok = false,
            }
        }
        Some((v, 1))
    });
    ok.then_some(out)
}

fn c3(cx: &mut Ctx) -> Outcome {
    const SAMPLES: usize = 200;
    let field = f(2);
    let mut rng = cx.rng("chain maps");
    for _ in 0..SAMPLES {
        let n = rng.gen_range(1..=3);
        let d = if n == 1 { 0 } else { rng.gen_range(0..=4) };
        let a = random_tuple(&mut rng, n, d);
        let ok = tr(&be_differential_basis(field, &a)) == ms_differential(&tr_basis(field, &a));
        cx.check(ok, || format!("TR∂ ≠ ∂TR on {a}"));
        let ok = tr(&psi_be_basis(field, &a)) == psi_ms(&tr_basis(field, &a));
        cx.check(ok, || format!("TR∘Ψ ≠ Ψ∘TR on {a}"));
    }
    let x = BasedSimplicialSet::standard_simplex_plus(5, 5)?;
    for _ in 0..SAMPLES {
        let n = rng.gen_range(1..=3);
        let d = if n == 1 { 0 } else { rng.gen_range(0..=3) };
        let g = random_surjection(&mut rng, n, d);
        let e = rng.gen_range(0..=5usize);
        let nd = x.nondegenerate(e);
        let y = nd[rng.gen_range(0..nd.len())];
        let mut lhs = tensor_boundary(field, &x, &aw_evaluate(field, &g, &x, e, y));
        for (z, c) in simplex_boundary(&x, e, y) {
            lhs.add_scaled(&aw_evaluate(field, &g, &x, e - 1, z), field.reduce(c));
        }
        let rhs = aw_evaluate_elt(&ms_differential_basis(field, &g), &x, e, y);
        cx.check(lhs == rhs, || format!("AW not a chain map for {g} on dimension {e}"));
    }
    let mut spaces = vec![BasedSimplicialSet::standard_simplex_plus(3, 4)?, BasedSimplicialSet::rp2(4)?];
    for _ in 0..3 {
        spaces.push(BasedSimplicialSet::random(&mut rng, 5, 2, 4)?);
    }
    let suspended: Vec<BasedSimplicialSet> = spaces.iter().map(kan_suspension).collect::<std::result::Result<_, _>>()?;
    let mut done = 0;
    while done < SAMPLES {
        let i = rng.gen_range(0..spaces.len());
        let (s, sig) = (&spaces[i], &suspended[i]);
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(2 * n - 1..=2 * n + 1);
        let g = random_surjection(&mut rng, n, if n == 1 { 0 } else { m - n });
        let e = rng.gen_range(0..=3usize);
        let nd = s.nondegenerate(e);
        if nd.is_empty() {
            continue;
        }
        done += 1;
        let y = nd[rng.gen_range(0..nd.len())];
        let lhs = aw_evaluate_elt(&psi_ms_basis(field, &g), s, e, y);
        let rhs = aw_through_suspension(field, &g, s, sig, e, y);
        cx.check(rhs.as_ref() == Some(&lhs), || format!("AW∘Ψ ≠ Ψ∘AW for {g} on {}", s.label(e, y)));
    }
    let mut ranks = Vec::new();
    for n in 1..=3usize {
        for d in 0..=4i64 {
            let target = ms_basis(n, d);
            let idx: BTreeMap<_, _> = target.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
            let mut ech = Echelon::new(field, target.len());
            for a in be_basis(n, d) {
                let v: Vec<(usize, u32)> = tr_basis(field, &a).terms.iter().map(|(k, c)| (idx[k], *c)).collect();
                ech.insert_sparse(&v);
            }
            cx.check(ech.rank() == target.len(), || format!("TR not onto in arity {n}, degree {d}"));
            ranks.push(json!({ "arity": n, "degree": d, "rank": ech.rank(), "target": target.len() }));
        }
    }
    Ok(json!({ "samples": SAMPLES, "tr_surjectivity": ranks }))
}

fn c4(cx: &mut Ctx) -> Outcome {
    let mut peaks = Vec::new();
    for p in [2, 3] {
        for n in [2usize, 3] {
            for k in 0..=3usize {
                let peak = k as i64 * (1 - n as i64);
                let mut dims = Vec::new();
                for d in peak - 1..=peak + 3 {
                    let levels = k.max(1);
                    let flavor = if d + levels as i64 * (n as i64 - 1) <= 3 { Flavor::Be } else { Flavor::Ms };
                    let t = tower_homology(flavor, f(p), n, d, levels, cx.budget)?;
                    let dim = t.levels[k].dim;
                    cx.check(dim == usize::from(d == peak), || format!("H_{d}(Σ^{k}E({n})) has dim {dim} at p={p}"));
                    dims.push(dim);
                }
                peaks.push(json!({ "p": p, "arity": n, "k": k, "from_degree": peak - 1, "dims": dims }));
            }
        }
    }
    let mut limits = Vec::new();
    for p in [2, 3] {
        for n in [1usize, 2, 3] {
            for d in -4i64..=2 {
                let shift = n as i64 - 1;
                let levels = if n == 1 {
                    3
                } else if d <= 0 {
                    ((-d + shift - 1) / shift) as usize + 2
                } else {
                    1
                };
                let t = tower_homology(Flavor::Ms, f(p), n, d, levels, cx.budget)?;
                let expect = usize::from(n == 1 && d == 0);
                cx.check(t.stabilized, || format!("no stabilization witness for n={n} d={d} p={p}"));
                cx.check(t.limit_dim == expect, || format!("limit {} ≠ {expect} for n={n} d={d} p={p}", t.limit_dim));
                limits.push(json!({ "p": p, "arity": n, "degree": d, "levels": levels, "limit": t.limit_dim, "stabilized": t.stabilized }));
            }
        }
    }
    Ok(json!({ "peaks": peaks, "limits": limits }))
}

fn c5(cx: &mut Ctx) -> Outcome {
    let e = est2_complex(f(2), -6, 6)?;
    let mut free = Vec::new();
    let mut coinv = Vec::new();
    for d in -5..=5 {
        let (a, b) = (e.free.betti(d)?, e.coinvariant.betti(d)?);
        cx.check(a == 0, || format!("nonequivariant Betti {a} in degree {d}"));
        cx.check(b == 1, || format!("coinvariant Betti {b} in degree {d}"));
        free.push(a);
        coinv.push(b);
    }
    Ok(json!({ "window": [-5, 5], "free_betti": free, "coinvariant_betti": coinv }))
}

fn random_word(rng: &mut ChaCha8Rng, p: u32, max_len: usize, bound: i64) -> Mono {
    let len = rng.gen_range(0..=max_len);
    Mono((0..len).map(|_| (if p == 2 { 0 } else { rng.gen_range(0..=1) }, rng.gen_range(-bound..=bound))).collect())
}

fn c6(cx: &mut Ctx) -> Outcome {
    const WORDS: usize = 1000;
    let mut rng = cx.rng("adem");
    let mut lemma_violations = 0;
    for p in [2u32, 3] {
        let adem = Adem::new(f(p));
        let words: Vec<Mono> = (0..WORDS).map(|_| random_word(&mut rng, p, 4, 6)).collect();
        for w in &words {
            let e = adem.expand(w);
            let ok = e.terms.keys().all(|m| is_admissible(p, m) && degree(p, m) == degree(p, w));
            cx.check(ok, || format!("p={p}: {w} expands to a non-admissible or wrong-degree term"));
            cx.check(adem.expand_sum(&e) == e, || format!("p={p}: expansion of {w} is not idempotent"));
            cx.check(adem.expand_random(w, &mut rng) == e, || format!("p={p}: strategies disagree on {w}"));
        }
        let mut pairs = Vec::new();
        while pairs.len() < 300 {
            let i = random_word(&mut rng, p, 3, 6);
            let j = random_word(&mut rng, p, 3, 6);
            if is_admissible(p, &i) && is_admissible(p, &j) && !j.is_empty() {
                pairs.push((i, j));
            }
        }
        let bad = excess_lemmas_check(&adem, &words, &pairs);
        lemma_violations += bad.len();
        cx.check(bad.is_empty(), || format!("p={p}: lemma violations {:?}", &bad[..bad.len().min(3)]));
    }
    let sq1sq1 = Adem::new(f(2)).expand(&Mono::from_entries(&[1, 1]));
    cx.check(sq1sq1.is_zero(), || "P^1 P^1 ≠ 0 at p = 2".into());
    Ok(json!({ "words_per_prime": WORDS, "lemma_violations": lemma_violations, "p1p1_terms": sq1sq1.len() }))
}

/// Brute force over a box of entries.
fn box_basis(p: u32, k: i64, d: i64, max_len: usize, bound: i64) -> Vec<Mono> {
    let letters: Vec<Letter> = (-bound..=bound).flat_map(|i| (0..if p == 2 { 1u8 } else { 2 }).map(move |e| (e, i))).collect();
    let mut out = Vec::new();
    let mut frontier = vec![Mono::unit()];
    for len in 0..=max_len {
        for m in &frontier {
            if degree(p, m) == d && excess(p, m).is_none_or(|e| e <= k) {
                out.push(m.clone());
            }
        }
        if len < max_len {
            frontier = frontier
                .iter()
                .flat_map(|m| letters.iter().map(move |&l| m.concat(&Mono(vec![l]))))
                .filter(|m| is_admissible(p, m))
                .collect();
        }
    }
    out.sort();
    out
}

fn c7(cx: &mut Ctx) -> Outcome {
    let mut rng = cx.rng("windows");
    let mut products = 0;
    for p in [2u32, 3] {
        let fp = f(p);
        let adem = Adem::new(fp);
        let t = (p * p) as u64;
        for _ in 0..40 {
            let (da, db) = (rng.gen_range(-3..=3), rng.gen_range(-3..=3));
            let k0 = rng.gen_range(0..=4);
            let mut sum = |d: i64, k: i64| {
                let mut s = LinComb::zero(fp);
                for m in basis_bk(p, k, d, 2) {
                    s.add_term(m, rng.gen_range(0..p as i64));
                }
                s
            };
            let (ka, kb) = (k0 + db + 1, k0 + 1);
            let a = sum(da, ka + 3);
            let b = sum(db, kb + 3);
            let wa = BHatWindow::new(fp, da, ka, t, &a);
            let wb = BHatWindow::new(fp, db, kb, t, &b);
            let w = bhat_multiply(&adem, &wa, &wb, k0)?;
            let full = BHatWindow::new(fp, da + db, k0, t * t, &adem.multiply(&a, &b));
            cx.check(w == full, || format!("p={p}: window product differs from B in degree {}", da + db));
            let narrow = BHatWindow::new(fp, da, k0 + db - 1, t, &a);
            let rejected = matches!(bhat_multiply(&adem, &narrow, &wb, k0), Err(SteenrodError::Window { .. }));
            cx.check(rejected, || format!("p={p}: too-narrow window accepted"));
            products += 1;
        }
    }
    let fp = f(2);
    let adem = Adem::new(fp);
    let mut certificates = Vec::new();
    for _ in 0..200 {
        let ds: Vec<i64> = (0..3).map(|_| rng.gen_range(-2..=2)).collect();
        let k0 = 3;
        let needs: Vec<i64> = (0..3).map(|i| k0 + ds[i + 1..].iter().sum::<i64>() + 4).collect();
        let ws: Vec<BHatWindow> = (0..3)
            .map(|i| {
                let mut s = LinComb::zero(fp);
                for m in basis_bk(2, needs[i], ds[i], 2) {
                    s.add_term(m, rng.gen_range(0..2));
                }
                BHatWindow::new(fp, ds[i], needs[i], 4, &s)
            })
            .collect();
        let bc = bhat_multiply(&adem, &ws[1], &ws[2], k0 + 2)?;
        let ab = bhat_multiply(&adem, &ws[0], &ws[1], k0 + ds[2] + 2)?;
        let left = bhat_multiply(&adem, &ab, &ws[2], k0)?;
        let right = bhat_multiply(&adem, &ws[0], &bc, k0)?;
        cx.check(left.terms == right.terms, || format!("window associativity fails for degrees {ds:?}"));
        certificates.push(json!({ "degrees": ds, "ceilings": needs, "output_ceiling": k0 }));
    }
    let mut counts = Vec::new();
    for p in [2u32, 3] {
        let maxl = max_len_for(p, (p * p) as u64);
        for d in -4..=4 {
            for k in [0i64, 2, 4] {
                let got = basis_bk(p, k, d, maxl);
                let brute = box_basis(p, k, d, maxl, 14);
                cx.check(got == brute, || format!("p={p} d={d} k={k}: basis {} vs enumeration {}", got.len(), brute.len()));
                counts.push(json!([p, d, k, got.len(), brute.len()]));
            }
        }
    }
    Ok(json!({ "products": products, "associativity": certificates.len(), "width_certificates": certificates, "basis_counts": counts }))
}

fn c8(cx: &mut Ctx) -> Outcome {
    let mut reports = Vec::new();
    for p in [2u32, 3] {
        let adem = Adem::new(f(p));
        let maxl = max_len_for(p, (p * p) as u64);
        for d in -3..=4 {
            let r = exactness_check(&adem, d, 3, maxl);
            cx.check(r.image_rank == r.domain_dim, || format!("1 - P^0 not injective: {r:?}"));
            cx.check(r.composite_zero, || format!("projection ∘ (1 - P^0) ≠ 0: {r:?}"));
            cx.check(r.projection_rank == r.a_dim, || format!("projection not onto: {r:?}"));
            cx.check(r.kernel_dim + r.projection_rank == r.middle_dim, || format!("rank count: {r:?}"));
            cx.check(r.kernel_dim == r.image_in_middle, || format!("kernel not reached: {r:?}"));
            reports.push(r);
        }
    }
    Ok(serde_json::to_value(reports)?)
}

fn c9(cx: &mut Ctx) -> Outcome {
    const SETS: usize = 50;
    let mut rng = cx.rng("simplicial");
    let field = f(2);
    let mut sizes = Vec::new();
    for i in 0..SETS {
        let s = BasedSimplicialSet::random(&mut rng, 5, 2, 6)?;
        s.validate()?;
        let sig = kan_suspension(&s)?;
        sig.validate()?;
        cx.check(unit_map(&s)?.is_bijective(), || format!("set {i}: unit not bijective"));
        cx.check(counit_map(&s)?.is_injective(), || format!("set {i}: counit not injective"));
        let cs = normalized_chains(&s, field)?;
        let csig = normalized_chains(&sig, field)?;
        for d in 0..s.cutoff() as i64 {
            cx.check(cs.dim(d)? == csig.dim(d + 1)?, || format!("set {i}: chain dimensions differ in degree {d}"));
            if d >= 1 {
                let ok = csig.differential(d + 1)? == &cs.differential(d)?.scaled(-1);
                cx.check(ok, || format!("set {i}: differential differs in degree {d}"));
            }
        }
        sizes.push(s.nondegenerate_counts(false));
    }
    Ok(json!({ "sets": SETS, "cutoff": 6, "nondegenerate_counts": sizes }))
}

fn c10(cx: &mut Ctx) -> Outcome {
    let field = f(2);
    let mut sigma = Vec::new();
    for q in 0..=3 {
        for d in 0..=6 {
            let c = check_em_sigma(field, q, d);
            cx.check(c.bijective && c.simplicial, || format!("σ fails: {c:?}"));
            sigma.push(c);
        }
    }
    let mut classes = Vec::new();
    for m in 0..=4 {
        let c = check_fundamental_class(field, m);
        cx.check(c.cocycle && c.compatible, || format!("fundamental class fails: {c:?}"));
        classes.push(c);
    }
    let e = em_spectrum(field, 0, 2, 4, cx.budget as u64)?;
    cx.check(e.validate().is_ok(), || "HF_2 structure maps invalid".into());
    for n in 0..2 {
        cx.check(e.adjoint(n)?.is_bijective(), || format!("adjoint σ_{n} not bijective"));
    }
    Ok(json!({ "sigma": sigma, "fundamental_classes": classes }))
}

fn c11(cx: &mut Ctx) -> Outcome {
    let mut rng = cx.rng("spectral chains");
    let field = f(2);
    let mut rows = Vec::new();
    for i in 0..20 {
        let s = BasedSimplicialSet::random(&mut rng, 5, 2, 4)?;
        let e = suspension_spectrum(&s, 0, 2, 4)?;
        e.validate()?;
        let reduced = normalized_chains(&s, field)?;
        let ch = spectral_chains(field, &e, 0, 1)?;
        let mut betti = Vec::new();
        for d in 0..=1 {
            let (a, b) = (ch.complex.homology(d)?.betti, reduced.homology(d)?.betti);
            cx.check(a == b, || format!("sample {i}: Betti {a} vs {b} in degree {d}"));
            betti.push(a);
        }
        for d in 0..=1 {
            cx.check(ch.complex.dim(d)? == reduced.dim(d)?, || format!("sample {i}: chain ranks differ in degree {d}"));
        }
        let w = ch.witness.clone();
        cx.check(w.as_ref().is_some_and(|w| w.complexes_isomorphic && w.homology_isomorphic), || format!("sample {i}: witness {w:?}"));
        rows.push(json!({ "betti": betti, "witness": w }));
    }
    Ok(json!({ "samples": rows }))
}

fn c12(cx: &mut Ctx) -> Outcome {
    let mut rng = cx.rng("p0");
    let mut samples = Vec::new();
    for i in 0..10 {
        let s = BasedSimplicialSet::random(&mut rng, 5, 2, 5)?;
        let e = suspension_spectrum(&s, 0, 2, 5)?;
        let ch = spectral_chains_f2(&e, 0, 2)?;
        for q in 0..=2 {
            let t = stable_p(&ch, &e, 0, q)?;
            cx.check(t.is_identity(), || format!("sample {i}: P^0 on H^{q} is {t:?}"));
            samples.push(t);
        }
    }
    let e = em_spectrum(f(2), 0, 3, 6, cx.budget as u64)?;
    let ch = spectral_chains_f2(&e, 0, 2)?;
    cx.check(!ch.approximate(), || format!("HF_2 window has no stable-range witness: {:?}", ch.witness));
    let mut hf2 = Vec::new();
    for q in 0..=2 {
        let t = stable_p(&ch, &e, 0, q)?;
        cx.check(t.is_identity(), || format!("HF_2: P^0 on H^{q} is {t:?}"));
        hf2.push(t);
    }
    Ok(json!({ "suspension_spectra": samples, "hf2": hf2, "hf2_witness": ch.witness }))
}

fn c13(cx: &mut Ctx) -> Outcome {
    let mut stable = Vec::new();
    for levels in 1..=2 {
        let e = suspension_spectrum(&BasedSimplicialSet::rp2_plus(3 + levels)?, 0, levels, 3 + levels)?;
        let ch = spectral_chains_f2(&e, 0, 2)?;
        let (h1, h2) = (WindowCohomology::new(&ch, 1)?.dim(), WindowCohomology::new(&ch, 2)?.dim());
        let t = stable_p(&ch, &e, 1, 1)?;
        cx.check(h1 == 1 && h2 == 1 && t.rank == 1, || format!("levels {levels}: H^1={h1}, H^2={h2}, rank {}", t.rank));
        stable.push(t);
    }
    let srp = kan_suspension(&BasedSimplicialSet::rp2_plus(3)?)?;
    let sp = space_spectrum(&srp);
    let ch = spectral_chains_f2(&sp, 1, 3)?;
    let oracle = surjection_square(&ch, &sp, &Surjection::new(2, vec![1, 2, 1])?, 2)?;
    let ok = (oracle.source_degree, oracle.target_degree, oracle.rank) == (2, 3, 1);
    cx.check(ok, || format!("(1,2,1) oracle on ΣRP²_+: {oracle:?}"));
    cx.check(stable.iter().all(|t| t.rank == oracle.rank), || "stable Sq^1 and oracle disagree".into());
    let rp = BasedSimplicialSet::rp2_plus(3)?;
    let sp = space_spectrum(&rp);
    let ch = spectral_chains_f2(&sp, 0, 2)?;
    let cup = surjection_square(&ch, &sp, &Surjection::new(2, vec![1, 2])?, 1)?;
    cx.check(cup.rank == 1, || format!("cup square on RP²: {cup:?}"));
    Ok(json!({ "stable": stable, "cup1_oracle": oracle, "cup_oracle": cup }))
}

fn c14(cx: &mut Ctx) -> Outcome {
    let field = f(2);
    let mut rows = Vec::new();
    for q in 0..=2i64 {
        for k in 0..=2usize {
            for s in q + k as i64 - 4..=q + k as i64 + 3 {
                let op = free_algebra_operation(field, q, k, s)?;
                cx.check(op.nonzero == (s <= q + k as i64), || format!("{op:?}"));
                rows.push(op);
            }
        }
        let survivor = free_algebra_operation(field, q, 2, q + 1)?;
        cx.check(survivor.nonzero, || format!("P^{} with s > q vanishes at k = 2: {survivor:?}", q + 1));
    }
    Ok(json!({ "operations": rows }))
}

fn c15(cx: &mut Ctx) -> Outcome {
    let r = product_disappearance(f(2), 1, 4, 2, cx.budget)?;
    cx.check(r.psi_kills_e0, || "Ψ(e_0^un) ≠ 0".into());
    cx.check(r.d_e0_st_nonzero, || "∂e_0^st = 0".into());
    for (k, maps) in &r.tower_maps {
        for m in maps {
            cx.check(m.rank == m.predicted_rank, || format!("k={k}: {m:?}"));
            if m.arity == 0 {
                cx.check(m.rank == 0, || format!("k={k}: unit survives {m:?}"));
            }
        }
    }
    Ok(serde_json::to_value(r)?)
}

fn c16(cx: &mut Ctx) -> Outcome {
    let levels = |j: usize| if j == 2 { 3 } else { 2 };
    let r = additivity_check(f(2), &[2, 3], (0, 1), &levels, cx.budget)?;
    cx.check(r.mixed_vanish, || "a mixed partition has nonzero limit".into());
    cx.check(r.extremes_match, || "extreme partitions do not carry the summand pattern".into());
    cx.check(r.additive, || "limits are not additive".into());
    Ok(serde_json::to_value(r)?)
}
