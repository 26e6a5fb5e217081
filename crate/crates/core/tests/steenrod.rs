use opsteen::fplinalg::{Field, LinComb};
use opsteen::steenrod::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn f(p: u32) -> Field {
    Field::new(p).unwrap()
}

fn lc(p: u32, terms: &[(&[i64], i64)]) -> LinComb<Mono> {
    let mut s = LinComb::zero(f(p));
    for (e, c) in terms {
        s.add_term(Mono::from_entries(e), *c);
    }
    s
}

fn random_word(rng: &mut ChaCha8Rng, p: u32, max_len: usize, bound: i64) -> Mono {
    let len = rng.gen_range(0..=max_len);
    Mono((0..len).map(|_| (if p == 2 { 0 } else { rng.gen_range(0..=1) }, rng.gen_range(-bound..=bound))).collect())
}

/// Pascal's rule run downward from `binom(n, 0) = 1` supplies the negative rows.
fn pascal_table(p: u32, n_abs: i64) -> impl Fn(i64, i64) -> u32 {
    let size = (2 * n_abs + 2) as usize;
    let k_max = n_abs as usize + 1;
    let mut t = vec![vec![0u32; k_max + 1]; size];
    let idx = move |n: i64| (n + n_abs) as usize;
    // nonnegative rows upward
    for n in 0..=n_abs {
        for k in 0..=k_max {
            t[idx(n)][k] = if k == 0 {
                1
            } else if n == 0 {
                0
            } else {
                (t[idx(n - 1)][k] + t[idx(n - 1)][k - 1]) % p
            };
        }
    }
    // binom(n, k) = binom(n+1, k) − binom(n, k−1)
    for n in (-n_abs..0).rev() {
        for k in 0..=k_max {
            t[idx(n)][k] = if k == 0 { 1 } else { (t[idx(n + 1)][k] + p - t[idx(n)][k - 1]) % p };
        }
    }
    move |n: i64, k: i64| if k < 0 { 0 } else { t[idx(n)][k as usize] }
}

#[test]
fn binomials_match_pascal() {
    for p in [2u32, 3, 5, 7] {
        let oracle = pascal_table(p, 64);
        for n in -64..=64 {
            for k in -3..=64 {
                assert_eq!(binom_mod(p, n, k), oracle(n, k), "p={p} binom({n},{k})");
            }
        }
    }
}

#[test]
fn adem_examples() {
    let a2 = Adem::new(f(2));
    assert!(a2.expand(&Mono::from_entries(&[1, 1])).is_zero());
    assert_eq!(a2.expand(&Mono::from_entries(&[1, 3])), lc(2, &[(&[5, -1], 1)]));
    assert_eq!(a2.expand(&Mono::from_entries(&[2, 2])), lc(2, &[(&[3, 1], 1)]));
    assert!(a2.expand(&Mono::from_entries(&[-1, 0])).is_zero());
    assert_eq!(a2.expand(&Mono::from_entries(&[-2, 0])), lc(2, &[(&[-1, -1], 1)]));
    // in A: Sq^2 Sq^2 = Sq^3 Sq^1, Sq^1 Sq^3 = 0
    assert_eq!(a2.expand_a(&Mono::from_entries(&[2, 2])), lc(2, &[(&[3, 1], 1)]));
    assert!(a2.expand_a(&Mono::from_entries(&[1, 3])).is_zero());
    assert_eq!(a2.expand_a(&Mono::from_entries(&[0, 2, 0])), lc(2, &[(&[2], 1)]));

    let a3 = Adem::new(f(3));
    assert_eq!(a3.expand_a(&Mono::from_entries(&[1, 1])), lc(3, &[(&[2], 2)]));
    let mut rel = LinComb::zero(f(3));
    rel.add_term(Mono(vec![(1, 2)]), 1);
    rel.add_term(Mono(vec![(0, 2), (1, 0)]), 1);
    assert_eq!(a3.expand_a(&Mono(vec![(0, 1), (1, 1)])), rel);
    assert!(a3.expand_a(&Mono(vec![(1, 0), (1, 0)])).is_zero());
    assert_eq!(Mono::parse("bP^2 P^-1").unwrap(), Mono(vec![(1, 2), (0, -1)]));
    assert_eq!(Mono(vec![(1, 2), (0, -1)]).to_string(), "bP^2 P^-1");
    assert_eq!(a2.expand_checked(&Mono(vec![(1, 1)])), Err(SteenrodError::BocksteinAtTwo));
}

#[test]
fn degree_and_excess() {
    assert_eq!(degree(2, &Mono::from_entries(&[3, -1])), 2);
    assert_eq!(excess(2, &Mono::from_entries(&[3, -1])), Some(4));
    assert_eq!(excess(2, &Mono::unit()), None);
    let m = Mono(vec![(1, 2), (0, 1), (1, 0)]);
    assert_eq!(degree(3, &m), 9 + 4 + 1);
    assert_eq!(excess(3, &m), Some(5 - 4 - 1));
    // e(I) = 2p·i_1 + 2ε_1 − d(I)
    assert_eq!(excess(3, &m), Some(2 * 3 * 2 + 2 - degree(3, &m)));
    assert!(is_admissible(3, &Mono(vec![(0, 4), (1, 1)])));
    assert!(!is_admissible(3, &Mono(vec![(0, 3), (1, 1)])));
}

#[test]
fn expansion_is_idempotent_degree_preserving_and_confluent() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for iter in 0..1000 {
        let p = if iter % 2 == 0 { 2 } else { 3 };
        let adem = Adem::new(f(p));
        let w = random_word(&mut rng, p, 4, 6);
        let e = adem.expand(&w);
        for (m, _) in &e.terms {
            assert!(is_admissible(p, m), "{w} -> {m}");
            assert_eq!(degree(p, m), degree(p, &w));
            assert_eq!(m.len(), w.len());
        }
        assert_eq!(adem.expand_sum(&e), e, "idempotence at {w}");
        assert_eq!(adem.expand_random(&w, &mut rng), e, "confluence at {w}");
    }
}

#[test]
fn b_is_associative() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    // odd-prime expansions grow fast with length, so keep p = 3 products to length 4
    for (p, lens) in [(2u32, [2, 2, 2]), (3, [2, 1, 1])] {
        let adem = Adem::new(f(p));
        for _ in 0..150 {
            let x = LinComb::single(f(p), random_word(&mut rng, p, lens[0], 5), 1);
            let y = LinComb::single(f(p), random_word(&mut rng, p, lens[1], 5), 1);
            let z = LinComb::single(f(p), random_word(&mut rng, p, lens[2], 5), 1);
            assert_eq!(adem.multiply(&adem.multiply(&x, &y), &z), adem.multiply(&x, &adem.multiply(&y, &z)));
        }
    }
}

#[test]
fn steenrod_algebra_dimensions() {
    assert_eq!((0..10).map(|d| basis_a(2, d, 4).len()).collect::<Vec<_>>(), vec![1, 1, 1, 2, 2, 2, 3, 4, 4, 5]);
    assert_eq!((0..11).map(|d| basis_a(3, d, 4).len()).collect::<Vec<_>>(), vec![1, 1, 0, 0, 1, 2, 1, 0, 1, 2, 1]);
}

#[test]
fn a_is_associative_and_projection_is_multiplicative() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for p in [2u32, 3] {
        let adem = Adem::new(f(p));
        let pick = |rng: &mut ChaCha8Rng| {
            let d = rng.gen_range(0..14);
            let b = basis_a(p, d, 3);
            (!b.is_empty()).then(|| LinComb::single(f(p), b[rng.gen_range(0..b.len())].clone(), 1))
        };
        let mut done = 0;
        while done < 80 {
            let (Some(x), Some(y), Some(z)) = (pick(&mut rng), pick(&mut rng), pick(&mut rng)) else { continue };
            assert_eq!(adem.multiply_a(&adem.multiply_a(&x, &y), &z), adem.multiply_a(&x, &adem.multiply_a(&y, &z)));
            done += 1;
        }
        for _ in 0..300 {
            let x = LinComb::single(f(p), random_word(&mut rng, p, 2, 4), 1);
            let y = LinComb::single(f(p), random_word(&mut rng, p, 2, 4), 1);
            let lhs = adem.project_to_a(&adem.multiply(&x, &y));
            let rhs = adem.multiply_a(&adem.project_to_a(&x), &adem.project_to_a(&y));
            assert_eq!(lhs, rhs, "{:?} {:?}", x.terms, y.terms);
        }
    }
}

#[test]
fn excess_lemmas_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for p in [2u32, 3] {
        let adem = Adem::new(f(p));
        let words: Vec<Mono> = (0..400).map(|_| random_word(&mut rng, p, 4, 6)).collect();
        let mut pairs = Vec::new();
        while pairs.len() < 300 {
            let i = random_word(&mut rng, p, 3, 6);
            let j = random_word(&mut rng, p, 3, 6);
            if is_admissible(p, &i) && is_admissible(p, &j) && !j.is_empty() {
                pairs.push((i, j));
            }
        }
        let bad = excess_lemmas_check(&adem, &words, &pairs);
        assert!(bad.is_empty(), "{bad:?}");
    }
}

/// Brute force over a box of entries.
fn box_basis(p: u32, k: i64, d: i64, max_len: usize, bound: i64) -> Vec<Mono> {
    let mut out = vec![];
    let letters: Vec<Letter> = (-bound..=bound).flat_map(|i| (0..if p == 2 { 1 } else { 2 }).map(move |e| (e as u8, i))).collect();
    let mut frontier = vec![Mono::unit()];
    for len in 0..=max_len {
        for m in &frontier {
            if degree(p, m) == d && is_admissible(p, m) && excess(p, m).is_none_or(|e| e <= k) {
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

#[test]
fn windowed_bases_are_finite_and_match_brute_force() {
    for p in [2u32, 3] {
        let maxl = max_len_for(p, (p * p) as u64);
        assert_eq!(maxl, 2);
        for d in -4..=4 {
            for k in [0i64, 2, 4] {
                let got = basis_bk(p, k, d, maxl);
                assert_eq!(got, box_basis(p, k, d, maxl, 14), "p={p} d={d} k={k}");
                assert!(got.iter().all(|m| m.0.iter().all(|l| l.1.abs() < 14)));
            }
        }
    }
    assert_eq!(max_len_for(3, 8), 1);
    assert_eq!(max_len_for(2, 1), 0);
}

#[test]
fn window_products_agree_with_b() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for p in [2u32, 3] {
        let fp = f(p);
        let adem = Adem::new(fp);
        let t = (p * p) as u64;
        for _ in 0..40 {
            let (da, db) = (rng.gen_range(-3..=3), rng.gen_range(-3..=3));
            let k0 = rng.gen_range(0..=4);
            let sum = |d: i64, k: i64, rng: &mut ChaCha8Rng| {
                let mut s = LinComb::zero(fp);
                for m in basis_bk(p, k, d, 2) {
                    s.add_term(m, rng.gen_range(0..p as i64));
                }
                s
            };
            let (ka, kb) = (k0 + db + 1, k0 + 1);
            let a = sum(da, ka + 3, &mut rng);
            let b = sum(db, kb + 3, &mut rng);
            let wa = BHatWindow::new(fp, da, ka, t, &a);
            let wb = BHatWindow::new(fp, db, kb, t, &b);
            let w = bhat_multiply(&adem, &wa, &wb, k0).unwrap();
            // the full product in B, cut to the same window
            let full = BHatWindow::new(fp, da + db, k0, t * t, &adem.multiply(&a, &b));
            assert_eq!(w, full);
            let narrow = BHatWindow::new(fp, da, k0 + db - 1, t, &a);
            assert!(matches!(bhat_multiply(&adem, &narrow, &wb, k0), Err(SteenrodError::Window { .. })));
        }
    }
}

#[test]
fn window_products_are_associative() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let fp = f(2);
    let adem = Adem::new(fp);
    for _ in 0..30 {
        let ds: Vec<i64> = (0..3).map(|_| rng.gen_range(-2..=2)).collect();
        let k0 = 3;
        let ws: Vec<BHatWindow> = ds
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let need = k0 + ds[i + 1..].iter().sum::<i64>() + 4;
                let mut s = LinComb::zero(fp);
                for m in basis_bk(2, need, d, 2) {
                    s.add_term(m, rng.gen_range(0..2));
                }
                BHatWindow::new(fp, d, need, 4, &s)
            })
            .collect();
        let bc = bhat_multiply(&adem, &ws[1], &ws[2], k0 + 2).unwrap();
        let ab = bhat_multiply(&adem, &ws[0], &ws[1], k0 + ds[2] + 2).unwrap();
        let left = bhat_multiply(&adem, &ab, &ws[2], k0).unwrap();
        let right = bhat_multiply(&adem, &ws[0], &bc, k0).unwrap();
        assert_eq!(left.terms, right.terms);
    }
}

#[test]
fn projection_of_windows() {
    let fp = f(2);
    let adem = Adem::new(fp);
    let w = BHatWindow::sum_pk_pmk(fp, 6);
    assert_eq!(w.terms.len(), 3);
    assert_eq!(project_window(&adem, &w).unwrap(), LinComb::single(fp, Mono::unit(), 1));
    let narrow = BHatWindow::new(fp, 3, 1, 4, &LinComb::single(fp, Mono::from_entries(&[3]), 1));
    assert!(matches!(project_window(&adem, &narrow), Err(SteenrodError::Projection { .. })));
}

#[test]
fn one_minus_p0_sequence() {
    for p in [2u32, 3] {
        let adem = Adem::new(f(p));
        let maxl = max_len_for(p, (p * p) as u64);
        for d in -3..=4 {
            let r = exactness_check(&adem, d, 3, maxl);
            assert_eq!(r.image_rank, r.domain_dim, "injective {r:?}");
            assert!(r.composite_zero, "{r:?}");
            assert_eq!(r.projection_rank, r.a_dim, "surjective {r:?}");
            assert_eq!(r.kernel_dim + r.projection_rank, r.middle_dim);
            assert!(r.image_rank <= r.kernel_dim);
            assert!(r.closing_length.is_some(), "kernel not reached {r:?}");
            assert_eq!(r.kernel_dim, r.image_in_middle, "{r:?}");
        }
        let r = exactness_check(&adem, 0, 3, maxl);
        if p == 3 {
            assert_eq!(r.kernel_dim, r.image_rank);
        }
    }
}

#[test]
fn unstable_action_on_rp() {
    let fp = f(2);
    let adem = Adem::new(fp);
    let m = ActionTable::rp(12, -30, 30);
    // Sq^1 x = x^2, P^0 = 1, negative letters vanish
    assert_eq!(m.act_mono(&Mono::from_entries(&[1]), &[(0, 1)]).unwrap(), vec![(1, 1)]);
    assert_eq!(m.act_mono(&Mono::from_entries(&[0]), &[(2, 1)]).unwrap(), vec![(2, 1)]);
    assert!(m.act_mono(&Mono::from_entries(&[-1]), &[(2, 1)]).unwrap().is_empty());
    // Adem relations of B hold on the module
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..300 {
        let w = random_word(&mut rng, 2, 3, 5);
        let x = rng.gen_range(0..6);
        let direct = m.act_mono(&w, &[(x, 1)]).unwrap();
        let mut via = std::collections::BTreeMap::new();
        for (k, c) in &adem.expand(&w).terms {
            for (t, v) in m.act_mono(k, &[(x, 1)]).unwrap() {
                *via.entry(t).or_insert(0u32) ^= c * v;
            }
        }
        let via: Vec<(usize, u32)> = via.into_iter().filter(|&(_, v)| v != 0).collect();
        assert_eq!(direct, via, "{w} on x^{}", x + 1);
    }
    // the window Σ P^k P^{−k} acts as the identity
    let w = BHatWindow::sum_pk_pmk(fp, 8);
    for x in 0..6 {
        assert_eq!(m.unstable_extension_act(&w, x).unwrap(), vec![(x, 1)]);
    }
    assert!(m.unstable_extension_act(&BHatWindow::sum_pk_pmk(fp, 2), 4).is_err());
    let small = ActionTable::rp(4, 0, 1);
    assert!(matches!(small.act_mono(&Mono::from_entries(&[2]), &[(0, 1)]), Err(SteenrodError::Incomplete(_))));
}

#[test]
fn window_action_is_associative() {
    let fp = f(2);
    let adem = Adem::new(fp);
    let m = ActionTable::rp(16, -20, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..40 {
        let (da, db) = (rng.gen_range(-2..=3), rng.gen_range(-2..=3));
        let x = rng.gen_range(0..5usize);
        let dx = x as i64 + 1;
        let k0 = dx + 1;
        let mk = |d: i64, k: i64, rng: &mut ChaCha8Rng| {
            let mut s = LinComb::zero(fp);
            for b in basis_bk(2, k, d, 2) {
                s.add_term(b, rng.gen_range(0..2));
            }
            BHatWindow::new(fp, d, k, 4, &s)
        };
        let a = mk(da, k0 + db.max(0) + 1, &mut rng);
        let b = mk(db, k0, &mut rng);
        let ab = bhat_multiply(&adem, &a, &b, k0).unwrap();
        let lhs = m.unstable_extension_act(&ab, x).unwrap();
        let mut rhs = std::collections::BTreeMap::new();
        for (y, c) in m.unstable_extension_act(&b, x).unwrap() {
            if dx + db < 1 {
                continue;
            }
            for (t, v) in m.unstable_extension_act(&a, y).unwrap() {
                *rhs.entry(t).or_insert(0u32) ^= c * v;
            }
        }
        let rhs: Vec<(usize, u32)> = rhs.into_iter().filter(|&(_, v)| v != 0).collect();
        assert_eq!(lhs, rhs);
    }
}
