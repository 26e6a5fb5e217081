use opsteen::actions::*;
use opsteen::fplinalg::{Field, LinComb};
use opsteen::operads::*;
use opsteen::simplicial::*;
use opsteen::spectra::*;
use opsteen::stabilization::{CanonicalE, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn f2() -> Field {
    Field::new(2).unwrap()
}

fn rank_table(e: &Spectrum, lo: i64, hi: i64) -> SpectralChains {
    spectral_chains_f2(e, lo, hi).unwrap()
}

#[test]
fn p0_is_identity_on_suspension_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let s = BasedSimplicialSet::random(&mut rng, 5, 2, 5).unwrap();
        let e = suspension_spectrum(&s, 0, 2, 5).unwrap();
        let ch = rank_table(&e, 0, 2);
        for q in 0..=2 {
            let t = stable_p(&ch, &e, 0, q).unwrap();
            assert!(t.is_identity(), "q={q} {t:?}");
        }
    }
}

#[test]
fn steenrod_squares_on_hf2() {
    let e = em_spectrum(f2(), 0, 3, 6, 1 << 20).unwrap();
    let ch = rank_table(&e, 0, 2);
    assert!(!ch.approximate());
    for q in 0..=2 {
        assert!(stable_p(&ch, &e, 0, q).unwrap().is_identity(), "P^0 on H^{q}");
    }
    assert_eq!(stable_p(&ch, &e, 1, 0).unwrap().rank, 1);
    assert_eq!(stable_p(&ch, &e, 1, 1).unwrap().rank, 0);
    assert_eq!(stable_p(&ch, &e, 2, 0).unwrap().rank, 1);
}

#[test]
fn sq1_on_rp2_plus() {
    for levels in 1..=2 {
        let e = suspension_spectrum(&BasedSimplicialSet::rp2_plus(3 + levels).unwrap(), 0, levels, 3 + levels).unwrap();
        let ch = rank_table(&e, 0, 2);
        let t = stable_p(&ch, &e, 1, 1).unwrap();
        assert_eq!((t.columns.len(), t.rank), (1, 1), "levels {levels}");
    }
    // oracle 1: cup-1 on the space Σ(RP²_+), Sq^1 on H^2
    let srp = kan_suspension(&BasedSimplicialSet::rp2_plus(3).unwrap()).unwrap();
    let sp = space_spectrum(&srp);
    let ch = rank_table(&sp, 1, 3);
    let t = surjection_square(&ch, &sp, &Surjection::new(2, vec![1, 2, 1]).unwrap(), 2).unwrap();
    assert_eq!((t.source_degree, t.target_degree, t.rank), (2, 3, 1));
    // oracle 2: the cup square on RP²
    let rp = BasedSimplicialSet::rp2_plus(3).unwrap();
    let sp = space_spectrum(&rp);
    let ch = rank_table(&sp, 0, 2);
    assert_eq!(surjection_square(&ch, &sp, &Surjection::new(2, vec![1, 2]).unwrap(), 1).unwrap().rank, 1);
    assert_eq!(unstable_p(&ch, &sp, 1, 1).unwrap().rank, 1);
}

#[test]
fn unstable_operations_are_unstable() {
    let rp = BasedSimplicialSet::rp2_plus(4).unwrap();
    let sp = space_spectrum(&rp);
    let ch = rank_table(&sp, 0, 3);
    for q in 0..=1 {
        for s in q + 1..=3 - q {
            let t = unstable_p(&ch, &sp, s, q).unwrap();
            assert_eq!(t.rank, 0, "P^{s} on H^{q}");
        }
    }
    assert!(unstable_p(&ch, &sp, 0, 1).unwrap().is_identity());
}

#[test]
fn coaction_is_a_chain_map() {
    let field = f2();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let s = BasedSimplicialSet::random(&mut rng, 5, 2, 5).unwrap();
    let e = suspension_spectrum(&s, 0, 2, 5).unwrap();
    let lvl = &e.levels[2];
    for d in [-1i64, 0, 1, 2] {
        let alpha = CanonicalE::new(d, Side::Stable).tower(field, 2).unwrap();
        let ms = as_surjections(&alpha.component(field, 2).unwrap());
        let dms = ms_differential(&ms);
        for dim in 1..=4 {
            for x in lvl.nondegenerate(dim) {
                let lhs = tensor_boundary(field, lvl, &coact(field, &alpha, &e, 2, dim, x).unwrap());
                let mut rhs = aw_evaluate_elt(&dms, lvl, dim, x);
                for (y, c) in simplex_boundary(lvl, dim, x) {
                    rhs.add_scaled(&aw_evaluate_elt(&ms, lvl, dim - 1, y), field.reduce(c));
                }
                assert_eq!(lhs, rhs, "d={d} dim={dim}");
            }
        }
    }
}

#[test]
fn coaction_is_compatible_with_structure_maps() {
    let field = f2();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let s = BasedSimplicialSet::random(&mut rng, 5, 2, 5).unwrap();
        let e = suspension_spectrum(&s, 0, 3, 5).unwrap();
        for d in [-1i64, 0, 1] {
            let alpha = CanonicalE::new(d, Side::Stable).tower(field, 3).unwrap();
            for n in 1..3usize {
                if (n as i64) < d {
                    continue;
                }
                for dim in 0..=3 {
                    for x in e.levels[n].nondegenerate(dim) {
                        let here = push_tensor(&e, n, &coact(field, &alpha, &e, n, dim, x).unwrap());
                        let there = match e.push_up(n, dim, x) {
                            Some(y) => coact(field, &alpha, &e, n + 1, dim + 1, y).unwrap(),
                            None => LinComb::zero(field),
                        };
                        assert_eq!(here, there, "d={d} n={n} dim={dim}");
                    }
                }
            }
        }
    }
}

#[test]
fn arity2_coaction_of_e0_is_the_diagonal() {
    let field = f2();
    let s = BasedSimplicialSet::rp2_plus(3).unwrap();
    let e = suspension_spectrum(&s, 0, 0, 3).unwrap();
    let alpha = CanonicalE::new(0, Side::Stable).tower(field, 0).unwrap();
    let diag = Surjection::new(2, vec![1, 2]).unwrap();
    for x in s.nondegenerate(0) {
        let c = coact(field, &alpha, &e, 0, 0, x).unwrap();
        assert_eq!(c, aw_evaluate(field, &diag, &s, 0, x));
        assert_eq!(c.len(), 1);
    }
}

#[test]
fn stable_operations_are_well_defined_and_additive() {
    let field = f2();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut tested = 0;
    while tested < 5 {
        let s = BasedSimplicialSet::random(&mut rng, 6, 2, 5).unwrap();
        let e = suspension_spectrum(&s, 0, 2, 5).unwrap();
        let ch = rank_table(&e, 0, 2);
        let h = WindowCohomology::new(&ch, 1).unwrap();
        if h.dim() < 2 {
            continue;
        }
        tested += 1;
        let comp = CanonicalE::new(0, Side::Stable).component(field, 2).unwrap();
        let ms = tr(&comp);
        let tgt = WindowCohomology::new(&ch, 1).unwrap();
        let nprev = ch.complex.dim(0).unwrap();
        for a in &h.cocycles {
            let b = random_cochain(field, nprev, &mut rng);
            let a2 = add_cochains(field, a, &WindowCohomology::coboundary(&ch, 1, &b).unwrap());
            let x = tgt.classify(field, &square_cochain(&ch, &e, &ms, 1, 1, a).unwrap()).unwrap();
            let y = tgt.classify(field, &square_cochain(&ch, &e, &ms, 1, 1, &a2).unwrap()).unwrap();
            assert_eq!(x, y);
        }
        let (a, b) = (&h.cocycles[0], &h.cocycles[1]);
        let sum = add_cochains(field, a, b);
        let pa = tgt.classify(field, &square_cochain(&ch, &e, &ms, 1, 1, a).unwrap()).unwrap();
        let pb = tgt.classify(field, &square_cochain(&ch, &e, &ms, 1, 1, b).unwrap()).unwrap();
        let pab = tgt.classify(field, &square_cochain(&ch, &e, &ms, 1, 1, &sum).unwrap()).unwrap();
        assert_eq!(pab, add_cochains(field, &pa, &pb));
    }
}

#[test]
fn operations_are_natural() {
    let field = f2();
    let big = BasedSimplicialSet::rp2_plus(4).unwrap();
    let facets = BasedSimplicialSet::rp2_facets();
    let small = BasedSimplicialSet::from_complex(6, &facets[1..], &[], 4).unwrap();
    let table = (0..=4).map(|d| (0..small.count(d)).map(|x| big.index_of(d, &small.label(d, x)).unwrap()).collect()).collect();
    let g = SimplexMap::new(small.clone(), big.clone(), table).unwrap();
    let f = SpectrumMap::suspension(&g, 0, 1, 4).unwrap();
    let cs = rank_table(&f.source, 0, 2);
    let ct = rank_table(&f.target, 0, 2);
    for (s, q) in [(0, 1), (1, 1), (0, 0), (0, 2)] {
        let comp = CanonicalE::new(s - q, Side::Stable).component(field, 1).unwrap();
        let ms = tr(&comp);
        let ht = WindowCohomology::new(&ct, q).unwrap();
        let hs_out = WindowCohomology::new(&cs, q + s).unwrap();
        for a in &ht.cocycles {
            let up = pull_back(&f, &cs, &ct, q + s, &square_cochain(&ct, &f.target, &ms, q, q + s, a).unwrap());
            let down = square_cochain(&cs, &f.source, &ms, q, q + s, &pull_back(&f, &cs, &ct, q, a)).unwrap();
            assert_eq!(hs_out.classify(field, &up).unwrap(), hs_out.classify(field, &down).unwrap(), "P^{s} on H^{q}");
        }
    }
}

#[test]
fn window_errors() {
    let e = suspension_spectrum(&BasedSimplicialSet::rp2_plus(3).unwrap(), 0, 1, 3).unwrap();
    let ch = rank_table(&e, 0, 1);
    assert!(matches!(stable_p(&ch, &e, 2, 0), Err(ActionError::Window(_))));
    assert!(matches!(stable_p(&ch, &e, 3, -1), Err(ActionError::Window(_))));
}

#[test]
fn free_algebra_matches_monomial_basis() {
    for q in [0i64, 1, 2] {
        for k in 0..=2 {
            let r = free_algebra_truncation_h(f2(), q, k, 4, 1 << 20).unwrap();
            assert_eq!(r.matches, Some(true), "q={q} k={k}: {:?}", r.arities);
        }
    }
    let r = free_algebra_truncation_h(f2(), 3, 0, 2, 1 << 20).unwrap();
    let labels: Vec<&str> = r.predicted.as_ref().unwrap().iter().filter(|c| c.arity == 2).map(|c| c.label.as_str()).collect();
    assert_eq!(&labels[..4], &["c·c", "P^2 c", "P^1 c", "P^0 c"]);
    let odd = free_algebra_truncation_h(Field::new(3).unwrap(), 1, 0, 3, 1 << 20).unwrap();
    assert!(odd.matches.is_none());
    assert_eq!(odd.arities[3].dims.iter().map(|x| x.2).sum::<usize>() > 0, true);
}

#[test]
fn shifted_instability() {
    let field = f2();
    for q in 0..=2i64 {
        for k in 0..=2usize {
            for s in q + k as i64 - 4..=q + k as i64 + 3 {
                let op = free_algebra_operation(field, q, k, s).unwrap();
                assert_eq!(op.nonzero, s <= q + k as i64, "{op:?}");
            }
        }
        assert!(free_algebra_operation(field, q, 2, q + 1).unwrap().nonzero);
        assert!(!free_algebra_operation(field, q, 0, q + 1).unwrap().nonzero);
    }
}

#[test]
fn products_disappear() {
    let r = product_disappearance(f2(), 1, 4, 2, 1 << 20).unwrap();
    assert!(r.psi_kills_e0 && r.d_e0_st_nonzero);
    assert!(r.products_killed, "{:?}", r.tower_maps);
    let units: Vec<_> = r.tower_maps.iter().flat_map(|(_, v)| v.iter().filter(|m| m.arity == 0)).collect();
    assert!(units.iter().all(|m| m.rank == 0));
}

#[test]
fn additivity_shadow() {
    let levels = |j: usize| if j == 2 { 3 } else { 2 };
    let r = additivity_check(f2(), &[2, 3], (0, 1), &levels, 1 << 20).unwrap();
    assert!(r.mixed_vanish, "{:?}", r.towers);
    assert!(r.extremes_match, "{:?}", r.towers);
    assert!(r.additive);
}
