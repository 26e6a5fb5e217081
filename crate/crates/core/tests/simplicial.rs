use opsteen::fplinalg::Field;
use opsteen::simplicial::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn f2() -> Field {
    Field::new(2).unwrap()
}

#[test]
fn standard_simplex_counts() {
    let p = BasedSimplicialSet::standard_simplex(0, 3).unwrap();
    assert_eq!(p.nondegenerate_counts(true), vec![1, 0, 0, 0]);
    let t = BasedSimplicialSet::standard_simplex(2, 4).unwrap();
    t.validate().unwrap();
    assert_eq!(&t.nondegenerate_counts(true)[..3], &[3, 3, 1]);
    let d1 = BasedSimplicialSet::standard_simplex_plus(1, 2).unwrap();
    // three one-simplices of Δ_1 plus the basepoint's degeneracy
    assert_eq!(d1.count(1), 4);
    assert_eq!((0..4).filter(|&x| d1.is_degenerate(1, x)).count(), 3);
}

#[test]
fn operator_application_matches_tables() {
    let s = BasedSimplicialSet::standard_simplex_plus(3, 5).unwrap();
    for d in 1..=5 {
        for x in 0..s.count(d) {
            for i in 0..=d {
                assert_eq!(s.apply_op(d, x, &coface(d, i)), s.face(d, x, i));
            }
            if d < 5 {
                for i in 0..=d {
                    assert_eq!(s.apply_op(d, x, &codegeneracy(d, i)), s.degen(d, x, i));
                }
            }
        }
    }
    let x = s.index_of(3, "(0,1,2,3)").unwrap();
    let y = s.apply_op(3, x, &[1, 1, 3]);
    assert_eq!(s.label(2, y), "(1,1,3)");
}

#[test]
fn cone_of_simplex_is_simplex() {
    for d in 0..=2 {
        let cutoff = 4;
        let c = cone(&BasedSimplicialSet::standard_simplex_plus(d, cutoff).unwrap()).unwrap();
        c.validate().unwrap();
        let target = BasedSimplicialSet::standard_simplex(d + 1, cutoff).unwrap();
        // (j, x) ↦ 0…0 followed by x+1
        let table: Vec<Vec<usize>> = (0..=cutoff)
            .map(|e| {
                (0..c.count(e))
                    .map(|id| {
                        let label = c.label(e, id);
                        if label == "*" {
                            return target.basepoint(e);
                        }
                        let inner = &label[1..label.len() - 1];
                        let (j, rest) = inner.split_once(',').unwrap();
                        let j: usize = j.parse().unwrap();
                        let vals: Vec<usize> = rest[1..rest.len() - 1].split(',').map(|v| v.parse::<usize>().unwrap() + 1).collect();
                        let mut seq = vec![0; e - j];
                        seq.extend(vals);
                        target.index_of(e, &tuple_label(&seq)).unwrap()
                    })
                    .collect()
            })
            .collect();
        let m = SimplexMap::new(c, target, table).unwrap();
        assert!(m.is_bijective());
    }
    let pt = BasedSimplicialSet::point(3).unwrap();
    let c = cone(&pt).unwrap();
    assert!((0..=3).all(|e| c.count(e) == 1));
}

#[test]
fn suspension_faces_and_nondegenerates() {
    let s = BasedSimplicialSet::rp2_plus(3).unwrap();
    let sig = kan_suspension(&s).unwrap();
    sig.validate().unwrap();
    assert_eq!(sig.count(0), 1);
    for d in 1..=4 {
        assert_eq!(sig.nondegenerate(d).len(), s.nondegenerate(d - 1).len());
        for x in s.nondegenerate(d - 1) {
            let id = sig.index_of(d, &format!("({},{})", d - 1, s.label(d - 1, x))).unwrap();
            assert_eq!(sig.face(d, id, 0), 0);
            for i in 1..=d {
                let expect = if d == 1 {
                    0
                } else {
                    let y = s.face(d - 1, x, i - 1);
                    if y == s.basepoint(d - 2) {
                        0
                    } else {
                        sig.index_of(d - 1, &format!("({},{})", d - 2, s.label(d - 2, y))).unwrap()
                    }
                };
                assert_eq!(sig.face(d, id, i), expect);
            }
        }
    }
}

#[test]
fn loop_of_point() {
    let pt = BasedSimplicialSet::point(3).unwrap();
    let om = moore_loop(&pt).unwrap();
    assert!((0..=2).all(|d| om.count(d) == 1));
    assert!(moore_loop(&BasedSimplicialSet::point(0).unwrap()).is_err());
}

#[test]
fn chains_of_simplex_and_rp2() {
    for p in [2, 3] {
        let field = Field::new(p).unwrap();
        let c = normalized_chains(&BasedSimplicialSet::standard_simplex_plus(3, 4).unwrap(), field).unwrap();
        assert_eq!(c.betti(0).unwrap(), 1);
        for d in 1..=3 {
            assert_eq!(c.betti(d).unwrap(), 0);
        }
        let r = normalized_chains(&BasedSimplicialSet::rp2(3).unwrap(), field).unwrap();
        let expect = if p == 2 { [0, 1, 1] } else { [0, 0, 0] };
        for d in 0..=2 {
            assert_eq!(r.betti(d as i64).unwrap(), expect[d]);
        }
    }
}

#[test]
fn json_round_trip() {
    let s = BasedSimplicialSet::rp2(2).unwrap();
    let j = serde_json::to_string(&s.to_json()).unwrap();
    let back = BasedSimplicialSet::from_json(&serde_json::from_str(&j).unwrap()).unwrap();
    assert_eq!(back, s);
    let mut bad = s.to_json();
    bad.faces[2][1].swap(0, 2);
    assert!(BasedSimplicialSet::from_json(&bad).is_err());
}

#[test]
fn points_map_suspends_injectively() {
    let two = BasedSimplicialSet::points_plus(2, 2).unwrap();
    let three = BasedSimplicialSet::points_plus(3, 2).unwrap();
    let table = (0..=2).map(|d| (0..two.count(d)).map(|x| three.index_of(d, &two.label(d, x)).unwrap()).collect()).collect();
    let m = SimplexMap::new(two, three, table).unwrap();
    assert!(m.is_injective());
    let sm = m.suspend().unwrap();
    assert!(sm.is_injective());
    assert!(!sm.is_bijective());
}

#[test]
fn random_sets_satisfy_adjunction_and_chain_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..12 {
        let s = BasedSimplicialSet::random(&mut rng, 5, 2, 4).unwrap();
        s.validate().unwrap();
        let sig = kan_suspension(&s).unwrap();
        sig.validate().unwrap();
        let u = unit_map(&s).unwrap();
        assert!(u.is_bijective());
        let c = counit_map(&s).unwrap();
        assert!(c.is_injective());
        let cs = normalized_chains(&s, f2()).unwrap();
        let csig = normalized_chains(&sig, f2()).unwrap();
        for d in 0..=s.cutoff() as i64 {
            assert_eq!(cs.dim(d).unwrap(), csig.dim(d + 1).unwrap());
        }
        for d in 1..=s.cutoff() as i64 {
            assert_eq!(csig.differential(d + 1).unwrap(), &cs.differential(d).unwrap().scaled(-1));
        }
    }
}
