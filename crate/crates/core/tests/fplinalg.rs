use std::collections::BTreeMap;

use opsteen::fplinalg::*;
use proptest::prelude::*;

fn f(p: u32) -> Field {
    Field::new(p).unwrap()
}

#[test]
fn field_rejects_composites() {
    assert!(Field::new(4).is_err());
    assert!(Field::new(1).is_err());
    assert!(Field::new(5).is_ok());
    assert_eq!(f(5).inv(2), 3);
    assert_eq!(f(3).sign(3), 2);
}

#[test]
fn rref_examples() {
    let id = FpMatrix::identity(f(2), 2).rref();
    assert_eq!(id.rank, 2);
    assert_eq!(id.pivot_cols, vec![0, 1]);
    let m = FpMatrix::from_triplets(f(2), 2, 2, &[(0, 0, 1), (0, 1, 1), (1, 0, 1), (1, 1, 1)]).unwrap();
    assert_eq!(m.rref().rank, 1);
    let m = FpMatrix::from_triplets(f(5), 2, 2, &[(0, 0, 1), (0, 1, 2), (1, 0, 2), (1, 1, 4)]).unwrap();
    let r = m.rref();
    assert_eq!(r.rank, 1);
    assert_eq!(r.pivot_cols, vec![0]);
    assert_eq!(r.reduced.get(0, 1), 2);
    assert_eq!(r.reduced.get(1, 1), 0);
}

#[test]
fn no_zero_entries_stored() {
    let m = FpMatrix::from_triplets(f(3), 2, 2, &[(0, 0, 1), (0, 0, 2), (1, 1, 3), (1, 0, -1)]).unwrap();
    assert_eq!(m.nnz(), 1);
    assert_eq!(m.get(1, 0), 2);
}

#[test]
fn json_round_trip() {
    let m = FpMatrix::from_triplets(f(3), 3, 2, &[(0, 0, 1), (2, 1, 2)]).unwrap();
    let j = serde_json::to_string(&m.to_json()).unwrap();
    let back = FpMatrix::from_json(&serde_json::from_str(&j).unwrap()).unwrap();
    assert_eq!(back, m);
    let c = ChainComplexFp::disk(f(3), Direction::Chain, 1, -1, 3).unwrap();
    let back = ChainComplexFp::from_json(&c.to_json()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn sphere_and_disk_homology() {
    for p in [2, 3, 5] {
        let s = ChainComplexFp::sphere(f(p), Direction::Chain, 2, -1, 5).unwrap();
        for d in 0..=4 {
            assert_eq!(s.betti(d).unwrap(), usize::from(d == 2));
        }
        let dk = ChainComplexFp::disk(f(p), Direction::Chain, 2, -1, 5).unwrap();
        for d in 0..=4 {
            assert_eq!(dk.betti(d).unwrap(), 0);
        }
        let sum = s.direct_sum(&dk).unwrap();
        for d in 0..=4 {
            assert_eq!(sum.betti(d).unwrap(), s.betti(d).unwrap());
        }
    }
}

#[test]
fn homology_outside_window_is_error() {
    let s = ChainComplexFp::sphere(f(2), Direction::Chain, 0, 0, 2).unwrap();
    assert!(matches!(s.homology(0), Err(LinalgError::OutOfWindow { .. })));
    assert!(s.homology(1).is_ok());
    assert!(s.basis(7).is_err());
}

#[test]
fn rejects_non_complex() {
    let field = f(2);
    let basis = vec![vec!["a".into()], vec!["b".into()], vec!["c".into()]];
    let mut diffs = BTreeMap::new();
    diffs.insert(1, FpMatrix::identity(field, 1));
    diffs.insert(2, FpMatrix::identity(field, 1));
    assert!(matches!(ChainComplexFp::new(field, Direction::Chain, 0, 2, basis, diffs), Err(LinalgError::NotAComplex(_))));
}

fn group_ring_complex(lo: i64, hi: i64) -> ChainComplexFp {
    let field = f(2);
    let basis = (lo..=hi).map(|d| vec![format!("1[{d}]"), format!("t[{d}]")]).collect();
    let mut diffs = BTreeMap::new();
    for d in lo + 1..=hi {
        diffs.insert(d, FpMatrix::from_triplets(field, 2, 2, &[(0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 1)]).unwrap());
    }
    ChainComplexFp::new(field, Direction::Chain, lo, hi, basis, diffs).unwrap()
}

#[test]
fn group_ring_with_norm_differential_is_acyclic() {
    let c = group_ring_complex(-4, 4);
    for d in -3..=3 {
        assert_eq!(c.betti(d).unwrap(), 0);
    }
}

#[test]
fn dagger_and_dual_of_spheres() {
    let s = ChainComplexFp::sphere(f(3), Direction::Chain, 3, 0, 5).unwrap();
    let t = s.dagger();
    assert_eq!(t.direction(), Direction::Cochain);
    assert_eq!(t.dim(-3).unwrap(), 1);
    assert_eq!(t.dagger(), s);
    let dual = s.dualize();
    assert_eq!(dual.direction(), Direction::Chain);
    assert_eq!(dual.window(), (-5, 0));
    assert_eq!(dual.betti(-3).unwrap(), 1);
    let dk = ChainComplexFp::disk(f(3), Direction::Chain, 2, -1, 4).unwrap().dualize();
    for d in -3..=0 {
        assert_eq!(dk.betti(d).unwrap(), 0);
    }
}

#[test]
fn classifier_detects_boundaries() {
    let c = group_ring_complex(0, 3);
    let h = c.homology(1).unwrap();
    assert_eq!(h.betti, 0);
    assert!(h.is_boundary(&[(0, 1), (1, 1)]).unwrap());
    assert!(h.classify(&[(0, 1)]).is_err());
    let s = ChainComplexFp::sphere(f(5), Direction::Cochain, 1, -1, 3).unwrap();
    let h = s.homology(1).unwrap();
    assert_eq!(h.classify(&[(0, 3)]).unwrap(), vec![3]);
}

fn random_complex(p: u32, dims: &[usize], seed: &[u32]) -> ChainComplexFp {
    let field = f(p);
    // build from a direct sum of spheres and disks, then conjugate by a unitriangular change of basis
    let lo = 0i64;
    let hi = dims.len() as i64 - 1;
    let mut c = ChainComplexFp::sphere(field, Direction::Chain, 0, lo, hi).unwrap();
    for (i, &k) in dims.iter().enumerate() {
        for j in 0..k {
            let n = (i as i64 + j as i64) % (hi + 1);
            let piece = if (seed[(i + j) % seed.len()] + j as u32) % 2 == 0 {
                ChainComplexFp::sphere(field, Direction::Chain, n, lo, hi).unwrap()
            } else {
                ChainComplexFp::disk(field, Direction::Chain, n, lo, hi).unwrap()
            };
            c = c.direct_sum(&piece).unwrap();
        }
    }
    let mut basis = Vec::new();
    let mut diffs = BTreeMap::new();
    let change = |d: i64| -> FpMatrix {
        let n = c.dim(d).unwrap();
        let mut t: Vec<(usize, usize, i64)> = (0..n).map(|i| (i, i, 1)).collect();
        for i in 0..n {
            for j in i + 1..n {
                let s = seed[(i * 7 + j * 3 + d as usize) % seed.len()];
                t.push((i, j, s as i64));
            }
        }
        FpMatrix::from_triplets(field, n, n, &t).unwrap()
    };
    let inverse = |m: &FpMatrix| -> FpMatrix {
        let n = m.rows();
        let mut cols = Vec::new();
        for j in 0..n {
            // solve m x = e_j by back substitution (upper unitriangular)
            let mut x = vec![0u32; n];
            for i in (0..n).rev() {
                let mut acc = if i == j { 1 } else { 0 };
                for k in i + 1..n {
                    acc = field.sub(acc, field.mul(m.get(i, k), x[k]));
                }
                x[i] = acc;
            }
            cols.push(dense_to_sparse(&x));
        }
        FpMatrix::from_columns(field, n, cols)
    };
    for d in lo..=hi {
        basis.push(c.basis(d).unwrap().to_vec());
    }
    for d in lo + 1..=hi {
        let a = change(d - 1);
        let b = inverse(&change(d));
        let m = a.compose(c.differential(d).unwrap()).unwrap().compose(&b).unwrap();
        diffs.insert(d, m);
    }
    ChainComplexFp::new(field, Direction::Chain, lo, hi, basis, diffs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_nullity(p in prop::sample::select(vec![2u32, 3, 5]), rows in 0usize..9, cols in 0usize..9,
                    entries in prop::collection::vec((0usize..9, 0usize..9, 0i64..5), 0..40)) {
        let trips: Vec<_> = entries.into_iter().filter(|e| e.0 < rows && e.1 < cols).collect();
        let m = FpMatrix::from_triplets(f(p), rows, cols, &trips).unwrap();
        let k = m.kernel_basis();
        prop_assert_eq!(m.rank() + k.len(), cols);
        for v in &k {
            prop_assert!(m.apply_sparse(v).is_empty());
        }
        prop_assert_eq!(m.transpose().rank(), m.rank());
        prop_assert_eq!(m.image_basis().len(), m.rank());
        let r = m.rref();
        prop_assert_eq!(r.rank, m.rank());
        for (i, &c) in r.pivot_cols.iter().enumerate() {
            prop_assert_eq!(r.reduced.get(i, c), 1);
            for i2 in 0..r.rank {
                if i2 != i {
                    prop_assert_eq!(r.reduced.get(i2, c), 0);
                }
            }
        }
    }

    #[test]
    fn compose_is_associative(p in prop::sample::select(vec![2u32, 3, 5]),
                              e in prop::collection::vec((0usize..4, 0usize..4, 0i64..5), 0..30)) {
        let field = f(p);
        let a = FpMatrix::from_triplets(field, 4, 4, &e[..e.len() / 3]).unwrap();
        let b = FpMatrix::from_triplets(field, 4, 4, &e[e.len() / 3..2 * e.len() / 3]).unwrap();
        let c = FpMatrix::from_triplets(field, 4, 4, &e[2 * e.len() / 3..]).unwrap();
        let l = a.compose(&b).unwrap().compose(&c).unwrap();
        let r = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert_eq!(l, r);
    }

    #[test]
    fn dual_homology_matches(p in prop::sample::select(vec![2u32, 3, 5]),
                             dims in prop::collection::vec(0usize..3, 5),
                             seed in prop::collection::vec(0u32..5, 11)) {
        let c = random_complex(p, &dims, &seed);
        let dual = c.dualize();
        for d in 1..=3i64 {
            prop_assert_eq!(c.betti(d).unwrap(), dual.betti(-d).unwrap());
            let h = c.homology(d).unwrap();
            prop_assert_eq!(h.betti, h.representatives.len());
            prop_assert_eq!(h.cycle_basis.len(), h.betti + h.boundary_basis.len());
        }
        prop_assert_eq!(c.dagger().dagger(), c.clone());
        let dd = dual.dualize();
        prop_assert_eq!(dd.window(), c.window());
        for d in 1..=4i64 {
            prop_assert_eq!(dd.differential(d).unwrap(), &c.differential(d).unwrap().scaled(-1));
        }
    }
}
