use fusion_core::combinat::{enumerate_dyck_paths, pairing_from_dyck, LocalShape, PairPartition};
use fusion_core::incidence::{arrow_relation, incidence_cached, incidence_matrix, invert_exact};
use std::collections::BTreeSet;

fn permutations(items: &[u32]) -> Vec<Vec<u32>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

/// The relation straight from its definition: re-pair the left endpoints of
/// `a` with a permutation of its right endpoints and look for `b`.
fn arrow_by_permutation(a: &PairPartition, b: &PairPartition) -> bool {
    let lefts: Vec<u32> = a.links().iter().map(|l| l.0).collect();
    let rights: Vec<u32> = a.links().iter().map(|l| l.1).collect();
    let target: BTreeSet<(u32, u32)> = b.links().iter().copied().collect();
    permutations(&rights).into_iter().any(|sigma| {
        let links: BTreeSet<(u32, u32)> =
            lefts.iter().zip(&sigma).map(|(&x, &y)| if x < y { (x, y) } else { (y, x) }).collect();
        links == target
    })
}

#[test]
fn arrow_relation_matches_definition() {
    for n in 1..=4 {
        let pairings: Vec<PairPartition> = enumerate_dyck_paths(n).unwrap().iter().map(pairing_from_dyck).collect();
        for a in &pairings {
            for b in &pairings {
                assert_eq!(arrow_relation(a, b).unwrap(), arrow_by_permutation(a, b), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn small_cases() {
    let flat = PairPartition::new(vec![(1, 2), (3, 4)]).unwrap();
    let nest = PairPartition::new(vec![(1, 4), (2, 3)]).unwrap();
    assert!(arrow_relation(&flat, &nest).unwrap());
    assert!(!arrow_relation(&nest, &flat).unwrap());
    assert!(arrow_relation(&nest, &nest).unwrap());
    let one = incidence_matrix(1).unwrap();
    assert_eq!((one.m(0, 0), one.inv(0, 0)), (1, 1));
    let two = incidence_matrix(2).unwrap();
    assert_eq!(two.pairings(), &[flat, nest]);
    assert_eq!([two.m(0, 0), two.m(0, 1), two.m(1, 0), two.m(1, 1)], [1, 1, 0, 1]);
    assert_eq!([two.inv(0, 0), two.inv(0, 1), two.inv(1, 0), two.inv(1, 1)], [1, -1, 0, 1]);
}

#[test]
fn inverse_is_exact_up_to_n6() {
    for n in 1..=6 {
        let inc = incidence_cached(n).unwrap();
        let d = inc.dim();
        assert_eq!(d as u128, fusion_core::combinat::catalan(n));
        for i in 0..d {
            assert_eq!(inc.m(i, i), 1);
            assert!((0..d).all(|j| matches!(inc.m(i, j), 0 | 1)));
            for j in 0..d {
                let s: i64 = (0..d).map(|k| inc.m(i, k) * inc.inv(k, j)).sum();
                assert_eq!(s, i64::from(i == j), "N={n} ({i},{j})");
            }
        }
    }
}

/// Gauss-Jordan elimination with partial pivoting in floating point, as an
/// independent check on the exact integer inverse.
fn float_inverse(a: &[i64], d: usize) -> Vec<f64> {
    let mut m: Vec<f64> = a.iter().map(|&x| x as f64).collect();
    let mut inv = vec![0.0; d * d];
    for i in 0..d {
        inv[i * d + i] = 1.0;
    }
    for c in 0..d {
        let p = (c..d).max_by(|&x, &y| m[x * d + c].abs().total_cmp(&m[y * d + c].abs())).unwrap();
        for k in 0..d {
            m.swap(c * d + k, p * d + k);
            inv.swap(c * d + k, p * d + k);
        }
        let piv = m[c * d + c];
        for k in 0..d {
            m[c * d + k] /= piv;
            inv[c * d + k] /= piv;
        }
        for r in 0..d {
            if r != c {
                let f = m[r * d + c];
                for k in 0..d {
                    m[r * d + k] -= f * m[c * d + k];
                    inv[r * d + k] -= f * inv[c * d + k];
                }
            }
        }
    }
    inv
}

#[test]
fn inverse_agrees_with_floating_elimination() {
    for n in 1..=4 {
        let inc = incidence_cached(n).unwrap();
        let d = inc.dim();
        let m: Vec<i64> = (0..d * d).map(|k| inc.m(k / d, k % d)).collect();
        let f = float_inverse(&m, d);
        for i in 0..d {
            for j in 0..d {
                assert!((f[i * d + j] - inc.inv(i, j) as f64).abs() < 1e-9);
            }
        }
        assert_eq!(invert_exact(&m, d).unwrap(), (0..d * d).map(|k| inc.inv(k / d, k % d)).collect::<Vec<_>>());
    }
}

#[test]
fn inverse_support_and_sign_flips() {
    for n in 1..=5 {
        let inc = incidence_cached(n).unwrap();
        let paths = inc.paths();
        for (i, a) in paths.iter().enumerate() {
            for (j, b) in paths.iter().enumerate() {
                assert_eq!(inc.inv(i, j) != 0, a.leq(b).unwrap());
                for pos in 1..2 * n {
                    if a.local_shape(pos).unwrap() == LocalShape::Max || b.local_shape(pos).unwrap() != LocalShape::Min {
                        continue;
                    }
                    let up = b.flip_min_to_max(pos).unwrap();
                    assert_eq!(a.leq(b).unwrap(), a.leq(&up).unwrap());
                    let u = inc.index_of(&up).unwrap();
                    if a.leq(b).unwrap() {
                        assert_eq!(inc.inv(i, j), -inc.inv(i, u));
                    }
                }
            }
        }
    }
}

#[test]
fn rows_follow_lexicographic_path_order() {
    let inc = incidence_cached(4).unwrap();
    assert!(inc.paths().windows(2).all(|w| w[0] < w[1]));
    for (k, p) in inc.pairings().iter().enumerate() {
        assert_eq!(inc.index_of_pairing(p), Some(k));
        assert_eq!(&pairing_from_dyck(&inc.paths()[k]), p);
    }
    assert!((0..inc.dim()).all(|i| (0..inc.dim()).map(|j| inc.m(i, j)).sum::<i64>() >= 1));
}
