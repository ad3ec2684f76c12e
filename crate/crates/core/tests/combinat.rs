use fusion_core::combinat::*;
use proptest::prelude::*;
use std::collections::BTreeSet;

/// All ±1 walks of length 2n that stay non-negative and return to zero,
/// found by scanning every step sequence.
fn brute_force_dyck(n: usize) -> BTreeSet<Vec<u32>> {
    let mut out = BTreeSet::new();
    for bits in 0u32..(1 << (2 * n)) {
        let mut h = vec![0i32];
        for k in 0..2 * n {
            h.push(h[k] + if bits >> k & 1 == 1 { 1 } else { -1 });
        }
        if h.iter().all(|&x| x >= 0) && h[2 * n] == 0 {
            out.insert(h.iter().map(|&x| x as u32).collect());
        }
    }
    out
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn dyck_counts_match_brute_force_and_catalan() {
    for n in 0..=8 {
        let paths = enumerate_dyck_paths(n).unwrap();
        assert_eq!(paths.len() as u128, binomial(2 * n as u128, n as u128) / (n as u128 + 1), "N={n}");
        assert_eq!(catalan(n), paths.len() as u128);
        if n <= 6 {
            let listed: BTreeSet<Vec<u32>> = paths.iter().map(|d| d.heights().to_vec()).collect();
            assert_eq!(listed, brute_force_dyck(n));
        }
        assert!(paths.windows(2).all(|w| w[0] < w[1]), "lexicographic order");
    }
}

#[test]
fn pairing_bijection_exhaustive() {
    for n in 1..=6 {
        let mut seen = BTreeSet::new();
        for d in enumerate_dyck_paths(n).unwrap() {
            let p = pairing_from_dyck(&d);
            assert!(p.is_planar());
            assert_eq!(dyck_from_pairing(&p).unwrap(), d);
            assert!(seen.insert(p));
        }
    }
}

#[test]
fn leq_is_a_partial_order() {
    for n in 1..=5 {
        let p = enumerate_dyck_paths(n).unwrap();
        for a in &p {
            assert!(a.leq(a).unwrap());
            for b in &p {
                if a.leq(b).unwrap() && b.leq(a).unwrap() {
                    assert_eq!(a, b);
                }
                for c in &p {
                    if a.leq(b).unwrap() && b.leq(c).unwrap() {
                        assert!(a.leq(c).unwrap());
                    }
                }
            }
        }
    }
}

#[test]
fn valley_flips_raise_one_height() {
    for n in 1..=6 {
        for d in enumerate_dyck_paths(n).unwrap() {
            for j in 1..2 * n {
                let shape = d.local_shape(j).unwrap();
                match shape {
                    LocalShape::Min => {
                        let up = d.flip_min_to_max(j).unwrap();
                        assert!(d.leq(&up).unwrap() && d != up);
                        assert_eq!(up.local_shape(j).unwrap(), LocalShape::Max);
                        for k in 0..=2 * n {
                            if k != j {
                                assert_eq!(up.height(k), d.height(k));
                            }
                        }
                        assert_eq!(up.height(j), d.height(j) + 2);
                    }
                    _ => assert!(d.flip_min_to_max(j).is_err()),
                }
                if shape != LocalShape::Slope {
                    assert_eq!(d.remove_extremum(j).unwrap().len(), 2 * n - 2);
                }
            }
        }
    }
}

/// Loopless multigraphs on 2n points of the circle, every vertex of degree
/// two, whose chords pairwise do not cross.
fn brute_force_valence_two(n: usize) -> BTreeSet<Vec<(u32, u32)>> {
    let m = 2 * n;
    let pairs: Vec<(u32, u32)> =
        (1..=m as u32).flat_map(|a| (a + 1..=m as u32).map(move |b| (a, b))).collect();
    fn crosses(&(a, b): &(u32, u32), &(c, d): &(u32, u32)) -> bool {
        (a < c && c < b && b < d) || (c < a && a < d && d < b)
    }
    fn rec(
        k: usize,
        pairs: &[(u32, u32)],
        deg: &mut Vec<u32>,
        chosen: &mut Vec<(u32, u32)>,
        out: &mut BTreeSet<Vec<(u32, u32)>>,
    ) {
        if k == pairs.len() {
            if deg[1..].iter().all(|&d| d == 2) {
                out.insert(chosen.clone());
            }
            return;
        }
        let (a, b) = pairs[k];
        rec(k + 1, pairs, deg, chosen, out);
        if chosen.iter().any(|c| crosses(c, &(a, b))) {
            return;
        }
        for mult in 1..=2 {
            if deg[a as usize] + mult > 2 || deg[b as usize] + mult > 2 {
                break;
            }
            deg[a as usize] += mult;
            deg[b as usize] += mult;
            for _ in 0..mult {
                chosen.push((a, b));
            }
            rec(k + 1, pairs, deg, chosen, out);
            for _ in 0..mult {
                chosen.pop();
            }
            deg[a as usize] -= mult;
            deg[b as usize] -= mult;
        }
    }
    let mut out = BTreeSet::new();
    rec(0, &pairs, &mut vec![0; m + 1], &mut Vec::new(), &mut out);
    out
}

#[test]
fn valence_two_patterns_match_brute_force() {
    for (n, count) in [(1, 1), (2, 3), (3, 15)] {
        assert_eq!(enumerate_link_patterns(&valence_two(n)).unwrap().len(), count);
    }
    for n in 1..=4 {
        let listed: BTreeSet<Vec<(u32, u32)>> =
            enumerate_link_patterns(&valence_two(n)).unwrap().iter().map(|p| p.links().to_vec()).collect();
        assert_eq!(listed, brute_force_valence_two(n), "N={n}");
    }
}

#[test]
fn tau_is_planar_injective_and_inverted_by_merging() {
    for n in 1..=4 {
        let mut images = BTreeSet::new();
        for lp in enumerate_link_patterns(&valence_two(n)).unwrap() {
            let t = tau(&lp).unwrap();
            assert!(t.is_planar());
            assert_eq!(t.num_points(), 4 * n);
            assert_eq!(LinkPattern::from_split(&t, lp.valence()).unwrap(), lp);
            // No link joins the two halves of a split point.
            assert!((1..=2 * n as u32).all(|i| !t.contains(2 * i - 1, 2 * i)));
            assert!(images.insert(t));
        }
    }
}

#[test]
fn tau_is_identity_at_valence_one() {
    for n in 1..=5 {
        for lp in enumerate_link_patterns(&vec![1; 2 * n]).unwrap() {
            assert_eq!(tau(&lp).unwrap().links(), lp.links());
        }
    }
}

#[test]
fn crossing_and_malformed_inputs_are_rejected() {
    assert!(PairPartition::new(vec![(1, 3), (2, 4)]).map(|p| p.is_planar()) != Ok(true));
    assert!(PairPartition::new(vec![(1, 2), (2, 3)]).is_err());
    assert!(DyckPath::new(vec![0, 1, 2]).is_err());
    assert!(DyckPath::new(vec![0, 2, 0]).is_err());
    assert!(LinkPattern::new(vec![2; 4], vec![(1, 3), (1, 3), (2, 4), (2, 4)]).is_err());
    assert!(LinkPattern::new(vec![2; 4], vec![(1, 2), (1, 2), (3, 4)]).is_err());
    assert!(matches!(enumerate_dyck_paths(20), Err(fusion_core::Error::Capacity { .. })));
}

fn arb_dyck(max_n: usize) -> impl Strategy<Value = DyckPath> {
    (1..=max_n).prop_flat_map(|n| {
        let all = enumerate_dyck_paths(n).unwrap();
        (0..all.len()).prop_map(move |i| all[i].clone())
    })
}

proptest! {
    #[test]
    fn steps_round_trip(d in arb_dyck(7)) {
        prop_assert_eq!(DyckPath::from_steps(&d.steps()).unwrap(), d.clone());
        prop_assert_eq!(dyck_from_pairing(&d.to_pairing()).unwrap(), d);
    }

    #[test]
    fn shapes_are_exhaustive(d in arb_dyck(7)) {
        for j in 1..d.len() {
            let (l, m, r) = (d.height(j - 1), d.height(j), d.height(j + 1));
            let expected = if m > l && m > r {
                LocalShape::Max
            } else if m < l && m < r {
                LocalShape::Min
            } else {
                LocalShape::Slope
            };
            prop_assert_eq!(d.local_shape(j).unwrap(), expected);
        }
    }

    #[test]
    fn pairing_links_are_up_down_matches(d in arb_dyck(7)) {
        let p = pairing_from_dyck(&d);
        for &(a, b) in p.links() {
            prop_assert_eq!(d.step(a as usize), 1);
            prop_assert_eq!(d.step(b as usize), -1);
            prop_assert_eq!(d.height(a as usize - 1), d.height(b as usize));
            prop_assert_eq!(p.partner(a), b);
        }
    }
}
