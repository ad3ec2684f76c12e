use fusion_core::combinat::LinkPattern;
use fusion_core::probability::RectanglePolygon;
use fusion_sim::cluster::{edge_open_probability, edges, extract_pattern, percolate, UnionFind};
use fusion_sim::field::{harmonic_extension, sample_zero_boundary_gff, LatticeField};
use fusion_sim::lattice::{LatticeSpec, Site};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn lp(links: &[(u32, u32)]) -> LinkPattern {
    LinkPattern::new(vec![2; 4], links.to_vec()).unwrap()
}

fn square(cells: usize) -> LatticeSpec {
    LatticeSpec::new(&RectanglePolygon::corners(1.0).unwrap(), cells).unwrap()
}

/// Boundary at `±big`, interior from `interior(i, j)`.
fn field_with(spec: &LatticeSpec, big: f64, interior: impl Fn(usize, usize) -> f64) -> LatticeField {
    let (wx, wy) = spec.cells();
    let mut values = vec![0.0; spec.num_vertices()];
    for j in 0..=wy {
        for i in 0..=wx {
            values[spec.index(i, j)] = match spec.site(i, j) {
                Site::Interior => interior(i, j),
                _ => spec.boundary_value(i, j, big),
            };
        }
    }
    LatticeField { values }
}

#[test]
fn positive_field_joins_positive_arcs() {
    let spec = square(6);
    // Edge probabilities are 1 − e^{−200}: every same-sign edge opens.
    let f = field_with(&spec, 10.0, |_, _| 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut c = percolate(&f, &spec, &mut rng);
    assert_eq!(c.arc_partition(true), vec![vec![1, 3]]);
    assert_eq!(c.arc_partition(false), vec![vec![2], vec![4]]);
    assert_eq!(extract_pattern(&mut c, &spec).unwrap(), lp(&[(1, 4), (1, 4), (2, 3), (2, 3)]));
}

#[test]
fn toy_two_by_two_field() {
    // Interior (1,1)…(2,2); the lower-left vertex is negative.
    let spec = square(3);
    let f = field_with(&spec, 100.0, |i, j| if (i, j) == (1, 1) { -100.0 } else { 100.0 });
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut c = percolate(&f, &spec, &mut rng);
    // Positive: (1,2), (2,1), (2,2) meet the left arc through (0,2) and the
    // right arc through (3,1), (3,2). Negative: (1,1) meets the bottom only.
    assert_eq!(c.arc_partition(true), vec![vec![1, 3]]);
    assert_eq!(c.arc_partition(false), vec![vec![2], vec![4]]);
    let idx = |i: usize, j: usize| (i - 1) + 2 * (j - 1);
    assert_eq!(c.uf.find(idx(1, 1)), c.uf.find(c.arc_node(2)));
    assert_ne!(c.uf.find(idx(1, 1)), c.uf.find(idx(1, 2)));
    assert_eq!(c.open.iter().filter(|&&o| o).count(), 6);
}

#[test]
fn zero_field_gives_singletons_and_ring() {
    let spec = square(5);
    let f = field_with(&spec, 1.0, |_, _| 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut c = percolate(&f, &spec, &mut rng);
    assert!(c.open.iter().all(|&o| !o));
    assert_eq!(extract_pattern(&mut c, &spec).unwrap(), lp(&[(1, 2), (2, 3), (3, 4), (1, 4)]));
}

#[test]
fn opposite_signs_never_open() {
    let spec = square(12);
    let h = harmonic_extension(&spec, 1.3).unwrap();
    let es = edges(&spec);
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = sample_zero_boundary_gff(&spec, &mut rng);
        let values: Vec<f64> = h.values.iter().zip(&g.values).map(|(a, b)| a + b).collect();
        let f = LatticeField { values };
        let c = percolate(&f, &spec, &mut rng);
        for (&(u, v), &open) in es.iter().zip(&c.open) {
            if open {
                assert!(f.values[u] * f.values[v] > 0.0);
            }
        }
    }
}

/// Fraction of discretised bridges from `a` to `b` on `[0, 1]` that stay
/// positive at the grid times, for `n` and `n/4` steps of the same paths.
fn discrete_avoidance(a: f64, b: f64, n: usize, paths: usize, seed: u64) -> (f64, f64) {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 1.0 / n as f64;
    let (mut fine_ok, mut coarse_ok) = (0usize, 0usize);
    for _ in 0..paths {
        let (mut x, mut fine, mut coarse) = (a, true, true);
        for k in 1..n {
            // Bridge step conditioned on the endpoint.
            let left = (n - k + 1) as f64;
            let z: f64 = StandardNormal.sample(&mut rng);
            x += (b - x) / left + (dt * (left - 1.0) / left).sqrt() * z;
            if x <= 0.0 {
                fine = false;
                if k % 4 == 0 {
                    coarse = false;
                    break;
                }
            }
        }
        fine_ok += fine as usize;
        coarse_ok += coarse as usize;
    }
    (fine_ok as f64 / paths as f64, coarse_ok as f64 / paths as f64)
}

#[test]
fn bridge_rule_matches_simulated_bridges() {
    // Discrete monitoring overestimates avoidance by c/√n; the coarse and
    // fine grids share their paths, so 2·p(n) − p(n/4) cancels that term.
    for (a, b, seed) in [(1.0, 1.0, 11), (2.0, 0.5, 12)] {
        let paths = 100_000;
        let (fine, coarse) = discrete_avoidance(a, b, 1024, paths, seed);
        let extrapolated = 2.0 * fine - coarse;
        let exact = edge_open_probability(a, b);
        let se = (exact * (1.0 - exact) / paths as f64).sqrt();
        assert!((extrapolated - exact).abs() < 4.0 * se, "{a},{b}: {extrapolated} vs {exact}");
    }
}

proptest! {
    #[test]
    fn bridge_rule_is_a_symmetric_probability(a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let p = edge_open_probability(a, b);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(p, edge_open_probability(b, a));
        if a <= 0.0 || b <= 0.0 {
            prop_assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn union_find_agrees_with_flood_fill(pairs in prop::collection::vec((0usize..30, 0usize..30), 0..60)) {
        let mut uf = UnionFind::new(30);
        let mut adj = vec![Vec::new(); 30];
        for &(a, b) in &pairs {
            uf.union(a, b);
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut label = vec![usize::MAX; 30];
        for s in 0..30 {
            if label[s] != usize::MAX { continue; }
            let mut stack = vec![s];
            label[s] = s;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if label[w] == usize::MAX { label[w] = s; stack.push(w); }
                }
            }
        }
        for a in 0..30 {
            for b in 0..30 {
                prop_assert_eq!(uf.find(a) == uf.find(b), label[a] == label[b]);
            }
        }
    }
}
