use fusion_core::coulomb::{rat, same_rational_function, Monomial, MonomialCombo};
use fusion_core::Error;
use proptest::prelude::*;
use twofloat::TwoFloat;

/// Product over pairs of `(x_b − x_a)^{p/2}` written out by hand.
fn eval_monomial(c: f64, factors: &[(u32, u32, i32)], x: &[f64]) -> f64 {
    factors.iter().fold(c, |acc, &(a, b, p)| acc * (x[b as usize - 1] - x[a as usize - 1]).powf(p as f64 / 2.0))
}

fn combo(terms: &[(i64, Vec<(u32, u32, i32)>)]) -> MonomialCombo {
    let mut out = MonomialCombo::zero();
    for (c, f) in terms {
        let m = f.iter().fold(Monomial::new(rat(*c, 1)), |m, &(a, b, p)| m.with_factor(a, b, p));
        out = out.add(&MonomialCombo::from_monomial(m));
    }
    out
}

fn arb_terms(labels: u32) -> impl Strategy<Value = Vec<(i64, Vec<(u32, u32, i32)>)>> {
    let factor = (1..labels).prop_flat_map(move |a| (Just(a), a + 1..=labels, -4i32..=4));
    prop::collection::vec((-5i64..=5, prop::collection::vec(factor, 0..4)), 1..5)
}

fn points4() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..2.0, 4).prop_map(|gaps| {
        let mut x = vec![-1.0];
        for g in gaps.iter().take(3) {
            x.push(x.last().unwrap() + g);
        }
        x
    })
}

proptest! {
    #[test]
    fn evaluation_matches_direct_product(terms in arb_terms(4), x in points4()) {
        let c = combo(&terms);
        let direct: f64 = terms.iter().map(|(k, f)| eval_monomial(*k as f64, f, &x)).sum();
        let scale = terms.iter().map(|(k, f)| eval_monomial(k.abs() as f64, f, &x)).sum::<f64>().max(1.0);
        prop_assert!((c.evaluate(&x).unwrap() - direct).abs() <= 1e-12 * scale);
        let xd: Vec<TwoFloat> = x.iter().map(|&v| TwoFloat::from(v)).collect();
        let dd = c.evaluate_dd(&xd).unwrap();
        prop_assert!((dd.hi() + dd.lo() - direct).abs() <= 1e-12 * scale);
    }

    #[test]
    fn algebra_is_a_homomorphism(s in arb_terms(4), t in arb_terms(4), x in points4(), k in -3i64..=3) {
        let (a, b) = (combo(&s), combo(&t));
        let (va, vb) = (a.evaluate(&x).unwrap(), b.evaluate(&x).unwrap());
        let tol = 1e-10 * (1.0 + va.abs()) * (1.0 + vb.abs());
        prop_assert!((a.add(&b).evaluate(&x).unwrap() - (va + vb)).abs() <= tol);
        prop_assert!((a.sub(&b).evaluate(&x).unwrap() - (va - vb)).abs() <= tol);
        prop_assert!((a.mul(&b).evaluate(&x).unwrap() - va * vb).abs() <= tol);
        prop_assert!((a.scale(&rat(k, 2)).evaluate(&x).unwrap() - va * k as f64 / 2.0).abs() <= tol);
        prop_assert!(a.sub(&a).is_zero());
        prop_assert_eq!(a.add(&b), b.add(&a));
    }

    /// Truncated expansion in `ε = x₂ − x₁` reproduces the function.
    #[test]
    fn series_reconstructs_the_function(terms in arb_terms(4), x in points4()) {
        let c = combo(&terms);
        prop_assume!(!c.is_zero());
        let lowest = c.terms().map(|(k, _)| k.iter().find(|t| t.0 == 1 && t.1 == 2).map_or(0, |t| t.2)).min().unwrap();
        let eps = 1e-3;
        let mut y = x.clone();
        y[1] = y[0] + eps;
        let mut approx = 0.0;
        let mut order = lowest;
        while order <= lowest + 12 {
            approx += c.series_coefficient(1, 2, order).unwrap().evaluate(&y).unwrap() * eps.powf(order as f64 / 2.0);
            order += 1;
        }
        let exact = c.evaluate(&y).unwrap();
        let size: f64 = terms.iter().map(|(k, f)| eval_monomial(k.abs() as f64, f, &y)).sum();
        prop_assert!((approx - exact).abs() <= 1e-9 * size.max(1e-300), "{} vs {}", approx, exact);
    }
}

#[test]
fn fusion_extracts_the_leading_coefficient() {
    // (x₂−x₁)^{−1/2}(x₃−x₁)(x₃−x₂)^{1/2} fused at order −1/2 leaves (x₃−x₁)^{3/2}.
    let f = combo(&[(1, vec![(1, 2, -1), (1, 3, 2), (2, 3, 1)])]);
    let g = f.fuse_pair(1, 2, 1, -1).unwrap();
    assert_eq!(g, combo(&[(1, vec![(1, 3, 3)])]));
    // Asking above the leading order of a non-vanishing term diverges.
    assert!(matches!(f.fuse_pair(1, 2, 1, 1), Err(Error::Divergent { order_doubled: -1 })));
    // Cancelling leading terms: (x₃−x₁) − (x₃−x₂) = (x₂−x₁), so order 1 survives.
    let d = combo(&[(1, vec![(1, 3, 2)]), (-1, vec![(2, 3, 2)])]);
    assert_eq!(d.fuse_pair(1, 2, 1, 2).unwrap(), MonomialCombo::constant(rat(1, 1)));
    assert!(d.fuse_pair(1, 2, 1, 0).unwrap().is_zero());
}

#[test]
fn fusion_rejects_points_in_between_and_reordering_targets() {
    let f = combo(&[(1, vec![(1, 3, 2), (2, 4, 2)])]);
    assert!(matches!(f.series_coefficient(1, 3, 0), Err(Error::BadFusion(..))));
    let g = combo(&[(1, vec![(2, 3, 2), (1, 4, 2)])]);
    assert!(g.fuse_pair(2, 3, 4, 2).is_err());
    assert_eq!(g.fuse_pair(2, 3, 2, 2).unwrap(), combo(&[(1, vec![(1, 4, 2)])]));
}

#[test]
fn rational_identities_are_recognised() {
    let a = combo(&[(1, vec![(1, 3, 2)])]);
    let b = combo(&[(1, vec![(1, 2, 2)]), (1, vec![(2, 3, 2)])]);
    assert_ne!(a, b);
    assert!(same_rational_function(&a, &b).unwrap());
    let c = combo(&[(1, vec![(1, 2, -2), (1, 3, -2)])]);
    let d = combo(&[(1, vec![(1, 2, -2), (2, 3, -2)]), (-1, vec![(1, 3, -2), (2, 3, -2)])]);
    // 1/(ab) = (1/(a(b−a)) − 1/(b(b−a))) with a = x₂−x₁, b = x₃−x₁.
    assert!(same_rational_function(&c, &d).unwrap());
    assert!(!same_rational_function(&a, &c).unwrap());
    assert!(combo(&[(1, vec![(1, 2, 1)])]).normal_form().is_err());
}

#[test]
fn reoriented_factors_pick_up_signs() {
    let m = Monomial::new(rat(1, 1)).with_factor(3, 1, 2);
    let c = MonomialCombo::from_monomial(m);
    let x = [0.0, 1.0, 2.5];
    assert!((c.evaluate(&x).unwrap() + 2.5).abs() < 1e-15);
}
