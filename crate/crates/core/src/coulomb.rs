//! Exact combinations of products of pairwise differences.
//!
//! A monomial is `q · ∏ (x_b − x_a)^{p/2}` over label pairs `a < b`, with an
//! exact rational `q` and integer doubled exponents `p`. Coordinates are
//! addressed by label: label `l` reads `x[l - 1]`.

use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::fmt;
use twofloat::TwoFloat;

pub type Label = u32;

/// Sorted `(a, b, p)` triples with `a < b` and `p != 0`.
pub type Key = Vec<(Label, Label, i32)>;

/// Maximum number of integer steps between the leading and requested order
/// in a series expansion.
pub const MAX_SERIES_ORDERS: i32 = 16;

/// Rational number from a small integer fraction.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: BigRational,
    pub exps: BTreeMap<(Label, Label), i32>,
}

impl Monomial {
    pub fn new(coeff: BigRational) -> Self {
        Monomial { coeff, exps: BTreeMap::new() }
    }

    /// Multiplies in `(x_b − x_a)^{p/2}`; the pair is reoriented if needed,
    /// which is only allowed for even `p`.
    pub fn with_factor(mut self, a: Label, b: Label, p: i32) -> Self {
        assert!(a != b, "factor needs two distinct labels");
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if a > b {
            assert!(p % 2 == 0, "cannot reorient a half-integer power");
            if (p / 2) % 2 != 0 {
                self.coeff = -self.coeff;
            }
        }
        *self.exps.entry((lo, hi)).or_insert(0) += p;
        self
    }

    fn key(&self) -> Key {
        self.exps.iter().filter(|(_, &p)| p != 0).map(|(&(a, b), &p)| (a, b, p)).collect()
    }
}

/// A finite sum of monomials, kept in canonical form: keys are unique and no
/// stored coefficient is zero.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MonomialCombo {
    terms: BTreeMap<Key, BigRational>,
}

fn merge_keys(a: &Key, b: &Key) -> Key {
    let mut m: BTreeMap<(Label, Label), i32> = BTreeMap::new();
    for &(x, y, p) in a.iter().chain(b.iter()) {
        *m.entry((x, y)).or_insert(0) += p;
    }
    m.into_iter().filter(|(_, p)| *p != 0).map(|((x, y), p)| (x, y, p)).collect()
}

/// Generalised binomial coefficient `C(p/2, k)`.
fn half_binomial(p: i32, k: u32) -> BigRational {
    let mut c = BigRational::one();
    let a = rat(p as i64, 2);
    for i in 0..k {
        c = c * (&a - BigRational::from_integer(BigInt::from(i))) / BigRational::from_integer(BigInt::from(i + 1));
    }
    c
}

impl MonomialCombo {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Self::from_monomial(Monomial::new(c))
    }

    pub fn from_monomial(m: Monomial) -> Self {
        let mut c = Self::zero();
        c.add_term(m.key(), m.coeff);
        c
    }

    pub fn add_term(&mut self, key: Key, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Key, &BigRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// All labels appearing in some factor.
    pub fn labels(&self) -> Vec<Label> {
        let mut s = std::collections::BTreeSet::new();
        for k in self.terms.keys() {
            for &(a, b, _) in k {
                s.insert(a);
                s.insert(b);
            }
        }
        s.into_iter().collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut r = self.clone();
        for (k, c) in &other.terms {
            r.add_term(k.clone(), c.clone());
        }
        r
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn add_scaled(&mut self, other: &Self, s: &BigRational) {
        for (k, c) in &other.terms {
            self.add_term(k.clone(), c * s);
        }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        let mut r = Self::zero();
        for (k, c) in &self.terms {
            r.add_term(k.clone(), c * s);
        }
        r
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut r = Self::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                r.add_term(merge_keys(k1, k2), c1 * c2);
            }
        }
        r
    }

    /// Renames labels through a strictly increasing map.
    pub fn relabel(&self, f: impl Fn(Label) -> Label) -> Result<Self> {
        let labels = self.labels();
        for w in labels.windows(2) {
            if f(w[0]) >= f(w[1]) {
                return Err(Error::BadFusion(w[0], w[1], "relabelling must be increasing".into()));
            }
        }
        let mut r = Self::zero();
        for (k, c) in &self.terms {
            let nk: Key = k.iter().map(|&(a, b, p)| (f(a), f(b), p)).collect();
            r.add_term(nk, c.clone());
        }
        Ok(r)
    }

    /// Relabels the present labels to `1, 2, ...` preserving order.
    pub fn compact_labels(&self) -> Self {
        let labels = self.labels();
        let pos: BTreeMap<Label, Label> =
            labels.iter().enumerate().map(|(i, &l)| (l, i as Label + 1)).collect();
        self.relabel(|l| pos[&l]).expect("compaction is increasing")
    }

    /// Coefficient of `ε^{order/2}` after substituting `x_v = x_u + ε`.
    ///
    /// The result no longer depends on `x_v`. Labels strictly between `u` and
    /// `v` are rejected since the substitution would reorder points.
    pub fn series_coefficient(&self, u: Label, v: Label, order_doubled: i32) -> Result<Self> {
        if u >= v {
            return Err(Error::BadFusion(u, v, "need u < v".into()));
        }
        if let Some(&l) = self.labels().iter().find(|&&l| l > u && l < v) {
            return Err(Error::BadFusion(u, v, format!("label {l} lies between them")));
        }
        let mut out = Self::zero();
        for (key, coeff) in &self.terms {
            expand_term(key, coeff, u, v, order_doubled, &mut out)?;
        }
        Ok(out)
    }

    /// Lowest doubled order of `ε` produced by any term under `x_v = x_u + ε`.
    fn leading_orders(&self, u: Label, v: Label) -> Vec<i32> {
        let mut s = std::collections::BTreeSet::new();
        for key in self.terms.keys() {
            let e0 = key.iter().find(|&&(a, b, _)| a == u && b == v).map(|t| t.2).unwrap_or(0);
            s.insert(e0);
        }
        s.into_iter().collect()
    }

    /// Fuses `x_u` and `x_v` into a point labelled `target`.
    ///
    /// Extracts the `ε^{r/2}` coefficient (`r = r_doubled`), after checking
    /// that every lower order vanishes exactly.
    pub fn fuse_pair(&self, u: Label, v: Label, target: Label, r_doubled: i32) -> Result<Self> {
        for e0 in self.leading_orders(u, v) {
            let mut o = e0;
            while o < r_doubled {
                if (r_doubled - o) / 2 > MAX_SERIES_ORDERS {
                    return Err(Error::OrderCap(r_doubled));
                }
                if !self.series_coefficient(u, v, o)?.is_zero() {
                    return Err(Error::Divergent { order_doubled: o });
                }
                o += 2;
            }
        }
        let c = self.series_coefficient(u, v, r_doubled)?;
        if target == u {
            return Ok(c);
        }
        for l in c.labels() {
            if l != u && (l == target || (l < u) != (l < target)) {
                return Err(Error::BadFusion(u, v, format!("target {target} would reorder label {l}")));
            }
        }
        c.relabel(|l| if l == u { target } else { l })
    }

    /// Plain double-precision evaluation.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.compile().evaluate(x)
    }

    /// Double-double evaluation.
    pub fn evaluate_dd(&self, x: &[TwoFloat]) -> Result<TwoFloat> {
        self.compile().evaluate_dd(x)
    }

    pub fn compile(&self) -> CompiledCombo {
        CompiledCombo::new(self)
    }

    /// True when every exponent is an integer.
    pub fn is_rational_function(&self) -> bool {
        self.terms.keys().all(|k| k.iter().all(|t| t.2 % 2 == 0))
    }

    /// A canonical form for combos with integer exponents: a common
    /// denominator `∏ (x_b − x_a)^{d_ab}` and the expanded numerator.
    ///
    /// Every monomial is a function of differences only, so the numerator is
    /// translation invariant and is expanded with the smallest label set to 0.
    pub fn normal_form(&self) -> Result<NormalForm> {
        if !self.is_rational_function() {
            return Err(Error::Numerical("normal form needs integer exponents".into()));
        }
        let labels = self.labels();
        let mut denom: BTreeMap<(Label, Label), i32> = BTreeMap::new();
        for k in self.terms.keys() {
            for &(a, b, p) in k {
                if p < 0 {
                    let e = denom.entry((a, b)).or_insert(0);
                    *e = (*e).max(-p / 2);
                }
            }
        }
        let var: BTreeMap<Label, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let nv = labels.len();
        let mut numer = Poly::zero(nv);
        let mut power_cache: BTreeMap<(Label, Label, i32), Poly> = BTreeMap::new();
        for (k, c) in &self.terms {
            let mut exps: BTreeMap<(Label, Label), i32> = denom.clone();
            for &(a, b, p) in k {
                *exps.entry((a, b)).or_insert(0) += p / 2;
            }
            let mut term = Poly::constant(nv, c.clone());
            for (&(a, b), &e) in &exps {
                if e == 0 {
                    continue;
                }
                let pw = power_cache
                    .entry((a, b, e))
                    .or_insert_with(|| Poly::difference(nv, var[&a], var[&b]).pow(e as u32))
                    .clone();
                term = term.mul(&pw);
            }
            numer.add_assign(&term);
        }
        Ok(NormalForm { labels, denom, numer })
    }
}

/// True when the two integer-exponent combos define the same rational function.
pub fn same_rational_function(a: &MonomialCombo, b: &MonomialCombo) -> Result<bool> {
    Ok(a.sub(b).normal_form()?.numer.is_zero())
}

impl fmt::Display for MonomialCombo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c} ·")?;
            if k.is_empty() {
                write!(f, " 1")?;
            }
            for &(a, b, p) in k {
                write!(f, " (x{b}−x{a})^({p}/2)")?;
            }
        }
        Ok(())
    }
}

fn expand_term(
    key: &Key,
    coeff: &BigRational,
    u: Label,
    v: Label,
    order: i32,
    out: &mut MonomialCombo,
) -> Result<()> {
    let mut e0 = 0;
    let mut fixed: BTreeMap<(Label, Label), i32> = BTreeMap::new();
    // (other label, doubled exponent, sign of ε in the shifted difference)
    let mut moving: Vec<(Label, i32, i32)> = Vec::new();
    for &(a, b, p) in key {
        if a == u && b == v {
            e0 = p;
        } else if b == v {
            moving.push((a, p, 1));
        } else if a == v {
            moving.push((b, p, -1));
        } else {
            *fixed.entry((a, b)).or_insert(0) += p;
        }
    }
    let gap = order - e0;
    if gap < 0 || gap % 2 != 0 {
        return Ok(());
    }
    let k_total = gap / 2;
    if k_total > MAX_SERIES_ORDERS {
        return Err(Error::OrderCap(order));
    }
    let mut ks = vec![0u32; moving.len()];
    distribute(k_total as u32, 0, &mut ks, &mut |ks: &[u32]| {
        let mut c = coeff.clone();
        let mut exps = fixed.clone();
        for (&(i, p, s), &k) in moving.iter().zip(ks) {
            let b = half_binomial(p, k);
            if b.is_zero() {
                return;
            }
            c *= b;
            if s < 0 && k % 2 == 1 {
                c = -c;
            }
            let pair = if i < u { (i, u) } else { (u, i) };
            *exps.entry(pair).or_insert(0) += p - 2 * k as i32;
        }
        let nk: Key = exps.into_iter().filter(|(_, p)| *p != 0).map(|((a, b), p)| (a, b, p)).collect();
        out.add_term(nk, c);
    });
    Ok(())
}

fn distribute(left: u32, i: usize, ks: &mut [u32], f: &mut impl FnMut(&[u32])) {
    if i == ks.len() {
        if left == 0 {
            f(ks);
        }
        return;
    }
    if i + 1 == ks.len() {
        ks[i] = left;
        f(ks);
        ks[i] = 0;
        return;
    }
    for k in 0..=left {
        ks[i] = k;
        distribute(left - k, i + 1, ks, f);
    }
    ks[i] = 0;
}

/// A combo flattened for repeated numerical evaluation.
#[derive(Clone, Debug)]
pub struct CompiledCombo {
    pairs: Vec<(Label, Label)>,
    half: Vec<bool>,
    terms: Vec<(f64, TwoFloat, Vec<(usize, i32)>)>,
}

fn to_twofloat(q: &BigRational) -> TwoFloat {
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    crate::dd::div(TwoFloat::from(n), TwoFloat::from(d))
}

impl CompiledCombo {
    fn new(c: &MonomialCombo) -> Self {
        let mut index: BTreeMap<(Label, Label), usize> = BTreeMap::new();
        for k in c.terms.keys() {
            for &(a, b, _) in k {
                let n = index.len();
                index.entry((a, b)).or_insert(n);
            }
        }
        let mut pairs = vec![(0, 0); index.len()];
        for (&p, &i) in &index {
            pairs[i] = p;
        }
        let mut half = vec![false; pairs.len()];
        let terms = c
            .terms
            .iter()
            .map(|(k, q)| {
                let fs: Vec<(usize, i32)> = k
                    .iter()
                    .map(|&(a, b, p)| {
                        let i = index[&(a, b)];
                        if p % 2 != 0 {
                            half[i] = true;
                        }
                        (i, p)
                    })
                    .collect();
                (q.to_f64().unwrap_or(f64::NAN), to_twofloat(q), fs)
            })
            .collect();
        CompiledCombo { pairs, half, terms }
    }

    fn differences<T: Copy>(
        &self,
        x: &[T],
        sub: impl Fn(T, T) -> T,
        is_zero: impl Fn(T) -> bool,
        is_neg: impl Fn(T) -> bool,
    ) -> Result<Vec<T>> {
        let get = |l: Label| x.get(l as usize - 1).copied().ok_or(Error::MissingLabel(l));
        self.pairs
            .iter()
            .zip(&self.half)
            .map(|(&(a, b), &h)| {
                let d = sub(get(b)?, get(a)?);
                if is_zero(d) {
                    Err(Error::CoincidentPoints(a, b))
                } else if h && is_neg(d) {
                    Err(Error::NegativeBase(a, b))
                } else {
                    Ok(d)
                }
            })
            .collect()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let d = self.differences(x, |a, b| a - b, |d| d == 0.0, |d| d < 0.0)?;
        let s: Vec<f64> = d.iter().zip(&self.half).map(|(&d, &h)| if h { d.sqrt() } else { 0.0 }).collect();
        let mut total = 0.0;
        for (q, _, fs) in &self.terms {
            let mut v = *q;
            for &(i, p) in fs {
                v *= d[i].powi(p.div_euclid(2));
                if p.rem_euclid(2) == 1 {
                    v *= s[i];
                }
            }
            total += v;
        }
        Ok(total)
    }

    pub fn evaluate_dd(&self, x: &[TwoFloat]) -> Result<TwoFloat> {
        let zero = TwoFloat::from(0.0);
        let d = self.differences(x, |a, b| a - b, |d| d == zero, |d| d < zero)?;
        let s: Vec<TwoFloat> =
            d.iter().zip(&self.half).map(|(&d, &h)| if h { d.sqrt() } else { zero }).collect();
        let mut total = zero;
        for (_, q, fs) in &self.terms {
            let mut v = *q;
            for &(i, p) in fs {
                let e = p.div_euclid(2);
                if e != 0 {
                    v *= crate::dd::powi(d[i], e);
                }
                if p.rem_euclid(2) == 1 {
                    v *= s[i];
                }
            }
            total += v;
        }
        Ok(total)
    }
}

/// Sparse multivariate polynomial with exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    nv: usize,
    terms: BTreeMap<Vec<u16>, BigRational>,
}

impl Poly {
    fn zero(nv: usize) -> Self {
        Poly { nv, terms: BTreeMap::new() }
    }

    fn constant(nv: usize, c: BigRational) -> Self {
        let mut p = Self::zero(nv);
        if !c.is_zero() {
            p.terms.insert(vec![0; nv], c);
        }
        p
    }

    /// `y_b − y_a` with variable 0 pinned at the origin.
    fn difference(nv: usize, a: usize, b: usize) -> Self {
        let mut p = Self::zero(nv);
        for (v, s) in [(b, 1i64), (a, -1i64)] {
            if v == 0 {
                continue;
            }
            let mut e = vec![0u16; nv];
            e[v] = 1;
            p.terms.insert(e, rat(s, 1));
        }
        p
    }

    fn add_assign(&mut self, o: &Self) {
        for (e, c) in &o.terms {
            let slot = self.terms.entry(e.clone()).or_insert_with(BigRational::zero);
            *slot += c;
            if slot.is_zero() {
                self.terms.remove(e);
            }
        }
    }

    fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero(self.nv);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u16> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                let slot = r.terms.entry(e).or_insert_with(BigRational::zero);
                *slot += c1 * c2;
            }
        }
        r.terms.retain(|_, c| !c.is_zero());
        r
    }

    fn pow(&self, k: u32) -> Self {
        let mut r = Self::constant(self.nv, BigRational::one());
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn max_abs_coefficient(&self) -> Option<BigRational> {
        self.terms.values().map(|c| c.abs()).max()
    }
}

/// Output of [`MonomialCombo::normal_form`].
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub labels: Vec<Label>,
    pub denom: BTreeMap<(Label, Label), i32>,
    pub numer: Poly,
}
