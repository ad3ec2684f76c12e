//! Conformal blocks, pure partition functions at κ = 4 and their fusions.
//!
//! Unfused points `x_1 < ... < x_{2N}` carry weight `h = 1/4`; fully fused
//! points `y_1 < ... < y_{2N}` carry weight `H = 1`.

use crate::coulomb::{rat, Label, Monomial, MonomialCombo};
use crate::combinat::{
    enumerate_dyck_paths, pairing_from_dyck, tau, DyckPath, LinkPattern, LocalShape, PairPartition,
};
use crate::error::{Error, Result};
use crate::incidence::incidence_cached;
use num_bigint::BigInt;
use num_rational::BigRational;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub const KAPPA: f64 = 4.0;
/// Boundary weight `(6 − κ)/(2κ)` of an unfused point.
pub const H_POINT: f64 = 0.25;
/// Boundary weight `(8 − κ)/κ` of a fused point.
pub const H_FUSED: f64 = 1.0;
/// Height gap of level lines in the continuum normalisation.
pub const LAMBDA: f64 = std::f64::consts::FRAC_PI_2;

/// Strictly increasing real marked points.
#[derive(Clone, Debug, PartialEq)]
pub struct PointConfig(Vec<f64>);

impl PointConfig {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.iter().any(|p| !p.is_finite()) || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Unordered);
        }
        Ok(PointConfig(points))
    }

    pub fn points(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min_gap(&self) -> f64 {
        self.0.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

/// Signs `ϑ(i, j)`: `+1` when `i` and `j` are both left endpoints or both
/// right endpoints of their links, `−1` otherwise.
#[derive(Clone, Debug)]
pub struct ThetaTable {
    n: usize,
    left: Vec<bool>,
}

impl ThetaTable {
    pub fn new(p: &PairPartition) -> Self {
        ThetaTable { n: p.num_points(), left: p.left_endpoint_mask() }
    }

    pub fn num_points(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i32 {
        if self.left[i] == self.left[j] {
            1
        } else {
            -1
        }
    }
}

pub fn theta_cached(p: &PairPartition) -> Arc<ThetaTable> {
    static CACHE: OnceLock<Mutex<HashMap<PairPartition, Arc<ThetaTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut g = cache.lock().unwrap();
    g.entry(p.clone()).or_insert_with(|| Arc::new(ThetaTable::new(p))).clone()
}

/// Level-line heights and boundary plateaus associated with a Dyck path.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryProfile {
    /// `λ(α(k−1) + α(k) − 2)` for `k = 1..=2N`.
    pub heights: Vec<f64>,
    /// `2λ(α(k) − 1)` on the interval `(x_k, x_{k+1})`, `k = 0..=2N`.
    pub plateaus: Vec<f64>,
}

impl BoundaryProfile {
    pub fn new(a: &DyckPath) -> Self {
        let h = a.heights();
        let heights = (1..h.len()).map(|k| LAMBDA * (h[k - 1] as f64 + h[k] as f64 - 2.0)).collect();
        let plateaus = h.iter().map(|&v| 2.0 * LAMBDA * (v as f64 - 1.0)).collect();
        BoundaryProfile { heights, plateaus }
    }
}

/// `U_α` as a single monomial.
pub fn conformal_block_combo(p: &PairPartition) -> MonomialCombo {
    let t = theta_cached(p);
    let n = p.num_points();
    let mut m = Monomial::new(rat(1, 1));
    for i in 1..=n {
        for j in i + 1..=n {
            m = m.with_factor(i as Label, j as Label, t.get(i, j));
        }
    }
    MonomialCombo::from_monomial(m)
}

/// Direct numerical `U_α(x)`.
pub fn conformal_block(p: &PairPartition, x: &PointConfig) -> Result<f64> {
    let n = p.num_points();
    if x.len() != n {
        return Err(Error::LengthMismatch(x.len(), n));
    }
    let t = theta_cached(p);
    let xs = x.points();
    let mut log = 0.0;
    for i in 1..=n {
        for j in i + 1..=n {
            log += 0.5 * t.get(i, j) as f64 * (xs[j - 1] - xs[i - 1]).ln();
        }
    }
    Ok(log.exp())
}

/// `Z_α = Σ_β M⁻¹_{α,β} U_β` as an exact combo.
pub fn pure_partition_combo(p: &PairPartition) -> Result<MonomialCombo> {
    let inc = incidence_cached(p.size())?;
    let i = inc.index_of_pairing(p).ok_or(Error::NotPlanar)?;
    let mut z = MonomialCombo::zero();
    for (j, v) in inc.inv_row(i) {
        z.add_scaled(&conformal_block_combo(&inc.pairings()[j]), &rat(v, 1));
    }
    Ok(z)
}

/// Direct numerical `Z_α(x)`.
pub fn pure_partition(p: &PairPartition, x: &PointConfig) -> Result<f64> {
    let inc = incidence_cached(p.size())?;
    let i = inc.index_of_pairing(p).ok_or(Error::NotPlanar)?;
    let mut s = 0.0;
    for (j, v) in inc.inv_row(i) {
        s += v as f64 * conformal_block(&inc.pairings()[j], x)?;
    }
    Ok(s)
}

/// Fuses `x_j, x_{j+1}` of `Z_α` into one point and renumbers the rest so
/// the result lives on labels `1..=2N−1` with the fused point at `j`.
///
/// A link `{j, j+1}` is extracted at order `−1/2`, anything else at `+1/2`.
pub fn fuse_once(p: &PairPartition, j: usize) -> Result<MonomialCombo> {
    let n = p.num_points();
    if j == 0 || j >= n {
        return Err(Error::IndexOutOfRange { index: j, max: n.saturating_sub(1) });
    }
    let z = pure_partition_combo(p)?;
    let r = if p.contains(j as u32, j as u32 + 1) { -1 } else { 1 };
    let f = z.fuse_pair(j as Label, j as Label + 1, j as Label, r)?;
    f.relabel(|l| if l > j as Label + 1 { l - 1 } else { l })
}

fn check_valence_two(lp: &LinkPattern) -> Result<()> {
    if lp.valence().iter().any(|&v| v != 2) || lp.num_points() % 2 != 0 {
        return Err(Error::UnsupportedValence(lp.valence().to_vec()));
    }
    Ok(())
}

/// `Ẑ` of a valence-two pattern by fusing the split points pairwise in the
/// natural order `(1,2), (3,4), ...`.
pub fn fused_pure_partition(lp: &LinkPattern) -> Result<MonomialCombo> {
    let order: Vec<usize> = (1..=lp.num_points()).collect();
    fused_pure_partition_in_order(lp, &order)
}

/// As [`fused_pure_partition`], fusing the pairs in the order given by a
/// permutation of `1..=2N` (entry `j` means the pair `(2j−1, 2j)`).
pub fn fused_pure_partition_in_order(lp: &LinkPattern, order: &[usize]) -> Result<MonomialCombo> {
    check_valence_two(lp)?;
    let n = lp.num_points();
    let mut seen = vec![false; n + 1];
    for &j in order {
        if j == 0 || j > n || seen[j] {
            return Err(Error::InvalidPattern(format!("fusion order {order:?} is not a permutation")));
        }
        seen[j] = true;
    }
    if order.len() != n {
        return Err(Error::InvalidPattern(format!("fusion order {order:?} is not a permutation")));
    }
    let mut z = pure_partition_combo(&tau(lp)?)?;
    for &j in order {
        let (u, v) = (2 * j as Label - 1, 2 * j as Label);
        z = z.fuse_pair(u, v, u, 1)?;
    }
    z.relabel(|l| (l + 1) / 2)
}

/// `Ẑ` through the grouped closed form: sum over paths with valleys or
/// slopes at odd positions, each contributing a product over unfused pairs
/// times a sum over partial matchings of the valley positions.
pub fn fused_closed_form(lp: &LinkPattern) -> Result<MonomialCombo> {
    check_valence_two(lp)?;
    let n = lp.num_points();
    let alpha = tau(lp)?;
    let inc = incidence_cached(n)?;
    let ai = inc.index_of_pairing(&alpha).ok_or(Error::NotPlanar)?;
    let mut total = MonomialCombo::zero();
    for (bi, coeff) in inc.inv_row(ai) {
        let beta = &inc.paths()[bi];
        let shapes: Vec<LocalShape> = (1..=n).map(|j| beta.local_shape(2 * j - 1)).collect::<Result<_>>()?;
        if shapes.contains(&LocalShape::Max) {
            continue;
        }
        let valleys: Vec<usize> = (1..=n).filter(|&j| shapes[j - 1] == LocalShape::Min).collect();
        let theta = theta_cached(&inc.pairings()[bi]);
        let free: Vec<usize> = (1..=n).filter(|j| !valleys.contains(j)).collect();
        let mut g = Monomial::new(rat(coeff, 1));
        for (a, &k) in free.iter().enumerate() {
            for &l in &free[a + 1..] {
                g = g.with_factor(k as Label, l as Label, 4 * theta.get(2 * k, 2 * l));
            }
        }
        let zs: Vec<MonomialCombo> = valleys
            .iter()
            .map(|&j| {
                let mut z = MonomialCombo::zero();
                for &k in &free {
                    let m = Monomial::new(rat(2 * theta.get(2 * k, 2 * j - 1) as i64, 1))
                        .with_factor(j as Label, k as Label, -2);
                    z = z.add(&MonomialCombo::from_monomial(m));
                }
                z
            })
            .collect();
        let s = matching_sum(&valleys, &zs);
        total = total.add(&MonomialCombo::from_monomial(g).mul(&s));
    }
    Ok(total)
}

/// `Σ_m Σ_{σ ∈ 𝔍_n^m} 2^m Z_{σ(2m+1)} ⋯ Z_{σ(n)} / ∏ (y_{σ(2i−1)} − y_{σ(2i)})²`
/// enumerated over permutations exactly as the index set is defined.
fn matching_sum(points: &[usize], zs: &[MonomialCombo]) -> MonomialCombo {
    let n = points.len();
    let mut total = MonomialCombo::zero();
    for m in 0..=n / 2 {
        for sigma in j_set(n, m) {
            let mut term = MonomialCombo::constant(BigRational::from_integer(BigInt::from(1u64 << m)));
            for i in 0..m {
                let (a, b) = (points[sigma[2 * i]], points[sigma[2 * i + 1]]);
                term = term.mul(&MonomialCombo::from_monomial(
                    Monomial::new(rat(1, 1)).with_factor(a as Label, b as Label, -4),
                ));
            }
            for &r in &sigma[2 * m..] {
                term = term.mul(&zs[r]);
            }
            total = total.add(&term);
        }
    }
    total
}

/// Permutations `σ` of `0..n` with `σ_1 < σ_3 < ⋯ < σ_{2m−1}`,
/// `σ_{2i−1} < σ_{2i}` for `i ≤ m`, and `σ_{2m+1} < ⋯ < σ_n` (1-based).
pub fn j_set(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |p| {
        let starts_ok = (1..m).all(|i| p[2 * (i - 1)] < p[2 * i]);
        let pairs_ok = (0..m).all(|i| p[2 * i] < p[2 * i + 1]);
        let rest_ok = p[2 * m..].windows(2).all(|w| w[0] < w[1]);
        if starts_ok && pairs_ok && rest_ok {
            out.push(p.to_vec());
        }
    });
    out
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

/// `∏_{i<j} (y_j − y_i)^{2(−1)^{j−i}}` on `2N` points.
pub fn z_mgff_total(n: usize) -> MonomialCombo {
    let mut m = Monomial::new(rat(1, 1));
    for i in 1..=2 * n {
        for j in i + 1..=2 * n {
            let sign = if (j - i) % 2 == 0 { 1 } else { -1 };
            m = m.with_factor(i as Label, j as Label, 4 * sign);
        }
    }
    MonomialCombo::from_monomial(m)
}

/// The path `0,1,2,1,0` repeated `N` times.
pub fn omega_path(n: usize) -> DyckPath {
    let mut h = vec![0u32];
    for _ in 0..n {
        h.extend_from_slice(&[1, 2, 1, 0]);
    }
    DyckPath::new(h).expect("omega is a Dyck path")
}

/// `(β)₂(k) = β(2k)/2`, defined when every odd position is a slope.
pub fn halved_path(b: &DyckPath) -> Result<DyckPath> {
    for j in (1..b.len()).step_by(2) {
        if b.local_shape(j)? != LocalShape::Slope {
            return Err(Error::WrongShape { index: j, expected: "slope" });
        }
    }
    DyckPath::new(b.heights().iter().step_by(2).map(|h| h / 2).collect())
}

/// `U_β⁴` as a monomial, obtained by raising every exponent of `U_β` to four
/// times its value.
pub fn conformal_block_fourth(p: &PairPartition) -> MonomialCombo {
    let u = conformal_block_combo(p);
    let mut out = MonomialCombo::zero();
    for (k, c) in u.terms() {
        out.add_term(k.iter().map(|&(a, b, e)| (a, b, 4 * e)).collect(), c.clone());
    }
    out
}

/// `Σ_{α̂} M_{ω,τ(α̂)} Ẑ_α̂` over all valence-two patterns on `2N` points.
pub fn sum_rule_combo(n: usize) -> Result<MonomialCombo> {
    let inc = incidence_cached(2 * n)?;
    let omega = pairing_from_dyck(&omega_path(n));
    let oi = inc.index_of_pairing(&omega).ok_or(Error::NotPlanar)?;
    let mut total = MonomialCombo::zero();
    for lp in crate::combinat::enumerate_link_patterns(&crate::combinat::valence_two(n))? {
        let ti = inc.index_of_pairing(&tau(&lp)?).ok_or(Error::NotPlanar)?;
        let w = inc.m(oi, ti);
        if w != 0 {
            total.add_scaled(&fused_pure_partition(&lp)?, &rat(w, 1));
        }
    }
    Ok(total)
}

/// All Dyck paths of length `4N` with slopes at every odd position.
pub fn slope_paths(n: usize) -> Result<Vec<DyckPath>> {
    Ok(enumerate_dyck_paths(2 * n)?
        .into_iter()
        .filter(|d| (1..d.len()).step_by(2).all(|j| d.local_shape(j) == Ok(LocalShape::Slope)))
        .collect())
}
