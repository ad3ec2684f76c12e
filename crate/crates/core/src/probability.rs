//! Connection and crossing probabilities, rectangle geometry and the
//! dictionary between boundary-cluster partitions and link patterns.

use crate::coulomb::{CompiledCombo, MonomialCombo};
use crate::combinat::{enumerate_link_patterns, pairing_from_dyck, tau, valence_two, LinkPattern, PairPartition};
use crate::elliptic::{boundary_angle, corner_cross_ratio, modulus_for_aspect, perimeter, Modulus};
use crate::error::{Error, Result};
use crate::incidence::{arrow_relation, incidence_cached};
use crate::partition_fn::{conformal_block, fused_pure_partition, omega_path, pure_partition, z_mgff_total, PointConfig};
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};
use twofloat::TwoFloat;

/// `P[level lines connect as β]` for boundary data encoded by `alpha`.
pub fn connection_probability(alpha: &PairPartition, beta: &PairPartition, x: &PointConfig) -> Result<f64> {
    if !arrow_relation(alpha, beta)? {
        return Ok(0.0);
    }
    Ok(pure_partition(beta, x)? / conformal_block(alpha, x)?)
}

/// Fused partition functions of every valence-two pattern on `2N` points,
/// with their weights `M_{ω,τ(α̂)}`.
#[derive(Debug)]
pub struct FusedTable {
    n: usize,
    patterns: Vec<LinkPattern>,
    weights: Vec<i64>,
    combos: Vec<MonomialCombo>,
    compiled: Vec<CompiledCombo>,
    total: CompiledCombo,
}

impl FusedTable {
    pub fn build(n: usize) -> Result<Self> {
        let inc = incidence_cached(2 * n)?;
        let omega = inc.index_of_pairing(&pairing_from_dyck(&omega_path(n))).ok_or(Error::NotPlanar)?;
        let patterns = enumerate_link_patterns(&valence_two(n))?;
        let mut weights = Vec::with_capacity(patterns.len());
        let mut combos = Vec::with_capacity(patterns.len());
        for p in &patterns {
            let ti = inc.index_of_pairing(&tau(p)?).ok_or(Error::NotPlanar)?;
            weights.push(inc.m(omega, ti));
            combos.push(fused_pure_partition(p)?);
        }
        let compiled = combos.iter().map(|c| c.compile()).collect();
        Ok(FusedTable { n, patterns, weights, combos, compiled, total: z_mgff_total(n).compile() })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn patterns(&self) -> &[LinkPattern] {
        &self.patterns
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn combos(&self) -> &[MonomialCombo] {
        &self.combos
    }

    pub fn index_of(&self, p: &LinkPattern) -> Option<usize> {
        self.patterns.iter().position(|q| q == p)
    }

    fn check(&self, y: &PointConfig) -> Result<()> {
        if y.len() != 2 * self.n {
            return Err(Error::LengthMismatch(y.len(), 2 * self.n));
        }
        Ok(())
    }

    pub fn probability(&self, i: usize, y: &PointConfig) -> Result<f64> {
        self.check(y)?;
        if self.weights[i] == 0 {
            return Ok(0.0);
        }
        Ok(self.weights[i] as f64 * self.compiled[i].evaluate(y.points())? / self.total.evaluate(y.points())?)
    }

    /// Same as [`probability`](Self::probability) in double-double arithmetic.
    pub fn probability_dd(&self, i: usize, y: &[TwoFloat]) -> Result<TwoFloat> {
        if self.weights[i] == 0 {
            return Ok(TwoFloat::from(0.0));
        }
        Ok(crate::dd::div(self.compiled[i].evaluate_dd(y)? * self.weights[i] as f64, self.total.evaluate_dd(y)?))
    }
}

/// Shared [`FusedTable`] for `N`.
pub fn fused_table(n: usize) -> Result<Arc<FusedTable>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<FusedTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&n) {
        return Ok(t.clone());
    }
    let t = Arc::new(FusedTable::build(n)?);
    cache.lock().unwrap().insert(n, t.clone());
    Ok(t)
}

/// Probability that the first-passage-set frontier realises `pattern`.
pub fn crossing_probability(pattern: &LinkPattern, y: &PointConfig) -> Result<f64> {
    if pattern.valence().iter().any(|&v| v != 2) || pattern.num_points() % 2 != 0 {
        return Err(Error::UnsupportedValence(pattern.valence().to_vec()));
    }
    let table = fused_table(pattern.num_points() / 2)?;
    let i = table.index_of(pattern).ok_or_else(|| Error::InvalidPattern(pattern.to_string()))?;
    table.probability(i, y)
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub pattern: LinkPattern,
    pub prob: f64,
}

/// Probabilities of all valence-two patterns, in enumeration order.
#[derive(Clone, Debug, Serialize)]
#[serde(transparent)]
pub struct OutcomeDistribution(pub Vec<Outcome>);

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.0.iter().map(|o| o.prob).sum()
    }

    pub fn get(&self, p: &LinkPattern) -> Option<f64> {
        self.0.iter().find(|o| &o.pattern == p).map(|o| o.prob)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("distribution serialises")
    }
}

pub fn outcome_distribution(n: usize, y: &PointConfig) -> Result<OutcomeDistribution> {
    let table = fused_table(n)?;
    let mut out = Vec::with_capacity(table.patterns.len());
    for (i, p) in table.patterns.iter().enumerate() {
        out.push(Outcome { pattern: p.clone(), prob: table.probability(i, y)? });
    }
    Ok(OutcomeDistribution(out))
}

/// `(y₂−y₁)(y₄−y₃) / ((y₃−y₁)(y₄−y₂))`.
pub fn cross_ratio(y: &[f64]) -> f64 {
    (y[1] - y[0]) * (y[3] - y[2]) / ((y[2] - y[0]) * (y[3] - y[1]))
}

/// Cross-ratio of the four corners of `[0, L] × [0, 1]` in the half plane.
pub fn cross_ratio_rectangle(l: f64) -> Result<f64> {
    Ok(corner_cross_ratio(modulus_for_aspect(l)?))
}

/// A rectangle of width `l` and height 1 with `2N` marked boundary points,
/// given by counterclockwise arc length from the origin corner. The list
/// starts at `y₁` and is cyclically increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct RectanglePolygon {
    l: f64,
    marked: Vec<f64>,
}

impl RectanglePolygon {
    pub fn new(l: f64, marked: Vec<f64>) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Numerical(format!("aspect {l} must be positive")));
        }
        let per = perimeter(l);
        if marked.len() < 2 || marked.len() % 2 != 0 {
            return Err(Error::InvalidPattern(format!("{} marked points", marked.len())));
        }
        let rel: Vec<f64> = marked.iter().map(|s| (s - marked[0]).rem_euclid(per)).collect();
        if marked.iter().any(|s| !s.is_finite()) || rel.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Unordered);
        }
        Ok(RectanglePolygon { l, marked: marked.iter().map(|s| s.rem_euclid(per)).collect() })
    }

    /// The four corners, `y₁` top left, `y₂` at the origin.
    pub fn corners(l: f64) -> Result<Self> {
        Self::new(l, vec![2.0 * l + 1.0, 0.0, l, l + 1.0])
    }

    pub fn aspect(&self) -> f64 {
        self.l
    }

    pub fn marked(&self) -> &[f64] {
        &self.marked
    }
}

/// Images of the marked points on the real line, normalised by a rotation
/// of the projective line so that the boundary point midway between
/// `y_{2N}` and `y₁` goes to infinity. Probabilities are invariant under
/// such normalisations.
pub fn rect_boundary_to_halfplane(r: &RectanglePolygon) -> Result<PointConfig> {
    let m = modulus_for_aspect(r.l)?;
    rect_images(r, m)
}

fn rect_images(r: &RectanglePolygon, m: Modulus) -> Result<PointConfig> {
    let per = perimeter(r.l);
    let last = *r.marked.last().unwrap();
    let gap = (r.marked[0] - last).rem_euclid(per);
    let cut = boundary_angle(r.l, m, last + 0.5 * gap);
    let pts = r
        .marked
        .iter()
        .map(|&s| {
            let th = (boundary_angle(r.l, m, s) - cut).rem_euclid(PI);
            -1.0 / th.tan()
        })
        .collect();
    PointConfig::new(pts).map_err(|_| Error::Numerical("boundary images are not ordered".into()))
}

/// Outcome distribution for the marked rectangle.
pub fn rectangle_distribution(r: &RectanglePolygon) -> Result<OutcomeDistribution> {
    let y = rect_boundary_to_halfplane(r)?;
    outcome_distribution(r.marked.len() / 2, &y)
}

/// Partitions of the positive arcs `A₁, A₃, …` and the negative arcs
/// `A₂, A₄, …` into boundary clusters. Arc `A_j` runs from `y_j` to
/// `y_{j+1}` (with `y_{2N+1} = y₁`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClusterPartitions {
    pub n: usize,
    pub positive: Vec<Vec<usize>>,
    pub negative: Vec<Vec<usize>>,
}

impl ClusterPartitions {
    /// Sorts blocks and checks that they are valid, non-crossing and
    /// mutually compatible.
    pub fn new(n: usize, mut positive: Vec<Vec<usize>>, mut negative: Vec<Vec<usize>>) -> Result<Self> {
        for (blocks, parity) in [(&mut positive, 1usize), (&mut negative, 0usize)] {
            let mut seen = vec![false; 2 * n + 1];
            for b in blocks.iter_mut() {
                b.sort_unstable();
                for &a in b.iter() {
                    if a == 0 || a > 2 * n || a % 2 != parity || seen[a] {
                        return Err(Error::InvalidPattern(format!("bad arc {a} in cluster partition")));
                    }
                    seen[a] = true;
                }
            }
            if (1..=2 * n).filter(|a| a % 2 == parity).any(|a| !seen[a]) {
                return Err(Error::InvalidPattern("cluster partition misses an arc".into()));
            }
            blocks.retain(|b| !b.is_empty());
            blocks.sort();
        }
        let c = ClusterPartitions { n, positive, negative };
        if !c.is_planar() {
            return Err(Error::NotPlanar);
        }
        Ok(c)
    }

    fn is_planar(&self) -> bool {
        let blocks: Vec<&Vec<usize>> = self.positive.iter().chain(self.negative.iter()).collect();
        for (i, b) in blocks.iter().enumerate() {
            for c in &blocks[i + 1..] {
                if blocks_cross(b, c) {
                    return false;
                }
            }
        }
        true
    }
}

fn blocks_cross(b: &[usize], c: &[usize]) -> bool {
    for &a1 in b {
        for &a2 in b {
            if a1 >= a2 {
                continue;
            }
            let inside = |x: usize| a1 < x && x < a2;
            if c.iter().any(|&x| inside(x)) && c.iter().any(|&x| !inside(x)) {
                return true;
            }
        }
    }
    false
}

/// Link pattern of the first-passage-set frontier: a cluster touching the
/// arcs `A_{i₁}, …, A_{i_m}` in cyclic order contributes the links
/// `{end(A_{i_r}), start(A_{i_{r+1}})}`; a lone arc links its own endpoints.
pub fn pattern_from_cluster_partitions(c: &ClusterPartitions) -> Result<LinkPattern> {
    let n2 = 2 * c.n;
    let start = |a: usize| a as u32;
    let end = |a: usize| (a % n2 + 1) as u32;
    let mut links = Vec::with_capacity(n2);
    for b in c.positive.iter().chain(c.negative.iter()) {
        if b.len() == 1 {
            links.push((start(b[0]), end(b[0])));
        } else {
            for (i, &a) in b.iter().enumerate() {
                links.push((end(a), start(b[(i + 1) % b.len()])));
            }
        }
    }
    LinkPattern::new(valence_two(c.n), links)
}

/// All non-crossing set partitions of `items`, listed as sorted blocks.
pub fn noncrossing_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    fn rec(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
        if items.is_empty() {
            return vec![Vec::new()];
        }
        let first = items[0];
        let rest = &items[1..];
        let mut out = Vec::new();
        // Choose the block of `first` as a subset of rest; the gaps between
        // its elements are partitioned independently.
        let m = rest.len();
        for mask in 0u32..(1 << m) {
            let chosen: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
            let mut block = vec![first];
            block.extend(chosen.iter().map(|&i| rest[i]));
            let mut segments: Vec<&[usize]> = Vec::new();
            let mut prev = 0usize;
            for &i in &chosen {
                segments.push(&rest[prev..i]);
                prev = i + 1;
            }
            segments.push(&rest[prev..]);
            let mut acc: Vec<Vec<Vec<usize>>> = vec![vec![block.clone()]];
            for seg in segments {
                let parts = rec(seg);
                let mut next = Vec::with_capacity(acc.len() * parts.len());
                for a in &acc {
                    for p in &parts {
                        let mut v = a.clone();
                        v.extend(p.iter().cloned());
                        next.push(v);
                    }
                }
                acc = next;
            }
            out.extend(acc);
        }
        out
    }
    rec(items)
}

/// Every compatible pair of cluster partitions on `2N` arcs.
pub fn compatible_cluster_partitions(n: usize) -> Vec<ClusterPartitions> {
    let pos: Vec<usize> = (1..=2 * n).step_by(2).collect();
    let neg: Vec<usize> = (2..=2 * n).step_by(2).collect();
    let mut out = Vec::new();
    for p in noncrossing_partitions(&pos) {
        for q in noncrossing_partitions(&neg) {
            if let Ok(c) = ClusterPartitions::new(n, p.clone(), q.clone()) {
                out.push(c);
            }
        }
    }
    out
}
