//! Dyck paths, planar pair partitions and link patterns with prescribed valences.
//!
//! Points are labelled `1..=n` along the real line. A link `(a, b)` always has
//! `a < b`; links are kept sorted so that equal patterns compare equal.

use crate::error::{Error, Result};
use serde::ser::{Serialize, SerializeSeq, Serializer};

/// Largest enumeration we are willing to materialise.
pub const ENUMERATION_CAP: u128 = 1_000_000;

/// Catalan number `C_n`, exact for `n <= 60`.
pub fn catalan(n: usize) -> u128 {
    let mut c: u128 = 1;
    for k in 0..n as u128 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}

/// A Dyck path of length `2N`, stored by its heights `α(0), ..., α(2N)`.
///
/// The derived ordering is lexicographic on heights, which coincides with the
/// lexicographic order of step sequences when a down step sorts before an up
/// step. This is a linear extension of the pointwise partial order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyckPath(Vec<u32>);

/// Local shape of a Dyck path at an interior position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LocalShape {
    /// `∧`: an up step followed by a down step.
    Max,
    /// `∨`: a down step followed by an up step.
    Min,
    /// `×`: two steps in the same direction.
    Slope,
}

impl DyckPath {
    pub fn new(heights: Vec<u32>) -> Result<Self> {
        if heights.is_empty() || heights.len() % 2 == 0 {
            return Err(Error::InvalidPath(format!("{} heights", heights.len())));
        }
        if heights[0] != 0 || *heights.last().unwrap() != 0 {
            return Err(Error::InvalidPath("path must start and end at height 0".into()));
        }
        for w in heights.windows(2) {
            if w[0].abs_diff(w[1]) != 1 {
                return Err(Error::InvalidPath(format!("step {} -> {}", w[0], w[1])));
            }
        }
        Ok(DyckPath(heights))
    }

    /// Builds a path from a sequence of `+1` / `-1` steps.
    pub fn from_steps(steps: &[i8]) -> Result<Self> {
        let mut h = vec![0u32];
        let mut cur: i64 = 0;
        for &s in steps {
            if s != 1 && s != -1 {
                return Err(Error::InvalidPath(format!("step value {s}")));
            }
            cur += s as i64;
            if cur < 0 {
                return Err(Error::InvalidPath("path goes below zero".into()));
            }
            h.push(cur as u32);
        }
        DyckPath::new(h)
    }

    pub fn heights(&self) -> &[u32] {
        &self.0
    }

    /// Number of steps, `2N`.
    pub fn len(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Half the number of steps, `N`.
    pub fn size(&self) -> usize {
        self.len() / 2
    }

    pub fn height(&self, k: usize) -> u32 {
        self.0[k]
    }

    /// `+1` or `-1` for the step ending at position `k` (`1 <= k <= 2N`).
    pub fn step(&self, k: usize) -> i8 {
        if self.0[k] > self.0[k - 1] {
            1
        } else {
            -1
        }
    }

    pub fn steps(&self) -> Vec<i8> {
        (1..=self.len()).map(|k| self.step(k)).collect()
    }

    /// Pointwise comparison `self ⪯ other`.
    pub fn leq(&self, other: &DyckPath) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(self.0.iter().zip(&other.0).all(|(a, b)| a <= b))
    }

    pub fn local_shape(&self, j: usize) -> Result<LocalShape> {
        if j == 0 || j >= self.len() {
            return Err(Error::IndexOutOfRange { index: j, max: self.len().saturating_sub(1) });
        }
        let (l, m, r) = (self.0[j - 1], self.0[j], self.0[j + 1]);
        Ok(if m > l && m > r {
            LocalShape::Max
        } else if m < l && m < r {
            LocalShape::Min
        } else {
            LocalShape::Slope
        })
    }

    /// Deletes steps `j` and `j+1` around an extremum at `j`.
    pub fn remove_extremum(&self, j: usize) -> Result<DyckPath> {
        match self.local_shape(j)? {
            LocalShape::Slope => Err(Error::WrongShape { index: j, expected: "extremum" }),
            _ => {
                let mut h = self.0[..j].to_vec();
                h.extend_from_slice(&self.0[j + 2..]);
                Ok(DyckPath(h))
            }
        }
    }

    /// Turns a valley at `j` into a peak (`α(j) += 2`).
    pub fn flip_min_to_max(&self, j: usize) -> Result<DyckPath> {
        if self.local_shape(j)? != LocalShape::Min {
            return Err(Error::WrongShape { index: j, expected: "minimum" });
        }
        let mut h = self.0.clone();
        h[j] += 2;
        Ok(DyckPath(h))
    }

    /// Turns a peak at `j` into a valley (`α(j) -= 2`); fails below zero.
    pub fn flip_max_to_min(&self, j: usize) -> Result<DyckPath> {
        if self.local_shape(j)? != LocalShape::Max {
            return Err(Error::WrongShape { index: j, expected: "maximum" });
        }
        if self.0[j] < 2 {
            return Err(Error::InvalidPath("flip would go below zero".into()));
        }
        let mut h = self.0.clone();
        h[j] -= 2;
        Ok(DyckPath(h))
    }

    pub fn to_pairing(&self) -> PairPartition {
        pairing_from_dyck(self)
    }
}

/// All Dyck paths of length `2n` in lexicographic order.
pub fn enumerate_dyck_paths(n: usize) -> Result<Vec<DyckPath>> {
    let count = if n > 60 { u128::MAX } else { catalan(n) };
    if count > ENUMERATION_CAP {
        return Err(Error::Capacity { what: "Dyck paths", count, cap: ENUMERATION_CAP });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut h = vec![0u32; 2 * n + 1];
    fn rec(h: &mut Vec<u32>, k: usize, n: usize, out: &mut Vec<DyckPath>) {
        if k == 2 * n {
            out.push(DyckPath(h.clone()));
            return;
        }
        let cur = h[k];
        let remaining = (2 * n - k) as u32;
        if cur > 0 {
            h[k + 1] = cur - 1;
            rec(h, k + 1, n, out);
        }
        if cur + 1 < remaining {
            h[k + 1] = cur + 1;
            rec(h, k + 1, n, out);
        }
    }
    rec(&mut h, 0, n, &mut out);
    Ok(out)
}

/// A pair partition of `1..=2N` stored as sorted links `(a, b)`, `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairPartition(Vec<(u32, u32)>);

impl PairPartition {
    /// Validates that `links` partition `1..=2N` into pairs.
    pub fn new(links: Vec<(u32, u32)>) -> Result<Self> {
        let mut links: Vec<(u32, u32)> =
            links.into_iter().map(|(a, b)| if a < b { (a, b) } else { (b, a) }).collect();
        links.sort_unstable();
        let n2 = 2 * links.len();
        let mut seen = vec![false; n2 + 1];
        for &(a, b) in &links {
            for p in [a, b] {
                if p == 0 || p as usize > n2 || seen[p as usize] {
                    return Err(Error::InvalidPairing(format!("point {p} used twice or out of range")));
                }
                seen[p as usize] = true;
            }
        }
        Ok(PairPartition(links))
    }

    pub fn links(&self) -> &[(u32, u32)] {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.len()
    }

    pub fn num_points(&self) -> usize {
        2 * self.0.len()
    }

    pub fn contains(&self, a: u32, b: u32) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.0.binary_search(&key).is_ok()
    }

    /// Partner of point `p`.
    pub fn partner(&self, p: u32) -> u32 {
        for &(a, b) in &self.0 {
            if a == p {
                return b;
            }
            if b == p {
                return a;
            }
        }
        panic!("point {p} not in pairing")
    }

    pub fn is_planar(&self) -> bool {
        !links_cross(&self.0)
    }

    /// `is_a[p]` is true when `p` is the left endpoint of its link.
    pub fn left_endpoint_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.num_points() + 1];
        for &(a, _) in &self.0 {
            m[a as usize] = true;
        }
        m
    }
}

fn links_cross(links: &[(u32, u32)]) -> bool {
    for (i, &(a, b)) in links.iter().enumerate() {
        for &(c, d) in &links[i + 1..] {
            if (a < c && c < b && b < d) || (c < a && a < d && d < b) {
                return true;
            }
        }
    }
    false
}

impl Serialize for PairPartition {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_links(&self.0, s)
    }
}

fn serialize_links<S: Serializer>(links: &[(u32, u32)], s: S) -> std::result::Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(links.len()))?;
    for &(a, b) in links {
        seq.serialize_element(&[a, b])?;
    }
    seq.end()
}

/// The planar pairing whose left endpoints are the up steps of `d`.
pub fn pairing_from_dyck(d: &DyckPath) -> PairPartition {
    let mut stack = Vec::new();
    let mut links = Vec::with_capacity(d.size());
    for k in 1..=d.len() {
        if d.step(k) == 1 {
            stack.push(k as u32);
        } else {
            let a = stack.pop().expect("valid Dyck path");
            links.push((a, k as u32));
        }
    }
    links.sort_unstable();
    PairPartition(links)
}

pub fn dyck_from_pairing(p: &PairPartition) -> Result<DyckPath> {
    if !p.is_planar() {
        return Err(Error::NotPlanar);
    }
    let mask = p.left_endpoint_mask();
    let steps: Vec<i8> = (1..=p.num_points()).map(|k| if mask[k] { 1 } else { -1 }).collect();
    DyckPath::from_steps(&steps)
}

/// A planar link pattern: point `i` carries `valence[i-1]` link endpoints.
///
/// Links may repeat. Loops are not allowed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkPattern {
    valence: Vec<u32>,
    links: Vec<(u32, u32)>,
}

impl LinkPattern {
    /// Validates degrees and planarity.
    pub fn new(valence: Vec<u32>, links: Vec<(u32, u32)>) -> Result<Self> {
        let mut links: Vec<(u32, u32)> =
            links.into_iter().map(|(a, b)| if a < b { (a, b) } else { (b, a) }).collect();
        links.sort_unstable();
        let n = valence.len();
        let mut deg = vec![0u32; n + 1];
        for &(a, b) in &links {
            if a == b {
                return Err(Error::InvalidPattern(format!("loop at {a}")));
            }
            if a == 0 || b as usize > n {
                return Err(Error::InvalidPattern(format!("link ({a},{b}) out of range")));
            }
            deg[a as usize] += 1;
            deg[b as usize] += 1;
        }
        if deg[1..] != valence[..] {
            return Err(Error::InvalidPattern(format!("degrees {:?} differ from valences {:?}", &deg[1..], valence)));
        }
        let lp = LinkPattern { valence, links };
        tau(&lp)?;
        Ok(lp)
    }

    pub fn valence(&self) -> &[u32] {
        &self.valence
    }

    pub fn links(&self) -> &[(u32, u32)] {
        &self.links
    }

    pub fn num_points(&self) -> usize {
        self.valence.len()
    }

    /// Multiplicity of the link between `a` and `b`.
    pub fn multiplicity(&self, a: u32, b: u32) -> usize {
        let key = if a < b { (a, b) } else { (b, a) };
        self.links.iter().filter(|&&l| l == key).count()
    }

    /// Merges sub-points of a pairing of `Σ valence` points back into points.
    pub fn from_split(pairing: &PairPartition, valence: &[u32]) -> Result<Self> {
        let total: u32 = valence.iter().sum();
        if total as usize != pairing.num_points() {
            return Err(Error::LengthMismatch(total as usize, pairing.num_points()));
        }
        let mut owner = vec![0u32; total as usize + 1];
        let mut k = 1usize;
        for (i, &v) in valence.iter().enumerate() {
            for _ in 0..v {
                owner[k] = i as u32 + 1;
                k += 1;
            }
        }
        let mut links = Vec::with_capacity(pairing.size());
        for &(a, b) in pairing.links() {
            let (oa, ob) = (owner[a as usize], owner[b as usize]);
            if oa == ob {
                return Err(Error::InvalidPattern(format!("link ({a},{b}) is internal to point {oa}")));
            }
            links.push((oa.min(ob), oa.max(ob)));
        }
        links.sort_unstable();
        Ok(LinkPattern { valence: valence.to_vec(), links })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("links serialise")
    }
}

impl Serialize for LinkPattern {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_links(&self.links, s)
    }
}

fn write_links(links: &[(u32, u32)], f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
    write!(f, "{{")?;
    for (i, (a, b)) in links.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{{{a},{b}}}")?;
    }
    write!(f, "}}")
}

impl std::fmt::Display for LinkPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write_links(&self.links, f)
    }
}

impl std::fmt::Display for PairPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write_links(&self.0, f)
    }
}

/// Splits every point of a link pattern into `valence` sub-points without
/// introducing crossings, giving a pairing of `Σ valence` points.
///
/// At each point, links to the left are attached first, nearest partner
/// leftmost; links to the right follow, farthest partner leftmost. Repeated
/// links between two points are nested.
pub fn tau(lp: &LinkPattern) -> Result<PairPartition> {
    let n = lp.num_points();
    let mut start = vec![0u32; n + 2];
    start[1] = 1;
    for i in 1..=n {
        start[i + 1] = start[i] + lp.valence[i - 1];
    }
    // For each point, the ordered list of partners (one entry per link end).
    let mut order: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
    for &(a, b) in &lp.links {
        order[a as usize].push(b);
        order[b as usize].push(a);
    }
    for (j, partners) in order.iter_mut().enumerate() {
        let j = j as u32;
        partners.sort_by(|&p, &q| {
            let side = |x: u32| if x < j { 0 } else { 1 };
            side(p).cmp(&side(q)).then(q.cmp(&p))
        });
    }
    let subpoints = |j: usize, k: u32| -> Vec<u32> {
        order[j]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p == k)
            .map(|(i, _)| start[j] + i as u32)
            .collect()
    };
    let mut links = Vec::with_capacity(lp.links.len());
    let mut done = std::collections::BTreeSet::new();
    for &(a, b) in &lp.links {
        if !done.insert((a, b)) {
            continue;
        }
        let s = subpoints(a as usize, b);
        let t = subpoints(b as usize, a);
        for (i, &si) in s.iter().enumerate() {
            links.push((si, t[t.len() - 1 - i]));
        }
    }
    links.sort_unstable();
    let pairing = PairPartition(links);
    if !pairing.is_planar() {
        return Err(Error::NotPlanar);
    }
    Ok(pairing)
}

/// Enumerates planar link patterns with valences all equal to 1 or all equal
/// to 2, ordered by the lexicographic order of their split Dyck paths.
pub fn enumerate_link_patterns(valence: &[u32]) -> Result<Vec<LinkPattern>> {
    let n = valence.len();
    if valence.iter().all(|&v| v == 1) {
        if n % 2 != 0 {
            return Ok(Vec::new());
        }
        return Ok(enumerate_dyck_paths(n / 2)?
            .iter()
            .map(|d| LinkPattern { valence: valence.to_vec(), links: pairing_from_dyck(d).0 })
            .collect());
    }
    if valence.iter().all(|&v| v == 2) {
        let mut out = Vec::new();
        for d in enumerate_dyck_paths(n)? {
            let internal = (1..=n).any(|i| d.local_shape(2 * i - 1) == Ok(LocalShape::Max));
            if !internal {
                out.push(LinkPattern::from_split(&pairing_from_dyck(&d), valence)?);
            }
        }
        return Ok(out);
    }
    Err(Error::UnsupportedValence(valence.to_vec()))
}

/// Valence vector `(2, ..., 2)` with `2n` entries.
pub fn valence_two(n: usize) -> Vec<u32> {
    vec![2; 2 * n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_enumerations() {
        assert_eq!(enumerate_dyck_paths(0).unwrap(), vec![DyckPath(vec![0])]);
        assert_eq!(enumerate_dyck_paths(3).unwrap().len(), 5);
        assert_eq!(enumerate_dyck_paths(5).unwrap().len(), 42);
        assert!(matches!(enumerate_dyck_paths(14), Err(Error::Capacity { .. })));
    }

    #[test]
    fn lexicographic_order_n2() {
        let p = enumerate_dyck_paths(2).unwrap();
        assert_eq!(p[0].heights(), &[0, 1, 0, 1, 0]);
        assert_eq!(p[1].heights(), &[0, 1, 2, 1, 0]);
    }

    #[test]
    fn pairing_examples() {
        let nest = PairPartition::new(vec![(1, 4), (2, 3)]).unwrap();
        assert_eq!(dyck_from_pairing(&nest).unwrap().heights(), &[0, 1, 2, 1, 0]);
        let flat = PairPartition::new(vec![(1, 2), (3, 4)]).unwrap();
        assert_eq!(dyck_from_pairing(&flat).unwrap().heights(), &[0, 1, 0, 1, 0]);
        let crossing = PairPartition::new(vec![(1, 3), (2, 4)]).unwrap();
        assert_eq!(dyck_from_pairing(&crossing), Err(Error::NotPlanar));
    }

    #[test]
    fn shapes_and_moves() {
        let d = DyckPath::new(vec![0, 1, 0, 1, 0]).unwrap();
        assert_eq!(d.local_shape(1).unwrap(), LocalShape::Max);
        assert_eq!(d.local_shape(2).unwrap(), LocalShape::Min);
        assert!(d.local_shape(0).is_err());
        assert!(d.local_shape(4).is_err());
        assert_eq!(d.flip_min_to_max(2).unwrap().heights(), &[0, 1, 2, 1, 0]);
        assert_eq!(d.remove_extremum(1).unwrap().heights(), &[0, 1, 0]);
        let e = DyckPath::new(vec![0, 1, 0]).unwrap();
        assert!(d.leq(&e).is_err());
    }

    #[test]
    fn tau_of_doubled_pattern() {
        let lp = LinkPattern::new(vec![2; 4], vec![(1, 2), (1, 2), (3, 4), (3, 4)]).unwrap();
        let t = tau(&lp).unwrap();
        assert_eq!(t.links(), &[(1, 4), (2, 3), (5, 8), (6, 7)]);
        assert_eq!(LinkPattern::from_split(&t, lp.valence()).unwrap(), lp);
    }

    #[test]
    fn valence_two_counts() {
        assert_eq!(enumerate_link_patterns(&[2, 2]).unwrap().len(), 1);
        assert_eq!(enumerate_link_patterns(&[2; 4]).unwrap().len(), 3);
        assert!(enumerate_link_patterns(&[1, 2, 1]).is_err());
    }

    #[test]
    fn json_form() {
        let lp = LinkPattern::new(vec![2; 4], vec![(4, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        assert_eq!(lp.to_json().to_string(), "[[1,2],[1,4],[2,3],[3,4]]");
    }
}
