//! Edge openings of the metric graph and the boundary clusters they form.

use crate::field::LatticeField;
use crate::lattice::{LatticeSpec, Site};
use fusion_core::combinat::LinkPattern;
use fusion_core::probability::{pattern_from_cluster_partitions, ClusterPartitions};
use rand::Rng;
use serde::Serialize;

/// Probability that a Brownian bridge of unit duration from `a` to `b`
/// avoids zero: `1 − e^{−2ab}` when both ends are strictly positive.
pub fn edge_open_probability(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        -(-2.0 * a * b).exp_m1()
    } else {
        0.0
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.size.fill(1);
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra as u32;
        self.size[ra] += self.size[rb];
    }
}

/// Cluster structure after one round of edge openings. Union-find nodes are
/// the interior vertices followed by one super-node per boundary arc; since
/// edges only open between vertices of equal sign, positive and negative
/// clusters never share a root.
#[derive(Clone, Debug)]
pub struct ClusterState {
    pub uf: UnionFind,
    /// Open flag per edge, in the order of [`edges`].
    pub open: Vec<bool>,
    n_interior: usize,
    n_arcs: usize,
}

impl ClusterState {
    pub fn new(spec: &LatticeSpec) -> Self {
        let (nx, ny) = spec.interior();
        let n_interior = nx * ny;
        ClusterState {
            uf: UnionFind::new(n_interior + spec.num_arcs()),
            open: vec![false; edges(spec).len()],
            n_interior,
            n_arcs: spec.num_arcs(),
        }
    }

    pub fn arc_node(&self, arc: u8) -> usize {
        self.n_interior + arc as usize - 1
    }

    /// Arcs of the given sign grouped by cluster, blocks in increasing order.
    pub fn arc_partition(&mut self, positive: bool) -> Vec<Vec<usize>> {
        let mut blocks: Vec<(usize, Vec<usize>)> = Vec::new();
        for a in (if positive { 1 } else { 2 }..=self.n_arcs).step_by(2) {
            let root = self.uf.find(self.arc_node(a as u8));
            match blocks.iter_mut().find(|(r, _)| *r == root) {
                Some((_, b)) => b.push(a),
                None => blocks.push((root, vec![a])),
            }
        }
        blocks.into_iter().map(|(_, b)| b).collect()
    }
}

/// Lattice edges with at least one interior endpoint, as pairs of vertex
/// indices. Edges joining two boundary
/// vertices never change connectivity: consecutive arc vertices already
/// share a super-node and the edges next to a marked vertex stay closed.
pub fn edges(spec: &LatticeSpec) -> Vec<(usize, usize)> {
    let (wx, wy) = spec.cells();
    let interior = |i: usize, j: usize| spec.site(i, j) == Site::Interior;
    let mut out = Vec::new();
    for j in 0..=wy {
        for i in 0..=wx {
            if i < wx && (interior(i, j) || interior(i + 1, j)) {
                out.push((spec.index(i, j), spec.index(i + 1, j)));
            }
            if j < wy && (interior(i, j) || interior(i, j + 1)) {
                out.push((spec.index(i, j), spec.index(i, j + 1)));
            }
        }
    }
    out
}

/// Union-find node of every vertex, `None` for marked vertices.
pub fn node_map(spec: &LatticeSpec) -> Vec<Option<usize>> {
    let (nx, ny) = spec.interior();
    let (wx, wy) = spec.cells();
    let base = nx * ny;
    let mut out = vec![None; spec.num_vertices()];
    for j in 0..=wy {
        for i in 0..=wx {
            out[spec.index(i, j)] = match spec.site(i, j) {
                Site::Interior => Some((i - 1) + nx * (j - 1)),
                Site::Arc(a) => Some(base + a as usize - 1),
                Site::Marked(_) => None,
            };
        }
    }
    out
}

/// Precomputed edge list and node map, shared by all trials on a lattice.
#[derive(Clone, Debug)]
pub struct Percolator {
    edges: Vec<(usize, usize)>,
    nodes: Vec<Option<usize>>,
}

impl Percolator {
    pub fn new(spec: &LatticeSpec) -> Self {
        Percolator { edges: edges(spec), nodes: node_map(spec) }
    }

    /// Opens every same-sign edge independently and merges clusters into
    /// `state`, which is reset first.
    pub fn run<R: Rng + ?Sized>(&self, values: &[f64], state: &mut ClusterState, rng: &mut R) {
        state.uf.reset();
        for (k, &(u, v)) in self.edges.iter().enumerate() {
            let (a, b) = (values[u], values[v]);
            let p = edge_open_probability(a, b).max(edge_open_probability(-a, -b));
            let open = p > 0.0 && rng.gen::<f64>() < p;
            state.open[k] = open;
            if open {
                if let (Some(x), Some(y)) = (self.nodes[u], self.nodes[v]) {
                    state.uf.union(x, y);
                }
            }
        }
    }
}

/// Samples edge openings for a field that already carries its boundary
/// values.
pub fn percolate<R: Rng + ?Sized>(field: &LatticeField, spec: &LatticeSpec, rng: &mut R) -> ClusterState {
    let mut state = ClusterState::new(spec);
    Percolator::new(spec).run(&field.values, &mut state, rng);
    state
}

/// Arc partitions that do not form a compatible non-crossing pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Anomaly {
    pub positive: Vec<Vec<usize>>,
    pub negative: Vec<Vec<usize>>,
}

/// Frontier link pattern of the boundary clusters.
pub fn extract_pattern(c: &mut ClusterState, spec: &LatticeSpec) -> Result<LinkPattern, Anomaly> {
    let positive = c.arc_partition(true);
    let negative = c.arc_partition(false);
    let anomaly = || Anomaly { positive: positive.clone(), negative: negative.clone() };
    let parts = ClusterPartitions::new(spec.num_arcs() / 2, positive.clone(), negative.clone()).map_err(|_| anomaly())?;
    pattern_from_cluster_partitions(&parts).map_err(|_| anomaly())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bridge_rule_values() {
        assert_eq!(edge_open_probability(0.0, 0.0), 0.0);
        assert_eq!(edge_open_probability(1.0, -1.0), 0.0);
        assert!((edge_open_probability(1.0, 1.0) - 0.864_664_716_763_387).abs() < 1e-14);
        assert_eq!(edge_open_probability(2.0, 0.5), edge_open_probability(1.0, 1.0));
    }

    #[test]
    fn union_find_merges() {
        let mut uf = UnionFind::new(5);
        uf.union(0, 1);
        uf.union(3, 4);
        uf.union(1, 4);
        assert_eq!(uf.find(0), uf.find(3));
        assert_ne!(uf.find(0), uf.find(2));
    }
}
