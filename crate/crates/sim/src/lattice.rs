//! Vertex grid of a lattice rectangle and the labelling of its boundary.

use crate::error::{SimError, SimResult};
use fusion_core::elliptic::{boundary_point, perimeter};
use fusion_core::probability::RectanglePolygon;
use serde::Serialize;

/// Role of a vertex in the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Site {
    Interior,
    /// Boundary vertex strictly inside arc `A_j` (1-based), which runs from
    /// the `j`-th marked vertex to the next one counterclockwise.
    Arc(u8),
    /// Boundary vertex carrying a marked point.
    Marked(u8),
}

/// The rectangle `[0, wx·δ] × [0, 1]` discretised with mesh `δ = 1/wy`.
///
/// Vertices are `(i, j)` with `0 ≤ i ≤ wx`, `0 ≤ j ≤ wy`, stored row-major
/// at `i + (wx + 1)·j`. The interior grid is `(wx − 1) × (wy − 1)`.
#[derive(Clone, Debug, Serialize)]
pub struct LatticeSpec {
    wx: usize,
    wy: usize,
    n_arcs: usize,
    sites: Vec<Site>,
    marked_vertices: Vec<(usize, usize)>,
    snap_distances: Vec<f64>,
}

/// Positive arcs are `A₁, A₃, …`.
pub fn arc_sign(arc: u8) -> f64 {
    if arc % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

impl LatticeSpec {
    /// Lattice version of `r` with `cells` edges across the unit height. The
    /// width is rounded to `round(L·cells)` edges and each marked point is
    /// snapped to the nearest boundary vertex.
    pub fn new(r: &RectanglePolygon, cells: usize) -> SimResult<Self> {
        let l = r.aspect();
        let wy = cells;
        let wx = (l * cells as f64).round() as usize;
        if wx < 2 || wy < 2 {
            return Err(SimError::Lattice(format!("{wx} × {wy} cells has no interior")));
        }
        let delta = 1.0 / wy as f64;
        let lat_l = wx as f64 * delta;
        let mut marked_vertices = Vec::new();
        let mut snap_distances = Vec::new();
        for &s in r.marked() {
            let (x, y) = boundary_point(l, s);
            // Stretch horizontally onto the lattice rectangle, then snap.
            let xs = x * lat_l / l;
            let (i, j) = if y == 0.0 || y == 1.0 {
                ((xs / delta).round() as usize, if y == 0.0 { 0 } else { wy })
            } else {
                (if x == 0.0 { 0 } else { wx }, (y / delta).round() as usize)
            };
            let (i, j) = (i.min(wx), j.min(wy));
            snap_distances.push(((i as f64 * delta - xs).powi(2) + (j as f64 * delta - y).powi(2)).sqrt());
            marked_vertices.push((i, j));
        }
        let per = perimeter(lat_l);
        let arclen = |(i, j): (usize, usize)| vertex_arclength(wx, wy, i, j) * delta;
        let marks: Vec<f64> = marked_vertices.iter().map(|&v| arclen(v)).collect();
        let rel: Vec<f64> = marks.iter().map(|s| (s - marks[0]).rem_euclid(per)).collect();
        if rel.windows(2).any(|w| w[0] >= w[1] - 0.5 * delta) {
            return Err(SimError::Lattice("marked points collide after snapping".into()));
        }
        let mut sites = vec![Site::Interior; (wx + 1) * (wy + 1)];
        for j in 0..=wy {
            for i in 0..=wx {
                if i > 0 && i < wx && j > 0 && j < wy {
                    continue;
                }
                let t = (arclen((i, j)) - marks[0]).rem_euclid(per);
                let site = match rel.iter().position(|&m| (m - t).abs() < 0.5 * delta) {
                    Some(k) => Site::Marked(k as u8 + 1),
                    None => Site::Arc(rel.iter().rposition(|&m| m < t).unwrap() as u8 + 1),
                };
                sites[i + (wx + 1) * j] = site;
            }
        }
        Ok(LatticeSpec { wx, wy, n_arcs: r.marked().len(), sites, marked_vertices, snap_distances })
    }

    /// A `wx × wy` grid whose whole boundary is a single positive arc, with
    /// one marked vertex at the origin.
    pub fn uniform(wx: usize, wy: usize) -> SimResult<Self> {
        if wx < 2 || wy < 2 {
            return Err(SimError::Lattice(format!("{wx} × {wy} cells has no interior")));
        }
        let mut sites = vec![Site::Arc(1); (wx + 1) * (wy + 1)];
        for j in 1..wy {
            for i in 1..wx {
                sites[i + (wx + 1) * j] = Site::Interior;
            }
        }
        sites[0] = Site::Marked(1);
        Ok(LatticeSpec { wx, wy, n_arcs: 1, sites, marked_vertices: vec![(0, 0)], snap_distances: vec![0.0] })
    }

    /// Edges across the width and the height.
    pub fn cells(&self) -> (usize, usize) {
        (self.wx, self.wy)
    }

    pub fn mesh(&self) -> f64 {
        1.0 / self.wy as f64
    }

    /// Interior grid dimensions `(nx, ny)`.
    pub fn interior(&self) -> (usize, usize) {
        (self.wx - 1, self.wy - 1)
    }

    pub fn num_vertices(&self) -> usize {
        self.sites.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.n_arcs
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + (self.wx + 1) * j
    }

    pub fn site(&self, i: usize, j: usize) -> Site {
        self.sites[self.index(i, j)]
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn marked_vertices(&self) -> &[(usize, usize)] {
        &self.marked_vertices
    }

    pub fn snap_distances(&self) -> &[f64] {
        &self.snap_distances
    }

    /// Boundary value of a vertex for boundary magnitude `mu`: `±mu` on the
    /// arcs, zero at marked vertices, and zero (unused) in the interior.
    pub fn boundary_value(&self, i: usize, j: usize, mu: f64) -> f64 {
        match self.site(i, j) {
            Site::Arc(a) => arc_sign(a) * mu,
            _ => 0.0,
        }
    }
}

/// Counterclockwise arc length from the origin, in lattice units.
fn vertex_arclength(wx: usize, wy: usize, i: usize, j: usize) -> f64 {
    let (i, j, wx, wy) = (i as f64, j as f64, wx as f64, wy as f64);
    if j == 0.0 {
        i
    } else if i == wx {
        wx + j
    } else if j == wy {
        2.0 * wx + wy - i
    } else {
        2.0 * wx + 2.0 * wy - j
    }
}
