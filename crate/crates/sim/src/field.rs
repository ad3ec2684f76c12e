//! Discrete Gaussian free field and harmonic extension on the interior grid,
//! both diagonalised by the two-dimensional sine transform.

use crate::error::{SimError, SimResult};
use crate::lattice::{LatticeSpec, Site};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Values on every vertex of a [`LatticeSpec`], in its row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeField {
    pub values: Vec<f64>,
}

impl LatticeField {
    pub fn get(&self, spec: &LatticeSpec, i: usize, j: usize) -> f64 {
        self.values[spec.index(i, j)]
    }
}

/// Unnormalised type-I sine sums `S[x] = Σ_{k=1}^{n} a_k sin(π k x/(n+1))`
/// along rows and columns of an `nx × ny` array, via FFTs of length
/// `2(n+1)`. Two real rows share one complex transform.
struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1 {
    fn new(planner: &mut FftPlanner<f64>, n: usize) -> Self {
        Dst1 { n, fft: planner.plan_fft_forward(2 * (n + 1)) }
    }

    /// Transforms `a` and `b` (each of length `n`) in place.
    fn pair(&self, a: &mut [f64], b: &mut [f64], buf: &mut [Complex<f64>], scratch: &mut [Complex<f64>]) {
        let n = self.n;
        let m = 2 * (n + 1);
        buf[0] = Complex::new(0.0, 0.0);
        buf[n + 1] = Complex::new(0.0, 0.0);
        for k in 1..=n {
            let v = Complex::new(a[k - 1], b[k - 1]);
            buf[k] = v;
            buf[m - k] = -v;
        }
        self.fft.process_with_scratch(buf, scratch);
        // FFT of an odd sequence is −2i times its sine sum; with a + ib
        // packed, the real part carries 2·S_b and the imaginary −2·S_a.
        for x in 1..=n {
            a[x - 1] = -0.5 * buf[x].im;
            b[x - 1] = 0.5 * buf[x].re;
        }
    }

    fn scratch_len(&self) -> usize {
        self.fft.get_inplace_scratch_len()
    }
}

/// Reusable sine-transform machinery for one interior grid.
pub struct SpectralGrid {
    nx: usize,
    ny: usize,
    rows: Dst1,
    cols: Dst1,
    /// Laplacian eigenvalues `λ_{jk} = 4 − 2cos(πj/(nx+1)) − 2cos(πk/(ny+1))`.
    eigen: Vec<f64>,
    /// Normalisation `2/√((nx+1)(ny+1))` of the orthonormal sine basis.
    norm: f64,
}

/// Per-thread buffers for [`SpectralGrid`].
pub struct Workspace {
    grid: Vec<f64>,
    line_a: Vec<f64>,
    line_b: Vec<f64>,
    buf: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl SpectralGrid {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        let rows = Dst1::new(&mut planner, nx);
        let cols = Dst1::new(&mut planner, ny);
        let mut eigen = vec![0.0; nx * ny];
        for k in 1..=ny {
            for j in 1..=nx {
                eigen[(j - 1) + nx * (k - 1)] =
                    4.0 - 2.0 * (PI * j as f64 / (nx + 1) as f64).cos() - 2.0 * (PI * k as f64 / (ny + 1) as f64).cos();
            }
        }
        let norm = 2.0 / (((nx + 1) * (ny + 1)) as f64).sqrt();
        SpectralGrid { nx, ny, rows, cols, eigen, norm }
    }

    pub fn for_spec(spec: &LatticeSpec) -> Self {
        let (nx, ny) = spec.interior();
        Self::new(nx, ny)
    }

    pub fn workspace(&self) -> Workspace {
        let longest = self.nx.max(self.ny);
        Workspace {
            grid: vec![0.0; self.nx * self.ny],
            line_a: vec![0.0; longest],
            line_b: vec![0.0; longest],
            buf: vec![Complex::new(0.0, 0.0); 2 * (longest + 1)],
            scratch: vec![Complex::new(0.0, 0.0); self.rows.scratch_len().max(self.cols.scratch_len())],
        }
    }

    /// Applies the orthonormal 2D sine transform (an involution) to
    /// `w.grid`.
    fn transform(&self, w: &mut Workspace) {
        let (nx, ny) = (self.nx, self.ny);
        let buf_r = &mut w.buf[..2 * (nx + 1)];
        let mut r = 0;
        while r < ny {
            let (head, tail) = w.grid.split_at_mut((r + 1) * nx);
            let a = &mut head[r * nx..];
            if r + 1 < ny {
                self.rows.pair(a, &mut tail[..nx], buf_r, &mut w.scratch);
            } else {
                let b = &mut w.line_b[..nx];
                b.fill(0.0);
                self.rows.pair(a, b, buf_r, &mut w.scratch);
            }
            r += 2;
        }
        let buf_c = &mut w.buf[..2 * (ny + 1)];
        let mut c = 0;
        while c < nx {
            let a = &mut w.line_a[..ny];
            let b = &mut w.line_b[..ny];
            for k in 0..ny {
                a[k] = w.grid[c + nx * k];
                b[k] = if c + 1 < nx { w.grid[c + 1 + nx * k] } else { 0.0 };
            }
            self.cols.pair(a, b, buf_c, &mut w.scratch);
            for k in 0..ny {
                w.grid[c + nx * k] = a[k] * self.norm;
                if c + 1 < nx {
                    w.grid[c + 1 + nx * k] = b[k] * self.norm;
                }
            }
            c += 2;
        }
    }

    /// Fills `out` (length `nx·ny`, interior row-major) with a centred
    /// Gaussian vector of covariance `(−Δ)⁻¹`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, w: &mut Workspace, out: &mut [f64]) {
        for (g, &lam) in w.grid.iter_mut().zip(&self.eigen) {
            let z: f64 = rng.sample(StandardNormal);
            *g = z / lam.sqrt();
        }
        self.transform(w);
        out.copy_from_slice(&w.grid);
    }

    /// Solves `−Δu = b` with zero Dirichlet data.
    pub fn solve_into(&self, b: &[f64], w: &mut Workspace, out: &mut [f64]) {
        w.grid.copy_from_slice(b);
        self.transform(w);
        for (g, &lam) in w.grid.iter_mut().zip(&self.eigen) {
            *g /= lam;
        }
        self.transform(w);
        out.copy_from_slice(&w.grid);
    }
}

/// Harmonic function with boundary values `±mu` on the arcs and zero at the
/// marked vertices.
pub fn harmonic_extension(spec: &LatticeSpec, mu: f64) -> SimResult<LatticeField> {
    let (wx, wy) = spec.cells();
    let (nx, ny) = spec.interior();
    let mut values = vec![0.0; spec.num_vertices()];
    for j in 0..=wy {
        for i in 0..=wx {
            values[spec.index(i, j)] = spec.boundary_value(i, j, mu);
        }
    }
    let mut rhs = vec![0.0; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let (i, j) = (ix + 1, iy + 1);
            let mut s = 0.0;
            for (a, b) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                if spec.site(a, b) != Site::Interior {
                    s += values[spec.index(a, b)];
                }
            }
            rhs[ix + nx * iy] = s;
        }
    }
    let grid = SpectralGrid::new(nx, ny);
    let mut w = grid.workspace();
    let mut u = vec![0.0; nx * ny];
    grid.solve_into(&rhs, &mut w, &mut u);
    for iy in 0..ny {
        for ix in 0..nx {
            values[spec.index(ix + 1, iy + 1)] = u[ix + nx * iy];
        }
    }
    let field = LatticeField { values };
    let residual = laplacian_residual(spec, &field);
    if !(residual <= 1e-10 * mu.abs().max(f64::MIN_POSITIVE)) {
        return Err(SimError::Solver { residual });
    }
    Ok(field)
}

/// Largest `|4u(v) − Σ_{w∼v} u(w)|` over interior vertices.
pub fn laplacian_residual(spec: &LatticeSpec, f: &LatticeField) -> f64 {
    let (wx, wy) = spec.cells();
    let mut worst: f64 = 0.0;
    for j in 1..wy {
        for i in 1..wx {
            let v = f.get(spec, i, j);
            let s = f.get(spec, i - 1, j) + f.get(spec, i + 1, j) + f.get(spec, i, j - 1) + f.get(spec, i, j + 1);
            worst = worst.max((4.0 * v - s).abs());
        }
    }
    worst
}

/// One exact sample of the zero-boundary field `Γ` on the whole vertex set.
pub fn sample_zero_boundary_gff<R: Rng + ?Sized>(spec: &LatticeSpec, rng: &mut R) -> LatticeField {
    let grid = SpectralGrid::for_spec(spec);
    let mut w = grid.workspace();
    let (nx, ny) = spec.interior();
    let mut inner = vec![0.0; nx * ny];
    grid.sample_into(rng, &mut w, &mut inner);
    let mut values = vec![0.0; spec.num_vertices()];
    for iy in 0..ny {
        for ix in 0..nx {
            values[spec.index(ix + 1, iy + 1)] = inner[ix + nx * iy];
        }
    }
    LatticeField { values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_is_an_involution() {
        let g = SpectralGrid::new(5, 4);
        let mut w = g.workspace();
        let orig: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin() + 0.1 * i as f64).collect();
        w.grid.copy_from_slice(&orig);
        g.transform(&mut w);
        g.transform(&mut w);
        for (a, b) in w.grid.iter().zip(&orig) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn single_vertex_variance() {
        // One interior vertex: the sample is ξ/2.
        let g = SpectralGrid::new(1, 1);
        assert!((g.eigen[0] - 4.0).abs() < 1e-15);
        assert!((g.norm - 1.0).abs() < 1e-15);
    }
}
