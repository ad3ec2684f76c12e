use fusion_core::probability::RectanglePolygon;
use fusion_sim::field::{harmonic_extension, laplacian_residual, sample_zero_boundary_gff, SpectralGrid};
use fusion_sim::lattice::{LatticeSpec, Site};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand::Rng;

fn square(cells: usize) -> LatticeSpec {
    LatticeSpec::new(&RectanglePolygon::corners(1.0).unwrap(), cells).unwrap()
}

/// Left half of the boundary positive, right half negative.
fn split_square(cells: usize) -> LatticeSpec {
    LatticeSpec::new(&RectanglePolygon::new(1.0, vec![2.5, 0.5]).unwrap(), cells).unwrap()
}

#[test]
fn uniform_boundary_gives_constant_field() {
    let spec = LatticeSpec::uniform(12, 9).unwrap();
    let mu = 1.7;
    let f = harmonic_extension(&spec, mu).unwrap();
    for (v, s) in f.values.iter().zip(spec.sites()) {
        if *s != Site::Marked(1) {
            assert!((v - mu).abs() < 1e-12, "{v}");
        }
    }
}

#[test]
fn antisymmetric_boundary_gives_antisymmetric_field() {
    let spec = split_square(8);
    let mu = 1.25;
    let f = harmonic_extension(&spec, mu).unwrap();
    let (wx, wy) = spec.cells();
    assert!(f.get(&spec, 4, 4).abs() < 1e-13);
    for j in 1..wy {
        for i in 1..wx {
            assert!((f.get(&spec, i, j) + f.get(&spec, wx - i, j)).abs() < 1e-12);
        }
    }
}

#[test]
fn maximum_principle_and_residual() {
    for (l, cells) in [(1.0, 16), (2.0, 10), (0.5, 24)] {
        let spec = LatticeSpec::new(&RectanglePolygon::corners(l).unwrap(), cells).unwrap();
        let mu = (std::f64::consts::FRAC_PI_2).sqrt();
        let f = harmonic_extension(&spec, mu).unwrap();
        assert!(f.values.iter().all(|v| v.abs() <= mu + 1e-12));
        assert!(laplacian_residual(&spec, &f) <= 1e-10 * mu);
    }
}

#[test]
fn single_vertex_sample_is_half_a_normal() {
    let spec = square(2);
    assert_eq!(spec.interior(), (1, 1));
    let mut a = ChaCha8Rng::seed_from_u64(9);
    let mut b = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let f = sample_zero_boundary_gff(&spec, &mut a);
        let z: f64 = b.sample(StandardNormal);
        assert!((f.get(&spec, 1, 1) - 0.5 * z).abs() < 1e-15);
    }
}

/// `(−Δ)⁻¹` on an `n × n` interior grid by dense Gauss–Jordan elimination.
fn dense_green(n: usize) -> Vec<Vec<f64>> {
    let m = n * n;
    let mut a = vec![vec![0.0; 2 * m]; m];
    for y in 0..n {
        for x in 0..n {
            let v = x + n * y;
            a[v][v] = 4.0;
            a[v][m + v] = 1.0;
            if x > 0 {
                a[v][v - 1] = -1.0;
            }
            if x + 1 < n {
                a[v][v + 1] = -1.0;
            }
            if y > 0 {
                a[v][v - n] = -1.0;
            }
            if y + 1 < n {
                a[v][v + n] = -1.0;
            }
        }
    }
    for c in 0..m {
        let piv = a[c][c];
        for k in 0..2 * m {
            a[c][k] /= piv;
        }
        for r in 0..m {
            if r != c && a[r][c] != 0.0 {
                let f = a[r][c];
                for k in 0..2 * m {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    a.into_iter().map(|row| row[m..].to_vec()).collect()
}

#[test]
fn covariance_matches_dense_inverse() {
    let n = 8;
    let green = dense_green(n);
    let grid = SpectralGrid::new(n, n);
    let mut ws = grid.workspace();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples = 100_000usize;
    let m = n * n;
    let mut sum = vec![0.0; m];
    let mut prod = vec![0.0; m * m];
    let mut x = vec![0.0; m];
    for _ in 0..samples {
        grid.sample_into(&mut rng, &mut ws, &mut x);
        for i in 0..m {
            sum[i] += x[i];
            for j in i..m {
                prod[i * m + j] += x[i] * x[j];
            }
        }
    }
    let s = samples as f64;
    let mut max_err: f64 = 0.0;
    let mut max_se: f64 = 0.0;
    for i in 0..m {
        for j in i..m {
            let c = prod[i * m + j] / s - sum[i] * sum[j] / (s * s);
            max_err = max_err.max((c - green[i][j]).abs());
            max_se = max_se.max(((green[i][i] * green[j][j] + green[i][j] * green[i][j]) / s).sqrt());
        }
    }
    assert!(max_err <= 3.0 * max_se, "max error {max_err:e} vs 3·SE {:e}", 3.0 * max_se);

    // The grid-average of the field has variance Σ G / m² per sample.
    let grand = sum.iter().sum::<f64>() / (s * m as f64);
    let var_mean: f64 = green.iter().flatten().sum::<f64>() / (m * m) as f64;
    assert!(grand.abs() <= 3.0 * (var_mean / s).sqrt(), "mean {grand:e}");
}
