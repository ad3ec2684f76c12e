//! Finite-difference residuals of the second- and third-order null-vector
//! equations, Möbius covariance, fusion asymptotics and the refined bound.
//!
//! All derivatives are central differences evaluated in double-double
//! arithmetic so that round-off stays far below truncation error.

use crate::coulomb::CompiledCombo;
use crate::combinat::PairPartition;
use crate::dd::div;
use crate::error::{Error, Result};
use crate::partition_fn::{fuse_once, pure_partition_combo, PointConfig, H_FUSED, H_POINT, KAPPA};
use serde::Serialize;
use twofloat::TwoFloat;

type Dd = TwoFloat;

fn dd(x: f64) -> Dd {
    Dd::from(x)
}

/// Anything that can be evaluated in double-double precision.
pub trait DdFunction {
    fn eval(&self, y: &[Dd]) -> Result<Dd>;
}

impl DdFunction for CompiledCombo {
    fn eval(&self, y: &[Dd]) -> Result<Dd> {
        self.evaluate_dd(y)
    }
}

impl<F: Fn(&[Dd]) -> Result<Dd>> DdFunction for F {
    fn eval(&self, y: &[Dd]) -> Result<Dd> {
        self(y)
    }
}

/// Conformal weights of the points entering a null-vector operator.
#[derive(Clone, Debug, PartialEq)]
pub struct PdeOperatorSpec {
    pub order: u8,
    pub weights: Vec<f64>,
}

impl PdeOperatorSpec {
    pub fn second_order(n_points: usize) -> Self {
        PdeOperatorSpec { order: 2, weights: vec![H_POINT; n_points] }
    }

    pub fn third_order(n_points: usize) -> Self {
        PdeOperatorSpec { order: 3, weights: vec![H_FUSED; n_points] }
    }
}

struct Probe<'a> {
    f: &'a dyn DdFunction,
    base: Vec<Dd>,
    h: Dd,
}

impl Probe<'_> {
    fn at(&self, shifts: &[(usize, i32)]) -> Result<Dd> {
        let mut y = self.base.clone();
        for &(i, k) in shifts {
            y[i] += self.h * k as f64;
        }
        self.f.eval(&y)
    }

    fn d1(&self, i: usize) -> Result<Dd> {
        Ok(div(self.at(&[(i, 1)])? - self.at(&[(i, -1)])?, self.h * 2.0))
    }

    fn d2(&self, i: usize) -> Result<Dd> {
        Ok(div(self.at(&[(i, 1)])? - self.at(&[])? * 2.0 + self.at(&[(i, -1)])?, self.h * self.h))
    }

    fn d3(&self, i: usize) -> Result<Dd> {
        let num = self.at(&[(i, 2)])? - self.at(&[(i, 1)])? * 2.0 + self.at(&[(i, -1)])? * 2.0 - self.at(&[(i, -2)])?;
        Ok(div(num, self.h * self.h * self.h * 2.0))
    }

    fn d11(&self, i: usize, j: usize) -> Result<Dd> {
        let num = self.at(&[(i, 1), (j, 1)])? - self.at(&[(i, 1), (j, -1)])? - self.at(&[(i, -1), (j, 1)])?
            + self.at(&[(i, -1), (j, -1)])?;
        Ok(div(num, self.h * self.h * 4.0))
    }
}

fn check_step(y: &PointConfig, j: usize, step: f64) -> Result<()> {
    if j == 0 || j > y.len() {
        return Err(Error::IndexOutOfRange { index: j, max: y.len() });
    }
    if !(step > 1e-7) {
        return Err(Error::Numerical(format!("step {step} is too small for double-double differences")));
    }
    if y.min_gap() < 100.0 * step {
        return Err(Error::Numerical(format!("step {step} is too large for minimum gap {}", y.min_gap())));
    }
    Ok(())
}

/// Raw value of the second-order operator applied at `x_j` (1-based).
pub fn pde2_operator(f: &dyn DdFunction, spec: &PdeOperatorSpec, x: &PointConfig, j: usize, step: f64) -> Result<(f64, f64)> {
    check_step(x, j, step)?;
    let j = j - 1;
    let p = Probe { f, base: x.points().iter().map(|&v| dd(v)).collect(), h: dd(step) };
    let f0 = p.at(&[])?;
    let mut total = p.d2(j)? * (KAPPA / 2.0);
    for i in 0..x.len() {
        if i == j {
            continue;
        }
        let d = p.base[i] - p.base[j];
        total += div(p.d1(i)? * 2.0, d) - div(f0 * (2.0 * spec.weights[i]), d * d);
    }
    Ok((total.hi() + total.lo(), f0.hi()))
}

/// `|𝒟₂ f| / (|f| · g⁻²)` at `x_j`, where `g` is the minimum gap.
pub fn pde2_residual(f: &dyn DdFunction, x: &PointConfig, j: usize, step: f64) -> Result<f64> {
    let spec = PdeOperatorSpec::second_order(x.len());
    let (r, f0) = pde2_operator(f, &spec, x, j, step)?;
    Ok(r.abs() / (f0.abs() * x.min_gap().powi(-2)))
}

/// Raw value of the third-order operator at `y_j`.
pub fn pde3_operator(f: &dyn DdFunction, spec: &PdeOperatorSpec, y: &PointConfig, j: usize, step: f64) -> Result<(f64, f64)> {
    check_step(y, j, step)?;
    let j = j - 1;
    let p = Probe { f, base: y.points().iter().map(|&v| dd(v)).collect(), h: dd(step) };
    let f0 = p.at(&[])?;
    let fj = p.d1(j)?;
    let mut l2dj = dd(0.0);
    let mut l3 = dd(0.0);
    for i in 0..y.len() {
        if i == j {
            continue;
        }
        let d = p.base[i] - p.base[j];
        let wi = spec.weights[i];
        l2dj += div(fj * wi, d * d) - div(p.d11(i, j)?, d);
        l3 += div(f0 * (2.0 * wi), d * d * d) - div(p.d1(i)?, d * d);
    }
    let a = 16.0 / KAPPA;
    let b = 8.0 * (8.0 - KAPPA) / (KAPPA * KAPPA);
    let total = p.d3(j)? - l2dj * a + l3 * b;
    Ok((total.hi() + total.lo(), f0.hi()))
}

/// `|𝒟₃ f| / (|f| · g⁻³)` at `y_j`.
pub fn pde3_residual(f: &dyn DdFunction, y: &PointConfig, j: usize, step: f64) -> Result<f64> {
    let spec = PdeOperatorSpec::third_order(y.len());
    let (r, f0) = pde3_operator(f, &spec, y, j, step)?;
    Ok(r.abs() / (f0.abs() * y.min_gap().powi(-3)))
}

/// Step-refined residual: the operator values at `step` and `step/2` are
/// combined as `(4·D(h/2) − D(h))/3`, cancelling the `h²` truncation term.
pub fn refined_residual(f: &dyn DdFunction, y: &PointConfig, j: usize, step: f64, order: u8) -> Result<f64> {
    let (op, spec, power): (fn(&dyn DdFunction, &PdeOperatorSpec, &PointConfig, usize, f64) -> Result<(f64, f64)>, _, i32) =
        match order {
            2 => (pde2_operator, PdeOperatorSpec::second_order(y.len()), -2),
            3 => (pde3_operator, PdeOperatorSpec::third_order(y.len()), -3),
            _ => return Err(Error::Numerical(format!("no null-vector operator of order {order}"))),
        };
    let (coarse, f0) = op(f, &spec, y, j, step)?;
    let (fine, _) = op(f, &spec, y, j, 0.5 * step)?;
    Ok(((4.0 * fine - coarse) / 3.0).abs() / (f0.abs() * y.min_gap().powi(power)))
}

/// `φ(z) = (a z + b)/(c z + d)` with `ad − bc > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mobius {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub fn apply(&self, z: Dd) -> Dd {
        div(z * self.a + self.b, z * self.c + self.d)
    }

    pub fn derivative(&self, z: Dd) -> Dd {
        let den = z * self.c + self.d;
        div(dd(self.a * self.d - self.b * self.c), den * den)
    }
}

/// `|f(y) − ∏ φ'(y_i)^{Δ_i} f(φ(y))| / |f(y)|`.
pub fn mobius_covariance_check(f: &dyn DdFunction, weights: &[f64], y: &PointConfig, phi: Mobius) -> Result<f64> {
    if phi.a * phi.d - phi.b * phi.c <= 0.0 {
        return Err(Error::Numerical("Möbius map must preserve orientation".into()));
    }
    let ys: Vec<Dd> = y.points().iter().map(|&v| dd(v)).collect();
    if ys.iter().any(|&z| (z * phi.c + phi.d).hi() * (ys[0] * phi.c + phi.d).hi() <= 0.0) {
        return Err(Error::Numerical("pole of the Möbius map lies among the points".into()));
    }
    let im: Vec<Dd> = ys.iter().map(|&z| phi.apply(z)).collect();
    if im.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Unordered);
    }
    let mut factor = dd(1.0);
    for (z, &w) in ys.iter().zip(weights) {
        let d = phi.derivative(*z);
        factor *= if w == 1.0 {
            d
        } else if w == 0.25 {
            d.sqrt().sqrt()
        } else {
            dd(d.hi().powf(w))
        };
    }
    let lhs = f.eval(&ys)?;
    let rhs = factor * f.eval(&im)?;
    let r = div(lhs - rhs, lhs);
    Ok((r.hi() + r.lo()).abs())
}

/// Limit of `g(ε)` as `ε → 0`, for `g(ε) = g₀ + g₁ε + g₂ε² + ⋯`, from the
/// Richardson table on `ε₀, ε₀/2, …`.
pub fn richardson_limit(g: impl Fn(f64) -> Result<Dd>, eps0: f64, levels: usize) -> Result<(f64, f64)> {
    let mut table: Vec<Vec<Dd>> = Vec::new();
    for k in 0..levels {
        let mut row = vec![g(eps0 / (1u64 << k) as f64)?];
        for m in 1..=k {
            let p = (1u64 << m) as f64;
            let v = div(row[m - 1] * p - table[k - 1][m - 1], dd(p - 1.0));
            row.push(v);
        }
        table.push(row);
    }
    let last = table.last().unwrap();
    let best = last[last.len() - 1];
    let err = if levels >= 2 {
        let prev = &table[levels - 2];
        (best - prev[prev.len() - 1]).hi().abs()
    } else {
        f64::INFINITY
    };
    Ok((best.hi() + best.lo(), err))
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticsReport {
    pub extrapolated: f64,
    pub expected: f64,
    pub relative_error: f64,
    pub richardson_spread: f64,
}

/// Compares `Z_α / (x_{j+1} − x_j)^{r}` as the gap shrinks with the fused
/// value, `r = −1/2` for a link `{j, j+1}` and `+1/2` otherwise.
///
/// `base` lists the `2N − 1` points after fusion, with `ξ` at position `j`.
pub fn asymptotics_check(alpha: &PairPartition, j: usize, base: &PointConfig, eps0: f64, levels: usize) -> Result<AsymptoticsReport> {
    let n = alpha.num_points();
    if base.len() + 1 != n {
        return Err(Error::LengthMismatch(base.len() + 1, n));
    }
    if j == 0 || j >= n {
        return Err(Error::IndexOutOfRange { index: j, max: n - 1 });
    }
    let z = pure_partition_combo(alpha)?.compile();
    let linked = alpha.contains(j as u32, j as u32 + 1);
    let fused = fuse_once(alpha, j)?.compile();
    let b: Vec<Dd> = base.points().iter().map(|&v| dd(v)).collect();
    let expected = if linked {
        // Reduced function lives on the points other than the fused one.
        let rest: Vec<Dd> = b.iter().enumerate().filter(|&(i, _)| i != j - 1).map(|(_, &v)| v).collect();
        let removed = remove_link(alpha, j)?;
        pure_partition_combo(&removed)?.compile().evaluate_dd(&rest)?
    } else {
        fused.evaluate_dd(&b)?
    };
    let (lim, spread) = richardson_limit(
        |eps| {
            let mut x = b.clone();
            x.insert(j, b[j - 1] + eps);
            let v = z.evaluate_dd(&x)?;
            let e = dd(eps).sqrt();
            Ok(if linked { v * e } else { div(v, e) })
        },
        eps0,
        levels,
    )?;
    let expected = expected.hi() + expected.lo();
    Ok(AsymptoticsReport {
        extrapolated: lim,
        expected,
        relative_error: ((lim - expected) / expected).abs(),
        richardson_spread: spread,
    })
}

/// `α / {j, j+1}` with points renumbered.
pub fn remove_link(alpha: &PairPartition, j: usize) -> Result<PairPartition> {
    let (j, k) = (j as u32, j as u32 + 1);
    if !alpha.contains(j, k) {
        return Err(Error::WrongShape { index: j as usize, expected: "link {j, j+1}" });
    }
    let shift = |p: u32| if p > k { p - 2 } else { p };
    PairPartition::new(alpha.links().iter().filter(|&&l| l != (j, k)).map(|&(a, b)| (shift(a), shift(b))).collect())
}

/// `∏_{links (a,b)} (x_b − x_a)^{−1/2}`, the refined upper bound for `Z_α`.
pub fn pure_partition_bound(alpha: &PairPartition, x: &PointConfig) -> f64 {
    let p = x.points();
    alpha.links().iter().map(|&(a, b)| (p[b as usize - 1] - p[a as usize - 1]).powf(-2.0 * H_POINT)).product()
}

/// One line of a verification report.
#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub function: String,
    pub config: Vec<f64>,
    pub residual: f64,
    pub pass: bool,
}
