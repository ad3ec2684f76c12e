//! Verification batteries over every partition function of a given size.

use crate::combinat::pairing_from_dyck;
use crate::error::{Error, Result};
use crate::incidence::incidence_cached;
use crate::partition_fn::{
    conformal_block_combo, conformal_block_fourth, pure_partition_combo, PointConfig, H_FUSED, H_POINT,
};
use crate::probability::fused_table;
use crate::verify::{
    asymptotics_check, mobius_covariance_check, pure_partition_bound, refined_residual, CheckRecord, DdFunction,
    Mobius,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::str::FromStr;
use twofloat::TwoFloat;

pub const PDE2_TOL: f64 = 1e-5;
pub const PDE3_TOL: f64 = 1e-4;
pub const COV_TOL: f64 = 1e-9;
/// Translations and dilations only.
pub const AFFINE_COV_TOL: f64 = 1e-10;
pub const ASY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Pde,
    Cov,
    Asy,
    Bounds,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pde" => Ok(Suite::Pde),
            "cov" => Ok(Suite::Cov),
            "asy" => Ok(Suite::Asy),
            "bounds" => Ok(Suite::Bounds),
            _ => Err(Error::Numerical(format!("unknown suite `{s}`"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    /// Base finite-difference step; residuals combine it with its half.
    pub step: f64,
    /// Multiplies each function by `1 + perturb·Σ y_i²` (pde and cov only),
    /// which should make the checks fail.
    pub perturb: f64,
    pub seed: u64,
    pub mobius_maps: usize,
    pub bound_configs: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { step: 1e-3, perturb: 0.0, seed: 7, mobius_maps: 20, bound_configs: 1000 }
    }
}

struct Perturbed<'a> {
    f: &'a dyn DdFunction,
    eps: f64,
}

impl DdFunction for Perturbed<'_> {
    fn eval(&self, y: &[TwoFloat]) -> Result<TwoFloat> {
        let v = self.f.eval(y)?;
        if self.eps == 0.0 {
            return Ok(v);
        }
        let s = y.iter().fold(TwoFloat::from(0.0), |acc, &x| acc + x * x);
        Ok(v * (s * self.eps + 1.0))
    }
}

fn record(check: &str, function: String, y: &PointConfig, residual: f64, tol: f64) -> CheckRecord {
    CheckRecord { check: check.into(), function, config: y.points().to_vec(), residual, pass: residual <= tol }
}

/// Equally spaced and irregular configurations of `m` points.
fn probe_configs(m: usize) -> Result<Vec<PointConfig>> {
    const IRREGULAR: [f64; 8] = [0.0, 1.3, 2.1, 3.7, 4.6, 6.2, 7.1, 8.9];
    if m > IRREGULAR.len() {
        return Err(Error::Capacity { what: "probe points", count: m as u128, cap: IRREGULAR.len() as u128 });
    }
    Ok(vec![PointConfig::new((0..m).map(|i| i as f64).collect())?, PointConfig::new(IRREGULAR[..m].to_vec())?])
}

/// Orientation-preserving Möbius map whose pole lies at least `margin`
/// outside `[lo, hi]`.
fn random_mobius(rng: &mut ChaCha8Rng, lo: f64, hi: f64, margin: f64) -> Mobius {
    let pole = if rng.gen::<bool>() { lo - margin - rng.gen::<f64>() * 3.0 } else { hi + margin + rng.gen::<f64>() * 3.0 };
    let a = rng.gen_range(-2.0..2.0);
    let det = rng.gen_range(0.5..2.0);
    // c = 1, d = −pole, b chosen so that ad − bc = det.
    Mobius { a, b: -a * pole - det, c: 1.0, d: -pole }
}

fn pde(n: usize, opts: &SuiteOptions) -> Result<Vec<CheckRecord>> {
    let inc = incidence_cached(n)?;
    let configs = probe_configs(2 * n)?;
    let mut out = Vec::new();
    let mut run = |order: u8, name: String, f: &dyn DdFunction| -> Result<()> {
        let g = Perturbed { f, eps: opts.perturb };
        let (check, tol) = if order == 2 { ("pde2", PDE2_TOL) } else { ("pde3", PDE3_TOL) };
        for y in &configs {
            for j in 1..=2 * n {
                let r = refined_residual(&g, y, j, opts.step, order)?;
                out.push(record(check, format!("{name} j={j}"), y, r, tol));
            }
        }
        Ok(())
    };
    for p in inc.pairings() {
        run(2, format!("U{p}"), &conformal_block_combo(p).compile())?;
        run(2, format!("Z{p}"), &pure_partition_combo(p)?.compile())?;
    }
    for d in inc.paths() {
        let p = pairing_from_dyck(d);
        run(3, format!("U4{p}"), &conformal_block_fourth(&p).compile())?;
    }
    let table = fused_table(n)?;
    for (lp, c) in table.patterns().iter().zip(table.combos()) {
        run(3, format!("Zhat{lp}"), &c.compile())?;
    }
    Ok(out)
}

fn cov(n: usize, opts: &SuiteOptions) -> Result<Vec<CheckRecord>> {
    let inc = incidence_cached(n)?;
    let y = probe_configs(2 * n)?.pop().unwrap();
    let (lo, hi) = (y.points()[0], *y.points().last().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let maps: Vec<Mobius> = (0..opts.mobius_maps).map(|_| random_mobius(&mut rng, lo, hi, 0.5)).collect();
    let affine = [
        Mobius { a: 1.0, b: 2.75, c: 0.0, d: 1.0 },
        Mobius { a: 1.0, b: -4.5, c: 0.0, d: 1.0 },
        Mobius { a: 3.0, b: 0.0, c: 0.0, d: 1.0 },
        Mobius { a: 0.35, b: 1.2, c: 0.0, d: 1.0 },
    ];
    let mut out = Vec::new();
    let mut run = |name: String, f: &dyn DdFunction, weight: f64, with_affine: bool| -> Result<()> {
        let g = Perturbed { f, eps: opts.perturb };
        let w = vec![weight; 2 * n];
        if with_affine {
            for (k, phi) in affine.iter().enumerate() {
                let r = mobius_covariance_check(&g, &w, &y, *phi)?;
                out.push(record("cov-affine", format!("{name} map={k}"), &y, r, AFFINE_COV_TOL));
            }
        }
        for (k, phi) in maps.iter().enumerate() {
            let r = mobius_covariance_check(&g, &w, &y, *phi)?;
            out.push(record("cov", format!("{name} map={k}"), &y, r, COV_TOL));
        }
        Ok(())
    };
    for p in inc.pairings() {
        run(format!("Z{p}"), &pure_partition_combo(p)?.compile(), H_POINT, true)?;
    }
    let table = fused_table(n)?;
    for (lp, c) in table.patterns().iter().zip(table.combos()) {
        run(format!("Zhat{lp}"), &c.compile(), H_FUSED, false)?;
    }
    Ok(out)
}

fn asy(n: usize) -> Result<Vec<CheckRecord>> {
    let inc = incidence_cached(n)?;
    let base = PointConfig::new((0..2 * n - 1).map(|i| i as f64).collect())?;
    let mut out = Vec::new();
    for p in inc.pairings() {
        for j in 1..2 * n {
            let r = asymptotics_check(p, j, &base, 0.05, 6)?;
            out.push(record("asy", format!("Z{p} j={j}"), &base, r.relative_error, ASY_TOL));
        }
    }
    Ok(out)
}

/// Ordered points with gaps drawn from `[0.05, 3]`.
pub fn random_config(rng: &mut impl Rng, m: usize) -> PointConfig {
    let mut x = rng.gen_range(-5.0..5.0);
    let mut pts = Vec::with_capacity(m);
    for _ in 0..m {
        pts.push(x);
        x += rng.gen_range(0.05..3.0);
    }
    PointConfig::new(pts).expect("increasing by construction")
}

/// One record per pairing: the largest `Z_α / bound` over the random
/// configurations, failing if any value is non-positive or above one.
fn bounds(n: usize, opts: &SuiteOptions) -> Result<Vec<CheckRecord>> {
    let inc = incidence_cached(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0xb0b);
    let configs: Vec<PointConfig> = (0..opts.bound_configs).map(|_| random_config(&mut rng, 2 * n)).collect();
    let mut out = Vec::new();
    for p in inc.pairings() {
        let z = pure_partition_combo(p)?.compile();
        let (mut worst, mut worst_y, mut positive) = (f64::NEG_INFINITY, configs[0].clone(), true);
        for y in &configs {
            let v = z.evaluate(y.points())?;
            positive &= v > 0.0;
            let ratio = v / pure_partition_bound(p, y);
            if ratio > worst {
                worst = ratio;
                worst_y = y.clone();
            }
        }
        let mut r = record("bounds", format!("Z{p}"), &worst_y, worst, 1.0 + 1e-12);
        r.pass &= positive;
        out.push(r);
    }
    Ok(out)
}

/// Runs one battery for pairings of `2N` points and valence-two patterns on
/// `2N` points.
pub fn run_suite(suite: Suite, n: usize, opts: &SuiteOptions) -> Result<Vec<CheckRecord>> {
    if n == 0 {
        return Err(Error::Numerical("suites need N ≥ 1".into()));
    }
    match suite {
        Suite::Pde => pde(n, opts),
        Suite::Cov => cov(n, opts),
        Suite::Asy => asy(n),
        Suite::Bounds => bounds(n, opts),
    }
}
