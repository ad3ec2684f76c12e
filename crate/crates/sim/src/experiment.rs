//! Seeded, parallel experiment driver and its tabular reports.

use crate::cluster::{extract_pattern, ClusterState, Percolator};
use crate::error::{SimError, SimResult};
use crate::field::{harmonic_extension, SpectralGrid, Workspace};
use crate::lattice::{LatticeSpec, Site};
use fusion_core::combinat::LinkPattern;
use fusion_core::probability::{fused_table, rectangle_distribution, RectanglePolygon};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Boundary magnitude matching the continuum height gap for a unit-conductance
/// lattice field, `√(π/2)`.
pub fn default_mu() -> f64 {
    std::f64::consts::FRAC_PI_2.sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Boundary magnitude in lattice units.
    pub mu: f64,
    pub trials: u64,
    pub seed: u64,
    /// Edges per unit length; the mesh is the reciprocal.
    pub meshes: Vec<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { mu: default_mu(), trials: 10_000, seed: 0, meshes: vec![16, 32, 64] }
    }
}

impl SimConfig {
    pub fn validate(&self) -> SimResult<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(SimError::Config(format!("boundary magnitude {} must be positive", self.mu)));
        }
        if self.trials == 0 {
            return Err(SimError::Config("at least one trial is needed".into()));
        }
        if self.trials >= 1 << 40 {
            return Err(SimError::Config("too many trials for the stream layout".into()));
        }
        if self.meshes.is_empty() || self.meshes.iter().any(|&m| m < 2) {
            return Err(SimError::Config("meshes must be at least 2 cells per unit".into()));
        }
        Ok(())
    }
}

/// Generator of trial `trial` on a lattice with `cells` edges per unit:
/// an independent ChaCha stream, so results do not depend on scheduling.
pub fn trial_rng(seed: u64, cells: usize, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((cells as u64) << 40) | trial);
    rng
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let den = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / den;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / den;
    // The endpoints at k = 0 and k = n are exact, not rounding residue.
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// `%.9g`-style formatting.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.8e}", x);
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..9).contains(&exp) {
        trim(&format!("{:.*}", (8 - exp) as usize, x))
    } else {
        format!("{}e{}", trim(mant), exp)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PatternRow {
    pub mesh: f64,
    /// Index of the pattern in the exact probability table, or `anomaly`.
    pub pattern_id: String,
    pub pattern: String,
    pub count: u64,
    pub freq: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub theory: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeshReport {
    pub cells: usize,
    pub mesh: f64,
    pub lattice: (usize, usize),
    pub trials: u64,
    pub anomalies: u64,
    pub max_snap_distance: f64,
    pub rows: Vec<PatternRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub aspect: f64,
    pub marked: Vec<f64>,
    pub config: SimConfig,
    pub meshes: Vec<MeshReport>,
}

const CSV_HEADER: [&str; 8] = ["mesh", "pattern_id", "count", "freq", "ci_low", "ci_high", "theory", "gap"];

impl ExperimentReport {
    pub fn mesh(&self, cells: usize) -> Option<&MeshReport> {
        self.meshes.iter().find(|m| m.cells == cells)
    }

    pub fn to_csv(&self) -> SimResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| SimError::Output(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for m in &self.meshes {
            for r in &m.rows {
                w.write_record([
                    sig9(r.mesh),
                    r.pattern_id.clone(),
                    r.count.to_string(),
                    sig9(r.freq),
                    sig9(r.ci_low),
                    sig9(r.ci_high),
                    sig9(r.theory),
                    sig9(r.gap),
                ])
                .map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| SimError::Output(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| SimError::Output(e.to_string()))
    }

    /// The CSV rows as JSON objects, with floats rounded the same way.
    pub fn to_json(&self) -> SimResult<serde_json::Value> {
        let num = |x: f64| -> serde_json::Value {
            sig9(x).parse::<f64>().ok().and_then(serde_json::Number::from_f64).map_or(serde_json::Value::Null, Into::into)
        };
        let mut rows = Vec::new();
        for m in &self.meshes {
            for r in &m.rows {
                rows.push(serde_json::json!({
                    "mesh": num(r.mesh),
                    "pattern_id": r.pattern_id,
                    "pattern": r.pattern,
                    "count": r.count,
                    "freq": num(r.freq),
                    "ci_low": num(r.ci_low),
                    "ci_high": num(r.ci_high),
                    "theory": num(r.theory),
                    "gap": num(r.gap),
                }));
            }
        }
        let meshes: Vec<_> = self
            .meshes
            .iter()
            .map(|m| {
                serde_json::json!({
                    "cells": m.cells,
                    "lattice": [m.lattice.0, m.lattice.1],
                    "trials": m.trials,
                    "anomalies": m.anomalies,
                    "max_snap_distance": num(m.max_snap_distance),
                })
            })
            .collect();
        Ok(serde_json::json!({
            "aspect": num(self.aspect),
            "marked": self.marked.iter().map(|&x| num(x)).collect::<Vec<_>>(),
            "mu": num(self.config.mu),
            "seed": self.config.seed,
            "trials": self.config.trials,
            "meshes": meshes,
            "rows": rows,
        }))
    }

    /// One gnuplot data block per pattern, blocks separated by two blank
    /// lines: `mesh freq ci_low ci_high theory`.
    pub fn to_gnuplot(&self) -> String {
        let mut out = String::from("# mesh freq ci_low ci_high theory\n");
        let Some(first) = self.meshes.first() else { return out };
        for (k, row) in first.rows.iter().enumerate() {
            out.push_str(&format!("# pattern {} {}\n", row.pattern_id, row.pattern));
            for m in &self.meshes {
                let r = &m.rows[k];
                out.push_str(&format!(
                    "{} {} {} {} {}\n",
                    sig9(r.mesh),
                    sig9(r.freq),
                    sig9(r.ci_low),
                    sig9(r.ci_high),
                    sig9(r.theory)
                ));
            }
            out.push_str("\n\n");
        }
        out
    }
}

/// Everything one trial on a fixed lattice needs, shared read-only.
struct MeshContext {
    grid: SpectralGrid,
    percolator: Percolator,
    spec: LatticeSpec,
    base: Vec<f64>,
    interior_index: Vec<usize>,
    n_patterns: usize,
}

struct TrialBuffers {
    ws: Workspace,
    field: Vec<f64>,
    gff: Vec<f64>,
    state: ClusterState,
    cache: HashMap<(Vec<Vec<usize>>, Vec<Vec<usize>>), Option<usize>>,
}

impl MeshContext {
    fn new(r: &RectanglePolygon, cells: usize, mu: f64, n_patterns: usize) -> SimResult<Self> {
        let spec = LatticeSpec::new(r, cells)?;
        let base = harmonic_extension(&spec, mu)?.values;
        let (wx, wy) = spec.cells();
        let mut interior_index = Vec::new();
        for j in 1..wy {
            for i in 1..wx {
                interior_index.push(spec.index(i, j));
            }
        }
        debug_assert!(interior_index.iter().all(|&v| spec.sites()[v] == Site::Interior));
        Ok(MeshContext {
            grid: SpectralGrid::for_spec(&spec),
            percolator: Percolator::new(&spec),
            spec,
            base,
            interior_index,
            n_patterns,
        })
    }

    fn buffers(&self) -> TrialBuffers {
        TrialBuffers {
            ws: self.grid.workspace(),
            field: self.base.clone(),
            gff: vec![0.0; self.interior_index.len()],
            state: ClusterState::new(&self.spec),
            cache: HashMap::new(),
        }
    }

    /// Outcome slot of one trial: a pattern index, or `n_patterns` for an
    /// anomaly.
    fn trial(&self, b: &mut TrialBuffers, rng: &mut ChaCha8Rng, table_index: &(dyn Fn(&LinkPattern) -> Option<usize> + Sync)) -> usize {
        self.grid.sample_into(rng, &mut b.ws, &mut b.gff);
        for (&v, &g) in self.interior_index.iter().zip(&b.gff) {
            b.field[v] = self.base[v] + g;
        }
        self.percolator.run(&b.field, &mut b.state, rng);
        let key = (b.state.arc_partition(true), b.state.arc_partition(false));
        if let Some(&slot) = b.cache.get(&key) {
            return slot.unwrap_or(self.n_patterns);
        }
        let slot = extract_pattern(&mut b.state, &self.spec).ok().and_then(|p| table_index(&p));
        b.cache.insert(key, slot);
        slot.unwrap_or(self.n_patterns)
    }
}

/// Runs `cfg.trials` independent trials at every mesh and compares the
/// empirical pattern frequencies with the exact distribution.
pub fn run_experiment(r: &RectanglePolygon, cfg: &SimConfig) -> SimResult<ExperimentReport> {
    cfg.validate()?;
    let n = r.marked().len() / 2;
    let table = fused_table(n)?;
    let exact = rectangle_distribution(r)?;
    let patterns = table.patterns().to_vec();
    let k = patterns.len();
    let index = |p: &LinkPattern| table.index_of(p);
    let mut meshes = Vec::new();
    for &cells in &cfg.meshes {
        let ctx = MeshContext::new(r, cells, cfg.mu, k)?;
        let counts = (0..cfg.trials)
            .into_par_iter()
            .fold(
                || (ctx.buffers(), vec![0u64; k + 1]),
                |(mut b, mut c), t| {
                    let mut rng = trial_rng(cfg.seed, cells, t);
                    c[ctx.trial(&mut b, &mut rng, &index)] += 1;
                    (b, c)
                },
            )
            .map(|(_, c)| c)
            .reduce(|| vec![0u64; k + 1], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
        let mesh = ctx.spec.mesh();
        let row = |id: String, pattern: String, count: u64, theory: f64| {
            let freq = count as f64 / cfg.trials as f64;
            let (lo, hi) = wilson_interval(count, cfg.trials, Z95);
            PatternRow { mesh, pattern_id: id, pattern, count, freq, ci_low: lo, ci_high: hi, theory, gap: (freq - theory).abs() }
        };
        let mut rows: Vec<PatternRow> = patterns
            .iter()
            .enumerate()
            .map(|(i, p)| row(i.to_string(), p.to_string(), counts[i], exact.get(p).unwrap_or(0.0).max(0.0)))
            .collect();
        rows.push(row("anomaly".into(), String::new(), counts[k], 0.0));
        meshes.push(MeshReport {
            cells,
            mesh,
            lattice: ctx.spec.cells(),
            trials: cfg.trials,
            anomalies: counts[k],
            max_snap_distance: ctx.spec.snap_distances().iter().cloned().fold(0.0, f64::max),
            rows,
        });
    }
    Ok(ExperimentReport { aspect: r.aspect(), marked: r.marked().to_vec(), config: cfg.clone(), meshes })
}
