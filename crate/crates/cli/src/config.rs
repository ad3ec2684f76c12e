//! `key = value` experiment files and their merge with command-line flags.

use crate::SimulateArgs;
use anyhow::{bail, Context};
use fusion_sim::experiment::{default_mu, SimConfig};
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Raw entries of a config file. Blank lines and `#` comments are skipped;
/// keys match the long flag names of `simulate`.
#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

const KEYS: [&str; 9] = ["L", "marked", "mesh", "trials", "seed", "mu", "threads", "out", "gnuplot"];

impl ConfigFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                bail!("line {}: expected key = value", lineno + 1);
            };
            let k = k.trim();
            let k = if k == "aspect" { "L" } else { k };
            if !KEYS.contains(&k) {
                bail!("line {}: unknown key `{k}`", lineno + 1);
            }
            entries.insert(k.to_string(), v.trim().trim_matches('"').to_string());
        }
        Ok(ConfigFile { entries })
    }

    fn scalar<T: std::str::FromStr>(&self, key: &str) -> anyhow::Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.entries
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| anyhow::anyhow!("config `{key}`: {e}")))
            .transpose()
    }

    fn list(&self, key: &str) -> anyhow::Result<Option<Vec<f64>>> {
        self.entries
            .get(key)
            .map(|v| {
                v.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>().map_err(|e| anyhow::anyhow!("config `{key}`: {e}")))
                    .collect()
            })
            .transpose()
    }
}

/// Fully resolved `simulate` settings: flag, else file, else default.
#[derive(Debug)]
pub struct SimSettings {
    pub aspect: f64,
    pub marked: Option<Vec<f64>>,
    pub meshes: Vec<usize>,
    pub trials: u64,
    pub seed: u64,
    pub mu: Vec<f64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub gnuplot: bool,
}

/// `16` means 16 edges per unit; `0.0625` means the same.
fn mesh_cells(v: f64) -> anyhow::Result<usize> {
    let cells = if v < 1.0 { 1.0 / v } else { v };
    let rounded = cells.round();
    if !(v > 0.0) || !cells.is_finite() || (cells - rounded).abs() > 1e-9 || rounded < 2.0 {
        bail!("mesh {v} does not give a whole number of at least 2 edges per unit");
    }
    Ok(rounded as usize)
}

impl SimSettings {
    pub fn resolve(a: &SimulateArgs, f: &ConfigFile) -> anyhow::Result<Self> {
        let d = SimConfig::default();
        let meshes = match a.mesh.clone().or(f.list("mesh")?) {
            Some(m) => m.into_iter().map(mesh_cells).collect::<anyhow::Result<_>>()?,
            None => d.meshes,
        };
        let gnuplot = a.gnuplot || f.scalar::<bool>("gnuplot")?.unwrap_or(false);
        let s = SimSettings {
            aspect: a.l.or(f.scalar("L")?).unwrap_or(1.0),
            marked: a.marked.clone().or(f.list("marked")?),
            meshes,
            trials: a.trials.or(f.scalar("trials")?).unwrap_or(d.trials),
            seed: a.seed.or(f.scalar("seed")?).unwrap_or(d.seed),
            mu: a.mu.clone().or(f.list("mu")?).unwrap_or_else(|| vec![default_mu()]),
            threads: a.threads.or(f.scalar("threads")?),
            out: a.out.clone().or(f.scalar::<PathBuf>("out")?),
            gnuplot,
        };
        if s.mu.is_empty() {
            bail!("at least one boundary magnitude is needed");
        }
        if s.threads == Some(0) {
            bail!("--threads must be positive");
        }
        Ok(s)
    }

    /// Everything that determines the primary outputs.
    pub fn echo(&self) -> serde_json::Value {
        json!({
            "L": self.aspect,
            "marked": self.marked,
            "meshes": self.meshes,
            "trials": self.trials,
            "seed": self.seed,
            "mu": self.mu,
            "threads": self.threads,
            "out": self.out,
            "gnuplot": self.gnuplot,
        })
    }
}
