//! `fusion`: enumerate link patterns, evaluate crossing probabilities, run
//! the lattice simulator and the numerical verification batteries.

mod config;

/// `println!` that reports a closed stdout as an error instead of panicking.
macro_rules! out {
    ($($t:tt)*) => {
        writeln!(std::io::stdout().lock(), $($t)*)?
    };
}

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use config::{ConfigFile, SimSettings};
use fusion_core::combinat::{enumerate_dyck_paths, enumerate_link_patterns, valence_two};
use fusion_core::partition_fn::PointConfig;
use fusion_core::probability::{
    cross_ratio, outcome_distribution, rect_boundary_to_halfplane, OutcomeDistribution, RectanglePolygon,
};
use fusion_core::suite::{run_suite, Suite, SuiteOptions};
use fusion_sim::experiment::{run_experiment, sig9, SimConfig};
use fusion_sim::SimError;
use serde_json::json;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "fusion", version, about = "Boundary crossing probabilities of GFF level-set clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List Dyck paths or planar link patterns.
    Enumerate(EnumerateArgs),
    /// Probabilities of every valence-two boundary pattern.
    Prob(ProbArgs),
    /// Monte Carlo estimate of the pattern frequencies on lattice rectangles.
    Simulate(SimulateArgs),
    /// Run a numerical verification battery; exits with 1 if any check fails.
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("what").required(true))]
struct EnumerateArgs {
    /// Dyck paths of length 2N.
    #[arg(long, value_name = "N", group = "what")]
    dyck: Option<usize>,
    /// Link patterns with valence two at each of 2N points.
    #[arg(long, value_name = "N", group = "what")]
    valence2: Option<usize>,
    /// Link patterns with an explicit valence vector (all ones or all twos).
    #[arg(long, value_name = "V", value_delimiter = ',', num_args = 1.., group = "what")]
    valence: Option<Vec<u32>>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("domain").required(true))]
struct ProbArgs {
    /// Rectangle [0, L] × [0, 1]; the corners are marked unless --marked is given.
    #[arg(long, value_name = "L", group = "domain")]
    rectangle: Option<f64>,
    /// Counterclockwise arc lengths from the origin of the 2N marked points.
    #[arg(long, value_delimiter = ',', num_args = 1.., requires = "rectangle", allow_negative_numbers = true)]
    marked: Option<Vec<f64>>,
    /// Increasing real points y₁ < … < y_{2N} in the upper half plane picture.
    #[arg(long, value_delimiter = ',', num_args = 1.., group = "domain", allow_negative_numbers = true)]
    points: Option<Vec<f64>>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug, Default)]
pub struct SimulateArgs {
    /// Aspect ratio (width over height) of the rectangle.
    #[arg(long = "L", visible_alias = "aspect")]
    pub l: Option<f64>,
    /// Arc lengths of the marked boundary points; defaults to the corners.
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
    pub marked: Option<Vec<f64>>,
    /// Edges per unit height (e.g. 16,32,64), or the mesh itself when below one.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub mesh: Option<Vec<f64>>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Boundary magnitudes; one report block per value.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub mu: Option<Vec<f64>>,
    /// Worker threads (default: all available cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Directory for CSV, JSON and manifest files; without it the CSV goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value file of defaults for the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write gnuplot data blocks (needs --out).
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    suite: Suite,
    /// Half the number of points.
    n: usize,
    /// Multiply every function by 1 + ε·Σy² before checking (pde and cov).
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    #[arg(long, default_value_t = SuiteOptions::default().seed)]
    seed: u64,
    /// Base finite-difference step.
    #[arg(long, default_value_t = SuiteOptions::default().step)]
    step: f64,
    /// Print every check, not just failures and the summary.
    #[arg(long)]
    verbose: bool,
    #[arg(long)]
    json: bool,
}

/// An error with the exit code it should produce.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let err = e.into();
        Failure { code: exit_code_for(&err), err }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    let core = err
        .downcast_ref::<fusion_core::Error>()
        .or_else(|| match err.downcast_ref::<SimError>() {
            Some(SimError::Core(e)) => Some(e),
            _ => None,
        });
    match core {
        Some(fusion_core::Error::Capacity { .. }) => 3,
        _ => 2,
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Enumerate(a) => enumerate(a),
        Command::Prob(a) => prob(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // A downstream reader such as `head` closed the pipe.
        Err(f) if f.err.downcast_ref::<std::io::Error>().is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(f) => {
            if !f.err.to_string().is_empty() {
                eprintln!("error: {:#}", f.err);
            }
            ExitCode::from(f.code)
        }
    }
}

fn enumerate(a: EnumerateArgs) -> CmdResult {
    let (kind, items): (&str, Vec<(String, serde_json::Value)>) = if let Some(n) = a.dyck {
        let paths = enumerate_dyck_paths(n)?;
        let items = paths
            .iter()
            .map(|d| {
                let steps: String = d.steps().iter().map(|&s| if s > 0 { 'U' } else { 'D' }).collect();
                let heights: Vec<String> = d.heights().iter().map(u32::to_string).collect();
                (format!("{steps}  [{}]", heights.join(" ")), json!({ "steps": steps, "heights": d.heights() }))
            })
            .collect();
        ("dyck", items)
    } else {
        let valence = match (a.valence2, a.valence) {
            (Some(n), _) => valence_two(n),
            (None, Some(v)) => v,
            (None, None) => unreachable!("clap enforces one of the group"),
        };
        let patterns = enumerate_link_patterns(&valence)?;
        ("link_patterns", patterns.iter().map(|p| (p.to_string(), serde_json::to_value(p).unwrap())).collect())
    };
    if a.json {
        let values: Vec<_> = items.into_iter().map(|(_, v)| v).collect();
        out!("{}", serde_json::to_string_pretty(&json!({ "kind": kind, "count": values.len(), "items": values }))?);
    } else {
        for (k, (line, _)) in items.iter().enumerate() {
            out!("{k:>4}  {line}");
        }
        out!("count: {}", items.len());
    }
    Ok(())
}

fn prob(a: ProbArgs) -> CmdResult {
    let (y, rect) = match (a.rectangle, a.points) {
        (Some(l), _) => {
            let r = match a.marked {
                Some(m) => RectanglePolygon::new(l, m)?,
                None => RectanglePolygon::corners(l)?,
            };
            (rect_boundary_to_halfplane(&r)?, Some(r))
        }
        (None, Some(p)) => {
            if p.len() < 2 || p.len() % 2 != 0 {
                return Err(anyhow!("need an even, positive number of points, got {}", p.len()).into());
            }
            (PointConfig::new(p)?, None)
        }
        (None, None) => unreachable!("clap enforces one of the group"),
    };
    let n = y.len() / 2;
    let dist = outcome_distribution(n, &y)?;
    let q = (n == 2).then(|| cross_ratio(y.points()));
    if a.json {
        let mut v = json!({ "n": n, "points": y.points(), "outcomes": dist, "total": dist.total() });
        if let Some(q) = q {
            v["q"] = json!(q);
        }
        if let Some(r) = &rect {
            v["aspect"] = json!(r.aspect());
            v["marked"] = json!(r.marked());
        }
        out!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        print_distribution(&dist, q)?;
    }
    Ok(())
}

fn print_distribution(dist: &OutcomeDistribution, q: Option<f64>) -> std::io::Result<()> {
    if let Some(q) = q {
        out!("q = {q:.9}");
    }
    let width = dist.0.iter().map(|o| o.pattern.to_string().len()).max().unwrap_or(0).max(7);
    out!("{:>5}  {:<width$}  probability", "index", "pattern");
    for (k, o) in dist.0.iter().enumerate() {
        out!("{k:>5}  {:<width$}  {:.9}", o.pattern.to_string(), o.prob);
    }
    out!("{:>5}  {:<width$}  {:.9}", "", "total", dist.total());
    Ok(())
}

fn simulate(a: SimulateArgs) -> CmdResult {
    let file = match &a.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let s = SimSettings::resolve(&a, &file)?;
    if s.gnuplot && s.out.is_none() {
        return Err(anyhow!("--gnuplot needs --out").into());
    }
    let rect = match &s.marked {
        Some(m) => RectanglePolygon::new(s.aspect, m.clone())?,
        None => RectanglePolygon::corners(s.aspect)?,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = s.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| anyhow!("thread pool: {e}"))?;

    let mut outputs = Vec::new();
    let mut stdout_blocks = Vec::new();
    for (k, &mu) in s.mu.iter().enumerate() {
        let cfg = SimConfig { mu, trials: s.trials, seed: s.seed, meshes: s.meshes.clone() };
        let report = pool.install(|| run_experiment(&rect, &cfg))?;
        let csv = report.to_csv()?;
        match &s.out {
            Some(dir) => {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let stem = if s.mu.len() == 1 { "experiment".to_string() } else { format!("experiment_mu{k}") };
                let csv_path = dir.join(format!("{stem}.csv"));
                write(&csv_path, &csv)?;
                let mut js = report.to_json()?;
                js["manifest"] = json!(MANIFEST);
                let json_path = dir.join(format!("{stem}.json"));
                write(&json_path, &(serde_json::to_string_pretty(&js)? + "\n"))?;
                outputs.push(json!({ "mu": mu, "csv": file_name(&csv_path), "json": file_name(&json_path) }));
                if s.gnuplot {
                    let dat_path = dir.join(format!("{stem}.dat"));
                    let body = format!("# manifest: {MANIFEST}\n# mu = {}\n{}", sig9(mu), report.to_gnuplot());
                    write(&dat_path, &body)?;
                    outputs.last_mut().unwrap()["gnuplot"] = json!(file_name(&dat_path));
                }
                for m in &report.meshes {
                    eprintln!("mu {} mesh 1/{}: {} trials, {} anomalies", sig9(mu), m.cells, m.trials, m.anomalies);
                }
            }
            None => stdout_blocks.push(format!("# mu = {}\n{csv}", sig9(mu))),
        }
    }
    match &s.out {
        Some(dir) => {
            let manifest = json!({
                "command": std::env::args().collect::<Vec<_>>(),
                "config": s.echo(),
                "version": env!("CARGO_PKG_VERSION"),
                "seed": s.seed,
                "timestamp": timestamp(),
                "outputs": outputs,
            });
            write(&dir.join(MANIFEST), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
        }
        None => write!(std::io::stdout().lock(), "{}", stdout_blocks.join("\n"))?,
    }
    Ok(())
}

const MANIFEST: &str = "manifest.json";

fn write(path: &Path, body: &str) -> anyhow::Result<()> {
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn timestamp() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn verify(a: VerifyArgs) -> CmdResult {
    let opts = SuiteOptions { step: a.step, perturb: a.perturb, seed: a.seed, ..SuiteOptions::default() };
    let records = run_suite(a.suite, a.n, &opts)?;
    let failed = records.iter().filter(|r| !r.pass).count();
    if a.json {
        out!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "suite": format!("{:?}", a.suite).to_lowercase(),
                "n": a.n,
                "perturb": a.perturb,
                "checks": records.len(),
                "failed": failed,
                "records": records,
            }))?
        );
    } else {
        let mut summary: BTreeMap<&str, (usize, usize, f64)> = BTreeMap::new();
        for r in &records {
            let e = summary.entry(r.check.as_str()).or_insert((0, 0, 0.0));
            e.0 += 1;
            e.1 += usize::from(r.pass);
            e.2 = e.2.max(r.residual);
            if a.verbose || !r.pass {
                let status = if r.pass { "ok  " } else { "FAIL" };
                out!("{status} {:<10} {:<40} {:.3e}  at {:?}", r.check, r.function, r.residual, r.config);
            }
        }
        for (check, (total, passed, worst)) in &summary {
            out!("{check:<10} {passed}/{total} passed, worst {worst:.3e}");
        }
        out!("{}", if failed == 0 { "all checks passed" } else { "some checks FAILED" });
    }
    if failed > 0 {
        return Err(Failure { code: 1, err: anyhow!("") });
    }
    Ok(())
}
