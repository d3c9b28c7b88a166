//! Command-line driver: one TOML run config per invocation.
//!
//! ```toml
//! command = "best-pack"
//! seed = 7
//! output_dir = "out"      # optional; else $BESTPACK_OUTPUT_DIR, else ./bestpack-out
//! deterministic = true    # optional; false adds wall-clock timings
//!
//! [set]
//! kind = "sphere2"
//! radius = 1.0
//!
//! [params]
//! N = 12
//! ```
//!
//! Every run writes `resolved_config.toml` next to its outputs, with all
//! defaults filled in; running on that file reproduces the outputs.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use serde_json::json;
use toml::{Table, Value};

use crate::asymptotics::{csd_root_limit, energy_sweep, packing_sweep, root_limit_fixed_n, AsymptoticsTable};
use crate::cantor::{rational_to_f64, subsequence_oscillation, ExactSolver};
use crate::energy::{minimize_energy, OptimizerOptions};
use crate::equidist::{deviation_csv, equidist_deviation, standard_regions};
use crate::error::Error;
use crate::geometry::{CompactSet, SetSpec, SET_KINDS};
use crate::minkowski::{
    check_sandwich, content_estimate, default_rho_grid, minkowski_dimension_estimate, neighborhood_volume,
    neighborhood_volume_mc, DimensionOptions, Normalization,
};
use crate::packing::{best_packing, PackingOptions};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "BESTPACK_OUTPUT_DIR";
const FALLBACK_OUTPUT_DIR: &str = "bestpack-out";

pub const COMMANDS: &[&str] = &[
    "minimize-energy",
    "best-pack",
    "cantor-exact",
    "oscillation",
    "sweep-energy",
    "sweep-packing",
    "minkowski",
    "equidist",
    "root-limits",
];

#[derive(Parser, Debug, Clone)]
#[command(name = "bestpack", version, about = "Riesz energy minimizers, best packings and their asymptotics")]
pub struct Args {
    /// Run configuration (TOML).
    pub config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, short = 'o')]
    pub output_dir: Option<PathBuf>,
    /// Overrides the config `deterministic` flag.
    #[arg(long)]
    pub deterministic: Option<bool>,
    /// Overrides a `[params]` entry; the value is read as TOML, else as a string.
    #[arg(long = "param", short = 'p', value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Overrides a `[set]` entry.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("unknown set kind `{0}` (expected one of: {kinds})", kinds = SET_KINDS.join(", "))]
    UnknownSetKind(String),
    #[error("output directory {path} is not writable: {reason}")]
    OutputDir { path: String, reason: String },
    #[error(transparent)]
    Compute(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::MissingParam(_) | CliError::InvalidConfig(_) => 2,
            CliError::UnknownSetKind(_) => 3,
            CliError::OutputDir { .. } => 4,
            CliError::Compute(
                Error::Precondition(_) | Error::HypothesisFailure { .. } | Error::InsufficientDepth { .. },
            ) => 5,
            CliError::Compute(Error::InvalidParameter(_) | Error::InvalidSet(_)) => 2,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// A parsed and override-merged run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub deterministic: bool,
    pub set: CompactSet,
    pub params: Table,
}

fn parse_value(text: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {text}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_string()))
}

fn apply_overrides(table: &mut Table, overrides: &[String]) -> CliResult<()> {
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::InvalidConfig(format!("override `{o}` is not KEY=VALUE")))?;
        table.insert(k.trim().to_string(), parse_value(v.trim()));
    }
    Ok(())
}

fn parse_set(table: Table) -> CliResult<CompactSet> {
    let kind = match table.get("kind") {
        Some(Value::String(k)) => k.clone(),
        Some(_) => return Err(CliError::InvalidConfig("set kind must be a string".into())),
        None => return Err(CliError::MissingParam("set.kind".into())),
    };
    if !SET_KINDS.contains(&kind.as_str()) {
        return Err(CliError::UnknownSetKind(kind));
    }
    let spec: SetSpec = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::InvalidConfig(format!("set: {}", e.message())))?;
    CompactSet::try_from(spec).map_err(|e| CliError::InvalidConfig(e.to_string()))
}

impl RunConfig {
    /// Reads the config file and applies command-line overrides.
    pub fn load(args: &Args) -> CliResult<Self> {
        let text = fs::read_to_string(&args.config)
            .map_err(|e| CliError::InvalidConfig(format!("cannot read {}: {e}", args.config.display())))?;
        Self::from_toml(&text, args)
    }

    pub fn from_toml(text: &str, args: &Args) -> CliResult<Self> {
        let mut root: Table = toml::from_str(text).map_err(|e| CliError::InvalidConfig(e.message().to_string()))?;
        let known: BTreeSet<&str> = ["command", "seed", "output_dir", "deterministic", "set", "params"].into();
        if let Some(k) = root.keys().find(|k| !known.contains(k.as_str())) {
            return Err(CliError::InvalidConfig(format!("unknown top-level key `{k}`")));
        }
        let command = match root.remove("command") {
            Some(Value::String(c)) => c,
            Some(_) => return Err(CliError::InvalidConfig("command must be a string".into())),
            None => return Err(CliError::MissingParam("command".into())),
        };
        if !COMMANDS.contains(&command.as_str()) {
            return Err(CliError::InvalidConfig(format!(
                "unknown command `{command}` (expected one of: {})",
                COMMANDS.join(", ")
            )));
        }
        let seed = match (args.seed, root.remove("seed")) {
            (Some(s), _) => s,
            (None, Some(Value::Integer(s))) if s >= 0 => s as u64,
            (None, Some(_)) => return Err(CliError::InvalidConfig("seed must be a non-negative integer".into())),
            (None, None) => return Err(CliError::MissingParam("seed".into())),
        };
        let deterministic = match (args.deterministic, root.remove("deterministic")) {
            (Some(d), _) => d,
            (None, Some(Value::Boolean(d))) => d,
            (None, Some(_)) => return Err(CliError::InvalidConfig("deterministic must be a boolean".into())),
            (None, None) => true,
        };
        let output_dir = match (&args.output_dir, root.remove("output_dir")) {
            (Some(p), _) => p.clone(),
            (None, Some(Value::String(p))) => PathBuf::from(p),
            (None, Some(_)) => return Err(CliError::InvalidConfig("output_dir must be a string".into())),
            (None, None) => std::env::var_os(OUTPUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(FALLBACK_OUTPUT_DIR)),
        };
        let mut set_table = match root.remove("set") {
            Some(Value::Table(t)) => t,
            Some(_) => return Err(CliError::InvalidConfig("[set] must be a table".into())),
            None => return Err(CliError::MissingParam("set".into())),
        };
        apply_overrides(&mut set_table, &args.set)?;
        let set = parse_set(set_table)?;
        let mut params = match root.remove("params") {
            Some(Value::Table(t)) => t,
            Some(_) => return Err(CliError::InvalidConfig("[params] must be a table".into())),
            None => Table::new(),
        };
        apply_overrides(&mut params, &args.params)?;
        Ok(RunConfig {
            command,
            seed,
            output_dir,
            deterministic,
            set,
            params,
        })
    }
}

/// Typed access to `[params]`, recording every value used (defaults
/// included) for the resolved-config echo.
struct Params {
    given: Table,
    used: Table,
}

fn type_error(key: &str, want: &str) -> CliError {
    CliError::InvalidConfig(format!("parameter `{key}` must be {want}"))
}

fn as_f64(key: &str, v: &Value) -> CliResult<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(n) => Ok(*n as f64),
        _ => Err(type_error(key, "a number")),
    }
}

fn as_usize(key: &str, v: &Value) -> CliResult<usize> {
    match v {
        Value::Integer(n) if *n >= 0 => Ok(*n as usize),
        _ => Err(type_error(key, "a non-negative integer")),
    }
}

impl Params {
    fn new(given: Table) -> Self {
        Params { given, used: Table::new() }
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        let v = self.given.remove(key)?;
        self.used.insert(key.to_string(), v.clone());
        Some(v)
    }

    fn record(&mut self, key: &str, v: Value) {
        self.used.insert(key.to_string(), v);
    }

    fn usize(&mut self, key: &str) -> CliResult<usize> {
        let v = self.take(key).ok_or_else(|| CliError::MissingParam(key.into()))?;
        as_usize(key, &v)
    }

    fn usize_or(&mut self, key: &str, default: usize) -> CliResult<usize> {
        match self.take(key) {
            Some(v) => as_usize(key, &v),
            None => {
                self.record(key, Value::Integer(default as i64));
                Ok(default)
            }
        }
    }

    fn f64(&mut self, key: &str) -> CliResult<f64> {
        let v = self.take(key).ok_or_else(|| CliError::MissingParam(key.into()))?;
        as_f64(key, &v)
    }

    fn f64_or(&mut self, key: &str, default: f64) -> CliResult<f64> {
        match self.take(key) {
            Some(v) => as_f64(key, &v),
            None => {
                self.record(key, Value::Float(default));
                Ok(default)
            }
        }
    }

    fn opt_f64(&mut self, key: &str) -> CliResult<Option<f64>> {
        self.take(key).map(|v| as_f64(key, &v)).transpose()
    }

    fn str_or(&mut self, key: &str, default: &str) -> CliResult<String> {
        match self.take(key) {
            Some(Value::String(s)) => Ok(s),
            Some(_) => Err(type_error(key, "a string")),
            None => {
                self.record(key, Value::String(default.into()));
                Ok(default.into())
            }
        }
    }

    fn bool_or(&mut self, key: &str, default: bool) -> CliResult<bool> {
        match self.take(key) {
            Some(Value::Boolean(b)) => Ok(b),
            Some(_) => Err(type_error(key, "a boolean")),
            None => {
                self.record(key, Value::Boolean(default));
                Ok(default)
            }
        }
    }

    fn list<T>(&mut self, key: &str, each: fn(&str, &Value) -> CliResult<T>) -> CliResult<Option<Vec<T>>> {
        match self.take(key) {
            Some(Value::Array(items)) => items.iter().map(|v| each(key, v)).collect::<CliResult<Vec<T>>>().map(Some),
            Some(_) => Err(type_error(key, "an array")),
            None => Ok(None),
        }
    }

    fn usize_list(&mut self, key: &str) -> CliResult<Vec<usize>> {
        self.list(key, as_usize)?.ok_or_else(|| CliError::MissingParam(key.into()))
    }

    fn f64_list(&mut self, key: &str) -> CliResult<Vec<f64>> {
        self.list(key, as_f64)?.ok_or_else(|| CliError::MissingParam(key.into()))
    }

    /// Rejects keys the command did not read.
    fn finish(&self) -> CliResult<()> {
        match self.given.keys().next() {
            Some(k) => Err(CliError::InvalidConfig(format!("unknown parameter `{k}` for this command"))),
            None => Ok(()),
        }
    }

    fn optimizer(&mut self, seed: u64, default_restarts: usize) -> CliResult<OptimizerOptions> {
        let restarts = self.usize_or("restarts", default_restarts)?;
        let mut opts = OptimizerOptions::with_seed(seed).restarts(restarts);
        if let Some(v) = self.take("max_iterations") {
            opts.max_iterations = Some(as_usize("max_iterations", &v)?);
        }
        Ok(opts)
    }

    fn packing(&mut self, seed: u64, default_restarts: usize) -> CliResult<PackingOptions> {
        let optimizer = self.optimizer(seed, default_restarts)?;
        Ok(PackingOptions {
            optimizer,
            ..PackingOptions::default()
        })
    }
}

/// Files produced by one run.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn create(dir: &Path) -> CliResult<Self> {
        let unwritable = |e: std::io::Error| CliError::OutputDir {
            path: dir.display().to_string(),
            reason: e.to_string(),
        };
        fs::create_dir_all(dir).map_err(unwritable)?;
        let probe = dir.join(".bestpack-write-test");
        fs::File::create(&probe).and_then(|mut f| f.write_all(b"")).map_err(unwritable)?;
        let _ = fs::remove_file(&probe);
        Ok(Writer {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn text(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::InvalidConfig(e.to_string()))?;
        s.push('\n');
        self.text(name, &s)
    }

    fn table(&mut self, stem: &str, table: &AsymptoticsTable) -> CliResult<()> {
        self.text(&format!("{stem}.csv"), &table.to_csv())?;
        self.text(&format!("{stem}_plot.csv"), &table.plot_data())?;
        self.json(
            &format!("{stem}.json"),
            &json!({ "table": table, "richardson": table.richardson() }),
        )
    }
}

fn resolved_toml(cfg: &RunConfig, used: Table) -> CliResult<String> {
    let mut root = Table::new();
    root.insert("command".into(), Value::String(cfg.command.clone()));
    root.insert("seed".into(), Value::Integer(cfg.seed as i64));
    root.insert("output_dir".into(), Value::String(cfg.output_dir.display().to_string()));
    root.insert("deterministic".into(), Value::Boolean(cfg.deterministic));
    let set = Value::try_from(SetSpec::from(cfg.set.clone())).map_err(|e| CliError::InvalidConfig(e.to_string()))?;
    root.insert("set".into(), set);
    root.insert("params".into(), Value::Table(used));
    toml::to_string(&root).map_err(|e| CliError::InvalidConfig(e.to_string()))
}

fn require_self_similar(set: &CompactSet, command: &str) -> CliResult<(crate::geometry::IfsSpec, u32)> {
    match set {
        CompactSet::SelfSimilar { ifs, depth } => Ok((ifs.clone(), *depth)),
        other => Err(CliError::InvalidConfig(format!(
            "{command} needs a self_similar set, got {}",
            other.label()
        ))),
    }
}

/// Runs one configuration, writing outputs and the resolved config.
pub fn run(cfg: &RunConfig) -> CliResult<RunOutcome> {
    let started = Instant::now();
    let mut p = Params::new(cfg.params.clone());
    let mut w = Writer::create(&cfg.output_dir)?;
    let set = &cfg.set;
    let seed = cfg.seed;
    match cfg.command.as_str() {
        "minimize-energy" => {
            let n = p.usize("N")?;
            let s = p.f64("s")?;
            let opts = p.optimizer(seed, 16)?;
            p.finish()?;
            let rep = minimize_energy(set, n, s, &opts)?;
            w.json("energy_report.json", &rep)?;
        }
        "best-pack" => {
            let n = p.usize("N")?;
            let opts = p.packing(seed, 16)?;
            p.finish()?;
            let rep = best_packing(set, n, &opts)?;
            w.json("packing_report.json", &rep)?;
        }
        "cantor-exact" => {
            let (ifs, set_depth) = require_self_similar(set, &cfg.command)?;
            let ns = match p.list("N_list", as_usize)? {
                Some(ns) => ns,
                None => vec![p.usize("N")?],
            };
            let depth = p.usize_or("depth", set_depth as usize)? as u32;
            p.finish()?;
            let mut solver = ExactSolver::new(&ifs, depth);
            let inv_lambda = 1.0 / ifs.lambda();
            let mut csv = String::from("N,delta_num,delta_den,delta,normalized_value\n");
            let mut records = Vec::new();
            for &n in &ns {
                let e = solver.packing(n)?;
                let d = rational_to_f64(&e.delta);
                let normalized = d * (n as f64).powf(inv_lambda);
                csv.push_str(&format!(
                    "{n},{},{},{d:.16e},{normalized:.16e}\n",
                    e.delta.numer(),
                    e.delta.denom()
                ));
                records.push(json!({
                    "n": n,
                    "delta": e.delta.to_string(),
                    "delta_f64": d,
                    "normalized_value": normalized,
                    "witness": e.witness.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                }));
            }
            w.text("cantor_exact.csv", &csv)?;
            w.json("cantor_exact.json", &json!({ "set": set, "depth": depth, "packings": records }))?;
        }
        "oscillation" => {
            let (ifs, set_depth) = require_self_similar(set, &cfg.command)?;
            let k = p.usize("k")?;
            let m_max = p.usize("m_max")? as u32;
            let depth = p.usize_or("depth", set_depth as usize)? as u32;
            p.finish()?;
            let rep = subsequence_oscillation(&ifs, k, m_max, depth)?;
            w.text("oscillation.csv", &rep.to_csv())?;
            w.json(
                "oscillation.json",
                &json!({
                    "set": set,
                    "k": k,
                    "m_max": m_max,
                    "lambda": ifs.lambda(),
                    "delta_k": rep.delta_k.to_string(),
                    "limit_kpm": rep.limit_kpm,
                    "limit_cm": rep.limit_cm,
                    "ratio": rep.ratio,
                }),
            )?;
        }
        "sweep-energy" => {
            let s = p.f64("s")?;
            let ns = p.usize_list("N_list")?;
            let opts = p.optimizer(seed, 16)?;
            p.finish()?;
            let table = energy_sweep(set, s, &ns, &opts)?;
            w.table("sweep_energy", &table)?;
        }
        "sweep-packing" => {
            let ns = p.usize_list("N_list")?;
            let opts = p.packing(seed, 16)?;
            p.finish()?;
            let table = packing_sweep(set, &ns, &opts)?;
            w.table("sweep_packing", &table)?;
        }
        "minkowski" => run_minkowski(set, seed, &mut p, &mut w)?,
        "equidist" => {
            let ns = p.usize_list("N_list")?;
            let s = p.f64_or("s", 3.0)?;
            let mode = p.str_or("mode", "both")?;
            let (energy, packing) = match mode.as_str() {
                "both" => (true, true),
                "energy" => (true, false),
                "packing" => (false, true),
                _ => return Err(type_error("mode", "one of both, energy, packing")),
            };
            let opts = p.packing(seed, 16)?;
            p.finish()?;
            let regions = standard_regions(set)?;
            w.json("regions.json", &regions)?;
            if energy {
                let configs = ns
                    .iter()
                    .map(|&n| minimize_energy(set, n, s, &opts.optimizer).map(|r| r.config))
                    .collect::<crate::Result<Vec<_>>>()?;
                let rows = equidist_deviation(&configs, &regions)?;
                w.text("equidist_energy.csv", &deviation_csv(&rows))?;
                w.json("equidist_energy.json", &rows)?;
            }
            if packing {
                let configs = packing_sweep(set, &ns, &opts)?.configs;
                let rows = equidist_deviation(&configs, &regions)?;
                w.text("equidist_packing.csv", &deviation_csv(&rows))?;
                w.json("equidist_packing.json", &rows)?;
            }
        }
        "root-limits" => {
            let n = p.usize("N")?;
            let s_list = p.f64_list("s_list")?;
            let opts = p.packing(seed, 16)?;
            p.finish()?;
            let rl = root_limit_fixed_n(set, n, &s_list, &opts)?;
            w.text("root_limits.csv", &rl.to_csv())?;
            w.json("root_limits.json", &rl)?;
            let above_one: Vec<f64> = s_list.iter().copied().filter(|&s| s > 1.0).collect();
            if !above_one.is_empty() {
                let mut csv = String::from("s,value\n");
                for (s, v) in csd_root_limit(&above_one)? {
                    csv.push_str(&format!("{s:.16e},{v:.16e}\n"));
                }
                w.text("csd_root_limit.csv", &csv)?;
            }
        }
        other => return Err(CliError::InvalidConfig(format!("unknown command `{other}`"))),
    }
    let echo = resolved_toml(cfg, p.used)?;
    w.text("resolved_config.toml", &echo)?;
    if !cfg.deterministic {
        w.json(
            "run_info.json",
            &json!({ "command": cfg.command, "elapsed_seconds": started.elapsed().as_secs_f64() }),
        )?;
    }
    Ok(RunOutcome { files: w.files })
}

fn run_minkowski(set: &CompactSet, seed: u64, p: &mut Params, w: &mut Writer) -> CliResult<()> {
    let alpha = p.f64_or("alpha", set.intrinsic_dim())?;
    let rho_grid = match p.list("rho_grid", as_f64)? {
        Some(g) => g,
        None => {
            let rho0 = p.f64_or("rho0", 0.5)?;
            let levels = p.usize_or("levels", 16)?;
            default_rho_grid(rho0, levels as u32)
        }
    };
    let normalization = match p.str_or("normalization", "paper")?.as_str() {
        "paper" | "ball" => Normalization::Ball,
        "raw" => Normalization::Raw,
        _ => return Err(type_error("normalization", "`paper` or `raw`")),
    };
    let samples = p.usize_or("samples", 0)?;
    let dimension = p.bool_or("dimension", false)?;
    let s_list = p.list("s_list", as_f64)?;
    let n_list = p.list("N_list", as_usize)?;
    let sweep_restarts = p.usize_or("restarts", 4)?;
    let s_single = p.opt_f64("s")?;
    p.finish()?;

    let content = content_estimate(set, alpha, &rho_grid, normalization)?;
    w.text("content.csv", &content.to_csv())?;
    let (raw_lo, raw_hi) = content.raw_contents(set.ambient_dim());
    w.json(
        "content.json",
        &json!({
            "set": set,
            "alpha": alpha,
            "normalization": normalization,
            "lower_content": content.lower_content,
            "upper_content": content.upper_content,
            "raw_lower_content": raw_lo,
            "raw_upper_content": raw_hi,
        }),
    )?;
    if samples > 0 {
        let mut csv = String::from("rho,exact_volume,mc_volume,mc_stderr\n");
        for (j, &rho) in rho_grid.iter().enumerate() {
            let exact = neighborhood_volume(set, rho)?;
            let mc = neighborhood_volume_mc(set, rho, samples, seed.wrapping_add(j as u64))?;
            csv.push_str(&format!(
                "{rho:.16e},{:.16e},{:.16e},{:.16e}\n",
                exact.volume, mc.volume, mc.stderr
            ));
        }
        w.text("mc_volumes.csv", &csv)?;
    }
    let s_values: Vec<f64> = match (s_list, s_single) {
        (Some(l), _) => l,
        (None, Some(s)) => vec![s],
        (None, None) => Vec::new(),
    };
    if !s_values.is_empty() {
        let ns = n_list.ok_or_else(|| CliError::MissingParam("N_list".into()))?;
        let opts = PackingOptions::with_seed(seed).restarts(sweep_restarts);
        let packing = packing_sweep(set, &ns, &opts)?;
        let mut reports = Vec::new();
        for &s in &s_values {
            let energy = energy_sweep(set, s, &ns, &opts.optimizer)?;
            reports.push(check_sandwich(set, alpha, s, &packing.raw(), &energy.raw(), &content));
        }
        w.json("sandwich.json", &reports)?;
    } else if n_list.is_some() {
        return Err(CliError::MissingParam("s_list".into()));
    }
    if dimension {
        let est = minkowski_dimension_estimate(set, &DimensionOptions::default())?;
        w.json("dimension.json", &est)?;
    }
    Ok(())
}

/// Parses arguments, runs, reports, and returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match RunConfig::load(&args).and_then(|cfg| run(&cfg)) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
