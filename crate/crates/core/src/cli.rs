//! Experiment runner behind the `fsard` binary.
//!
//! An [`ExperimentSpec`] is read from an optional JSON file and overridden
//! by command-line flags. Parameter lists accept a single value, a comma
//! list (`2,3`) or an inclusive range `start:stop:step` (`0.05:1:0.05`).
//! Every output file carries the resolved spec and the library version, so
//! feeding the embedded spec back through `--config` reruns the experiment.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};

use crate::analysis::{
    aaoi_fsa_rd, aaoi_fsa_rd_one, aaoi_upper_bound_one, collision_free_prob, near_optimal_gamma,
    p_success_fsa_rd_one,
};
use crate::config::{AlohaConfig, ProtocolConfig, Scheme};
use crate::error::{Error, Result};
use crate::optimizer::{
    default_gamma_grid, optimize_fsa_rd, optimize_fsa_rd_default, optimize_fsa_rd_one,
    optimize_fsa_rd_one_exhaustive, optimize_slotted_aloha, OptimizationResult,
};
use crate::output::{fmt_num, write_csv};
use crate::reference::{published_aloha_cells, published_fsa_cells};
use crate::simulator::{simulate_with, write_trace_csv, mean_and_halfwidth, SchemeSpec, SimOptions};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "FSARD_WORKERS";

const DEFAULT_HORIZON: u64 = 10_000_000;
const DEFAULT_REPLICATIONS: u64 = 5;
const REPRODUCE_HORIZON: u64 = 2_000_000;
const REPRODUCE_REPLICATIONS: u64 = 1;
const OPTIMIZE_REPLICATIONS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Analyze,
    Simulate,
    Optimize,
    Reproduce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SchemeKind {
    #[value(name = "FSA_RD", alias = "fsa-rd")]
    FsaRd,
    #[value(name = "FSA_RD_ONE", alias = "fsa-rd-one")]
    FsaRdOne,
    #[value(name = "SLOTTED_ALOHA", alias = "aloha")]
    SlottedAloha,
}

impl SchemeKind {
    fn fsa(self) -> Option<Scheme> {
        match self {
            SchemeKind::FsaRd => Some(Scheme::FsaRd),
            SchemeKind::FsaRdOne => Some(Scheme::FsaRdOne),
            SchemeKind::SlottedAloha => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Fig3,
    Fig4,
    Table1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A fully described experiment. Empty parameter lists mean "use the
/// command's default"; `resolve` fills them in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub command: Command,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeKind,
    #[serde(default, rename = "N", deserialize_with = "de_usizes")]
    pub users: Vec<usize>,
    #[serde(default, rename = "M", deserialize_with = "de_usizes")]
    pub frame_len: Vec<usize>,
    #[serde(default, rename = "V", deserialize_with = "de_usizes")]
    pub minislots: Vec<usize>,
    #[serde(default, deserialize_with = "de_floats")]
    pub rho: Vec<f64>,
    /// Empty for FSA commands means the near-optimal value per point
    /// (analyze, simulate) or the default grid (optimize).
    #[serde(default, deserialize_with = "de_floats")]
    pub gamma: Vec<f64>,
    #[serde(default, deserialize_with = "de_floats")]
    pub tau: Vec<f64>,
    #[serde(default)]
    pub horizon: Option<u64>,
    /// `None` means `10^4 * M` slots.
    #[serde(default)]
    pub warmup: Option<u64>,
    #[serde(default)]
    pub replications: Option<u64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub target: Option<Target>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub trace: bool,
    #[serde(default)]
    pub force: bool,
}

fn default_scheme() -> SchemeKind {
    SchemeKind::FsaRd
}

impl ExperimentSpec {
    pub fn new(command: Command) -> Self {
        ExperimentSpec {
            command,
            scheme: SchemeKind::FsaRd,
            users: Vec::new(),
            frame_len: Vec::new(),
            minislots: Vec::new(),
            rho: Vec::new(),
            gamma: Vec::new(),
            tau: Vec::new(),
            horizon: None,
            warmup: None,
            replications: None,
            seed: None,
            target: None,
            out: None,
            format: Format::Csv,
            trace: false,
            force: false,
        }
    }

    /// Fills defaults that depend on the command and validates ranges.
    /// A missing seed for simulation commands is drawn from OS entropy.
    pub fn resolve(mut self) -> Result<Self> {
        let simulates = matches!(self.command, Command::Simulate | Command::Reproduce)
            || (self.command == Command::Optimize && self.scheme == SchemeKind::SlottedAloha);
        match self.command {
            Command::Reproduce => {
                self.target.get_or_insert(Target::Table1);
                self.horizon.get_or_insert(REPRODUCE_HORIZON);
                self.replications.get_or_insert(REPRODUCE_REPLICATIONS);
            }
            Command::Simulate => {
                self.horizon.get_or_insert(DEFAULT_HORIZON);
                self.replications.get_or_insert(DEFAULT_REPLICATIONS);
            }
            Command::Optimize if self.scheme == SchemeKind::SlottedAloha => {
                self.horizon.get_or_insert(DEFAULT_HORIZON);
                self.replications.get_or_insert(OPTIMIZE_REPLICATIONS);
            }
            _ => {}
        }
        if simulates && self.seed.is_none() {
            let seed: u64 = rand::random();
            eprintln!("seed: {seed}");
            self.seed = Some(seed);
        }
        if self.command != Command::Reproduce {
            require(&self.users, "N")?;
            require(&self.rho, "rho")?;
            if self.scheme == SchemeKind::SlottedAloha {
                if self.command == Command::Analyze {
                    return Err(Error::domain("scheme", "analyze supports FSA_RD and FSA_RD_ONE only"));
                }
                if self.command == Command::Simulate {
                    require(&self.tau, "tau")?;
                }
            } else {
                require(&self.minislots, "V")?;
                if self.command != Command::Optimize {
                    require(&self.frame_len, "M")?;
                }
            }
        }
        if self.trace && self.out.is_none() {
            return Err(Error::domain("trace", "trace files need --out"));
        }
        if self.replications == Some(0) {
            return Err(Error::domain("reps", "at least one replication is required"));
        }
        Ok(self)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn horizon(&self) -> u64 {
        self.horizon.unwrap_or(DEFAULT_HORIZON)
    }

    fn replications(&self) -> u64 {
        self.replications.unwrap_or(1)
    }

    fn warmup_for(&self, scheme: &SchemeSpec) -> u64 {
        self.warmup.unwrap_or_else(|| scheme.default_warmup())
    }

    fn metadata(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("spec serializes")
    }
}

fn require<T>(values: &[T], name: &'static str) -> Result<()> {
    if values.is_empty() {
        Err(Error::domain(name, "no value given"))
    } else {
        Ok(())
    }
}

/// Parses `x`, `x,y,z` or `start:stop:step` (inclusive).
pub fn parse_floats(text: &str) -> std::result::Result<Vec<f64>, String> {
    let text = text.trim();
    if let Some((a, rest)) = text.split_once(':') {
        let (b, step) = rest
            .split_once(':')
            .ok_or_else(|| format!("range {text:?} needs start:stop:step"))?;
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
        let (a, b, step) = (num(a)?, num(b)?, num(step)?);
        if !(step > 0.0) || b < a {
            return Err(format!("range {text:?} is empty"));
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        // Round to 12 decimals so 0.1 + 2 * 0.05 prints as 0.2.
        return Ok((0..=count)
            .map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12)
            .collect());
    }
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

pub fn parse_usizes(text: &str) -> std::result::Result<Vec<usize>, String> {
    parse_floats(text)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(format!("{x} is not a non-negative integer"))
            }
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ListValue<T> {
    One(T),
    Many(Vec<T>),
    Text(String),
}

fn de_floats<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
    match ListValue::<f64>::deserialize(d)? {
        ListValue::One(x) => Ok(vec![x]),
        ListValue::Many(v) => Ok(v),
        ListValue::Text(s) => parse_floats(&s).map_err(serde::de::Error::custom),
    }
}

fn de_usizes<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<usize>, D::Error> {
    match ListValue::<usize>::deserialize(d)? {
        ListValue::One(x) => Ok(vec![x]),
        ListValue::Many(v) => Ok(v),
        ListValue::Text(s) => parse_usizes(&s).map_err(serde::de::Error::custom),
    }
}

#[derive(Debug, Parser)]
#[command(name = "fsard", version, about = "AoI analysis, simulation and tuning for frame slotted ALOHA with reservation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Analytical AAoI over a parameter grid.
    Analyze(Flags),
    /// Monte Carlo AAoI with replications.
    Simulate(Flags),
    /// Parameter search for the chosen scheme.
    Optimize(Flags),
    /// Regenerate a published figure or table with pass/fail checks.
    Reproduce {
        target: Target,
        #[command(flatten)]
        flags: Flags,
    },
}

// Aliases keep clap from treating each list as a repeated flag.
type UsizeList = Vec<usize>;
type FloatList = Vec<f64>;

#[derive(Debug, Args, Default)]
pub struct Flags {
    /// JSON experiment spec; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeKind>,
    #[arg(long = "N", value_parser = parse_usizes)]
    pub users: Option<UsizeList>,
    #[arg(long = "M", value_parser = parse_usizes)]
    pub frame_len: Option<UsizeList>,
    #[arg(long = "V", value_parser = parse_usizes)]
    pub minislots: Option<UsizeList>,
    #[arg(long, value_parser = parse_floats)]
    pub rho: Option<FloatList>,
    #[arg(long, value_parser = parse_floats)]
    pub gamma: Option<FloatList>,
    #[arg(long, value_parser = parse_floats)]
    pub tau: Option<FloatList>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub warmup: Option<u64>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (directory for `reproduce`); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write per-reception trace CSVs next to `--out`.
    #[arg(long)]
    pub trace: bool,
    /// Report simulated optima even when confidence intervals overlap.
    #[arg(long)]
    pub force: bool,
}

/// Merges a config file (if any) with flags into an unresolved spec.
pub fn spec_from_flags(command: Command, target: Option<Target>, flags: Flags) -> Result<ExperimentSpec> {
    let mut spec = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let mut s: ExperimentSpec =
                serde_json::from_str(&text).map_err(|e| Error::domain("config", e.to_string()))?;
            s.command = command;
            s
        }
        None => ExperimentSpec::new(command),
    };
    let set = |dst: &mut Vec<_>, src: Option<Vec<_>>| {
        if let Some(v) = src {
            *dst = v;
        }
    };
    if let Some(s) = flags.scheme {
        spec.scheme = s;
    }
    set(&mut spec.users, flags.users);
    set(&mut spec.frame_len, flags.frame_len);
    set(&mut spec.minislots, flags.minislots);
    if let Some(v) = flags.rho {
        spec.rho = v;
    }
    if let Some(v) = flags.gamma {
        spec.gamma = v;
    }
    if let Some(v) = flags.tau {
        spec.tau = v;
    }
    spec.horizon = flags.horizon.or(spec.horizon);
    spec.warmup = flags.warmup.or(spec.warmup);
    spec.replications = flags.reps.or(spec.replications);
    spec.seed = flags.seed.or(spec.seed);
    spec.out = flags.out.or(spec.out);
    spec.format = flags.format.unwrap_or(spec.format);
    spec.trace |= flags.trace;
    spec.force |= flags.force;
    if target.is_some() {
        spec.target = target;
    }
    Ok(spec)
}

/// Rows produced by a command, with a JSON rendering of the same data.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub json: serde_json::Value,
}

impl ResultTable {
    fn from_records(records: Vec<Vec<(&'static str, String)>>, json: serde_json::Value) -> Self {
        let columns = records
            .first()
            .map(|r| r.iter().map(|(k, _)| k.to_string()).collect())
            .unwrap_or_default();
        let rows = records
            .into_iter()
            .map(|r| r.into_iter().map(|(_, v)| v).collect())
            .collect();
        ResultTable { columns, rows, json }
    }

    /// Writes CSV or JSON according to `spec.format`.
    pub fn write<W: Write>(&self, out: W, spec: &ExperimentSpec) -> Result<()> {
        match spec.format {
            Format::Csv => {
                let cols: Vec<&str> = self.columns.iter().map(String::as_str).collect();
                write_csv(out, &spec.metadata(), &cols, &self.rows)
            }
            Format::Json => write_json(out, spec, &self.json),
        }
    }
}

fn write_json<W: Write>(mut out: W, spec: &ExperimentSpec, results: &serde_json::Value) -> Result<()> {
    let doc = serde_json::json!({
        "fsard_version": env!("CARGO_PKG_VERSION"),
        "spec": spec.metadata(),
        "results": results,
    });
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn fsa_points(spec: &ExperimentSpec) -> Result<Vec<ProtocolConfig>> {
    let mut out = Vec::new();
    for &n in &spec.users {
        for &v in &spec.minislots {
            for &m in &spec.frame_len {
                for &rho in &spec.rho {
                    let gammas = if spec.gamma.is_empty() {
                        // Validate first so a bad M is reported as such.
                        ProtocolConfig::new(n, m, v, rho, 1.0)?;
                        vec![near_optimal_gamma(n, v, m, rho)?.value()]
                    } else {
                        spec.gamma.clone()
                    };
                    for g in gammas {
                        out.push(ProtocolConfig::new(n, m, v, rho, g)?);
                    }
                }
            }
        }
    }
    Ok(out)
}

fn aloha_points(spec: &ExperimentSpec) -> Result<Vec<AlohaConfig>> {
    let mut out = Vec::new();
    for &n in &spec.users {
        for &rho in &spec.rho {
            for &tau in &spec.tau {
                out.push(AlohaConfig::new(n, rho, tau)?);
            }
        }
    }
    Ok(out)
}

/// One row per parameter combination with the full analytical report.
pub fn run_analyze(spec: &ExperimentSpec) -> Result<ResultTable> {
    let scheme = spec
        .scheme
        .fsa()
        .ok_or_else(|| Error::domain("scheme", "analyze supports FSA_RD and FSA_RD_ONE only"))?;
    let points = fsa_points(spec)?;
    let reports = points
        .iter()
        .map(|cfg| match scheme {
            Scheme::FsaRd => aaoi_fsa_rd(cfg),
            Scheme::FsaRdOne => aaoi_fsa_rd_one(cfg),
        })
        .collect::<Result<Vec<_>>>()?;
    let json = serde_json::to_value(&reports).map_err(|e| Error::Io(e.to_string()))?;
    Ok(ResultTable::from_records(reports.iter().map(|r| r.record()).collect(), json))
}

fn scheme_specs(spec: &ExperimentSpec) -> Result<Vec<SchemeSpec>> {
    Ok(match spec.scheme.fsa() {
        Some(s) => fsa_points(spec)?.into_iter().map(|c| SchemeSpec::fsa(s, c)).collect(),
        None => aloha_points(spec)?.into_iter().map(SchemeSpec::SlottedAloha).collect(),
    })
}

#[allow(clippy::too_many_arguments)]
fn sim_record(
    scheme: &SchemeSpec,
    replication: &str,
    horizon: u64,
    warmup: u64,
    seed: u64,
    aaoi: f64,
    ci: Option<f64>,
    receptions: Option<u64>,
    analytic: Option<f64>,
) -> Vec<(&'static str, String)> {
    let (n, m, v, rho, gamma, tau) = match scheme {
        SchemeSpec::FsaRd(c) | SchemeSpec::FsaRdOne(c) => (
            c.users,
            c.frame_len.to_string(),
            c.minislots.to_string(),
            c.rho,
            fmt_num(c.gamma),
            String::new(),
        ),
        SchemeSpec::SlottedAloha(c) => (c.users, String::new(), String::new(), c.rho, String::new(), fmt_num(c.tau)),
    };
    vec![
        ("scheme", scheme.kind().to_string()),
        ("N", n.to_string()),
        ("M", m),
        ("V", v),
        ("rho", fmt_num(rho)),
        ("gamma", gamma),
        ("tau", tau),
        ("replication", replication.to_string()),
        ("horizon", horizon.to_string()),
        ("warmup", warmup.to_string()),
        ("seed", seed.to_string()),
        ("aaoi", fmt_num(aaoi)),
        ("ci_halfwidth", ci.map(fmt_num).unwrap_or_default()),
        ("receptions", receptions.map(|r| r.to_string()).unwrap_or_default()),
        ("analytic_aaoi", analytic.map(fmt_num).unwrap_or_default()),
    ]
}

fn analytic_value(scheme: &SchemeSpec) -> Result<Option<f64>> {
    Ok(match scheme {
        SchemeSpec::FsaRd(c) => Some(aaoi_fsa_rd(c)?.aaoi),
        SchemeSpec::FsaRdOne(c) => Some(aaoi_fsa_rd_one(c)?.aaoi),
        SchemeSpec::SlottedAloha(_) => None,
    })
}

fn trace_path(out: &Path, point: usize, replication: u64) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("fsard");
    out.with_file_name(format!("{stem}.trace.p{point}.r{replication}.csv"))
}

/// One row per combination and replication plus an aggregate row (`mean`)
/// carrying the 95% half-width over replications.
pub fn run_simulate(spec: &ExperimentSpec) -> Result<ResultTable> {
    let horizon = spec.horizon();
    let reps = spec.replications();
    let mut records = Vec::new();
    let mut json = Vec::new();
    for (index, scheme) in scheme_specs(spec)?.iter().enumerate() {
        let warmup = spec.warmup_for(scheme);
        let base = SimOptions {
            horizon,
            warmup,
            seed: spec.seed(),
            replication: 0,
            record_trace: spec.trace,
        };
        let runs = crate::parallel_map((0..reps).collect(), |r| simulate_with(scheme, &base.with_replication(r)))?;
        let analytic = analytic_value(scheme)?;
        for run in &runs {
            records.push(sim_record(
                scheme,
                &run.replication.to_string(),
                horizon,
                warmup,
                run.seed,
                run.network_aaoi,
                run.ci_halfwidth,
                Some(run.reception_count),
                analytic,
            ));
            if let (Some(trace), Some(out)) = (&run.trace, &spec.out) {
                let file = File::create(trace_path(out, index, run.replication))?;
                write_trace_csv(BufWriter::new(file), trace)?;
            }
        }
        let values: Vec<f64> = runs.iter().map(|r| r.network_aaoi).collect();
        let (mean, ci) = mean_and_halfwidth(&values);
        records.push(sim_record(scheme, "mean", horizon, warmup, spec.seed(), mean, ci, None, analytic));
        let mut runs = runs;
        for r in &mut runs {
            r.trace = None;
        }
        json.push(serde_json::json!({
            "scheme": scheme,
            "mean_aaoi": mean,
            "ci_halfwidth": ci,
            "analytic_aaoi": analytic,
            "runs": runs,
        }));
    }
    Ok(ResultTable::from_records(records, serde_json::Value::Array(json)))
}

/// Searches for each `(N, V, rho)` (FSA) or `(N, rho)` (ALOHA). For
/// slotted ALOHA without `--tau` the grid is `c / N`, `c = 0.4, 0.6, ..., 4`.
pub fn run_optimize(spec: &ExperimentSpec) -> Result<(ResultTable, Vec<OptimizationResult>)> {
    let mut results = Vec::new();
    match spec.scheme {
        SchemeKind::FsaRd | SchemeKind::FsaRdOne => {
            for &n in &spec.users {
                for &v in &spec.minislots {
                    for &rho in &spec.rho {
                        let r = match (spec.scheme, spec.gamma.is_empty()) {
                            (SchemeKind::FsaRd, true) => optimize_fsa_rd_default(n, v, rho)?,
                            (SchemeKind::FsaRd, false) => optimize_fsa_rd(n, v, rho, &spec.gamma)?,
                            (_, true) => optimize_fsa_rd_one(n, v, rho)?,
                            (_, false) => optimize_fsa_rd_one_exhaustive(n, v, rho, &spec.gamma)?,
                        };
                        results.push(r);
                    }
                }
            }
        }
        SchemeKind::SlottedAloha => {
            for &n in &spec.users {
                for &rho in &spec.rho {
                    let grid = if spec.tau.is_empty() { default_tau_grid(n) } else { spec.tau.clone() };
                    results.push(optimize_slotted_aloha(
                        n,
                        rho,
                        &grid,
                        spec.horizon(),
                        spec.replications(),
                        spec.seed(),
                        spec.force,
                    )?);
                }
            }
        }
    }
    let mut records = Vec::new();
    for r in &results {
        for p in &r.search_trace {
            let is_best = p.frame_len == r.best_frame_len && p.probability == r.best_probability;
            records.push(vec![
                ("scheme", r.scheme.as_str().to_string()),
                ("N", r.users.to_string()),
                ("V", r.minislots.map(|v| v.to_string()).unwrap_or_default()),
                ("rho", fmt_num(r.rho)),
                ("M", p.frame_len.map(|m| m.to_string()).unwrap_or_default()),
                ("probability", fmt_num(p.probability)),
                ("aaoi", fmt_num(p.aaoi)),
                ("ci_halfwidth", p.ci_halfwidth.map(fmt_num).unwrap_or_default()),
                ("best", is_best.to_string()),
            ]);
        }
    }
    let json = serde_json::Value::Array(results.iter().map(|r| r.summary_json()).collect());
    Ok((ResultTable::from_records(records, json), results))
}

/// `c / N` for `c = 0.4, 0.6, ..., 4.0`, capped at 1.
pub fn default_tau_grid(users: usize) -> Vec<f64> {
    let mut grid: Vec<f64> = (2..=20)
        .map(|k| (0.2 * k as f64 / users as f64).min(1.0))
        .map(|x| (x * 1e12).round() / 1e12)
        .collect();
    grid.dedup();
    grid
}

/// One tolerance check of a reproduction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    pub tolerance: String,
    pub passed: bool,
}

impl Check {
    fn relative(name: String, expected: f64, actual: f64, tol: f64) -> Self {
        Check {
            name,
            expected,
            actual,
            tolerance: format!("rel {}", fmt_num(tol)),
            passed: ((actual - expected) / expected).abs() <= tol,
        }
    }

    fn absolute(name: String, expected: f64, actual: f64, tol: f64) -> Self {
        Check {
            name,
            expected,
            actual,
            tolerance: format!("abs {}", fmt_num(tol)),
            passed: (actual - expected).abs() <= tol,
        }
    }

    fn line(&self) -> String {
        format!(
            "{} {}: expected {} got {} ({})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            fmt_num(self.expected),
            fmt_num(self.actual),
            self.tolerance
        )
    }
}

/// Files written and checks made by `reproduce`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceReport {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl ReproduceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Writes the CSVs of `spec.target` into the `spec.out` directory
/// (default `reproduce-<target>`) plus `summary.txt`.
pub fn run_reproduce(spec: &ExperimentSpec) -> Result<ReproduceReport> {
    let target = spec.target.unwrap_or(Target::Table1);
    let name = match target {
        Target::Fig3 => "fig3",
        Target::Fig4 => "fig4",
        Target::Table1 => "table1",
    };
    let dir = spec.out.clone().unwrap_or_else(|| PathBuf::from(format!("reproduce-{name}")));
    fs::create_dir_all(&dir)?;
    let mut report = ReproduceReport {
        files: Vec::new(),
        checks: Vec::new(),
    };
    match target {
        Target::Fig3 => reproduce_fig3(spec, &dir, &mut report)?,
        Target::Fig4 => reproduce_fig4(spec, &dir, &mut report)?,
        Target::Table1 => reproduce_table1(spec, &dir, &mut report)?,
    }
    let summary = dir.join("summary.txt");
    let mut f = BufWriter::new(File::create(&summary)?);
    writeln!(f, "# fsard {} {}", env!("CARGO_PKG_VERSION"), spec.metadata())?;
    for c in &report.checks {
        writeln!(f, "{}", c.line())?;
    }
    let passed = report.checks.iter().filter(|c| c.passed).count();
    writeln!(f, "{passed}/{} checks passed", report.checks.len())?;
    f.flush()?;
    report.files.push(summary);
    Ok(report)
}

fn write_table(
    spec: &ExperimentSpec,
    path: PathBuf,
    columns: &[&str],
    rows: &[Vec<String>],
    report: &mut ReproduceReport,
) -> Result<()> {
    let mut f = BufWriter::new(File::create(&path)?);
    write_csv(&mut f, &spec.metadata(), columns, rows)?;
    f.flush()?;
    report.files.push(path);
    Ok(())
}

/// Analytical FSA-RD, FSA-RD-One and upper-bound curves over `gamma`
/// for `(N, V) in {(30, 4), (50, 6)}`, `rho in {0.04, 0.1}`, `M in {2, 3}`,
/// with simulated points every 0.1 in `gamma`. A simulated point passes
/// when it is within 2% of the analytical value plus three batch-means
/// half-widths.
fn reproduce_fig3(spec: &ExperimentSpec, dir: &Path, report: &mut ReproduceReport) -> Result<()> {
    let columns = [
        "N", "V", "rho", "M", "gamma", "fsa_rd", "fsa_rd_one", "upper_bound", "sim_fsa_rd", "sim_fsa_rd_ci",
        "sim_fsa_rd_one", "sim_fsa_rd_one_ci",
    ];
    let mut jobs = Vec::new();
    for (n, v) in [(30, 4), (50, 6)] {
        for rho in [0.04, 0.1] {
            for m in [2, 3] {
                for k in 1..=20 {
                    let gamma = k as f64 * 0.05;
                    let cfg = ProtocolConfig::new(n, m, v, rho, (gamma * 1e12).round() / 1e12)?;
                    jobs.push((cfg, k % 2 == 0));
                }
            }
        }
    }
    let seed = spec.seed();
    let horizon = spec.horizon();
    let rows = crate::parallel_map(jobs, |(cfg, simulated)| {
        let rd = aaoi_fsa_rd(&cfg)?.aaoi;
        let one = aaoi_fsa_rd_one(&cfg)?.aaoi;
        let ub = aaoi_upper_bound_one(&cfg)?;
        let mut sims = Vec::new();
        if simulated {
            for scheme in [Scheme::FsaRd, Scheme::FsaRdOne] {
                let s = SchemeSpec::fsa(scheme, cfg);
                let warmup = spec.warmup_for(&s);
                let run = simulate_with(&s, &SimOptions::new(horizon, warmup, seed))?;
                sims.push((run.network_aaoi, run.ci_halfwidth.unwrap_or(0.0)));
            }
        }
        Ok((cfg, rd, one, ub, sims))
    })?;
    let mut table = Vec::new();
    for (cfg, rd, one, ub, sims) in rows {
        let opt = |i: usize, f: fn(&(f64, f64)) -> f64| sims.get(i).map(|s| fmt_num(f(s))).unwrap_or_default();
        table.push(vec![
            cfg.users.to_string(),
            cfg.minislots.to_string(),
            fmt_num(cfg.rho),
            cfg.frame_len.to_string(),
            fmt_num(cfg.gamma),
            fmt_num(rd),
            fmt_num(one),
            fmt_num(ub),
            opt(0, |s| s.0),
            opt(0, |s| s.1),
            opt(1, |s| s.0),
            opt(1, |s| s.1),
        ]);
        for (i, (label, analytic)) in [("FSA_RD", rd), ("FSA_RD_ONE", one)].into_iter().enumerate() {
            if let Some(&(sim, ci)) = sims.get(i) {
                let name = format!(
                    "fig3 {label} N={} V={} rho={} M={} gamma={}",
                    cfg.users,
                    cfg.minislots,
                    fmt_num(cfg.rho),
                    cfg.frame_len,
                    fmt_num(cfg.gamma)
                );
                let tol = 0.02 * analytic + 3.0 * ci;
                report.checks.push(Check {
                    name,
                    expected: analytic,
                    actual: sim,
                    tolerance: format!("abs {}", fmt_num(tol)),
                    passed: (sim - analytic).abs() <= tol,
                });
            }
        }
    }
    write_table(spec, dir.join("fig3.csv"), &columns, &table, report)
}

/// (a) `p~_s * gamma` against `p_s^o * gamma` for `N = 50`, `M = 3`,
/// `V = 4`; (b) near-optimal-gamma guided against exhaustive FSA-RD-One optima for
/// `N = 50`, `V in {4, 6, 8}`, `rho in {0.01, ..., 0.1}` (checked at 2%).
fn reproduce_fig4(spec: &ExperimentSpec, dir: &Path, report: &mut ReproduceReport) -> Result<()> {
    let mut rows = Vec::new();
    for rho in [0.02, 0.04, 0.1] {
        for k in 1..=100 {
            let gamma = k as f64 / 100.0;
            let cfg = ProtocolConfig::new(50, 3, 4, rho, gamma)?;
            let approx = collision_free_prob(&cfg)?.value();
            let exact = p_success_fsa_rd_one(&cfg)?.p_s;
            rows.push(vec![
                fmt_num(rho),
                fmt_num(gamma),
                fmt_num(approx * gamma),
                fmt_num(exact * gamma),
            ]);
        }
    }
    write_table(
        spec,
        dir.join("fig4a.csv"),
        &["rho", "gamma", "collision_free_times_gamma", "p_s_one_times_gamma"],
        &rows,
        report,
    )?;

    let grid = default_gamma_grid();
    let mut jobs = Vec::new();
    for v in [4, 6, 8] {
        for k in 1..=10 {
            jobs.push((v, k as f64 / 100.0));
        }
    }
    let results = crate::parallel_map(jobs, |(v, rho)| {
        let guided = optimize_fsa_rd_one(50, v, rho)?;
        let exhaustive = optimize_fsa_rd_one_exhaustive(50, v, rho, &grid)?;
        Ok((v, rho, guided, exhaustive))
    })?;
    let mut rows = Vec::new();
    for (v, rho, guided, exhaustive) in results {
        rows.push(vec![
            v.to_string(),
            fmt_num(rho),
            guided.best_frame_len.unwrap_or(0).to_string(),
            fmt_num(guided.best_probability),
            fmt_num(guided.best_aaoi),
            exhaustive.best_frame_len.unwrap_or(0).to_string(),
            fmt_num(exhaustive.best_probability),
            fmt_num(exhaustive.best_aaoi),
        ]);
        report.checks.push(Check::relative(
            format!("fig4b V={v} rho={}", fmt_num(rho)),
            exhaustive.best_aaoi,
            guided.best_aaoi,
            0.02,
        ));
    }
    write_table(
        spec,
        dir.join("fig4b.csv"),
        &["V", "rho", "guided_M", "guided_gamma", "guided_aaoi", "exhaustive_M", "exhaustive_gamma", "exhaustive_aaoi"],
        &rows,
        report,
    )
}

/// Every printed cell: analytic AAoI at the printed parameters (1%),
/// search optimum (`M` exact, AAoI 1%, FSA-RD `gamma` within 0.02),
/// FSA-RD-One `gamma*` to four decimals, slotted ALOHA within 3%.
fn reproduce_table1(spec: &ExperimentSpec, dir: &Path, report: &mut ReproduceReport) -> Result<()> {
    let cells = published_fsa_cells();
    let evaluated = crate::parallel_map(cells, |c| {
        let cfg = ProtocolConfig::new(c.users, c.frame_len, c.minislots, c.rho, c.gamma)?;
        let (at_printed, search, guided_gamma) = match c.scheme {
            Scheme::FsaRd => (aaoi_fsa_rd(&cfg)?.aaoi, optimize_fsa_rd_default(c.users, c.minislots, c.rho)?, None),
            Scheme::FsaRdOne => {
                let g = near_optimal_gamma(c.users, c.minislots, c.frame_len, c.rho)?.value();
                let at = aaoi_fsa_rd_one(&cfg.with_gamma(g))?.aaoi;
                (at, optimize_fsa_rd_one(c.users, c.minislots, c.rho)?, Some(g))
            }
        };
        Ok((c, at_printed, search, guided_gamma))
    })?;
    let mut rows = Vec::new();
    for (c, at_printed, search, guided_gamma) in evaluated {
        let tag = format!(
            "table1({}) {} N={} V={} rho={}",
            c.table,
            c.scheme,
            c.users,
            c.minislots,
            fmt_num(c.rho)
        );
        report
            .checks
            .push(Check::relative(format!("{tag} aaoi at printed params"), c.aaoi, at_printed, 0.01));
        report.checks.push(Check::absolute(
            format!("{tag} search M*"),
            c.frame_len as f64,
            search.best_frame_len.unwrap_or(0) as f64,
            0.0,
        ));
        report
            .checks
            .push(Check::relative(format!("{tag} search aaoi"), c.aaoi, search.best_aaoi, 0.01));
        match guided_gamma {
            Some(g) => report
                .checks
                .push(Check::absolute(format!("{tag} gamma*"), c.gamma, (g * 1e4).round() / 1e4, 0.0)),
            None => report.checks.push(Check::absolute(
                format!("{tag} search gamma*"),
                c.gamma,
                search.best_probability,
                0.02 + 1e-12,
            )),
        }
        rows.push(vec![
            c.table.to_string(),
            c.scheme.to_string(),
            c.users.to_string(),
            c.minislots.to_string(),
            fmt_num(c.rho),
            fmt_num(c.gamma),
            c.frame_len.to_string(),
            fmt_num(c.aaoi),
            fmt_num(at_printed),
            fmt_num(search.best_probability),
            search.best_frame_len.unwrap_or(0).to_string(),
            fmt_num(search.best_aaoi),
        ]);
    }
    write_table(
        spec,
        dir.join("table1_fsa.csv"),
        &[
            "table", "scheme", "N", "V", "rho", "printed_gamma", "printed_M", "printed_aaoi", "aaoi_at_printed",
            "search_gamma", "search_M", "search_aaoi",
        ],
        &rows,
        report,
    )?;

    let mut rows = Vec::new();
    for c in published_aloha_cells() {
        let r = optimize_slotted_aloha(
            c.users,
            c.rho,
            &default_tau_grid(c.users),
            spec.horizon(),
            spec.replications(),
            spec.seed(),
            true,
        )?;
        report.checks.push(Check::relative(
            format!("table1({}) SLOTTED_ALOHA N={} rho={}", c.table, c.users, fmt_num(c.rho)),
            c.aaoi,
            r.best_aaoi,
            0.03,
        ));
        rows.push(vec![
            c.table.to_string(),
            c.users.to_string(),
            fmt_num(c.rho),
            fmt_num(c.aaoi),
            fmt_num(r.best_probability),
            fmt_num(r.best_aaoi),
        ]);
    }
    write_table(
        spec,
        dir.join("table1_aloha.csv"),
        &["table", "N", "rho", "printed_aaoi", "search_tau", "search_aaoi"],
        &rows,
        report,
    )
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Runs a resolved spec; `Ok(false)` means a reproduction check failed.
pub fn execute(spec: &ExperimentSpec) -> Result<bool> {
    match spec.command {
        Command::Analyze => {
            let t = run_analyze(spec)?;
            let mut out = open_output(&spec.out)?;
            t.write(&mut out, spec)?;
            out.flush()?;
            Ok(true)
        }
        Command::Simulate => {
            let t = run_simulate(spec)?;
            let mut out = open_output(&spec.out)?;
            t.write(&mut out, spec)?;
            out.flush()?;
            Ok(true)
        }
        Command::Optimize => {
            let (t, results) = run_optimize(spec)?;
            let mut out = open_output(&spec.out)?;
            t.write(&mut out, spec)?;
            out.flush()?;
            if spec.format == Format::Csv {
                if let Some(p) = &spec.out {
                    let summary = serde_json::Value::Array(results.iter().map(|r| r.summary_json()).collect());
                    let f = BufWriter::new(File::create(p.with_extension("summary.json"))?);
                    write_json(f, spec, &summary)?;
                }
            }
            Ok(true)
        }
        Command::Reproduce => {
            let r = run_reproduce(spec)?;
            let failed = r.checks.iter().filter(|c| !c.passed).count();
            for c in r.checks.iter().filter(|c| !c.passed) {
                eprintln!("{}", c.line());
            }
            eprintln!("{}/{} checks passed", r.checks.len() - failed, r.checks.len());
            for f in &r.files {
                eprintln!("wrote {}", f.display());
            }
            Ok(failed == 0)
        }
    }
}

fn configure_workers() {
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // Fails only if a pool already exists, in which case keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_workers();
    let (command, target, flags) = match cli.command {
        CliCommand::Analyze(f) => (Command::Analyze, None, f),
        CliCommand::Simulate(f) => (Command::Simulate, None, f),
        CliCommand::Optimize(f) => (Command::Optimize, None, f),
        CliCommand::Reproduce { target, flags } => (Command::Reproduce, Some(target), flags),
    };
    let outcome = spec_from_flags(command, target, flags)
        .and_then(ExperimentSpec::resolve)
        .and_then(|spec| execute(&spec));
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
