//! The `run`, `fit`, `percolation` and `selftest` commands, and the command-line front end.
//!
//! Run CSV (`topoloss.run.v1`): a `#schema=` line, then the header
//! `p_loss,p_comp,L,trials,failures,failures_percolation,failures_homology,p_fail,stderr,seed`
//! and one row per grid point in sorted grid order. Percolation CSV (`topoloss.percolation.v1`)
//! has columns `L,p_loss,trials,wrapping,p_wrap,stderr,seed`.
//!
//! Exit codes: 0 on success, 1 for usage and config errors, 2 for runtime data errors.

use std::ffi::OsString;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{fit_contour, fit_scaling, ContourFit, ContourPoint, DataPoint, FitError, ScalingDataset, ScalingFit};
use crate::config::SweepConfig;
use crate::error::{Error, Result};
use crate::montecarlo::{estimate_percolation, with_pool, Simulator};
use crate::oracles::{run_selftest, OracleReport};

pub const RUN_SCHEMA: &str = "topoloss.run.v1";
pub const PERCOLATION_SCHEMA: &str = "topoloss.percolation.v1";
pub const FIT_SCHEMA: &str = "topoloss.fit.v1";
/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "TOPOLOSS_WORKERS";
/// Loss range of the contour fit unless overridden.
pub const DEFAULT_CONTOUR_RANGE: (f64, f64) = (0.0, 0.15);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub p_loss: f64,
    pub p_comp: f64,
    #[serde(rename = "L")]
    pub size: usize,
    pub trials: u64,
    pub failures: u64,
    pub failures_percolation: u64,
    pub failures_homology: u64,
    pub p_fail: f64,
    pub stderr: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercolationRecord {
    #[serde(rename = "L")]
    pub size: usize,
    pub p_loss: f64,
    pub trials: u64,
    pub wrapping: u64,
    pub p_wrap: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// Worker count from the environment, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => with_pool(n, f),
        None => f(),
    }
}

/// Simulate every grid point of `config`. Rows come back in sorted grid order.
pub fn cmd_run(config: &SweepConfig, workers: Option<usize>) -> Result<Vec<RunRecord>> {
    config.validate()?;
    in_pool(workers, || {
        config
            .grid()
            .into_iter()
            .map(|(p_loss, p_comp, size)| {
                let tc = config.trial_config(p_loss, p_comp, size);
                let b = Simulator::new(tc)?.run_batch();
                Ok(RunRecord {
                    p_loss,
                    p_comp,
                    size,
                    trials: b.tallies.trials,
                    failures: b.tallies.failures(),
                    failures_percolation: b.tallies.failures_percolation,
                    failures_homology: b.tallies.failures_homology,
                    p_fail: b.estimate.p_fail,
                    stderr: b.estimate.stderr,
                    seed: tc.seed,
                })
            })
            .collect()
    })
}

fn write_schema_csv<T: Serialize, W: Write>(mut out: W, schema: &str, rows: &[T]) -> Result<()> {
    writeln!(out, "#schema={schema}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_schema_csv<T: for<'de> Deserialize<'de>, R: Read>(input: R, schema: &'static str) -> Result<Vec<T>> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let found = first.trim().strip_prefix("#schema=").unwrap_or(first.trim());
    if found != schema {
        return Err(Error::Schema {
            found: found.to_string(),
            expected: schema,
        });
    }
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn write_run_csv<W: Write>(out: W, rows: &[RunRecord]) -> Result<()> {
    write_schema_csv(out, RUN_SCHEMA, rows)
}

pub fn read_run_csv<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    read_schema_csv(input, RUN_SCHEMA)
}

pub fn write_percolation_csv<W: Write>(out: W, rows: &[PercolationRecord]) -> Result<()> {
    write_schema_csv(out, PERCOLATION_SCHEMA, rows)
}

pub fn read_percolation_csv<R: Read>(input: R) -> Result<Vec<PercolationRecord>> {
    read_schema_csv(input, PERCOLATION_SCHEMA)
}

/// Wrapping probability at every `(L, p_loss)`, sizes outermost.
pub fn cmd_percolation(
    sizes: &[usize],
    p_losses: &[f64],
    trials: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<PercolationRecord>> {
    if sizes.is_empty() || p_losses.is_empty() {
        return Err(Error::InvalidValue {
            key: "grid".into(),
            message: "sizes and p_loss lists must be nonempty".into(),
        });
    }
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    let mut ps = p_losses.to_vec();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    in_pool(workers, || {
        let mut out = Vec::new();
        for &l in &sizes {
            for &p in &ps {
                let e = estimate_percolation(l, p, trials, seed)?;
                out.push(PercolationRecord {
                    size: l,
                    p_loss: p,
                    trials,
                    wrapping: e.wrapping,
                    p_wrap: e.estimate.p_fail,
                    stderr: e.estimate.stderr,
                    seed: e.seed,
                });
            }
        }
        Ok(out)
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FitParameters {
    pub p_t: f64,
    pub nu: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FitEntry {
    Ok {
        p_loss: f64,
        parameters: FitParameters,
        sigmas: FitParameters,
        covariance: [[f64; 5]; 5],
        chi2: f64,
        dof: usize,
        iterations: usize,
        warnings: Vec<String>,
    },
    Error {
        p_loss: f64,
        error: FitError,
    },
}

impl FitEntry {
    fn from_result(p_loss: f64, r: std::result::Result<ScalingFit, FitError>) -> Self {
        match r {
            Ok(f) => {
                let s = f.sigmas();
                FitEntry::Ok {
                    p_loss,
                    parameters: FitParameters {
                        p_t: f.p_t,
                        nu: f.nu,
                        a: f.a,
                        b: f.b,
                        c: f.c,
                    },
                    sigmas: FitParameters {
                        p_t: s[0],
                        nu: s[1],
                        a: s[2],
                        b: s[3],
                        c: s[4],
                    },
                    covariance: f.covariance,
                    chi2: f.chi2,
                    dof: f.dof,
                    iterations: f.iterations,
                    warnings: f.warnings,
                }
            }
            Err(error) => FitEntry::Error { p_loss, error },
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, FitEntry::Ok { .. })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridMetadata {
    pub p_loss: Vec<f64>,
    pub p_comp: Vec<f64>,
    #[serde(rename = "L")]
    pub sizes: Vec<usize>,
    pub rows: usize,
    pub trials_total: u64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum ContourEntry {
    Ok(ContourFit),
    Error { error: FitError },
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub schema: &'static str,
    pub grid: GridMetadata,
    pub fits: Vec<FitEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contour: Option<ContourEntry>,
}

impl FitReport {
    pub fn all_failed(&self) -> bool {
        !self.fits.iter().any(FitEntry::is_ok)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Scaling fit per selected loss rate (all rates when `selector` is `None`), plus a contour
/// fit when more than one loss rate is present.
pub fn cmd_fit(records: &[RunRecord], selector: Option<&[f64]>, contour_range: (f64, f64)) -> Result<FitReport> {
    if records.is_empty() {
        return Err(Error::Data("no rows to fit".into()));
    }
    let all_losses = sorted_unique(records.iter().map(|r| r.p_loss).collect());
    let losses: Vec<f64> = match selector {
        Some(sel) => {
            let picked: Vec<f64> = all_losses
                .iter()
                .copied()
                .filter(|q| sel.iter().any(|s| (s - q).abs() <= 1e-12))
                .collect();
            if picked.is_empty() {
                return Err(Error::Data("no rows match the selected loss rates".into()));
            }
            picked
        }
        None => all_losses,
    };
    let mut sizes: Vec<usize> = records.iter().map(|r| r.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let grid = GridMetadata {
        p_loss: losses.clone(),
        p_comp: sorted_unique(records.iter().map(|r| r.p_comp).collect()),
        sizes,
        rows: records.len(),
        trials_total: records.iter().map(|r| r.trials).sum(),
    };
    let mut fits = Vec::new();
    let mut contour_points = Vec::new();
    for &q in &losses {
        let points = records
            .iter()
            .filter(|r| r.p_loss == q)
            .map(|r| DataPoint {
                p_comp: r.p_comp,
                size: r.size,
                p_fail: r.p_fail,
                stderr: r.stderr,
                trials: r.trials,
            })
            .collect();
        let result = fit_scaling(&ScalingDataset::new(q, points));
        if let Ok(f) = &result {
            contour_points.push(ContourPoint {
                p_loss: q,
                p_t: f.p_t,
                stderr: f.sigma_p_t(),
            });
        }
        fits.push(FitEntry::from_result(q, result));
    }
    let contour = (losses.len() > 1).then(|| match fit_contour(&contour_points, contour_range) {
        Ok(c) => ContourEntry::Ok(c),
        Err(error) => ContourEntry::Error { error },
    });
    Ok(FitReport {
        schema: FIT_SCHEMA,
        grid,
        fits,
        contour,
    })
}

/// Oracle suites; the flag is true when every comparison agrees.
pub fn cmd_selftest(seed: u64, cases: u64) -> (Vec<OracleReport>, bool) {
    let reports = run_selftest(seed, cases);
    let ok = reports.iter().all(|r| r.agree);
    (reports, ok)
}

#[derive(Debug, Parser)]
#[command(name = "topoloss", version, about = "Threshold estimation for lossy topological cluster states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a sweep and write the run CSV.
    Run(RunArgs),
    /// Fit scaling curves to a run CSV and print a JSON report.
    Fit(FitArgs),
    /// Estimate loss-percolation wrapping probabilities.
    Percolation(PercolationArgs),
    /// Compare the decoder against brute-force oracles.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Sweep config file (`key = value` lines).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override any config key, e.g. `--set trials=100`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, value_name = "LIST")]
    pub p_loss: Option<String>,
    #[arg(long, value_name = "LIST")]
    pub p_comp: Option<String>,
    #[arg(long = "sizes", short = 'L', value_name = "LIST")]
    pub sizes: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub loss_timing: Option<String>,
    #[arg(long)]
    pub degeneracy: Option<String>,
    #[arg(long)]
    pub weight_mode: Option<String>,
    #[arg(long, value_name = "LIST")]
    pub gate_schedule: Option<String>,
    /// Output CSV path; stdout if absent.
    #[arg(long, short)]
    pub output: Option<String>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Run CSV to fit.
    pub csv: PathBuf,
    /// Comma-separated loss rates to fit; all by default.
    #[arg(long, value_name = "LIST")]
    pub p_loss: Option<String>,
    /// Loss range `lo,hi` for the contour fit.
    #[arg(long, value_name = "LO,HI")]
    pub contour_range: Option<String>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PercolationArgs {
    #[arg(long = "sizes", short = 'L', value_name = "LIST")]
    pub sizes: String,
    #[arg(long, value_name = "LIST")]
    pub p_loss: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random instances per suite.
    #[arg(long, default_value_t = 100)]
    pub cases: u64,
}

fn list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse().map_err(|_| Error::InvalidValue {
                key: key.into(),
                message: format!("cannot parse `{t}`"),
            })
        })
        .collect()
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidValue { .. } | Error::InvalidSize(_) | Error::InvalidProbability { .. } | Error::NoTrials | Error::WrongMode { .. } => 1,
        _ => 2,
    }
}

fn sweep_config(args: &RunArgs) -> Result<SweepConfig> {
    let mut cfg = match &args.config {
        Some(p) => SweepConfig::load(p)?,
        None => SweepConfig::default(),
    };
    let flags = [
        ("p_loss", &args.p_loss),
        ("p_comp", &args.p_comp),
        ("L", &args.sizes),
        ("trials", &args.trials),
        ("seed", &args.seed),
        ("mode", &args.mode),
        ("loss_timing", &args.loss_timing),
        ("degeneracy", &args.degeneracy),
        ("weight_mode", &args.weight_mode),
        ("gate_schedule", &args.gate_schedule),
        ("output", &args.output),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    for kv in &args.overrides {
        cfg.apply_override(kv)?;
    }
    Ok(cfg)
}

fn run_command(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run(args) => {
            let cfg = sweep_config(&args)?;
            let rows = cmd_run(&cfg, workers_from_env())?;
            write_run_csv(open_output(cfg.output.as_deref())?, &rows)?;
            Ok(0)
        }
        Command::Fit(args) => {
            let selector = args.p_loss.as_deref().map(|s| list("p_loss", s)).transpose()?;
            let range = match args.contour_range.as_deref() {
                Some(s) => {
                    let v: Vec<f64> = list("contour_range", s)?;
                    match v[..] {
                        [lo, hi] if lo <= hi => (lo, hi),
                        _ => {
                            return Err(Error::InvalidValue {
                                key: "contour_range".into(),
                                message: "expected lo,hi".into(),
                            })
                        }
                    }
                }
                None => DEFAULT_CONTOUR_RANGE,
            };
            let file = std::fs::File::open(&args.csv)?;
            let rows = read_run_csv(file)?;
            let report = cmd_fit(&rows, selector.as_deref(), range)?;
            let mut out = open_output(args.output.as_deref())?;
            writeln!(out, "{}", report.to_json())?;
            out.flush()?;
            Ok(if report.all_failed() { 2 } else { 0 })
        }
        Command::Percolation(args) => {
            let sizes: Vec<usize> = list("L", &args.sizes)?;
            let ps: Vec<f64> = list("p_loss", &args.p_loss)?;
            let rows = cmd_percolation(&sizes, &ps, args.trials, args.seed, workers_from_env())?;
            write_percolation_csv(open_output(args.output.as_deref())?, &rows)?;
            Ok(0)
        }
        Command::Selftest(args) => {
            let (reports, ok) = cmd_selftest(args.seed, args.cases);
            let mut out = std::io::stdout().lock();
            for r in &reports {
                writeln!(out, "{r}")?;
            }
            let failed = reports.iter().filter(|r| !r.agree).count();
            writeln!(out, "{} comparisons, {failed} disagreements", reports.len())?;
            Ok(if ok { 0 } else { 2 })
        }
    }
}

/// Parse `args` (including the program name) and run; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
