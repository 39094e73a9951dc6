//! Command-line interface.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numerical
//! failure, 4 failed invariant check.

use std::ffi::OsString;
use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use cslab_core::fit::{arratia_steele, closed_form, solve, FitSolution, KNOWN_UPPER_BOUND};
use cslab_core::lcs::lcs;
use cslab_core::mc::{exact_small_n, GammaEstimate};
use cslab_core::model_b::{run_ring, FluxReport, HalfstepRecord, ModelBParams, Observable, RingConfig};
use cslab_core::network::{independence_test, trace_lines};
use cslab_core::scaling::{ProfileModel, DEFAULT_BINS};
use cslab_core::verify::{all_passed, exact_suite};
use cslab_core::{BinaryString, Engine, Error};

use crate::output::{cell, num, nums, write_report, Format, Report, Table};
use crate::parallel;

pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "cslab", version, about = "Chvátal–Sankoff constant experiments")]
pub struct Cli {
    /// Master seed.
    #[arg(long, global = true, env = "CSLAB_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for ensembles (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Dp,
    Bitparallel,
    Bruteforce,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Dp => Engine::Dp,
            EngineArg::Bitparallel => Engine::BitParallel,
            EngineArg::Bruteforce => Engine::BruteForce,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitMode {
    Solve,
    ClosedForm,
    ArratiaSteele,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Cs,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Exact,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Length of a longest common subsequence.
    Lcs(LcsArgs),
    /// Solve or evaluate the local fitting system.
    Fit(FitArgs),
    /// Monte Carlo estimate of E L_n / n.
    Gamma(GammaArgs),
    /// Stationary model B on a ring.
    SimulateB(SimulateBArgs),
    /// Ensemble density profile from step initial condition.
    Profile(ProfileArgs),
    /// Run an invariant suite.
    Verify(VerifyArgs),
    /// Site states after every half-step for a string pair.
    Trace(TraceArgs),
    /// Exact E L_n / n by enumeration (n <= 12).
    Exact(ExactArgs),
    /// Estimates over several lengths with the Alexander envelope.
    Convergence(ConvergenceArgs),
    /// Chi-square tests of cell-type independence.
    Independence(IndependenceArgs),
}

#[derive(Debug, Args)]
pub struct LcsArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    #[arg(long, value_enum, default_value_t = EngineArg::Bitparallel)]
    pub engine: EngineArg,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum, default_value_t = FitMode::Solve)]
    pub mode: FitMode,
    /// Newton start `u,p0,p1,p2`.
    #[arg(long, value_delimiter = ',')]
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, value_enum, default_value_t = EngineArg::Bitparallel)]
    pub engine: EngineArg,
    /// Alexander envelope constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}

#[derive(Debug, Args)]
pub struct SimulateBArgs {
    #[arg(long)]
    pub p2: f64,
    /// Ring length (even).
    #[arg(long = "len", default_value_t = 10_000)]
    pub len: usize,
    #[arg(long, default_value_t = 1_000)]
    pub burn_in: u64,
    /// Measured half-steps.
    #[arg(long, default_value_t = 10_000)]
    pub steps: u64,
    /// Pseudo-rate p0 = p3 (defaults to p2).
    #[arg(long)]
    pub p0: Option<f64>,
    /// Pseudo-rate p1 (defaults to p2).
    #[arg(long)]
    pub p1: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub batches: u32,
    /// Draw and count every cell type.
    #[arg(long)]
    pub tally: bool,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Exchange rate for model B.
    #[arg(long, default_value_t = 0.5)]
    pub p2: f64,
    #[arg(long, default_value_t = 1_000)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub members: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::Exact)]
    pub suite: Suite,
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long)]
    pub a: String,
    #[arg(long)]
    pub b: String,
    /// Steps; defaults to the shorter length.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub ns: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, value_enum, default_value_t = EngineArg::Bitparallel)]
    pub engine: EngineArg,
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}

#[derive(Debug, Args)]
pub struct IndependenceArgs {
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 8)]
    pub n: usize,
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numeric(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SamplingExhausted { .. } | Error::SingularJacobian | Error::NoConvergence { .. } => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

fn parse_string(what: &str, s: &str) -> Result<BinaryString, CliError> {
    s.parse().map_err(|e: Error| CliError::Input(format!("--{what}: {e}")))
}

fn observable(o: &Observable) -> Value {
    json!({
        "name": o.name,
        "measured": num(o.measured),
        "stderr": num(o.stderr),
        "predicted": num(o.predicted),
        "relative_deviation": num(o.relative_deviation()),
        "z": num(o.z()),
    })
}

fn estimate_json(e: &GammaEstimate) -> Value {
    json!({
        "n": e.n,
        "trials": e.trials,
        "mean": num(e.mean),
        "stderr": num(e.stderr),
        "alexander_gap": num(e.alexander_gap),
        "c": num(e.c),
        "envelope_upper": num(e.envelope_upper()),
    })
}

fn fit_report(report: &mut Report, s: &FitSolution) {
    report
        .set("method", s.method.name())
        .set("u", num(s.u))
        .set("gamma", num(s.gamma))
        .set("p0", num(s.p0))
        .set("p1", num(s.p1))
        .set("p2", num(s.p2))
        .set("p3", num(s.p3()))
        .set("q0", num(s.aux.q0))
        .set("q1", num(s.aux.q1))
        .set("r0", num(s.aux.r0))
        .set("r1", num(s.aux.r1))
        .set("r2", num(s.aux.r2))
        .set("r3", num(s.aux.r3))
        .set("residuals", nums(&s.residuals))
        .set("iterations", s.iterations)
        .set("admissible", s.is_admissible())
        .set("known_upper_bound", num(KNOWN_UPPER_BOUND))
        .set("exceeds_known_upper_bound", s.exceeds_known_upper_bound());
    let names = ["method", "u", "gamma", "p0", "p1", "p2", "q0", "q1", "r0", "r1", "E1", "E2", "E3", "E4", "E5"];
    report.table = Table::new(&names);
    let mut row = vec![s.method.name().to_string()];
    row.extend([s.u, s.gamma, s.p0, s.p1, s.p2, s.aux.q0, s.aux.q1, s.aux.r0, s.aux.r1].map(cell));
    row.extend(s.residuals.map(cell));
    report.table.push(row);
    report.line(format!("method    {}", s.method.name()));
    for (k, v) in [("u", s.u), ("gamma", s.gamma), ("p0 = p3", s.p0), ("p1", s.p1), ("p2", s.p2)] {
        report.line(format!("{k:<9} {v:.17}"));
    }
    report.line(format!("max |E|   {:.3e}", s.max_residual()));
    if s.exceeds_known_upper_bound() {
        report.line(format!("gamma exceeds the known upper bound {KNOWN_UPPER_BOUND}"));
    }
}

/// Runs a parsed command; returns the report and its exit code.
pub fn execute(cli: &Cli) -> Result<(Report, i32), CliError> {
    let seed = cli.seed;
    let pool = parallel::pool(cli.threads);
    let mut code = 0;
    let report = match &cli.command {
        Command::Lcs(args) => {
            let a = parse_string("a", &args.a)?;
            let b = parse_string("b", &args.b)?;
            let engine = Engine::from(args.engine);
            let length = lcs(&a, &b, engine)?.length;
            let mut r = Report::new("lcs");
            r.config("a", args.a.as_str()).config("b", args.b.as_str()).config("engine", engine.name());
            r.set("lcs", length);
            r.table = Table::new(&["a", "b", "engine", "lcs"]);
            r.table.push(vec![a.to_string(), b.to_string(), engine.name().into(), length.to_string()]);
            r.line(length.to_string());
            r
        }
        Command::Fit(args) => {
            let mut r = Report::new("fit");
            let mode = args.mode.to_possible_value().expect("named").get_name().to_string();
            r.config("mode", mode);
            let start = match args.start.as_deref() {
                Some(&[u, p0, p1, p2]) => Some([u, p0, p1, p2]),
                Some(other) => return Err(CliError::Input(format!("--start needs 4 values, got {}", other.len()))),
                None => None,
            };
            r.config("start", start.map_or(Value::Null, |s| nums(&s)));
            match args.mode {
                FitMode::ClosedForm => fit_report(&mut r, &closed_form()),
                FitMode::ArratiaSteele => fit_report(&mut r, &arratia_steele()),
                FitMode::Solve => {
                    let s = solve(start)?;
                    fit_report(&mut r, &s);
                    let multi = parallel::solve_multistart(&pool)?;
                    r.set(
                        "multistart",
                        json!({
                            "starts": 16,
                            "converged": multi.solutions.len(),
                            "failures": multi.failures,
                            "spread": num(multi.spread),
                        }),
                    );
                    r.line(format!("multistart {}/16 converged, spread {:.3e}", multi.solutions.len(), multi.spread));
                }
            }
            r
        }
        Command::Gamma(args) => {
            let engine = Engine::from(args.engine);
            let e = parallel::estimate_gamma(&pool, args.n, args.trials, seed, engine, args.c)?;
            let mut r = Report::new("gamma");
            r.config("n", args.n).config("trials", args.trials).config("seed", seed).config("engine", engine.name());
            r.config("c", num(args.c));
            if let Value::Object(m) = estimate_json(&e) {
                r.result.extend(m);
            }
            r.table = Table::new(&["n", "trials", "mean", "stderr", "alexander_gap", "c"]);
            r.table.push(vec![
                e.n.to_string(),
                e.trials.to_string(),
                cell(e.mean),
                cell(e.stderr),
                cell(e.alexander_gap),
                cell(e.c),
            ]);
            r.line(format!("n = {}, trials = {}: E L_n / n = {:.6} ± {:.6}", e.n, e.trials, e.mean, e.stderr));
            r
        }
        Command::SimulateB(args) => {
            let params = ModelBParams::new(args.p2, args.p0.unwrap_or(args.p2), args.p1.unwrap_or(args.p2))?;
            let config = RingConfig {
                params,
                len: args.len,
                burn_in: args.burn_in,
                measure: args.steps,
                seed,
                batches: args.batches,
                tally_types: args.tally,
            };
            let mut series: Vec<HalfstepRecord> = Vec::new();
            let keep = cli.format == Format::Csv;
            let ring = run_ring(&config, |rec| {
                if keep {
                    series.push(*rec);
                }
            })?;
            let flux = FluxReport::from_ring(&ring);
            let mut r = Report::new("simulate-b");
            r.config("p2", num(params.p2)).config("p0", num(params.p0)).config("p1", num(params.p1));
            r.config("len", args.len).config("burn_in", args.burn_in).config("steps", args.steps);
            r.config("batches", args.batches).config("tally", args.tally).config("seed", seed);
            r.set("u_predicted", num(ring.marginals.u))
                .set("even_density", num(ring.even_density.measured))
                .set("even_density_stderr", num(ring.even_density.stderr))
                .set("observables", Value::Array(ring.observables().iter().map(observable).collect()))
                .set("max_abs_z", num(ring.max_abs_z()))
                .set(
                    "flux",
                    json!({
                        "swaps_per_pair": num(flux.swaps_per_pair),
                        "swaps_stderr": num(flux.swaps_stderr),
                        "f": num(flux.f),
                        "fbar": num(flux.fbar),
                        "fbar_predicted": num(2.0 * ring.marginals.u),
                        "gamma_proxy": num(flux.gamma_proxy),
                        "gamma_proxy_stderr": num(flux.gamma_proxy_stderr),
                    }),
                )
                .set("total_swaps", ring.total_swaps);
            if let Some(t) = ring.tally {
                let counts: Vec<Value> = t.counts.iter().map(|c| json!({"match": c[0], "mismatch": c[1]})).collect();
                r.set("type_tally", Value::Array(counts));
            }
            r.table = Table::new(&["halfstep", "even_density", "odd_density", "swap_rate"]);
            for rec in &series {
                r.table.push(vec![rec.halfstep.to_string(), cell(rec.even_density), cell(rec.odd_density), cell(rec.swap_rate)]);
            }
            r.line(format!("u = {:.6} predicted", ring.marginals.u));
            for o in ring.observables() {
                r.line(format!("{:<14} {:.6} ± {:.6} (predicted {:.6}, z = {:+.2})", o.name, o.measured, o.stderr, o.predicted, o.z()));
            }
            r.line(format!("fbar = {:.6}, gamma proxy 2u = {:.6}", flux.fbar, flux.gamma_proxy));
            r
        }
        Command::Profile(args) => {
            let model = match args.model {
                ModelArg::Cs => ProfileModel::Cs,
                ModelArg::B => ProfileModel::B { p2: args.p2 },
            };
            let p = parallel::empirical_profile(&pool, model, args.n, args.members, args.bins, seed)?;
            let mut r = Report::new("profile");
            r.config("model", if args.model == ModelArg::Cs { "cs" } else { "b" });
            if let ProfileModel::B { p2 } = model {
                r.config("p2", num(p2));
            }
            r.config("n", args.n).config("members", args.members).config("bins", args.bins).config("seed", seed);
            r.set("t", num(p.t))
                .set("transported_mass", num(p.transported_mass))
                .set("transported_mass_stderr", num(p.transported_mass_stderr))
                .set("peak_density", num(p.peak_density))
                .set("peak_density_stderr", num(p.peak_density_stderr))
                .set(
                    "skew",
                    json!({
                        "mean": num(p.skew.mean),
                        "stderr": num(p.skew.stderr),
                        "max_pair_z": num(p.skew.max_pair_z),
                        "at_half": nums(&[p.skew.at_half.0, p.skew.at_half.1]),
                    }),
                );
            r.table = Table::new(&["x", "y_mean", "y_stderr"]);
            for bin in &p.bins {
                r.table.push(vec![cell(bin.x), cell(bin.y_mean), cell(bin.y_stderr)]);
            }
            r.line(format!("transported mass {:.6} ± {:.6}", p.transported_mass, p.transported_mass_stderr));
            r.line(format!("density at x = 0 {:.6} ± {:.6}", p.peak_density, p.peak_density_stderr));
            r.line(format!("skew {:.3e} ± {:.3e}", p.skew.mean, p.skew.stderr));
            r
        }
        Command::Verify(args) => {
            let Suite::Exact = args.suite;
            let checks = exact_suite(seed);
            let passed = all_passed(&checks);
            if !passed {
                code = EXIT_INVARIANT;
            }
            let mut r = Report::new("verify");
            r.config("suite", "exact").config("seed", seed);
            r.set("passed", passed).set(
                "checks",
                Value::Array(checks.iter().map(|c| json!({"name": c.name, "passed": c.passed, "detail": c.detail})).collect()),
            );
            r.table = Table::new(&["name", "passed", "detail"]);
            for c in &checks {
                r.table.push(vec![c.name.into(), c.passed.to_string(), c.detail.clone()]);
                r.line(format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
            }
            r
        }
        Command::Trace(args) => {
            let a = parse_string("a", &args.a)?;
            let b = parse_string("b", &args.b)?;
            let n = args.n.unwrap_or(a.len().min(b.len()));
            let lines = trace_lines(&a, &b, n)?;
            let mut r = Report::new("trace");
            r.config("a", args.a.as_str()).config("b", args.b.as_str()).config("n", n);
            r.set("lowest_wire", -(a.len().min(2 * n) as i64));
            r.set("lines", lines.clone());
            r.table = Table::new(&["halfstep", "state"]);
            for (h, line) in lines.iter().enumerate() {
                r.table.push(vec![h.to_string(), line.clone()]);
                r.line(line.clone());
            }
            r
        }
        Command::Exact(args) => {
            let e = exact_small_n(args.n)?;
            let mut r = Report::new("exact");
            r.config("n", args.n);
            r.set("n", e.n).set("total", e.total).set("value", num(e.value));
            r.table = Table::new(&["n", "total", "value"]);
            r.table.push(vec![e.n.to_string(), e.total.to_string(), cell(e.value)]);
            r.line(format!("E L_{} / {} = {:.17}", e.n, e.n, e.value));
            r
        }
        Command::Convergence(args) => {
            let engine = Engine::from(args.engine);
            let t = parallel::convergence_table(&pool, &args.ns, args.trials, seed, engine, args.c)?;
            let mut r = Report::new("convergence");
            r.config("ns", args.ns.clone()).config("trials", args.trials).config("seed", seed);
            r.config("engine", engine.name()).config("c", num(args.c));
            r.set("rows", Value::Array(t.rows.iter().map(|row| estimate_json(&row.estimate)).collect()));
            r.set(
                "monotonicity_violations",
                Value::Array(t.monotonicity_violations.iter().map(|&(a, b)| json!([a, b])).collect()),
            );
            r.table = Table::new(&["n", "mean", "stderr", "envelope_upper"]);
            for row in &t.rows {
                let e = row.estimate;
                r.table.push(vec![e.n.to_string(), cell(e.mean), cell(e.stderr), cell(row.envelope_upper)]);
                r.line(format!("{:>8} {:.6} ± {:.6}  envelope {:.6}", e.n, e.mean, e.stderr, row.envelope_upper));
            }
            r
        }
        Command::Independence(args) => {
            let rep = independence_test(args.trials, args.n, seed)?;
            let stat = |s: &cslab_core::network::JointTypeStat| {
                json!({
                    "cells": s.cells.iter().map(|&(i, j)| json!([i, j])).collect::<Vec<_>>(),
                    "counts": s.counts,
                    "chi_square": num(s.chi_square),
                    "dof": s.dof,
                    "p_value": num(s.p_value),
                })
            };
            let mut r = Report::new("independence");
            r.config("trials", args.trials).config("n", args.n).config("seed", seed);
            r.set("triples", Value::Array(rep.triples.iter().map(stat).collect()))
                .set("block", stat(&rep.block))
                .set("block_determined_fraction", num(rep.block_determined_fraction))
                .set("parity_blocks_checked", rep.parity_blocks_checked)
                .set("parity_violations", rep.parity_violations);
            r.table = Table::new(&["cells", "chi_square", "dof", "p_value"]);
            for s in rep.triples.iter().chain(std::iter::once(&rep.block)) {
                let cells: Vec<String> = s.cells.iter().map(|(i, j)| format!("({i},{j})")).collect();
                r.table.push(vec![cells.join(" "), cell(s.chi_square), s.dof.to_string(), cell(s.p_value)]);
                r.line(format!("{:<24} chi2 = {:8.3} (dof {}), p = {:.4}", cells.join(" "), s.chi_square, s.dof, s.p_value));
            }
            r.line(format!("2x2 parity violations: {} of {}", rep.parity_violations, rep.parity_blocks_checked));
            r
        }
    };
    let mut report = report;
    report.config("format", cli.format.name());
    report.config("threads", cli.threads.map_or(Value::Null, Value::from));
    Ok((report, code))
}

/// Parses `args` (program name first), runs, and writes the report to
/// `out` (or the `--output` file) and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = execute(&cli).and_then(|(report, code)| {
        match &cli.output {
            Some(path) => {
                let mut file = io::BufWriter::new(File::create(path)?);
                write_report(&report, cli.format, &mut file)?;
                file.flush()?;
            }
            None => write_report(&report, cli.format, out)?,
        }
        Ok(code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "cslab: {e}");
            e.exit_code()
        }
    }
}
