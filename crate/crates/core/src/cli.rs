//! Command-line front end. Every command renders one document (JSON, or CSV
//! for `scan`) that is a pure function of its flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analysis::{
    epsilon_grid, find_threshold, nonsymmetric_search, qber, scan_curves, Curve, SearchConfig,
    MAX_BISECTION_STEPS,
};
use crate::error::Error;
use crate::infotheory::{mi_eve_analytic, min_abs_c22};
use crate::povm::{
    accessible_info, analytic_povm, canonical_povm, conjugate_povm, convex_combine, optimize_povm,
    OptimizerConfig, COMPLETENESS_TOL,
};
use crate::states::{
    bell_diagonal_state, conditioned_ancilla, joint_table, simulate_raw_data, FamilyPoint, Outcome,
};

pub const SCHEMA_VERSION: &str = "1";

pub const SCAN_HEADER: [&str; 7] = [
    "epsilon",
    "I_AB",
    "I_honest",
    "I_maxent",
    "I_minconc",
    "I_hsw",
    "qber",
];

#[derive(Debug, Parser)]
#[command(
    name = "qkd-rawdata",
    version,
    about = "Eavesdropping analysis of BB84 raw data under partial tomography"
)]
pub struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Noise levels where Eve's information reaches Bob's.
    Thresholds(ThresholdsArgs),
    /// Information curves on an epsilon grid (CSV by default).
    Scan(ScanArgs),
    /// Alice-Bob joint probability table, optionally with simulated data.
    Table(TableArgs),
    /// Checks on the analytic measurement at a family point.
    PovmCheck(PovmCheckArgs),
    /// Randomized search over nonsymmetric states.
    SearchNonsym(SearchArgs),
}

#[derive(Debug, Args)]
pub struct ThresholdsArgs {
    /// All four curves (the default when no curve is given).
    #[arg(long, conflicts_with = "curve")]
    pub all: bool,
    /// One of honest, maxent, minconc, hsw.
    #[arg(long)]
    pub curve: Option<Curve>,
    /// Stop bisecting once |I_AB - I_AE| is below this.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub start: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub stop: f64,
    #[arg(long, default_value_t = 0.01, allow_negative_numbers = true)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Defaults to the smallest feasible |c22|.
    #[arg(long, allow_negative_numbers = true)]
    pub c22: Option<f64>,
    /// Also draw this many samples and report per-cell z-scores.
    #[arg(long, value_name = "N")]
    pub simulate: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct PovmCheckArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Defaults to the smallest feasible |c22|.
    #[arg(long, allow_negative_numbers = true)]
    pub c22: Option<f64>,
    /// Also run the numerical optimizer and compare.
    #[arg(long)]
    pub optimize: bool,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optimizer restarts per sampled state.
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
}

/// The JSON document every command emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub schema_version: String,
    pub command: String,
    pub parameters: BTreeMap<String, Value>,
    pub rows: Vec<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
    pub provenance: BTreeMap<String, Value>,
}

impl OutputRecord {
    fn new(command: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            command: command.into(),
            parameters: BTreeMap::new(),
            rows: Vec::new(),
            summary: None,
            provenance: BTreeMap::new(),
        }
    }

    fn param(mut self, key: &str, value: Value) -> Self {
        self.parameters.insert(key.into(), value);
        self
    }

    fn prov(mut self, key: &str, value: Value) -> Self {
        self.provenance.insert(key.into(), value);
        self
    }

    /// Pretty JSON with floats rounded to 12 significant digits and a
    /// trailing newline.
    pub fn to_json(&self) -> String {
        let value = round_value(serde_json::to_value(self).expect("record serializes"));
        let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
        s.push('\n');
        s
    }
}

/// `x` rounded to 12 significant digits; `-0` becomes `0`.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    if x == 0.0 {
        return 0.0;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n.as_f64().map(round12).map_or(Value::Null, |x| json!(x)),
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect())
        }
        other => other,
    }
}

#[derive(Debug)]
pub enum CliError {
    /// A flag value outside its domain.
    Usage(String),
    /// A well-formed request the mathematics rejects.
    Domain(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(e) => write!(f, "error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::OutOfRange { .. } => CliError::Usage(e.to_string()),
            other => CliError::Domain(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Runs a parsed command line and writes its output.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let text = render(&cli.command)?;
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// The output document of a command, as text.
pub fn render(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Thresholds(a) => Ok(thresholds(a)?.to_json()),
        Command::Scan(a) => scan(a),
        Command::Table(a) => Ok(table(a)?.to_json()),
        Command::PovmCheck(a) => Ok(povm_check(a)?.to_json()),
        Command::SearchNonsym(a) => Ok(search(a)?.to_json()),
    }
}

pub fn thresholds(args: &ThresholdsArgs) -> Result<OutputRecord, CliError> {
    let curves: Vec<Curve> = match args.curve {
        Some(c) if !args.all => vec![c],
        _ => Curve::ALL.to_vec(),
    };
    let mut rec = OutputRecord::new("thresholds")
        .param("curves", json!(curves))
        .param("tol", json!(args.tol))
        .prov("bracket", json!([0.0, 0.5]))
        .prov("max_bisection_steps", json!(MAX_BISECTION_STEPS))
        .prov("tol", json!(args.tol));
    for c in curves {
        let r = find_threshold(c, args.tol)?;
        rec.rows.push(json!({
            "curve": r.curve,
            "epsilon_star": r.epsilon_star,
            "qber": r.qber,
            "residual": r.residual,
            "iterations": r.iterations,
        }));
    }
    Ok(rec)
}

pub fn scan(args: &ScanArgs) -> Result<String, CliError> {
    let grid = epsilon_grid(args.start, args.stop, args.step)?;
    let rows = scan_curves(&grid)?;
    match args.format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new()
                .terminator(csv::Terminator::Any(b'\n'))
                .from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Io(e.into());
            w.write_record(SCAN_HEADER).map_err(io)?;
            for r in &rows {
                let cells = [
                    r.epsilon, r.i_ab, r.honest, r.maxent, r.minconc, r.hsw, r.qber,
                ];
                w.write_record(cells.map(|x| round12(x).to_string()))
                    .map_err(io)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is ascii"))
        }
        Format::Json => {
            let mut rec = OutputRecord::new("scan")
                .param("start", json!(args.start))
                .param("stop", json!(args.stop))
                .param("step", json!(args.step))
                .prov("points", json!(grid.len()));
            rec.rows = rows
                .iter()
                .map(|r| {
                    let cells = [
                        r.epsilon, r.i_ab, r.honest, r.maxent, r.minconc, r.hsw, r.qber,
                    ];
                    Value::Object(
                        SCAN_HEADER
                            .iter()
                            .zip(cells)
                            .map(|(k, x)| (k.to_string(), json!(x)))
                            .collect(),
                    )
                })
                .collect();
            Ok(rec.to_json())
        }
    }
}

fn family_point(epsilon: f64, c22: Option<f64>) -> Result<FamilyPoint, CliError> {
    let c22 = match c22 {
        Some(c) => c,
        None => min_abs_c22(epsilon)?,
    };
    Ok(FamilyPoint::feasible(epsilon, c22)?)
}

pub fn table(args: &TableArgs) -> Result<OutputRecord, CliError> {
    let point = family_point(args.epsilon, args.c22)?;
    let analytic = joint_table(&bell_diagonal_state(&point)?)?;
    let simulated = match args.simulate {
        Some(n) => Some((n, simulate_raw_data(&point, n, args.seed)?)),
        None => None,
    };
    let mut rec = OutputRecord::new("table")
        .param("epsilon", json!(point.epsilon))
        .param("c22", json!(point.c22))
        .param("simulate", json!(args.simulate))
        .param("seed", json!(args.seed))
        .prov("seed", json!(args.seed))
        .prov("rng", json!("chacha8"));
    let z = simulated.as_ref().map(|(n, t)| analytic.z_scores(t, *n));
    for b in Outcome::ALL {
        for a in Outcome::ALL {
            let (i, j) = (b.index(), a.index());
            let mut row = json!({
                "bob": b.label(),
                "alice": a.label(),
                "analytic": analytic.p[i][j],
            });
            if let (Some((_, t)), Some(z)) = (&simulated, &z) {
                row["empirical"] = json!(t.p[i][j]);
                row["z"] = json!(z[i][j]);
            }
            rec.rows.push(row);
        }
    }
    if let Some(z) = z {
        let max_z = z.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        rec.summary = Some(json!({ "max_abs_z": max_z }));
    }
    Ok(rec)
}

fn check_row(name: &str, value: f64, tolerance: f64) -> Value {
    json!({ "check": name, "value": value, "tolerance": tolerance, "pass": value <= tolerance })
}

pub fn povm_check(args: &PovmCheckArgs) -> Result<OutputRecord, CliError> {
    let point = family_point(args.epsilon, args.c22)?;
    let ensemble = conditioned_ancilla(&point)?;
    let m = analytic_povm(&point)?;
    let analytic = mi_eve_analytic(point.c22)?;
    let evaluated = accessible_info(&ensemble, &m)?;
    let support = point.support();
    let reduced = m.restrict(&support);

    let conjugate = accessible_info(&ensemble, &conjugate_povm(&m))?;
    let mut convex_gap: f64 = 0.0;
    for w in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let mix = convex_combine(&m, &conjugate_povm(&m), w)?;
        convex_gap = convex_gap.max((accessible_info(&ensemble, &mix)? - evaluated).abs());
    }
    let canonical = canonical_povm(&point)?;

    let mut rec = OutputRecord::new("povm-check")
        .param("epsilon", json!(point.epsilon))
        .param("c22", json!(point.c22))
        .param("optimize", json!(args.optimize))
        .prov("completeness_tol", json!(COMPLETENESS_TOL));
    rec.rows = vec![
        check_row(
            "completeness_residual",
            m.completeness_residual(),
            COMPLETENESS_TOL,
        ),
        check_row(
            "support_completeness_residual",
            reduced.completeness_residual(),
            COMPLETENESS_TOL,
        ),
        check_row("negative_eigenvalue", (-m.min_eigenvalue()).max(0.0), 1e-10),
        check_row("analytic_vs_evaluated", (analytic - evaluated).abs(), 1e-9),
        check_row("conjugate_residual", (conjugate - evaluated).abs(), 1e-10),
        check_row("convex_residual", convex_gap, 1e-10),
        check_row("canonical_max_imag", canonical.max_imag(), 1e-12),
    ];
    let mut summary = json!({
        "analytic": analytic,
        "evaluated": evaluated,
        "support": support,
    });
    if args.optimize {
        let cfg = OptimizerConfig {
            restarts: args.restarts,
            seed: args.seed,
            ..OptimizerConfig::default()
        };
        let best = optimize_povm(&ensemble, &cfg)?;
        rec.rows.push(check_row(
            "optimizer_vs_analytic",
            (best.value - analytic).abs(),
            1e-5,
        ));
        summary["optimized"] = json!(best.value);
        summary["best_restart"] = json!(best.best_restart);
        summary["restarts"] = json!(best.restarts);
        rec = rec
            .param("restarts", json!(args.restarts))
            .param("seed", json!(args.seed))
            .prov("optimizer", json!(cfg));
    }
    rec.summary = Some(summary);
    Ok(rec)
}

pub fn search(args: &SearchArgs) -> Result<OutputRecord, CliError> {
    if !(args.epsilon > 0.0 && args.epsilon <= 1.0) {
        return Err(CliError::Usage(format!(
            "--epsilon {} must lie in (0, 1]",
            args.epsilon
        )));
    }
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let mut cfg = SearchConfig::default();
    cfg.optimizer.restarts = args.restarts;
    let report = nonsymmetric_search(args.epsilon, args.trials, args.seed, &cfg)?;
    let mut rec = OutputRecord::new("search-nonsym")
        .param("epsilon", json!(args.epsilon))
        .param("trials", json!(args.trials))
        .param("seed", json!(args.seed))
        .param("restarts", json!(args.restarts))
        .prov("seed", json!(args.seed))
        .prov("search", json!(cfg));
    rec.rows = report.samples.iter().map(|s| json!(s)).collect();
    rec.summary = Some(json!({
        "qber": qber(report.epsilon),
        "accepted": report.accepted,
        "best_value": report.best_value,
        "best_trial": report.best_trial,
        "best_parameters": report.best_parameters,
        "symmetric_optimum": report.symmetric_optimum,
        "excess": report.excess,
        "near_optimal": report.near_optimal,
    }));
    Ok(rec)
}
