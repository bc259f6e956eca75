//! Command-line front end.
//!
//! Exit codes: 0 success, 1 infeasible (or a failed validation check),
//! 2 usage error, 3 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::channel::FadingMode;
use crate::driver::{
    channels_for_seed, convergence_study, heatmap_for_report, run_scheme, sweep, AoOptions,
    DriverError, RunReport, Scheme, StopReason, SweepAxis,
};
use crate::output::{self, OutputError};
use crate::scenario::{load_scenario_value, Preset, ScenarioConfig, ScenarioError};
use crate::validation::{run_suite, SuiteOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const OUT_DIR_ENV: &str = "RIS_ISAC_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("cannot create output directory {path}: {source}")]
    OutDir {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Scenario(_) | CliError::OutDir { .. } => EXIT_USAGE,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Numerical(_) | CliError::Output(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<DriverError> for CliError {
    fn from(e: DriverError) -> Self {
        match e {
            DriverError::Invalid(m) => CliError::Usage(m),
            DriverError::Channel(c) => CliError::Usage(c.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ris-isac",
    version,
    about = "RIS-assisted CoMP ISAC power minimization experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one scheme on one channel realization.
    Run(RunArgs),
    /// Sweep a threshold across values, seeds and schemes.
    Sweep(SweepArgs),
    /// Sensing SNR field of a solved run.
    Heatmap(HeatmapArgs),
    /// Per-iteration power from several initial phase draws.
    Convergence(ConvergenceArgs),
    /// Run the oracle and invariant checks.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Table1,
    Desk,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Table1 => Preset::Table1,
            PresetArg::Desk => Preset::Desk,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Proposed,
    NoRis,
    RandomPhase,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Proposed => Scheme::Proposed,
            SchemeArg::NoRis => Scheme::NoRis,
            SchemeArg::RandomPhase => Scheme::RandomPhase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    #[value(name = "r_req")]
    RReq,
    #[value(name = "gamma_req")]
    GammaReq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FadingArg {
    /// Deterministic line-of-sight channels at evaluation points.
    Los,
    /// Fresh Rician draws at evaluation points.
    Rician,
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario document (JSON).
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Shipped parameter set used when no document is given.
    #[arg(long, value_enum, default_value = "desk")]
    pub preset: PresetArg,
    /// Override a scenario key; the value is parsed as JSON, else as a string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, value_name = "BPS_HZ")]
    pub r_req: Option<f64>,
    #[arg(long, value_name = "DB")]
    pub gamma_req: Option<f64>,
    /// Base seed for user placement and per-seed channel streams.
    #[arg(long)]
    pub rng_seed: Option<u64>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct AoArgs {
    /// Fractional power decrease that stops the alternation.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 20)]
    pub max_iter: usize,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub ao: AoArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "proposed")]
    pub scheme: SchemeArg,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub ao: AoArgs,
    #[arg(long, value_enum)]
    pub axis: AxisArg,
    /// Comma-separated ascending values.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    pub values: Vec<f64>,
    /// Seed range `a..b` (inclusive), `a..=b`, a list `1,4,9`, or one seed.
    #[arg(long, default_value = "0")]
    pub seeds: String,
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["proposed", "no-ris", "random-phase"])]
    pub schemes: Vec<SchemeArg>,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub ao: AoArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "proposed")]
    pub scheme: SchemeArg,
    /// Evaluation altitude in metres; defaults to the region altitude.
    #[arg(long)]
    pub altitude: Option<f64>,
    /// `x0,x1`; defaults to the service area.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub x_range: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub y_range: Option<Vec<f64>>,
    /// Lattice points per axis.
    #[arg(long, default_value_t = 41)]
    pub resolution: usize,
    #[arg(long, value_enum, default_value = "los")]
    pub fading: FadingArg,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub ao: AoArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of independent initial phase draws.
    #[arg(long, default_value_t = 2)]
    pub draws: usize,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Seeds for run-level checks.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    /// Channel draws for closed-form oracles.
    #[arg(long, default_value_t = 10)]
    pub oracle_draws: u64,
}

/// Parse `a..b` (inclusive), `a..=b`, `a,b,c` or `a`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, String> {
    let s = s.trim();
    let num = |t: &str| {
        t.trim()
            .parse::<u64>()
            .map_err(|_| format!("invalid seed `{t}`"))
    };
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?);
        if a > b {
            return Err(format!("empty seed range `{s}`"));
        }
        return Ok((a..=b).collect());
    }
    let seeds: Vec<u64> = s.split(',').map(num).collect::<Result<_, _>>()?;
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(seeds)
}

fn parse_override(kv: &str) -> Result<(String, Value), CliError> {
    let (k, v) = kv
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{kv}` is not KEY=VALUE")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

/// Scenario document plus overrides, validated by the loader.
pub fn load_config(args: &ScenarioArgs) -> Result<ScenarioConfig, CliError> {
    let mut doc: Map<String, Value> = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
                path: path.display().to_string(),
                source,
            })?;
            match serde_json::from_str(&text).map_err(|e| ScenarioError::Parse(e.to_string()))? {
                Value::Object(m) => m,
                _ => return Err(ScenarioError::Parse("top level must be an object".into()).into()),
            }
        }
        None => {
            let mut m = Map::new();
            m.insert(
                "preset".into(),
                Value::String(Preset::from(args.preset).to_string()),
            );
            m
        }
    };
    for kv in &args.overrides {
        let (k, v) = parse_override(kv)?;
        doc.insert(k, v);
    }
    if let Some(r) = args.r_req {
        doc.insert("r_req_bps_hz".into(), r.into());
    }
    if let Some(g) = args.gamma_req {
        doc.insert("gamma_req_db".into(), g.into());
    }
    if let Some(s) = args.rng_seed {
        doc.insert("rng_seed".into(), s.into());
    }
    Ok(load_scenario_value(Value::Object(doc))?)
}

fn prepare_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::OutDir {
        path: dir.display().to_string(),
        source,
    })
}

fn ao_options(a: &AoArgs) -> Result<AoOptions, CliError> {
    if !(a.epsilon > 0.0 && a.epsilon.is_finite()) || a.max_iter == 0 {
        return Err(CliError::Usage(
            "--epsilon must be > 0 and --max-iter >= 1".into(),
        ));
    }
    Ok(AoOptions {
        epsilon: a.epsilon,
        max_iter: a.max_iter,
        ..AoOptions::default()
    })
}

/// Map a finished run to its exit status.
fn run_outcome(r: &RunReport) -> Result<(), CliError> {
    match r.stop_reason {
        StopReason::InfeasibleFirstStep => Err(CliError::Infeasible(
            r.failure
                .clone()
                .unwrap_or_else(|| "no feasible beamformers".into()),
        )),
        StopReason::SolverFailure => Err(CliError::Numerical(format!(
            "{} (last consistent iterate kept)",
            r.failure.clone().unwrap_or_default()
        ))),
        _ => Ok(()),
    }
}

fn tag(r: &RunReport) -> String {
    format!("{}_seed{}", r.scheme, r.seed)
}

fn cmd_run(a: &RunArgs) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(&a.scenario)?;
    let opts = ao_options(&a.ao)?;
    prepare_out_dir(&a.scenario.out_dir)?;
    let ch = channels_for_seed(&cfg, a.seed)?;
    let r = run_scheme(&cfg, &ch, a.scheme.into(), &opts, a.seed)?;
    let dir = &a.scenario.out_dir;
    let report = dir.join(format!("report_{}.json", tag(&r)));
    let history = dir.join(format!("history_{}.csv", tag(&r)));
    output::write_report_json(&report, &cfg, &r)?;
    output::write_history_csv(&history, &r)?;
    eprintln!(
        "{} seed {}: {} after {} iteration(s), power {:.6e} W",
        r.scheme,
        r.seed,
        r.stop_reason,
        r.iterations,
        r.final_power()
    );
    run_outcome(&r)?;
    Ok(vec![report, history])
}

fn cmd_sweep(a: &SweepArgs) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(&a.scenario)?;
    let opts = ao_options(&a.ao)?;
    let seeds = parse_seeds(&a.seeds).map_err(CliError::Usage)?;
    let axis = match a.axis {
        AxisArg::RReq => SweepAxis::RReq,
        AxisArg::GammaReq => SweepAxis::GammaReq,
    };
    let schemes: Vec<Scheme> = a.schemes.iter().map(|&s| s.into()).collect();
    for &v in &a.values {
        axis.apply(&cfg, v).validate()?;
    }
    prepare_out_dir(&a.scenario.out_dir)?;
    let rows = sweep(&cfg, axis, &a.values, &seeds, &schemes, &opts)?;
    let name = match axis {
        SweepAxis::RReq => "r_req",
        SweepAxis::GammaReq => "gamma_req",
    };
    let table = a.scenario.out_dir.join(format!("sweep_{name}.csv"));
    let summary = a.scenario.out_dir.join(format!("sweep_{name}_summary.csv"));
    output::write_sweep_csv(&table, &rows)?;
    output::write_summary_csv(&summary, &rows)?;
    let failed = rows.iter().filter(|r| !r.power_w.is_finite()).count();
    eprintln!(
        "{} rows written, {failed} infeasible or failed cells",
        rows.len()
    );
    Ok(vec![table, summary])
}

fn pair(v: &Option<Vec<f64>>, default: [f64; 2], flag: &str) -> Result<[f64; 2], CliError> {
    match v {
        None => Ok(default),
        Some(x) if x.len() == 2 && x[0] < x[1] && x.iter().all(|c| c.is_finite()) => {
            Ok([x[0], x[1]])
        }
        Some(_) => Err(CliError::Usage(format!(
            "{flag} expects two increasing numbers"
        ))),
    }
}

fn cmd_heatmap(a: &HeatmapArgs) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(&a.scenario)?;
    let opts = ao_options(&a.ao)?;
    let xr = pair(&a.x_range, cfg.service_area.x_range, "--x-range")?;
    let yr = pair(&a.y_range, cfg.service_area.y_range, "--y-range")?;
    let altitude = a.altitude.unwrap_or(cfg.region.altitude);
    if !(altitude > 0.0 && altitude.is_finite()) || a.resolution == 0 {
        return Err(CliError::Usage(
            "--altitude must be > 0 and --resolution >= 1".into(),
        ));
    }
    prepare_out_dir(&a.scenario.out_dir)?;
    let ch = channels_for_seed(&cfg, a.seed)?;
    let r = run_scheme(&cfg, &ch, a.scheme.into(), &opts, a.seed)?;
    run_outcome(&r)?;
    let fading = match a.fading {
        FadingArg::Los => FadingMode::LosOnly,
        FadingArg::Rician => FadingMode::Rician,
    };
    let map = heatmap_for_report(
        &cfg,
        &ch,
        &r,
        xr,
        yr,
        [a.resolution, a.resolution],
        altitude,
        fading,
    );
    let dir = &a.scenario.out_dir;
    let field = dir.join("heatmap.csv");
    let region = dir.join("heatmap_region.csv");
    let report = dir.join(format!("report_{}.json", tag(&r)));
    output::write_heatmap_csv(&field, &map.points)?;
    output::write_heatmap_csv(&region, &map.region_points)?;
    output::write_report_json(&report, &cfg, &r)?;
    let worst = map
        .region_points
        .iter()
        .map(|p| p.snr_db)
        .fold(f64::INFINITY, f64::min);
    eprintln!(
        "{} lattice points; lowest region SNR {:.3} dB (threshold {} dB)",
        map.points.len(),
        worst,
        cfg.gamma_req_db
    );
    Ok(vec![field, region, report])
}

fn cmd_convergence(a: &ConvergenceArgs) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(&a.scenario)?;
    let opts = ao_options(&a.ao)?;
    if a.draws < 2 {
        return Err(CliError::Usage("--draws must be at least 2".into()));
    }
    prepare_out_dir(&a.scenario.out_dir)?;
    let ch = channels_for_seed(&cfg, a.seed)?;
    let runs = convergence_study(&cfg, &ch, a.draws, &opts, a.seed)?;
    let path = a
        .scenario
        .out_dir
        .join(format!("convergence_seed{}.csv", a.seed));
    output::write_convergence_csv(&path, &runs)?;
    for (i, r) in runs.iter().enumerate() {
        eprintln!(
            "draw {i}: {} after {} iteration(s), power {:.6e} W",
            r.stop_reason,
            r.iterations,
            r.final_power()
        );
    }
    if let Some(bad) = runs
        .iter()
        .find(|r| !r.stop_reason.is_feasible() || r.stop_reason == StopReason::SolverFailure)
    {
        run_outcome(bad)?;
    }
    Ok(vec![path])
}

fn cmd_validate(a: &ValidateArgs) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(&a.scenario)?;
    let checks = run_suite(&SuiteOptions {
        scenario: cfg,
        seeds: a.seeds,
        oracle_draws: a.oracle_draws,
        ao: AoOptions::default(),
    });
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    if failed > 0 {
        return Err(CliError::Infeasible(format!(
            "{failed} validation check(s) failed"
        )));
    }
    Ok(Vec::new())
}

/// Run a parsed command, returning the written files.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Heatmap(a) => cmd_heatmap(a),
        Command::Convergence(a) => cmd_convergence(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
