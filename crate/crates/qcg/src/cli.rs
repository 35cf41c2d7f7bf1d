//! Command-line front end: parse config, dispatch scenarios, write output.
//!
//! Every scenario is a subcommand. Settings resolve in three layers:
//! scenario defaults, then a `--config` key=value file, then inline
//! `key=value` overrides (also accepted as `--key=value`). Unknown keys are
//! rejected with the full key list. Output goes to `--output` or stdout as
//! CSV (default) or a JSON bundle of config + records + version.
//!
//! Exit codes: 0 success, 1 numerical failure (failing row identified on
//! stderr), 2 configuration error.

use std::collections::BTreeMap;
use std::env;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::experiments::{
    run_bloch, run_cost_sweep, run_cz, run_dephasing_sweep, run_duration_sweep, run_dynamical,
    run_sequence, run_timing_sweep, BlochRecord, ExperimentConfig, Scenario, SweepRecord,
};
use crate::{Error, Result};

/// Column header of sweep CSV output.
pub const SWEEP_CSV_HEADER: &str =
    "scenario,protocol,ramp,param,value,infidelity,cost,runtime_seconds";

/// Column header of Bloch-trajectory CSV output.
pub const BLOCH_CSV_HEADER: &str = "scenario,protocol,qubit,t,x,y,z";

/// Every accepted config key, sorted.
pub const VALID_KEYS: [&str; 23] = [
    "cz_dephasing",
    "dephasing_sweep",
    "eps_max",
    "eps_step",
    "floquet_harmonic",
    "format",
    "gamma",
    "gate",
    "norm",
    "protocol",
    "ramp",
    "ratio",
    "steps_per_unit",
    "tau",
    "tau_max",
    "tau_min",
    "tau_points",
    "taugamma_max",
    "taugamma_min",
    "taugamma_points",
    "w1",
    "w2",
    "w3",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn name(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config {
                message: format!("unknown format '{other}'; valid values are csv, json"),
            }),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qcg",
    version = crate::VERSION,
    about = "Controlled-Hamiltonian quantum gate sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Final gate infidelity over a duration grid.
    #[command(name = "sweep-tau")]
    SweepTau(RunArgs),
    /// Infidelity against the final target at every output time.
    Dynamical(RunArgs),
    /// Time-averaged drive cost over a duration grid.
    Cost(RunArgs),
    /// Final infidelity vs signed timekeeping error.
    Timing(RunArgs),
    /// Final infidelity vs dephasing strength.
    Dephasing(RunArgs),
    /// Bloch trajectories of every tracked qubit.
    Bloch(RunArgs),
    /// Ground-start then excited-start gate reuse sequence.
    Sequence(RunArgs),
    /// Controlled-Z infidelity and cost records.
    Cz(RunArgs),
    /// Resolve the configuration and print it.
    Validate(RunArgs),
}

impl Command {
    fn args(&self) -> &RunArgs {
        match self {
            Command::SweepTau(a)
            | Command::Dynamical(a)
            | Command::Cost(a)
            | Command::Timing(a)
            | Command::Dephasing(a)
            | Command::Bloch(a)
            | Command::Sequence(a)
            | Command::Cz(a)
            | Command::Validate(a) => a,
        }
    }

    fn scenario(&self) -> Option<Scenario> {
        match self {
            Command::SweepTau(_) => Some(Scenario::DurationSweep),
            Command::Dynamical(_) => Some(Scenario::Dynamical),
            Command::Cost(_) => Some(Scenario::CostSweep),
            Command::Timing(_) => Some(Scenario::TimingSweep),
            Command::Dephasing(_) => Some(Scenario::DephasingSweep),
            Command::Bloch(_) => Some(Scenario::Bloch),
            Command::Sequence(_) => Some(Scenario::Sequence),
            Command::Cz(_) => Some(Scenario::Cz),
            Command::Validate(_) => None,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Key=value config file ('#' starts a comment line).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Inline overrides, e.g. protocol=cd ramp=linear tau=2.
    #[arg(value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    let argv = preprocess_args(env::args().collect());
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    init_worker_pool();
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::Config { .. } => 2,
                _ => 1,
            }
        }
    }
}

/// Rewrites `--key=value` override sugar into plain `key=value` positionals,
/// leaving the real flags (--config, --output) and non-assignments alone.
fn preprocess_args(args: Vec<String>) -> Vec<String> {
    args.into_iter()
        .map(|arg| {
            if let Some(rest) = arg.strip_prefix("--") {
                if let Some((key, _)) = rest.split_once('=') {
                    if !key.is_empty() && key != "config" && key != "output" {
                        return rest.to_string();
                    }
                }
            }
            arg
        })
        .collect()
}

fn init_worker_pool() {
    if let Ok(raw) = env::var("QCG_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("ignoring QCG_THREADS='{raw}': expected a positive integer"),
        }
    }
}

fn dispatch(command: &Command) -> Result<i32> {
    let args = command.args();
    match command.scenario() {
        None => {
            // validate: resolve against the duration-sweep defaults.
            let (cfg, format) = resolve(Scenario::DurationSweep, args)?;
            let mut text = String::new();
            for (key, value) in config_map(&cfg, format) {
                text.push_str(&format!("{key}={value}\n"));
            }
            write_text(&text, args.output.as_deref())?;
            Ok(0)
        }
        Some(scenario) => {
            let (cfg, format) = resolve(scenario, args)?;
            let mut exit = 0;
            let text = match scenario {
                Scenario::DurationSweep => {
                    let outcome = run_duration_sweep(&cfg)?;
                    for failure in &outcome.failures {
                        eprintln!("error: {failure}");
                        exit = 1;
                    }
                    render_sweep(scenario, &cfg, format, &outcome.records)?
                }
                Scenario::Dynamical => {
                    render_sweep(scenario, &cfg, format, &run_dynamical(&cfg)?)?
                }
                Scenario::CostSweep => {
                    render_sweep(scenario, &cfg, format, &run_cost_sweep(&cfg)?)?
                }
                Scenario::TimingSweep => {
                    render_sweep(scenario, &cfg, format, &run_timing_sweep(&cfg)?)?
                }
                Scenario::DephasingSweep => {
                    render_sweep(scenario, &cfg, format, &run_dephasing_sweep(&cfg)?)?
                }
                Scenario::Sequence => {
                    render_sweep(scenario, &cfg, format, &run_sequence(&cfg)?)?
                }
                Scenario::Cz => render_sweep(scenario, &cfg, format, &run_cz(&cfg)?)?,
                Scenario::Bloch => render_bloch(scenario, &cfg, format, &run_bloch(&cfg)?)?,
            };
            write_text(&text, args.output.as_deref())?;
            Ok(exit)
        }
    }
}

/// Resolves the three config layers for a scenario.
fn resolve(scenario: Scenario, args: &RunArgs) -> Result<(ExperimentConfig, OutputFormat)> {
    let mut cfg = ExperimentConfig::defaults_for(scenario);
    let mut format = OutputFormat::Csv;
    if let Some(path) = &args.config {
        for (key, value) in parse_config_file(path)? {
            apply_key(&mut cfg, &mut format, &key, &value)?;
        }
    }
    for item in &args.overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| Error::Config {
            message: format!("override '{item}' is not of the form key=value"),
        })?;
        apply_key(&mut cfg, &mut format, key.trim(), value.trim())?;
    }
    Ok((cfg, format))
}

/// Reads a flat key=value file; '#' lines are comments.
fn parse_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|err| Error::Config {
        message: format!("cannot read config file {}: {err}", path.display()),
    })?;
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            message: format!(
                "{} line {}: expected key=value, got '{line}'",
                path.display(),
                idx + 1
            ),
        })?;
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

fn config_error<T>(key: &str, result: Result<T>) -> Result<T> {
    result.map_err(|err| match err {
        Error::Config { .. } => err,
        other => Error::Config {
            message: format!("{key}: {other}"),
        },
    })
}

fn parse_float(key: &str, value: &str) -> Result<f64> {
    let parsed: f64 = value.parse().map_err(|_| Error::Config {
        message: format!("{key}: '{value}' is not a number"),
    })?;
    if !parsed.is_finite() {
        return Err(Error::Config {
            message: format!("{key}: value must be finite, got {value}"),
        });
    }
    Ok(parsed)
}

fn parse_positive(key: &str, value: &str) -> Result<f64> {
    let parsed = parse_float(key, value)?;
    if parsed <= 0.0 {
        return Err(Error::Config {
            message: format!("{key}: value must be positive, got {value}"),
        });
    }
    Ok(parsed)
}

fn parse_nonnegative(key: &str, value: &str) -> Result<f64> {
    let parsed = parse_float(key, value)?;
    if parsed < 0.0 {
        return Err(Error::Config {
            message: format!("{key}: value must be nonnegative, got {value}"),
        });
    }
    Ok(parsed)
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    value.parse().map_err(|_| Error::Config {
        message: format!("{key}: '{value}' is not a nonnegative integer"),
    })
}

fn parse_list<T: FromStr<Err = Error>>(key: &str, value: &str) -> Result<Vec<T>> {
    let mut items = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        items.push(config_error(key, part.parse::<T>())?);
    }
    if items.is_empty() {
        return Err(Error::Config {
            message: format!("{key}: needs at least one value"),
        });
    }
    Ok(items)
}

/// Applies one key=value setting, rejecting unknown keys with the full
/// key list.
fn apply_key(
    cfg: &mut ExperimentConfig,
    format: &mut OutputFormat,
    key: &str,
    value: &str,
) -> Result<()> {
    match key {
        "protocol" => cfg.protocols = parse_list(key, value)?,
        "ramp" => cfg.ramps = parse_list(key, value)?,
        "gate" => cfg.gate = config_error(key, value.parse())?,
        "tau" => cfg.tau = parse_positive(key, value)?,
        "tau_min" => cfg.tau_min = parse_positive(key, value)?,
        "tau_max" => cfg.tau_max = parse_positive(key, value)?,
        "tau_points" => cfg.tau_points = parse_count(key, value)?,
        "ratio" => cfg.ratio = parse_positive(key, value)?,
        "floquet_harmonic" => cfg.harmonic = config_error(key, value.parse())?,
        "norm" => cfg.norm = config_error(key, value.parse())?,
        "eps_max" => cfg.eps_max = parse_nonnegative(key, value)?,
        "eps_step" => cfg.eps_step = parse_positive(key, value)?,
        "taugamma_min" => cfg.taugamma_min = parse_nonnegative(key, value)?,
        "taugamma_max" => cfg.taugamma_max = parse_nonnegative(key, value)?,
        "taugamma_points" => cfg.taugamma_points = parse_count(key, value)?,
        "dephasing_sweep" => cfg.dephasing_axis = config_error(key, value.parse())?,
        "gamma" => cfg.gamma = parse_nonnegative(key, value)?,
        "cz_dephasing" => cfg.cz_noise = config_error(key, value.parse())?,
        "steps_per_unit" => {
            let steps = parse_count(key, value)?;
            cfg.steps_per_unit = if steps == 0 { None } else { Some(steps) };
        }
        "w1" => cfg.weights[0] = parse_nonnegative(key, value)?,
        "w2" => cfg.weights[1] = parse_nonnegative(key, value)?,
        "w3" => cfg.weights[2] = parse_nonnegative(key, value)?,
        "format" => *format = value.parse()?,
        other => {
            return Err(Error::Config {
                message: format!(
                    "unknown config key '{other}'; valid keys are: {}",
                    VALID_KEYS.join(", ")
                ),
            })
        }
    }
    Ok(())
}

/// The resolved configuration as sorted displayable entries.
fn config_map(cfg: &ExperimentConfig, format: OutputFormat) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    let protocols: Vec<&str> = cfg.protocols.iter().map(|p| p.name()).collect();
    let ramps: Vec<&str> = cfg.ramps.iter().map(|r| r.name()).collect();
    map.insert("protocol".to_string(), protocols.join(","));
    map.insert("ramp".to_string(), ramps.join(","));
    map.insert("gate".to_string(), cfg.gate.name().to_string());
    map.insert("tau".to_string(), cfg.tau.to_string());
    map.insert("tau_min".to_string(), cfg.tau_min.to_string());
    map.insert("tau_max".to_string(), cfg.tau_max.to_string());
    map.insert("tau_points".to_string(), cfg.tau_points.to_string());
    map.insert("ratio".to_string(), cfg.ratio.to_string());
    map.insert(
        "floquet_harmonic".to_string(),
        cfg.harmonic.name().to_string(),
    );
    map.insert("norm".to_string(), cfg.norm.name().to_string());
    map.insert("eps_max".to_string(), cfg.eps_max.to_string());
    map.insert("eps_step".to_string(), cfg.eps_step.to_string());
    map.insert("taugamma_min".to_string(), cfg.taugamma_min.to_string());
    map.insert("taugamma_max".to_string(), cfg.taugamma_max.to_string());
    map.insert(
        "taugamma_points".to_string(),
        cfg.taugamma_points.to_string(),
    );
    map.insert(
        "dephasing_sweep".to_string(),
        cfg.dephasing_axis.name().to_string(),
    );
    map.insert("gamma".to_string(), cfg.gamma.to_string());
    map.insert("cz_dephasing".to_string(), cfg.cz_noise.name().to_string());
    map.insert(
        "steps_per_unit".to_string(),
        cfg.steps_per_unit.unwrap_or(0).to_string(),
    );
    map.insert("w1".to_string(), cfg.weights[0].to_string());
    map.insert("w2".to_string(), cfg.weights[1].to_string());
    map.insert("w3".to_string(), cfg.weights[2].to_string());
    map.insert("format".to_string(), format.to_string());
    map
}

fn float_field(x: f64) -> String {
    format!("{x:.16e}")
}

fn optional_field(x: Option<f64>) -> String {
    x.map(float_field).unwrap_or_default()
}

fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 96 + 80);
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.protocol,
            r.ramp,
            r.param,
            float_field(r.value),
            optional_field(r.infidelity),
            optional_field(r.cost),
            float_field(r.runtime_seconds),
        ));
    }
    out
}

fn bloch_csv(records: &[BlochRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 96 + 40);
    out.push_str(BLOCH_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.scenario,
            r.protocol,
            r.qubit,
            float_field(r.t),
            float_field(r.x),
            float_field(r.y),
            float_field(r.z),
        ));
    }
    out
}

fn json_bundle<T: serde::Serialize>(
    scenario: Scenario,
    cfg: &ExperimentConfig,
    format: OutputFormat,
    records: &[T],
) -> Result<String> {
    let bundle = serde_json::json!({
        "version": crate::VERSION,
        "scenario": scenario.name(),
        "config": config_map(cfg, format),
        "records": records,
    });
    let mut text = serde_json::to_string_pretty(&bundle)?;
    text.push('\n');
    Ok(text)
}

fn render_sweep(
    scenario: Scenario,
    cfg: &ExperimentConfig,
    format: OutputFormat,
    records: &[SweepRecord],
) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    match format {
        OutputFormat::Csv => Ok(sweep_csv(records)),
        OutputFormat::Json => json_bundle(scenario, cfg, format, records),
    }
}

fn render_bloch(
    scenario: Scenario,
    cfg: &ExperimentConfig,
    format: OutputFormat,
    records: &[BlochRecord],
) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    match format {
        OutputFormat::Csv => Ok(bloch_csv(records)),
        OutputFormat::Json => json_bundle(scenario, cfg, format, records),
    }
}

fn write_text(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
