//! Batch runner for transformed random walk computations.
//!
//! Every subcommand reads one TOML config (a path or a built-in fixture
//! name), applies the global overrides and writes CSV tables plus a JSON
//! summary into the output directory.
//!
//! Exit codes: 0 success, 1 a checked assertion failed, 2 config error,
//! 3 enumeration budget exceeded, 4 contract violation, 5 i/o error.

pub mod commands;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod output;
pub mod resolve;
pub mod scenarios;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::Config;
use crate::error::{exit, CliError, CliResult};
use crate::output::Outcome;

#[derive(Debug, Parser)]
#[command(
    name = "transwalk",
    version,
    about = "Exact computations for transformed random walks"
)]
pub struct Cli {
    /// Config file, or the name of a built-in fixture.
    #[arg(long, global = true)]
    pub config: Option<String>,
    #[arg(long, global = true, default_value = "transwalk-out")]
    pub out_dir: PathBuf,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the relative tolerance of numeric verdicts.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transformed measure `mu_tau` (or `mu_{tau,t}`, or the n-th iterate) with its deficit.
    Transform,
    /// Green and Martin kernels: closed forms, truncated series or boundary sequences.
    Kernel,
    /// Harmonicity defect of a function on a window.
    Harmonic,
    /// Free cover of the measure, with lifted harmonicity and stopping checks.
    Lift,
    /// Sampled stopping distribution, optionally compared with the exact transform.
    Montecarlo,
    /// Runs a packaged reproduction by name, or the `[scenario]` of `--config`.
    Scenario { name: Option<String> },
    /// Prints the JSON schema of config files.
    Schema,
    /// Lists the built-in fixtures.
    Fixtures,
}

impl Command {
    fn label(&self) -> &'static str {
        match self {
            Command::Transform => "transform",
            Command::Kernel => "kernel",
            Command::Harmonic => "harmonic",
            Command::Lift => "lift",
            Command::Montecarlo => "montecarlo",
            Command::Scenario { .. } => "scenario",
            Command::Schema => "schema",
            Command::Fixtures => "fixtures",
        }
    }
}

pub fn schema_json() -> String {
    let schema = schemars::schema_for!(Config);
    let mut s = serde_json::to_string_pretty(&schema).expect("serializable schema");
    s.push('\n');
    s
}

pub fn parse_config(text: &str) -> CliResult<Config> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

/// Reads `source` as a file if it exists, else as a fixture name.
pub fn load_config(source: &str) -> CliResult<Config> {
    let path = Path::new(source);
    if path.is_file() {
        return parse_config(&std::fs::read_to_string(path)?);
    }
    match fixtures::get(source) {
        Some(text) => parse_config(text),
        None => Err(CliError::Config(format!(
            "`{source}` is neither a file nor a built-in fixture ({})",
            fixtures::names().join(", ")
        ))),
    }
}

fn scenario_config(name: Option<&str>, config: Option<&str>) -> CliResult<Config> {
    if let Some(n) = name {
        if !scenarios::NAMES.contains(&n) {
            return Err(CliError::Config(format!(
                "unknown scenario `{n}`; available: {}",
                scenarios::NAMES.join(", ")
            )));
        }
    }
    let c = match (config, name) {
        (Some(src), _) => load_config(src)?,
        (None, Some(n)) => load_config(n)?,
        (None, None) => return Err(CliError::Config("scenario needs a name or --config".into())),
    };
    let pipeline = c
        .scenario
        .as_ref()
        .map(scenarios::pipeline_name)
        .ok_or_else(|| CliError::Config(format!("config `{}` has no [scenario]", c.name)))?;
    if let Some(n) = name {
        if n != pipeline {
            return Err(CliError::Config(format!(
                "config runs `{pipeline}`, not `{n}`"
            )));
        }
    }
    Ok(c)
}

fn execute(cli: &Cli) -> CliResult<bool> {
    match &cli.command {
        Command::Schema => {
            print!("{}", schema_json());
            return Ok(true);
        }
        Command::Fixtures => {
            for n in fixtures::names() {
                println!("{n}");
            }
            return Ok(true);
        }
        _ => {}
    }
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        // A pool already exists when called twice in one process; the first size wins.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let config = match &cli.command {
        Command::Scenario { name } => scenario_config(name.as_deref(), cli.config.as_deref())?,
        _ => load_config(
            cli.config
                .as_deref()
                .ok_or_else(|| CliError::Config("--config is required".into()))?,
        )?,
    };
    let ctx = Context::new(config, cli.seed, cli.tol)?;
    let outcome: Outcome = match &cli.command {
        Command::Transform => commands::transform(&ctx)?,
        Command::Kernel => commands::kernel(&ctx)?,
        Command::Harmonic => commands::harmonic(&ctx)?,
        Command::Lift => commands::lift(&ctx)?,
        Command::Montecarlo => commands::montecarlo(&ctx)?,
        Command::Scenario { .. } => scenarios::run(&ctx)?,
        Command::Schema | Command::Fixtures => unreachable!(),
    };
    let paths = output::write(&cli.out_dir, &ctx.config, cli.command.label(), &outcome)?;
    for p in &paths {
        println!("wrote {}", p.display());
    }
    if let Some(checks) = outcome.result.get("checks").and_then(|c| c.as_array()) {
        for c in checks {
            let verdict = if c["pass"].as_bool() == Some(true) {
                "PASS"
            } else {
                "FAIL"
            };
            println!(
                "{verdict} {}: {}",
                c["name"].as_str().unwrap_or(""),
                c["detail"].as_str().unwrap_or("")
            );
        }
    }
    println!("{}", if outcome.passed { "passed" } else { "FAILED" });
    Ok(outcome.passed)
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::CONFIG
            } else {
                exit::OK
            };
        }
    };
    match execute(&cli) {
        Ok(true) => exit::OK,
        Ok(false) => exit::ASSERTION,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
