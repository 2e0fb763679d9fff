//! `certinv`: run, certify and list inventory-control scenarios.
//!
//! Exit codes: 0 success (or every run certified), 1 a run violated a
//! certified bound, 2 usage, configuration or I/O error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use certinv::config::{RunConfig, Scenario};
use certinv::harness::{run_scenario, RunResult, Summary};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

#[derive(Parser)]
#[command(name = "certinv", version, about = "Certified inventory control experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write trajectory.csv and metrics.json.
    Run(RunArgs),
    /// Run many seeds and check every run against the certified bounds.
    Certify(CertifyArgs),
    /// List the available scenarios with their default configuration.
    Scenarios {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// periodic, sir, feedback, adversarial or elec2 (default periodic).
    #[arg(long)]
    scenario: Option<String>,
    /// Flat TOML file of configuration keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Elec2 CSV file (required for --scenario elec2).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Demand column of the Elec2 file.
    #[arg(long)]
    column: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other configuration key, as `--key value`.
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "--KEY VALUE"
    )]
    overrides: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Print the metrics as JSON instead of a text summary.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Number of consecutive seeds, starting at --seed (default 0).
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long)]
    json: bool,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Violation,
}

impl From<certinv::Error> for Failure {
    fn from(e: certinv::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Turns `--key value` pairs into a flat table.
fn parse_overrides(args: &[String]) -> Result<toml::Table, Failure> {
    let mut table = toml::Table::new();
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let Some(key) = flag.strip_prefix("--") else {
            return Err(Failure::Usage(format!("expected `--key value`, found `{flag}`")));
        };
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let value = it
                    .next()
                    .ok_or_else(|| Failure::Usage(format!("missing value for `{flag}`")))?;
                (key.to_string(), value.clone())
            }
        };
        if matches!(key.as_str(), "json" | "seeds" | "config") {
            return Err(Failure::Usage(format!(
                "`--{key}` must come before any configuration overrides"
            )));
        }
        table.insert(key.replace('-', "_"), parse_value(&value));
    }
    Ok(table)
}

fn resolve_config(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let explicit: Option<Scenario> = args.scenario.as_deref().map(str::parse).transpose()?;
    let mut table = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse_overrides(&text)?
        }
        None => toml::Table::new(),
    };
    // an explicit --scenario beats the file
    if let Some(s) = explicit {
        table.insert("scenario".into(), toml::Value::String(s.name().into()));
    }
    if let Some(seed) = args.seed {
        table.insert("seed".into(), toml::Value::Integer(seed as i64));
    }
    if let Some(data) = &args.data {
        table.insert("data".into(), toml::Value::String(data.display().to_string()));
    }
    if let Some(column) = &args.column {
        table.insert("column".into(), toml::Value::String(column.clone()));
    }
    if let Some(out) = &args.out {
        table.insert("out".into(), toml::Value::String(out.display().to_string()));
    }
    table.extend(parse_overrides(&args.overrides)?);
    Ok(RunConfig::resolve(Scenario::Periodic, &table)?)
}

fn print_summary(s: &Summary) {
    println!(
        "service level {:.4} ({} critical events of {} steps, target >= {:.4}) {}",
        s.service_level,
        s.critical_events,
        s.steps,
        1.0 - s.alpha,
        verdict(s.service_certified())
    );
    println!(
        "coverage      {:.4} ({} miscoverages of {} intervals, target >= {:.4}) {}",
        s.coverage,
        s.miscoverages,
        s.intervals,
        1.0 - s.beta,
        verdict(s.coverage_certified())
    );
    println!(
        "mean cost {:.4}, mean interval width {:.4}, max E_policy {}, max E_inference {}",
        s.mean_cost, s.mean_interval_width, s.max_policy_errors, s.max_inference_errors
    );
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let config = resolve_config(&args.config)?;
    let result: RunResult = run_scenario(&config)?;
    let (trajectory, metrics) = result.write_outputs(&config.out)?;
    if args.json {
        println!("{}", result.metrics_json());
    } else {
        println!(
            "scenario {} seed {}: wrote {} and {}",
            config.scenario,
            config.seed,
            trajectory.display(),
            metrics.display()
        );
        print_summary(&result.summary);
    }
    if result.summary.certified() {
        Ok(())
    } else {
        Err(Failure::Violation)
    }
}

fn cmd_certify(args: &CertifyArgs) -> Result<(), Failure> {
    if args.seeds == 0 {
        return Err(Failure::Usage("--seeds must be >= 1".into()));
    }
    let base = resolve_config(&args.config)?;
    let configs: Vec<RunConfig> = (0..args.seeds)
        .map(|i| RunConfig {
            seed: base.seed + i,
            ..base.clone()
        })
        .collect();
    let summaries = configs
        .par_iter()
        .map(|c| run_scenario(c).map(|r| (c.seed, r.summary)))
        .collect::<Result<Vec<_>, _>>()?;

    let min_service = summaries.iter().map(|(_, s)| s.service_level).fold(1.0, f64::min);
    let min_coverage = summaries.iter().map(|(_, s)| s.coverage).fold(1.0, f64::min);
    let violations: Vec<u64> = summaries
        .iter()
        .filter(|(_, s)| !s.certified())
        .map(|(seed, _)| *seed)
        .collect();

    if args.json {
        let doc = json!({
            "scenario": base.scenario.name(),
            "seeds": args.seeds,
            "min_service_level": min_service,
            "min_coverage": min_coverage,
            "violating_seeds": violations,
            "certified": violations.is_empty(),
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("plain JSON"));
    } else {
        println!(
            "scenario {}: {} seeds, min service level {:.4} (target >= {:.4}), min coverage {:.4} (target >= {:.4})",
            base.scenario,
            args.seeds,
            min_service,
            1.0 - base.alpha,
            min_coverage,
            1.0 - base.beta
        );
        if violations.is_empty() {
            println!("CERTIFIED: every run met both bounds");
        } else {
            println!("VIOLATION in seeds {violations:?}");
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violation)
    }
}

fn cmd_scenarios(json: bool) -> Result<(), Failure> {
    if json {
        let list: Vec<_> = Scenario::ALL
            .iter()
            .map(|&s| {
                json!({
                    "name": s.name(),
                    "description": s.description(),
                    "requires_data": s.requires_data(),
                    "defaults": RunConfig::for_scenario(s),
                })
            })
            .collect();
        println!("{}", serde_json::to_string_pretty(&list).expect("plain JSON"));
        return Ok(());
    }
    for s in Scenario::ALL {
        let c = RunConfig::for_scenario(s);
        let note = if s.requires_data() { " [requires --data]" } else { "" };
        println!("{}{note}: {}", s.name(), s.description());
        println!(
            "    T={} H={} T_hist={} alpha={} beta={} w_max={} demand lags (W,X)=({},{}) \
             forgetting demand={} cost={} cost AR order={} burn-in={}",
            c.steps,
            c.cost_horizon,
            c.history,
            c.alpha,
            c.beta,
            c.w_max,
            c.demand_lags,
            c.stock_lags,
            c.demand_forgetting,
            c.cost_forgetting,
            c.cost_ar_order,
            c.inference_burn_in
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Scenarios { json } => cmd_scenarios(*json),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
