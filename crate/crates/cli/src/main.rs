use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use encap::config::Config;
use encap::error::EncapError;
use encap::experiment::{compare_baseline, parse_seed_range, run_batch, sweep, SweepSpec};
use encap::sim::{trace_line, Simulator};
use encap::theory::{bounds_table, validate_scenario, FeasibilityReport};

/// Exit code for a failed feasibility check or, in strict mode, a safety violation.
const EXIT_REJECTED: u8 = 2;

#[derive(Parser)]
#[command(name = "encap", version, about = "Target encapsulation by memoryless robot swarms")]
#[command(after_help = "Set ENCAP_THREADS to cap the number of worker threads.")]
struct Cli {
    /// Refuse infeasible configurations and exit nonzero on any safety violation.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Configuration file, or `preset:<name>`.
    config: String,
    /// Override a configuration value, e.g. `--set noise.sigma=0.25`.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration against every feasibility bound.
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Simulate one seed.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Step cap; defaults to the configuration's `sim.t_max`.
        #[arg(long)]
        tmax: Option<u64>,
        /// Write one NDJSON record per timestep.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Simulate a range of seeds and print aggregate statistics.
    Batch {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// `A..B` (exclusive), `A..=B`, or a single seed.
        #[arg(long, default_value = "0..50")]
        seeds: String,
        #[arg(long)]
        tmax: Option<u64>,
        /// Write every run summary as NDJSON.
        #[arg(long)]
        summaries: Option<PathBuf>,
    },
    /// Run a parameter sweep and write a CSV table.
    Sweep {
        /// Sweep file, or `preset:<name>`.
        spec: String,
        /// Seeds per grid point, overriding the sweep file.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        tmax: Option<u64>,
        /// CSV output path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Box plot output path.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Compare encapsulation time with and without orbiting on a static target.
    CompareBaseline {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, default_value = "0..50")]
        seeds: String,
        #[arg(long)]
        tmax: Option<u64>,
    },
    /// Print every closed-form bound for a configuration.
    Bounds {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug)]
enum Failure {
    Error(String),
    Rejected(String),
}

impl From<EncapError> for Failure {
    fn from(e: EncapError) -> Self {
        match e {
            EncapError::Infeasibility(_) | EncapError::Infeasible(_) => Failure::Rejected(e.to_string()),
            other => Failure::Error(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Error(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Error(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn parse_value(text: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {text}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(text.to_string())),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

fn load(cfg: &ConfigArgs) -> Result<Config, Failure> {
    let mut config = Config::load(&cfg.config)?;
    for o in &cfg.overrides {
        let (path, value) = o.split_once('=').ok_or_else(|| Failure::Error(format!("override {o:?} is not PATH=VALUE")))?;
        config = config.with_override(path.trim(), &parse_value(value.trim()))?;
    }
    Ok(config)
}

fn feasibility(config: &Config, strict: bool) -> Result<FeasibilityReport, Failure> {
    let report = validate_scenario(&config.resolve()?);
    if !report.pass {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        let msg = format!("infeasible configuration: {}", names.join(", "));
        if strict {
            return Err(Failure::Rejected(msg));
        }
        eprintln!("warning: {msg}");
    }
    Ok(report)
}

fn print_report(report: &FeasibilityReport) {
    for c in &report.checks {
        let mark = if c.pass { "ok  " } else { "FAIL" };
        let note = c.note.as_deref().map(|n| format!("  ({n})")).unwrap_or_default();
        println!("{mark} {:<26} {:<44} bound {:>12.6}  configured {:>12.6}{note}", c.name, c.formula, c.bound, c.configured);
    }
    println!("{}", if report.pass { "feasible" } else { "infeasible" });
}

fn violations_check(strict: bool, violations: u64) -> CliResult {
    if strict && violations > 0 {
        return Err(Failure::Rejected(format!("{violations} safety violations")));
    }
    Ok(())
}

fn execute(cli: Cli) -> CliResult {
    let strict = cli.strict;
    match cli.command {
        Command::Validate { cfg, json } => {
            let config = load(&cfg)?;
            let sc = config.resolve().map_err(|e| {
                println!("FAIL {e}");
                Failure::from(e)
            })?;
            let report = validate_scenario(&sc);
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print_report(&report);
            }
            if !report.pass {
                return Err(Failure::Rejected("configuration is infeasible".into()));
            }
        }
        Command::Run { cfg, seed, tmax, trace } => {
            let config = load(&cfg)?;
            feasibility(&config, strict)?;
            let sim = Simulator::new(&config)?;
            let t_max = tmax.unwrap_or(config.sim.t_max);
            let mut writer = trace.map(|p| File::create(p).map(BufWriter::new)).transpose()?;
            let mut io_err = None;
            let summary = sim.run_with(seed, t_max, |rec| {
                if let (Some(w), None) = (writer.as_mut(), io_err.as_ref()) {
                    if let Err(e) = writeln!(w, "{}", trace_line(rec)) {
                        io_err = Some(e);
                    }
                }
            })?;
            if let Some(e) = io_err {
                return Err(e.into());
            }
            if let Some(mut w) = writer {
                w.flush()?;
            }
            println!("{}", serde_json::to_string(&summary)?);
            violations_check(strict, summary.violations)?;
        }
        Command::Batch { cfg, seeds, tmax, summaries } => {
            let config = load(&cfg)?;
            feasibility(&config, strict)?;
            let seeds = parse_seed_range(&seeds)?;
            let report = run_batch(&config, &seeds, tmax.unwrap_or(config.sim.t_max))?;
            if let Some(path) = summaries {
                let mut w = BufWriter::new(File::create(path)?);
                for s in &report.summaries {
                    writeln!(w, "{}", serde_json::to_string(s)?)?;
                }
                w.flush()?;
            }
            for f in &report.failures {
                eprintln!("seed {} failed: {}", f.seed, f.message);
            }
            println!("{}", serde_json::to_string_pretty(&report.stats())?);
            violations_check(strict, report.violations())?;
            if !report.failures.is_empty() {
                return Err(Failure::Error(format!("{} runs failed", report.failures.len())));
            }
        }
        Command::Sweep { spec, seeds, tmax, out, svg } => {
            let mut spec = SweepSpec::load(&spec)?;
            if let Some(n) = seeds {
                spec.seeds = n;
            }
            if tmax.is_some() {
                spec.t_max = tmax;
            }
            let table = sweep(&spec)?;
            let csv = table.to_csv();
            match out {
                Some(p) => std::fs::write(p, &csv)?,
                None => print!("{csv}"),
            }
            if let (Some(p), Some(doc)) = (svg, table.to_svg()) {
                std::fs::write(p, doc)?;
            }
            let violations: u64 = table.rows.iter().flat_map(|r| r.stats.iter().chain(r.baseline.iter())).map(|s| s.violations).sum();
            violations_check(strict, violations)?;
        }
        Command::CompareBaseline { cfg, seeds, tmax } => {
            let config = load(&cfg)?;
            feasibility(&config, strict)?;
            let seeds = parse_seed_range(&seeds)?;
            let cmp = compare_baseline(&config, &seeds, tmax.unwrap_or(config.sim.t_max))?;
            println!("{}", serde_json::to_string_pretty(&cmp)?);
            violations_check(strict, cmp.orbiting.violations + cmp.baseline.violations)?;
        }
        Command::Bounds { cfg, json } => {
            let config = load(&cfg)?;
            let sc = config.resolve()?;
            let table = bounds_table(&sc);
            let report = validate_scenario(&sc);
            if json {
                let doc = serde_json::json!({ "bounds": table, "feasibility": report });
                println!("{}", serde_json::to_string_pretty(&doc)?);
            } else {
                println!("sensors                   {}", table.sensors);
                println!("half_angle                {:.6}", table.half_angle);
                println!("robot_step_bound          {:.6}", table.robot_step_bound);
                println!("degenerate_margin         {}", table.degenerate_margin);
                match table.beta_r_interval {
                    Some((lo, hi)) => println!("beta_r_interval           ({lo:.6}, {hi:.6})"),
                    None => println!("beta_r_interval           empty"),
                }
                println!("min_encap_radius          {:.6}", table.min_encap_radius);
                if let Some(c) = table.ring_capacity {
                    println!("ring_capacity             {} ({:.6})", c.floor, c.real);
                }
                if let Some(c) = table.random_capacity_inner {
                    println!("inner_ring_capacity       {} ({:.6})", c.floor, c.real);
                }
                if let Some(l) = table.lambda_random {
                    println!("lambda_random             {l:.6}");
                }
                println!("cone_efficiency           {:.6}", table.cone_efficiency);
                for (j, t) in table.targets.iter().enumerate() {
                    println!("target {j}");
                    println!("  escape_radius           {:.6}", t.escape_radius);
                    if let Some(a) = t.alpha {
                        println!("  alpha                   {a:.6}");
                    }
                    if let Some(l) = &t.lambda_escape {
                        println!("  lambda_escape           {:.6}", l.lambda);
                        println!("  lambda_tangential       {:.6}", l.tangential);
                        println!("  lambda_radial           {:.6}", l.radial);
                        if let Some(d) = &l.diagnostic {
                            println!("  note                    {d}");
                        }
                    }
                    if let Some(l) = &t.lambda_pattern {
                        println!("  lambda_cruise           {:.6}", l.cruise);
                    }
                }
                println!();
                print_report(&report);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_REJECTED)
        }
        Err(Failure::Error(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
