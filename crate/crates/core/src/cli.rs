//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a check fails or a run errors, 2 for
//! usage and configuration errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::analytics::{analyze_json, market_points};
use crate::config::{DemandSource, PartialConfig, RunConfig};
use crate::dynamics::{run, save_trace, write_trace_csv, write_trace_exact_csv};
use crate::error::{Error, Result};
use crate::ingest::{
    fetch_blocks, latest_block, parse_blocks, replay, write_jsonl, BlockFormat, HttpTransport,
};
use crate::number::{exact_string, parse_exact, ExactNumber, Mode, Scalar};
use crate::repro::{render, repro_rows};
use crate::strategic::{equilibrium_gap, value_grid, write_regret_csv, ManipulationFn};
use crate::verify::{sweep, verify_run};

#[derive(Debug, Parser)]
#[command(
    name = "serial-monopoly",
    version,
    about = "Serial-monopoly pricing on piecewise-linear demand"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the market points as JSON.
    Analyze(RunArgs),
    /// Run the dynamics and emit the trace CSV.
    Simulate(RunArgs),
    /// Run every trace check and print the report as JSON.
    Verify {
        #[command(flatten)]
        run: RunArgs,
        /// Also check this many random instances (seeded by --seed).
        #[arg(long, value_name = "N")]
        sweep: Option<usize>,
    },
    /// Run the strategic equilibrium and write trace and regret CSVs.
    Strategic {
        #[command(flatten)]
        run: RunArgs,
        /// `identity`, `clamp` (at p_eq), `clamp(<threshold>)` or `@m.json`.
        #[arg(long, default_value = "clamp")]
        manipulation: String,
        /// Number of grid values scored for regret.
        #[arg(long, default_value_t = 101)]
        values: usize,
    },
    /// Replay per-block bids through the mechanism and print the report.
    Replay {
        /// Block file (JSONL or CSV).
        #[arg(long)]
        input: PathBuf,
        /// Overrides the format inferred from the file extension.
        #[arg(long)]
        format: Option<String>,
        /// Units sold per block.
        #[arg(long)]
        supply: String,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Download blocks over JSON-RPC and write them as JSONL.
    Fetch {
        /// RPC endpoint; defaults to $SM_RPC_URL.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, requires = "to", conflicts_with = "last")]
        from: Option<u64>,
        #[arg(long, requires = "from")]
        to: Option<u64>,
        /// Fetch the most recent N blocks.
        #[arg(long, value_name = "N")]
        last: Option<u64>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the golden reproductions and print a pass/fail table.
    Repro {
        /// Also write the table to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `uniform`, `uniform(a=1,b=1)`, `equal_revenue(H=e^2,nodes=10000)`,
    /// `stepped(M=100,eps=1e-6)`, a JSON breakpoint list or `@curve.json`.
    #[arg(long)]
    demand: Option<String>,
    #[arg(long)]
    supply: Option<String>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write outputs here instead of stdout.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => PartialConfig::from_file(path)?,
            None => PartialConfig::default(),
        };
        let flags = PartialConfig {
            demand: self
                .demand
                .as_deref()
                .map(DemandSource::parse_flag)
                .transpose()?,
            supply: self.supply.as_deref().map(parse_number).transpose()?,
            horizon: self.horizon,
            mode: self.mode,
            seed: self.seed,
            output_dir: self.output_dir.clone(),
        };
        file.merge(flags).finish()
    }
}

fn parse_number(text: &str) -> Result<ExactNumber> {
    parse_exact(text).map_err(|_| Error::Config(format!("not a number: `{text}`")))
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        _ => 1,
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_cli_to(argv, &mut std::io::stdout().lock())
}

/// Like [`run_cli`], with primary output sent to `out`.
pub fn run_cli_to<I, T>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Analyze(args) => analyze(&args.resolve()?, out),
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            match cfg.mode {
                Mode::Exact => simulate::<ExactNumber>(&cfg, out),
                Mode::Float => simulate::<f64>(&cfg, out),
            }
        }
        Command::Verify { run, sweep } => verify(&run.resolve()?, sweep, out),
        Command::Strategic {
            run,
            manipulation,
            values,
        } => strategic(&run.resolve()?, &manipulation, values, out),
        Command::Replay {
            input,
            format,
            supply,
            output_dir,
        } => replay_cmd(
            &input,
            format.as_deref(),
            &supply,
            output_dir.as_deref(),
            out,
        ),
        Command::Fetch {
            endpoint,
            from,
            to,
            last,
            out: path,
        } => fetch(endpoint, from.zip(to), last, path.as_deref(), out),
        Command::Repro { out: path } => {
            let rows = repro_rows();
            let table = render(&rows);
            out.write_all(table.as_bytes())?;
            if let Some(path) = path {
                fs::write(path, &table)?;
            }
            Ok(if rows.iter().all(|r| r.pass) { 0 } else { 1 })
        }
    }
}

fn output_dir(cfg: &RunConfig) -> Result<Option<&Path>> {
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir)?;
    }
    Ok(cfg.output_dir.as_deref())
}

fn emit_json(value: &Value, dir: Option<&Path>, name: &str, out: &mut dyn Write) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    if let Some(dir) = dir {
        let path = dir.join(name);
        fs::write(&path, &text)?;
        eprintln!("wrote {}", path.display());
    } else {
        out.write_all(text.as_bytes())?;
    }
    Ok(())
}

fn analyze(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let points = market_points(&cfg.demand.curve()?, &cfg.supply)?;
    emit_json(
        &analyze_json(&points),
        output_dir(cfg)?,
        "analyze.json",
        out,
    )?;
    Ok(0)
}

fn simulate<S: Scalar>(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let trace = run::<S>(&cfg.demand.curve()?, &cfg.supply, cfg.horizon)?;
    for w in trace.final_state.warnings() {
        eprintln!("warning: {w}");
    }
    match output_dir(cfg)? {
        Some(dir) => {
            for path in save_trace(&trace.records, &dir.join("trace.csv"))? {
                eprintln!("wrote {}", path.display());
            }
        }
        None if S::MODE == Mode::Exact => write_trace_exact_csv(&trace.records, out)?,
        None => write_trace_csv(&trace.records, out)?,
    }
    Ok(0)
}

fn verify(cfg: &RunConfig, sweep_count: Option<usize>, out: &mut dyn Write) -> Result<i32> {
    let q = cfg.demand.curve()?;
    let report = match cfg.mode {
        Mode::Exact => verify_run::<ExactNumber>(&q, &cfg.supply, cfg.horizon)?,
        Mode::Float => verify_run::<f64>(&q, &cfg.supply, cfg.horizon)?,
    };
    let mut ok = report.ok();
    let mut value = serde_json::to_value(&report)?;
    value["ok"] = json!(ok);
    if let Some(count) = sweep_count {
        let outcomes = sweep(count, cfg.horizon, cfg.seed)?;
        let failing: Vec<_> = outcomes.iter().filter(|o| !o.failures.is_empty()).collect();
        ok &= failing.is_empty();
        value["ok"] = json!(ok);
        value["sweep"] = json!({
            "instances": count,
            "seed": cfg.seed,
            "failing": failing,
        });
    }
    emit_json(&value, output_dir(cfg)?, "verify.json", out)?;
    Ok(if ok { 0 } else { 1 })
}

fn parse_manipulation(text: &str) -> Result<Option<ManipulationFn>> {
    let text = text.trim();
    if let Some(path) = text.strip_prefix('@') {
        let m: ManipulationFn = serde_json::from_str(&fs::read_to_string(path)?)?;
        m.validate()?;
        return Ok(Some(m));
    }
    match text {
        "identity" => Ok(Some(ManipulationFn::Identity)),
        "clamp" => Ok(None),
        _ => {
            let threshold = text
                .strip_prefix("clamp(")
                .and_then(|r| r.strip_suffix(')'))
                .ok_or_else(|| Error::Config(format!("unknown manipulation `{text}`")))?;
            Ok(Some(ManipulationFn::clamp(parse_number(threshold)?)))
        }
    }
}

fn strategic(
    cfg: &RunConfig,
    manipulation: &str,
    values: usize,
    out: &mut dyn Write,
) -> Result<i32> {
    if cfg.mode != Mode::Exact {
        return Err(Error::Config("strategic runs in exact mode only".into()));
    }
    let m = parse_manipulation(manipulation)?;
    let q = cfg.demand.curve()?;
    let grid = value_grid(&q.support_end(), values);
    let gap = equilibrium_gap(&q, &cfg.supply, cfg.horizon, &grid, m)?;
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let mut files = save_trace(&gap.trace.records, &dir.join("equilibrium.csv"))?;
    let regret = dir.join("regret.csv");
    write_regret_csv(&gap.rows, File::create(&regret)?, false)?;
    let regret_exact = dir.join("regret.exact.csv");
    write_regret_csv(&gap.rows, File::create(&regret_exact)?, true)?;
    files.extend([regret, regret_exact]);
    let summary = json!({
        "manipulation": gap.manipulation,
        "horizon": cfg.horizon,
        "values": values,
        "max_regret": { "exact": exact_string(&gap.max_regret), "decimal": crate::number::decimal17(&gap.max_regret) },
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "caveats": gap.caveats,
    });
    out.write_all((serde_json::to_string_pretty(&summary)? + "\n").as_bytes())?;
    Ok(0)
}

fn replay_cmd(
    input: &Path,
    format: Option<&str>,
    supply: &str,
    dir: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let format = match format {
        Some(f) => f.parse()?,
        None => BlockFormat::from_path(input)?,
    };
    let supply = parse_number(supply)?;
    let batches = parse_blocks(input, format)?;
    let (trace, report) = replay(&batches, &supply)?;
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
        for path in save_trace(&trace.records, &dir.join("replay.csv"))? {
            eprintln!("wrote {}", path.display());
        }
    }
    emit_json(&report.to_json(), dir, "replay.json", out)?;
    Ok(if report.conservation_holds { 0 } else { 1 })
}

fn fetch(
    endpoint: Option<String>,
    range: Option<(u64, u64)>,
    last: Option<u64>,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let rpc = match endpoint {
        Some(url) => HttpTransport::new(url),
        None => HttpTransport::from_env()?,
    };
    let (first, to) = match (range, last) {
        (Some(r), _) => r,
        (None, Some(n)) if n > 0 => {
            let head = latest_block(&rpc)?;
            (head.saturating_sub(n - 1), head)
        }
        _ => return Err(Error::Config("give --from and --to, or --last N".into())),
    };
    let batches = fetch_blocks(&rpc, first, to)?;
    match path {
        Some(path) => {
            write_jsonl(&batches, File::create(path)?)?;
            eprintln!("wrote {} blocks to {}", batches.len(), path.display());
        }
        None => write_jsonl(&batches, out)?,
    }
    Ok(0)
}
