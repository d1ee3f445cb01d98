use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hmcf::output;
use hmcf::runner::{self, OracleKind, RunError};
use hmcf::{FlowRun, RunConfig};

#[derive(Parser)]
#[command(name = "hmcf", version, about = "Hyperbolic mean curvature flow of convex curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config and write diagnostics, snapshots and a summary.
    Run {
        config: PathBuf,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render the written snapshots to curves.svg.
        #[arg(long)]
        svg: bool,
    },
    /// Convergence table over levels with n and record cadence doubled.
    Refine {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Evaluation time (default: half the coarsest run).
        #[arg(long)]
        at: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Containment check of an inner run against an outer run.
    Compare {
        outer: PathBuf,
        inner: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Dump a radial reference solution as CSV.
    Oracle {
        #[arg(long, value_enum, default_value_t = Kind::Flow)]
        kind: Kind,
        #[arg(long, default_value_t = 1.0)]
        r0: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        r1: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        d: f64,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        /// CSV destination (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every config listed in a file, in parallel (HMCF_WORKERS caps it).
    Sweep {
        list: PathBuf,
        #[arg(long, default_value = "sweep_out")]
        out: PathBuf,
        #[arg(long)]
        svg: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Flow,
    String,
}

fn load(path: &Path) -> Result<RunConfig, RunError> {
    Ok(hmcf::load(path)?)
}

fn load_flow(path: &Path) -> Result<FlowRun, RunError> {
    match load(path)? {
        RunConfig::Flow(f) => Ok(f),
        RunConfig::String(_) => {
            Err(RunError::Precondition(format!("{}: expected a flow config, found a string run", path.display())))
        }
    }
}

fn write(path: &Path, text: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json serializes") + "\n"
}

fn execute(command: Command) -> Result<i32, RunError> {
    match command {
        Command::Run { config, out, svg } => {
            let cfg = load(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output().dir.clone());
            let summary = runner::run(&cfg, &dir, svg)?;
            print!("{}", pretty(&summary.to_json()));
            Ok(summary.exit_code)
        }
        Command::Refine { config, levels, at, out } => {
            let run = load_flow(&config)?;
            let table = runner::refine(&run.flow, levels, at)?;
            let json = pretty(&table.to_json());
            if let Some(dir) = out {
                write(&dir.join("refine.csv"), &table.to_csv())?;
                write(&dir.join("refine.json"), &json)?;
            }
            print!("{json}");
            Ok(0)
        }
        Command::Compare { outer, inner, out } => {
            let (o, i) = (load_flow(&outer)?, load_flow(&inner)?);
            let report = runner::compare(&o.flow, &i.flow)?;
            let json = pretty(&report.to_json());
            if let Some(dir) = out {
                write(&dir.join("containment.json"), &json)?;
            }
            print!("{json}");
            Ok(0)
        }
        Command::Oracle { kind, r0, r1, d, t_end, out } => {
            let kind = match kind {
                Kind::Flow => OracleKind::Flow,
                Kind::String => OracleKind::String,
            };
            let sol = runner::oracle(kind, r0, r1, d, t_end)?;
            let csv = output::oracle_csv(&sol.times, &sol.radius, &sol.rate);
            match out {
                Some(path) => write(&path, &csv)?,
                None => print!("{csv}"),
            }
            match sol.collapse_time {
                Some(t) => eprintln!("collapse_time = {}", output::fmt_num(t)),
                None => eprintln!("no collapse before t = {t_end}"),
            }
            Ok(0)
        }
        Command::Sweep { list, out, svg } => {
            let paths = runner::read_sweep(&list)?;
            let results = runner::sweep(&paths, &out, runner::worker_count(), svg)?;
            let mut code = 0;
            for r in &results {
                let (status, c) = match &r.outcome {
                    Ok(s) => (s.termination.clone(), s.exit_code),
                    Err(e) => (e.to_string(), e.exit_code()),
                };
                println!("{}  {}  {status}", r.digest, r.source.display());
                code = code.max(c);
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
