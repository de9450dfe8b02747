//! `bpswall`: solver runs emitting a CSV profile and a JSON summary.
//!
//! Exit codes: 0 success, 1 validation error, 2 convergence failure, 3 I/O
//! error. Errors are reported on stderr as a JSON object.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

mod config;
mod error;
mod output;
mod runs;

use config::{lattice, load_file, overlay, parse_param};
use error::CliError;
use output::{json_string, write_file};
use runs::*;

#[derive(Parser)]
#[command(name = "bpswall", version, about = "Domain-wall soliton solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct OutputArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving <name>.csv and <name>.json
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Base name of the output files (defaults to the subcommand)
    #[arg(long)]
    name: Option<String>,
    /// Do not echo the summary on stdout
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Abelian Higgs wall from the Higgs phase to the magnetic phase
    AhWall {
        #[command(flatten)]
        args: AhWallArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Abelian Higgs wall with magnetic phases on both sides
    AhLump {
        #[command(flatten)]
        args: AhLumpArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// W-condensate profile
    WCondensate {
        #[command(flatten)]
        args: WCondensateArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// u'' = lambda (e^u - epsilon) from a normalization point
    GeneralLiouville {
        #[command(flatten)]
        args: GeneralLiouvilleArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Jackiw-Pi closed-form solutions (either sign of kappa)
    Jp {
        #[command(flatten)]
        args: JpArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Relativistic Chern-Simons topological wall
    CsWall {
        #[command(flatten)]
        args: CsWallArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Relativistic Chern-Simons lump
    CsLump {
        #[command(flatten)]
        args: CsLumpArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Lump energy as a function of its maximum
    CsEnergyCurve {
        #[command(flatten)]
        args: CsEnergyCurveArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// U(2) wall by weighted-space minimization
    U2Wall {
        #[command(flatten)]
        args: U2WallArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Electroweak wall by constrained minimization
    EwWall {
        #[command(flatten)]
        args: EwWallArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Residual, refinement and gradient checks for every system
    Verify {
        #[command(flatten)]
        args: VerifyArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Runs a subcommand over a parameter lattice
    Sweep {
        /// Subcommand run at every lattice point
        #[arg(long)]
        over: String,
        /// key=v1,v2,... (repeat for a product lattice)
        #[arg(long = "param")]
        params: Vec<String>,
        /// Worker threads (defaults to all cores)
        #[arg(long)]
        jobs: Option<usize>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", json_string(&e.to_json()).trim_end());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Validation(e.to_string().trim_end().to_string())),
    };
    let (name, flags, out) = match cli.command {
        Command::AhWall { args, out } => ("ah-wall", to_value(&args), out),
        Command::AhLump { args, out } => ("ah-lump", to_value(&args), out),
        Command::WCondensate { args, out } => ("w-condensate", to_value(&args), out),
        Command::GeneralLiouville { args, out } => ("general-liouville", to_value(&args), out),
        Command::Jp { args, out } => ("jp", to_value(&args), out),
        Command::CsWall { args, out } => ("cs-wall", to_value(&args), out),
        Command::CsLump { args, out } => ("cs-lump", to_value(&args), out),
        Command::CsEnergyCurve { args, out } => ("cs-energy-curve", to_value(&args), out),
        Command::U2Wall { args, out } => ("u2-wall", to_value(&args), out),
        Command::EwWall { args, out } => ("ew-wall", to_value(&args), out),
        Command::Verify { args, out } => ("verify", to_value(&args), out),
        Command::Sweep { over, params, jobs, out } => {
            return match sweep(&over, &params, jobs, &out) {
                Ok(code) => ExitCode::from(code as u8),
                Err(e) => fail(&e),
            };
        }
    };
    let result = base_config(name, &out).and_then(|base| single(name, overlay(base, flags), &out, out.name.as_deref().unwrap_or(name)));
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => fail(&e),
    }
}

fn to_value(args: &impl serde::Serialize) -> Value {
    serde_json::to_value(args).expect("flag structs serialize")
}

fn base_config(subcommand: &str, out: &OutputArgs) -> Result<Map<String, Value>, CliError> {
    match &out.config {
        Some(p) => load_file(p, subcommand),
        None => Ok(Map::new()),
    }
}

/// Runs and writes artifacts; returns the deferred failure, if any.
fn single(subcommand: &str, map: Map<String, Value>, out: &OutputArgs, stem: &str) -> Result<Option<CliError>, CliError> {
    let run = run_named(subcommand, map)?;
    if let Some(t) = &run.table {
        write_file(&out.out_dir.join(format!("{stem}.csv")), &t.to_csv())?;
    }
    let text = json_string(&run.summary);
    write_file(&out.out_dir.join(format!("{stem}.json")), &text)?;
    if !out.quiet {
        print!("{text}");
    }
    Ok(run.failure)
}

fn sweep(over: &str, specs: &[String], jobs: Option<usize>, out: &OutputArgs) -> Result<i32, CliError> {
    if !SUBCOMMANDS.contains(&over) {
        return Err(CliError::Validation(format!("cannot sweep `{over}` (one of {})", SUBCOMMANDS.join(", "))));
    }
    let params = specs.iter().map(|s| parse_param(s)).collect::<Result<Vec<_>, _>>()?;
    let base = base_config(over, out)?;
    let points = lattice(&params);
    let stem = out.name.clone().unwrap_or_else(|| "sweep".into());
    let quiet = OutputArgs { quiet: true, ..out.clone() };
    let job = |(k, point): (usize, &Vec<(String, Value)>)| {
        let map = point.iter().fold(base.clone(), |mut m, (key, v)| {
            m.insert(key.clone(), v.clone());
            m
        });
        let run_stem = format!("{stem}_{k:04}");
        let outcome = single(over, map, &quiet, &run_stem);
        let err = match outcome {
            Ok(None) => None,
            Ok(Some(e)) | Err(e) => Some(e),
        };
        json!({
            "index": k,
            "name": run_stem,
            "params": point.iter().cloned().collect::<Map<String, Value>>(),
            "exit_code": err.as_ref().map_or(0, |e| e.exit_code()),
            "error": err.as_ref().map(|e| e.to_string()),
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    let records: Vec<Value> = pool.install(|| points.par_iter().enumerate().map(job).collect());
    let code = records.iter().filter_map(|r| r["exit_code"].as_i64()).max().unwrap_or(0) as i32;
    let index = json!({
        "subcommand": "sweep",
        "config": {
            "over": over,
            "base": base,
            "params": params.iter().map(|(k, v)| (k.clone(), json!(v))).collect::<Map<String, Value>>(),
        },
        "runs": records,
        "exit_code": code,
    });
    let text = json_string(&index);
    write_file(&out.out_dir.join(format!("{stem}.json")), &text)?;
    if !out.quiet {
        print!("{text}");
    }
    Ok(code)
}
