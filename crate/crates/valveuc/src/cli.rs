//! Command-line front end: solve, validate, eld, export-mps, and dump-curve.
//!
//! `solve` prints one machine-parseable line of `key=value` pairs
//! (instance, periods, status, lb, ub, error, iterations, wall_s) and
//! optionally writes the solution and trace files. Exit codes: 0 when the
//! solve converged within tolerance, 2 on a time limit, 1 on any error.

use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::cost::BreakpointSet;
use crate::instance::{self, Instance};
use crate::milp;
use crate::refine::{self, Backend, RefineConfig, SolveStatus};

#[derive(Parser)]
#[command(name = "valveuc", version, about = "Unit commitment with valve-point fuel costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a unit commitment instance.
    Solve {
        /// Instance document path.
        instance: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Convert dispatch units to a single-period instance and solve it.
    Eld {
        /// Units-only document path.
        units: PathBuf,
        /// System load in MW.
        #[arg(long)]
        load: f64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Validate an instance document and print the report.
    Validate { instance: PathBuf },
    /// Write the iteration-0 model as free-format MPS.
    ExportMps {
        instance: PathBuf,
        /// Horizon override, tiling or truncating the demand profile.
        #[arg(long)]
        periods: Option<usize>,
        /// Output path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a unit's initial breakpoints as CSV (x, y, is_valve).
    DumpCurve {
        instance: PathBuf,
        /// Unit id to dump.
        #[arg(long)]
        unit: String,
        /// Output path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// Horizon override, tiling or truncating the demand profile.
    #[arg(long)]
    periods: Option<usize>,
    /// Relative gap at which the solve stops.
    #[arg(long, default_value_t = 1e-7)]
    tolerance: f64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Segments per refined interval before doubling.
    #[arg(long, default_value_t = 2)]
    k_initial: u32,
    /// Inner MILP backend.
    #[arg(long, value_parser = ["embedded", "external"], default_value = "embedded")]
    backend: String,
    /// External solver command with {mps} and {sol} placeholders
    /// (falls back to $VALVEUC_SOLVER_CMD).
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Write the per-iteration trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the solution (`u t y p` rows) here.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Zero out wall-clock fields in emitted files so identical runs
    /// produce byte-identical output.
    #[arg(long)]
    deterministic: bool,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I>(argv: I) -> i32
where
    I: IntoIterator<Item = String>,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Solve { instance, solver } => {
            let text = read(&instance)?;
            let mut inst = instance::parse_instance(&text).map_err(|e| e.to_string())?;
            if let Some(n) = solver.periods {
                retarget_horizon(&mut inst, n)?;
            }
            solve_and_report(&instance, &inst, &solver)
        }
        Command::Eld {
            units,
            load,
            solver,
        } => {
            let text = read(&units)?;
            let parsed = instance::parse_units(&text).map_err(|e| e.to_string())?;
            if parsed.is_empty() {
                return Err("units file declares no units".into());
            }
            if load <= 0.0 {
                return Err("--load must be positive".into());
            }
            let inst = instance::eld_to_ucp(&parsed, load);
            solve_and_report(&units, &inst, &solver)
        }
        Command::Validate { instance } => {
            let text = read(&instance)?;
            let inst = instance::parse_instance(&text).map_err(|e| e.to_string())?;
            let report = inst.validate();
            print!("{report}");
            if report.is_ok() {
                println!("ok: {} unit(s), {} period(s)", inst.units.len(), inst.periods);
                Ok(0)
            } else {
                Ok(1)
            }
        }
        Command::ExportMps {
            instance,
            periods,
            output,
        } => {
            let text = read(&instance)?;
            let mut inst = instance::parse_instance(&text).map_err(|e| e.to_string())?;
            if let Some(n) = periods {
                retarget_horizon(&mut inst, n)?;
            }
            let report = inst.validate();
            if !report.is_ok() {
                return Err(format!("instance failed validation:\n{report}"));
            }
            let bps = initial_envelopes(&inst)?;
            let model = milp::build_model(&inst, &bps).map_err(|e| e.to_string())?;
            write_or_print(output.as_deref(), &milp::export_mps(&model))?;
            Ok(0)
        }
        Command::DumpCurve {
            instance,
            unit,
            output,
        } => {
            let text = read(&instance)?;
            let inst = instance::parse_instance(&text).map_err(|e| e.to_string())?;
            let u = inst
                .units
                .iter()
                .find(|u| u.id == unit)
                .ok_or_else(|| format!("no unit with id `{unit}`"))?;
            let bps = BreakpointSet::initial(u).map_err(|e| e.to_string())?;
            write_or_print(output.as_deref(), &bps.to_csv())?;
            Ok(0)
        }
    }
}

fn read(path: &std::path::Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))
}

fn write_or_print(path: Option<&std::path::Path>, text: &str) -> Result<(), String> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| format!("writing {}: {e}", p.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Tiles or truncates the demand and reserve profiles to `n` periods.
fn retarget_horizon(inst: &mut Instance, n: usize) -> Result<(), String> {
    if n == 0 {
        return Err("--periods must be at least 1".into());
    }
    if inst.periods == 0 {
        return Err("instance has no demand profile to tile".into());
    }
    let demand = (0..n).map(|t| inst.demand[t % inst.periods]).collect();
    let reserve = (0..n).map(|t| inst.reserve[t % inst.periods]).collect();
    inst.demand = demand;
    inst.reserve = reserve;
    inst.periods = n;
    Ok(())
}

fn initial_envelopes(inst: &Instance) -> Result<Vec<Vec<BreakpointSet>>, String> {
    inst.units
        .iter()
        .map(|u| {
            BreakpointSet::initial(u)
                .map(|b| vec![b; inst.periods])
                .map_err(|e| e.to_string())
        })
        .collect()
}

fn solve_and_report(
    path: &std::path::Path,
    inst: &Instance,
    args: &SolverArgs,
) -> Result<i32, String> {
    let backend = match args.backend.as_str() {
        "embedded" => Backend::Embedded,
        "external" => {
            let cmd = args
                .solver_cmd
                .clone()
                .or_else(|| std::env::var("VALVEUC_SOLVER_CMD").ok())
                .ok_or("external backend needs --solver-cmd or $VALVEUC_SOLVER_CMD")?;
            Backend::External(cmd)
        }
        other => return Err(format!("unknown backend `{other}`")),
    };
    if args.deterministic && args.time_limit.is_some() {
        eprintln!("warning: a time limit makes runs timing-dependent; byte-identical reruns are not guaranteed");
    }
    let cfg = RefineConfig {
        tolerance: args.tolerance,
        time_limit: args.time_limit.map(Duration::from_secs_f64),
        k_initial: args.k_initial,
        backend,
        ..RefineConfig::default()
    };
    let t0 = std::time::Instant::now();
    let mut result = refine::solve_ucp(inst, &cfg).map_err(|e| e.to_string())?;
    let wall = t0.elapsed();
    if args.deterministic {
        for row in &mut result.trace {
            row.wall_ms = 0;
        }
    }
    println!(
        "instance={} periods={} status={} lb={:.16e} ub={:.16e} error={:.16e} iterations={} wall_s={:.3}",
        path.display(),
        inst.periods,
        match result.status {
            SolveStatus::OptimalWithinTolerance => "optimal",
            SolveStatus::TimeLimit => "time-limit",
        },
        result.lower_bound,
        result.upper_bound,
        result.relative_error,
        result.iterations,
        wall.as_secs_f64(),
    );
    if let Some(p) = &args.trace {
        refine::emit_trace(&result, p).map_err(|e| format!("writing {}: {e}", p.display()))?;
    }
    if let Some(p) = &args.solution {
        std::fs::write(p, refine::format_solution(inst, &result))
            .map_err(|e| format!("writing {}: {e}", p.display()))?;
    }
    Ok(match result.status {
        SolveStatus::OptimalWithinTolerance => 0,
        SolveStatus::TimeLimit => 2,
    })
}
