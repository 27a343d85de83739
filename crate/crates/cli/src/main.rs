//! `lure`: simulate, audit and inspect forced Lur'e systems.
//!
//! `--system` takes a TOML system file or a catalog name such as `ex3d` or
//! `ex4c:h=1`. Relative `--out` paths are resolved against `LURE_OUTPUT_DIR`
//! when it is set.
//!
//! Exit codes: 0 success (early termination included), 1 runtime or i/o
//! failure, 2 configuration error, 3 no output solution at the initial time.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lure_core::analyzer::analyze;
use lure_core::catalog::{self, verify_example, VerifyOptions};
use lure_core::config::{load_config, SystemConfig};
use lure_core::inclusion::{compute_fibre, simulate_inclusion, FibreMode, InclusionMethod, InclusionOptions, SelectionPolicy};
use lure_core::integrator::{refine_escape_time, simulate, Method, SimOptions, Termination, TrajectoryRecord};
use lure_core::io::{fibre_view, to_json, write_csv_file, write_json_file};
use lure_core::Error;

const OUTPUT_DIR_VAR: &str = "LURE_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "lure", version, about = "Simulation and well-posedness audits for Lur'e systems with feedthrough")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a system and write a CSV trajectory plus a JSON summary.
    Simulate(SimulateArgs),
    /// Audit the well-posedness hypotheses and report applicable theorems.
    Analyze(AnalyzeArgs),
    /// Print the fibre F_t^{-1}(w) as JSON.
    Fibre(FibreArgs),
    /// Show, export or verify catalog examples.
    Example(ExampleArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    system: String,
    /// Comma-separated initial state.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tmax: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// rk4 or rk45.
    #[arg(long)]
    method: Option<Method>,
    /// CSV path; the summary goes next to it with a `.json` extension.
    #[arg(long)]
    out: PathBuf,
    /// Integrate the differential inclusion through a selection policy.
    #[arg(long)]
    inclusion: bool,
    /// nearest_previous, min_norm, max_norm, fixed_branch(k) or segment_parameter(s).
    #[arg(long, requires = "inclusion")]
    policy: Option<SelectionPolicy>,
    /// Policy after the first sample; defaults to `--policy`.
    #[arg(long, requires = "inclusion")]
    continuation: Option<SelectionPolicy>,
    /// backward_euler, forward_euler or runge_kutta.
    #[arg(long, requires = "inclusion")]
    inclusion_method: Option<InclusionMethod>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    system: String,
    /// Time window `a:b`.
    #[arg(long, allow_hyphen_values = true)]
    twindow: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FibreArgs {
    #[arg(long)]
    system: String,
    #[arg(long, allow_hyphen_values = true)]
    t: f64,
    /// Comma-separated target.
    #[arg(long, allow_hyphen_values = true)]
    w: String,
    /// Seed of the multistart search for non-piecewise systems.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ExampleArgs {
    /// Catalog name, optionally with parameters (`ex4c:h=1`).
    #[arg(required_unless_present = "list")]
    name: Option<String>,
    /// Simulate against the reference and compare analyzer verdicts.
    #[arg(long)]
    verify: bool,
    /// List the catalog.
    #[arg(long, conflicts_with_all = ["name", "verify"])]
    list: bool,
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Dimension { .. } | Error::Parse(_) | Error::Usage(_) => 2,
            Error::Evaluation { .. } | Error::Io(_) => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Analyze(a) => run_analyze(a),
        Command::Fibre(a) => run_fibre(a),
        Command::Example(a) => run_example(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("lure: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_system(spec: &str) -> Result<SystemConfig, Error> {
    let path = Path::new(spec);
    if path.is_file() {
        return load_config(path);
    }
    match catalog::build_example(spec) {
        Ok(entry) => Ok(SystemConfig::from_entry(&entry)),
        Err(_) if path.extension().is_some() || spec.contains('/') => {
            Err(Error::Config(format!("cannot read system file '{spec}'")))
        }
        Err(e) => Err(Error::Config(format!("'{spec}' is neither a file nor a catalog entry ({e})"))),
    }
}

fn parse_vector(name: &str, text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("--{name}: '{}' is not a number", s.trim())))
        })
        .collect()
}

fn output_path(p: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_DIR_VAR) {
        Some(dir) if p.is_relative() && !dir.is_empty() => Path::new(&dir).join(p),
        _ => p.to_path_buf(),
    }
}

fn run_simulate(a: SimulateArgs) -> CmdResult {
    let cfg = load_system(&a.system)?;
    let sys = cfg.system()?;
    let dims = sys.matrices.dims();
    let x0 = match &a.x0 {
        Some(s) => parse_vector("x0", s)?,
        None => cfg.x0()?,
    };
    if x0.len() != dims.n {
        return Err(Error::Config(format!("--x0 has {} entries, the state has {}", x0.len(), dims.n)).into());
    }
    let d = &cfg.defaults;
    let t0 = a.t0.unwrap_or(d.t0);
    let sim = SimOptions {
        method: a.method.unwrap_or(d.method),
        dt: a.dt.unwrap_or(d.dt),
        tmax: a.tmax.unwrap_or(d.tmax),
        solver: cfg.solver.clone().unwrap_or_default(),
        ..SimOptions::default()
    };
    sim.validate()?;

    let csv = output_path(&a.out);
    let summary_path = csv.with_extension("json");
    if summary_path == csv {
        return Err(Error::Config("--out must not have a .json extension".into()).into());
    }

    let (rec, inclusion) = if a.inclusion {
        let policy = a.policy.clone().unwrap_or(SelectionPolicy::NearestPrevious);
        let opts = InclusionOptions {
            method: a.inclusion_method.unwrap_or_default(),
            fibre_mode: FibreMode::Local,
            continuation: a.continuation.clone(),
            sim: sim.clone(),
            ..InclusionOptions::default()
        };
        let rec = simulate_inclusion(&sys, t0, &x0, &policy, &opts)?;
        let info = json!({
            "policy": policy,
            "continuation": opts.continuation.as_ref().unwrap_or(&policy),
            "method": opts.method,
        });
        (rec, Some(info))
    } else {
        (simulate(&sys, t0, &x0, &sim)?, None)
    };

    let escape = match rec.termination {
        Termination::BlowUp { .. } => refine_escape_time(&rec, &sys, &sim).ok(),
        _ => None,
    };
    let failed_at_start = rec.is_empty() && matches!(rec.termination, Termination::NoOutputSolution { .. });

    write_csv_file(&csv, &rec, dims)?;
    let summary = json!({
        "system": cfg.name.as_deref().unwrap_or(&a.system),
        "dims": { "n": dims.n, "m": dims.m, "me": dims.me, "p": dims.p },
        "t0": t0,
        "tmax": sim.tmax,
        "dt": sim.dt,
        "method": sim.method,
        "x0": x0,
        "inclusion": inclusion,
        "csv": csv.file_name().map(|s| s.to_string_lossy().into_owned()),
        "started": !failed_at_start,
        "summary": rec.summary(),
        "escape_time": escape,
    });
    write_json_file(&summary_path, &summary)?;
    print_run(&rec, &csv, &summary_path);

    if failed_at_start {
        eprintln!("lure: the output equation has no solution at t0 = {t0}");
        return Ok(3);
    }
    Ok(0)
}

fn print_run(rec: &TrajectoryRecord<f64>, csv: &Path, summary: &Path) {
    let s = rec.summary();
    let end = match &s.termination {
        Termination::ReachedTmax => "reached tmax".to_string(),
        Termination::NoOutputSolution { t, bracket } => {
            format!("no output solution after t = {t} (event in [{}, {}])", bracket[0], bracket[1])
        }
        Termination::BlowUp { t } => format!("blow-up at t = {t}"),
        Termination::StepCollapse { t } => format!("step collapse at t = {t}"),
    };
    println!("termination: {end}");
    println!("samples: {}", s.samples);
    println!("wrote {} and {}", csv.display(), summary.display());
}

fn parse_window(s: &str) -> Result<[f64; 2], Error> {
    let bad = || Error::Config(format!("--twindow expects a:b, got '{s}'"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok([a, b])
}

fn run_analyze(a: AnalyzeArgs) -> CmdResult {
    let cfg = load_system(&a.system)?;
    let sys = cfg.system()?;
    let mut opts = cfg.analyzer.clone().unwrap_or_default();
    if let Some(w) = &a.twindow {
        opts.grid.t_window = parse_window(w)?;
    }
    if let Some(seed) = a.seed {
        opts.grid.seed = seed;
    }
    let report = analyze(&sys, &opts)?;
    println!("{report}");
    if let Some(out) = &a.out {
        let path = output_path(out);
        let doc = json!({
            "system": cfg.name.as_deref().unwrap_or(&a.system),
            "t_window": opts.grid.t_window,
            "seed": opts.grid.seed,
            "report": report,
        });
        write_json_file(&path, &doc)?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn run_fibre(a: FibreArgs) -> CmdResult {
    let cfg = load_system(&a.system)?;
    let sys = cfg.system()?;
    let w = parse_vector("w", &a.w)?;
    let p = sys.matrices.dims().p;
    if w.len() != p {
        return Err(Error::Config(format!("--w has {} entries, the output has {p}", w.len())).into());
    }
    let mut solver = cfg.solver.clone().unwrap_or_default();
    if let Some(seed) = a.seed {
        solver.seed = seed;
    }
    let zero = vec![0.0; p];
    let fibre = compute_fibre(sys.matrices.d(), &sys.nonlinearity, a.t, &w, &zero, FibreMode::Multistart, &solver)?;
    print!("{}", to_json(&fibre_view(a.t, &w, &fibre))?);
    Ok(0)
}

fn run_example(a: ExampleArgs) -> CmdResult {
    if a.list {
        for (name, description) in catalog::list() {
            println!("{name:<8} {description}");
        }
        return Ok(0);
    }
    let name = a.name.as_deref().unwrap_or_default();
    if a.verify {
        let report = verify_example(name, &VerifyOptions::default())?;
        println!("{report}");
        return Ok(if report.passed() { 0 } else { 1 });
    }
    let entry = catalog::build_example(name)?;
    println!("# {}", entry.description);
    print!("{}", SystemConfig::from_entry(&entry).to_toml()?);
    Ok(0)
}
