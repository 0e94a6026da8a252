use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use fslp::bench::{
    inner_error_curves, named_problem, ocp_instance, outer_metric_curves, rate_problem_family, run_bench,
    write_bench_outputs, write_rates_csv, BenchOptions, ProblemInstance, Suite, DEFAULT_MAGNITUDE,
};
use fslp::export::write_solve_outputs;
use fslp::lp::{build_lp, write_hex_dump};
use fslp::model::{EvalCounters, JacobianSnapshot};
use fslp::outer::{solve, Acceleration, FslpConfig};
use fslp::{FslpError, OcpSpec};

const SOLVE_HELP: &str = "\
Outputs in --out:
  report.json  status, objective, counters, w_star, outer trace
  outer.csv    k,objective,h,delta,model_decrease,inner_status,inner_iters,accepted,rho,proj_ratio
  inner.csv    outer_iter,inner_iter,h,dist_to_wbar,dist_to_what,gamma_inf_norm,memory_cols,clipped

Exit codes: 0 optimal, 1 usage or configuration error, 2 solver did not reach optimality.";

const BENCH_HELP: &str = "\
Outputs in --out:
  table.csv      variant,mean_n_con,mean_n_iter,mean_wall_seconds,success_count,problem_count
  long.csv       problem,variant,label,status,n_con,n_jac,n_lp,n_iter,n_accepted,objective,final_time,
                 max_accepted_h,max_accepted_ratio,wall_seconds
  manifest.json  seed, generator and every perturbed problem

Means in table.csv are over successful solves. Only the wall-time columns vary between runs.";

const RATES_HELP: &str = "\
Output in --out:
  rates.csv  curve,problem,variant,label,classification,index,value,status

curve=inner_error: ||w_l - w_ref|| over the inner iterations of the first outer iteration.
curve=outer_metric: |m_k| per outer iteration, with the classification of the final point.";

#[derive(Parser, Debug)]
#[command(
    name = "fslp",
    version,
    about = "Feasible SLP with Anderson-accelerated feasibility iterations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem and write its report and traces.
    #[command(after_help = SOLVE_HELP)]
    Solve(SolveArgs),
    /// Solve a perturbed test set with several variants and tabulate the results.
    #[command(after_help = BENCH_HELP)]
    Bench(BenchArgs),
    /// Emit inner and outer convergence curves.
    #[command(name = "trace-rates", after_help = RATES_HELP)]
    TraceRates(RatesArgs),
}

#[derive(Args, Debug, Clone)]
struct SolverFlags {
    /// Initial trust-region radius.
    #[arg(long)]
    delta0: Option<f64>,
    /// Feasibility tolerance of the inner iterations.
    #[arg(long = "sigma-inner")]
    sigma_inner: Option<f64>,
    /// Maximum number of outer iterations.
    #[arg(long = "max-outer")]
    max_outer: Option<usize>,
    /// JSON file with optional "solver" (solver settings), "spec" (OCP) and
    /// "init" ({"u_const": [...], "t0": ...}) sections.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Built-in problem: circle, circle-ineq, di1d, pointmass2d, pointmass2d-free.
    #[arg(long, conflicts_with = "spec")]
    problem: Option<String>,
    /// OCP specification (JSON).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// none, aa1, aa5, aa15 or aa:<d>.
    #[arg(long = "accel", visible_alias = "accels", default_value = "none")]
    accel: String,
    #[command(flatten)]
    solver: SolverFlags,
    /// Also write the first trust-region LP as a hex-float dump to this file.
    #[arg(long = "dump-lp")]
    dump_lp: Option<PathBuf>,
    #[arg(long, default_value = "run")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// pointmass2d, pointmass2d-free or di1d.
    #[arg(long, default_value = "pointmass2d")]
    suite: String,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Comma-separated variants.
    #[arg(long, default_value = "none,aa1,aa5,aa15")]
    accels: String,
    /// Half-width of the uniform endpoint perturbations.
    #[arg(long, default_value_t = DEFAULT_MAGNITUDE)]
    magnitude: f64,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long, default_value = "bench")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RatesArgs {
    /// circle, pointmass2d or di1d; the counterpart with the other
    /// determinacy is traced as well where one exists.
    #[arg(long, default_value = "circle")]
    problem: String,
    #[arg(long, default_value = "none,aa1,aa5")]
    accels: String,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long, default_value = "rates")]
    out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    solver: Option<FslpConfig>,
    #[serde(default)]
    spec: Option<OcpSpec>,
    #[serde(default)]
    init: Option<InitSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitSection {
    u_const: Option<Vec<f64>>,
    t0: Option<f64>,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Solver(String),
}

impl From<FslpError> for Failure {
    fn from(e: FslpError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => cmd_bench(args),
        Command::TraceRates(args) => cmd_trace_rates(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_config(path: Option<&Path>) -> Result<ConfigFile, Failure> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn solver_config(flags: &SolverFlags, file: &ConfigFile) -> Result<FslpConfig, Failure> {
    let mut cfg = file.solver.clone().unwrap_or_default();
    if let Some(d) = flags.delta0 {
        cfg.delta0 = d;
        cfg.delta_max = cfg.delta_max.max(d);
    }
    if let Some(s) = flags.sigma_inner {
        cfg.inner.sigma_inner = s;
    }
    if let Some(m) = flags.max_outer {
        cfg.max_outer = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_accels(list: &str) -> Result<Vec<Acceleration>, Failure> {
    let accels = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse::<Acceleration>())
        .collect::<Result<Vec<_>, _>>()?;
    if accels.is_empty() {
        return Err(Failure::Usage("--accels needs at least one variant".into()));
    }
    Ok(accels)
}

fn load_problem(args: &SolveArgs, file: &ConfigFile) -> Result<ProblemInstance, Failure> {
    let init = file.init.as_ref();
    let u_const = init.and_then(|i| i.u_const.as_deref());
    let t0 = init.and_then(|i| i.t0);
    if let Some(path) = &args.spec {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        let spec = OcpSpec::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        return Ok(ocp_instance("spec", &spec, u_const, t0)?);
    }
    if let Some(spec) = &file.spec {
        return Ok(ocp_instance("spec", spec, u_const, t0)?);
    }
    let name = args.problem.as_deref().unwrap_or("circle");
    Ok(named_problem(name)?)
}

fn cmd_solve(args: SolveArgs) -> Result<u8, Failure> {
    let file = read_config(args.solver.config.as_deref())?;
    let mut cfg = solver_config(&args.solver, &file)?;
    cfg.acceleration = args.accel.parse()?;
    cfg.validate()?;
    let problem = load_problem(&args, &file)?;

    if let Some(path) = &args.dump_lp {
        let mut counters = EvalCounters::new();
        let snap = JacobianSnapshot::new(&problem.nlp, &problem.w_init, &mut counters)
            .map_err(|e| Failure::Solver(e.to_string()))?;
        let lp = build_lp(&problem.nlp, &snap, cfg.delta0)?;
        let file = fs::File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        write_hex_dump(&lp, std::io::BufWriter::new(file))?;
    }

    let report = solve(&problem.nlp, &problem.w_init, &cfg).map_err(|e| Failure::Solver(e.to_string()))?;
    write_solve_outputs(&report, &args.out)?;
    println!(
        "{}: {} objective {:.12} outer {} g evals {} ({})",
        problem.name,
        report.status,
        report.objective,
        report.n_outer,
        report.counters.g_evals(),
        cfg.acceleration.label()
    );
    Ok(if report.is_optimal() { 0 } else { 2 })
}

fn cmd_bench(args: BenchArgs) -> Result<u8, Failure> {
    let file = read_config(args.solver.config.as_deref())?;
    let config = solver_config(&args.solver, &file)?;
    let suite: Suite = args.suite.parse()?;
    if args.count == 0 {
        return Err(Failure::Usage("--count must be at least 1".into()));
    }
    let opts = BenchOptions {
        suite,
        count: args.count,
        seed: args.seed,
        magnitude: args.magnitude,
        accels: parse_accels(&args.accels)?,
        config,
    };
    let outcome = run_bench(&opts).map_err(|e| match e {
        FslpError::InvalidConfig(_) | FslpError::InvalidSpec(_) | FslpError::Initialization { .. } => {
            Failure::Usage(e.to_string())
        }
        other => Failure::Solver(other.to_string()),
    })?;
    write_bench_outputs(&outcome, &args.out)?;
    for row in &outcome.table {
        println!(
            "{:8} n_con {:9.2} n_iter {:7.2} solved {}/{}",
            row.variant, row.mean_n_con, row.mean_n_iter, row.success_count, row.problem_count
        );
    }
    Ok(0)
}

fn cmd_trace_rates(args: RatesArgs) -> Result<u8, Failure> {
    let file = read_config(args.solver.config.as_deref())?;
    let cfg = solver_config(&args.solver, &file)?;
    let accels = parse_accels(&args.accels)?;
    let family = rate_problem_family(&args.problem)?;
    let mut points = Vec::new();
    let inner = inner_error_curves(&family[0], &accels, &cfg).map_err(|e| Failure::Solver(e.to_string()))?;
    points.extend(inner);
    for problem in &family {
        let outer = outer_metric_curves(problem, &accels, &cfg).map_err(|e| Failure::Solver(e.to_string()))?;
        points.extend(outer);
    }
    fs::create_dir_all(&args.out).map_err(|e| Failure::Usage(format!("{}: {e}", args.out.display())))?;
    let out = fs::File::create(args.out.join("rates.csv"))
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.out.display())))?;
    write_rates_csv(&points, out)?;
    println!(
        "{} points written to {}",
        points.len(),
        args.out.join("rates.csv").display()
    );
    Ok(0)
}
