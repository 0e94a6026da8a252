//! Benchmark sweeps over perturbed test sets and convergence-trace extraction.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{FslpError, Result};
use crate::export::fmt_f64;
use crate::inner::{self, InnerConfig};
use crate::lp::{build_lp, solve_lp, SimplexOptions};
use crate::model::{classify_solution, Classification, EvalCounters, JacobianSnapshot, StructuredNlp};
use crate::outer::{solve, Acceleration, FslpConfig, SolveReport, SolveStatus};
use crate::problems::{
    build_p2p_ocp, circle_problem, default_double_integrator_spec, default_pointmass_spec, init_feasible, OcpLayout,
    OcpSpec, TestSetManifest,
};

/// Default perturbation magnitude of the benchmark suites.
pub const DEFAULT_MAGNITUDE: f64 = 0.01;

/// A problem ready to solve.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub nlp: StructuredNlp,
    pub w_init: DVector<f64>,
    /// Present for transcribed OCPs.
    pub layout: Option<OcpLayout>,
}

impl ProblemInstance {
    /// Final time of an OCP solution, `NaN` for other problems.
    pub fn final_time(&self, w: &[f64]) -> f64 {
        self.layout.as_ref().map_or(f64::NAN, |l| w[l.time()])
    }
}

/// Transcribes `spec` and initializes it from a constant-control rollout.
///
/// Defaults: zero control, `T0 = 1` clamped into the time bounds.
pub fn ocp_instance(name: &str, spec: &OcpSpec, u_const: Option<&[f64]>, t0: Option<f64>) -> Result<ProblemInstance> {
    let ocp = build_p2p_ocp(spec)?;
    let zeros = vec![0.0; spec.system.nu()];
    let u = u_const.unwrap_or(&zeros);
    let t0 = t0.unwrap_or_else(|| 1.0_f64.clamp(spec.t_bounds.0, spec.t_bounds.1));
    let w_init = init_feasible(spec, u, t0)?;
    Ok(ProblemInstance {
        name: name.to_string(),
        nlp: ocp.nlp,
        w_init,
        layout: Some(ocp.layout),
    })
}

/// Built-in problems: `circle`, `circle-ineq`, `di1d`, `pointmass2d`,
/// `pointmass2d-free`.
pub fn named_problem(name: &str) -> Result<ProblemInstance> {
    let fixture = |with_ineq: bool| {
        let fx = circle_problem(with_ineq);
        ProblemInstance {
            name: name.to_string(),
            nlp: fx.nlp,
            w_init: fx.feasible_start,
            layout: None,
        }
    };
    match name {
        "circle" => Ok(fixture(false)),
        "circle-ineq" => Ok(fixture(true)),
        _ => {
            let suite: Suite = name.parse().map_err(|_| {
                FslpError::InvalidConfig(format!(
                    "unknown problem '{name}' (expected circle, circle-ineq, di1d, pointmass2d or pointmass2d-free)"
                ))
            })?;
            ocp_instance(name, &suite.base_spec(), None, None)
        }
    }
}

/// Perturbed benchmark families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Planar move with an active speed ball (under-determined optimum).
    PointMass2D,
    /// The same move without the speed bound.
    PointMass2DFree,
    /// Unit rest-to-rest move on a line.
    DoubleIntegrator1D,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::PointMass2D => "pointmass2d",
            Suite::PointMass2DFree => "pointmass2d-free",
            Suite::DoubleIntegrator1D => "di1d",
        }
    }

    pub fn base_spec(self) -> OcpSpec {
        match self {
            Suite::PointMass2D => default_pointmass_spec(),
            Suite::PointMass2DFree => OcpSpec {
                v_max: None,
                ..default_pointmass_spec()
            },
            Suite::DoubleIntegrator1D => default_double_integrator_spec(),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = FslpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointmass2d" => Ok(Suite::PointMass2D),
            "pointmass2d-free" => Ok(Suite::PointMass2DFree),
            "di1d" => Ok(Suite::DoubleIntegrator1D),
            _ => Err(FslpError::InvalidConfig(format!(
                "unknown suite '{s}' (expected pointmass2d, pointmass2d-free or di1d)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub suite: Suite,
    pub count: usize,
    pub seed: u64,
    pub magnitude: f64,
    pub accels: Vec<Acceleration>,
    /// Base solver settings; `acceleration` is overridden per variant.
    pub config: FslpConfig,
}

impl BenchOptions {
    pub fn new(suite: Suite, count: usize, seed: u64, accels: Vec<Acceleration>) -> Self {
        Self {
            suite,
            count,
            seed,
            magnitude: DEFAULT_MAGNITUDE,
            accels,
            config: FslpConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(FslpError::InvalidConfig("benchmark count must be at least 1".into()));
        }
        if self.accels.is_empty() {
            return Err(FslpError::InvalidConfig(
                "at least one acceleration variant is required".into(),
            ));
        }
        self.config.validate()
    }
}

/// Outcome of one (problem, variant) solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemResult {
    pub problem: usize,
    pub variant: Acceleration,
    pub status: SolveStatus,
    pub n_con: usize,
    pub n_jac: usize,
    pub n_lp: usize,
    pub n_iter: usize,
    pub n_accepted: usize,
    pub objective: f64,
    pub final_time: f64,
    /// Largest `h` over accepted rows (0 when nothing was accepted).
    pub max_accepted_h: f64,
    /// Largest projection ratio over accepted rows.
    pub max_accepted_ratio: f64,
    pub wall_seconds: f64,
}

impl ProblemResult {
    pub fn from_report(problem: usize, instance: &ProblemInstance, report: &SolveReport) -> Self {
        let accepted = report.outer_trace.iter().filter(|r| r.accepted);
        let (max_h, max_ratio) = accepted.fold((0.0_f64, 0.0_f64), |(h, p), r| (h.max(r.h), p.max(r.proj_ratio)));
        Self {
            problem,
            variant: report.acceleration,
            status: report.status,
            n_con: report.counters.g_evals(),
            n_jac: report.counters.jac_evals(),
            n_lp: report.counters.lp_solves(),
            n_iter: report.n_outer,
            n_accepted: report.n_accepted,
            objective: report.objective,
            final_time: instance.final_time(&report.w_star),
            max_accepted_h: max_h,
            max_accepted_ratio: max_ratio,
            wall_seconds: report.wall_seconds,
        }
    }

    pub fn succeeded(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// One table line per variant; means over successful solves only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub variant: String,
    pub mean_n_con: f64,
    pub mean_n_iter: f64,
    pub mean_wall_seconds: f64,
    pub success_count: usize,
    pub problem_count: usize,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub manifest: TestSetManifest,
    /// Sorted by problem id, then by variant order of the options.
    pub results: Vec<ProblemResult>,
    pub table: Vec<BenchmarkRow>,
}

impl BenchOutcome {
    pub fn variant_results(&self, variant: Acceleration) -> Vec<&ProblemResult> {
        self.results.iter().filter(|r| r.variant == variant).collect()
    }
}

/// Generates the test set, then solves every (problem, variant) pair.
///
/// Every problem is transcribed and initialized before the first solve, so
/// generation errors abort without partial results.
pub fn run_bench(opts: &BenchOptions) -> Result<BenchOutcome> {
    opts.validate()?;
    let manifest = TestSetManifest::generate(
        opts.suite.name(),
        &opts.suite.base_spec(),
        opts.count,
        opts.magnitude,
        opts.seed,
    )?;
    let instances = manifest
        .problems
        .iter()
        .enumerate()
        .map(|(i, spec)| ocp_instance(&format!("{}-{i}", opts.suite), spec, None, None))
        .collect::<Result<Vec<_>>>()?;

    let mut results = Vec::with_capacity(instances.len() * opts.accels.len());
    for (i, inst) in instances.iter().enumerate() {
        for &accel in &opts.accels {
            let cfg = FslpConfig {
                acceleration: accel,
                ..opts.config.clone()
            };
            let report = solve(&inst.nlp, &inst.w_init, &cfg)?;
            results.push(ProblemResult::from_report(i, inst, &report));
        }
    }
    let table = aggregate(&results, &opts.accels);
    Ok(BenchOutcome {
        manifest,
        results,
        table,
    })
}

/// Per-variant means over successful solves.
pub fn aggregate(results: &[ProblemResult], accels: &[Acceleration]) -> Vec<BenchmarkRow> {
    accels
        .iter()
        .map(|&accel| {
            let rows: Vec<&ProblemResult> = results.iter().filter(|r| r.variant == accel).collect();
            let ok: Vec<&&ProblemResult> = rows.iter().filter(|r| r.succeeded()).collect();
            let mean = |f: &dyn Fn(&ProblemResult) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                }
            };
            BenchmarkRow {
                variant: accel.label(),
                mean_n_con: mean(&|r| r.n_con as f64),
                mean_n_iter: mean(&|r| r.n_iter as f64),
                mean_wall_seconds: mean(&|r| r.wall_seconds),
                success_count: ok.len(),
                problem_count: rows.len(),
            }
        })
        .collect()
}

pub const TABLE_COLUMNS: [&str; 6] = [
    "variant",
    "mean_n_con",
    "mean_n_iter",
    "mean_wall_seconds",
    "success_count",
    "problem_count",
];

pub const LONG_COLUMNS: [&str; 14] = [
    "problem",
    "variant",
    "label",
    "status",
    "n_con",
    "n_jac",
    "n_lp",
    "n_iter",
    "n_accepted",
    "objective",
    "final_time",
    "max_accepted_h",
    "max_accepted_ratio",
    "wall_seconds",
];

/// Columns excluded from determinism comparisons.
pub const WALL_TIME_COLUMNS: [&str; 2] = ["mean_wall_seconds", "wall_seconds"];

pub fn write_table_csv<W: Write>(rows: &[BenchmarkRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TABLE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.variant.clone(),
            fmt_f64(r.mean_n_con),
            fmt_f64(r.mean_n_iter),
            fmt_f64(r.mean_wall_seconds),
            r.success_count.to_string(),
            r.problem_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_long_csv<W: Write>(results: &[ProblemResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LONG_COLUMNS)?;
    for r in results {
        w.write_record([
            r.problem.to_string(),
            r.variant.to_string(),
            r.variant.label(),
            r.status.to_string(),
            r.n_con.to_string(),
            r.n_jac.to_string(),
            r.n_lp.to_string(),
            r.n_iter.to_string(),
            r.n_accepted.to_string(),
            fmt_f64(r.objective),
            fmt_f64(r.final_time),
            fmt_f64(r.max_accepted_h),
            fmt_f64(r.max_accepted_ratio),
            fmt_f64(r.wall_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `table.csv`, `long.csv` and `manifest.json` into `dir`.
pub fn write_bench_outputs(outcome: &BenchOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_table_csv(&outcome.table, fs::File::create(dir.join("table.csv"))?)?;
    write_long_csv(&outcome.results, fs::File::create(dir.join("long.csv"))?)?;
    fs::write(dir.join("manifest.json"), outcome.manifest.to_json()? + "\n")?;
    Ok(())
}

/// One point of a convergence curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    /// `inner_error` (`||w_l - w_ref||` in the first outer iteration) or
    /// `outer_metric` (`|m_k|`).
    pub curve: &'static str,
    pub problem: String,
    pub variant: Acceleration,
    /// Classifier output at the final point of the solve (outer curves only).
    pub classification: Option<Classification>,
    pub index: usize,
    pub value: f64,
    pub status: String,
}

pub const RATES_COLUMNS: [&str; 8] = [
    "curve",
    "problem",
    "variant",
    "label",
    "classification",
    "index",
    "value",
    "status",
];

/// Inner error curves of the first outer iteration at radius `cfg.delta0`.
///
/// The reference point is the fixed point of the plain iteration, computed
/// with `sigma_inner = 1e-13`; all variants converge to the same point.
pub fn inner_error_curves(
    instance: &ProblemInstance,
    accels: &[Acceleration],
    cfg: &FslpConfig,
) -> Result<Vec<RatePoint>> {
    cfg.validate()?;
    let nlp = &instance.nlp;
    let w_hat = &instance.w_init;
    let mut counters = EvalCounters::new();
    let snap = JacobianSnapshot::new(nlp, w_hat, &mut counters)?;
    let outcome = solve_lp(&build_lp(nlp, &snap, cfg.delta0)?, &SimplexOptions::default())?;
    if !outcome.is_optimal() {
        return Err(FslpError::Precondition(format!(
            "trust-region LP at the initial point is {:?}",
            outcome.status
        )));
    }
    let w_bar = outcome.solution;
    let tight = InnerConfig {
        sigma_inner: 1e-13,
        max_inner: 500,
        ..cfg.inner
    };
    let reference = inner::run(nlp, w_hat, &w_bar, &snap, cfg.delta0, &tight, None, &mut counters)?;
    let w_ref = reference.iterates.last().cloned().unwrap_or_else(|| w_bar.clone());

    let mut points = Vec::new();
    for &accel in accels {
        let variant_cfg = FslpConfig {
            acceleration: accel,
            ..cfg.clone()
        };
        let aa = variant_cfg.aa_config();
        let res = inner::run(
            nlp,
            w_hat,
            &w_bar,
            &snap,
            cfg.delta0,
            &cfg.inner,
            aa.as_ref(),
            &mut counters,
        )?;
        for (l, w) in res.iterates.iter().enumerate() {
            points.push(RatePoint {
                curve: "inner_error",
                problem: instance.name.clone(),
                variant: accel,
                classification: None,
                index: l,
                value: (w - &w_ref).norm(),
                status: res.status.to_string(),
            });
        }
    }
    Ok(points)
}

/// `|m_k|` per outer iteration for each variant.
pub fn outer_metric_curves(
    instance: &ProblemInstance,
    accels: &[Acceleration],
    cfg: &FslpConfig,
) -> Result<Vec<RatePoint>> {
    let mut points = Vec::new();
    for &accel in accels {
        let variant_cfg = FslpConfig {
            acceleration: accel,
            ..cfg.clone()
        };
        let report = solve(&instance.nlp, &instance.w_init, &variant_cfg)?;
        let mut counters = EvalCounters::new();
        let classification =
            classify_solution(&instance.nlp, &report.w_star(), cfg.inner.sigma_inner, &mut counters).ok();
        for (k, m) in report.model_metric().into_iter().enumerate() {
            points.push(RatePoint {
                curve: "outer_metric",
                problem: instance.name.clone(),
                variant: accel,
                classification,
                index: k,
                value: m,
                status: report.status.to_string(),
            });
        }
    }
    Ok(points)
}

/// Problems traced for `name`: the problem itself plus its counterpart with
/// the other determinacy (`circle` and `circle-ineq`, `pointmass2d` and
/// `pointmass2d-free`).
pub fn rate_problem_family(name: &str) -> Result<Vec<ProblemInstance>> {
    let names: &[&str] = match name {
        "circle" | "circle-ineq" => &["circle", "circle-ineq"],
        "pointmass2d" | "pointmass2d-free" => &["pointmass2d", "pointmass2d-free"],
        "di1d" => &["di1d"],
        other => {
            return Err(FslpError::InvalidConfig(format!(
                "unknown problem '{other}' for trace-rates"
            )))
        }
    };
    names.iter().map(|n| named_problem(n)).collect()
}

pub fn write_rates_csv<W: Write>(points: &[RatePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RATES_COLUMNS)?;
    for p in points {
        w.write_record([
            p.curve.to_string(),
            p.problem.clone(),
            p.variant.to_string(),
            p.variant.label(),
            p.classification.map_or_else(|| "none".to_string(), |c| c.to_string()),
            p.index.to_string(),
            fmt_f64(p.value),
            p.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::PointMass2D, Suite::PointMass2DFree, Suite::DoubleIntegrator1D] {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("scara".parse::<Suite>().is_err());
    }

    #[test]
    fn named_problems_start_feasible() {
        for name in ["circle", "circle-ineq", "di1d", "pointmass2d", "pointmass2d-free"] {
            let p = named_problem(name).unwrap();
            let mut cnt = EvalCounters::new();
            assert!(
                crate::model::infeasibility(&p.nlp, &p.w_init, &mut cnt).unwrap() <= 1e-10,
                "{name}"
            );
        }
        assert!(named_problem("nope").is_err());
    }

    #[test]
    fn aggregate_uses_successful_solves_only() {
        let mk = |problem, status, n_con| ProblemResult {
            problem,
            variant: Acceleration::None,
            status,
            n_con,
            n_jac: 1,
            n_lp: 1,
            n_iter: 2,
            n_accepted: 1,
            objective: 0.0,
            final_time: f64::NAN,
            max_accepted_h: 0.0,
            max_accepted_ratio: 0.0,
            wall_seconds: 1.0,
        };
        let rows = aggregate(
            &[
                mk(0, SolveStatus::Optimal, 10),
                mk(1, SolveStatus::MaxIter, 1000),
                mk(2, SolveStatus::Optimal, 20),
            ],
            &[Acceleration::None],
        );
        assert_eq!(rows[0].mean_n_con, 15.0);
        assert_eq!((rows[0].success_count, rows[0].problem_count), (2, 3));
    }

    #[test]
    fn zero_count_is_rejected() {
        let opts = BenchOptions::new(Suite::DoubleIntegrator1D, 0, 1, vec![Acceleration::None]);
        assert!(run_bench(&opts).is_err());
    }

    #[test]
    fn small_bench_shape() {
        let opts = BenchOptions::new(
            Suite::DoubleIntegrator1D,
            2,
            5,
            vec![Acceleration::None, Acceleration::Anderson { depth: 1 }],
        );
        let out = run_bench(&opts).unwrap();
        assert_eq!(out.results.len(), 4);
        assert_eq!(out.table.len(), 2);
        assert_eq!(out.table[1].variant, "AA(1)");
        assert!(out.results.iter().all(|r| r.succeeded()));
        assert!(out.results.iter().all(|r| (r.final_time - 2.0).abs() < 0.05));
    }

    #[test]
    fn circle_inner_curves_start_at_the_lp_step() {
        let p = named_problem("circle").unwrap();
        let accels = [Acceleration::None, Acceleration::Anderson { depth: 1 }];
        let pts = inner_error_curves(&p, &accels, &FslpConfig::default()).unwrap();
        let first: Vec<f64> = pts.iter().filter(|p| p.index == 0).map(|p| p.value).collect();
        assert_eq!(first.len(), 2);
        assert_eq!(first[0], first[1]);
    }
}
