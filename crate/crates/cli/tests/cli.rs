use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fslp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fslp")).args(args).output().unwrap()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn solve_circle_writes_report_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = fslp(&[
        "solve",
        "--problem",
        "circle",
        "--accel",
        "none",
        "--delta0",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "Optimal");
    assert!((report["objective"].as_f64().unwrap() + 1.0).abs() < 1e-5);
    assert_eq!(
        header(&out.join("outer.csv")),
        "k,objective,h,delta,model_decrease,inner_status,inner_iters,accepted,rho,proj_ratio"
    );
    assert_eq!(
        header(&out.join("inner.csv")),
        "outer_iter,inner_iter,h,dist_to_wbar,dist_to_what,gamma_inf_norm,memory_cols,clipped"
    );
    // first inner row of the first outer iteration is the LP solution (0.25, 1)
    let inner = fs::read_to_string(out.join("inner.csv")).unwrap();
    let row: Vec<&str> = inner.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "6.2500000000000000e-2");
}

#[test]
fn anderson_variant_records_weights() {
    let dir = tempfile::tempdir().unwrap();
    let o = fslp(&[
        "solve",
        "--problem",
        "circle",
        "--accel",
        "aa:1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let inner = fs::read_to_string(dir.path().join("inner.csv")).unwrap();
    let nonzero_gamma = inner.lines().skip(1).any(|l| {
        let g: f64 = l.split(',').nth(5).unwrap().parse().unwrap();
        g != 0.0
    });
    assert!(nonzero_gamma);
}

#[test]
fn malformed_spec_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"N\": 3").unwrap();
    let o = fslp(&[
        "solve",
        "--spec",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(fslp(&["solve", "--problem", "nope"]).status.code(), Some(1));
    assert_eq!(fslp(&["solve", "--accel", "aa0"]).status.code(), Some(1));
    assert_eq!(fslp(&["solve", "--sigma-inner", "0.1"]).status.code(), Some(1));
    assert_eq!(fslp(&["bench", "--count", "0"]).status.code(), Some(1));
    assert_eq!(fslp(&["bench", "--suite", "scara"]).status.code(), Some(1));
    assert_eq!(fslp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fslp(&["--help"]).status.code(), Some(0));
}

#[test]
fn iteration_cap_is_a_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = fslp(&[
        "solve",
        "--problem",
        "circle",
        "--max-outer",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "MaxIter");
}

#[test]
fn spec_file_and_lp_dump() {
    let dir = tempfile::tempdir().unwrap();
    let spec = serde_json::json!({
        "N": 11, "system": "DoubleIntegrator1D",
        "x_start": [0.0, 0.0], "x_end": [1.0, 0.0],
        "u_min": [-1.0], "u_max": [1.0],
        "x_min": [-2.0, -2.0], "x_max": [2.0, 2.0],
        "mu0": [100.0, 100.0], "muN": [100.0, 100.0],
        "T_bounds": [0.1, 10.0]
    });
    let spec_path = dir.path().join("spec.json");
    fs::write(&spec_path, spec.to_string()).unwrap();
    let dump = dir.path().join("lp.hex");
    let o = fslp(&[
        "solve",
        "--spec",
        spec_path.to_str().unwrap(),
        "--accel",
        "aa5",
        "--dump-lp",
        dump.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lp = fslp::lp::read_hex_dump(std::io::BufReader::new(fs::File::open(&dump).unwrap())).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(lp.n_vars(), report["w_star"].as_array().unwrap().len());
    assert!(lp.n_vars() > 12 * 2 + 11);
    assert_eq!(report["acceleration"], "aa:5");
}

#[test]
fn config_file_overrides_solver_settings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"solver": {"max_outer": 1}}"#).unwrap();
    let o = fslp(&[
        "solve",
        "--problem",
        "circle",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    fs::write(&cfg, r#"{"solver": {"max_outer": 1}, "typo": 1}"#).unwrap();
    let o = fslp(&["solve", "--problem", "circle", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_is_deterministic_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = fslp(&[
            "bench",
            "--suite",
            "pointmass2d-free",
            "--count",
            "3",
            "--seed",
            "5",
            "--accels",
            "none,aa1,aa5,aa15",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        out
    };
    let (a, b) = (run("a"), run("b"));
    let table = fs::read_to_string(a.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
    assert_eq!(
        table.lines().next().unwrap(),
        "variant,mean_n_con,mean_n_iter,mean_wall_seconds,success_count,problem_count"
    );
    let strip = |p: &Path, wall_col: &str| -> Vec<String> {
        let text = fs::read_to_string(p).unwrap();
        let cols: Vec<&str> = text.lines().next().unwrap().split(',').collect();
        let wall = cols.iter().position(|c| *c == wall_col).unwrap();
        text.lines()
            .map(|l| {
                l.split(',')
                    .enumerate()
                    .filter(|(i, _)| *i != wall)
                    .map(|(_, f)| f)
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect()
    };
    assert_eq!(
        strip(&a.join("table.csv"), "mean_wall_seconds"),
        strip(&b.join("table.csv"), "mean_wall_seconds")
    );
    assert_eq!(
        strip(&a.join("long.csv"), "wall_seconds"),
        strip(&b.join("long.csv"), "wall_seconds")
    );
    assert_eq!(
        fs::read(a.join("manifest.json")).unwrap(),
        fs::read(b.join("manifest.json")).unwrap()
    );
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["problems"].as_array().unwrap().len(), 3);
}

#[test]
fn trace_rates_emits_inner_and_outer_curves() {
    let dir = tempfile::tempdir().unwrap();
    let o = fslp(&[
        "trace-rates",
        "--problem",
        "circle",
        "--accels",
        "none,aa1,aa5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "curve,problem,variant,label,classification,index,value,status"
    );
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    for variant in ["none", "aa:1", "aa:5"] {
        assert!(rows.iter().any(|r| r[0] == "inner_error" && r[2] == variant));
        for problem in ["circle", "circle-ineq"] {
            assert!(rows
                .iter()
                .any(|r| r[0] == "outer_metric" && r[1] == problem && r[2] == variant));
        }
    }
    // inner curves start at the same LP solution
    let first: Vec<f64> = rows
        .iter()
        .filter(|r| r[0] == "inner_error" && r[5] == "0")
        .map(|r| r[6].parse().unwrap())
        .collect();
    assert_eq!(first.len(), 3);
    assert!(first.iter().all(|v| *v == first[0]));
}
