mod common;

use fslp::anderson::aa_feasibility_iterations;
use fslp::bench::{aggregate, named_problem, run_bench, write_long_csv, BenchOptions, Suite};
use fslp::inner::{feasibility_iterations, projection_ratio};
use fslp::lp::{build_lp, build_plp, solve_lp, SimplexOptions};
use fslp::model::{infeasibility, zero_order_mismatch};
use fslp::outer::{solve, trust_region_update};
use fslp::problems::{build_p2p_ocp, circle_problem, default_pointmass_spec, init_feasible};
use fslp::{AaConfig, Acceleration, EvalCounters, FslpConfig, InnerConfig, InnerStatus, JacobianSnapshot, LpStatus};
use nalgebra::DVector;
use proptest::prelude::*;

use common::{circle_recursion, is_feasible};

fn circle_snapshot(angle: f64) -> (fslp::problems::Fixture, DVector<f64>, JacobianSnapshot) {
    let fx = circle_problem(false);
    let w_hat = DVector::from_row_slice(&[angle.cos(), angle.sin()]);
    let snap = JacobianSnapshot::new(&fx.nlp, &w_hat, &mut EvalCounters::new()).unwrap();
    (fx, w_hat, snap)
}

#[test]
fn circle_iterates_follow_recursion_for_several_radii() {
    for radius in [0.05, 0.1, 0.25, 0.4] {
        let (fx, w_hat, snap) = circle_snapshot(std::f64::consts::FRAC_PI_2);
        let w_bar = DVector::from_row_slice(&[radius, 1.0]);
        let res = feasibility_iterations(
            &fx.nlp,
            &w_hat,
            &w_bar,
            &snap,
            radius,
            &InnerConfig::default(),
            &mut EvalCounters::new(),
        )
        .unwrap();
        assert_eq!(res.status, InnerStatus::Converged);
        for (w, y) in res.iterates.iter().zip(circle_recursion(radius, res.iterates.len())) {
            assert!((w[1] - y).abs() <= 1e-12, "radius {radius}");
        }
    }
}

#[test]
fn pointmass_solution_reaches_the_target() {
    let p = named_problem("pointmass2d").unwrap();
    let rep = solve(
        &p.nlp,
        &p.w_init,
        &FslpConfig::with_acceleration("aa5".parse().unwrap()),
    )
    .unwrap();
    assert!(rep.is_optimal());
    let layout = p.layout.unwrap();
    let w = rep.w_star();
    let end = layout.state(default_pointmass_spec().horizon);
    let x_end: Vec<f64> = end.map(|i| w[i]).collect();
    for (got, want) in x_end.iter().zip([1.0, 0.5, 0.0, 0.0]) {
        assert!((got - want).abs() <= 1e-6);
    }
}

#[test]
fn bench_table_matches_long_format_recomputation() {
    let accels: Vec<Acceleration> = vec![Acceleration::None, Acceleration::Anderson { depth: 5 }];
    let outcome = run_bench(&BenchOptions::new(Suite::PointMass2DFree, 4, 3, accels.clone())).unwrap();
    let mut buf = Vec::new();
    write_long_csv(&outcome.results, &mut buf).unwrap();
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (v, s, n_con, n_iter) = (col("variant"), col("status"), col("n_con"), col("n_iter"));
    let records: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 8);
    for (row, accel) in aggregate(&outcome.results, &accels).iter().zip(&accels) {
        let ok: Vec<&csv::StringRecord> = records
            .iter()
            .filter(|r| r[v] == accel.to_string() && &r[s] == "Optimal")
            .collect();
        let mean = |c: usize| ok.iter().map(|r| r[c].parse::<f64>().unwrap()).sum::<f64>() / ok.len() as f64;
        assert_eq!(row.success_count, ok.len());
        assert!((row.mean_n_con - mean(n_con)).abs() <= 1e-12);
        assert!((row.mean_n_iter - mean(n_iter)).abs() <= 1e-12);
    }
    assert_eq!(outcome.table, aggregate(&outcome.results, &accels));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mismatch_vanishes_at_the_linearization_point(angle in 0.0f64..std::f64::consts::TAU) {
        let (fx, w_hat, snap) = circle_snapshot(angle);
        let d = zero_order_mismatch(&fx.nlp, &w_hat, &snap, &mut EvalCounters::new()).unwrap();
        prop_assert!(d.amax() == 0.0);
    }

    #[test]
    fn feasible_point_solves_its_own_plp_constraints(angle in 0.0f64..std::f64::consts::TAU, radius in 0.01f64..1.0) {
        let (fx, w_hat, snap) = circle_snapshot(angle);
        let lp = build_plp(&fx.nlp, &snap, &DVector::zeros(1), radius).unwrap();
        prop_assert!(is_feasible(&lp, &w_hat, 1e-12));
        let out = solve_lp(&lp, &SimplexOptions::default()).unwrap();
        prop_assert_eq!(out.status, LpStatus::Optimal);
        prop_assert!(out.objective <= lp.objective(&w_hat) + 1e-12);
    }

    #[test]
    fn inner_iterates_stay_in_the_trust_region(angle in 0.2f64..2.9, radius in 0.02f64..0.3, depth in 1usize..8) {
        let (fx, w_hat, snap) = circle_snapshot(angle);
        let mut cnt = EvalCounters::new();
        let w_bar = solve_lp(&build_lp(&fx.nlp, &snap, radius).unwrap(), &SimplexOptions::default()).unwrap().solution;
        let plain = feasibility_iterations(&fx.nlp, &w_hat, &w_bar, &snap, radius, &InnerConfig::default(), &mut cnt).unwrap();
        let aa = aa_feasibility_iterations(&fx.nlp, &w_hat, &w_bar, &snap, radius, &AaConfig::with_depth(depth), &mut cnt).unwrap();
        for w in plain.iterates.iter().chain(&aa.iterates) {
            prop_assert!((w - &w_hat).amax() <= radius * (1.0 + 1e-12));
        }
        for res in [&plain, &aa] {
            if let Some(w) = &res.w_tilde {
                prop_assert!(infeasibility(&fx.nlp, w, &mut cnt).unwrap() <= 1e-6);
                prop_assert!(projection_ratio(w, &w_bar, &w_hat) < 0.5);
            }
        }
    }

    #[test]
    fn zero_weight_bound_reproduces_plain_iterates(angle in 0.2f64..2.9, radius in 0.02f64..0.3, depth in 1usize..16) {
        let (fx, w_hat, snap) = circle_snapshot(angle);
        let mut cnt = EvalCounters::new();
        let w_bar = solve_lp(&build_lp(&fx.nlp, &snap, radius).unwrap(), &SimplexOptions::default()).unwrap().solution;
        let inner = InnerConfig::default();
        let plain = feasibility_iterations(&fx.nlp, &w_hat, &w_bar, &snap, radius, &inner, &mut cnt).unwrap();
        let cfg = AaConfig { depth, gamma_bound: 0.0, inner, ..AaConfig::default() };
        let aa = aa_feasibility_iterations(&fx.nlp, &w_hat, &w_bar, &snap, radius, &cfg, &mut cnt).unwrap();
        prop_assert_eq!(plain.iterates.len(), aa.iterates.len());
        for (a, b) in plain.iterates.iter().zip(&aa.iterates) {
            prop_assert!((a - b).amax() <= 1e-12);
        }
    }

    #[test]
    fn radius_update_stays_within_limits(rho in -2.0f64..2.0, delta in 1e-6f64..4.0, hit in any::<bool>()) {
        let cfg = FslpConfig::default();
        let next = trust_region_update(rho, delta, hit, &cfg);
        prop_assert!(next > 0.0 && next <= cfg.delta_max.max(delta));
        if rho < cfg.accept_rho {
            prop_assert!(next < delta);
        }
    }

    #[test]
    fn accepted_iterates_are_feasible_on_perturbed_targets(dx in -0.2f64..0.2, dy in -0.2f64..0.2) {
        let mut spec = default_pointmass_spec();
        spec.horizon = 8;
        spec.x_end[0] += dx;
        spec.x_end[1] += dy;
        let ocp = build_p2p_ocp(&spec).unwrap();
        let w0 = init_feasible(&spec, &[0.0, 0.0], 1.0).unwrap();
        let rep = solve(&ocp.nlp, &w0, &FslpConfig::default()).unwrap();
        let mut cnt = EvalCounters::new();
        let mut last = f64::INFINITY;
        for w in &rep.accepted_iterates {
            prop_assert!(infeasibility(&ocp.nlp, w, &mut cnt).unwrap() <= 1e-6);
            let obj = ocp.nlp.objective(w);
            prop_assert!(obj < last);
            last = obj;
        }
    }
}
