//! Benchmark problems: analytic toy fixtures and time-optimal point-to-point
//! optimal control problems transcribed by multiple shooting.

mod dynamics;
mod ocp;
mod testset;

pub use dynamics::{rk4_next, rk4_step, Dynamics, Rk4Step};
pub use ocp::{
    analytic_min_time, build_p2p_ocp, init_feasible, Obstacle, OcpLayout, OcpSpec, SystemKind, TranscribedOcp,
};
pub use testset::{default_double_integrator_spec, default_pointmass_spec, perturbed_test_set, Lcg, TestSetManifest};

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::model::{FnResidual, StructuredNlp};

/// A small NLP with a known optimum and a feasible starting point.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub nlp: StructuredNlp,
    pub feasible_start: DVector<f64>,
    pub known_optimum: DVector<f64>,
}

/// `min -w1` (or `-w1 - w2` with `w2 - w1 <= 0`) on the unit circle.
pub fn circle_problem(with_inequality: bool) -> Fixture {
    let residual = FnResidual::new(
        |y: &DVector<f64>| DVector::from_element(1, y[0] * y[0] + y[1] * y[1] - 1.0),
        |y: &DVector<f64>| DMatrix::from_row_slice(1, 2, &[2.0 * y[0], 2.0 * y[1]]),
    );
    let (cost, a, b, optimum) = if with_inequality {
        let s = 0.5_f64.sqrt();
        (
            DVector::from_row_slice(&[-1.0, -1.0]),
            DMatrix::from_row_slice(1, 2, &[-1.0, 1.0]),
            DVector::zeros(1),
            DVector::from_row_slice(&[s, s]),
        )
    } else {
        (
            DVector::from_row_slice(&[-1.0, 0.0]),
            DMatrix::zeros(0, 2),
            DVector::zeros(0),
            DVector::from_row_slice(&[1.0, 0.0]),
        )
    };
    let nlp = StructuredNlp::new(cost, DMatrix::zeros(1, 2), a, b, vec![0, 1], Arc::new(residual))
        .expect("circle fixture is well formed");
    let feasible_start = if with_inequality {
        // (0, 1) violates w2 <= w1; start on the circle below the diagonal
        DVector::from_row_slice(&[1.0, 0.0])
    } else {
        DVector::from_row_slice(&[0.0, 1.0])
    };
    Fixture {
        nlp,
        feasible_start,
        known_optimum: optimum,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{classify_solution, infeasibility, Classification, EvalCounters};

    #[test]
    fn circle_fixtures() {
        let mut cnt = EvalCounters::new();
        let plain = circle_problem(false);
        assert_eq!(infeasibility(&plain.nlp, &plain.feasible_start, &mut cnt).unwrap(), 0.0);
        assert_eq!(
            classify_solution(&plain.nlp, &plain.known_optimum, 1e-8, &mut cnt).unwrap(),
            Classification::UnderDetermined
        );
        let ineq = circle_problem(true);
        assert_eq!(infeasibility(&ineq.nlp, &ineq.feasible_start, &mut cnt).unwrap(), 0.0);
        assert_eq!(
            classify_solution(&ineq.nlp, &ineq.known_optimum, 1e-8, &mut cnt).unwrap(),
            Classification::FullyDetermined
        );
    }
}
