use serde::{Deserialize, Serialize};

use super::ocp::{OcpSpec, SystemKind};
use crate::error::{FslpError, Result};

/// 64-bit linear congruential generator, `state <- a * state + c (mod 2^64)`.
///
/// Floats in `[0, 1)` come from the top 53 bits of the state after advancing.
/// The constants are Knuth's MMIX multiplier and increment, so the sequence is
/// reproducible from any language with wrapping 64-bit arithmetic.
#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub const MULTIPLIER: u64 = 6364136223846793005;
    pub const INCREMENT: u64 = 1442695040888963407;

    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(Self::MULTIPLIER).wrapping_add(Self::INCREMENT);
        self.state
    }

    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[-magnitude, magnitude)`.
    pub fn symmetric(&mut self, magnitude: f64) -> f64 {
        magnitude * (2.0 * self.next_f64() - 1.0)
    }
}

/// Rest-to-rest move over unit distance with `|u| <= 1`, 40 intervals.
pub fn default_double_integrator_spec() -> OcpSpec {
    OcpSpec {
        horizon: 40,
        system: SystemKind::DoubleIntegrator1D,
        x_start: vec![0.0, 0.0],
        x_end: vec![1.0, 0.0],
        u_min: vec![-1.0],
        u_max: vec![1.0],
        x_min: vec![-2.0, -2.0],
        x_max: vec![2.0, 2.0],
        mu0: vec![100.0; 2],
        mu_n: vec![100.0; 2],
        v_max: None,
        u_ball: None,
        obstacle: None,
        t_bounds: (0.1, 10.0),
    }
}

/// Planar diagonal move with a binding speed ball.
pub fn default_pointmass_spec() -> OcpSpec {
    OcpSpec {
        horizon: 20,
        system: SystemKind::PointMass2D,
        x_start: vec![0.0, 0.0, 0.0, 0.0],
        x_end: vec![1.0, 0.5, 0.0, 0.0],
        u_min: vec![-1.0, -1.0],
        u_max: vec![1.0, 1.0],
        x_min: vec![-2.0, -2.0, -2.0, -2.0],
        x_max: vec![2.0, 2.0, 2.0, 2.0],
        mu0: vec![100.0; 4],
        mu_n: vec![100.0; 4],
        v_max: Some(0.6),
        u_ball: None,
        obstacle: None,
        t_bounds: (0.1, 10.0),
    }
}

/// Copies of `spec` with the position components of `x_start` and `x_end`
/// perturbed by independent uniform draws in `[-magnitude, magnitude)`.
///
/// Draw order per problem: start positions, then end positions.
pub fn perturbed_test_set(spec: &OcpSpec, count: usize, magnitude: f64, seed: u64) -> Result<Vec<OcpSpec>> {
    spec.validate()?;
    if !(magnitude >= 0.0 && magnitude.is_finite()) {
        return Err(FslpError::InvalidConfig(format!(
            "perturbation magnitude must be finite and nonnegative, got {magnitude}"
        )));
    }
    let dim = spec.system.dim();
    let mut rng = Lcg::new(seed);
    let mut out = Vec::with_capacity(count);
    for p in 0..count {
        let mut s = spec.clone();
        for i in 0..dim {
            s.x_start[i] += rng.symmetric(magnitude);
        }
        for i in 0..dim {
            s.x_end[i] += rng.symmetric(magnitude);
        }
        s.validate()
            .map_err(|e| FslpError::InvalidSpec(format!("perturbed problem {p}: {e}")))?;
        out.push(s);
    }
    Ok(out)
}

/// Everything needed to regenerate a perturbed test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSetManifest {
    pub suite: String,
    pub seed: u64,
    pub count: usize,
    pub magnitude: f64,
    pub generator: String,
    pub base: OcpSpec,
    pub problems: Vec<OcpSpec>,
}

impl TestSetManifest {
    pub fn generate(suite: &str, base: &OcpSpec, count: usize, magnitude: f64, seed: u64) -> Result<Self> {
        let problems = perturbed_test_set(base, count, magnitude, seed)?;
        Ok(Self {
            suite: suite.to_string(),
            seed,
            count,
            magnitude,
            generator: format!("lcg64 a={} c={} f64=top53bits", Lcg::MULTIPLIER, Lcg::INCREMENT),
            base: base.clone(),
            problems,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{infeasibility, EvalCounters};
    use crate::problems::{build_p2p_ocp, init_feasible};

    #[test]
    fn lcg_known_values() {
        let mut rng = Lcg::new(0);
        assert_eq!(rng.next_u64(), 1442695040888963407);
        assert_eq!(
            rng.next_u64(),
            1442695040888963407u64
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407)
        );
        let mut rng = Lcg::new(42);
        for _ in 0..1000 {
            let x = rng.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn zero_magnitude_gives_copies() {
        let spec = default_pointmass_spec();
        let set = perturbed_test_set(&spec, 5, 0.0, 1).unwrap();
        assert!(set.iter().all(|s| *s == spec));
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = default_pointmass_spec();
        let a = TestSetManifest::generate("pm", &spec, 10, 0.01, 42).unwrap();
        let b = TestSetManifest::generate("pm", &spec, 10, 0.01, 42).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = TestSetManifest::generate("pm", &spec, 10, 0.01, 43).unwrap();
        assert_ne!(a.problems, c.problems);
        assert!(a.to_json().unwrap().contains("\"seed\": 42"));
    }

    #[test]
    fn only_positions_move_within_magnitude() {
        let spec = default_pointmass_spec();
        for s in perturbed_test_set(&spec, 50, 0.01, 9).unwrap() {
            for i in 0..2 {
                assert!((s.x_start[i] - spec.x_start[i]).abs() <= 0.01);
                assert!((s.x_end[i] - spec.x_end[i]).abs() <= 0.01);
            }
            assert_eq!(&s.x_start[2..], &spec.x_start[2..]);
            assert_eq!(&s.x_end[2..], &spec.x_end[2..]);
        }
    }

    #[test]
    fn endpoint_outside_box_is_rejected() {
        let mut spec = default_double_integrator_spec();
        spec.x_start[0] = spec.x_min[0];
        assert!(perturbed_test_set(&spec, 20, 0.01, 3).is_err());
    }

    #[test]
    fn whole_suite_initializes_feasibly() {
        let spec = default_pointmass_spec();
        let mut cnt = EvalCounters::new();
        for s in perturbed_test_set(&spec, 100, 0.01, 42).unwrap() {
            let ocp = build_p2p_ocp(&s).unwrap();
            let w = init_feasible(&s, &[0.0, 0.0], 1.0).unwrap();
            assert!(infeasibility(&ocp.nlp, &w, &mut cnt).unwrap() <= 1e-10);
        }
    }
}
