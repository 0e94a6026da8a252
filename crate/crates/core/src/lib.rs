//! Feasible sequential linear programming (FSLP) with Anderson-accelerated
//! feasibility iterations.
//!
//! The solver works on problems of the form
//!
//! ```text
//!   min  c'w
//!   s.t. C w + g(P_y w) = 0
//!        A w + b <= 0
//! ```
//!
//! where `P_y` selects the variables that enter `g` nonlinearly. Every accepted
//! outer iterate is feasible: the solution of the trust-region LP is projected
//! back onto the feasible set by zero-order iterations that re-evaluate `g`
//! with the Jacobian frozen at the linearization point. Those inner iterations
//! can optionally be accelerated with Anderson mixing of depth `d`.
//!
//! Module map:
//!
//! - [`model`]: the structured NLP, infeasibility measure, zero-order mismatch
//!   and the fully/under-determined classifier.
//! - [`lp`]: trust-region LP construction and a dense bounded-variable simplex.
//! - [`inner`]: plain feasibility iterations.
//! - [`anderson`]: AA(d) feasibility iterations.
//! - [`outer`]: the trust-region driver.
//! - [`problems`]: toy fixtures and time-optimal point-to-point OCPs.
//! - [`bench`]: benchmark sweeps and trace extraction used by the CLI.

// negated float comparisons are used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anderson;
pub mod bench;
mod error;
pub mod export;
pub mod inner;
pub mod linalg;
pub mod lp;
pub mod model;
pub mod outer;
pub mod problems;

pub use error::{FslpError, Result};

pub use anderson::{AaConfig, AndersonMemory};
pub use inner::{InnerConfig, InnerResult, InnerStatus};
pub use lp::{BoxedLp, LpOutcome, LpStatus};
pub use model::{Classification, EvalCounters, JacobianSnapshot, StructuredNlp};
pub use outer::{Acceleration, FslpConfig, SolveReport, SolveStatus};
pub use problems::{OcpSpec, SystemKind};
