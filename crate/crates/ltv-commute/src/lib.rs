//! Laboratory for deciding when a linear time-varying (LTV) differential
//! system commutes with its feedback conjugates.
//!
//! A system here is `sum_n a_n(t) y^(n) = x` with symbolic coefficients and
//! a nonvanishing leading coefficient. Closing a feedback loop with forward
//! gain `alpha(t)` and feedback gain `beta(t)` around a system realizes
//! another system of the same order — its *feedback conjugate*. The crate
//! answers, numerically and structurally, when a system and its conjugates
//! (or two conjugates of the same base) form a commutative pair: cascading
//! them in either order produces the same output for every input under zero
//! initial conditions.
//!
//! The pieces:
//!
//! * [`expr`] — a small closed-form expression language over `t` with exact
//!   symbolic differentiation.
//! * [`systems`] — LTV systems, gain pairs, and feedback-conjugate
//!   realization.
//! * [`sim`] — fixed-step RK4 simulation of single systems, cascades, and
//!   closed loops, plus the normalized trace discrepancy.
//! * [`commute`] — the deciders: numerical both-order checks, triangular
//!   structural conditions for orders 1 and 2, and the gain-level criteria
//!   for conjugates.
//! * [`runner`] — config-driven batch experiments with CSV traces and a JSON
//!   report (also exposed by the `ltv-commute` binary).
//!
//! ```
//! use ltv_commute::commute::{numerical_commute_check, Decision};
//! use ltv_commute::sim::{Signal, SolverOptions};
//! use ltv_commute::systems::{GainPair, Interval, LtvSystem};
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let domain = Interval::new(0.0, 5.0)?;
//! let base = LtvSystem::from_strs(&["t", "1"], domain)?;
//! let conjugate = base.feedback_conjugate(&GainPair::constant(2.0, 1.0))?;
//!
//! let probes = Signal::default_probes(&domain);
//! let verdict =
//!     numerical_commute_check(&base, &conjugate, &probes, &SolverOptions::default())?;
//! assert_eq!(verdict.decision, Decision::Commutative);
//! # Ok(())
//! # }
//! ```

pub mod commute;
pub mod expr;
pub mod runner;
pub mod sim;
pub mod systems;

pub use commute::{Decision, Verdict};
pub use expr::Expr;
pub use sim::{Signal, SolverOptions, Trace};
pub use systems::{GainPair, Interval, LtvSystem};
