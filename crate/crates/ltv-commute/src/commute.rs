//! Commutativity deciders.
//!
//! Two systems commute when the cascades AB and BA produce the same output
//! for every admissible input under zero initial conditions. This module
//! decides that question three ways:
//!
//! * numerically, by simulating both cascade orders over a probe family at
//!   two step sizes and classifying the worst normalized discrepancy;
//! * structurally for orders 1 and 2, by back-substituting through the
//!   triangular coefficient relation `b = T(a) c` and measuring how far the
//!   recovered `c` entries are from constants;
//! * at the gain level for feedback conjugates: a conjugate of a non-scalar
//!   system commutes with its base exactly when both path gains are
//!   constant, and two conjugates of the same base commute exactly when
//!   their gains are related by `alpha2 = p*alpha1`, `beta2 = beta1/p + q`
//!   for constants `p != 0`, `q`.
//!
//! All decisions are tolerance-based with an explicit inconclusive band
//! between the pass and fail thresholds, so borderline numerics surface
//! instead of being mislabeled.

use std::fmt;

use thiserror::Error;

use crate::expr::EvalError;
use crate::sim::{discrepancy, simulate_cascade, Signal, SimError, SolverOptions};
use crate::systems::{GainPair, LtvSystem, SystemError, NONVANISHING_TOL};

/// A recovered "constant" must stay within this constancy measure.
pub const CONSTANCY_TOL: f64 = 1e-6;

/// Worst discrepancy below which a pair counts as commutative.
pub const PASS_TOL: f64 = 1e-5;

/// Worst discrepancy above which a pair counts as non-commutative.
pub const FAIL_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CommuteError {
    #[error("expected two systems of order {expected}, got orders {a} and {b}")]
    OrderMismatch { expected: usize, a: usize, b: usize },
    #[error("divisor coefficient vanishes at t = {t}")]
    VanishingDivisor { t: f64 },
    #[error("leading coefficient is not sign-definite on the grid (|a_2| <= {NONVANISHING_TOL} at t = {t})")]
    NonPositiveLeading { t: f64 },
    #[error("forward gains are too small to identify the scale constant")]
    DegenerateAlpha,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Outcome of a numerical commutativity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Commutative,
    NotCommutative,
    Inconclusive,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::Commutative => write!(f, "commutative"),
            Decision::NotCommutative => write!(f, "not-commutative"),
            Decision::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Discrepancies for one probe signal at the nominal and refined steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeDiscrepancy {
    pub signal: String,
    pub at_step: f64,
    pub at_half_step: f64,
}

/// Numerical commutativity verdict with its step-refinement evidence.
///
/// `Commutative` requires the worst discrepancy below [`PASS_TOL`] at both
/// steps; `NotCommutative` requires it above [`FAIL_TOL`] at both steps;
/// anything else (including an integration blow-up on some probe) is
/// `Inconclusive`.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub decision: Decision,
    pub worst_at_step: f64,
    pub worst_at_half_step: f64,
    pub per_probe: Vec<ProbeDiscrepancy>,
    /// Diagnostic when some probe could not be simulated.
    pub failure: Option<String>,
}

impl Verdict {
    /// Worst discrepancy across both step sizes.
    pub fn worst(&self) -> f64 {
        self.worst_at_step.max(self.worst_at_half_step)
    }

    /// Probe with the largest nominal-step discrepancy.
    pub fn worst_probe(&self) -> Option<&ProbeDiscrepancy> {
        self.per_probe
            .iter()
            .max_by(|x, y| x.at_step.total_cmp(&y.at_step))
    }
}

/// Result of a triangular structural check: the recovered constants
/// (leading first) and the per-row constancy residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralResult {
    pub satisfied: bool,
    /// Recovered constants, highest row first: `(c_N, ..., c_0)`.
    pub constants: Vec<f64>,
    /// Per-row constancy measures, same order as `constants`.
    pub residuals: Vec<f64>,
    /// Whether both systems were negated to make the leading coefficient
    /// positive before checking (an equivalent pair).
    pub negated: bool,
}

/// Decision of the gain-constancy check for a feedback conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainDecision {
    /// Scalar base: commutative with every conjugate, constant gains or not.
    AlwaysCommutative,
    Commutative,
    NotCommutative,
}

impl fmt::Display for GainDecision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GainDecision::AlwaysCommutative => write!(f, "always-commutative"),
            GainDecision::Commutative => write!(f, "commutative"),
            GainDecision::NotCommutative => write!(f, "not-commutative"),
        }
    }
}

/// Result of deciding whether a conjugate commutes with its base by gain
/// constancy alone.
#[derive(Debug, Clone, PartialEq)]
pub struct GainConstancyResult {
    pub decision: GainDecision,
    pub alpha_residual: f64,
    pub beta_residual: f64,
    /// Implied leading constant `1 / mean(alpha)` when commutative.
    pub c_lead: Option<f64>,
    /// Implied trailing constant `mean(beta)` when commutative.
    pub c_zero: Option<f64>,
}

/// Least-squares fit of the pair relation `alpha2 = p*alpha1`,
/// `beta2 = beta1/p + q` between two conjugates' gains.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationFit {
    pub p: f64,
    pub q: f64,
    pub alpha_residual: f64,
    pub beta_residual: f64,
    pub satisfied: bool,
}

/// Normalized deviation of a sample set from its own mean:
/// `max_k |s_k - mean| / (1 + |mean|)`. Zero exactly for constant samples.
pub fn constancy_measure(samples: &[f64]) -> f64 {
    assert!(!samples.is_empty(), "constancy of an empty sample set");
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let max_dev = samples
        .iter()
        .fold(0.0f64, |m, &s| m.max((s - mean).abs()));
    max_dev / (1.0 + mean.abs())
}

fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// One probe's AB/BA discrepancy, or a diagnostic if integration blew up.
fn probe_discrepancy(
    a: &LtvSystem,
    b: &LtvSystem,
    probe: &Signal,
    opts: &SolverOptions,
) -> Result<Result<f64, String>, CommuteError> {
    let ab = match simulate_cascade(a, b, probe, opts) {
        Ok(trace) => trace,
        Err(SimError::NonFiniteState { t }) => {
            return Ok(Err(format!("probe {probe}: AB blew up at t = {t}")))
        }
        Err(e) => return Err(e.into()),
    };
    let ba = match simulate_cascade(b, a, probe, opts) {
        Ok(trace) => trace,
        Err(SimError::NonFiniteState { t }) => {
            return Ok(Err(format!("probe {probe}: BA blew up at t = {t}")))
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Ok(discrepancy(&ab, &ba)?))
}

/// Simulate both cascade orders over the probe family at the nominal and
/// refined steps and classify the worst discrepancy.
///
/// An integration blow-up on any probe yields an inconclusive verdict with a
/// diagnostic rather than an error.
pub fn numerical_commute_check(
    a: &LtvSystem,
    b: &LtvSystem,
    probes: &[Signal],
    opts: &SolverOptions,
) -> Result<Verdict, CommuteError> {
    assert!(!probes.is_empty(), "at least one probe signal is required");
    let refined = opts.refined();
    let mut per_probe = Vec::with_capacity(probes.len());
    let mut failure = None;

    for probe in probes {
        let at_step = match probe_discrepancy(a, b, probe, opts)? {
            Ok(d) => d,
            Err(diag) => {
                failure = Some(diag);
                break;
            }
        };
        let at_half_step = match probe_discrepancy(a, b, probe, &refined)? {
            Ok(d) => d,
            Err(diag) => {
                failure = Some(diag);
                break;
            }
        };
        per_probe.push(ProbeDiscrepancy {
            signal: probe.to_string(),
            at_step,
            at_half_step,
        });
    }

    let worst_at_step = per_probe.iter().fold(0.0f64, |m, p| m.max(p.at_step));
    let worst_at_half_step = per_probe
        .iter()
        .fold(0.0f64, |m, p| m.max(p.at_half_step));
    let decision = if failure.is_some() {
        Decision::Inconclusive
    } else if worst_at_step < PASS_TOL && worst_at_half_step < PASS_TOL {
        Decision::Commutative
    } else if worst_at_step > FAIL_TOL && worst_at_half_step > FAIL_TOL {
        Decision::NotCommutative
    } else {
        Decision::Inconclusive
    };
    Ok(Verdict {
        decision,
        worst_at_step,
        worst_at_half_step,
        per_probe,
        failure,
    })
}

/// First-order structural check: recover `c_1` from `b_1 = a_1 c_1` and
/// `c_0` from `b_0 = a_0 c_1 + c_0`, then demand both stay constant over the
/// grid.
pub fn structural_check_n1(
    a: &LtvSystem,
    b: &LtvSystem,
    grid: &[f64],
    tau_const: f64,
) -> Result<StructuralResult, CommuteError> {
    if a.order() != 1 || b.order() != 1 {
        return Err(CommuteError::OrderMismatch {
            expected: 1,
            a: a.order(),
            b: b.order(),
        });
    }
    let mut c1_samples = Vec::with_capacity(grid.len());
    for &t in grid {
        let a1 = a.coeff(1).eval(t)?;
        if a1.abs() <= NONVANISHING_TOL {
            return Err(CommuteError::VanishingDivisor { t });
        }
        c1_samples.push(b.coeff(1).eval(t)? / a1);
    }
    let c1 = mean(&c1_samples);
    let r1 = constancy_measure(&c1_samples);

    let mut c0_samples = Vec::with_capacity(grid.len());
    for &t in grid {
        c0_samples.push(b.coeff(0).eval(t)? - a.coeff(0).eval(t)? * c1);
    }
    let c0 = mean(&c0_samples);
    let r0 = constancy_measure(&c0_samples);

    Ok(StructuralResult {
        satisfied: r1 <= tau_const && r0 <= tau_const,
        constants: vec![c1, c0],
        residuals: vec![r1, r0],
        negated: false,
    })
}

/// Second-order structural check via row-by-row back-substitution:
///
/// ```text
/// c_2(t) = b_2 / a_2
/// c_1(t) = (b_1 - a_1 c_2) / a_2^0.5
/// c_0(t) = b_0 - a_0 c_2 - c_1 a_2^-0.5 (2 a_1 - da_2/dt) / 4
/// ```
///
/// with the coefficient derivative taken symbolically. The square roots need
/// `a_2 > 0`; a pair whose leading coefficient is negative throughout is
/// negated first (an equivalent pair) and flagged in the result.
pub fn structural_check_n2(
    a: &LtvSystem,
    b: &LtvSystem,
    grid: &[f64],
    tau_const: f64,
) -> Result<StructuralResult, CommuteError> {
    if a.order() != 2 || b.order() != 2 {
        return Err(CommuteError::OrderMismatch {
            expected: 2,
            a: a.order(),
            b: b.order(),
        });
    }

    // Establish a sign-definite leading coefficient.
    let mut positive = 0usize;
    let mut negative = 0usize;
    let mut indefinite_at = None;
    for &t in grid {
        let v = a.coeff(2).eval(t)?;
        if v > NONVANISHING_TOL {
            positive += 1;
        } else if v < -NONVANISHING_TOL {
            negative += 1;
        } else if indefinite_at.is_none() {
            indefinite_at = Some(t);
        }
    }
    if let Some(t) = indefinite_at {
        return Err(CommuteError::NonPositiveLeading { t });
    }
    if positive > 0 && negative > 0 {
        let t = grid
            .iter()
            .copied()
            .find(|&t| a.coeff(2).eval(t).is_ok_and(|v| v < 0.0))
            .unwrap_or(grid[0]);
        return Err(CommuteError::NonPositiveLeading { t });
    }
    let negated = negative > 0;
    let (a, b) = if negated {
        (a.negated(), b.negated())
    } else {
        (a.clone(), b.clone())
    };

    let da2 = a.coeff(2).differentiate();

    let mut c2_samples = Vec::with_capacity(grid.len());
    for &t in grid {
        c2_samples.push(b.coeff(2).eval(t)? / a.coeff(2).eval(t)?);
    }
    let c2 = mean(&c2_samples);
    let r2 = constancy_measure(&c2_samples);

    let mut c1_samples = Vec::with_capacity(grid.len());
    for &t in grid {
        let root = a.coeff(2).eval(t)?.sqrt();
        c1_samples.push((b.coeff(1).eval(t)? - a.coeff(1).eval(t)? * c2) / root);
    }
    let c1 = mean(&c1_samples);
    let r1 = constancy_measure(&c1_samples);

    let mut c0_samples = Vec::with_capacity(grid.len());
    for &t in grid {
        let root = a.coeff(2).eval(t)?.sqrt();
        let row = c1 * (2.0 * a.coeff(1).eval(t)? - da2.eval(t)?) / (4.0 * root);
        c0_samples.push(b.coeff(0).eval(t)? - a.coeff(0).eval(t)? * c2 - row);
    }
    let c0 = mean(&c0_samples);
    let r0 = constancy_measure(&c0_samples);

    Ok(StructuralResult {
        satisfied: r2 <= tau_const && r1 <= tau_const && r0 <= tau_const,
        constants: vec![c2, c1, c0],
        residuals: vec![r2, r1, r0],
        negated,
    })
}

/// Decide whether a feedback conjugate commutes with its base from the gains
/// alone: a scalar base always does; a non-scalar base does exactly when
/// both path gains are constant over the grid.
pub fn gain_constancy_check(
    base_order: usize,
    gains: &GainPair,
    grid: &[f64],
    tau_const: f64,
) -> Result<GainConstancyResult, CommuteError> {
    assert!(!grid.is_empty(), "gain check needs a nonempty grid");
    let mut alpha_samples = Vec::with_capacity(grid.len());
    let mut beta_samples = Vec::with_capacity(grid.len());
    for &t in grid {
        let alpha = gains.alpha.eval(t)?;
        if alpha.abs() <= NONVANISHING_TOL {
            return Err(SystemError::VanishingForwardGain { t, value: alpha }.into());
        }
        alpha_samples.push(alpha);
        beta_samples.push(gains.beta.eval(t)?);
    }
    let alpha_residual = constancy_measure(&alpha_samples);
    let beta_residual = constancy_measure(&beta_samples);

    if base_order == 0 {
        return Ok(GainConstancyResult {
            decision: GainDecision::AlwaysCommutative,
            alpha_residual,
            beta_residual,
            c_lead: None,
            c_zero: None,
        });
    }
    if alpha_residual <= tau_const && beta_residual <= tau_const {
        Ok(GainConstancyResult {
            decision: GainDecision::Commutative,
            alpha_residual,
            beta_residual,
            c_lead: Some(1.0 / mean(&alpha_samples)),
            c_zero: Some(mean(&beta_samples)),
        })
    } else {
        Ok(GainConstancyResult {
            decision: GainDecision::NotCommutative,
            alpha_residual,
            beta_residual,
            c_lead: None,
            c_zero: None,
        })
    }
}

/// Fit the pair relation between two conjugates' gains:
/// `p` by least squares over the whole grid, then `q` as the mean offset.
///
/// Satisfied means both residuals stay within `tau_const`, i.e. the two
/// conjugates' gains are related by `alpha2 = p*alpha1`, `beta2 = beta1/p + q`.
pub fn gain_relation_fit(
    g1: &GainPair,
    g2: &GainPair,
    grid: &[f64],
    tau_const: f64,
) -> Result<RelationFit, CommuteError> {
    assert!(!grid.is_empty(), "relation fit needs a nonempty grid");
    let mut alpha1 = Vec::with_capacity(grid.len());
    let mut alpha2 = Vec::with_capacity(grid.len());
    let mut beta1 = Vec::with_capacity(grid.len());
    let mut beta2 = Vec::with_capacity(grid.len());
    for &t in grid {
        alpha1.push(g1.alpha.eval(t)?);
        alpha2.push(g2.alpha.eval(t)?);
        beta1.push(g1.beta.eval(t)?);
        beta2.push(g2.beta.eval(t)?);
    }

    let sum_sq: f64 = alpha1.iter().map(|a| a * a).sum();
    if sum_sq / grid.len() as f64 <= 1e-12 {
        return Err(CommuteError::DegenerateAlpha);
    }
    let p = alpha1
        .iter()
        .zip(&alpha2)
        .map(|(x, y)| x * y)
        .sum::<f64>()
        / sum_sq;
    if !p.is_finite() || p.abs() <= 1e-9 {
        return Err(CommuteError::DegenerateAlpha);
    }

    let max_alpha2 = alpha2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let alpha_residual = alpha1
        .iter()
        .zip(&alpha2)
        .fold(0.0f64, |m, (x, y)| m.max((y - p * x).abs()))
        / (1.0 + max_alpha2);

    let offsets: Vec<f64> = beta1
        .iter()
        .zip(&beta2)
        .map(|(x, y)| y - x / p)
        .collect();
    let q = mean(&offsets);
    let max_beta2 = beta2.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let beta_residual = beta1
        .iter()
        .zip(&beta2)
        .fold(0.0f64, |m, (x, y)| m.max((y - (x / p + q)).abs()))
        / (1.0 + max_beta2);

    Ok(RelationFit {
        p,
        q,
        alpha_residual,
        beta_residual,
        satisfied: alpha_residual <= tau_const && beta_residual <= tau_const,
    })
}
