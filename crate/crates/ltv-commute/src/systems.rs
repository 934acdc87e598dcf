//! Linear time-varying differential systems and their feedback conjugates.
//!
//! A system of order `N` is `sum_{n=0}^{N} a_n(t) y^(n)(t) = x(t)` with
//! time-varying coefficients and a nonvanishing leading coefficient on its
//! time domain. Closing a feedback loop around a system — forward path gain
//! `alpha(t)` in series with the input, feedback path gain `beta(t)` from the
//! output back to the input summing junction — yields another system of the
//! same order, the *feedback conjugate*, with coefficients
//!
//! ```text
//! b_n = a_n / alpha          for n = N .. 1
//! b_0 = a_0 / alpha + beta
//! ```
//!
//! Conjugate coefficients are kept symbolic so that later analyses can
//! differentiate them exactly.

use thiserror::Error;

use crate::expr::{EvalError, Expr};

/// Magnitude below which a leading coefficient or forward gain counts as
/// vanishing.
pub const NONVANISHING_TOL: f64 = 1e-9;

/// Grid resolution used to validate coefficients and gains on a domain.
pub const VALIDATION_GRID_POINTS: usize = 1001;

/// Closed time interval `[start, end]` with `end > start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    start: f64,
    end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Interval, SystemError> {
        if !start.is_finite() || !end.is_finite() || !(end > start) {
            return Err(SystemError::BadDomain { start, end });
        }
        Ok(Interval { start, end })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    /// Uniform grid with `points >= 2` samples, endpoints included.
    pub fn grid(&self, points: usize) -> Vec<f64> {
        assert!(points >= 2, "a grid needs at least two points");
        let h = self.length() / (points - 1) as f64;
        (0..points).map(|k| self.start + k as f64 * h).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("a system needs at least one coefficient")]
    EmptyCoefficients,
    #[error("bad domain [{start}, {end}]: end must exceed start and both must be finite")]
    BadDomain { start: f64, end: f64 },
    #[error("leading coefficient vanishes at t = {t} (|{value}| <= {NONVANISHING_TOL})")]
    VanishingLeadingCoefficient { t: f64, value: f64 },
    #[error("coefficient {index} is not evaluable on the domain: {source}")]
    CoefficientEval { index: usize, source: EvalError },
    #[error("forward gain vanishes at t = {t} (|{value}| <= {NONVANISHING_TOL})")]
    VanishingForwardGain { t: f64, value: f64 },
    #[error("{gain} gain is not evaluable on the domain: {source}")]
    GainEval { gain: &'static str, source: EvalError },
}

/// Linear time-varying system with coefficients stored low-to-high:
/// `coeffs[n]` multiplies the n-th output derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct LtvSystem {
    coeffs: Vec<Expr>,
    domain: Interval,
}

impl LtvSystem {
    /// Validate and construct a system.
    ///
    /// Every coefficient must evaluate to a finite value on a
    /// [`VALIDATION_GRID_POINTS`]-point grid over the domain, and the leading
    /// coefficient must stay above [`NONVANISHING_TOL`] in magnitude there.
    pub fn new(coeffs: Vec<Expr>, domain: Interval) -> Result<LtvSystem, SystemError> {
        if coeffs.is_empty() {
            return Err(SystemError::EmptyCoefficients);
        }
        let grid = domain.grid(VALIDATION_GRID_POINTS);
        let leading = coeffs.len() - 1;
        for (index, coeff) in coeffs.iter().enumerate() {
            for &t in &grid {
                let value = coeff
                    .eval(t)
                    .map_err(|source| SystemError::CoefficientEval { index, source })?;
                if index == leading && value.abs() <= NONVANISHING_TOL {
                    return Err(SystemError::VanishingLeadingCoefficient { t, value });
                }
            }
        }
        Ok(LtvSystem { coeffs, domain })
    }

    /// Parse coefficient strings (low-to-high) and construct a system.
    ///
    /// Panics on malformed strings; config loading reports parse failures
    /// with context instead of going through this helper.
    pub fn from_strs(coeffs: &[&str], domain: Interval) -> Result<LtvSystem, SystemError> {
        let parsed = coeffs
            .iter()
            .map(|s| Expr::parse(s).expect("coefficient string must parse"))
            .collect();
        LtvSystem::new(parsed, domain)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn coeff(&self, n: usize) -> &Expr {
        &self.coeffs[n]
    }

    pub fn leading(&self) -> &Expr {
        self.coeffs.last().expect("coeffs is nonempty")
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// The same dynamics with every coefficient negated (both sides of the
    /// defining equation flip sign, and by linearity every cascade built from
    /// the negated pair reproduces the original outputs).
    pub fn negated(&self) -> LtvSystem {
        LtvSystem {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| (-c.clone()).simplify())
                .collect(),
            domain: self.domain,
        }
    }

    /// Close a feedback loop around this system and realize the loop as a
    /// single system of the same order.
    ///
    /// Coefficients are built symbolically: `b_n = a_n/alpha` for `n >= 1`
    /// and `b_0 = a_0/alpha + beta`.
    pub fn feedback_conjugate(&self, gains: &GainPair) -> Result<LtvSystem, SystemError> {
        gains.validate_on(&self.domain)?;
        let order = self.order();
        let mut coeffs = Vec::with_capacity(order + 1);
        let b0 = (self.coeffs[0].clone() / gains.alpha.clone() + gains.beta.clone()).simplify();
        coeffs.push(b0);
        for n in 1..=order {
            coeffs.push((self.coeffs[n].clone() / gains.alpha.clone()).simplify());
        }
        LtvSystem::new(coeffs, self.domain)
    }
}

/// Forward and feedback path gains of a feedback loop.
#[derive(Debug, Clone, PartialEq)]
pub struct GainPair {
    pub alpha: Expr,
    pub beta: Expr,
}

impl GainPair {
    pub fn new(alpha: Expr, beta: Expr) -> GainPair {
        GainPair { alpha, beta }
    }

    pub fn constant(alpha: f64, beta: f64) -> GainPair {
        GainPair {
            alpha: Expr::Constant(alpha),
            beta: Expr::Constant(beta),
        }
    }

    pub fn from_strs(alpha: &str, beta: &str) -> GainPair {
        GainPair {
            alpha: Expr::parse(alpha).expect("alpha must parse"),
            beta: Expr::parse(beta).expect("beta must parse"),
        }
    }

    /// Check that the forward gain stays away from zero and both gains are
    /// evaluable over `domain`.
    pub fn validate_on(&self, domain: &Interval) -> Result<(), SystemError> {
        for &t in &domain.grid(VALIDATION_GRID_POINTS) {
            let a = self.alpha.eval(t).map_err(|source| SystemError::GainEval {
                gain: "forward",
                source,
            })?;
            if a.abs() <= NONVANISHING_TOL {
                return Err(SystemError::VanishingForwardGain { t, value: a });
            }
            self.beta.eval(t).map_err(|source| SystemError::GainEval {
                gain: "feedback",
                source,
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn first_order_system_constructs() {
        let sys = LtvSystem::from_strs(&["t", "1"], interval(0.0, 5.0)).unwrap();
        assert_eq!(sys.order(), 1);
    }

    #[test]
    fn vanishing_leading_coefficient_is_rejected() {
        let err = LtvSystem::from_strs(&["1", "t"], interval(0.0, 5.0)).unwrap_err();
        match err {
            SystemError::VanishingLeadingCoefficient { t, .. } => assert_eq!(t, 0.0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn scalar_system_is_supported() {
        let sys = LtvSystem::from_strs(&["t+1"], interval(0.0, 5.0)).unwrap();
        assert_eq!(sys.order(), 0);
    }

    #[test]
    fn empty_coefficients_rejected() {
        assert_eq!(
            LtvSystem::new(vec![], interval(0.0, 1.0)).unwrap_err(),
            SystemError::EmptyCoefficients
        );
    }

    #[test]
    fn degenerate_domain_rejected() {
        assert!(matches!(
            Interval::new(2.0, 2.0),
            Err(SystemError::BadDomain { .. })
        ));
        assert!(matches!(
            Interval::new(0.0, f64::INFINITY),
            Err(SystemError::BadDomain { .. })
        ));
    }

    #[test]
    fn conjugate_with_constant_gains() {
        let base = LtvSystem::from_strs(&["t", "1"], interval(0.0, 5.0)).unwrap();
        let conj = base
            .feedback_conjugate(&GainPair::constant(2.0, 3.0))
            .unwrap();
        assert_eq!(conj.order(), 1);
        assert_eq!(conj.coeff(1).to_string(), "0.5");
        assert_eq!(conj.coeff(0).to_string(), "t/2 + 3");
    }

    #[test]
    fn unit_forward_zero_feedback_is_identity() {
        let base = LtvSystem::from_strs(&["2+sin(t)", "1+t^2", "t+1"], interval(0.0, 5.0)).unwrap();
        let conj = base
            .feedback_conjugate(&GainPair::constant(1.0, 0.0))
            .unwrap();
        for (a, b) in base.coeffs().iter().zip(conj.coeffs()) {
            for &t in &base.domain().grid(101) {
                let va = a.eval(t).unwrap();
                let vb = b.eval(t).unwrap();
                assert!((va - vb).abs() <= 1e-12 * (1.0 + va.abs()));
            }
        }
    }

    #[test]
    fn scalar_conjugate_can_become_constant() {
        // A scalar a0 = t+1 with alpha = -(t+1), beta = 4 realizes the
        // constant scalar b0 = 3.
        let base = LtvSystem::from_strs(&["t+1"], interval(0.0, 5.0)).unwrap();
        let gains = GainPair::new(-Expr::parse("t+1").unwrap(), Expr::Constant(4.0));
        let conj = base.feedback_conjugate(&gains).unwrap();
        for &t in &conj.domain().grid(101) {
            assert!((conj.coeff(0).eval(t).unwrap() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_preserves_order_and_inverts() {
        let base = LtvSystem::from_strs(&["1", "t", "1"], interval(0.0, 5.0)).unwrap();
        let gains = GainPair::from_strs("1+0.5*sin(t)", "0.5*t");
        let conj = base.feedback_conjugate(&gains).unwrap();
        assert_eq!(conj.order(), base.order());
        // b_n * alpha = a_n for n >= 1 and (b_0 - beta) * alpha = a_0.
        for &t in &base.domain().grid(501) {
            let alpha = gains.alpha.eval(t).unwrap();
            let beta = gains.beta.eval(t).unwrap();
            for n in 0..=base.order() {
                let a = base.coeff(n).eval(t).unwrap();
                let b = conj.coeff(n).eval(t).unwrap();
                let recovered = if n == 0 { (b - beta) * alpha } else { b * alpha };
                assert!(
                    (recovered - a).abs() <= 1e-12 * (1.0 + a.abs()),
                    "coefficient {n} at t={t}"
                );
            }
        }
    }

    #[test]
    fn scaling_gain_rescales_coefficients() {
        // Conjugating any system with (1/k, 0) multiplies every coefficient
        // by the constant k.
        let base = LtvSystem::from_strs(&["t", "1"], interval(0.0, 5.0)).unwrap();
        let inner = base
            .feedback_conjugate(&GainPair::from_strs("2", "1"))
            .unwrap();
        let k = 3.0;
        let rescaled = inner
            .feedback_conjugate(&GainPair::constant(1.0 / k, 0.0))
            .unwrap();
        for n in 0..=inner.order() {
            for &t in &inner.domain().grid(101) {
                let expected = k * inner.coeff(n).eval(t).unwrap();
                let got = rescaled.coeff(n).eval(t).unwrap();
                assert!((got - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
            }
        }
    }

    #[test]
    fn vanishing_forward_gain_is_rejected() {
        let base = LtvSystem::from_strs(&["1", "1"], interval(0.0, 5.0)).unwrap();
        let gains = GainPair::from_strs("t - 2", "0");
        assert!(matches!(
            base.feedback_conjugate(&gains),
            Err(SystemError::VanishingForwardGain { .. })
        ));
    }
}
