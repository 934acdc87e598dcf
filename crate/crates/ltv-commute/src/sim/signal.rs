//! Input signals for simulation runs.

use std::fmt;

use crate::expr::Expr;
use crate::systems::Interval;

use super::SimError;

/// Input signal, evaluable at every time in the simulation domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    /// Unit step sitting at the left edge of the domain: x(t) = 1 for the
    /// whole simulated window, so no discontinuity crosses an interior
    /// integration stage.
    Step,
    /// `amplitude * sin(omega*t + phase)`.
    Sinusoid {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    /// Linear chirp sweeping instantaneous frequency `f0` to `f1` (Hz) over
    /// the domain.
    Chirp { amplitude: f64, f0: f64, f1: f64 },
    /// Piecewise-linear interpolation through `(t, value)` knots, clamped to
    /// the end values outside the knot range. Build via
    /// [`Signal::piecewise_linear`] so the knots are validated.
    PiecewiseLinear(Vec<(f64, f64)>),
    /// Arbitrary closed-form signal.
    Analytic(Expr),
}

impl Signal {
    /// Validated piecewise-linear signal; knots must be strictly increasing
    /// in time.
    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Signal, SimError> {
        if knots.is_empty() {
            return Err(SimError::InvalidSignal {
                reason: "piecewise-linear signal needs at least one knot".into(),
            });
        }
        for pair in knots.windows(2) {
            if !(pair[1].0 > pair[0].0) {
                return Err(SimError::InvalidSignal {
                    reason: format!(
                        "piecewise-linear knots must be strictly increasing in t (got {} then {})",
                        pair[0].0, pair[1].0
                    ),
                });
            }
        }
        for &(t, v) in &knots {
            if !t.is_finite() || !v.is_finite() {
                return Err(SimError::InvalidSignal {
                    reason: "piecewise-linear knots must be finite".into(),
                });
            }
        }
        Ok(Signal::PiecewiseLinear(knots))
    }

    /// Sample the signal at time `t` within `domain`.
    pub fn value(&self, t: f64, domain: &Interval) -> Result<f64, SimError> {
        match self {
            Signal::Step => Ok(1.0),
            Signal::Sinusoid {
                amplitude,
                omega,
                phase,
            } => Ok(amplitude * (omega * t + phase).sin()),
            Signal::Chirp { amplitude, f0, f1 } => {
                let tau = t - domain.start();
                let span = domain.length();
                let cycles = f0 * tau + 0.5 * (f1 - f0) * tau * tau / span;
                Ok(amplitude * (std::f64::consts::TAU * cycles).sin())
            }
            Signal::PiecewiseLinear(knots) => Ok(interpolate(knots, t)),
            Signal::Analytic(e) => Ok(e.eval(t)?),
        }
    }

    /// The fixed probe family used to falsify commutativity: step, a
    /// sinusoid, a slow-to-fast chirp, and a ramp-then-hold.
    pub fn default_probes(domain: &Interval) -> Vec<Signal> {
        let t0 = domain.start();
        let t1 = domain.end();
        let ramp_end = t0 + 0.2 * domain.length();
        vec![
            Signal::Step,
            Signal::Sinusoid {
                amplitude: 1.0,
                omega: 2.0,
                phase: 0.0,
            },
            Signal::Chirp {
                amplitude: 1.0,
                f0: 0.1,
                f1: 2.0,
            },
            Signal::piecewise_linear(vec![(t0, 0.0), (ramp_end, 1.0), (t1, 1.0)])
                .expect("default ramp knots are valid"),
        ]
    }
}

fn interpolate(knots: &[(f64, f64)], t: f64) -> f64 {
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if t <= first.0 {
        return first.1;
    }
    if t >= last.0 {
        return last.1;
    }
    let idx = knots.partition_point(|&(kt, _)| kt <= t);
    let (t0, v0) = knots[idx - 1];
    let (t1, v1) = knots[idx];
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Signal::Step => write!(f, "step"),
            Signal::Sinusoid {
                amplitude,
                omega,
                phase,
            } => write!(f, "sinusoid(a={amplitude}, w={omega}, phi={phase})"),
            Signal::Chirp { amplitude, f0, f1 } => {
                write!(f, "chirp(a={amplitude}, f0={f0}, f1={f1})")
            }
            Signal::PiecewiseLinear(knots) => write!(f, "piecewise-linear({} knots)", knots.len()),
            Signal::Analytic(e) => write!(f, "analytic({e})"),
        }
    }
}
