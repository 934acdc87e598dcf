//! Fixed-step simulation of LTV systems, cascades, and feedback loops.
//!
//! Systems of order `N >= 1` are reduced to companion form with state
//! `z = (y, y', ..., y^(N-1))` and integrated with classical fourth-order
//! Runge-Kutta from zero initial conditions. Order-0 (scalar) systems are
//! evaluated algebraically per grid point. A cascade integrates the joint
//! state of both subsystems, feeding the instantaneous output of the first
//! into the second at every derivative evaluation, so no intermediate signal
//! is ever sampled-and-held.
//!
//! Everything here is deterministic: the same inputs produce bit-identical
//! traces regardless of scheduling.

mod signal;

pub use signal::Signal;

use thiserror::Error;

use crate::expr::EvalError;
use crate::systems::{GainPair, Interval, LtvSystem, SystemError};

/// State magnitude beyond which an integration is declared blown up,
/// separating instability diagnostics from silent overflow.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

/// Minimum number of integration steps a domain must be divided into.
pub const MIN_STEPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("state exceeded {BLOWUP_THRESHOLD:e} at t = {t}; the configuration is unstable on this domain")]
    NonFiniteState { t: f64 },
    #[error("systems live on different domains")]
    DomainMismatch,
    #[error("traces live on different grids")]
    GridMismatch,
    #[error("step {step} does not divide the domain into at least {MIN_STEPS} steps")]
    BadStep { step: f64 },
    #[error("invalid signal: {reason}")]
    InvalidSignal { reason: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Fixed-step solver settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Nominal step size; rounded to the nearest value that divides the
    /// domain evenly.
    pub step: f64,
    /// Step-halving factor for verdict-stability reruns (>= 2).
    pub refine: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            step: 1e-3,
            refine: 2,
        }
    }
}

impl SolverOptions {
    pub fn with_step(step: f64) -> Self {
        SolverOptions {
            step,
            ..Default::default()
        }
    }

    /// The same options with the step divided by the refinement factor.
    pub fn refined(&self) -> Self {
        SolverOptions {
            step: self.step / self.refine.max(2) as f64,
            refine: self.refine,
        }
    }
}

/// Sampled input/output pair from one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// Uniform, strictly increasing time samples.
    pub grid: Vec<f64>,
    /// Input samples x(t_k).
    pub input: Vec<f64>,
    /// Output samples y(t_k).
    pub output: Vec<f64>,
    /// Dimension of the integrated state (0 for purely algebraic runs).
    pub state_dim: usize,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn final_output(&self) -> f64 {
        *self.output.last().expect("traces are nonempty")
    }

    pub fn max_abs_output(&self) -> f64 {
        self.output.iter().fold(0.0, |m, y| m.max(y.abs()))
    }

    /// Write `t,x,y` rows at full double precision (17 significant digits).
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,y")?;
        for k in 0..self.len() {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e}",
                self.grid[k], self.input[k], self.output[k]
            )?;
        }
        Ok(())
    }
}

/// Companion-form view of a system: for order `N >= 1` a derivative
/// evaluator over the state `z = (y, y', ..., y^(N-1))`, for order 0 the
/// algebraic map `y = x / a_0(t)`.
#[derive(Debug, Clone, Copy)]
pub struct StateForm<'a> {
    sys: &'a LtvSystem,
}

impl<'a> StateForm<'a> {
    pub fn new(sys: &'a LtvSystem) -> Self {
        StateForm { sys }
    }

    /// Integrated state dimension (the system order).
    pub fn dim(&self) -> usize {
        self.sys.order()
    }

    /// Fill `dz` with the state derivative at `(t, z)` under input `x`.
    ///
    /// The top row solves the defining equation for the highest derivative:
    /// `y^(N) = (x - sum_{n<N} a_n(t) z_n) / a_N(t)`.
    pub fn derivative(&self, t: f64, z: &[f64], x: f64, dz: &mut [f64]) -> Result<(), SimError> {
        let n = self.sys.order();
        debug_assert!(n >= 1, "order-0 systems have no state");
        debug_assert_eq!(z.len(), n);
        debug_assert_eq!(dz.len(), n);
        for i in 0..n - 1 {
            dz[i] = z[i + 1];
        }
        let mut acc = x;
        for k in 0..n {
            acc -= self.sys.coeff(k).eval(t)? * z[k];
        }
        dz[n - 1] = acc / self.sys.leading().eval(t)?;
        Ok(())
    }

    /// Instantaneous output: the first state component for dynamic systems,
    /// `x / a_0(t)` for scalar ones.
    pub fn output(&self, t: f64, z: &[f64], x: f64) -> Result<f64, SimError> {
        if self.sys.order() == 0 {
            Ok(x / self.sys.coeff(0).eval(t)?)
        } else {
            Ok(z[0])
        }
    }
}

/// Companion-form evaluator for a system (spec'd state order: output first).
pub fn to_state_form(sys: &LtvSystem) -> StateForm<'_> {
    StateForm::new(sys)
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    fn step<F>(&mut self, f: &mut F, t: f64, h: f64, z: &mut [f64]) -> Result<(), SimError>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), SimError>,
    {
        let dim = z.len();
        f(t, z, &mut self.k1)?;
        for i in 0..dim {
            self.tmp[i] = z[i] + 0.5 * h * self.k1[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k2)?;
        for i in 0..dim {
            self.tmp[i] = z[i] + 0.5 * h * self.k2[i];
        }
        f(t + 0.5 * h, &self.tmp, &mut self.k3)?;
        for i in 0..dim {
            self.tmp[i] = z[i] + h * self.k3[i];
        }
        f(t + h, &self.tmp, &mut self.k4)?;
        for i in 0..dim {
            z[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// Uniform grid over `domain` built from the nominal step: the step is
/// rounded to the nearest value that divides the domain evenly.
fn build_grid(domain: &Interval, step: f64) -> Result<(Vec<f64>, f64, usize), SimError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(SimError::BadStep { step });
    }
    let n = (domain.length() / step).round() as usize;
    if n < MIN_STEPS {
        return Err(SimError::BadStep { step });
    }
    let h = domain.length() / n as f64;
    let grid = (0..=n).map(|k| domain.start() + k as f64 * h).collect();
    Ok((grid, h, n))
}

fn check_state(z: &[f64], t: f64) -> Result<(), SimError> {
    for &v in z {
        if !v.is_finite() || v.abs() > BLOWUP_THRESHOLD {
            return Err(SimError::NonFiniteState { t });
        }
    }
    Ok(())
}

fn check_value(y: f64, t: f64) -> Result<f64, SimError> {
    if !y.is_finite() || y.abs() > BLOWUP_THRESHOLD {
        Err(SimError::NonFiniteState { t })
    } else {
        Ok(y)
    }
}

/// Simulate a single system from zero initial conditions.
pub fn simulate(sys: &LtvSystem, input: &Signal, opts: &SolverOptions) -> Result<Trace, SimError> {
    let domain = sys.domain();
    let (grid, h, n) = build_grid(&domain, opts.step)?;
    let xs: Vec<f64> = grid
        .iter()
        .map(|&t| input.value(t, &domain))
        .collect::<Result<_, _>>()?;

    let form = StateForm::new(sys);
    if sys.order() == 0 {
        let mut output = Vec::with_capacity(n + 1);
        for (k, &t) in grid.iter().enumerate() {
            output.push(check_value(form.output(t, &[], xs[k])?, t)?);
        }
        return Ok(Trace {
            grid,
            input: xs,
            output,
            state_dim: 0,
        });
    }

    let dim = form.dim();
    let mut z = vec![0.0; dim];
    let mut rk4 = Rk4::new(dim);
    let mut deriv = |t: f64, z: &[f64], dz: &mut [f64]| {
        let x = input.value(t, &domain)?;
        form.derivative(t, z, x, dz)
    };
    let mut output = Vec::with_capacity(n + 1);
    output.push(z[0]);
    for k in 0..n {
        rk4.step(&mut deriv, grid[k], h, &mut z)?;
        check_state(&z, grid[k + 1])?;
        output.push(z[0]);
    }
    Ok(Trace {
        grid,
        input: xs,
        output,
        state_dim: dim,
    })
}

/// Simulate `first` followed by `second` as one joint system: the input of
/// `second` at every derivative evaluation is the instantaneous output of
/// `first`.
pub fn simulate_cascade(
    first: &LtvSystem,
    second: &LtvSystem,
    input: &Signal,
    opts: &SolverOptions,
) -> Result<Trace, SimError> {
    if first.domain() != second.domain() {
        return Err(SimError::DomainMismatch);
    }
    let domain = first.domain();
    let (grid, h, n) = build_grid(&domain, opts.step)?;
    let xs: Vec<f64> = grid
        .iter()
        .map(|&t| input.value(t, &domain))
        .collect::<Result<_, _>>()?;

    let f1 = StateForm::new(first);
    let f2 = StateForm::new(second);
    let (n1, n2) = (f1.dim(), f2.dim());
    let dim = n1 + n2;

    // Overall output given the joint state and outer input at time t.
    let overall = |t: f64, z: &[f64], x: f64| -> Result<f64, SimError> {
        let y1 = f1.output(t, &z[..n1], x)?;
        f2.output(t, &z[n1..], y1)
    };

    if dim == 0 {
        let mut output = Vec::with_capacity(n + 1);
        for (k, &t) in grid.iter().enumerate() {
            output.push(check_value(overall(t, &[], xs[k])?, t)?);
        }
        return Ok(Trace {
            grid,
            input: xs,
            output,
            state_dim: 0,
        });
    }

    let mut z = vec![0.0; dim];
    let mut rk4 = Rk4::new(dim);
    let mut deriv = |t: f64, z: &[f64], dz: &mut [f64]| {
        let x = input.value(t, &domain)?;
        let y1 = f1.output(t, &z[..n1], x)?;
        let (dz1, dz2) = dz.split_at_mut(n1);
        if n1 > 0 {
            f1.derivative(t, &z[..n1], x, dz1)?;
        }
        if n2 > 0 {
            f2.derivative(t, &z[n1..], y1, dz2)?;
        }
        Ok(())
    };

    let mut output = Vec::with_capacity(n + 1);
    output.push(check_value(overall(grid[0], &z, xs[0])?, grid[0])?);
    for k in 0..n {
        rk4.step(&mut deriv, grid[k], h, &mut z)?;
        check_state(&z, grid[k + 1])?;
        output.push(check_value(overall(grid[k + 1], &z, xs[k + 1])?, grid[k + 1])?);
    }
    Ok(Trace {
        grid,
        input: xs,
        output,
        state_dim: dim,
    })
}

/// Simulate the feedback loop around `base` directly: at every derivative
/// evaluation the plant input is `alpha(t) * (x(t) - beta(t) * y)`.
pub fn simulate_closed_loop(
    base: &LtvSystem,
    gains: &GainPair,
    input: &Signal,
    opts: &SolverOptions,
) -> Result<Trace, SimError> {
    let domain = base.domain();
    gains.validate_on(&domain)?;
    let (grid, h, n) = build_grid(&domain, opts.step)?;
    let xs: Vec<f64> = grid
        .iter()
        .map(|&t| input.value(t, &domain))
        .collect::<Result<_, _>>()?;

    if base.order() == 0 {
        // y = a0^-1 * alpha (x - beta y)  =>  y = alpha x / (a0 + alpha beta).
        let mut output = Vec::with_capacity(n + 1);
        for (k, &t) in grid.iter().enumerate() {
            let a0 = base.coeff(0).eval(t)?;
            let alpha = gains.alpha.eval(t)?;
            let beta = gains.beta.eval(t)?;
            output.push(check_value(alpha * xs[k] / (a0 + alpha * beta), t)?);
        }
        return Ok(Trace {
            grid,
            input: xs,
            output,
            state_dim: 0,
        });
    }

    let form = StateForm::new(base);
    let dim = form.dim();
    let mut z = vec![0.0; dim];
    let mut rk4 = Rk4::new(dim);
    let mut deriv = |t: f64, z: &[f64], dz: &mut [f64]| {
        let x = input.value(t, &domain)?;
        let alpha = gains.alpha.eval(t)?;
        let beta = gains.beta.eval(t)?;
        let u = alpha * (x - beta * z[0]);
        form.derivative(t, z, u, dz)
    };
    let mut output = Vec::with_capacity(n + 1);
    output.push(z[0]);
    for k in 0..n {
        rk4.step(&mut deriv, grid[k], h, &mut z)?;
        check_state(&z, grid[k + 1])?;
        output.push(z[0]);
    }
    Ok(Trace {
        grid,
        input: xs,
        output,
        state_dim: dim,
    })
}

/// Normalized worst-case output difference between two traces on the same
/// grid: `max_k |y_a - y_b| / (1 + max_k max(|y_a|, |y_b|))`.
///
/// Nonnegative, symmetric, and zero exactly when the outputs coincide.
pub fn discrepancy(a: &Trace, b: &Trace) -> Result<f64, SimError> {
    if a.len() != b.len() {
        return Err(SimError::GridMismatch);
    }
    for (ta, tb) in a.grid.iter().zip(&b.grid) {
        if (ta - tb).abs() > 1e-12 {
            return Err(SimError::GridMismatch);
        }
    }
    let mut max_diff: f64 = 0.0;
    let mut max_mag: f64 = 0.0;
    for k in 0..a.len() {
        max_diff = max_diff.max((a.output[k] - b.output[k]).abs());
        max_mag = max_mag.max(a.output[k].abs()).max(b.output[k].abs());
    }
    Ok(max_diff / (1.0 + max_mag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::GainPair;

    fn interval(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn sys(coeffs: &[&str], dom: (f64, f64)) -> LtvSystem {
        LtvSystem::from_strs(coeffs, interval(dom.0, dom.1)).unwrap()
    }

    #[test]
    fn companion_derivative_first_order() {
        // y' + t y = x  =>  z' = x - t z; at (t=2, z=3, x=1) that is -5.
        let s = sys(&["t", "1"], (0.0, 5.0));
        let form = StateForm::new(&s);
        let mut dz = [0.0];
        form.derivative(2.0, &[3.0], 1.0, &mut dz).unwrap();
        assert_eq!(dz[0], -5.0);
    }

    #[test]
    fn companion_derivative_second_order() {
        // y'' = x: dz = (z2, x).
        let s = sys(&["0", "0", "1"], (0.0, 5.0));
        let form = StateForm::new(&s);
        let mut dz = [0.0, 0.0];
        form.derivative(0.0, &[1.0, 2.0], 5.0, &mut dz).unwrap();
        assert_eq!(dz, [2.0, 5.0]);
    }

    #[test]
    fn scalar_output_is_algebraic() {
        let s = sys(&["t+1"], (0.0, 5.0));
        let form = StateForm::new(&s);
        assert_eq!(form.output(2.0, &[], 6.0).unwrap(), 2.0);
    }

    #[test]
    fn step_response_matches_analytic_solution() {
        // y' + y = 1 from rest: y = 1 - exp(-t).
        let s = sys(&["1", "1"], (0.0, 1.0));
        let trace = simulate(&s, &Signal::Step, &SolverOptions::default()).unwrap();
        let mut worst: f64 = 0.0;
        for (k, &t) in trace.grid.iter().enumerate() {
            worst = worst.max((trace.output[k] - (1.0 - (-t).exp())).abs());
        }
        assert!(worst < 1e-9, "worst error {worst}");
        assert!((trace.final_output() - 0.6321206).abs() < 1e-7);
    }

    #[test]
    fn zero_input_stays_exactly_at_rest() {
        let s = sys(&["2+sin(t)", "1+t^2", "t+1"], (0.0, 5.0));
        let zero = Signal::Analytic(crate::expr::Expr::Constant(0.0));
        let trace = simulate(&s, &zero, &SolverOptions::default()).unwrap();
        assert!(trace.output.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn pure_integrator_is_exact_on_ramp() {
        // y' = x with a unit step: y(t) = t, and RK4 is exact on it.
        let s = sys(&["0", "1"], (0.0, 1.0));
        let trace = simulate(&s, &Signal::Step, &SolverOptions::default()).unwrap();
        for (k, &t) in trace.grid.iter().enumerate() {
            assert!((trace.output[k] - t).abs() < 1e-12);
        }
    }

    #[test]
    fn rk4_error_shrinks_at_fourth_order() {
        let s = sys(&["1", "1"], (0.0, 1.0));
        let error_at = |h: f64| -> f64 {
            let trace = simulate(&s, &Signal::Step, &SolverOptions::with_step(h)).unwrap();
            trace
                .grid
                .iter()
                .enumerate()
                .map(|(k, &t)| (trace.output[k] - (1.0 - (-t).exp())).abs())
                .fold(0.0, f64::max)
        };
        for h in [1e-2, 5e-3] {
            let ratio = error_at(h) / error_at(h / 2.0);
            assert!(
                (14.0..=18.0).contains(&ratio),
                "convergence ratio {ratio} at h={h}"
            );
        }
    }

    #[test]
    fn cascade_of_identical_systems_is_symmetric() {
        let s = sys(&["1", "1"], (0.0, 5.0));
        let opts = SolverOptions::default();
        let ab = simulate_cascade(&s, &s, &Signal::Step, &opts).unwrap();
        let ba = simulate_cascade(&s, &s, &Signal::Step, &opts).unwrap();
        assert_eq!(discrepancy(&ab, &ba).unwrap(), 0.0);
    }

    #[test]
    fn scalar_cascade_multiplies_pointwise() {
        let a = sys(&["2"], (0.0, 5.0));
        let b = sys(&["t+1"], (0.0, 5.0));
        let opts = SolverOptions::default();
        let ab = simulate_cascade(&a, &b, &Signal::Step, &opts).unwrap();
        let ba = simulate_cascade(&b, &a, &Signal::Step, &opts).unwrap();
        for (k, &t) in ab.grid.iter().enumerate() {
            let expected = 1.0 / (2.0 * (t + 1.0));
            assert!((ab.output[k] - expected).abs() < 1e-14);
        }
        assert!(discrepancy(&ab, &ba).unwrap() < 1e-15);
    }

    #[test]
    fn cascade_orders_agree_for_constant_gain_conjugate() {
        let a = sys(&["t", "1"], (0.0, 5.0));
        let b = a.feedback_conjugate(&GainPair::constant(2.0, 1.0)).unwrap();
        let opts = SolverOptions::default();
        let ab = simulate_cascade(&a, &b, &Signal::Step, &opts).unwrap();
        let ba = simulate_cascade(&b, &a, &Signal::Step, &opts).unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..ab.len() {
            worst = worst.max((ab.output[k] - ba.output[k]).abs());
        }
        assert!(worst < 1e-6, "max |y_ab - y_ba| = {worst}");
    }

    #[test]
    fn mixed_domain_cascade_is_rejected() {
        let a = sys(&["1", "1"], (0.0, 5.0));
        let b = sys(&["1", "1"], (0.0, 4.0));
        assert!(matches!(
            simulate_cascade(&a, &b, &Signal::Step, &SolverOptions::default()),
            Err(SimError::DomainMismatch)
        ));
    }

    #[test]
    fn closed_loop_identity_gains_reproduce_plant() {
        let s = sys(&["t", "1"], (0.0, 5.0));
        let opts = SolverOptions::default();
        let direct = simulate(&s, &Signal::Step, &opts).unwrap();
        let looped =
            simulate_closed_loop(&s, &GainPair::constant(1.0, 0.0), &Signal::Step, &opts).unwrap();
        assert!(discrepancy(&direct, &looped).unwrap() < 1e-12);
    }

    #[test]
    fn closed_loop_matches_realized_conjugate() {
        let s = sys(&["t", "1"], (0.0, 5.0));
        let gains = GainPair::from_strs("1+0.5*sin(t)", "0.5*t");
        let opts = SolverOptions::default();
        let looped = simulate_closed_loop(&s, &gains, &Signal::Step, &opts).unwrap();
        let realized = simulate(&s.feedback_conjugate(&gains).unwrap(), &Signal::Step, &opts)
            .unwrap();
        let mut worst: f64 = 0.0;
        for k in 0..looped.len() {
            worst = worst.max((looped.output[k] - realized.output[k]).abs());
        }
        assert!(worst < 2e-8, "max abs difference {worst}");
    }

    #[test]
    fn high_gain_feedback_pins_output_near_inverse_gain() {
        let s = sys(&["1", "1"], (0.0, 5.0));
        let gains = GainPair::constant(1.0, 1e3);
        let trace =
            simulate_closed_loop(&s, &gains, &Signal::Step, &SolverOptions::default()).unwrap();
        let y_end = trace.final_output();
        assert!((y_end - 1.0 / 1001.0).abs() < 1e-6, "steady state {y_end}");
        assert!(y_end > 0.0 && y_end < 2e-3);
    }

    #[test]
    fn scaling_the_input_scales_the_output() {
        let s = sys(&["1+t", "1"], (0.0, 5.0));
        let opts = SolverOptions::default();
        let base = simulate(
            &s,
            &Signal::Sinusoid {
                amplitude: 1.0,
                omega: 2.0,
                phase: 0.0,
            },
            &opts,
        )
        .unwrap();
        for c in [0.5, 3.5, -2.0] {
            let scaled = simulate(
                &s,
                &Signal::Sinusoid {
                    amplitude: c,
                    omega: 2.0,
                    phase: 0.0,
                },
                &opts,
            )
            .unwrap();
            for k in 0..base.len() {
                let expected = c * base.output[k];
                assert!(
                    (scaled.output[k] - expected).abs() <= 1e-10 * (1.0 + expected.abs()),
                    "linearity violated at k={k} for c={c}"
                );
            }
        }
    }

    #[test]
    fn unstable_loop_reports_blowup_time() {
        // Strongly positive feedback drives exponential growth past the
        // blow-up threshold well before the end of a long domain.
        let s = sys(&["1", "1"], (0.0, 40.0));
        let gains = GainPair::constant(1.0, -3.0);
        let err = simulate_closed_loop(&s, &gains, &Signal::Step, &SolverOptions::default())
            .unwrap_err();
        match err {
            SimError::NonFiniteState { t } => assert!(t > 0.0 && t < 40.0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn discrepancy_examples() {
        let mk = |val: f64| Trace {
            grid: vec![0.0, 1.0, 2.0],
            input: vec![1.0; 3],
            output: vec![val; 3],
            state_dim: 1,
        };
        assert_eq!(discrepancy(&mk(0.0), &mk(0.0)).unwrap(), 0.0);
        assert_eq!(discrepancy(&mk(0.0), &mk(1.0)).unwrap(), 0.5);
        assert_eq!(discrepancy(&mk(0.0), &mk(3.0)).unwrap(), 0.75);
        assert_eq!(
            discrepancy(&mk(0.0), &mk(3.0)).unwrap(),
            discrepancy(&mk(3.0), &mk(0.0)).unwrap()
        );
    }

    #[test]
    fn too_coarse_step_is_rejected() {
        let s = sys(&["1", "1"], (0.0, 1.0));
        assert!(matches!(
            simulate(&s, &Signal::Step, &SolverOptions::with_step(0.5)),
            Err(SimError::BadStep { .. })
        ));
    }

    #[test]
    fn csv_export_has_header_and_full_precision() {
        let s = sys(&["1", "1"], (0.0, 1.0));
        let trace = simulate(&s, &Signal::Step, &SolverOptions::with_step(0.1)).unwrap();
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x,y"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 3);
        // 17 significant digits means a mantissa with 16 decimals.
        assert!(row[0].contains("e0") || row[0].contains("e-"));
        let reparsed: f64 = row[2].parse().unwrap();
        assert_eq!(reparsed, trace.output[0]);
    }
}
