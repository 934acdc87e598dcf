//! Symbolic real-valued functions of a single time variable `t`.
//!
//! The expression language is deliberately small: constants, `t`, the four
//! arithmetic operators, powers with a *constant* real exponent, and the
//! unary functions `sin`, `cos`, `exp`, `ln`, `sqrt`. That is enough to
//! express every coefficient and gain this crate works with, while keeping
//! symbolic differentiation total: the derivative of any [`Expr`] is again
//! an [`Expr`].
//!
//! Expressions are immutable once built and can be shared freely across
//! threads. They are constructed either from text via [`Expr::parse`] or
//! programmatically through the `std::ops` implementations:
//!
//! ```
//! use ltv_commute::expr::Expr;
//!
//! let e = Expr::parse("t^2 + 1").unwrap();
//! assert_eq!(e.eval(2.0).unwrap(), 5.0);
//!
//! let built = Expr::time() * Expr::constant(3.0) + Expr::constant(1.0);
//! assert_eq!(built.eval(2.0).unwrap(), 7.0);
//! ```

mod parser;

pub use parser::ParseError;

use std::fmt;
use std::ops;

use thiserror::Error;

/// Expression tree over the time variable `t`.
///
/// Powers carry a constant real exponent; a general `f(t)^g(t)` is rejected
/// at parse time so that differentiation stays closed over the language.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(f64),
    Time,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Base raised to a constant real exponent.
    Pow(Box<Expr>, f64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
    Sqrt(Box<Expr>),
}

/// Why an evaluation failed at a particular point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DomainFault {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative value")]
    SqrtOfNegative,
    #[error("logarithm of a non-positive value")]
    LnOfNonPositive,
    #[error("non-finite result")]
    NonFinite,
}

/// Evaluation error carrying the offending subexpression and the time.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{fault} in `{node}` at t = {t}")]
pub struct EvalError {
    pub fault: DomainFault,
    /// Printed form of the subexpression that failed.
    pub node: String,
    pub t: f64,
}

impl Expr {
    /// Parse an infix expression over `{numbers, t, + - * / ^, sin, cos, exp, ln, sqrt, ( )}`.
    ///
    /// `^` binds tighter than unary minus, which binds tighter than `*`/`/`,
    /// which bind tighter than `+`/`-`; `^` is right-associative and its
    /// exponent must fold to a constant.
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parser::parse(text)
    }

    pub fn constant(value: f64) -> Expr {
        Expr::Constant(value)
    }

    pub fn time() -> Expr {
        Expr::Time
    }

    pub fn pow(self, exponent: f64) -> Expr {
        Expr::Pow(Box::new(self), exponent)
    }

    pub fn sin(self) -> Expr {
        Expr::Sin(Box::new(self))
    }

    pub fn cos(self) -> Expr {
        Expr::Cos(Box::new(self))
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn ln(self) -> Expr {
        Expr::Ln(Box::new(self))
    }

    pub fn sqrt(self) -> Expr {
        Expr::Sqrt(Box::new(self))
    }

    /// True if the expression mentions `t` anywhere.
    pub fn contains_time(&self) -> bool {
        match self {
            Expr::Constant(_) => false,
            Expr::Time => true,
            Expr::Neg(u) | Expr::Pow(u, _) => u.contains_time(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_time() || b.contains_time()
            }
            Expr::Sin(u) | Expr::Cos(u) | Expr::Exp(u) | Expr::Ln(u) | Expr::Sqrt(u) => {
                u.contains_time()
            }
        }
    }

    /// The value of a time-independent expression, if it has one.
    pub fn constant_value(&self) -> Option<f64> {
        if self.contains_time() {
            return None;
        }
        self.eval(0.0).ok()
    }

    /// Evaluate at time `t`. Any division by zero, `sqrt` of a negative,
    /// `ln` of a non-positive value, or non-finite intermediate is reported
    /// with the offending node.
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let fail = |fault| {
            Err(EvalError {
                fault,
                node: self.to_string(),
                t,
            })
        };
        let value = match self {
            Expr::Constant(c) => *c,
            Expr::Time => t,
            Expr::Neg(u) => -u.eval(t)?,
            Expr::Add(a, b) => a.eval(t)? + b.eval(t)?,
            Expr::Sub(a, b) => a.eval(t)? - b.eval(t)?,
            Expr::Mul(a, b) => a.eval(t)? * b.eval(t)?,
            Expr::Div(a, b) => {
                let den = b.eval(t)?;
                if den == 0.0 {
                    return fail(DomainFault::DivisionByZero);
                }
                a.eval(t)? / den
            }
            Expr::Pow(base, e) => base.eval(t)?.powf(*e),
            Expr::Sin(u) => u.eval(t)?.sin(),
            Expr::Cos(u) => u.eval(t)?.cos(),
            Expr::Exp(u) => u.eval(t)?.exp(),
            Expr::Ln(u) => {
                let v = u.eval(t)?;
                if v <= 0.0 {
                    return fail(DomainFault::LnOfNonPositive);
                }
                v.ln()
            }
            Expr::Sqrt(u) => {
                let v = u.eval(t)?;
                if v < 0.0 {
                    return fail(DomainFault::SqrtOfNegative);
                }
                v.sqrt()
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            fail(DomainFault::NonFinite)
        }
    }

    /// Symbolic derivative with respect to `t`, simplified.
    pub fn differentiate(&self) -> Expr {
        self.derivative().simplify()
    }

    fn derivative(&self) -> Expr {
        match self {
            Expr::Constant(_) => Expr::Constant(0.0),
            Expr::Time => Expr::Constant(1.0),
            Expr::Neg(u) => -u.derivative(),
            Expr::Add(a, b) => a.derivative() + b.derivative(),
            Expr::Sub(a, b) => a.derivative() - b.derivative(),
            Expr::Mul(a, b) => {
                a.derivative() * (**b).clone() + (**a).clone() * b.derivative()
            }
            Expr::Div(a, b) => {
                let num = a.derivative() * (**b).clone() - (**a).clone() * b.derivative();
                num / (**b).clone().pow(2.0)
            }
            Expr::Pow(u, e) => {
                if *e == 0.0 {
                    Expr::Constant(0.0)
                } else if *e == 1.0 {
                    u.derivative()
                } else {
                    Expr::Constant(*e) * (**u).clone().pow(e - 1.0) * u.derivative()
                }
            }
            Expr::Sin(u) => (**u).clone().cos() * u.derivative(),
            Expr::Cos(u) => -((**u).clone().sin()) * u.derivative(),
            Expr::Exp(u) => (**u).clone().exp() * u.derivative(),
            Expr::Ln(u) => u.derivative() / (**u).clone(),
            Expr::Sqrt(u) => u.derivative() / (Expr::Constant(2.0) * (**u).clone().sqrt()),
        }
    }

    /// Constant folding plus `*0`, `*1`, `+0`, `/1`, `^0`, `^1` elimination.
    ///
    /// The result evaluates pointwise equal to the input wherever the input
    /// is defined, and the operation is idempotent.
    pub fn simplify(&self) -> Expr {
        let mut current = self.clone();
        // Every rewrite strictly shrinks the tree, so this terminates.
        loop {
            let next = current.simplify_pass();
            if next == current {
                return next;
            }
            current = next;
        }
    }

    fn simplify_pass(&self) -> Expr {
        use Expr::*;
        match self {
            Constant(_) | Time => self.clone(),
            Neg(u) => match u.simplify_pass() {
                Constant(c) => Constant(-c),
                Neg(inner) => *inner,
                other => -other,
            },
            Add(a, b) => match (a.simplify_pass(), b.simplify_pass()) {
                (Constant(x), Constant(y)) => fold(x + y, || {
                    Expr::Constant(x) + Expr::Constant(y)
                }),
                (Constant(z), rhs) if z == 0.0 => rhs,
                (lhs, Constant(z)) if z == 0.0 => lhs,
                (lhs, rhs) => lhs + rhs,
            },
            Sub(a, b) => match (a.simplify_pass(), b.simplify_pass()) {
                (Constant(x), Constant(y)) => fold(x - y, || {
                    Expr::Constant(x) - Expr::Constant(y)
                }),
                (lhs, Constant(z)) if z == 0.0 => lhs,
                (Constant(z), rhs) if z == 0.0 => -rhs,
                (lhs, rhs) => lhs - rhs,
            },
            Mul(a, b) => match (a.simplify_pass(), b.simplify_pass()) {
                (Constant(x), Constant(y)) => fold(x * y, || {
                    Expr::Constant(x) * Expr::Constant(y)
                }),
                (Constant(z), _) | (_, Constant(z)) if z == 0.0 => Constant(0.0),
                (Constant(o), rhs) if o == 1.0 => rhs,
                (lhs, Constant(o)) if o == 1.0 => lhs,
                (Constant(m), rhs) if m == -1.0 => -rhs,
                (lhs, Constant(m)) if m == -1.0 => -lhs,
                (lhs, rhs) => lhs * rhs,
            },
            Div(a, b) => match (a.simplify_pass(), b.simplify_pass()) {
                (Constant(x), Constant(y)) if y != 0.0 => fold(x / y, || {
                    Expr::Constant(x) / Expr::Constant(y)
                }),
                (Constant(z), Constant(y)) if z == 0.0 && y != 0.0 => Constant(0.0),
                (lhs, Constant(o)) if o == 1.0 => lhs,
                (lhs, rhs) => lhs / rhs,
            },
            Pow(u, e) => match u.simplify_pass() {
                _ if *e == 0.0 => Constant(1.0),
                base if *e == 1.0 => base,
                Constant(c) => fold(c.powf(*e), || Expr::Constant(c).pow(*e)),
                base => base.pow(*e),
            },
            Sin(u) => fold_unary(u.simplify_pass(), f64::sin, Expr::sin),
            Cos(u) => fold_unary(u.simplify_pass(), f64::cos, Expr::cos),
            Exp(u) => fold_unary(u.simplify_pass(), f64::exp, Expr::exp),
            Ln(u) => fold_unary(u.simplify_pass(), f64::ln, Expr::ln),
            Sqrt(u) => fold_unary(u.simplify_pass(), f64::sqrt, Expr::sqrt),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Constant(c) if *c < 0.0 => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    /// Print, parenthesizing whenever this node binds looser than `min`.
    ///
    /// Right operands of binary operators require strictly tighter children,
    /// so the printed form reparses to exactly the same tree shape.
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
            self.fmt_prec(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Constant(c) => write!(f, "{c}"),
            Expr::Time => write!(f, "t"),
            Expr::Neg(u) => {
                write!(f, "-")?;
                u.fmt_prec(f, 4)
            }
            Expr::Add(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " + ")?;
                b.fmt_prec(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_prec(f, 1)?;
                write!(f, " - ")?;
                b.fmt_prec(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "*")?;
                b.fmt_prec(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_prec(f, 2)?;
                write!(f, "/")?;
                b.fmt_prec(f, 3)
            }
            Expr::Pow(base, e) => {
                base.fmt_prec(f, 5)?;
                if *e < 0.0 {
                    write!(f, "^({e})")
                } else {
                    write!(f, "^{e}")
                }
            }
            Expr::Sin(u) => write!(f, "sin({u})"),
            Expr::Cos(u) => write!(f, "cos({u})"),
            Expr::Exp(u) => write!(f, "exp({u})"),
            Expr::Ln(u) => write!(f, "ln({u})"),
            Expr::Sqrt(u) => write!(f, "sqrt({u})"),
        }
    }
}

/// Fold to a constant only when the result is finite; otherwise keep the
/// original node so the domain error still surfaces at evaluation time.
fn fold(value: f64, keep: impl FnOnce() -> Expr) -> Expr {
    if value.is_finite() {
        Expr::Constant(value)
    } else {
        keep()
    }
}

fn fold_unary(operand: Expr, op: fn(f64) -> f64, wrap: fn(Expr) -> Expr) -> Expr {
    match operand {
        Expr::Constant(c) => fold(op(c), || wrap(Expr::Constant(c))),
        other => wrap(other),
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::Div(Box::new(self), Box::new(rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn eval_identity() {
        assert_eq!(parse("t").eval(3.5).unwrap(), 3.5);
    }

    #[test]
    fn eval_polynomial() {
        assert_eq!(parse("t^2 + 1").eval(2.0).unwrap(), 5.0);
    }

    #[test]
    fn eval_offset_sine() {
        // sin(0) = 0, so the offset alone survives at t = 0; the half
        // amplitude shows up at the sine's peak.
        let e = parse("1 + 0.5*sin(t)");
        assert_eq!(e.eval(0.0).unwrap(), 1.0);
        assert_eq!(e.eval(std::f64::consts::FRAC_PI_2).unwrap(), 1.5);
    }

    #[test]
    fn eval_exp_reference_value() {
        assert_eq!(parse("exp(-t)").eval(1.0).unwrap(), 0.36787944117144233);
    }

    #[test]
    fn eval_sqrt_of_negative_fails() {
        let err = parse("sqrt(t)").eval(-1.0).unwrap_err();
        assert_eq!(err.fault, DomainFault::SqrtOfNegative);
        assert_eq!(err.t, -1.0);
    }

    #[test]
    fn eval_division_by_zero_reports_node() {
        let err = parse("1/(t - 2)").eval(2.0).unwrap_err();
        assert_eq!(err.fault, DomainFault::DivisionByZero);
        assert!(err.node.contains('/'), "node was `{}`", err.node);
    }

    #[test]
    fn eval_ln_of_nonpositive_fails() {
        let err = parse("ln(t)").eval(0.0).unwrap_err();
        assert_eq!(err.fault, DomainFault::LnOfNonPositive);
    }

    #[test]
    fn derivative_power_rule() {
        let d = parse("t^2").differentiate();
        assert_eq!(d.eval(3.0).unwrap(), 6.0);
        assert_eq!(d.to_string(), "2*t");
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        assert_eq!(parse("5").differentiate(), Expr::Constant(0.0));
    }

    #[test]
    fn derivative_product_rule_value() {
        // d/dt [sin(t) exp(t)] at 1 is e*(cos 1 + sin 1).
        let d = parse("sin(t)*exp(t)").differentiate();
        let expected = 1f64.exp() * (1f64.cos() + 1f64.sin());
        assert!((d.eval(1.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 3.756049).abs() < 1e-6);
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let corpus = [
            "t^2",
            "sin(2*t)",
            "exp(-t)*cos(t)",
            "ln(t + 1)",
            "sqrt(1 + t^2)",
            "t/(1 + t^2)",
            "t^0.5",
            "(2 + sin(t))*(1 + t^2)",
        ];
        let h = 1e-5;
        for text in corpus {
            let e = parse(text);
            let d = e.differentiate();
            for k in 1..100 {
                let t = 0.2 + 4.6 * k as f64 / 100.0;
                let fd = (e.eval(t + h).unwrap() - e.eval(t - h).unwrap()) / (2.0 * h);
                let sym = d.eval(t).unwrap();
                assert!(
                    (sym - fd).abs() <= 1e-6 * (1.0 + sym.abs()),
                    "{text}: d/dt at {t}: symbolic {sym} vs fd {fd}"
                );
            }
        }
    }

    #[test]
    fn simplify_eliminates_zero_products() {
        assert_eq!(parse("0*t + 3").simplify().to_string(), "3");
    }

    #[test]
    fn simplify_eliminates_unit_factor() {
        assert_eq!(parse("t*1").simplify().to_string(), "t");
    }

    #[test]
    fn simplify_folds_constants() {
        assert_eq!(parse("2+3").simplify().to_string(), "5");
    }

    #[test]
    fn simplify_is_idempotent_on_samples() {
        let corpus = [
            "0*t + 3",
            "t*1 + 0",
            "2 + 3*1",
            "-(t - 0)",
            "(t^1)^1",
            "sin(0*t)",
            "t/(1*1)",
            "2*(1 + 0*t) - -t",
        ];
        for text in corpus {
            let once = parse(text).simplify();
            assert_eq!(once.simplify(), once, "not idempotent on {text}");
        }
    }

    #[test]
    fn simplify_preserves_values() {
        let corpus = ["0*t + 3", "t*1", "2+3", "t^2*1 + 0*sin(t)", "-(0 - t)"];
        for text in corpus {
            let e = parse(text);
            let s = e.simplify();
            for k in 0..=50 {
                let t = -2.0 + 0.1 * k as f64;
                let a = e.eval(t).unwrap();
                let b = s.eval(t).unwrap();
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn print_round_trips_structurally() {
        let corpus = [
            "t/2 + 3",
            "1 - (2 - t)",
            "-t^2",
            "(-t)^2",
            "t^(-0.5)",
            "2*t*sin(t)/(1 + t^2)",
            "exp(-0.5*t)*cos(2*t)",
        ];
        for text in corpus {
            let e = parse(text);
            let reparsed = parse(&e.to_string());
            for k in 0..=100 {
                let t = 0.05 + 4.9 * k as f64 / 100.0;
                let a = e.eval(t).unwrap();
                let b = reparsed.eval(t).unwrap();
                assert!(
                    (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                    "{text} printed as {e} diverges at t={t}"
                );
            }
        }
    }
}
