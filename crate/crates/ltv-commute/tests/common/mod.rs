//! Shared helpers for the integration test batteries.

use ltv_commute::sim::Signal;
use ltv_commute::systems::{GainPair, Interval, LtvSystem};
use ltv_commute::Expr;

pub fn interval(start: f64, end: f64) -> Interval {
    Interval::new(start, end).unwrap()
}

pub fn sys(coeffs: &[&str], domain: Interval) -> LtvSystem {
    LtvSystem::from_strs(coeffs, domain).unwrap()
}

pub fn gains(alpha: &str, beta: &str) -> GainPair {
    GainPair::from_strs(alpha, beta)
}

pub fn probes(domain: &Interval) -> Vec<Signal> {
    Signal::default_probes(domain)
}

pub fn expr(text: &str) -> Expr {
    Expr::parse(text).unwrap()
}

/// Deterministic uniform draws in [0, 1); a tiny linear congruential
/// generator so battery cases are reproducible across platforms and crate
/// versions.
pub struct DetRng(u64);

impl DetRng {
    pub fn new(seed: u64) -> Self {
        DetRng(seed)
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
    }

    pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        let idx = (self.next_f64() * items.len() as f64) as usize;
        &items[idx.min(items.len() - 1)]
    }
}

/// Base systems used by the conjugate batteries: coefficient lists
/// (low-to-high) over orders 1 through 3, built from the menu
/// {1, t, t+1, 1+t^2, exp(0.2 t), 2+sin t} with nonvanishing leading terms.
pub fn battery_bases() -> Vec<Vec<&'static str>> {
    vec![
        vec!["t", "1"],
        vec!["1", "t+1"],
        vec!["2+sin(t)", "1+t^2"],
        vec!["t+1", "exp(0.2*t)"],
        vec!["1", "t", "1"],
        vec!["1+t^2", "1", "t+1"],
        vec!["t", "exp(0.2*t)", "2+sin(t)"],
        vec!["1", "2+sin(t)", "t+1", "1"],
        vec!["1", "t+1", "1+t^2", "exp(0.2*t)"],
    ]
}
