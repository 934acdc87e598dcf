//! Experiment config schema, loading, and validation.
//!
//! The on-disk format is a single JSON document. Expressions are strings in
//! the crate's expression grammar; system coefficients are listed low-to-high.
//! See the repository README for the full schema.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::expr::{Expr, ParseError};
use crate::sim::{Signal, SimError, SolverOptions};
use crate::systems::{GainPair, Interval, LtvSystem, SystemError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{context}: {source}")]
    Expression {
        context: String,
        source: ParseError,
    },
    #[error("system \"{name}\": {source}")]
    System { name: String, source: SystemError },
    #[error("system \"{name}\": declared order {declared} but {actual} coefficients were given (expected order + 1)")]
    OrderMismatch {
        name: String,
        declared: usize,
        actual: usize,
    },
    #[error("signal \"{name}\": {source}")]
    Signal { name: String, source: SimError },
    #[error("experiment \"{experiment}\" references unknown {kind} \"{name}\"")]
    UnresolvedReference {
        experiment: String,
        kind: &'static str,
        name: String,
    },
    #[error("experiment id \"{id}\" is not a safe file name (use letters, digits, `-`, `_`)")]
    BadExperimentId { id: String },
    #[error("duplicate experiment id \"{id}\"")]
    DuplicateExperimentId { id: String },
    #[error("config declares no experiments")]
    NoExperiments,
    #[error("solver step must be positive and finite, got {step}")]
    BadSolverStep { step: f64 },
    #[error("solver refinement factor must be at least 2, got {refine}")]
    BadRefinement { refine: u32 },
    #[error("domain: {source}")]
    Domain { source: SystemError },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    domain: Option<[f64; 2]>,
    #[serde(default)]
    solver: RawSolver,
    systems: BTreeMap<String, RawSystem>,
    #[serde(default)]
    gains: BTreeMap<String, RawGains>,
    #[serde(default)]
    signals: BTreeMap<String, RawSignal>,
    experiments: Vec<RawExperiment>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    #[serde(default = "default_step")]
    step: f64,
    #[serde(default = "default_refine")]
    refine: u32,
}

fn default_step() -> f64 {
    1e-3
}

fn default_refine() -> u32 {
    2
}

impl Default for RawSolver {
    fn default() -> Self {
        RawSolver {
            step: default_step(),
            refine: default_refine(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    /// Coefficient expressions, low-to-high: entry n multiplies y^(n).
    coeffs: Vec<String>,
    /// Optional declared order; must equal `coeffs.len() - 1` when present.
    #[serde(default)]
    order: Option<usize>,
    #[serde(default)]
    domain: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGains {
    alpha: String,
    beta: String,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum RawSignal {
    Step,
    Sinusoid {
        #[serde(default = "one")]
        amplitude: f64,
        omega: f64,
        #[serde(default)]
        phase: f64,
    },
    Chirp {
        #[serde(default = "one")]
        amplitude: f64,
        f0: f64,
        f1: f64,
    },
    PiecewiseLinear {
        knots: Vec<[f64; 2]>,
    },
    Analytic {
        expr: String,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum RawExperiment {
    #[serde(rename = "simulate")]
    Simulate {
        id: String,
        system: String,
        signal: String,
    },
    #[serde(rename = "cascade")]
    Cascade {
        id: String,
        first: String,
        second: String,
        signal: String,
    },
    #[serde(rename = "closed-loop")]
    ClosedLoop {
        id: String,
        system: String,
        gains: String,
        signal: String,
    },
    #[serde(rename = "commute")]
    Commute {
        id: String,
        a: String,
        b: String,
        #[serde(default)]
        signals: Option<Vec<String>>,
    },
    #[serde(rename = "structural-n1")]
    StructuralN1 { id: String, a: String, b: String },
    #[serde(rename = "structural-n2")]
    StructuralN2 { id: String, a: String, b: String },
    #[serde(rename = "theorem1")]
    Theorem1 {
        id: String,
        order: usize,
        gains: String,
        #[serde(default)]
        domain: Option<[f64; 2]>,
    },
    #[serde(rename = "theorem2")]
    Theorem2 {
        id: String,
        gains1: String,
        gains2: String,
        #[serde(default)]
        domain: Option<[f64; 2]>,
    },
    #[serde(rename = "conjugate")]
    Conjugate {
        id: String,
        system: String,
        gains: String,
    },
}

/// Fully validated experiment, with every reference known to resolve.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Simulate {
        id: String,
        system: String,
        signal: String,
    },
    Cascade {
        id: String,
        first: String,
        second: String,
        signal: String,
    },
    ClosedLoop {
        id: String,
        system: String,
        gains: String,
        signal: String,
    },
    Commute {
        id: String,
        a: String,
        b: String,
        signals: Option<Vec<String>>,
    },
    StructuralN1 {
        id: String,
        a: String,
        b: String,
    },
    StructuralN2 {
        id: String,
        a: String,
        b: String,
    },
    /// Config kind `theorem1`: gain-constancy decision for a conjugate of a
    /// base of the given order.
    GainConstancy {
        id: String,
        order: usize,
        gains: String,
        domain: Interval,
    },
    /// Config kind `theorem2`: pair-relation fit between two conjugates'
    /// gains.
    GainRelation {
        id: String,
        gains1: String,
        gains2: String,
        domain: Interval,
    },
    Conjugate {
        id: String,
        system: String,
        gains: String,
    },
}

impl Experiment {
    pub fn id(&self) -> &str {
        match self {
            Experiment::Simulate { id, .. }
            | Experiment::Cascade { id, .. }
            | Experiment::ClosedLoop { id, .. }
            | Experiment::Commute { id, .. }
            | Experiment::StructuralN1 { id, .. }
            | Experiment::StructuralN2 { id, .. }
            | Experiment::GainConstancy { id, .. }
            | Experiment::GainRelation { id, .. }
            | Experiment::Conjugate { id, .. } => id,
        }
    }

    /// The config-facing kind string.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Experiment::Simulate { .. } => "simulate",
            Experiment::Cascade { .. } => "cascade",
            Experiment::ClosedLoop { .. } => "closed-loop",
            Experiment::Commute { .. } => "commute",
            Experiment::StructuralN1 { .. } => "structural-n1",
            Experiment::StructuralN2 { .. } => "structural-n2",
            Experiment::GainConstancy { .. } => "theorem1",
            Experiment::GainRelation { .. } => "theorem2",
            Experiment::Conjugate { .. } => "conjugate",
        }
    }
}

/// Loaded and validated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub solver: SolverOptions,
    pub systems: BTreeMap<String, LtvSystem>,
    pub gains: BTreeMap<String, GainPair>,
    pub signals: BTreeMap<String, Signal>,
    pub experiments: Vec<Experiment>,
    /// SHA-256 of the raw config bytes, hex-encoded.
    pub digest: String,
}

impl ExperimentConfig {
    /// Parse and validate a config from its JSON text.
    pub fn from_json_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text)?;
        resolve(raw, digest_hex(text.as_bytes()))
    }

    pub(crate) fn system(&self, name: &str) -> &LtvSystem {
        self.systems.get(name).expect("references resolve at load")
    }

    pub(crate) fn gains(&self, name: &str) -> &GainPair {
        self.gains.get(name).expect("references resolve at load")
    }

    pub(crate) fn signal(&self, name: &str) -> &Signal {
        self.signals.get(name).expect("references resolve at load")
    }

    /// Named probe signals, or the default probe family when none are named.
    pub(crate) fn probe_signals(
        &self,
        names: Option<&[String]>,
        domain: &Interval,
    ) -> Vec<Signal> {
        match names {
            Some(names) => names.iter().map(|n| self.signal(n).clone()).collect(),
            None => Signal::default_probes(domain),
        }
    }

    /// Replace the solver step (CLI override).
    pub fn with_step(mut self, step: f64) -> Result<ExperimentConfig, ConfigError> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(ConfigError::BadSolverStep { step });
        }
        self.solver.step = step;
        Ok(self)
    }

    /// Rebuild every system and gain-level experiment on a new domain
    /// (CLI override); systems are re-validated there.
    pub fn with_domain(mut self, start: f64, end: f64) -> Result<ExperimentConfig, ConfigError> {
        let domain = Interval::new(start, end).map_err(|source| ConfigError::Domain { source })?;
        let mut systems = BTreeMap::new();
        for (name, sys) in &self.systems {
            let rebuilt = LtvSystem::new(sys.coeffs().to_vec(), domain).map_err(|source| {
                ConfigError::System {
                    name: name.clone(),
                    source,
                }
            })?;
            systems.insert(name.clone(), rebuilt);
        }
        self.systems = systems;
        for exp in &mut self.experiments {
            match exp {
                Experiment::GainConstancy { domain: d, .. }
                | Experiment::GainRelation { domain: d, .. } => *d = domain,
                _ => {}
            }
        }
        Ok(self)
    }
}

/// Read, parse, and validate a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let bytes = std::fs::read(path)?;
    let raw: RawConfig = serde_json::from_slice(&bytes)?;
    resolve(raw, digest_hex(&bytes))
}

fn digest_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        write!(hex, "{byte:02x}").expect("writing into a String cannot fail");
    }
    hex
}

fn parse_expr(text: &str, context: impl Fn() -> String) -> Result<Expr, ConfigError> {
    Expr::parse(text).map_err(|source| ConfigError::Expression {
        context: context(),
        source,
    })
}

fn make_interval(pair: [f64; 2]) -> Result<Interval, ConfigError> {
    Interval::new(pair[0], pair[1]).map_err(|source| ConfigError::Domain { source })
}

fn resolve(raw: RawConfig, digest: String) -> Result<ExperimentConfig, ConfigError> {
    if !(raw.solver.step > 0.0) || !raw.solver.step.is_finite() {
        return Err(ConfigError::BadSolverStep {
            step: raw.solver.step,
        });
    }
    if raw.solver.refine < 2 {
        return Err(ConfigError::BadRefinement {
            refine: raw.solver.refine,
        });
    }
    let solver = SolverOptions {
        step: raw.solver.step,
        refine: raw.solver.refine,
    };
    let base_domain = match raw.domain {
        Some(pair) => make_interval(pair)?,
        None => super::default_domain(),
    };

    let mut systems = BTreeMap::new();
    for (name, raw_sys) in raw.systems {
        if let Some(declared) = raw_sys.order {
            if declared + 1 != raw_sys.coeffs.len() {
                return Err(ConfigError::OrderMismatch {
                    name,
                    declared,
                    actual: raw_sys.coeffs.len(),
                });
            }
        }
        let mut coeffs = Vec::with_capacity(raw_sys.coeffs.len());
        for (n, text) in raw_sys.coeffs.iter().enumerate() {
            coeffs.push(parse_expr(text, || {
                format!("system \"{name}\" coefficient {n}")
            })?);
        }
        let domain = match raw_sys.domain {
            Some(pair) => make_interval(pair)?,
            None => base_domain,
        };
        let sys = LtvSystem::new(coeffs, domain).map_err(|source| ConfigError::System {
            name: name.clone(),
            source,
        })?;
        systems.insert(name, sys);
    }

    let mut gains = BTreeMap::new();
    for (name, raw_gains) in raw.gains {
        let alpha = parse_expr(&raw_gains.alpha, || format!("gains \"{name}\" alpha"))?;
        let beta = parse_expr(&raw_gains.beta, || format!("gains \"{name}\" beta"))?;
        gains.insert(name, GainPair::new(alpha, beta));
    }

    let mut signals = BTreeMap::new();
    for (name, raw_signal) in raw.signals {
        let signal = match raw_signal {
            RawSignal::Step => Signal::Step,
            RawSignal::Sinusoid {
                amplitude,
                omega,
                phase,
            } => Signal::Sinusoid {
                amplitude,
                omega,
                phase,
            },
            RawSignal::Chirp { amplitude, f0, f1 } => Signal::Chirp { amplitude, f0, f1 },
            RawSignal::PiecewiseLinear { knots } => {
                Signal::piecewise_linear(knots.iter().map(|k| (k[0], k[1])).collect()).map_err(
                    |source| ConfigError::Signal {
                        name: name.clone(),
                        source,
                    },
                )?
            }
            RawSignal::Analytic { expr } => {
                Signal::Analytic(parse_expr(&expr, || format!("signal \"{name}\""))?)
            }
        };
        signals.insert(name, signal);
    }

    if raw.experiments.is_empty() {
        return Err(ConfigError::NoExperiments);
    }

    let mut ids = std::collections::BTreeSet::new();
    let mut experiments = Vec::with_capacity(raw.experiments.len());
    for raw_exp in raw.experiments {
        let exp = resolve_experiment(raw_exp, base_domain)?;
        let id = exp.id();
        if id.is_empty()
            || !id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(ConfigError::BadExperimentId { id: id.to_string() });
        }
        if !ids.insert(id.to_string()) {
            return Err(ConfigError::DuplicateExperimentId { id: id.to_string() });
        }
        check_references(&exp, &systems, &gains, &signals)?;
        experiments.push(exp);
    }

    Ok(ExperimentConfig {
        solver,
        systems,
        gains,
        signals,
        experiments,
        digest,
    })
}

fn resolve_experiment(
    raw: RawExperiment,
    base_domain: Interval,
) -> Result<Experiment, ConfigError> {
    Ok(match raw {
        RawExperiment::Simulate { id, system, signal } => {
            Experiment::Simulate { id, system, signal }
        }
        RawExperiment::Cascade {
            id,
            first,
            second,
            signal,
        } => Experiment::Cascade {
            id,
            first,
            second,
            signal,
        },
        RawExperiment::ClosedLoop {
            id,
            system,
            gains,
            signal,
        } => Experiment::ClosedLoop {
            id,
            system,
            gains,
            signal,
        },
        RawExperiment::Commute { id, a, b, signals } => Experiment::Commute { id, a, b, signals },
        RawExperiment::StructuralN1 { id, a, b } => Experiment::StructuralN1 { id, a, b },
        RawExperiment::StructuralN2 { id, a, b } => Experiment::StructuralN2 { id, a, b },
        RawExperiment::Theorem1 {
            id,
            order,
            gains,
            domain,
        } => Experiment::GainConstancy {
            id,
            order,
            gains,
            domain: match domain {
                Some(pair) => make_interval(pair)?,
                None => base_domain,
            },
        },
        RawExperiment::Theorem2 {
            id,
            gains1,
            gains2,
            domain,
        } => Experiment::GainRelation {
            id,
            gains1,
            gains2,
            domain: match domain {
                Some(pair) => make_interval(pair)?,
                None => base_domain,
            },
        },
        RawExperiment::Conjugate { id, system, gains } => {
            Experiment::Conjugate { id, system, gains }
        }
    })
}

fn check_references(
    exp: &Experiment,
    systems: &BTreeMap<String, LtvSystem>,
    gains: &BTreeMap<String, GainPair>,
    signals: &BTreeMap<String, Signal>,
) -> Result<(), ConfigError> {
    let unresolved = |kind: &'static str, name: &str| ConfigError::UnresolvedReference {
        experiment: exp.id().to_string(),
        kind,
        name: name.to_string(),
    };
    let need_system = |name: &str| {
        systems
            .contains_key(name)
            .then_some(())
            .ok_or_else(|| unresolved("system", name))
    };
    let need_gains = |name: &str| {
        gains
            .contains_key(name)
            .then_some(())
            .ok_or_else(|| unresolved("gains", name))
    };
    let need_signal = |name: &str| {
        signals
            .contains_key(name)
            .then_some(())
            .ok_or_else(|| unresolved("signal", name))
    };

    match exp {
        Experiment::Simulate { system, signal, .. } => {
            need_system(system)?;
            need_signal(signal)?;
        }
        Experiment::Cascade {
            first,
            second,
            signal,
            ..
        } => {
            need_system(first)?;
            need_system(second)?;
            need_signal(signal)?;
        }
        Experiment::ClosedLoop {
            system,
            gains,
            signal,
            ..
        } => {
            need_system(system)?;
            need_gains(gains)?;
            need_signal(signal)?;
        }
        Experiment::Commute { a, b, signals, .. } => {
            need_system(a)?;
            need_system(b)?;
            if let Some(names) = signals {
                for name in names {
                    need_signal(name)?;
                }
            }
        }
        Experiment::StructuralN1 { a, b, .. } | Experiment::StructuralN2 { a, b, .. } => {
            need_system(a)?;
            need_system(b)?;
        }
        Experiment::GainConstancy { gains, .. } => need_gains(gains)?,
        Experiment::GainRelation { gains1, gains2, .. } => {
            need_gains(gains1)?;
            need_gains(gains2)?;
        }
        Experiment::Conjugate { system, gains, .. } => {
            need_system(system)?;
            need_gains(gains)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "systems": {
            "A": { "coeffs": ["t", "1"], "domain": [0.0, 5.0] }
        },
        "gains": {
            "g": { "alpha": "2", "beta": "3" }
        },
        "experiments": [
            { "kind": "theorem1", "id": "t1", "order": 1, "gains": "g" }
        ]
    }"#;

    #[test]
    fn minimal_config_loads() {
        let cfg = ExperimentConfig::from_json_str(MINIMAL).unwrap();
        assert_eq!(cfg.experiments.len(), 1);
        assert_eq!(cfg.solver.step, 1e-3);
        assert_eq!(cfg.experiments[0].kind_name(), "theorem1");
        assert_eq!(cfg.digest.len(), 64);
    }

    #[test]
    fn unresolved_reference_is_named() {
        let text = r#"{
            "systems": { "A": { "coeffs": ["t", "1"] } },
            "experiments": [
                { "kind": "commute", "id": "c", "a": "A", "b": "Z" }
            ]
        }"#;
        match ExperimentConfig::from_json_str(text).unwrap_err() {
            ConfigError::UnresolvedReference { name, kind, .. } => {
                assert_eq!(name, "Z");
                assert_eq!(kind, "system");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn vanishing_leading_coefficient_names_the_system() {
        let text = r#"{
            "systems": { "A": { "coeffs": ["1", "t"], "domain": [0.0, 5.0] } },
            "experiments": [
                { "kind": "simulate", "id": "s", "system": "A", "signal": "x" }
            ]
        }"#;
        let err = ExperimentConfig::from_json_str(text).unwrap_err();
        match &err {
            ConfigError::System { name, source } => {
                assert_eq!(name, "A");
                assert!(matches!(
                    source,
                    SystemError::VanishingLeadingCoefficient { .. }
                ));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn declared_order_must_match_coefficients() {
        let text = r#"{
            "systems": { "A": { "coeffs": ["t", "1"], "order": 2 } },
            "experiments": [
                { "kind": "structural-n1", "id": "s", "a": "A", "b": "A" }
            ]
        }"#;
        assert!(matches!(
            ExperimentConfig::from_json_str(text).unwrap_err(),
            ConfigError::OrderMismatch { declared: 2, .. }
        ));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = r#"{
            "systems": { "A": { "coeffs": ["t", "1"] } },
            "experiments": [
                { "kind": "structural-n1", "id": "dup", "a": "A", "b": "A" },
                { "kind": "structural-n1", "id": "dup", "a": "A", "b": "A" }
            ]
        }"#;
        assert!(matches!(
            ExperimentConfig::from_json_str(text).unwrap_err(),
            ConfigError::DuplicateExperimentId { .. }
        ));
    }

    #[test]
    fn empty_experiment_list_is_rejected() {
        let text = r#"{ "systems": {}, "experiments": [] }"#;
        assert!(matches!(
            ExperimentConfig::from_json_str(text).unwrap_err(),
            ConfigError::NoExperiments
        ));
    }

    #[test]
    fn expression_errors_carry_context() {
        let text = r#"{
            "systems": { "A": { "coeffs": ["2*(1+", "1"] } },
            "experiments": [
                { "kind": "structural-n1", "id": "s", "a": "A", "b": "A" }
            ]
        }"#;
        match ExperimentConfig::from_json_str(text).unwrap_err() {
            ConfigError::Expression { context, .. } => {
                assert!(context.contains("\"A\" coefficient 0"), "{context}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn domain_override_revalidates_systems() {
        let cfg = ExperimentConfig::from_json_str(MINIMAL).unwrap();
        // Over [-1, 5] the leading coefficient stays 1, fine:
        let cfg = cfg.with_domain(-1.0, 5.0).unwrap();
        assert_eq!(cfg.systems["A"].domain().start(), -1.0);
        // A domain that breaks a system is rejected with the system's name.
        let text = r#"{
            "systems": { "B": { "coeffs": ["1", "t"], "domain": [1.0, 5.0] } },
            "experiments": [
                { "kind": "simulate", "id": "s", "system": "B", "signal": "x" },
                { "kind": "theorem1", "id": "t", "order": 1, "gains": "g" }
            ],
            "gains": { "g": { "alpha": "1", "beta": "0" } },
            "signals": { "x": { "kind": "step" } }
        }"#;
        let cfg = ExperimentConfig::from_json_str(text).unwrap();
        assert!(matches!(
            cfg.with_domain(0.0, 5.0).unwrap_err(),
            ConfigError::System { .. }
        ));
    }
}
