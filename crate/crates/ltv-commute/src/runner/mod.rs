//! Config-driven batch experiments.
//!
//! A JSON config declares named systems, gain pairs, and signals, plus an
//! ordered experiment list. [`run`] executes every experiment, writes trace
//! and plot CSVs, and emits a deterministic JSON report (no timestamps, so
//! identical configs produce byte-identical reports).

mod config;

pub use config::{load_config, ConfigError, Experiment, ExperimentConfig};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::commute::{
    gain_constancy_check, gain_relation_fit, numerical_commute_check, structural_check_n1,
    structural_check_n2, CommuteError, GainDecision, CONSTANCY_TOL,
};
use crate::sim::{
    discrepancy, simulate, simulate_cascade, simulate_closed_loop, SimError, Trace,
};
use crate::systems::{Interval, SystemError};

/// Grid resolution for structural and gain-level experiments.
const ANALYSIS_GRID_POINTS: usize = 1001;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("report serialization failed: {0}")]
    Serialize(#[from] serde_json::Error),
    #[error("unknown experiment `{id}`")]
    UnknownExperiment { id: String },
    #[error("experiment `{id}` has kind `{kind}`, which produces no cascade plot")]
    WrongExperimentKind { id: String, kind: String },
    #[error("experiment `{id}` did not succeed, so there is nothing to plot")]
    ExperimentFailed { id: String },
}

/// Discrepancies of one probe at the nominal and refined steps.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProbeRecord {
    pub signal: String,
    pub at_step: f64,
    pub at_half_step: f64,
}

/// One experiment's results. Fields irrelevant to the experiment kind stay
/// absent from the JSON.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct ExperimentRecord {
    pub id: String,
    pub kind: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decision: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_discrepancy_at_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_discrepancy_at_half_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_probe: Option<Vec<ProbeRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_signal: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub satisfied: Option<bool>,
    /// Structural constants, highest row first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constants: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_lead: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_zero: Option<f64>,
    /// Realized conjugate coefficients, printed low-to-high.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y_final: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot_file: Option<String>,
}

impl ExperimentRecord {
    fn new(id: &str, kind: &str) -> Self {
        ExperimentRecord {
            id: id.to_string(),
            kind: kind.to_string(),
            ok: true,
            ..Default::default()
        }
    }

    fn failed(id: &str, kind: &str, message: String) -> Self {
        ExperimentRecord {
            id: id.to_string(),
            kind: kind.to_string(),
            ok: false,
            error: Some(message),
            ..Default::default()
        }
    }
}

/// Batch result: one record per configured experiment, in config order.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub version: String,
    pub config_digest: String,
    pub experiments: Vec<ExperimentRecord>,
}

impl Report {
    pub fn to_json_string(&self) -> Result<String, serde_json::Error> {
        serde_json::to_string_pretty(self)
    }

    pub fn experiment(&self, id: &str) -> Option<&ExperimentRecord> {
        self.experiments.iter().find(|r| r.id == id)
    }
}

/// Failures inside one experiment are recorded, not fatal; IO failures are.
enum ExecError {
    Experiment(String),
    Fatal(RunError),
}

impl From<CommuteError> for ExecError {
    fn from(e: CommuteError) -> Self {
        ExecError::Experiment(e.to_string())
    }
}

impl From<SimError> for ExecError {
    fn from(e: SimError) -> Self {
        ExecError::Experiment(e.to_string())
    }
}

impl From<SystemError> for ExecError {
    fn from(e: SystemError) -> Self {
        ExecError::Experiment(e.to_string())
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), ExecError> {
    fs::write(path, contents).map_err(|source| {
        ExecError::Fatal(RunError::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn write_trace(trace: &Trace, path: &Path) -> Result<(), ExecError> {
    let mut buf = Vec::with_capacity(trace.len() * 64);
    trace
        .write_csv(&mut buf)
        .expect("writing into a Vec cannot fail");
    write_file(path, &buf)
}

fn write_pair_plot(ab: &Trace, ba: &Trace, path: &Path) -> Result<(), ExecError> {
    let mut buf = Vec::with_capacity(ab.len() * 80);
    writeln!(buf, "t,y_ab,y_ba,diff").expect("writing into a Vec cannot fail");
    for k in 0..ab.len() {
        writeln!(
            buf,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            ab.grid[k],
            ab.output[k],
            ba.output[k],
            ab.output[k] - ba.output[k]
        )
        .expect("writing into a Vec cannot fail");
    }
    write_file(path, &buf)
}

/// Execute every experiment in order, write traces and plots under
/// `out_dir`, and write `report.json` there.
///
/// Individual experiment failures (blow-ups, invalid conjugates, ...) are
/// recorded in the report; only IO and config-level problems abort the run.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<Report, RunError> {
    fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut records = Vec::with_capacity(config.experiments.len());
    for exp in &config.experiments {
        let record = match execute(config, exp, out_dir) {
            Ok(record) => record,
            Err(ExecError::Experiment(message)) => {
                ExperimentRecord::failed(exp.id(), exp.kind_name(), message)
            }
            Err(ExecError::Fatal(e)) => return Err(e),
        };
        records.push(record);
    }
    let report = Report {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_digest: config.digest.clone(),
        experiments: records,
    };
    let path = out_dir.join("report.json");
    let body = report.to_json_string()?;
    fs::write(&path, body).map_err(|source| RunError::Io { path, source })?;
    Ok(report)
}

fn execute(
    config: &ExperimentConfig,
    exp: &Experiment,
    out_dir: &Path,
) -> Result<ExperimentRecord, ExecError> {
    let mut record = ExperimentRecord::new(exp.id(), exp.kind_name());
    match exp {
        Experiment::Simulate { id, system, signal } => {
            let trace = simulate(config.system(system), config.signal(signal), &config.solver)?;
            record.y_final = Some(trace.final_output());
            let name = format!("{id}_trace.csv");
            write_trace(&trace, &out_dir.join(&name))?;
            record.trace_file = Some(name);
        }
        Experiment::Cascade {
            id,
            first,
            second,
            signal,
        } => {
            let first = config.system(first);
            let second = config.system(second);
            let signal = config.signal(signal);
            let ab = simulate_cascade(first, second, signal, &config.solver)?;
            let ba = simulate_cascade(second, first, signal, &config.solver)?;
            record.y_final = Some(ab.final_output());
            record.worst_discrepancy_at_step = Some(discrepancy(&ab, &ba)?);
            let name = format!("{id}_trace.csv");
            write_trace(&ab, &out_dir.join(&name))?;
            record.trace_file = Some(name);
            let plot = format!("{id}_plot.csv");
            write_pair_plot(&ab, &ba, &out_dir.join(&plot))?;
            record.plot_file = Some(plot);
        }
        Experiment::ClosedLoop {
            id,
            system,
            gains,
            signal,
        } => {
            let trace = simulate_closed_loop(
                config.system(system),
                config.gains(gains),
                config.signal(signal),
                &config.solver,
            )?;
            record.y_final = Some(trace.final_output());
            let name = format!("{id}_trace.csv");
            write_trace(&trace, &out_dir.join(&name))?;
            record.trace_file = Some(name);
        }
        Experiment::Commute { id, a, b, signals } => {
            let sys_a = config.system(a);
            let sys_b = config.system(b);
            let probes = config.probe_signals(signals.as_deref(), &sys_a.domain());
            let verdict = numerical_commute_check(sys_a, sys_b, &probes, &config.solver)?;
            record.decision = Some(verdict.decision.to_string());
            record.worst_discrepancy_at_step = Some(verdict.worst_at_step);
            record.worst_discrepancy_at_half_step = Some(verdict.worst_at_half_step);
            record.diagnostic = verdict.failure.clone();
            record.per_probe = Some(
                verdict
                    .per_probe
                    .iter()
                    .map(|p| ProbeRecord {
                        signal: p.signal.clone(),
                        at_step: p.at_step,
                        at_half_step: p.at_half_step,
                    })
                    .collect(),
            );
            if let Some(worst) = verdict.worst_probe() {
                record.worst_signal = Some(worst.signal.clone());
                // The worst probe's traces, re-simulated for plotting.
                let probe = probes
                    .iter()
                    .find(|s| s.to_string() == worst.signal)
                    .expect("worst probe comes from the probe list");
                let ab = simulate_cascade(sys_a, sys_b, probe, &config.solver)?;
                let ba = simulate_cascade(sys_b, sys_a, probe, &config.solver)?;
                let plot = format!("{id}_plot.csv");
                write_pair_plot(&ab, &ba, &out_dir.join(&plot))?;
                record.plot_file = Some(plot);
            }
        }
        Experiment::StructuralN1 { a, b, .. } | Experiment::StructuralN2 { a, b, .. } => {
            let sys_a = config.system(a);
            let sys_b = config.system(b);
            let grid = sys_a.domain().grid(ANALYSIS_GRID_POINTS);
            let result = match exp {
                Experiment::StructuralN1 { .. } => {
                    structural_check_n1(sys_a, sys_b, &grid, CONSTANCY_TOL)?
                }
                _ => structural_check_n2(sys_a, sys_b, &grid, CONSTANCY_TOL)?,
            };
            record.satisfied = Some(result.satisfied);
            record.constants = Some(result.constants);
            record.residuals = Some(result.residuals);
            record.negated = Some(result.negated);
        }
        Experiment::GainConstancy {
            order,
            gains,
            domain,
            ..
        } => {
            let grid = domain.grid(ANALYSIS_GRID_POINTS);
            let result =
                gain_constancy_check(*order, config.gains(gains), &grid, CONSTANCY_TOL)?;
            record.decision = Some(result.decision.to_string());
            record.satisfied = Some(!matches!(result.decision, GainDecision::NotCommutative));
            record.alpha_residual = Some(result.alpha_residual);
            record.beta_residual = Some(result.beta_residual);
            record.c_lead = result.c_lead;
            record.c_zero = result.c_zero;
        }
        Experiment::GainRelation {
            gains1,
            gains2,
            domain,
            ..
        } => {
            let grid = domain.grid(ANALYSIS_GRID_POINTS);
            let fit = gain_relation_fit(
                config.gains(gains1),
                config.gains(gains2),
                &grid,
                CONSTANCY_TOL,
            )?;
            record.satisfied = Some(fit.satisfied);
            record.p = Some(fit.p);
            record.q = Some(fit.q);
            record.alpha_residual = Some(fit.alpha_residual);
            record.beta_residual = Some(fit.beta_residual);
        }
        Experiment::Conjugate { system, gains, .. } => {
            let conj = config.system(system).feedback_conjugate(config.gains(gains))?;
            record.coefficients = Some(conj.coeffs().iter().map(|c| c.to_string()).collect());
        }
    }
    Ok(record)
}

/// Write the plot CSV (`t,y_ab,y_ba,diff`) for a finished commute or cascade
/// experiment, re-simulating the pair deterministically.
///
/// For commute experiments the worst probe at the nominal step is plotted.
pub fn emit_plot_data(
    config: &ExperimentConfig,
    report: &Report,
    experiment_id: &str,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, RunError> {
    let record = report
        .experiment(experiment_id)
        .ok_or_else(|| RunError::UnknownExperiment {
            id: experiment_id.to_string(),
        })?;
    if !record.ok {
        return Err(RunError::ExperimentFailed {
            id: experiment_id.to_string(),
        });
    }
    let exp = config
        .experiments
        .iter()
        .find(|e| e.id() == experiment_id)
        .ok_or_else(|| RunError::UnknownExperiment {
            id: experiment_id.to_string(),
        })?;

    let (first, second, signal) = match exp {
        Experiment::Cascade {
            first,
            second,
            signal,
            ..
        } => (
            config.system(first),
            config.system(second),
            config.signal(signal).clone(),
        ),
        Experiment::Commute { a, b, signals, .. } => {
            let sys_a = config.system(a);
            let probes = config.probe_signals(signals.as_deref(), &sys_a.domain());
            let worst = record
                .worst_signal
                .as_ref()
                .ok_or_else(|| RunError::ExperimentFailed {
                    id: experiment_id.to_string(),
                })?;
            let probe = probes
                .into_iter()
                .find(|s| s.to_string() == *worst)
                .ok_or_else(|| RunError::ExperimentFailed {
                    id: experiment_id.to_string(),
                })?;
            (sys_a, config.system(b), probe)
        }
        other => {
            return Err(RunError::WrongExperimentKind {
                id: experiment_id.to_string(),
                kind: other.kind_name().to_string(),
            })
        }
    };

    fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let io_fatal = |e: ExecError| match e {
        ExecError::Fatal(err) => err,
        ExecError::Experiment(msg) => RunError::ExperimentFailed {
            id: format!("{experiment_id}: {msg}"),
        },
    };
    let ab = simulate_cascade(first, second, &signal, &config.solver)
        .map_err(|e| io_fatal(ExecError::from(e)))?;
    let ba = simulate_cascade(second, first, &signal, &config.solver)
        .map_err(|e| io_fatal(ExecError::from(e)))?;
    let path = out_dir.join(format!("{experiment_id}_plot.csv"));
    write_pair_plot(&ab, &ba, &path).map_err(io_fatal)?;
    Ok(vec![path])
}

/// Domain used when a config omits one.
pub(crate) fn default_domain() -> Interval {
    Interval::new(0.0, 5.0).expect("default domain is valid")
}
