//! Dispatch of a resolved configuration to its experiment driver.

use std::path::PathBuf;

use mqcavity_core::experiments::{
    filter_spectrum, hold_sweep, loading_contour, probe_scan, qubit_filter_spectrum, ramp_sweep,
    ramsey_run, run_evolve, run_iswap, stark_sweep, ExperimentResult,
};

use crate::config::{Plan, Resolved};
use crate::error::CliError;
use crate::output::{format_sig, write_result};

/// Significant digits of the numbers in the one-line summary.
const SUMMARY_DIGITS: usize = 6;

/// Runs the planned experiment without writing anything.
pub fn execute(resolved: &Resolved) -> Result<ExperimentResult, CliError> {
    let cfg = &resolved.config;
    let p = &cfg.system;
    let solver = &cfg.solver;
    let result = match &resolved.plan {
        Plan::Spectrum { g_f } => filter_spectrum(p, g_f.as_ref())?,
        Plan::QubitSpectrum { settings, nu_q } => qubit_filter_spectrum(p, nu_q, settings)?,
        Plan::Iswap(settings) => run_iswap(p, settings, cfg.losses, solver)?,
        Plan::Hold { settings, t_hold } => hold_sweep(p, settings, t_hold, solver)?,
        Plan::Ramp { settings, ramp } => ramp_sweep(p, settings, ramp, solver)?,
        Plan::Contour { settings, ramp } => loading_contour(p, settings, ramp, solver)?,
        Plan::Probe { settings, nu_probe } => probe_scan(p, settings, nu_probe, solver)?,
        Plan::Ramsey { settings, tau } => ramsey_run(p, settings, tau, solver)?,
        Plan::Stark {
            settings,
            nu_q2,
            tau,
        } => stark_sweep(p, settings, nu_q2, tau, solver)?,
        Plan::Evolve(settings) => run_evolve(p, settings, solver)?,
    };
    Ok(result)
}

/// `"<tag>: name=value …"` over every headline scalar.
pub fn summary_line(result: &ExperimentResult) -> String {
    let mut line = format!("{}:", result.kind);
    for (name, v) in &result.scalars {
        line.push_str(&format!(" {name}={}", format_sig(*v, SUMMARY_DIGITS)));
    }
    line
}

/// Runs the experiment and writes its outputs; returns the summary line and the
/// CSV files written.
pub fn run(resolved: &Resolved) -> Result<(String, Vec<PathBuf>), CliError> {
    let result = execute(resolved)?;
    let files = write_result(&result, resolved)?;
    Ok((summary_line(&result), files))
}
