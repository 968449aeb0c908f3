use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{par_map, ExperimentResult, PreparedSystem, SweepSpec, Table};
use crate::dynamics::SolverSettings;
use crate::error::{Error, Result};
use crate::model::{single_excitation_block, SystemParams};
use crate::operator::herm_eigvals;
use crate::pulses::{ProbeSpec, Schedule};

/// Options of the probe-frequency scan (exploratory study).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSettings {
    /// Drive amplitude `Ω_p` (rad/ns).
    pub omega_p: f64,
    /// Length of each driven evolution (ns).
    pub duration: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            omega_p: 0.01,
            duration: 300.0,
        }
    }
}

impl ProbeSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_p >= 0.0) || !self.omega_p.is_finite() {
            return Err(Error::param("omega_p", ">= 0"));
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(Error::param("duration", "> 0"));
        }
        Ok(())
    }
}

fn time_average(times: &[f64], values: &[f64]) -> f64 {
    let span = times.last().copied().unwrap_or(0.0) - times.first().copied().unwrap_or(0.0);
    if span <= 0.0 {
        return values.first().copied().unwrap_or(0.0);
    }
    let area: f64 = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum();
    area / span
}

/// Closed-system response of q1 to a weak coherent drive, versus drive frequency.
///
/// Both qubits stay at their idle frequencies; each point starts in the global ground
/// state and reports the time-averaged `n_q1`.
pub fn probe_scan(
    params: &SystemParams,
    settings: &ProbeSettings,
    sweep: &SweepSpec,
    solver: &SolverSettings,
) -> Result<ExperimentResult> {
    params.validate_model()?;
    settings.validate()?;
    sweep.validate()?;
    solver.validate()?;
    if sweep.parameter != "nu_probe" {
        return Err(Error::param("sweep.parameter", "\"nu_probe\" for probe"));
    }
    let p = params.lossless();
    let sys = PreparedSystem::new(&p, None)?;
    let ground = vec![0; p.n_cavities + 2];
    let psi0 = sys.basis_ket(&ground)?;
    let schedule = Schedule::idle(&p);
    let nus = sweep.values();
    let runs = par_map(&nus, |&nu| {
        let probe = ProbeSpec {
            omega_p: settings.omega_p,
            nu_probe: nu,
        };
        sys.run(
            &schedule,
            Some(probe),
            &psi0,
            settings.duration,
            false,
            solver,
            false,
            &[],
        )
    })?;
    let mut result = ExperimentResult::new(
        "probe",
        json!({ "settings": settings, "sweep": sweep, "exploratory": true }),
    );
    let mut response = Vec::with_capacity(runs.len());
    let mut peak = Vec::with_capacity(runs.len());
    for run in &runs {
        let nq = run.series.get("n_q1").unwrap_or(&[]);
        response.push(time_average(&run.series.times, nq));
        peak.push(nq.iter().copied().fold(0.0, f64::max));
        run.record(&mut result.invariants);
    }
    let best = (0..response.len()).fold(0, |b, i| if response[i] > response[b] { i } else { b });
    result.push_scalar("response_max", response[best]);
    result.push_scalar("nu_at_max_ghz", nus[best]);
    result.tables.push(
        Table::new("probe")
            .with("nu_probe", nus)
            .with("response", response)
            .with("n_q1_max", peak),
    );
    let eig = herm_eigvals(&single_excitation_block(&p, p.nu_q1_idle, p.nu_q2_idle))?;
    result.tables.push(
        Table::new("probe_eigenfrequencies")
            .with("branch", (0..eig.len()).map(|i| i as f64).collect())
            .with("nu_ghz", eig),
    );
    Ok(result)
}
