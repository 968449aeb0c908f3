use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ExperimentResult, PreparedSystem, Table};
use crate::dynamics::SolverSettings;
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::pulses::{ProbeSpec, Schedule, Segment, Trajectory};

/// Options of a free-form evolution under user-supplied pulses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveSettings {
    /// Initial product state `[q1, f1…fn, q2]`; defaults to q1 excited.
    pub initial: Option<Vec<usize>>,
    pub t_end: f64,
    /// Excursions of each qubit from its idle frequency.
    pub q1_segments: Vec<Segment>,
    pub q2_segments: Vec<Segment>,
    pub probe: Option<ProbeSpec>,
    pub with_losses: bool,
    /// Excitation-number cap of the simulated subspace; defaults to the initial
    /// state's excitation count, or the full space when a probe is present.
    pub max_excitations: Option<usize>,
}

impl Default for EvolveSettings {
    fn default() -> Self {
        Self {
            initial: None,
            t_end: 100.0,
            q1_segments: vec![],
            q2_segments: vec![],
            probe: None,
            with_losses: false,
            max_excitations: None,
        }
    }
}

impl EvolveSettings {
    pub fn resolved(&self, params: &SystemParams) -> Self {
        let n = params.n_cavities;
        let initial = self.initial.clone().unwrap_or_else(|| {
            let mut v = vec![0; n + 2];
            v[0] = 1;
            v
        });
        let max_excitations = match (self.max_excitations, self.probe) {
            (Some(k), _) => Some(k),
            (None, Some(_)) => None,
            (None, None) => Some(initial.iter().sum()),
        };
        Self {
            initial: Some(initial),
            q1_segments: self.q1_segments.iter().map(Segment::resolved).collect(),
            q2_segments: self.q2_segments.iter().map(Segment::resolved).collect(),
            max_excitations,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::param("t_end", "> 0"));
        }
        Ok(())
    }
}

/// Occupations of every subsystem along an arbitrary pulse schedule.
pub fn run_evolve(
    params: &SystemParams,
    settings: &EvolveSettings,
    solver: &SolverSettings,
) -> Result<ExperimentResult> {
    params.validate_model()?;
    settings.validate()?;
    solver.validate()?;
    let settings = settings.resolved(params);
    let run_params = if settings.with_losses {
        params.clone()
    } else {
        params.lossless()
    };
    let sys = PreparedSystem::new(&run_params, settings.max_excitations)?;
    let schedule = Schedule {
        q1: Trajectory::new(params.nu_q1_idle, settings.q1_segments.clone())?,
        q2: Trajectory::new(params.nu_q2_idle, settings.q2_segments.clone())?,
    };
    let psi0 = sys.basis_ket(settings.initial.as_deref().unwrap_or_default())?;
    let run = sys.run(
        &schedule,
        settings.probe,
        &psi0,
        settings.t_end,
        settings.with_losses,
        solver,
        false,
        &[],
    )?;
    let mut result = ExperimentResult::new("evolve", json!({ "settings": settings }));
    let ts = &run.series;
    let mut table = Table::new("evolve").with("t_ns", ts.times.clone());
    for (name, values) in &ts.series {
        table.push(name.clone(), values.clone());
    }
    result.tables.push(table);
    for name in ["n_q1", "n_q2", "n_total"] {
        if let Some(v) = ts.last(name) {
            result.push_scalar(format!("{name}_final"), v);
        }
    }
    run.record(&mut result.invariants);
    Ok(result)
}
