use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{par_map, ExperimentResult, PreparedSystem, SweepSpec, Table};
use crate::dynamics::SolverSettings;
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::pulses::{resonance_target, Schedule, Segment, Shape, Trajectory};

/// Options of the hold-time sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HoldSettings {
    /// Ramp duration into and out of resonance (ns).
    pub dt_ramp: f64,
    /// Filter eigenmode (1-based, ascending) q1 is brought to.
    pub target_mode: usize,
    /// Start of the ramp-up (ns).
    pub t_start: f64,
    /// Time recorded after the ramp-down (ns); the settled occupation averages the
    /// last `settle_window` ns of it.
    pub tail: f64,
    pub settle_window: f64,
    pub shape: Shape,
    /// Simulate with the collapse operators of the parameters.
    pub with_losses: bool,
}

impl Default for HoldSettings {
    fn default() -> Self {
        Self {
            dt_ramp: 10.0,
            target_mode: 2,
            t_start: 5.0,
            tail: 20.0,
            settle_window: 10.0,
            shape: Shape::Linear,
            with_losses: false,
        }
    }
}

impl HoldSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dt_ramp", self.dt_ramp),
            ("t_start", self.t_start),
            ("tail", self.tail),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, ">= 0"));
            }
        }
        if !(self.settle_window > 0.0) || self.settle_window > self.tail {
            return Err(Error::param("settle_window", "> 0 and <= tail"));
        }
        Ok(())
    }
}

/// q1 ramped onto a filter mode, held for each `t_H`, and ramped back.
pub fn hold_sweep(
    params: &SystemParams,
    settings: &HoldSettings,
    sweep: &SweepSpec,
    solver: &SolverSettings,
) -> Result<ExperimentResult> {
    params.validate_model()?;
    settings.validate()?;
    sweep.validate()?;
    solver.validate()?;
    if sweep.parameter != "t_hold" {
        return Err(Error::param("sweep.parameter", "\"t_hold\" for hold-sweep"));
    }
    if sweep.min < 0.0 {
        return Err(Error::param("sweep t_hold.min", ">= 0"));
    }
    let nu_mode = resonance_target(params, settings.target_mode)?;
    let run_params = if settings.with_losses {
        params.clone()
    } else {
        params.lossless()
    };
    let sys = PreparedSystem::new(&run_params, Some(1))?;
    let mut initial = vec![0; params.n_cavities + 2];
    initial[0] = 1;
    let psi0 = sys.basis_ket(&initial)?;
    let holds = sweep.values();
    let runs = par_map(&holds, |&t_hold| {
        let seg = Segment::ramped(
            settings.t_start,
            settings.dt_ramp,
            t_hold,
            nu_mode,
            settings.shape,
        );
        let t_end = seg.t_end() + settings.tail;
        let schedule = Schedule {
            q1: Trajectory::new(params.nu_q1_idle, vec![seg])?,
            q2: Trajectory::constant(params.nu_q2_idle),
        };
        sys.run(
            &schedule,
            None,
            &psi0,
            t_end,
            settings.with_losses,
            solver,
            false,
            &[],
        )
    })?;

    let mut result = ExperimentResult::new(
        "hold-sweep",
        json!({ "settings": settings, "sweep": sweep, "nu_mode": nu_mode }),
    );
    let (mut th, mut tt, mut nq) = (vec![], vec![], vec![]);
    let mut finals = Vec::with_capacity(runs.len());
    for (&t_hold, run) in holds.iter().zip(&runs) {
        let ts = &run.series;
        let n_q1 = ts.get("n_q1").unwrap_or(&[]);
        let t_end = ts.times.last().copied().unwrap_or(0.0);
        let window: Vec<f64> = ts
            .times
            .iter()
            .zip(n_q1)
            .filter(|(t, _)| **t >= t_end - settings.settle_window - 1e-9)
            .map(|(_, v)| *v)
            .collect();
        finals.push(window.iter().sum::<f64>() / window.len().max(1) as f64);
        th.extend(std::iter::repeat_n(t_hold, ts.times.len()));
        tt.extend_from_slice(&ts.times);
        nq.extend_from_slice(n_q1);
        run.record(&mut result.invariants);
    }
    result.tables.push(
        Table::new("hold_final")
            .with("t_hold", holds)
            .with("n_q1_final", finals.clone()),
    );
    result.tables.push(
        Table::new("hold_series")
            .with("t_hold", th)
            .with("t_ns", tt)
            .with("n_q1", nq),
    );
    let lo = finals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    result.push_scalar("n_q1_final_min", lo);
    result.push_scalar("n_q1_final_max", hi);
    result.push_scalar("nu_mode_ghz", nu_mode);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_qubit_keeps_its_excitation() {
        let p = SystemParams {
            g_q1f: 0.0,
            ..SystemParams::default()
        };
        let s = SweepSpec::linear("t_hold", 0.0, 20.0, 3);
        let r = hold_sweep(&p, &HoldSettings::default(), &s, &SolverSettings::default()).unwrap();
        for v in r.table("hold_final").unwrap().column("n_q1_final").unwrap() {
            assert!((v - 1.0).abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn wrong_sweep_parameter_rejected() {
        let s = SweepSpec::linear("ramp", 0.0, 20.0, 3);
        assert!(hold_sweep(
            &SystemParams::default(),
            &HoldSettings::default(),
            &s,
            &SolverSettings::default()
        )
        .is_err());
    }
}
