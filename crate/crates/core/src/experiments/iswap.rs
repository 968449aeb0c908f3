use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ExperimentResult, PreparedSystem, Table};
use crate::analysis::{concurrence, overlap_fidelity};
use crate::dynamics::SolverSettings;
use crate::error::{Error, Result};
use crate::model::{filter_block, SystemParams};
use crate::operator::herm_eig;
use crate::pulses::{resonance_target, Schedule, Segment, Trajectory};

/// How the two interaction windows are timed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Timing {
    /// `t₁ = 1/(4g_q1f)`, `t₂ = 1/(2g_q2f)`: the bare qubit–cavity couplings.
    #[default]
    Literal,
    /// Same formulas with `g` replaced by the qubit's coupling to the target eigenmode,
    /// `g·|u_k(adjacent site)|`.
    Eigenmode,
}

/// Options of the sequential excitation-exchange gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IswapSettings {
    /// Start of the q1 interaction window (ns).
    pub t_offset1: f64,
    /// Start of the q2 interaction window (ns).
    pub t_offset2: f64,
    pub timing: Timing,
    /// Filter eigenmode (1-based, ascending) both qubits are tuned to; defaults to the
    /// centre mode.
    pub target_mode: Option<usize>,
    /// Idle time recorded after the q2 window (ns).
    pub tail: f64,
    /// Product state the fidelity is measured against, `[q1, f1…fn, q2]` levels;
    /// defaults to q2 excited with everything else empty.
    pub target_levels: Option<Vec<usize>>,
}

impl Default for IswapSettings {
    fn default() -> Self {
        Self {
            t_offset1: 5.0,
            t_offset2: 75.0,
            timing: Timing::Literal,
            target_mode: None,
            tail: 5.0,
            target_levels: None,
        }
    }
}

impl IswapSettings {
    pub fn resolved(&self, params: &SystemParams) -> Self {
        let n = params.n_cavities;
        let mut target = vec![0; n + 2];
        target[n + 1] = 1;
        Self {
            target_mode: Some(self.target_mode.unwrap_or(n.div_ceil(2))),
            target_levels: Some(self.target_levels.clone().unwrap_or(target)),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_offset1", self.t_offset1),
            ("t_offset2", self.t_offset2),
            ("tail", self.tail),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, ">= 0"));
            }
        }
        Ok(())
    }
}

/// `(t₁, t₂)` in ns for the chosen timing rule.
fn windows(params: &SystemParams, mode: usize, timing: Timing) -> Result<(f64, f64)> {
    let (g1, g2) = match timing {
        Timing::Literal => (params.g_q1f, params.g_q2f),
        Timing::Eigenmode => {
            let eig = herm_eig(&filter_block(params))?;
            let n = params.n_cavities;
            let u = |site: usize| eig.vectors[(site, mode - 1)].norm();
            (params.g_q1f * u(0), params.g_q2f * u(n - 1))
        }
    };
    if !(g1 > 0.0 && g2 > 0.0) {
        // decoupled qubits: fall back to the literal windows of the nominal coupling
        let g = SystemParams::default().g_q1f;
        return Ok((0.25 / g, 0.5 / g));
    }
    Ok((0.25 / g1, 0.5 / g2))
}

/// Sequential exchange: q1 resonant with the target mode for `t₁`, then q2 for `t₂`.
pub fn run_iswap(
    params: &SystemParams,
    settings: &IswapSettings,
    with_losses: bool,
    solver: &SolverSettings,
) -> Result<ExperimentResult> {
    params.validate_model()?;
    settings.validate()?;
    solver.validate()?;
    let settings = settings.resolved(params);
    let mode = settings.target_mode.unwrap_or(1);
    let nu_mode = resonance_target(params, mode)?;
    let (t1, t2) = windows(params, mode, settings.timing)?;
    let end1 = settings.t_offset1 + t1;
    let end2 = settings.t_offset2 + t2;
    if settings.t_offset2 < end1 {
        return Err(Error::param("t_offset2", "after the end of the q1 window"));
    }
    let t_end = end2 + settings.tail;
    let schedule = Schedule {
        q1: Trajectory::new(
            params.nu_q1_idle,
            vec![Segment::step(settings.t_offset1, t1, nu_mode)],
        )?,
        q2: Trajectory::new(
            params.nu_q2_idle,
            vec![Segment::step(settings.t_offset2, t2, nu_mode)],
        )?,
    };

    let run_params = if with_losses {
        params.clone()
    } else {
        params.lossless()
    };
    let sys = PreparedSystem::new(&run_params, Some(1))?;
    let n = params.n_cavities;
    let mut initial = vec![0; n + 2];
    initial[0] = 1;
    let psi0 = sys.basis_ket(&initial)?;
    let target_levels = settings.target_levels.clone().unwrap_or_default();
    let target = sys.basis_ket(&target_levels)?;
    let run = sys.run(
        &schedule,
        None,
        &psi0,
        t_end,
        with_losses,
        solver,
        true,
        &[end1, end2],
    )?;

    let ts = &run.series;
    let samples = ts.times.len();
    let mut conc = Vec::with_capacity(samples);
    for i in 0..samples {
        let state = run.state_lab(&sys, i).unwrap_or_default();
        conc.push(concurrence(&sys.qubit_pair(&state)?)?);
    }
    let final_state = run.final_lab(&sys);
    let kind = sys.kind_of(&final_state);
    let rho = match kind {
        crate::operator::StateKind::Ket => crate::operator::ComplexMatrix::column(&final_state),
        crate::operator::StateKind::Density => {
            crate::operator::ComplexMatrix::from_vec(sys.dim(), sys.dim(), final_state.clone())?
        }
    };
    let fidelity = overlap_fidelity(&rho, kind, &target);
    let at = |t: f64| ts.index_near(t).unwrap_or(0);

    let mut result = ExperimentResult::new(
        "iswap",
        json!({ "settings": settings, "with_losses": with_losses, "t1": t1, "t2": t2, "nu_mode": nu_mode }),
    );
    let mut table = Table::new("iswap").with("t_ns", ts.times.clone());
    for (name, values) in &ts.series {
        table.push(name.clone(), values.clone());
    }
    table.push("concurrence", conc.clone());
    result.tables.push(table);
    let last = |name: &str| ts.last(name).unwrap_or(f64::NAN);
    result.push_scalar("fidelity", fidelity);
    result.push_scalar("concurrence", conc[at(end2)]);
    result.push_scalar("concurrence_end_t1", conc[at(end1)]);
    result.push_scalar("concurrence_end_t2", conc[at(end2)]);
    result.push_scalar("concurrence_max", conc.iter().copied().fold(0.0, f64::max));
    result.push_scalar("n_q1_final", last("n_q1"));
    result.push_scalar("n_q2_final", last("n_q2"));
    result.push_scalar("t1_ns", t1);
    result.push_scalar("t2_ns", t2);
    result.push_scalar("nu_mode_ghz", nu_mode);
    run.record(&mut result.invariants);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decoupled_qubits_do_not_transfer() {
        let p = SystemParams {
            g_q1f: 0.0,
            g_q2f: 0.0,
            ..SystemParams::default()
        };
        let r = run_iswap(
            &p,
            &IswapSettings::default(),
            false,
            &SolverSettings::default(),
        )
        .unwrap();
        assert!((r.scalar("n_q1_final").unwrap() - 1.0).abs() < 1e-6);
        assert!(r.scalar("fidelity").unwrap() < 1e-12);
    }

    #[test]
    fn eigenmode_timing_uses_mode_overlap() {
        let p = SystemParams::default();
        let (a, b) = windows(&p, 2, Timing::Literal).unwrap();
        let (c, d) = windows(&p, 2, Timing::Eigenmode).unwrap();
        assert!((c / a - 2f64.sqrt()).abs() < 1e-12);
        assert!((d / b - 2f64.sqrt()).abs() < 1e-12);
    }
}
