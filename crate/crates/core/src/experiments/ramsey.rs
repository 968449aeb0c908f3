use std::f64::consts::FRAC_PI_2;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{par_map, ExperimentResult, InvariantReport, PreparedSystem, SweepSpec, Table};
use crate::analysis::{fft_spectrum, peak_frequency, Spectrum};
use crate::dynamics::{apply_instant_pulse, phase_gate, rotation, Axis, SolverSettings};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::operator::QState;
use crate::pulses::{Schedule, Segment, Shape, Trajectory};

/// Options of the Ramsey protocol used to read out q1's frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RamseySettings {
    /// Minimum time q1 is held above the filter band (ns); extended when the q2
    /// pulses need more room.
    pub t_hold: f64,
    /// q1 ramp duration to and from its parking point above the band (ns).
    pub dt_ramp: f64,
    /// Parking frequency of q1 (GHz); defaults to `band_max + above_margin·g_F`.
    pub nu_above: Option<f64>,
    pub above_margin: f64,
    /// Delay between q1 reaching its parking point and the start of the q2 pulse,
    /// and between the end of the longest q2 pulse and q1's ramp-down (ns).
    pub q2_lead: f64,
    /// Ramp duration of the q2 pulse (ns).
    pub q2_ramp: f64,
    /// Phase advance `2π·f_R·τ` applied to the second π/2 pulse (GHz), so that the
    /// unperturbed fringe oscillates at `f_R`.
    pub virtual_detuning: f64,
    /// Lower edge of the FFT band searched for the fringe peak (GHz).
    pub fmin: f64,
    pub shape: Shape,
    pub with_losses: bool,
    /// q2 pulse frequency of a single Ramsey run (GHz); defaults to q2's idle
    /// frequency (the reference run).
    pub nu_q2: Option<f64>,
}

impl Default for RamseySettings {
    fn default() -> Self {
        Self {
            t_hold: 90.0,
            dt_ramp: 10.0,
            nu_above: None,
            above_margin: 4.0,
            q2_lead: 5.0,
            q2_ramp: 0.0,
            virtual_detuning: 0.2,
            fmin: 0.02,
            shape: Shape::Linear,
            with_losses: false,
            nu_q2: None,
        }
    }
}

impl RamseySettings {
    pub fn resolved(&self, params: &SystemParams) -> Self {
        let modes = params.filter_modes();
        Self {
            nu_above: Some(
                self.nu_above
                    .unwrap_or(modes[modes.len() - 1] + self.above_margin * params.g_f),
            ),
            nu_q2: Some(self.nu_q2.unwrap_or(params.nu_q2_idle)),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_hold", self.t_hold),
            ("dt_ramp", self.dt_ramp),
            ("q2_lead", self.q2_lead),
            ("q2_ramp", self.q2_ramp),
            ("virtual_detuning", self.virtual_detuning),
            ("fmin", self.fmin),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, ">= 0"));
            }
        }
        Ok(())
    }

    /// Hold time of q1 above the band for a τ grid ending at `tau_max`.
    pub fn hold_for(&self, tau_max: f64) -> f64 {
        self.t_hold
            .max(2.0 * self.q2_lead + 2.0 * self.q2_ramp + tau_max)
    }
}

fn check_tau(sweep: &SweepSpec) -> Result<()> {
    sweep.validate()?;
    if sweep.parameter != "tau" {
        return Err(Error::param("sweep.parameter", "\"tau\""));
    }
    if sweep.min < 0.0 {
        return Err(Error::param("sweep tau.min", ">= 0"));
    }
    Ok(())
}

struct Fringe {
    taus: Vec<f64>,
    n_q1: Vec<f64>,
    spectrum: Spectrum,
    peak: f64,
    invariants: InvariantReport,
}

/// Ramsey fringe of q1 versus the width `τ` of a q2 pulse to `nu_q2`.
fn fringe(
    sys: &PreparedSystem,
    settings: &RamseySettings,
    nu_q2: f64,
    tau: &SweepSpec,
    solver: &SolverSettings,
) -> Result<Fringe> {
    let p = &sys.params;
    let above = settings
        .nu_above
        .ok_or_else(|| Error::param("nu_above", "resolved"))?;
    let taus = tau.values();
    let hold = settings.hold_for(tau.max);
    let t_end = 2.0 * settings.dt_ramp + hold;
    let q2_start = settings.dt_ramp + settings.q2_lead;

    let layout = sys.subspace.layout().clone();
    let ground = QState::basis(&layout, &vec![0; layout.len()])?;
    let prepared = apply_instant_pulse(&ground, Axis::Y, FRAC_PI_2, 1)?;
    let psi0 = sys.restrict_state(&prepared)?;
    let readout = rotation(Axis::Y, FRAC_PI_2);

    let q1 = Trajectory::new(
        p.nu_q1_idle,
        vec![Segment::ramped(
            0.0,
            settings.dt_ramp,
            hold,
            above,
            settings.shape,
        )],
    )?;
    let runs = par_map(&taus, |&t| {
        let q2_segments = if t > 0.0 || settings.q2_ramp > 0.0 {
            vec![Segment::ramped(
                q2_start,
                settings.q2_ramp,
                t,
                nu_q2,
                settings.shape,
            )]
        } else {
            vec![]
        };
        let schedule = Schedule {
            q1: q1.clone(),
            q2: Trajectory::new(p.nu_q2_idle, q2_segments)?,
        };
        let run = sys.run(
            &schedule,
            None,
            &psi0,
            t_end,
            settings.with_losses,
            solver,
            false,
            &[],
        )?;
        let rho_q1 = sys.subspace.reduce(&run.final_lab(sys), &[0])?;
        let u = &readout * &phase_gate(TAU * settings.virtual_detuning * t);
        let out = &(&u * &rho_q1) * &u.adjoint();
        Ok((out[(1, 1)].re, run))
    })?;
    let mut invariants = InvariantReport::default();
    let mut n_q1 = Vec::with_capacity(runs.len());
    for (v, run) in &runs {
        n_q1.push(*v);
        run.record(&mut invariants);
    }
    let spectrum = fft_spectrum(&n_q1, tau.step())?;
    let peak = peak_frequency(&spectrum, settings.fmin)?;
    Ok(Fringe {
        taus,
        n_q1,
        spectrum,
        peak,
        invariants,
    })
}

fn prepare(
    params: &SystemParams,
    settings: &RamseySettings,
) -> Result<(PreparedSystem, RamseySettings)> {
    params.validate_model()?;
    settings.validate()?;
    let settings = settings.resolved(params);
    let run_params = if settings.with_losses {
        params.clone()
    } else {
        params.lossless()
    };
    Ok((PreparedSystem::new(&run_params, Some(1))?, settings))
}

/// Single Ramsey experiment with q2 pulsed to `settings.nu_q2`.
pub fn ramsey_run(
    params: &SystemParams,
    settings: &RamseySettings,
    tau: &SweepSpec,
    solver: &SolverSettings,
) -> Result<ExperimentResult> {
    check_tau(tau)?;
    solver.validate()?;
    let (sys, settings) = prepare(params, settings)?;
    let nu_q2 = settings.nu_q2.unwrap_or(params.nu_q2_idle);
    let f = fringe(&sys, &settings, nu_q2, tau, solver)?;
    let mut result = ExperimentResult::new(
        "ramsey",
        json!({ "settings": settings, "tau": tau, "hold": settings.hold_for(tau.max) }),
    );
    result.push_scalar("peak_ghz", f.peak);
    result.push_scalar("nu_q2_ghz", nu_q2);
    result.invariants = f.invariants;
    result.tables.push(
        Table::new("ramsey")
            .with("tau", f.taus)
            .with("n_q1", f.n_q1),
    );
    result.tables.push(
        Table::new("ramsey_spectrum")
            .with("freq_ghz", f.spectrum.freqs)
            .with("magnitude", f.spectrum.magnitudes),
    );
    Ok(result)
}

/// Fringe-frequency shift of q1 versus the frequency of the q2 pulse, relative to a
/// reference run with q2 left at idle.
pub fn stark_sweep(
    params: &SystemParams,
    settings: &RamseySettings,
    nu_q2: &SweepSpec,
    tau: &SweepSpec,
    solver: &SolverSettings,
) -> Result<ExperimentResult> {
    check_tau(tau)?;
    nu_q2.validate()?;
    solver.validate()?;
    if nu_q2.parameter != "nu_q2" {
        return Err(Error::param("sweep.parameter", "\"nu_q2\" for stark"));
    }
    let (sys, settings) = prepare(params, settings)?;
    let reference = fringe(&sys, &settings, params.nu_q2_idle, tau, solver)?;
    let f0 = reference.peak;
    let mut result = ExperimentResult::new(
        "stark",
        json!({
            "settings": settings,
            "tau": tau,
            "nu_q2": nu_q2,
            "hold": settings.hold_for(tau.max),
        }),
    );
    result.invariants.merge(&reference.invariants);

    let nus = nu_q2.values();
    let (mut raw_nu, mut raw_tau, mut raw_n, mut raw_ref) = (vec![], vec![], vec![], vec![]);
    let mut push_raw = |nu: f64, f: &Fringe, is_ref: bool| {
        raw_nu.extend(std::iter::repeat_n(nu, f.taus.len()));
        raw_tau.extend_from_slice(&f.taus);
        raw_n.extend_from_slice(&f.n_q1);
        raw_ref.extend(std::iter::repeat_n(
            if is_ref { 1.0 } else { 0.0 },
            f.taus.len(),
        ));
    };
    push_raw(params.nu_q2_idle, &reference, true);
    let (mut peaks, mut shifts) = (vec![], vec![]);
    for &nu in &nus {
        let f = fringe(&sys, &settings, nu, tau, solver)?;
        peaks.push(f.peak);
        shifts.push(f.peak - f0);
        result.invariants.merge(&f.invariants);
        push_raw(nu, &f, false);
    }
    result.push_scalar("f0_ghz", f0);
    result.push_scalar("fft_bin_ghz", reference.spectrum.bin_width());
    result.push_scalar("shift_first_ghz", shifts[0]);
    result.push_scalar("shift_last_ghz", shifts[shifts.len() - 1]);
    result.tables.push(
        Table::new("stark_shift")
            .with("nu_q2", nus.clone())
            .with("delta_ghz", nus.iter().map(|v| params.nu_f - v).collect())
            .with("peak_ghz", peaks)
            .with("shift_ghz", shifts),
    );
    result.tables.push(
        Table::new("stark_ramsey_raw")
            .with("nu_q2", raw_nu)
            .with("tau", raw_tau)
            .with("n_q1", raw_n)
            .with("reference", raw_ref),
    );
    Ok(result)
}
