use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::dynamics::{
    evolve_density, evolve_ket, EvolveOptions, ExcitationSubspace, Observable, SolverSettings,
    TimeSeries,
};
use crate::error::{Error, Result};
use crate::model::{build_collapse_ops, build_operators, build_static_h, SystemParams};
use crate::operator::{ComplexMatrix, QState, StateKind};
use crate::pulses::{Drift, Phasor, ProbeSpec, Schedule, TdHamiltonian, TdTerm};

/// Model operators restricted to an excitation-number subspace, ready for repeated
/// evolutions.
///
/// Evolutions run in the frame rotating at `ω_ref·N`, with the qubit drift written as
/// `2πν(t)·n_q` instead of `2πν(t)·σᶻ/2`. Both differ from the laboratory-frame
/// Hamiltonian only by terms that commute with everything the dynamics conserves
/// (a multiple of the identity and of `N`), so populations are unchanged and
/// coherences are recovered exactly by [`PreparedSystem::to_lab`]. The payoff is that
/// the integrator no longer resolves the multi-GHz carrier phase.
#[derive(Clone, Debug)]
pub struct PreparedSystem {
    pub params: SystemParams,
    pub subspace: ExcitationSubspace,
    /// Filter chain plus qubit–filter exchange (rad/ns).
    pub static_h: ComplexMatrix,
    /// Qubit occupations, index 0 = q1.
    pub n_q: [ComplexMatrix; 2],
    pub sigma_plus: [ComplexMatrix; 2],
    pub sigma_minus: [ComplexMatrix; 2],
    /// Photon number of each resonator.
    pub n_modes: Vec<ComplexMatrix>,
    /// Diagonal of the total excitation number.
    pub number: Vec<f64>,
    pub c_ops: Vec<ComplexMatrix>,
}

impl PreparedSystem {
    /// Restricts to states with at most `max_excitations` quanta; `None` keeps the full
    /// truncated space.
    pub fn new(params: &SystemParams, max_excitations: Option<usize>) -> Result<Self> {
        let ops = build_operators(params)?;
        let subspace = ExcitationSubspace::new(&ops.layout, max_excitations.unwrap_or(usize::MAX));
        let r = |m: &ComplexMatrix| subspace.restrict(m);
        let static_h = r(&build_static_h(params, &ops)?);
        let c_ops = build_collapse_ops(params, &ops).iter().map(r).collect();
        let number = subspace
            .restrict(&ops.number)
            .diagonal()
            .iter()
            .map(|z| z.re)
            .collect();
        Ok(Self {
            params: params.clone(),
            static_h,
            n_q: [r(&ops.n_q[0]), r(&ops.n_q[1])],
            sigma_plus: [r(&ops.sigma_plus[0]), r(&ops.sigma_plus[1])],
            sigma_minus: [r(&ops.sigma_minus[0]), r(&ops.sigma_minus[1])],
            n_modes: (0..ops.n_cavities()).map(|i| r(&ops.n_mode(i))).collect(),
            number,
            c_ops,
            subspace,
        })
    }

    pub fn dim(&self) -> usize {
        self.subspace.dim()
    }

    fn is_full_space(&self) -> bool {
        self.dim() == self.subspace.layout().total_dim()
    }

    /// Product state `|levels⟩` in subspace coordinates.
    pub fn basis_ket(&self, levels: &[usize]) -> Result<Vec<C64>> {
        let pos = self.subspace.position(levels)?;
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        v[pos] = C64::new(1.0, 0.0);
        Ok(v)
    }

    /// Restricts a full-space ket.
    pub fn restrict_state(&self, state: &QState) -> Result<Vec<C64>> {
        if !state.is_ket() {
            return Err(Error::InvalidState("expected a ket".into()));
        }
        self.subspace.restrict_ket(state.data().data())
    }

    /// Time-dependent Hamiltonian in the frame rotating at `omega_ref·N`.
    pub fn hamiltonian(
        &self,
        schedule: &Schedule,
        probe: Option<ProbeSpec>,
        omega_ref: f64,
    ) -> Result<TdHamiltonian> {
        schedule.validate()?;
        let mut h0 = self.static_h.clone();
        for (i, n) in self.number.iter().enumerate() {
            h0[(i, i)] -= C64::new(omega_ref * n, 0.0);
        }
        let mut terms = Vec::with_capacity(4);
        for (q, traj) in [(0, &schedule.q1), (1, &schedule.q2)] {
            terms.push(TdTerm::new(
                self.n_q[q].clone(),
                Arc::new(Drift {
                    trajectory: traj.clone(),
                }),
            ));
        }
        if let Some(p) = probe {
            if !self.is_full_space() {
                return Err(Error::param(
                    "max_excitations",
                    "unrestricted when a probe drive is present",
                ));
            }
            if !(p.omega_p >= 0.0) || !p.omega_p.is_finite() {
                return Err(Error::param("omega_p", ">= 0"));
            }
            // σ⁺ picks up e^{+iω_ref t} in the rotating frame
            let detuning = TAU * p.nu_probe - omega_ref;
            terms.push(TdTerm::new(
                self.sigma_plus[0].scale_real(-p.omega_p),
                Arc::new(Phasor { omega: -detuning }),
            ));
            terms.push(TdTerm::new(
                self.sigma_minus[0].scale_real(-p.omega_p),
                Arc::new(Phasor { omega: detuning }),
            ));
        }
        TdHamiltonian::new(h0, terms)
    }

    /// `n_q1`, `n_q2`, `n_f1…n_fn` and `n_total`.
    pub fn observables(&self) -> Vec<Observable> {
        standard_observables(self)
    }

    /// Evolves `psi0` (subspace coordinates) from 0 to `t_end`.
    ///
    /// With `lossy` the density matrix is propagated under the collapse operators of
    /// the parameters; otherwise the ket is propagated.
    #[allow(clippy::too_many_arguments)]
    pub fn run(
        &self,
        schedule: &Schedule,
        probe: Option<ProbeSpec>,
        psi0: &[C64],
        t_end: f64,
        lossy: bool,
        settings: &SolverSettings,
        store_states: bool,
        extra_samples: &[f64],
    ) -> Result<Run> {
        let omega_ref = match probe {
            Some(p) => TAU * p.nu_probe,
            None => frame_reference(&self.params, schedule),
        };
        let h = self.hamiltonian(schedule, probe, omega_ref)?;
        let mut opts = EvolveOptions::new(0.0, t_end, settings);
        opts.store_states = store_states;
        opts.extra_samples = extra_samples.to_vec();
        let obs = self.observables();
        let series = if lossy {
            let n = psi0.len();
            let rho0 = ComplexMatrix::from_fn(n, n, |r, c| psi0[r] * psi0[c].conj());
            evolve_density(&h, &rho0, &self.c_ops, &opts, &obs)?
        } else {
            evolve_ket(&h, psi0, &opts, &obs)?
        };
        let conserving = probe.is_none() && (!lossy || self.c_ops.is_empty());
        let number_drift = conserving.then(|| {
            let n = series.get("n_total").unwrap_or(&[]);
            let n0 = n.first().copied().unwrap_or(0.0);
            n.iter().map(|v| (v - n0).abs()).fold(0.0, f64::max)
        });
        Ok(Run {
            series,
            omega_ref,
            density: lossy,
            number_drift,
        })
    }

    /// Undoes the rotating frame of a subspace ket (`len = dim`) or row-major density.
    pub fn to_lab(&self, state: &[C64], t: f64, omega_ref: f64) -> Vec<C64> {
        let n = self.dim();
        let phase = |k: f64| C64::from_polar(1.0, -omega_ref * k * t);
        if state.len() == n {
            state
                .iter()
                .zip(&self.number)
                .map(|(z, &k)| z * phase(k))
                .collect()
        } else {
            let mut out = state.to_vec();
            for r in 0..n {
                for c in 0..n {
                    out[r * n + c] *= phase(self.number[r] - self.number[c]);
                }
            }
            out
        }
    }

    /// Kind of a stored state.
    pub fn kind_of(&self, state: &[C64]) -> StateKind {
        if state.len() == self.dim() {
            StateKind::Ket
        } else {
            StateKind::Density
        }
    }

    /// Reduced density matrix of the two qubits (basis `|q1 q2⟩`).
    pub fn qubit_pair(&self, state: &[C64]) -> Result<ComplexMatrix> {
        let last = self.subspace.layout().len() - 1;
        self.subspace.reduce(state, &[0, last])
    }
}

/// Outcome of one [`PreparedSystem::run`].
#[derive(Clone, Debug)]
pub struct Run {
    /// Observables and (optionally) states in the rotating frame.
    pub series: TimeSeries,
    pub omega_ref: f64,
    pub density: bool,
    /// `max |⟨N⟩(t) − ⟨N⟩(0)|` when the run conserves excitations.
    pub number_drift: Option<f64>,
}

impl Run {
    /// Final state in the laboratory frame (subspace coordinates).
    pub fn final_lab(&self, sys: &PreparedSystem) -> Vec<C64> {
        let t = self.series.times.last().copied().unwrap_or(0.0);
        sys.to_lab(&self.series.final_state, t, self.omega_ref)
    }

    /// Stored state at sample `i` in the laboratory frame.
    pub fn state_lab(&self, sys: &PreparedSystem, i: usize) -> Option<Vec<C64>> {
        let states = self.series.states.as_ref()?;
        Some(sys.to_lab(&states[i], self.series.times[i], self.omega_ref))
    }

    pub fn record(&self, report: &mut super::InvariantReport) {
        report.record(&self.series.diagnostics, self.density, self.number_drift);
    }
}

/// `n_q1`, `n_q2`, one `n_f{i}` per resonator, and `n_total`.
pub fn standard_observables(sys: &PreparedSystem) -> Vec<Observable> {
    let mut obs = vec![
        Observable::new("n_q1", sys.n_q[0].clone()),
        Observable::new("n_q2", sys.n_q[1].clone()),
    ];
    for (i, n) in sys.n_modes.iter().enumerate() {
        obs.push(Observable::new(format!("n_f{}", i + 1), n.clone()));
    }
    obs.push(Observable::new(
        "n_total",
        ComplexMatrix::from_real_diag(&sys.number),
    ));
    obs
}

/// Rotating-frame reference `2π·ν_mid` (rad/ns), with `ν_mid` the centre of the range
/// spanned by the filter modes and both qubit trajectories.
pub fn frame_reference(params: &SystemParams, schedule: &Schedule) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut take = |v: f64| {
        lo = lo.min(v);
        hi = hi.max(v);
    };
    for m in params.filter_modes() {
        take(m);
    }
    for traj in [&schedule.q1, &schedule.q2] {
        take(traj.base);
        for s in &traj.segments {
            take(s.target);
        }
    }
    TAU * 0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve_schrodinger;
    use crate::model::build_operators;
    use crate::pulses::{assemble_td, Segment, Trajectory};

    fn schedule(p: &SystemParams) -> Schedule {
        Schedule {
            q1: Trajectory::new(
                p.nu_q1_idle,
                vec![Segment::ramped(2.0, 3.0, 10.0, 5.0, Default::default())],
            )
            .unwrap(),
            q2: Trajectory::constant(p.nu_q2_idle),
        }
    }

    fn tight() -> SolverSettings {
        SolverSettings {
            rtol: 1e-11,
            atol: 1e-13,
            ..SolverSettings::default()
        }
    }

    #[test]
    fn rotating_frame_matches_laboratory_frame() {
        let p = SystemParams {
            n_cavities: 2,
            ..SystemParams::default()
        };
        let sched = schedule(&p);
        let ops = build_operators(&p).unwrap();
        let h_lab = assemble_td(&p, &ops, &sched, None).unwrap();
        let layout = p.layout().unwrap();
        let g = QState::basis(&layout, &[0, 0, 0, 0]).unwrap();
        let psi0 =
            crate::dynamics::apply_instant_pulse(&g, crate::dynamics::Axis::Y, 1.0, 1).unwrap();
        let opts = EvolveOptions::new(0.0, 20.0, &tight());
        let lab = evolve_schrodinger(&h_lab, &psi0, &opts, &[]).unwrap();

        let sys = PreparedSystem::new(&p, Some(1)).unwrap();
        let sub0 = sys.restrict_state(&psi0).unwrap();
        let run = sys
            .run(&sched, None, &sub0, 20.0, false, &tight(), false, &[])
            .unwrap();
        let framed = sys.subspace.lift_ket(&run.final_lab(&sys));
        // the σᶻ/2 → n_q gauge only changes the global phase
        let overlap: C64 = lab
            .final_state
            .iter()
            .zip(&framed)
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-8);
        let rho_lab = sys
            .qubit_pair(&sys.subspace.restrict_ket(&lab.final_state).unwrap())
            .unwrap();
        let rho_frame = sys.qubit_pair(&run.final_lab(&sys)).unwrap();
        assert!(rho_lab.max_abs_diff(&rho_frame) < 1e-8);
    }

    #[test]
    fn lossless_density_and_ket_agree() {
        let p = SystemParams::default();
        let sys = PreparedSystem::new(&p, Some(1)).unwrap();
        let psi0 = sys.basis_ket(&[1, 0, 0, 0, 0]).unwrap();
        let sched = schedule(&p);
        let ket = sys
            .run(&sched, None, &psi0, 30.0, false, &tight(), false, &[])
            .unwrap();
        let lossless = PreparedSystem::new(&p.lossless(), Some(1)).unwrap();
        let rho = lossless
            .run(&sched, None, &psi0, 30.0, true, &tight(), false, &[])
            .unwrap();
        for (a, b) in ket
            .series
            .get("n_q1")
            .unwrap()
            .iter()
            .zip(rho.series.get("n_q1").unwrap())
        {
            assert!((a - b).abs() < 1e-7);
        }
        assert!(ket.number_drift.unwrap() < 1e-8);
        assert!(rho.number_drift.unwrap() < 1e-10);
    }
}
