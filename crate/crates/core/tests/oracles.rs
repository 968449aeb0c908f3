use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use mqcavity_core::analysis::{lz_survival, LzParams};
use mqcavity_core::dynamics::{
    evolve_lindblad, evolve_schrodinger, liouvillian_oracle, EvolveOptions, Observable,
    SolverSettings,
};
use mqcavity_core::experiments::{
    filter_spectrum, ramp_sweep, run_iswap, IswapSettings, RampSettings, SweepSpec,
};
use mqcavity_core::model::{build_collapse_ops, build_operators, filter_block, SystemParams};
use mqcavity_core::operator::{herm_eigvals, sigma_x, sigma_z, ComplexMatrix, QState, SpaceLayout};
use mqcavity_core::pulses::{
    assemble_td, Schedule, Segment, Shape, TdHamiltonian, TdTerm, TimeCoefficient, Trajectory,
};

fn small(kappa: f64, gamma: f64, gamma_phi: f64) -> SystemParams {
    SystemParams {
        n_cavities: 1,
        kappa,
        gamma,
        gamma_phi,
        nu_q1_idle: 5.0,
        ..SystemParams::default()
    }
}

fn density_from_row_major(data: &[C64], n: usize) -> ComplexMatrix {
    ComplexMatrix::from_vec(n, n, data.to_vec()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn lindblad_matches_dense_liouvillian(
        kappa in 0.0..0.05f64,
        gamma in 0.0..0.05f64,
        gamma_phi in 0.0..0.05f64,
        t in 5.0..25.0f64,
    ) {
        let p = small(kappa, gamma, gamma_phi);
        let ops = build_operators(&p).unwrap();
        let td = assemble_td(&p, &ops, &Schedule::idle(&p), None).unwrap();
        let h = td.eval(0.0);
        let c_ops = build_collapse_ops(&p, &ops);
        let rho0 = QState::basis(&ops.layout, &[1, 0, 0]).unwrap().to_density();
        let opts = EvolveOptions::new(0.0, t, &SolverSettings::default());
        let run = evolve_lindblad(&td, &rho0, &c_ops, &opts, &[]).unwrap();
        let exact = liouvillian_oracle(&h, &c_ops, t, &rho0).unwrap();
        let got = density_from_row_major(&run.final_state, ops.dim());
        prop_assert!(got.max_abs_diff(exact.data()) <= 1e-7, "{}", got.max_abs_diff(exact.data()));
    }

    #[test]
    fn dephasing_never_raises_purity(gamma_phi in 0.005..0.05f64) {
        let p = small(0.0, 0.0, gamma_phi);
        let ops = build_operators(&p).unwrap();
        let td = assemble_td(&p, &ops, &Schedule::idle(&p), None).unwrap();
        let c_ops = build_collapse_ops(&p, &ops);
        let amp = C64::new(0.5f64.sqrt(), 0.0);
        let mut psi = vec![C64::new(0.0, 0.0); ops.dim()];
        psi[ops.layout.basis_index(&[1, 0, 0]).unwrap()] = amp;
        psi[ops.layout.basis_index(&[0, 1, 0]).unwrap()] = amp;
        let rho0 = QState::ket(psi, ops.layout.clone()).unwrap();
        let mut opts = EvolveOptions::new(0.0, 40.0, &SolverSettings::default());
        opts.sample_dt = 1.0;
        let run = evolve_lindblad(&td, &rho0, &c_ops, &opts.with_states(), &[]).unwrap();
        let n = ops.dim();
        let purity: Vec<f64> = run
            .states
            .unwrap()
            .iter()
            .map(|s| {
                let rho = density_from_row_major(s, n);
                (&rho * &rho).trace().re
            })
            .collect();
        prop_assert!((purity[0] - 1.0).abs() <= 1e-12);
        for w in purity.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
        }
        prop_assert!(*purity.last().unwrap() < 0.99);
    }

    #[test]
    fn doubling_frequencies_halves_time(ramp in 2.0..10.0f64, hold in 5.0..20.0f64) {
        let p = SystemParams { n_cavities: 2, ..SystemParams::default() };
        let p2 = SystemParams {
            nu_f: 2.0 * p.nu_f,
            g_f: 2.0 * p.g_f,
            g_q1f: 2.0 * p.g_q1f,
            g_q2f: 2.0 * p.g_q2f,
            nu_q1_idle: 2.0 * p.nu_q1_idle,
            nu_q2_idle: 2.0 * p.nu_q2_idle,
            ..p.clone()
        };
        let schedule = |p: &SystemParams, scale: f64| Schedule {
            q1: Trajectory::new(
                p.nu_q1_idle,
                vec![Segment::ramped(2.0 * scale, ramp * scale, hold * scale, p.nu_f, Shape::Linear)],
            )
            .unwrap(),
            q2: Trajectory::constant(p.nu_q2_idle),
        };
        let t_end = 4.0 + 2.0 * ramp + hold;
        let run = |p: &SystemParams, scale: f64| {
            let ops = build_operators(p).unwrap();
            let td = assemble_td(p, &ops, &schedule(p, scale), None).unwrap();
            let psi0 = QState::basis(&ops.layout, &[1, 0, 0, 0]).unwrap();
            let mut opts = EvolveOptions::new(0.0, t_end * scale, &SolverSettings::default());
            opts.sample_dt = t_end * scale / 2.0;
            let obs = [
                Observable::new("n_q1", ops.n_q[0].clone()),
                Observable::new("n_f1", ops.n_mode(0)),
            ];
            evolve_schrodinger(&td, &psi0, &opts, &obs).unwrap()
        };
        let a = run(&p, 1.0);
        let b = run(&p2, 0.5);
        prop_assert_eq!(a.times.len(), 3);
        prop_assert_eq!(b.times.len(), 3);
        for name in ["n_q1", "n_f1"] {
            for (x, y) in a.get(name).unwrap().iter().zip(b.get(name).unwrap()) {
                prop_assert!((x - y).abs() <= 1e-8, "{name}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn filter_spectrum_matches_diagonalization_and_closed_form() {
    for n in 1..=8 {
        let p = SystemParams {
            n_cavities: n,
            ..SystemParams::default()
        };
        let result = filter_spectrum(&p, None).unwrap();
        let table = result.table("spectrum").unwrap();
        let direct = herm_eigvals(&filter_block(&p)).unwrap();
        let closed: Vec<f64> = (1..=n)
            .rev()
            .map(|k| {
                p.nu_f + 2.0 * p.g_f * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos()
            })
            .collect();
        let nu = table.column("nu_ghz").unwrap();
        for k in 0..n {
            assert!((nu[k] - direct[k]).abs() <= 1e-10, "n={n} mode {k}");
            assert!((nu[k] - closed[k]).abs() <= 1e-10, "n={n} mode {k}");
        }
        assert!(result.scalar("max_closed_form_deviation_ghz").unwrap() <= 1e-10);
    }
}

#[test]
fn single_cavity_fringes_fade_with_slower_ramps() {
    let p = SystemParams::default();
    let settings = RampSettings {
        cavities: vec![1],
        ..RampSettings::default()
    };
    let sweep = SweepSpec::linear("ramp", 0.0, 55.0, 56);
    let result = ramp_sweep(&p, &settings, &sweep, &SolverSettings::default()).unwrap();
    let short = result.scalar("fringe_amp_short_1").unwrap();
    let long = result.scalar("fringe_amp_long_1").unwrap();
    assert!(short > long, "short {short} vs long {long}");
    assert!(result.invariants.max_number_drift <= 1e-8);
}

#[test]
fn repeated_runs_are_bit_identical() {
    let p = SystemParams::default();
    let run = || {
        run_iswap(
            &p,
            &IswapSettings::default(),
            true,
            &SolverSettings::default(),
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.tables.len(), b.tables.len());
    for (ta, tb) in a.tables.iter().zip(&b.tables) {
        for (ca, cb) in ta.columns.iter().zip(&tb.columns) {
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(
                bits(&ca.values),
                bits(&cb.values),
                "{}.{}",
                ta.name,
                ca.name
            );
        }
    }
    let bits = |r: &mqcavity_core::experiments::ExperimentResult| {
        r.scalars
            .iter()
            .map(|(n, v)| (n.clone(), v.to_bits()))
            .collect::<Vec<_>>()
    };
    assert_eq!(bits(&a), bits(&b));
}

/// `π·v·t`: half the diabatic splitting `2π·v·t` of a linear sweep.
#[derive(Debug)]
struct LinearSweep {
    v: f64,
}

impl TimeCoefficient for LinearSweep {
    fn value(&self, t: f64) -> C64 {
        C64::new(PI * self.v * t, 0.0)
    }
}

#[test]
fn two_level_sweep_reproduces_landau_zener() {
    for (j, v) in [(0.01, 0.005), (0.005, 0.002), (0.02, 0.05)] {
        let h0 = sigma_x().scale_real(2.0 * PI * j);
        let h = TdHamiltonian::new(
            h0,
            vec![TdTerm::new(sigma_z(), Arc::new(LinearSweep { v }))],
        )
        .unwrap();
        let t_half = 5.0 / v;
        let layout = SpaceLayout::from_dims(&[2]).unwrap();
        let psi0 = QState::basis(&layout, &[0]).unwrap();
        let mut opts = EvolveOptions::new(-t_half, t_half, &SolverSettings::default());
        opts.sample_dt = t_half;
        let obs = [Observable::new(
            "p_g",
            ComplexMatrix::from_real_diag(&[1.0, 0.0]),
        )];
        let run = evolve_schrodinger(&h, &psi0, &opts, &obs).unwrap();
        let numeric = run.last("p_g").unwrap();
        let analytic = lz_survival(&LzParams::new(vec![j], v).unwrap());
        assert!(
            (numeric - analytic).abs() <= 5e-3,
            "J={j} v={v}: {numeric} vs {analytic}"
        );
    }
}
