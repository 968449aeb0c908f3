//! System Hamiltonian, collapse operators and probe perturbation.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    destroy, embed, embed_product, sigma_minus, sigma_plus, sigma_z, ComplexMatrix, SpaceLayout,
};
use crate::pulses::{Phasor, TdTerm};

/// Largest Hilbert-space dimension built unless a caller raises the cap.
pub const DEFAULT_DIM_CAP: usize = 4096;
/// Desk-scale guard on the number of filter resonators.
pub const MAX_CAVITIES: usize = 8;

/// Physical constants of the two-qubit filter-chain system.
///
/// Frequencies and couplings are ordinary frequencies in GHz; rates are in ns⁻¹.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemParams {
    pub n_cavities: usize,
    pub fock_levels: usize,
    pub nu_f: f64,
    pub g_f: f64,
    pub g_q1f: f64,
    pub g_q2f: f64,
    pub nu_q1_idle: f64,
    pub nu_q2_idle: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_phi: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            n_cavities: 3,
            fock_levels: 2,
            nu_f: 5.0,
            g_f: 0.0118,
            g_q1f: 0.0135,
            g_q2f: 0.0135,
            nu_q1_idle: 4.3,
            nu_q2_idle: 4.1,
            kappa: 0.001,
            gamma: 0.005,
            gamma_phi: 0.005,
        }
    }
}

impl SystemParams {
    /// Full validation applied to user configuration: every frequency and coupling
    /// strictly positive, every rate non-negative.
    pub fn validate(&self) -> Result<()> {
        self.validate_structure()?;
        for (name, v) in self.frequencies().into_iter().chain(self.couplings()) {
            if !(v > 0.0) {
                return Err(Error::param(name, "> 0"));
            }
        }
        Ok(())
    }

    /// Validation used by the builders: identical to [`validate`](Self::validate)
    /// except that couplings may be exactly zero (the decoupled limit).
    pub fn validate_model(&self) -> Result<()> {
        self.validate_structure()?;
        for (name, v) in self.frequencies() {
            if !(v > 0.0) {
                return Err(Error::param(name, "> 0"));
            }
        }
        for (name, v) in self.couplings() {
            if !(v >= 0.0) {
                return Err(Error::param(name, ">= 0"));
            }
        }
        Ok(())
    }

    fn validate_structure(&self) -> Result<()> {
        if !(1..=MAX_CAVITIES).contains(&self.n_cavities) {
            return Err(Error::param("n_cavities", format!("in 1..={MAX_CAVITIES}")));
        }
        if self.fock_levels < 2 {
            return Err(Error::param("fock_levels", ">= 2"));
        }
        for (name, v) in [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_phi", self.gamma_phi),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, ">= 0"));
            }
        }
        for (name, v) in self.frequencies().into_iter().chain(self.couplings()) {
            if !v.is_finite() {
                return Err(Error::param(name, "finite"));
            }
        }
        Ok(())
    }

    fn frequencies(&self) -> [(&'static str, f64); 3] {
        [
            ("nu_f", self.nu_f),
            ("nu_q1_idle", self.nu_q1_idle),
            ("nu_q2_idle", self.nu_q2_idle),
        ]
    }

    fn couplings(&self) -> [(&'static str, f64); 3] {
        [
            ("g_f", self.g_f),
            ("g_q1f", self.g_q1f),
            ("g_q2f", self.g_q2f),
        ]
    }

    /// Same parameters with all loss rates set to zero.
    pub fn lossless(&self) -> Self {
        Self {
            kappa: 0.0,
            gamma: 0.0,
            gamma_phi: 0.0,
            ..self.clone()
        }
    }

    pub fn layout(&self) -> Result<SpaceLayout> {
        SpaceLayout::qubits_and_filter(self.n_cavities, self.fock_levels)
    }

    /// Bare filter-chain eigenfrequencies in ascending order (GHz).
    pub fn filter_modes(&self) -> Vec<f64> {
        let n = self.n_cavities;
        (1..=n)
            .map(|k| {
                self.nu_f
                    - 2.0 * self.g_f * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos()
            })
            .collect()
    }
}

/// Embedded ladder, Pauli and number operators at full dimension.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub layout: SpaceLayout,
    /// Annihilation operator of each filter resonator, `a[0]` = f1.
    pub a: Vec<ComplexMatrix>,
    pub a_dag: Vec<ComplexMatrix>,
    /// Index 0 = q1, 1 = q2.
    pub sigma_z: [ComplexMatrix; 2],
    pub sigma_plus: [ComplexMatrix; 2],
    pub sigma_minus: [ComplexMatrix; 2],
    pub n_q: [ComplexMatrix; 2],
    /// Total excitation number.
    pub number: ComplexMatrix,
}

impl OperatorSet {
    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn n_cavities(&self) -> usize {
        self.a.len()
    }

    /// Layout slot of qubit `q` (0 = q1, 1 = q2).
    pub fn qubit_slot(&self, q: usize) -> usize {
        if q == 0 {
            0
        } else {
            self.layout.len() - 1
        }
    }

    /// Photon-number operator of resonator `i` (0-based).
    pub fn n_mode(&self, i: usize) -> ComplexMatrix {
        &self.a_dag[i] * &self.a[i]
    }
}

pub fn build_operators(params: &SystemParams) -> Result<OperatorSet> {
    build_operators_with_cap(params, DEFAULT_DIM_CAP)
}

pub fn build_operators_with_cap(params: &SystemParams, cap: usize) -> Result<OperatorSet> {
    params.validate_model()?;
    let layout = params.layout()?;
    let dim = layout.checked_total_dim().unwrap_or(usize::MAX);
    if dim > cap {
        return Err(Error::DimensionOverflow { dim, cap });
    }
    let d = params.fock_levels;
    let n = params.n_cavities;
    let q2_slot = n + 1;
    let mut a = Vec::with_capacity(n);
    let mut a_dag = Vec::with_capacity(n);
    for i in 0..n {
        let op = embed(&destroy(d), i + 1, &layout)?;
        a_dag.push(op.adjoint());
        a.push(op);
    }
    let qubit = |op: &ComplexMatrix| -> Result<[ComplexMatrix; 2]> {
        Ok([embed(op, 0, &layout)?, embed(op, q2_slot, &layout)?])
    };
    let sz = qubit(&sigma_z())?;
    let sp = qubit(&sigma_plus())?;
    let sm = qubit(&sigma_minus())?;
    let nq_local = &sigma_plus() * &sigma_minus();
    let n_q = qubit(&nq_local)?;
    let mut diag = vec![0.0; dim];
    for (i, slot) in diag.iter_mut().enumerate() {
        *slot = layout.levels_of(i).iter().sum::<usize>() as f64;
    }
    let number = ComplexMatrix::from_real_diag(&diag);
    Ok(OperatorSet {
        layout,
        a,
        a_dag,
        sigma_z: sz,
        sigma_plus: sp,
        sigma_minus: sm,
        n_q,
        number,
    })
}

/// Static part of the Hamiltonian in angular units (rad/ns): filter chain plus
/// qubit–filter exchange. Qubit drift terms are supplied separately.
pub fn build_static_h(params: &SystemParams, ops: &OperatorSet) -> Result<ComplexMatrix> {
    params.validate_model()?;
    let layout = &ops.layout;
    if layout.len() != params.n_cavities + 2 || layout.dims()[1] != params.fock_levels {
        return Err(Error::DimensionMismatch {
            context: "operator set vs params",
            expected: params.n_cavities + 2,
            found: layout.len(),
        });
    }
    let n = params.n_cavities;
    let d = params.fock_levels;
    let a = destroy(d);
    let ad = a.adjoint();
    let sm = sigma_minus();
    let sp = sigma_plus();
    let dim = ops.dim();
    let mut h = ComplexMatrix::zeros(dim, dim);
    let w = |x: f64| C64::new(TAU * x, 0.0);

    for i in 0..n {
        h.add_scaled(&ops.n_mode(i), w(params.nu_f));
    }
    if params.g_f != 0.0 {
        for i in 1..n {
            let hop = embed_product(&[(i + 1, &ad), (i, &a)], layout)?;
            h.add_scaled(&hop, w(params.g_f));
            h.add_scaled(&hop.adjoint(), w(params.g_f));
        }
    }
    let q2 = n + 1;
    for (g, q_slot, f_slot) in [(params.g_q1f, 0, 1), (params.g_q2f, q2, n)] {
        if g == 0.0 {
            continue;
        }
        let x = embed_product(&[(q_slot, &sm), (f_slot, &ad)], layout)?;
        h.add_scaled(&x, w(g));
        let x_dag = embed_product(&[(q_slot, &sp), (f_slot, &a)], layout)?;
        h.add_scaled(&x_dag, w(g));
    }
    Ok(h)
}

/// Lindblad collapse operators; channels with zero rate are omitted.
pub fn build_collapse_ops(params: &SystemParams, ops: &OperatorSet) -> Vec<ComplexMatrix> {
    let mut out = Vec::new();
    if params.kappa > 0.0 {
        for a in &ops.a {
            out.push(a.scale_real(params.kappa.sqrt()));
        }
    }
    if params.gamma > 0.0 {
        for sm in &ops.sigma_minus {
            out.push(sm.scale_real(params.gamma.sqrt()));
        }
    }
    if params.gamma_phi > 0.0 {
        for sz in &ops.sigma_z {
            out.push(sz.scale_real((params.gamma_phi / 2.0).sqrt()));
        }
    }
    out
}

/// Probe drive on q1, `−Ω_p[σ⁺e^{−i2πνt} + σ⁻e^{+i2πνt}]`, as two coefficient terms.
pub fn build_probe_terms(omega_p: f64, nu_probe: f64, ops: &OperatorSet) -> Result<Vec<TdTerm>> {
    if !(omega_p >= 0.0) || !omega_p.is_finite() {
        return Err(Error::param("omega_p", ">= 0"));
    }
    if !nu_probe.is_finite() {
        return Err(Error::param("nu_probe", "finite"));
    }
    let w = TAU * nu_probe;
    Ok(vec![
        TdTerm::new(
            ops.sigma_plus[0].scale_real(-omega_p),
            Arc::new(Phasor { omega: -w }),
        ),
        TdTerm::new(
            ops.sigma_minus[0].scale_real(-omega_p),
            Arc::new(Phasor { omega: w }),
        ),
    ])
}

/// One-excitation block of the lossless Hamiltonian in GHz, site order
/// `[q1, f1, …, fn, q2]`, with the qubits at the given frequencies.
pub fn single_excitation_block(params: &SystemParams, nu_q1: f64, nu_q2: f64) -> ComplexMatrix {
    let n = params.n_cavities;
    let mut m = ComplexMatrix::zeros(n + 2, n + 2);
    m[(0, 0)] = C64::new(nu_q1, 0.0);
    m[(n + 1, n + 1)] = C64::new(nu_q2, 0.0);
    for i in 1..=n {
        m[(i, i)] = C64::new(params.nu_f, 0.0);
    }
    for i in 1..n {
        m[(i, i + 1)] = C64::new(params.g_f, 0.0);
        m[(i + 1, i)] = C64::new(params.g_f, 0.0);
    }
    m[(0, 1)] = C64::new(params.g_q1f, 0.0);
    m[(1, 0)] = C64::new(params.g_q1f, 0.0);
    m[(n, n + 1)] = C64::new(params.g_q2f, 0.0);
    m[(n + 1, n)] = C64::new(params.g_q2f, 0.0);
    m
}

/// Bare filter-chain single-photon block (GHz), `n × n` tridiagonal.
pub fn filter_block(params: &SystemParams) -> ComplexMatrix {
    let n = params.n_cavities;
    let full = single_excitation_block(params, 0.0, 0.0);
    let idx: Vec<usize> = (1..=n).collect();
    full.submatrix(&idx)
}
