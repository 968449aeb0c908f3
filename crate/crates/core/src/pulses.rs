//! Ramp–hold–ramp qubit frequency trajectories and the time-dependent Hamiltonian.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_probe_terms, build_static_h, OperatorSet, SystemParams};
use crate::operator::ComplexMatrix;

/// Interpolation used on ramps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    #[default]
    Linear,
    RaisedCosine,
}

impl Shape {
    /// Maps ramp progress `x ∈ [0, 1]` to interpolation weight.
    pub fn weight(self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Shape::Linear => x,
            Shape::RaisedCosine => 0.5 * (1.0 - (PI * x).cos()),
        }
    }
}

/// One excursion from the base frequency: ramp up, hold at `target`, ramp back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub t_start: f64,
    #[serde(default)]
    pub ramp_up: f64,
    pub hold: f64,
    /// Mirrors `ramp_up` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_down: Option<f64>,
    pub target: f64,
    #[serde(default)]
    pub shape: Shape,
}

impl Segment {
    /// Instantaneous step to `target` for `hold` ns.
    pub fn step(t_start: f64, hold: f64, target: f64) -> Self {
        Self::ramped(t_start, 0.0, hold, target, Shape::Linear)
    }

    /// Symmetric ramp–hold–ramp.
    pub fn ramped(t_start: f64, ramp: f64, hold: f64, target: f64, shape: Shape) -> Self {
        Self {
            t_start,
            ramp_up: ramp,
            hold,
            ramp_down: Some(ramp),
            target,
            shape,
        }
    }

    pub fn ramp_down(&self) -> f64 {
        self.ramp_down.unwrap_or(self.ramp_up)
    }

    /// Makes the mirrored ramp-down explicit.
    pub fn resolved(&self) -> Self {
        Self {
            ramp_down: Some(self.ramp_down()),
            ..self.clone()
        }
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.ramp_up + self.hold + self.ramp_down()
    }

    /// Start, end of ramp-up, end of hold, end of ramp-down.
    pub fn boundaries(&self) -> [f64; 4] {
        let a = self.t_start;
        let b = a + self.ramp_up;
        let c = b + self.hold;
        [a, b, c, c + self.ramp_down()]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_start", self.t_start),
            ("ramp_up", self.ramp_up),
            ("hold", self.hold),
            ("ramp_down", self.ramp_down()),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(format!("segment.{name}"), ">= 0"));
            }
        }
        if !(self.target > 0.0) || !self.target.is_finite() {
            return Err(Error::param("segment.target", "> 0"));
        }
        Ok(())
    }
}

/// Piecewise frequency curve of one qubit (GHz vs ns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    pub base: f64,
    #[serde(default)]
    pub segments: Vec<Segment>,
}

impl Trajectory {
    pub fn new(base: f64, segments: Vec<Segment>) -> Result<Self> {
        let t = Self { base, segments };
        t.validate()?;
        Ok(t)
    }

    pub fn constant(base: f64) -> Self {
        Self {
            base,
            segments: vec![],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base > 0.0) || !self.base.is_finite() {
            return Err(Error::param("trajectory.base", "> 0"));
        }
        let mut prev_end = f64::NEG_INFINITY;
        for s in &self.segments {
            s.validate()?;
            if s.t_start < prev_end {
                return Err(Error::param("segments", "time-ordered and non-overlapping"));
            }
            prev_end = s.t_end();
        }
        Ok(())
    }

    /// Frequency at time `t` (GHz). Right-continuous at every boundary.
    pub fn eval(&self, t: f64) -> f64 {
        for s in &self.segments {
            if t < s.t_start {
                break;
            }
            let [_, b, c, d] = s.boundaries();
            if t >= d {
                continue;
            }
            if t < b {
                return self.base
                    + (s.target - self.base) * s.shape.weight((t - s.t_start) / s.ramp_up);
            }
            if t < c {
                return s.target;
            }
            return s.target + (self.base - s.target) * s.shape.weight((t - c) / s.ramp_down());
        }
        self.base
    }

    /// All segment boundaries, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.segments.iter().flat_map(|s| s.boundaries()).collect();
        sort_dedup(&mut v);
        v
    }

    /// Whether the trajectory is constant on the open interval `(a, b)`.
    pub fn is_constant_on(&self, a: f64, b: f64) -> bool {
        for s in &self.segments {
            let [s0, s1, s2, s3] = s.boundaries();
            let ramps = [(s0, s1), (s2, s3)];
            for (lo, hi) in ramps {
                if hi > lo && a < hi && b > lo {
                    return false;
                }
            }
            for edge in [s0, s1, s2, s3] {
                if a < edge && edge < b {
                    return false;
                }
            }
        }
        true
    }
}

pub(crate) fn sort_dedup(v: &mut Vec<f64>) {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
}

/// Scalar time dependence multiplying one operator of a [`TdHamiltonian`].
pub trait TimeCoefficient: Send + Sync + fmt::Debug {
    fn value(&self, t: f64) -> C64;

    /// Times where the coefficient (or its derivative) is discontinuous.
    fn breakpoints(&self) -> Vec<f64> {
        vec![]
    }

    /// Whether the coefficient is constant on the open interval `(a, b)`.
    fn is_constant_on(&self, _a: f64, _b: f64) -> bool {
        false
    }
}

/// `2π·ν(t)` for a qubit drift term `σᶻ/2`.
#[derive(Clone, Debug)]
pub struct Drift {
    pub trajectory: Trajectory,
}

impl TimeCoefficient for Drift {
    fn value(&self, t: f64) -> C64 {
        C64::new(TAU * self.trajectory.eval(t), 0.0)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.trajectory.breakpoints()
    }

    fn is_constant_on(&self, a: f64, b: f64) -> bool {
        self.trajectory.is_constant_on(a, b)
    }
}

/// `e^{iωt}`.
#[derive(Clone, Debug)]
pub struct Phasor {
    pub omega: f64,
}

impl TimeCoefficient for Phasor {
    fn value(&self, t: f64) -> C64 {
        C64::from_polar(1.0, self.omega * t)
    }

    fn is_constant_on(&self, _a: f64, _b: f64) -> bool {
        self.omega == 0.0
    }
}

/// One `coeff(t)·op` contribution.
#[derive(Clone, Debug)]
pub struct TdTerm {
    op: ComplexMatrix,
    diag: Option<Vec<C64>>,
    coeff: Arc<dyn TimeCoefficient>,
}

impl TdTerm {
    pub fn new(op: ComplexMatrix, coeff: Arc<dyn TimeCoefficient>) -> Self {
        let diag = op.is_diagonal().then(|| op.diagonal());
        Self { op, diag, coeff }
    }

    pub fn op(&self) -> &ComplexMatrix {
        &self.op
    }

    pub fn coeff(&self) -> &dyn TimeCoefficient {
        self.coeff.as_ref()
    }
}

/// `H(t) = static + Σ_k c_k(t)·op_k` (angular units).
#[derive(Clone, Debug)]
pub struct TdHamiltonian {
    static_part: ComplexMatrix,
    terms: Vec<TdTerm>,
}

impl TdHamiltonian {
    pub fn new(static_part: ComplexMatrix, terms: Vec<TdTerm>) -> Result<Self> {
        if !static_part.is_square() {
            return Err(Error::NotSquare {
                rows: static_part.rows(),
                cols: static_part.cols(),
            });
        }
        let n = static_part.rows();
        for t in &terms {
            if t.op.rows() != n || t.op.cols() != n {
                return Err(Error::DimensionMismatch {
                    context: "Hamiltonian term",
                    expected: n,
                    found: t.op.rows(),
                });
            }
        }
        Ok(Self { static_part, terms })
    }

    pub fn constant(h: ComplexMatrix) -> Result<Self> {
        Self::new(h, vec![])
    }

    pub fn dim(&self) -> usize {
        self.static_part.rows()
    }

    pub fn static_part(&self) -> &ComplexMatrix {
        &self.static_part
    }

    pub fn terms(&self) -> &[TdTerm] {
        &self.terms
    }

    /// Full matrix at time `t`.
    pub fn eval(&self, t: f64) -> ComplexMatrix {
        let mut h = self.static_part.clone();
        for term in &self.terms {
            let c = term.coeff.value(t);
            match &term.diag {
                Some(d) => {
                    for (i, x) in d.iter().enumerate() {
                        h[(i, i)] += c * x;
                    }
                }
                None => h.add_scaled(&term.op, c),
            }
        }
        h
    }

    /// `out = H(t)·psi`.
    pub fn apply(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        self.static_part.mul_vec_into(psi, out);
        for term in &self.terms {
            let c = term.coeff.value(t);
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            match &term.diag {
                Some(d) => {
                    for ((o, x), p) in out.iter_mut().zip(d).zip(psi) {
                        *o += c * x * p;
                    }
                }
                None => {
                    let n = self.dim();
                    for (r, o) in out.iter_mut().enumerate() {
                        let row = &term.op.data()[r * n..(r + 1) * n];
                        let s: C64 = row.iter().zip(psi).map(|(a, b)| a * b).sum();
                        *o += c * s;
                    }
                }
            }
        }
    }

    /// Restriction to the principal submatrix on `indices` (an invariant subspace).
    pub fn restrict(&self, indices: &[usize]) -> TdHamiltonian {
        TdHamiltonian {
            static_part: self.static_part.submatrix(indices),
            terms: self
                .terms
                .iter()
                .map(|t| TdTerm::new(t.op.submatrix(indices), Arc::clone(&t.coeff)))
                .collect(),
        }
    }

    /// Sorted union of all coefficient breakpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .terms
            .iter()
            .flat_map(|t| t.coeff.breakpoints())
            .collect();
        sort_dedup(&mut v);
        v
    }

    pub fn is_constant_on(&self, a: f64, b: f64) -> bool {
        self.terms.iter().all(|t| t.coeff.is_constant_on(a, b))
    }
}

/// Frequency schedules of both qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub q1: Trajectory,
    pub q2: Trajectory,
}

impl Schedule {
    /// Both qubits parked at their idle frequencies.
    pub fn idle(params: &SystemParams) -> Self {
        Self {
            q1: Trajectory::constant(params.nu_q1_idle),
            q2: Trajectory::constant(params.nu_q2_idle),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.q1.validate()?;
        self.q2.validate()
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        let mut v = self.q1.breakpoints();
        v.extend(self.q2.breakpoints());
        sort_dedup(&mut v);
        v
    }
}

/// Coherent drive on q1 at `nu_probe` (GHz) with Rabi rate `omega_p` (rad/ns).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub omega_p: f64,
    pub nu_probe: f64,
}

/// Qubit drift terms from `schedule` plus the static Hamiltonian and optional probe.
pub fn assemble_td(
    params: &SystemParams,
    ops: &OperatorSet,
    schedule: &Schedule,
    probe: Option<ProbeSpec>,
) -> Result<TdHamiltonian> {
    schedule.validate()?;
    let h0 = build_static_h(params, ops)?;
    let mut terms = Vec::with_capacity(4);
    for (q, traj) in [(0, &schedule.q1), (1, &schedule.q2)] {
        terms.push(TdTerm::new(
            ops.sigma_z[q].scale_real(0.5),
            Arc::new(Drift {
                trajectory: traj.clone(),
            }),
        ));
    }
    if let Some(p) = probe {
        terms.extend(build_probe_terms(p.omega_p, p.nu_probe, ops)?);
    }
    TdHamiltonian::new(h0, terms)
}

/// k-th (1-based, ascending) bare filter-chain eigenfrequency in GHz.
pub fn resonance_target(params: &SystemParams, k: usize) -> Result<f64> {
    let n = params.n_cavities;
    if k == 0 || k > n {
        return Err(Error::IndexOutOfRange { index: k, max: n });
    }
    Ok(params.filter_modes()[k - 1])
}
