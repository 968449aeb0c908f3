//! Schrödinger and Lindblad time evolution with observable recording.

mod rk45;
mod subspace;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    embed, expect_density, expect_ket, expm, herm_eigvals, kron, sigma_x, sigma_y,
    unitary_propagator, ComplexMatrix, QState, StateKind,
};
use crate::pulses::TdHamiltonian;

pub use rk45::{integrate, Rk45Settings, StepStats};
pub use subspace::ExcitationSubspace;

/// Largest sampled-state dimension for which positivity is checked at every sample;
/// bigger states are checked at the final time only.
const POSITIVITY_CHECK_MAX_DIM: usize = 64;
/// Sampled density matrices must be Hermitian to this absolute tolerance.
pub const HERMITICITY_ASSERT: f64 = 1e-8;
/// Minimum eigenvalue below which a positivity warning is recorded.
pub const POSITIVITY_WARN: f64 = -1e-6;
/// Largest Hilbert dimension accepted by [`liouvillian_oracle`].
pub const ORACLE_MAX_DIM: usize = 16;

/// User-tunable integrator settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub sample_dt: f64,
    pub max_steps: usize,
    /// Propagate intervals with constant coefficients by exact diagonalization
    /// instead of Runge–Kutta stepping (closed systems only).
    pub piecewise_exact: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            max_step: 0.5,
            sample_dt: 0.2,
            max_steps: 50_000_000,
            piecewise_exact: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("max_step", self.max_step),
            ("sample_dt", self.sample_dt),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(format!("solver.{name}"), "> 0"));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::param("solver.max_steps", "> 0"));
        }
        Ok(())
    }
}

/// Time window, sampling grid and tolerances of one evolution.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    pub t0: f64,
    pub t1: f64,
    pub sample_dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    pub piecewise_exact: bool,
    /// Keep the state at every sample time.
    pub store_states: bool,
    /// Extra sample times merged into the regular grid.
    pub extra_samples: Vec<f64>,
}

impl EvolveOptions {
    pub fn new(t0: f64, t1: f64, settings: &SolverSettings) -> Self {
        Self {
            t0,
            t1,
            sample_dt: settings.sample_dt,
            rtol: settings.rtol,
            atol: settings.atol,
            max_step: settings.max_step,
            max_steps: settings.max_steps,
            piecewise_exact: settings.piecewise_exact,
            store_states: false,
            extra_samples: vec![],
        }
    }

    pub fn with_states(mut self) -> Self {
        self.store_states = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > self.t0) || !self.t0.is_finite() || !self.t1.is_finite() {
            return Err(Error::param("t1", "> t0"));
        }
        for (name, v) in [
            ("sample_dt", self.sample_dt),
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("max_step", self.max_step),
        ] {
            if !(v > 0.0) {
                return Err(Error::param(name, "> 0"));
            }
        }
        Ok(())
    }

    /// Regular grid `t0, t0+dt, …` closed with `t1`, merged with `extra_samples`.
    pub fn sample_times(&self) -> Vec<f64> {
        let span = self.t1 - self.t0;
        let n = (span / self.sample_dt + 1e-9).floor() as usize;
        let mut v: Vec<f64> = (0..=n)
            .map(|k| self.t0 + k as f64 * self.sample_dt)
            .collect();
        if let Some(&last) = v.last() {
            if self.t1 - last > 1e-9 * self.sample_dt {
                v.push(self.t1);
            } else if let Some(l) = v.last_mut() {
                *l = self.t1;
            }
        }
        v.extend(
            self.extra_samples
                .iter()
                .copied()
                .filter(|&t| t >= self.t0 && t <= self.t1),
        );
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        v
    }

    fn rk_settings(&self) -> Rk45Settings {
        Rk45Settings {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step,
            max_steps: self.max_steps,
        }
    }
}

/// Named observable recorded along an evolution.
#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub op: ComplexMatrix,
}

impl Observable {
    pub fn new(name: impl Into<String>, op: ComplexMatrix) -> Self {
        Self {
            name: name.into(),
            op,
        }
    }
}

/// Numerical health of an evolution.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Diagnostics {
    /// `max |‖ψ‖ − 1|` (kets) or `max |tr ρ − 1|` (densities) over the samples.
    pub max_norm_drift: f64,
    /// Largest `max|ρ − ρ†|` seen before symmetrization (densities only).
    pub max_hermiticity_dev: f64,
    /// Smallest eigenvalue of any checked density sample.
    pub min_eigenvalue: f64,
    pub positivity_warnings: usize,
    pub steps: StepStats,
}

/// Sampled observables of one evolution.
#[derive(Clone, Debug, Default)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub series: Vec<(String, Vec<f64>)>,
    /// State at every sample (kets, or row-major densities), if requested.
    pub states: Option<Vec<Vec<C64>>>,
    pub final_state: Vec<C64>,
    pub diagnostics: Diagnostics,
}

impl TimeSeries {
    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.series
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn last(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|v| v.last().copied())
    }

    /// Sample index nearest to `t`.
    pub fn index_near(&self, t: f64) -> Option<usize> {
        self.times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
    }
}

struct Recorder<'a> {
    observables: &'a [Observable],
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    extra: Vec<Vec<f64>>,
    states: Option<Vec<Vec<C64>>>,
    diag: Diagnostics,
}

impl<'a> Recorder<'a> {
    fn new(observables: &'a [Observable], n_samples: usize, n_extra: usize, store: bool) -> Self {
        Self {
            observables,
            times: vec![0.0; n_samples],
            values: vec![vec![0.0; n_samples]; observables.len()],
            extra: vec![vec![0.0; n_samples]; n_extra],
            states: store.then(|| vec![vec![]; n_samples]),
            diag: Diagnostics {
                min_eigenvalue: f64::INFINITY,
                ..Diagnostics::default()
            },
        }
    }

    fn finish(self, names: &[&str], final_state: Vec<C64>, steps: StepStats) -> TimeSeries {
        let mut series: Vec<(String, Vec<f64>)> = self
            .observables
            .iter()
            .map(|o| o.name.clone())
            .zip(self.values)
            .collect();
        series.extend(names.iter().map(|s| s.to_string()).zip(self.extra));
        let mut diagnostics = self.diag;
        diagnostics.steps = steps;
        if diagnostics.min_eigenvalue == f64::INFINITY {
            diagnostics.min_eigenvalue = 0.0;
        }
        TimeSeries {
            times: self.times,
            series,
            states: self.states,
            final_state,
            diagnostics,
        }
    }
}

fn check_observables(observables: &[Observable], dim: usize) -> Result<()> {
    for o in observables {
        if o.op.rows() != dim || o.op.cols() != dim {
            return Err(Error::DimensionMismatch {
                context: "observable",
                expected: dim,
                found: o.op.rows(),
            });
        }
    }
    Ok(())
}

/// Closed-system evolution of a raw ket: `dψ/dt = −iH(t)ψ`.
///
/// Records each observable plus `norm` (`‖ψ‖`). No renormalization is applied.
pub fn evolve_ket(
    h: &TdHamiltonian,
    psi0: &[C64],
    opts: &EvolveOptions,
    observables: &[Observable],
) -> Result<TimeSeries> {
    opts.validate()?;
    let dim = h.dim();
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch {
            context: "initial ket",
            expected: dim,
            found: psi0.len(),
        });
    }
    check_observables(observables, dim)?;
    let samples = opts.sample_times();
    let mut rec = Recorder::new(observables, samples.len(), 1, opts.store_states);
    let mut on_sample = |i: usize, t: f64, psi: &[C64]| -> Result<()> {
        rec.times[i] = t;
        for (k, o) in observables.iter().enumerate() {
            rec.values[k][i] = expect_ket(&o.op, psi).re;
        }
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFinite("state norm"));
        }
        rec.extra[0][i] = norm;
        rec.diag.max_norm_drift = rec.diag.max_norm_drift.max((norm - 1.0).abs());
        if let Some(s) = rec.states.as_mut() {
            s[i] = psi.to_vec();
        }
        Ok(())
    };
    let (final_state, steps) = if opts.piecewise_exact {
        propagate_piecewise(h, psi0, opts, &samples, &mut on_sample)?
    } else {
        let mut breakpoints = h.breakpoints();
        breakpoints.retain(|&b| b > opts.t0 && b < opts.t1);
        integrate(
            |t, y, dy| {
                h.apply(t, y, dy);
                for z in dy.iter_mut() {
                    *z = C64::new(z.im, -z.re);
                }
            },
            psi0.to_vec(),
            opts.t0,
            opts.t1,
            &breakpoints,
            &samples,
            &opts.rk_settings(),
            &mut on_sample,
            |_| {},
        )?
    };
    Ok(rec.finish(&["norm"], final_state, steps))
}

/// Callback receiving `(sample index, time, state)`.
type SampleSink<'a> = &'a mut dyn FnMut(usize, f64, &[C64]) -> Result<()>;

/// Piecewise propagation: exact `V e^{−iλτ} V†` on intervals where every coefficient
/// is constant, Runge–Kutta elsewhere.
fn propagate_piecewise(
    h: &TdHamiltonian,
    psi0: &[C64],
    opts: &EvolveOptions,
    samples: &[f64],
    on_sample: SampleSink<'_>,
) -> Result<(Vec<C64>, StepStats)> {
    let mut edges = vec![opts.t0];
    edges.extend(
        h.breakpoints()
            .into_iter()
            .filter(|&b| b > opts.t0 && b < opts.t1),
    );
    edges.push(opts.t1);
    let mut psi = psi0.to_vec();
    let mut stats = StepStats::default();
    let mut next = 0;
    while next < samples.len() && samples[next] <= opts.t0 + 1e-12 {
        on_sample(next, samples[next], &psi)?;
        next += 1;
    }
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-9 {
            continue;
        }
        let inner: Vec<f64> = samples[next..]
            .iter()
            .copied()
            .take_while(|&s| s <= b + 1e-12)
            .collect();
        if h.is_constant_on(a, b) {
            let hm = h.eval(0.5 * (a + b));
            let eig = crate::operator::herm_eig(&hm)?;
            let v = &eig.vectors;
            let n = psi.len();
            let coeffs: Vec<C64> = (0..n)
                .map(|k| (0..n).map(|r| v[(r, k)].conj() * psi[r]).sum())
                .collect();
            let at = |tau: f64| -> Vec<C64> {
                let c: Vec<C64> = coeffs
                    .iter()
                    .zip(&eig.values)
                    .map(|(c, l)| c * C64::from_polar(1.0, -l * tau))
                    .collect();
                (0..n)
                    .map(|r| (0..n).map(|k| v[(r, k)] * c[k]).sum())
                    .collect()
            };
            for s in inner {
                on_sample(next, s, &at(s - a))?;
                next += 1;
            }
            psi = at(b - a);
            stats.accepted += 1;
        } else {
            let first = next;
            let (y, st) = integrate(
                |t, y, dy| {
                    h.apply(t, y, dy);
                    for z in dy.iter_mut() {
                        *z = C64::new(z.im, -z.re);
                    }
                },
                psi,
                a,
                b,
                &[],
                &inner,
                &opts.rk_settings(),
                |i, t, y| on_sample(first + i, t, y),
                |_| {},
            )?;
            next += inner.len();
            psi = y;
            stats.accepted += st.accepted;
            stats.rejected += st.rejected;
            stats.rhs_evals += st.rhs_evals;
        }
    }
    while next < samples.len() {
        on_sample(next, samples[next], &psi)?;
        next += 1;
    }
    Ok((psi, stats))
}

/// Closed-system evolution of a normalized pure [`QState`].
pub fn evolve_schrodinger(
    h: &TdHamiltonian,
    psi0: &QState,
    opts: &EvolveOptions,
    observables: &[Observable],
) -> Result<TimeSeries> {
    if !psi0.is_ket() {
        return Err(Error::InvalidState(
            "Schrödinger evolution needs a ket".into(),
        ));
    }
    evolve_ket(h, psi0.data().data(), opts, observables)
}

fn matmul_into(a: &[C64], b: &[C64], n: usize, out: &mut [C64]) {
    out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
    for i in 0..n {
        let orow = &mut out[i * n..(i + 1) * n];
        for k in 0..n {
            let x = a[i * n + k];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for (o, y) in orow.iter_mut().zip(&b[k * n..(k + 1) * n]) {
                *o += x * y;
            }
        }
    }
}

fn symmetrize(rho: &mut [C64], n: usize) {
    for r in 0..n {
        rho[r * n + r].im = 0.0;
        for c in r + 1..n {
            let avg = 0.5 * (rho[r * n + c] + rho[c * n + r].conj());
            rho[r * n + c] = avg;
            rho[c * n + r] = avg.conj();
        }
    }
}

fn hermiticity_dev(rho: &[C64], n: usize) -> f64 {
    let mut dev: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            dev = dev.max((rho[r * n + c] - rho[c * n + r].conj()).norm());
        }
    }
    dev
}

/// Open-system evolution of a raw row-major density matrix:
/// `dρ/dt = −i[H(t), ρ] + Σ (cρc† − ½{c†c, ρ})`.
///
/// Records each observable plus `trace` and `purity`.
pub fn evolve_density(
    h: &TdHamiltonian,
    rho0: &ComplexMatrix,
    c_ops: &[ComplexMatrix],
    opts: &EvolveOptions,
    observables: &[Observable],
) -> Result<TimeSeries> {
    opts.validate()?;
    let n = h.dim();
    if rho0.rows() != n || rho0.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "initial density",
            expected: n,
            found: rho0.rows(),
        });
    }
    for c in c_ops {
        if c.rows() != n || c.cols() != n {
            return Err(Error::DimensionMismatch {
                context: "collapse operator",
                expected: n,
                found: c.rows(),
            });
        }
    }
    check_observables(observables, n)?;

    let mut decay = ComplexMatrix::zeros(n, n);
    for c in c_ops {
        decay += &(&c.adjoint() * c);
    }
    let half_decay = decay.scale(C64::new(0.0, -0.5));
    let jumps: Vec<(Vec<C64>, Vec<C64>)> = c_ops
        .iter()
        .map(|c| (c.data().to_vec(), c.adjoint().into_vec()))
        .collect();
    let mut x = vec![C64::new(0.0, 0.0); n * n];
    let mut y = vec![C64::new(0.0, 0.0); n * n];
    let rhs = |t: f64, rho: &[C64], drho: &mut [C64]| {
        let mut heff = h.eval(t);
        heff += &half_decay;
        let hd = heff.data();
        // −i·Heff·ρ
        matmul_into(hd, rho, n, &mut x);
        for (d, v) in drho.iter_mut().zip(&x) {
            *d = C64::new(v.im, -v.re);
        }
        // +i·ρ·Heff†
        let heff_dag = heff.adjoint();
        matmul_into(rho, heff_dag.data(), n, &mut x);
        for (d, v) in drho.iter_mut().zip(&x) {
            *d += C64::new(-v.im, v.re);
        }
        for (c, cd) in &jumps {
            matmul_into(c, rho, n, &mut x);
            matmul_into(&x, cd, n, &mut y);
            for (d, v) in drho.iter_mut().zip(&y) {
                *d += v;
            }
        }
    };

    let samples = opts.sample_times();
    let mut rec = Recorder::new(observables, samples.len(), 2, opts.store_states);
    let mut work = vec![C64::new(0.0, 0.0); n * n];
    let on_sample = |i: usize, t: f64, rho: &[C64]| -> Result<()> {
        let dev = hermiticity_dev(rho, n);
        if !dev.is_finite() {
            return Err(Error::NonFinite("density matrix"));
        }
        rec.diag.max_hermiticity_dev = rec.diag.max_hermiticity_dev.max(dev);
        if dev > HERMITICITY_ASSERT {
            return Err(Error::InvalidState(format!(
                "density lost Hermiticity at t = {t} ns (deviation {dev:e})"
            )));
        }
        work.copy_from_slice(rho);
        symmetrize(&mut work, n);
        let m = ComplexMatrix::from_vec(n, n, work.clone())?;
        rec.times[i] = t;
        for (k, o) in observables.iter().enumerate() {
            rec.values[k][i] = expect_density(&o.op, &m).re;
        }
        let tr = m.trace().re;
        rec.extra[0][i] = tr;
        rec.extra[1][i] = work.iter().map(|z| z.norm_sqr()).sum();
        rec.diag.max_norm_drift = rec.diag.max_norm_drift.max((tr - 1.0).abs());
        let last = i + 1 == samples.len();
        if n <= POSITIVITY_CHECK_MAX_DIM || last {
            let min = herm_eigvals(&m)?.first().copied().unwrap_or(0.0);
            rec.diag.min_eigenvalue = rec.diag.min_eigenvalue.min(min);
            if min < POSITIVITY_WARN {
                rec.diag.positivity_warnings += 1;
            }
        }
        if let Some(s) = rec.states.as_mut() {
            s[i] = work.clone();
        }
        Ok(())
    };
    let mut breakpoints = h.breakpoints();
    breakpoints.retain(|&b| b > opts.t0 && b < opts.t1);
    let (mut final_state, steps) = integrate(
        rhs,
        rho0.data().to_vec(),
        opts.t0,
        opts.t1,
        &breakpoints,
        &samples,
        &opts.rk_settings(),
        on_sample,
        |rho| symmetrize(rho, n),
    )?;
    symmetrize(&mut final_state, n);
    Ok(rec.finish(&["trace", "purity"], final_state, steps))
}

/// Open-system evolution of a validated density [`QState`] (kets are promoted).
pub fn evolve_lindblad(
    h: &TdHamiltonian,
    rho0: &QState,
    c_ops: &[ComplexMatrix],
    opts: &EvolveOptions,
    observables: &[Observable],
) -> Result<TimeSeries> {
    let rho = rho0.to_density();
    evolve_density(h, rho.data(), c_ops, opts, observables)
}

/// Dense Liouvillian propagation `vec ρ(t) = exp(L t)·vec ρ0` for small systems.
///
/// Row-major vectorization: `vec(AρB) = (A ⊗ Bᵀ)·vec ρ`.
pub fn liouvillian_oracle(
    h_static: &ComplexMatrix,
    c_ops: &[ComplexMatrix],
    t: f64,
    rho0: &QState,
) -> Result<QState> {
    let n = h_static.rows();
    if n > ORACLE_MAX_DIM {
        return Err(Error::DimensionOverflow {
            dim: n,
            cap: ORACLE_MAX_DIM,
        });
    }
    let rho = rho0.to_density();
    if rho.dim() != n {
        return Err(Error::DimensionMismatch {
            context: "oracle state",
            expected: n,
            found: rho.dim(),
        });
    }
    if t == 0.0 {
        return Ok(rho);
    }
    let id = ComplexMatrix::identity(n);
    let mi = C64::new(0.0, -1.0);
    let mut l = (&kron(h_static, &id) - &kron(&id, &h_static.transpose())).scale(mi);
    for c in c_ops {
        let cdc = &c.adjoint() * c;
        l += &kron(c, &c.conj());
        l.add_scaled(&kron(&cdc, &id), C64::new(-0.5, 0.0));
        l.add_scaled(&kron(&id, &cdc.transpose()), C64::new(-0.5, 0.0));
    }
    let prop = expm(&l.scale_real(t))?;
    let v = prop.mul_vec(rho.data().data());
    let out = ComplexMatrix::from_vec(n, n, v)?;
    Ok(QState::from_parts(
        StateKind::Density,
        out,
        rho0.layout().clone(),
    ))
}

/// Closed-form `e^{−iHt}ρ e^{iHt}` (or `e^{−iHt}|ψ⟩`) for a static Hamiltonian.
pub fn propagate_static(h: &ComplexMatrix, t: f64, state: &QState) -> Result<QState> {
    state.transformed(&unitary_propagator(h, t)?)
}

/// Rotation axis of an instantaneous single-qubit pulse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// `exp(−i·(angle/2)·σ_axis)`.
pub fn rotation(axis: Axis, angle: f64) -> ComplexMatrix {
    let s = match axis {
        Axis::X => sigma_x(),
        Axis::Y => sigma_y(),
    };
    let mut u = ComplexMatrix::identity(2).scale_real((angle / 2.0).cos());
    u.add_scaled(&s, C64::new(0.0, -(angle / 2.0).sin()));
    u
}

/// `diag(1, e^{−iφ})`: advances the phase of `|e⟩` relative to `|g⟩` by `−φ`.
pub fn phase_gate(phi: f64) -> ComplexMatrix {
    ComplexMatrix::from_diag(&[C64::new(1.0, 0.0), C64::from_polar(1.0, -phi)])
}

/// Applies a single-qubit unitary to qubit 1 (first slot) or 2 (last slot).
pub fn apply_qubit_unitary(state: &QState, u: &ComplexMatrix, qubit: usize) -> Result<QState> {
    let layout = state.layout();
    let slot = match qubit {
        1 => 0,
        2 => layout.len() - 1,
        _ => return Err(Error::param("qubit", "1 or 2")),
    };
    if layout.dims()[slot] != 2 {
        return Err(Error::DimensionMismatch {
            context: "qubit slot",
            expected: 2,
            found: layout.dims()[slot],
        });
    }
    state.transformed(&embed(u, slot, layout)?)
}

/// Instantaneous rotation `exp(−i·(angle/2)·σ_axis)` on the given qubit.
pub fn apply_instant_pulse(state: &QState, axis: Axis, angle: f64, qubit: usize) -> Result<QState> {
    apply_qubit_unitary(state, &rotation(axis, angle), qubit)
}
