//! Post-processing: fringe spectra, peak extraction, entanglement and overlap
//! measures, and the analytic Landau–Zener survival probability.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{herm_eig, kron, sigma_y, ComplexMatrix, QState, StateKind};

/// Minimum series length accepted by [`fft_spectrum`].
pub const MIN_FFT_LEN: usize = 8;
/// Zero-padding factor applied before the transform.
pub const ZERO_PAD: usize = 4;
/// Hermiticity tolerance of two-qubit states fed to [`concurrence`].
const TWO_QUBIT_HERM_TOL: f64 = 1e-8;
/// Trace tolerance of the same; loose enough for integrated (not renormalized) states.
const TWO_QUBIT_TRACE_TOL: f64 = 1e-6;

/// One-sided magnitude spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    /// Frequencies in GHz (cycles per ns), ascending from 0.
    pub freqs: Vec<f64>,
    pub magnitudes: Vec<f64>,
}

impl Spectrum {
    /// Frequency spacing of the (padded) grid.
    pub fn bin_width(&self) -> f64 {
        self.freqs.get(1).copied().unwrap_or(0.0)
    }
}

/// Mean-subtracted, zero-padded, rectangular-window magnitude spectrum of a uniformly
/// sampled real series.
///
/// Magnitudes are normalized so that their squares sum to the series variance.
pub fn fft_spectrum(values: &[f64], dt: f64) -> Result<Spectrum> {
    let n = values.len();
    if n < MIN_FFT_LEN {
        return Err(Error::SeriesTooShort {
            len: n,
            min: MIN_FFT_LEN,
        });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param("dt", "> 0"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fft input"));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let m = n * ZERO_PAD;
    let mut buf: Vec<C64> = values
        .iter()
        .map(|v| C64::new(v - mean, 0.0))
        .chain(std::iter::repeat(C64::new(0.0, 0.0)))
        .take(m)
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let half = m / 2;
    let norm = (m * n) as f64;
    let (freqs, magnitudes) = (0..=half)
        .map(|k| {
            let edge = k == 0 || (m.is_multiple_of(2) && k == half);
            let w = if edge { 1.0 } else { 2.0 };
            (
                k as f64 / (m as f64 * dt),
                (w / norm).sqrt() * buf[k].norm(),
            )
        })
        .unzip();
    Ok(Spectrum { freqs, magnitudes })
}

/// Frequency of the largest magnitude at `freqs ≥ fmin`, refined by a parabola through
/// the maximum and its two neighbours. Equal maxima resolve to the lower frequency.
pub fn peak_frequency(spec: &Spectrum, fmin: f64) -> Result<f64> {
    let start = spec
        .freqs
        .iter()
        .position(|&f| f >= fmin)
        .ok_or(Error::EmptyBand { fmin })?;
    let mags = &spec.magnitudes;
    let mut best = start;
    for i in start + 1..mags.len() {
        if mags[i] > mags[best] {
            best = i;
        }
    }
    if best == 0 || best + 1 >= mags.len() {
        return Ok(spec.freqs[best]);
    }
    let (a, b, c) = (mags[best - 1], mags[best], mags[best + 1]);
    let denom = a - 2.0 * b + c;
    let p = if denom.abs() > 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Ok(spec.freqs[best] + p * spec.bin_width())
}

fn check_two_qubit(rho: &ComplexMatrix) -> Result<()> {
    if rho.rows() != 4 || rho.cols() != 4 {
        return Err(Error::DimensionMismatch {
            context: "two-qubit state",
            expected: 4,
            found: rho.rows(),
        });
    }
    let dev = rho.hermiticity_deviation();
    if dev > TWO_QUBIT_HERM_TOL {
        return Err(Error::InvalidState(format!(
            "two-qubit state not Hermitian (deviation {dev:e})"
        )));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > TWO_QUBIT_TRACE_TOL || tr.im.abs() > TWO_QUBIT_HERM_TOL {
        return Err(Error::InvalidState(format!(
            "two-qubit trace {tr} is not 1"
        )));
    }
    Ok(())
}

/// Wootters concurrence of a two-qubit density matrix (basis `|q1 q2⟩`).
///
/// The decreasingly ordered `λ_i` are obtained as the square roots of the eigenvalues
/// of the Hermitian matrix `√ρ·ρ̃·√ρ`, which shares its spectrum with `ρ·ρ̃`.
pub fn concurrence(rho: &ComplexMatrix) -> Result<f64> {
    check_two_qubit(rho)?;
    let rho = rho.hermitian_part();
    let yy = kron(&sigma_y(), &sigma_y());
    let tilde = &(&yy * &rho.conj()) * &yy;
    let sqrt_rho = herm_eig(&rho)?.reconstruct_with(|l| C64::new(l.max(0.0).sqrt(), 0.0));
    let r = (&(&sqrt_rho * &tilde) * &sqrt_rho).hermitian_part();
    let mut lambdas: Vec<f64> = herm_eig(&r)?
        .values
        .iter()
        .map(|&l| l.max(0.0).sqrt())
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

/// Overlap fidelity `⟨t|ρ|t⟩` with a pure target.
pub fn state_fidelity(rho: &QState, target: &QState) -> Result<f64> {
    if target.kind() != StateKind::Ket {
        return Err(Error::InvalidState("fidelity target must be a ket".into()));
    }
    if rho.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            context: "fidelity",
            expected: target.dim(),
            found: rho.dim(),
        });
    }
    Ok(overlap_fidelity(
        rho.data(),
        rho.kind(),
        target.data().data(),
    ))
}

/// [`state_fidelity`] on raw data: `rho` is a column ket or a square density.
pub fn overlap_fidelity(rho: &ComplexMatrix, kind: StateKind, target: &[C64]) -> f64 {
    match kind {
        StateKind::Ket => rho
            .data()
            .iter()
            .zip(target)
            .map(|(p, t)| t.conj() * p)
            .sum::<C64>()
            .norm_sqr(),
        StateKind::Density => {
            let rt = rho.mul_vec(target);
            target
                .iter()
                .zip(&rt)
                .map(|(t, x)| t.conj() * x)
                .sum::<C64>()
                .re
        }
    }
}

/// Couplings and sweep rate of a sequence of independent avoided crossings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LzParams {
    /// Coupling `J_i` of each crossing in GHz.
    pub couplings: Vec<f64>,
    /// Sweep rate `|v|` of the diabatic energy separation in GHz/ns.
    pub velocity: f64,
}

impl LzParams {
    pub fn new(couplings: Vec<f64>, velocity: f64) -> Result<Self> {
        let p = Self {
            couplings,
            velocity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .couplings
            .iter()
            .any(|&j| !(j >= 0.0) || !j.is_finite())
        {
            return Err(Error::param("couplings", ">= 0"));
        }
        if !(self.velocity > 0.0) {
            return Err(Error::param("velocity", "> 0"));
        }
        Ok(())
    }
}

/// Product of Landau–Zener survival probabilities, `exp(−2π·Σ J_i²/|v|)`, evaluated
/// with `J_i → 2πJ_i` (rad/ns) and `v → 2πv` (rad/ns²) to match the angular
/// Hamiltonian convention.
pub fn lz_survival(p: &LzParams) -> f64 {
    let omega_v = TAU * p.velocity;
    let exponent: f64 = p.couplings.iter().map(|&j| (TAU * j).powi(2)).sum::<f64>() / omega_v;
    (-TAU * exponent).exp()
}
